use super::ComplexField;
use crate::error::Result;
use crate::geometry::Mesh;
use num_complex::Complex64;
use rayon::prelude::*;
use std::f64::consts::PI;

/// Elements whose centroid lies within this many element diameters of the
/// evaluation point are integrated exactly.
const NEAR: f64 = 4.0;

/// ∬_T dm₂(w) / (w − z) over the triangle with vertices `p`, for any z.
///
/// Green's formula with F = (w̄ − z̄)/(w − z), ∂F/∂w̄ = 1/(w − z), turns the
/// area integral into (1/2i)∮ F dw, and each edge integral is closed form.
pub fn triangle_cauchy_integral(p: [Complex64; 3], z: Complex64) -> Complex64 {
    let orient = ((p[1] - p[0]).conj() * (p[2] - p[0])).im.signum();
    let mut sum = Complex64::new(0.0, 0.0);
    for e in 0..3 {
        let a = p[e];
        let b = p[(e + 1) % 3];
        let d = b - a;
        let c = (a - z) / d;
        let jump = c.conj() - c;
        let log_part = if jump.norm() <= 1e-15 * (1.0 + c.norm()) {
            Complex64::new(0.0, 0.0)
        } else {
            jump * ((1.0 + c).ln() - c.ln())
        };
        sum += d.conj() * (1.0 + log_part);
    }
    orient * sum / (2.0 * Complex64::i())
}

fn element_data(mesh: &Mesh, g: &ComplexField) -> Vec<(Complex64, [Complex64; 3], Complex64, f64, f64)> {
    (0..mesh.triangles().len())
        .map(|t| {
            let tri = mesh.triangles()[t];
            let pts = mesh.triangle_points(t).map(|q| q.to_complex());
            let mean = (g.values()[tri[0]] + g.values()[tri[1]] + g.values()[tri[2]]) / 3.0;
            let c = (pts[0] + pts[1] + pts[2]) / 3.0;
            let diam = (pts[0] - pts[1]).norm().max((pts[1] - pts[2]).norm()).max((pts[2] - pts[0]).norm());
            (mean, pts, c, diam, mesh.triangle_area(t))
        })
        .collect()
}

fn transform_at(data: &[(Complex64, [Complex64; 3], Complex64, f64, f64)], z: Complex64) -> Complex64 {
    let mut sum = Complex64::new(0.0, 0.0);
    for (g, pts, c, diam, area) in data {
        if g.norm_sqr() == 0.0 {
            continue;
        }
        let integral = if (c - z).norm() < NEAR * diam {
            triangle_cauchy_integral(*pts, z)
        } else {
            area / (c - z)
        };
        sum += g * integral;
    }
    -sum / PI
}

/// C[g](z) = −(1/π)∬_Ω g(w)/(w − z) dm₂(w) at every node, with g averaged
/// over each element. Nearby elements are integrated exactly, the rest by
/// the centroid rule.
pub fn cauchy_transform(mesh: &Mesh, g: &ComplexField) -> Result<ComplexField> {
    g.check_len(mesh)?;
    let data = element_data(mesh, g);
    let values: Vec<Complex64> = mesh
        .nodes()
        .par_iter()
        .map(|p| transform_at(&data, p.to_complex()))
        .collect();
    ComplexField::new(values)
}

/// C[g] at an arbitrary point.
pub fn cauchy_transform_at(mesh: &Mesh, g: &ComplexField, z: Complex64) -> Result<Complex64> {
    g.check_len(mesh)?;
    Ok(transform_at(&element_data(mesh, g), z))
}
