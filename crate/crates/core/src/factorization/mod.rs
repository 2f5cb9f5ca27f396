//! The conjugate-Beltrami reduction and the similarity factorization
//! ∂u = e^Ψ Φ, with the unique-continuation diagnostics built on top.

mod cauchy;
mod diagnostics;
mod similarity;

pub use cauchy::{cauchy_transform, cauchy_transform_at, triangle_cauchy_integral};
pub use diagnostics::{
    boundary_log_integral, continuation_family, continuation_probe, norm_equivalence_report, rolle_zero_set,
    vanishing_set, ChainEvidence, NormReport, ProbeReport, RolleSet, Verdict,
};
pub use similarity::{realify_on_boundary, similarity_factorize, FactorizationResult};

use crate::error::{Error, Result};
use crate::fem::{Conductivity, ScalarField};
use crate::geometry::{Mesh, Point};
use num_complex::Complex64;
use std::fmt::Write as _;

/// Complex nodal field.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexField {
    values: Vec<Complex64>,
}

impl ComplexField {
    pub fn new(values: Vec<Complex64>) -> Result<Self> {
        if let Some(i) = values.iter().position(|z| !z.is_finite()) {
            return Err(Error::InvalidInput(format!("non-finite value at node {i}")));
        }
        Ok(ComplexField { values })
    }

    pub fn zeros(n: usize) -> Self {
        ComplexField {
            values: vec![Complex64::new(0.0, 0.0); n],
        }
    }

    pub fn from_fn(mesh: &Mesh, f: impl Fn(Point) -> Complex64) -> Self {
        ComplexField {
            values: mesh.nodes().iter().map(|&p| f(p)).collect(),
        }
    }

    pub fn from_real(u: &ScalarField) -> Self {
        ComplexField {
            values: u.values().iter().map(|&x| Complex64::new(x, 0.0)).collect(),
        }
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn re(&self) -> Vec<f64> {
        self.values.iter().map(|z| z.re).collect()
    }

    pub fn im(&self) -> Vec<f64> {
        self.values.iter().map(|z| z.im).collect()
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// Exact L² norm of the P1 interpolant.
    pub fn l2_norm(&self, mesh: &Mesh) -> f64 {
        (mesh.l2_norm(&self.re()).powi(2) + mesh.l2_norm(&self.im()).powi(2)).sqrt()
    }

    pub fn sub(&self, other: &ComplexField) -> Self {
        ComplexField {
            values: self.values.iter().zip(&other.values).map(|(a, b)| a - b).collect(),
        }
    }

    /// Values at the boundary nodes, in boundary order.
    pub fn trace(&self, mesh: &Mesh) -> Vec<Complex64> {
        mesh.boundary_nodes().iter().map(|&i| self.values[i]).collect()
    }

    fn check_len(&self, mesh: &Mesh) -> Result<()> {
        if self.values.len() != mesh.num_nodes() {
            return Err(Error::Mismatch(format!(
                "complex field has {} values, mesh has {} nodes",
                self.values.len(),
                mesh.num_nodes()
            )));
        }
        Ok(())
    }

    /// CSV rows `x,y,re,im` per node.
    pub fn to_csv(&self, mesh: &Mesh, name: &str) -> String {
        let mut out = format!("x,y,re_{name},im_{name}\n");
        for (p, z) in mesh.nodes().iter().zip(&self.values) {
            writeln!(out, "{:.16e},{:.16e},{:.16e},{:.16e}", p.x, p.y, z.re, z.im).unwrap();
        }
        out
    }
}

/// Per-element (∂f, ∂̄f) of the P1 interpolant, ∂ = ½(∂₁ − i∂₂).
pub fn element_derivatives(mesh: &Mesh, t: usize, values: &[Complex64]) -> (Complex64, Complex64) {
    let g = mesh.hat_gradients(t);
    let tri = mesh.triangles()[t];
    let mut dx = Complex64::new(0.0, 0.0);
    let mut dy = Complex64::new(0.0, 0.0);
    for i in 0..3 {
        dx += values[tri[i]] * g[i].x;
        dy += values[tri[i]] * g[i].y;
    }
    let i = Complex64::i();
    (0.5 * (dx - i * dy), 0.5 * (dx + i * dy))
}

/// Area-weighted average of element values at each node.
fn to_nodes(mesh: &Mesh, per_element: &[Complex64]) -> Vec<Complex64> {
    let mut acc = vec![Complex64::new(0.0, 0.0); mesh.num_nodes()];
    let mut weight = vec![0.0; mesh.num_nodes()];
    for (t, tri) in mesh.triangles().iter().enumerate() {
        let a = mesh.triangle_area(t);
        for &i in tri {
            acc[i] += a * per_element[t];
            weight[i] += a;
        }
    }
    acc.iter().zip(&weight).map(|(z, w)| z / *w).collect()
}

/// ∂u = ½(∂₁u − i∂₂u) per element, averaged to the nodes.
pub fn complex_derivative(mesh: &Mesh, u: &ScalarField) -> Result<ComplexField> {
    complex_derivative_of(mesh, &ComplexField::from_real(u))
}

pub fn complex_derivative_of(mesh: &Mesh, f: &ComplexField) -> Result<ComplexField> {
    f.check_len(mesh)?;
    let per: Vec<Complex64> = (0..mesh.triangles().len()).map(|t| element_derivatives(mesh, t, &f.values).0).collect();
    ComplexField::new(to_nodes(mesh, &per))
}

/// ∂̄f per element, averaged to the nodes.
pub fn dbar(mesh: &Mesh, f: &ComplexField) -> Result<ComplexField> {
    f.check_len(mesh)?;
    let per: Vec<Complex64> = (0..mesh.triangles().len()).map(|t| element_derivatives(mesh, t, &f.values).1).collect();
    ComplexField::new(to_nodes(mesh, &per))
}

/// ‖∂̄f − g‖ / ‖g‖ with ∂̄f taken per element and g averaged over each element.
pub fn dbar_residual(mesh: &Mesh, f: &ComplexField, g: &ComplexField) -> Result<f64> {
    f.check_len(mesh)?;
    g.check_len(mesh)?;
    let (mut num, mut den) = (0.0, 0.0);
    for (t, tri) in mesh.triangles().iter().enumerate() {
        let a = mesh.triangle_area(t);
        let gt = (g.values[tri[0]] + g.values[tri[1]] + g.values[tri[2]]) / 3.0;
        num += a * (element_derivatives(mesh, t, &f.values).1 - gt).norm_sqr();
        den += a * gt.norm_sqr();
    }
    Ok(if den == 0.0 { num.sqrt() } else { (num / den).sqrt() })
}

/// ν = (1 − σ)/(1 + σ) for an isotropic conductivity.
pub fn beltrami_coefficient(sigma: &Conductivity) -> Result<ComplexField> {
    let s = sigma.scalar_values().ok_or_else(|| {
        Error::InvalidInput("the Beltrami coefficient ν needs an isotropic conductivity".into())
    })?;
    let c = sigma.ellipticity();
    for (node, &v) in s.iter().enumerate() {
        if !(v >= c && v <= 1.0 / c) || !(v > 0.0) {
            return Err(Error::Ellipticity {
                node,
                detail: format!("σ = {v} outside [{c}, {}]", 1.0 / c),
            });
        }
    }
    ComplexField::new(s.iter().map(|&v| Complex64::new((1.0 - v) / (1.0 + v), 0.0)).collect())
}

#[cfg(test)]
mod tests;
