use super::Conductivity;
use crate::geometry::Mesh;
use crate::linalg::SparseMatrix;
use rayon::prelude::*;

/// Stiffness matrix K_ab = ∫ σ∇ψ_a·∇ψ_b (σ averaged per element).
pub fn stiffness(mesh: &Mesh, sigma: &Conductivity) -> SparseMatrix {
    SparseMatrix::from_triplets(mesh.num_nodes(), &stiffness_triplets(mesh, sigma))
}

pub(crate) fn stiffness_triplets(mesh: &Mesh, sigma: &Conductivity) -> Vec<(usize, usize, f64)> {
    (0..mesh.triangles().len())
        .into_par_iter()
        .flat_map_iter(|t| {
            let tri = mesh.triangles()[t];
            let g = mesh.hat_gradients(t);
            let area = mesh.triangle_area(t);
            let s = sigma.element_matrix(mesh, t);
            let mut out = Vec::with_capacity(9);
            for i in 0..3 {
                let sg = s.apply(g[i]);
                for j in 0..3 {
                    out.push((tri[j], tri[i], area * sg.dot(g[j])));
                }
            }
            out
        })
        .collect()
}

/// Triplets of ∫_{∂Ω} c ψ_a ψ_b for a coefficient `c` that is constant on
/// each node support (indexed by boundary position).
pub fn robin_mass(mesh: &Mesh, c: &[f64]) -> Vec<(usize, usize, f64)> {
    let nb = mesh.num_boundary();
    let seg = mesh.segment_lengths();
    let bn = mesh.boundary_nodes();
    let mut out = Vec::new();
    for k in 0..nb {
        let j = (k + 1) % nb;
        let l = seg[k];
        let (a, b) = (bn[k], bn[j]);
        // half owned by k, then half owned by j
        let (ck, cj) = (c[k], c[j]);
        out.push((a, a, l * (7.0 * ck + cj) / 24.0));
        out.push((b, b, l * (ck + 7.0 * cj) / 24.0));
        let off = l * (ck + cj) / 12.0;
        out.push((a, b, off));
        out.push((b, a, off));
    }
    out
}

/// Load vector ∫_{∂Ω} d ψ_a for a support-constant density `d`.
pub fn boundary_load(mesh: &Mesh, d: &[f64]) -> Vec<f64> {
    let nb = mesh.num_boundary();
    let seg = mesh.segment_lengths();
    let bn = mesh.boundary_nodes();
    let mut load = vec![0.0; mesh.num_nodes()];
    for k in 0..nb {
        let j = (k + 1) % nb;
        let l = seg[k];
        load[bn[k]] += l * (3.0 * d[k] + d[j]) / 8.0;
        load[bn[j]] += l * (d[k] + 3.0 * d[j]) / 8.0;
    }
    load
}

/// ∫_{∂Ω} c u dΛ for support-constant `c` and the P1 trace of nodal `u`.
pub fn weighted_boundary_integral(mesh: &Mesh, c: &[f64], u: &[f64]) -> f64 {
    let nb = mesh.num_boundary();
    let seg = mesh.segment_lengths();
    let bn = mesh.boundary_nodes();
    (0..nb)
        .map(|k| {
            let j = (k + 1) % nb;
            let (uk, uj) = (u[bn[k]], u[bn[j]]);
            seg[k] * (c[k] * (3.0 * uk + uj) + c[j] * (uk + 3.0 * uj)) / 8.0
        })
        .sum()
}

/// Cyclic tridiagonal matrix M_kl = ∫_{supp l} ψ_k, as (lower, diag, upper).
pub(crate) fn support_mass(mesh: &Mesh) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
    let seg = mesh.segment_lengths();
    let nb = seg.len();
    let lower: Vec<f64> = (0..nb).map(|k| seg[(k + nb - 1) % nb] / 8.0).collect();
    let upper: Vec<f64> = (0..nb).map(|k| seg[k] / 8.0).collect();
    let diag: Vec<f64> = (0..nb).map(|k| 3.0 * (seg[(k + nb - 1) % nb] + seg[k]) / 8.0).collect();
    (lower, diag, upper)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{triangulate, Domain};
    use approx::assert_relative_eq;

    #[test]
    fn stiffness_annihilates_constants_and_reproduces_linear_energy() {
        let m = triangulate(&Domain::rectangle(2.0, 1.0).unwrap(), 0.25).unwrap();
        let s = Conductivity::constant(&m, 3.0).unwrap();
        let k = stiffness(&m, &s);
        let ones = vec![1.0; m.num_nodes()];
        assert!(k.matvec(&ones).iter().all(|v| v.abs() < 1e-12));
        let x: Vec<f64> = m.nodes().iter().map(|p| p.x).collect();
        // ∫ 3 |∇x|² = 3 · area
        assert_relative_eq!(k.bilinear(&x, &x), 6.0, epsilon = 1e-10);
    }

    #[test]
    fn boundary_integrals_are_exact_for_linear_traces() {
        let m = triangulate(&Domain::rectangle(1.0, 1.0).unwrap(), 0.25).unwrap();
        let nb = m.num_boundary();
        let x: Vec<f64> = m.nodes().iter().map(|p| p.x).collect();
        // ∫_{∂Ω} x dΛ = 2 on the unit square
        assert_relative_eq!(weighted_boundary_integral(&m, &vec![1.0; nb], &x), 2.0, epsilon = 1e-14);
        let load = boundary_load(&m, &vec![1.0; nb]);
        assert_relative_eq!(load.iter().sum::<f64>(), 4.0, epsilon = 1e-14);
        let mass = SparseMatrix::from_triplets(m.num_nodes(), &robin_mass(&m, &vec![1.0; nb]));
        // ∫ x² over the boundary = 2·(1/3) + 1 = 5/3
        assert_relative_eq!(mass.bilinear(&x, &x), 5.0 / 3.0, epsilon = 1e-14);
    }
}
