use super::assembly::{stiffness_triplets, support_mass};
use super::{BoundaryFunction, Conductivity, ScalarField};
use crate::error::Result;
use crate::geometry::Mesh;
use crate::linalg::{solve_cyclic_tridiagonal, SparseMatrix};

/// Variationally consistent normal derivative.
///
/// Finds the support-constant flux q with ∫_{∂Ω} q ψ_a = ∫_Ω σ∇u·∇ψ_a for
/// every boundary hat ψ_a, and returns q/σ (the normal derivative ∂ₙu) for
/// isotropic σ, or q itself (the conormal flux n·σ∇u) for matrix-valued σ.
pub fn normal_derivative(mesh: &Mesh, u: &ScalarField, sigma: &Conductivity) -> Result<BoundaryFunction> {
    u.check_len(mesh)?;
    sigma.check_len(mesh)?;
    let k = SparseMatrix::from_triplets(mesh.num_nodes(), &stiffness_triplets(mesh, sigma));
    let ku = k.matvec(u.values());
    conormal_from_residual(mesh, &ku, sigma)
}

pub(crate) fn conormal_from_residual(mesh: &Mesh, ku: &[f64], sigma: &Conductivity) -> Result<BoundaryFunction> {
    let rhs: Vec<f64> = mesh.boundary_nodes().iter().map(|&i| ku[i]).collect();
    let (lower, diag, upper) = support_mass(mesh);
    let q = solve_cyclic_tridiagonal(&lower, &diag, &upper, &rhs);
    let values = if sigma.is_isotropic() {
        q.iter()
            .zip(mesh.boundary_nodes())
            .map(|(q, &i)| q / sigma.scalar_at(i))
            .collect()
    } else {
        q
    };
    BoundaryFunction::new(values)
}

/// ∂_τ of a boundary trace by centred differences in arclength (periodic).
pub fn tangential_derivative(mesh: &Mesh, trace: &BoundaryFunction) -> Result<BoundaryFunction> {
    trace.check_len(mesh, "trace")?;
    let nb = mesh.num_boundary();
    let seg = mesh.segment_lengths();
    let v = trace.values();
    BoundaryFunction::new(
        (0..nb)
            .map(|k| {
                let prev = (k + nb - 1) % nb;
                let next = (k + 1) % nb;
                (v[next] - v[prev]) / (seg[prev] + seg[k])
            })
            .collect(),
    )
}
