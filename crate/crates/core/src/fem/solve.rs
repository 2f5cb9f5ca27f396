use super::assembly::{boundary_load, robin_mass, stiffness_triplets, weighted_boundary_integral};
use super::{BoundaryFunction, Conductivity, ScalarField};
use crate::error::{Error, Result};
use crate::geometry::{BoundaryPartition, Mesh};
use crate::linalg::{norm, SparseMatrix, SpdFactor};

const RESIDUAL_TOL: f64 = 1e-10;
const COMPAT_TOL: f64 = 1e-8;

/// How the free constant of a Neumann solution is fixed.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Normalization {
    /// ∫_Ω u = 0.
    MeanZero,
    /// u = 0 at the given mesh node.
    PointZero(usize),
}

/// Neumann solver with a factored stiffness matrix, reusable across data.
pub struct NeumannSolver {
    stiffness: SparseMatrix,
    reduced: SpdFactor,
    pinned: usize,
    boundary_sigma: Vec<f64>,
    isotropic: bool,
}

impl NeumannSolver {
    pub fn new(mesh: &Mesh, sigma: &Conductivity) -> Result<Self> {
        sigma.check_len(mesh)?;
        let k = SparseMatrix::from_triplets(mesh.num_nodes(), &stiffness_triplets(mesh, sigma));
        // pin an interior node when there is one
        let pinned = (0..mesh.num_nodes())
            .find(|&i| mesh.boundary_position(i).is_none())
            .unwrap_or(0);
        let keep: Vec<bool> = (0..mesh.num_nodes()).map(|i| i != pinned).collect();
        let (sub, _) = k.submatrix(&keep);
        let reduced = SpdFactor::new(&sub).map_err(|e| {
            Error::Solver(format!(
                "reduced Neumann stiffness is not positive definite ({e}); check mesh connectivity and σ > 0"
            ))
        })?;
        let boundary_sigma = mesh.boundary_nodes().iter().map(|&i| sigma.scalar_at(i)).collect();
        Ok(NeumannSolver {
            stiffness: k,
            reduced,
            pinned,
            boundary_sigma,
            isotropic: sigma.is_isotropic(),
        })
    }

    pub fn stiffness(&self) -> &SparseMatrix {
        &self.stiffness
    }

    /// Boundary flux density σg (isotropic) or g (conormal data, anisotropic).
    fn density(&self, g: &[f64]) -> Vec<f64> {
        if self.isotropic {
            g.iter().zip(&self.boundary_sigma).map(|(g, s)| g * s).collect()
        } else {
            g.to_vec()
        }
    }

    /// ⟨g, σ⟩ and the tolerance it is held to.
    pub fn compatibility(&self, mesh: &Mesh, g: &BoundaryFunction) -> (f64, f64) {
        let w = mesh.boundary_weights();
        let d = self.density(g.values());
        let r: f64 = d.iter().zip(&w).map(|(d, w)| d * w).sum();
        let weight = self.weight();
        let sn: f64 = weight.iter().zip(&w).map(|(s, w)| s * s * w).sum::<f64>().sqrt();
        (r, COMPAT_TOL * g.l2_norm(mesh) * sn)
    }

    fn weight(&self) -> Vec<f64> {
        if self.isotropic {
            self.boundary_sigma.clone()
        } else {
            vec![1.0; self.boundary_sigma.len()]
        }
    }

    /// Solves with Neumann data `g`. Data within tolerance of compatibility
    /// is projected onto ⟨g, σ⟩ = 0 first.
    pub fn solve(&self, mesh: &Mesh, g: &BoundaryFunction, normalization: Normalization) -> Result<ScalarField> {
        g.check_len(mesh, "Neumann data")?;
        let (r, tol) = self.compatibility(mesh, g);
        if r.abs() > tol {
            return Err(Error::Incompatible { residual: r, tolerance: tol });
        }
        let w = mesh.boundary_weights();
        let weight = self.weight();
        let ss: f64 = weight.iter().zip(&w).map(|(s, w)| s * s * w).sum();
        let projected: Vec<f64> = g.values().iter().zip(&weight).map(|(g, s)| g - r / ss * s).collect();
        let load = boundary_load(mesh, &self.density(&projected));
        self.solve_load(mesh, &load, normalization)
    }

    /// Solves K u = load for a load vector with zero sum.
    pub(crate) fn solve_load(&self, mesh: &Mesh, load: &[f64], normalization: Normalization) -> Result<ScalarField> {
        let n = mesh.num_nodes();
        let b: Vec<f64> = (0..n).filter(|&i| i != self.pinned).map(|i| load[i]).collect();
        let (x, _) = self.reduced.solve(&b)?;
        let mut u = vec![0.0; n];
        let mut it = x.into_iter();
        for (i, ui) in u.iter_mut().enumerate() {
            if i != self.pinned {
                *ui = it.next().unwrap();
            }
        }
        check_residual(&self.stiffness, &u, load)?;
        let shift = match normalization {
            Normalization::MeanZero => mesh.integrate(&u) / mesh.area(),
            Normalization::PointZero(node) => {
                if node >= n {
                    return Err(Error::InvalidInput(format!("normalization node {node} out of range")));
                }
                u[node]
            }
        };
        for ui in &mut u {
            *ui -= shift;
        }
        ScalarField::new(u)
    }
}

fn check_residual(a: &SparseMatrix, u: &[f64], b: &[f64]) -> Result<()> {
    let au = a.matvec(u);
    let r = norm(&au.iter().zip(b).map(|(x, y)| x - y).collect::<Vec<_>>());
    let scale = norm(b);
    if scale > 0.0 && r > RESIDUAL_TOL * scale {
        return Err(Error::Numerical(format!(
            "Galerkin residual {:e} exceeds {RESIDUAL_TOL:e} relative",
            r / scale
        )));
    }
    Ok(())
}

/// ⟨g, σ⟩ for Neumann data and its tolerance 1e-8·‖g‖·‖σ‖.
pub fn compatibility_residual(mesh: &Mesh, sigma: &Conductivity, g: &BoundaryFunction) -> Result<(f64, f64)> {
    sigma.check_len(mesh)?;
    g.check_len(mesh, "Neumann data")?;
    let w = mesh.boundary_weights();
    let s: Vec<f64> = if sigma.is_isotropic() {
        mesh.boundary_nodes().iter().map(|&i| sigma.scalar_at(i)).collect()
    } else {
        vec![1.0; w.len()]
    };
    let r: f64 = (0..w.len()).map(|k| s[k] * g.values()[k] * w[k]).sum();
    let sn: f64 = (0..w.len()).map(|k| s[k] * s[k] * w[k]).sum::<f64>().sqrt();
    Ok((r, COMPAT_TOL * g.l2_norm(mesh) * sn))
}

/// Neumann problem ∇·(σ∇u) = 0, ∂ₙu = g, normalized to mean zero over Ω.
///
/// For a matrix-valued σ, `g` is the conormal flux n·σ∇u.
pub fn solve_neumann(mesh: &Mesh, sigma: &Conductivity, g: &BoundaryFunction) -> Result<ScalarField> {
    solve_neumann_with(mesh, sigma, g, Normalization::MeanZero)
}

pub fn solve_neumann_with(
    mesh: &Mesh,
    sigma: &Conductivity,
    g: &BoundaryFunction,
    normalization: Normalization,
) -> Result<ScalarField> {
    NeumannSolver::new(mesh, sigma)?.solve(mesh, g, normalization)
}

/// Data of the forward Robin problem: σ∂ₙu = g on Γ₀, σ∂ₙu + λu = 0 on Γ.
#[derive(Debug, Clone)]
pub struct RobinSpec {
    pub sigma: Conductivity,
    pub partition: BoundaryPartition,
    /// λ, zero off Γ.
    pub lambda: BoundaryFunction,
    /// g, zero off Γ₀.
    pub g: BoundaryFunction,
}

impl RobinSpec {
    /// Validates λ ≥ 0 on Γ with λ ≢ 0, and zero-extends λ off Γ and g off Γ₀.
    pub fn new(
        mesh: &Mesh,
        sigma: Conductivity,
        partition: BoundaryPartition,
        lambda: BoundaryFunction,
        g: BoundaryFunction,
    ) -> Result<Self> {
        sigma.check_len(mesh)?;
        lambda.check_len(mesh, "λ")?;
        g.check_len(mesh, "g")?;
        if partition.len() != mesh.num_boundary() {
            return Err(Error::Mismatch("partition does not belong to this mesh".into()));
        }
        let mut positive = false;
        for k in 0..mesh.num_boundary() {
            if partition.in_gamma(k) {
                let l = lambda.values()[k];
                if l < 0.0 {
                    return Err(Error::InvalidRobin(format!(
                        "λ = {l} < 0 at boundary position {k}; λ must be nonnegative on Γ"
                    )));
                }
                positive |= l > 0.0;
            }
        }
        if !positive {
            return Err(Error::InvalidRobin("λ vanishes identically on Γ (need λ ≢ 0)".into()));
        }
        Ok(RobinSpec {
            lambda: lambda.restrict(&partition, true),
            g: g.restrict(&partition, false),
            sigma,
            partition,
        })
    }

    /// Same problem with different Neumann data on Γ₀.
    pub fn with_g(&self, g: BoundaryFunction) -> Self {
        RobinSpec {
            g: g.restrict(&self.partition, false),
            ..self.clone()
        }
    }

    /// Same problem with a different Robin coefficient (validated).
    pub fn with_lambda(&self, mesh: &Mesh, lambda: BoundaryFunction) -> Result<Self> {
        RobinSpec::new(mesh, self.sigma.clone(), self.partition.clone(), lambda, self.g.clone())
    }
}

/// Factored Robin operator K + M_λ for one (σ, Γ, λ).
pub struct RobinSolver {
    matrix: SparseMatrix,
    factor: SpdFactor,
}

impl RobinSolver {
    pub fn new(mesh: &Mesh, spec: &RobinSpec) -> Result<Self> {
        let mut t = stiffness_triplets(mesh, &spec.sigma);
        t.extend(robin_mass(mesh, spec.lambda.values()));
        let matrix = SparseMatrix::from_triplets(mesh.num_nodes(), &t);
        let factor = SpdFactor::new(&matrix).map_err(|e| {
            Error::Solver(format!(
                "Robin system failed to factor ({e}); it should be SPD for λ ≥ 0, λ ≢ 0 on Γ and σ elliptic"
            ))
        })?;
        Ok(RobinSolver { matrix, factor })
    }

    pub fn matrix(&self) -> &SparseMatrix {
        &self.matrix
    }

    pub fn solve(&self, mesh: &Mesh, g: &BoundaryFunction) -> Result<ScalarField> {
        g.check_len(mesh, "g")?;
        let load = boundary_load(mesh, g.values());
        let (u, _) = self.factor.solve(&load)?;
        check_residual(&self.matrix, &u, &load)?;
        ScalarField::new(u)
    }
}

/// Weak solution of the forward Robin problem.
pub fn solve_robin(spec: &RobinSpec, mesh: &Mesh) -> Result<ScalarField> {
    RobinSolver::new(mesh, spec)?.solve(mesh, &spec.g)
}

/// (∫_Γ λu dΛ, ∫_{Γ₀} g dΛ); equal for Robin solutions.
pub fn flux_balance(mesh: &Mesh, spec: &RobinSpec, u: &ScalarField) -> (f64, f64) {
    (
        weighted_boundary_integral(mesh, spec.lambda.values(), u.values()),
        spec.g.integrate(mesh),
    )
}

/// Solution of ∇·(σ∇u) = 0 with u = `trace` on ∂Ω.
pub fn solve_dirichlet(mesh: &Mesh, sigma: &Conductivity, trace: &BoundaryFunction) -> Result<ScalarField> {
    sigma.check_len(mesh)?;
    trace.check_len(mesh, "Dirichlet data")?;
    let n = mesh.num_nodes();
    let k = SparseMatrix::from_triplets(n, &stiffness_triplets(mesh, sigma));
    let mut u = vec![0.0; n];
    for (k, &i) in mesh.boundary_nodes().iter().enumerate() {
        u[i] = trace.values()[k];
    }
    let free: Vec<bool> = (0..n).map(|i| mesh.boundary_position(i).is_none()).collect();
    if free.iter().any(|&f| f) {
        let ku = k.matvec(&u);
        let (sub, index) = k.submatrix(&free);
        let b: Vec<f64> = index.iter().map(|&i| -ku[i]).collect();
        let (x, _) = SpdFactor::new(&sub)?.solve(&b)?;
        for (&i, xi) in index.iter().zip(x) {
            u[i] = xi;
        }
    }
    ScalarField::new(u)
}

/// Relative size of K u on interior nodes, a discrete measure of how far `u`
/// is from solving ∇·(σ∇u) = 0.
pub fn interior_residual(mesh: &Mesh, u: &ScalarField, sigma: &Conductivity) -> Result<f64> {
    u.check_len(mesh)?;
    sigma.check_len(mesh)?;
    let k = SparseMatrix::from_triplets(mesh.num_nodes(), &stiffness_triplets(mesh, sigma));
    let ku = k.matvec(u.values());
    let d = k.diagonal();
    let interior = |i: &usize| mesh.boundary_position(*i).is_none();
    let r: f64 = (0..mesh.num_nodes()).filter(interior).map(|i| ku[i] * ku[i]).sum::<f64>().sqrt();
    let s: f64 = (0..mesh.num_nodes())
        .filter(interior)
        .map(|i| (d[i] * u.values()[i]).powi(2))
        .sum::<f64>()
        .sqrt();
    Ok(if s == 0.0 { r } else { r / s })
}

/// (∫ σ|∇u|² + ∫_Γ λu²)^{1/2}.
pub fn robin_energy_norm(
    mesh: &Mesh,
    u: &ScalarField,
    sigma: &Conductivity,
    lambda: &BoundaryFunction,
    partition: &BoundaryPartition,
) -> Result<f64> {
    u.check_len(mesh)?;
    sigma.check_len(mesh)?;
    lambda.check_len(mesh, "λ")?;
    let k = SparseMatrix::from_triplets(mesh.num_nodes(), &stiffness_triplets(mesh, sigma));
    let lam = lambda.restrict(partition, true);
    let m = SparseMatrix::from_triplets(mesh.num_nodes(), &robin_mass(mesh, lam.values()));
    Ok((k.bilinear(u.values(), u.values()) + m.bilinear(u.values(), u.values())).max(0.0).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{partition_boundary, triangulate, Domain};
    use approx::assert_relative_eq;

    fn square(h: f64) -> Mesh {
        triangulate(&Domain::rectangle(1.0, 1.0).unwrap(), h).unwrap()
    }

    #[test]
    fn zero_data_gives_zero_solution() {
        let m = square(0.25);
        let s = Conductivity::constant(&m, 1.0).unwrap();
        let u = solve_neumann(&m, &s, &BoundaryFunction::zeros(m.num_boundary())).unwrap();
        assert!(u.values().iter().all(|v| *v == 0.0));
    }

    #[test]
    fn linear_solution_is_reproduced() {
        // u = x: ∂ₙu = ±1 on the vertical sides, 0 elsewhere
        let m = square(0.2);
        let s = Conductivity::constant(&m, 2.0).unwrap();
        // support averages of ∂ₙx: corners own half a vertical and half a horizontal side
        let g = BoundaryFunction::from_fn(&m, |_, p| {
            let corner = (p.y < 1e-12 || p.y > 1.0 - 1e-12) as i32 as f64;
            let side = if p.x < 1e-12 {
                -1.0
            } else if p.x > 1.0 - 1e-12 {
                1.0
            } else {
                0.0
            };
            side * (1.0 - 0.5 * corner)
        });
        let u = solve_neumann(&m, &s, &g).unwrap();
        let exact: Vec<f64> = m.nodes().iter().map(|p| p.x - 0.5).collect();
        let err = m.l2_norm(&u.sub(&ScalarField::new(exact).unwrap()).into_values());
        assert!(err < 1e-2, "error {err}");
    }

    #[test]
    fn incompatible_data_is_rejected() {
        let m = square(0.25);
        let s = Conductivity::constant(&m, 1.0).unwrap();
        let g = BoundaryFunction::new(vec![1.0; m.num_boundary()]).unwrap();
        assert!(matches!(solve_neumann(&m, &s, &g), Err(Error::Incompatible { .. })));
    }

    #[test]
    fn robin_balance_and_linearity() {
        let m = square(0.1);
        let s = Conductivity::from_fn(&m, |p| 1.0 + 0.5 * p.x * p.y).unwrap();
        let part = partition_boundary(&m, &[(1.0, 2.5)]).unwrap();
        let lam = BoundaryFunction::from_fn(&m, |_, p| 0.5 + p.y);
        let g = BoundaryFunction::from_fn(&m, |_, p| (3.0 * p.x).cos());
        let spec = RobinSpec::new(&m, s, part, lam, g).unwrap();
        let u = solve_robin(&spec, &m).unwrap();
        let (l, r) = flux_balance(&m, &spec, &u);
        assert_relative_eq!(l, r, max_relative = 1e-10);
        let u2 = solve_robin(&spec.with_g(spec.g.scaled(2.0)), &m).unwrap();
        for (a, b) in u.values().iter().zip(u2.values()) {
            assert!((2.0 * a - b).abs() < 1e-12 * (1.0 + b.abs()));
        }
    }

    #[test]
    fn invalid_lambda_is_rejected() {
        let m = square(0.25);
        let s = Conductivity::constant(&m, 1.0).unwrap();
        let part = partition_boundary(&m, &[(0.0, 2.0)]).unwrap();
        let g = BoundaryFunction::zeros(m.num_boundary());
        let neg = BoundaryFunction::new(vec![-1.0; m.num_boundary()]).unwrap();
        assert!(matches!(RobinSpec::new(&m, s.clone(), part.clone(), neg, g.clone()), Err(Error::InvalidRobin(_))));
        let zero = BoundaryFunction::zeros(m.num_boundary());
        assert!(matches!(RobinSpec::new(&m, s, part, zero, g), Err(Error::InvalidRobin(_))));
    }

    #[test]
    fn energy_norm_scaling() {
        let m = square(0.25);
        let s = Conductivity::constant(&m, 1.0).unwrap();
        let part = partition_boundary(&m, &[(0.0, 2.0)]).unwrap();
        let lam = BoundaryFunction::new(vec![1.0; m.num_boundary()]).unwrap();
        let u = ScalarField::from_fn(&m, |p| p.x * p.x + p.y);
        let e1 = robin_energy_norm(&m, &u, &s, &lam, &part).unwrap();
        let e4 = robin_energy_norm(&m, &u, &s, &lam.scaled(4.0), &part).unwrap();
        let zero = BoundaryFunction::zeros(m.num_boundary());
        let grad = robin_energy_norm(&m, &u, &s, &zero, &part).unwrap();
        assert_relative_eq!(e4 * e4 - grad * grad, 4.0 * (e1 * e1 - grad * grad), max_relative = 1e-12);
        assert_eq!(robin_energy_norm(&m, &ScalarField::zeros(m.num_nodes()), &s, &lam, &part).unwrap(), 0.0);
    }

    #[test]
    fn dirichlet_reproduces_linear_and_is_sigma_harmonic() {
        let m = square(0.1);
        let one = Conductivity::constant(&m, 1.0).unwrap();
        let lin = ScalarField::from_fn(&m, |p| 2.0 * p.x - p.y + 0.5);
        let u = solve_dirichlet(&m, &one, &lin.trace(&m)).unwrap();
        for (a, b) in u.values().iter().zip(lin.values()) {
            assert_relative_eq!(*a, *b, epsilon = 1e-12);
        }
        let s = Conductivity::from_fn(&m, |p| 1.0 + p.x * p.y).unwrap();
        let trace = BoundaryFunction::from_fn(&m, |_, p| (3.0 * p.x).sin() + p.y * p.y);
        let v = solve_dirichlet(&m, &s, &trace).unwrap();
        assert_eq!(v.trace(&m), trace);
        assert!(interior_residual(&m, &v, &s).unwrap() < 1e-10);
    }
}
