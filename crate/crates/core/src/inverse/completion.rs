use crate::error::{Error, Result};
use crate::fem::{normal_derivative, stiffness, BoundaryFunction, Conductivity, NeumannSolver, Normalization, ScalarField};
use crate::geometry::{BoundaryPartition, Mesh};
use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

/// Normal equations with a condition number above this are refused.
pub const CONDITION_LIMIT: f64 = 1e14;
/// Discrepancy principle: accept the largest α with misfit ≤ this · δ.
pub const DISCREPANCY_FACTOR: f64 = 1.01;

/// Cauchy data on Γ₀: the Neumann datum g (∂ₙu for scalar σ, the conormal
/// derivative n·σ∇u otherwise, as in the forward solvers) and the trace u,
/// both as boundary functions that vanish off Γ₀.
#[derive(Debug, Clone, PartialEq)]
pub struct CauchyData {
    pub g: BoundaryFunction,
    pub trace: BoundaryFunction,
}

impl CauchyData {
    pub fn new(mesh: &Mesh, partition: &BoundaryPartition, g: BoundaryFunction, trace: BoundaryFunction) -> Result<Self> {
        g.check_len(mesh, "flux data")?;
        trace.check_len(mesh, "trace data")?;
        if partition.len() != mesh.num_boundary() {
            return Err(Error::Mismatch("partition does not belong to this mesh".into()));
        }
        Ok(CauchyData {
            g: g.restrict(partition, false),
            trace: trace.restrict(partition, false),
        })
    }

    /// Cauchy data of a computed solution.
    pub fn from_solution(mesh: &Mesh, partition: &BoundaryPartition, u: &ScalarField, sigma: &Conductivity) -> Result<Self> {
        let g = normal_derivative(mesh, u, sigma)?;
        CauchyData::new(mesh, partition, g, u.trace(mesh))
    }

    /// Adds Gaussian noise of standard deviation `level` · RMS(trace on Γ₀)
    /// to the trace; returns the noisy data and δ, the L²(Γ₀) norm of the
    /// noise actually added (its expected size is std · Λ(Γ₀)^{1/2}).
    pub fn with_trace_noise(&self, mesh: &Mesh, partition: &BoundaryPartition, level: f64, seed: u64) -> Result<(Self, f64)> {
        if !(level >= 0.0) || !level.is_finite() {
            return Err(Error::InvalidInput(format!("noise level {level} must be a nonnegative number")));
        }
        let l0 = partition.gamma0_length();
        let rms = self.trace.l2_norm_where(mesh, |k| !partition.in_gamma(k)) / l0.sqrt();
        let std = level * rms;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let normal = Normal::new(0.0, 1.0).expect("unit normal");
        let noisy: Vec<f64> = self
            .trace
            .values()
            .iter()
            .enumerate()
            .map(|(k, &v)| {
                let e = normal.sample(&mut rng);
                if partition.in_gamma(k) {
                    v
                } else {
                    v + std * e
                }
            })
            .collect();
        let noisy = BoundaryFunction::new(noisy)?;
        let delta = noisy.sub(&self.trace).l2_norm_where(mesh, |k| !partition.in_gamma(k));
        Ok((CauchyData { g: self.g.clone(), trace: noisy }, delta))
    }
}

/// n·σ∇u on ∂Ω, variationally consistent.
pub fn conormal_flux(mesh: &Mesh, u: &ScalarField, sigma: &Conductivity) -> Result<BoundaryFunction> {
    let d = normal_derivative(mesh, u, sigma)?;
    if !sigma.is_isotropic() {
        return Ok(d);
    }
    BoundaryFunction::new(
        d.values()
            .iter()
            .zip(mesh.boundary_nodes())
            .map(|(v, &i)| v * sigma.scalar_at(i))
            .collect(),
    )
}

/// Discretization of the unknown Neumann data on Γ.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FluxBasis {
    /// One support indicator per Γ node.
    Nodal,
    /// Legendre polynomials up to this degree in arclength along each Γ arc.
    Legendre(usize),
}

impl Default for FluxBasis {
    fn default() -> Self {
        FluxBasis::Legendre(DEFAULT_DEGREE)
    }
}

/// Default polynomial degree of the Γ flux basis.
pub const DEFAULT_DEGREE: usize = 8;

/// Cyclic runs of consecutive Γ positions.
fn gamma_runs(partition: &BoundaryPartition) -> Vec<Vec<usize>> {
    let n = partition.len();
    let start = (0..n).find(|&k| !partition.in_gamma(k)).expect("Γ₀ is nonempty");
    let mut runs = Vec::new();
    let mut run = Vec::new();
    for step in 1..=n {
        let k = (start + step) % n;
        if partition.in_gamma(k) {
            run.push(k);
        } else if !run.is_empty() {
            runs.push(std::mem::take(&mut run));
        }
    }
    runs
}

fn legendre(degree: usize, t: f64) -> f64 {
    let (mut p0, mut p1) = (1.0, t);
    if degree == 0 {
        return p0;
    }
    for k in 1..degree {
        let p2 = ((2 * k + 1) as f64 * t * p1 - k as f64 * p0) / (k + 1) as f64;
        p0 = p1;
        p1 = p2;
    }
    p1
}

impl FluxBasis {
    /// Raw basis data on ∂Ω (zero off Γ), before removing the Γ mean. The
    /// set is chosen so that it stays independent after that projection.
    fn functions(&self, mesh: &Mesh, partition: &BoundaryPartition) -> Vec<Vec<f64>> {
        let nb = mesh.num_boundary();
        let runs = gamma_runs(partition);
        let mut out = Vec::new();
        match *self {
            FluxBasis::Nodal => {
                let gamma = partition.gamma_nodes();
                for &j in &gamma[..gamma.len() - 1] {
                    let mut d = vec![0.0; nb];
                    d[j] = 1.0;
                    out.push(d);
                }
            }
            FluxBasis::Legendre(degree) => {
                let w = mesh.boundary_weights();
                for (r, run) in runs.iter().enumerate() {
                    let total: f64 = run.iter().map(|&k| w[k]).sum();
                    let mut s = Vec::with_capacity(run.len());
                    let mut acc = 0.0;
                    for &k in run {
                        s.push(acc + 0.5 * w[k]);
                        acc += w[k];
                    }
                    let top = degree.min(run.len() - 1);
                    let first = if r + 1 == runs.len() { 1 } else { 0 };
                    for p in first..=top {
                        let mut d = vec![0.0; nb];
                        for (&k, &sk) in run.iter().zip(&s) {
                            d[k] = legendre(p, 2.0 * sk / total - 1.0);
                        }
                        out.push(d);
                    }
                }
            }
        }
        out
    }
}

/// A completed solution with its fit diagnostics.
#[derive(Debug, Clone)]
pub struct Completion {
    pub u: ScalarField,
    pub regularization: f64,
    /// ‖(tr u − trace, ∂ₙu − g)‖_{L²(Γ₀)} / ‖(trace, g)‖_{L²(Γ₀)}.
    pub misfit: f64,
    /// ‖tr u − trace‖_{L²(Γ₀)}.
    pub trace_residual: f64,
    pub condition: f64,
    pub flux_basis: FluxBasis,
}

/// Least-squares data completion over unknown Neumann data on Γ.
///
/// Candidates are u = u₀ + Σ aⱼuⱼ + c: u₀ carries g on Γ₀ plus the constant
/// flux on Γ that makes the data compatible, and uⱼ carries the Γ-mean-free
/// part of one [`FluxBasis`] function.
pub struct CompletionProblem {
    u0: Vec<f64>,
    flux_basis: FluxBasis,
    basis: Vec<Vec<f64>>,
    /// Data-fit normal matrix and right-hand side.
    fit: DMatrix<f64>,
    rhs: DVector<f64>,
    gram: DMatrix<f64>,
    cross: DVector<f64>,
    /// Data-fit residual at the particular solution (a = 0, c = 0).
    base_sq: f64,
    data_sq: f64,
    gamma0_weights: Vec<f64>,
    trace: Vec<f64>,
    boundary: Vec<usize>,
}

impl CompletionProblem {
    pub fn new(mesh: &Mesh, sigma: &Conductivity, partition: &BoundaryPartition, data: &CauchyData) -> Result<Self> {
        CompletionProblem::with_basis(mesh, sigma, partition, data, FluxBasis::default())
    }

    pub fn with_basis(
        mesh: &Mesh,
        sigma: &Conductivity,
        partition: &BoundaryPartition,
        data: &CauchyData,
        flux_basis: FluxBasis,
    ) -> Result<Self> {
        if partition.len() != mesh.num_boundary() {
            return Err(Error::Mismatch("partition does not belong to this mesh".into()));
        }
        data.g.check_len(mesh, "flux data")?;
        data.trace.check_len(mesh, "trace data")?;
        let w = mesh.boundary_weights();
        let bnodes = mesh.boundary_nodes();
        // compatibility weight of the Neumann solver: ∫ s g = 0
        let sw: Vec<f64> = (0..mesh.num_boundary())
            .map(|k| w[k] * if sigma.is_isotropic() { sigma.scalar_at(bnodes[k]) } else { 1.0 })
            .collect();
        let gamma = partition.gamma_nodes();
        let lg: f64 = gamma.iter().map(|&k| sw[k]).sum();
        let g0 = data.g.restrict(partition, false);
        let shift = -g0.values().iter().zip(&sw).map(|(g, s)| g * s).sum::<f64>() / lg;

        let solver = NeumannSolver::new(mesh, sigma)?;
        let solve = |d: Vec<f64>| -> Result<Vec<f64>> {
            Ok(solver.solve(mesh, &BoundaryFunction::new(d)?, Normalization::MeanZero)?.into_values())
        };
        let mut d0 = g0.values().to_vec();
        for &k in &gamma {
            d0[k] = shift;
        }
        let u0 = solve(d0)?;
        let basis = flux_basis
            .functions(mesh, partition)
            .into_iter()
            .map(|mut d| {
                let mean: f64 = gamma.iter().map(|&k| sw[k] * d[k]).sum::<f64>() / lg;
                for &k in &gamma {
                    d[k] -= mean;
                }
                solve(d)
            })
            .collect::<Result<Vec<_>>>()?;

        let mut cols: Vec<&[f64]> = basis.iter().map(Vec::as_slice).collect();
        let ones = vec![1.0; mesh.num_nodes()];
        cols.push(&ones);
        let m = cols.len();
        let gamma0: Vec<usize> = partition.gamma0_nodes();
        let gamma0_weights: Vec<f64> = gamma0.iter().map(|&k| w[k]).collect();
        let flux_of = |v: &[f64]| -> Result<Vec<f64>> {
            let f = normal_derivative(mesh, &ScalarField::new(v.to_vec())?, sigma)?;
            Ok(gamma0.iter().map(|&k| f.values()[k]).collect())
        };
        let trace_rows: Vec<Vec<f64>> = cols.iter().map(|c| gamma0.iter().map(|&k| c[bnodes[k]]).collect()).collect();
        let flux_rows: Vec<Vec<f64>> = cols.iter().map(|c| flux_of(c)).collect::<Result<_>>()?;
        let trace: Vec<f64> = gamma0.iter().map(|&k| data.trace.values()[k]).collect();
        let g: Vec<f64> = gamma0.iter().map(|&k| data.g.values()[k]).collect();
        let t0: Vec<f64> = gamma0.iter().map(|&k| u0[bnodes[k]]).collect();
        let f0 = flux_of(&u0)?;
        let rt: Vec<f64> = trace.iter().zip(&t0).map(|(a, b)| a - b).collect();
        let rf: Vec<f64> = g.iter().zip(&f0).map(|(a, b)| a - b).collect();
        let wdot = |a: &[f64], b: &[f64]| -> f64 { gamma0_weights.iter().zip(a).zip(b).map(|((w, x), y)| w * x * y).sum() };

        let mut fit = DMatrix::zeros(m, m);
        let mut rhs = DVector::zeros(m);
        for a in 0..m {
            for b in a..m {
                let v = wdot(&trace_rows[a], &trace_rows[b]) + wdot(&flux_rows[a], &flux_rows[b]);
                fit[(a, b)] = v;
                fit[(b, a)] = v;
            }
            rhs[a] = wdot(&trace_rows[a], &rt) + wdot(&flux_rows[a], &rf);
        }

        let k1 = stiffness(mesh, &Conductivity::isotropic(vec![1.0; mesh.num_nodes()])?);
        let mass = mesh.lumped_mass();
        let apply_w = |v: &[f64]| -> Vec<f64> {
            let mut out = k1.matvec(v);
            out.iter_mut().zip(&mass).zip(v).for_each(|((o, m), x)| *o += m * x);
            out
        };
        let wcols: Vec<Vec<f64>> = cols.iter().map(|c| apply_w(c)).collect();
        let mut gram = DMatrix::zeros(m, m);
        let mut cross = DVector::zeros(m);
        let wu0 = apply_w(&u0);
        for a in 0..m {
            for b in a..m {
                let v: f64 = cols[a].iter().zip(&wcols[b]).map(|(x, y)| x * y).sum();
                gram[(a, b)] = v;
                gram[(b, a)] = v;
            }
            cross[a] = cols[a].iter().zip(&wu0).map(|(x, y)| x * y).sum();
        }
        Ok(CompletionProblem {
            u0,
            flux_basis,
            basis,
            fit,
            rhs,
            gram,
            cross,
            base_sq: wdot(&rt, &rt) + wdot(&rf, &rf),
            data_sq: wdot(&trace, &trace) + wdot(&g, &g),
            gamma0_weights,
            trace,
            boundary: gamma0.iter().map(|&k| bnodes[k]).collect(),
        })
    }

    /// Minimizer for regularization weight α.
    pub fn solve(&self, alpha: f64) -> Result<Completion> {
        if !(alpha >= 0.0) || !alpha.is_finite() {
            return Err(Error::InvalidInput(format!("regularization {alpha} must be a nonnegative number")));
        }
        let normal = &self.fit + alpha * &self.gram;
        let rhs = &self.rhs - alpha * &self.cross;
        let eig = normal.clone().symmetric_eigen();
        let (lo, hi) = eig.eigenvalues.iter().fold((f64::INFINITY, 0.0f64), |(l, h), &e| (l.min(e), h.max(e.abs())));
        let condition = if lo > 0.0 { hi / lo } else { f64::INFINITY };
        if !(condition <= CONDITION_LIMIT) {
            return Err(Error::Numerical(format!(
                "completion normal equations have condition number {condition:e} > {CONDITION_LIMIT:e}; increase the regularization (now {alpha:e})"
            )));
        }
        let x = normal
            .cholesky()
            .ok_or_else(|| Error::Numerical("completion normal equations are not positive definite".into()))?
            .solve(&rhs);
        let m = self.basis.len();
        let mut u = self.u0.clone();
        for (j, b) in self.basis.iter().enumerate() {
            u.iter_mut().zip(b).for_each(|(ui, bi)| *ui += x[j] * bi);
        }
        u.iter_mut().for_each(|ui| *ui += x[m]);
        // ‖A x − r‖² = base − 2xᵀrhs + xᵀ F x
        let fx = &self.fit * &x;
        let fit_sq = (self.base_sq - 2.0 * x.dot(&self.rhs) + x.dot(&fx)).max(0.0);
        let trace_residual = self
            .boundary
            .iter()
            .zip(&self.trace)
            .zip(&self.gamma0_weights)
            .map(|((&i, t), w)| w * (u[i] - t).powi(2))
            .sum::<f64>()
            .sqrt();
        Ok(Completion {
            u: ScalarField::new(u)?,
            regularization: alpha,
            misfit: if self.data_sq > 0.0 { (fit_sq / self.data_sq).sqrt() } else { fit_sq.sqrt() },
            trace_residual,
            condition,
            flux_basis: self.flux_basis,
        })
    }

    /// Discrepancy principle over α = 1, 10⁻¹, …, 10⁻¹⁴: the largest α whose
    /// trace residual is at most 1.01 δ. When none qualifies, the smallest
    /// well-conditioned α is returned.
    pub fn solve_discrepancy(&self, delta: f64) -> Result<Completion> {
        self.discrepancy_search(delta).map(|(c, _)| c)
    }

    /// The completion and whether it met the discrepancy bound.
    fn discrepancy_search(&self, delta: f64) -> Result<(Completion, bool)> {
        if !(delta >= 0.0) {
            return Err(Error::InvalidInput(format!("noise level {delta} must be nonnegative")));
        }
        let mut last = None;
        for p in 0..=14 {
            let alpha = 10f64.powi(-p);
            match self.solve(alpha) {
                Ok(c) if c.trace_residual <= DISCREPANCY_FACTOR * delta => return Ok((c, true)),
                Ok(c) => last = Some(c),
                Err(Error::Numerical(_)) if last.is_some() => break,
                Err(e) => return Err(e),
            }
        }
        Ok((last.expect("loop runs at least once"), false))
    }
}

/// Discrepancy principle over both the Legendre degree and α: the lowest
/// degree in 1..=`max_degree` that reaches 1.01 δ, with the largest α that
/// does. When no degree reaches it, the noise exceeds δ and the smallest
/// attainable trace residual takes the place of δ.
pub fn complete_with_discrepancy(
    mesh: &Mesh,
    sigma: &Conductivity,
    partition: &BoundaryPartition,
    data: &CauchyData,
    delta: f64,
    max_degree: usize,
) -> Result<Completion> {
    if max_degree == 0 {
        return Err(Error::InvalidInput("flux basis degree must be at least 1".into()));
    }
    let mut tried = Vec::new();
    for degree in 1..=max_degree {
        let problem = CompletionProblem::with_basis(mesh, sigma, partition, data, FluxBasis::Legendre(degree))?;
        let (c, met) = problem.discrepancy_search(delta)?;
        if met {
            return Ok(c);
        }
        tried.push((problem, c.trace_residual));
    }
    let best = tried.iter().map(|(_, r)| *r).fold(f64::INFINITY, f64::min);
    let (problem, _) = tried
        .iter()
        .find(|(_, r)| *r <= DISCREPANCY_FACTOR * best)
        .expect("the best degree qualifies");
    problem.solve_discrepancy(best)
}

/// Minimizer of ‖tr u − trace‖² + ‖∂ₙu − g‖² over Γ₀ plus α‖u‖²_{W^{1,2}}
/// among discrete solutions with unknown Neumann data on Γ.
pub fn complete_cauchy_data(
    mesh: &Mesh,
    sigma: &Conductivity,
    partition: &BoundaryPartition,
    data: &CauchyData,
    alpha: f64,
) -> Result<Completion> {
    CompletionProblem::new(mesh, sigma, partition, data)?.solve(alpha)
}
