//! Inverse Robin problem: completion of Cauchy data from Γ₀, recovery of λ on
//! Γ, and the uniqueness experiments.

mod completion;
mod experiment;

pub use completion::{
    complete_cauchy_data, complete_with_discrepancy, conormal_flux, CauchyData, Completion, CompletionProblem, FluxBasis, CONDITION_LIMIT,
    DEFAULT_DEGREE, DISCREPANCY_FACTOR,
};
pub use experiment::{run_uniqueness_experiment, CaseReport, ExperimentReport, TrendPoint};

use crate::error::{Error, Result};
use crate::fem::{BoundaryFunction, Conductivity, RobinSolver, RobinSpec, ScalarField};
use crate::geometry::{BoundaryPartition, Mesh};
use serde::Serialize;

/// Default mask floor, relative to max |u| on Γ.
pub const DEFAULT_FLOOR: f64 = 1e-3;

/// Recovered Robin coefficient.
#[derive(Debug, Clone, Serialize)]
pub struct RecoveryResult {
    /// λ̂ on Γ, zero off Γ and on masked nodes.
    #[serde(skip)]
    pub lambda_hat: BoundaryFunction,
    /// Γ nodes where |u| is below the floor, so λ is undetermined there.
    pub mask: Vec<bool>,
    pub misfit: f64,
    pub regularization: Option<f64>,
}

impl RecoveryResult {
    /// Γ nodes where λ̂ is reported.
    pub fn trusted(&self, partition: &BoundaryPartition) -> Vec<bool> {
        self.mask.iter().enumerate().map(|(k, &m)| partition.in_gamma(k) && !m).collect()
    }

    /// Fraction of Γ (by arclength) that is masked.
    pub fn masked_fraction(&self, mesh: &Mesh, partition: &BoundaryPartition) -> f64 {
        let w = mesh.boundary_weights();
        let masked = self.mask.iter().zip(&w).filter(|(m, _)| **m).fold(0.0, |acc, (_, w)| acc + w);
        masked / partition.gamma_length()
    }

    /// Relative L² error of λ̂ against `lambda` over the trusted nodes.
    pub fn relative_error(&self, mesh: &Mesh, partition: &BoundaryPartition, lambda: &BoundaryFunction) -> f64 {
        let trusted = self.trusted(partition);
        let diff = self.lambda_hat.sub(lambda).l2_norm_where(mesh, |k| trusted[k]);
        let reference = lambda.l2_norm_where(mesh, |k| trusted[k]);
        if reference > 0.0 {
            diff / reference
        } else {
            diff
        }
    }
}

/// λ̂ = −σ∂ₙu/u on Γ where |u| ≥ floor · max_Γ |u|.
pub fn recover_robin(
    mesh: &Mesh,
    u: &ScalarField,
    sigma: &Conductivity,
    partition: &BoundaryPartition,
    floor: f64,
) -> Result<RecoveryResult> {
    if !(0.0..1.0).contains(&floor) {
        return Err(Error::InvalidInput(format!("mask floor {floor} must lie in [0, 1)")));
    }
    if partition.len() != mesh.num_boundary() {
        return Err(Error::Mismatch("partition does not belong to this mesh".into()));
    }
    let flux = conormal_flux(mesh, u, sigma)?;
    let tr = u.trace(mesh);
    let peak = partition
        .gamma_nodes()
        .iter()
        .map(|&k| tr.values()[k].abs())
        .fold(0.0, f64::max);
    let cut = floor * peak;
    let mut mask = vec![false; mesh.num_boundary()];
    let mut lambda = vec![0.0; mesh.num_boundary()];
    for k in partition.gamma_nodes() {
        let v = tr.values()[k];
        if v.abs() <= cut || v == 0.0 {
            mask[k] = true;
        } else {
            lambda[k] = -flux.values()[k] / v;
        }
    }
    if partition.gamma_nodes().iter().all(|&k| mask[k]) {
        return Err(Error::InvalidInput(
            "recovery impossible: u vanishes (below the floor) on all of Γ, where λ is undetermined".into(),
        ));
    }
    Ok(RecoveryResult {
        lambda_hat: BoundaryFunction::new(lambda)?,
        mask,
        misfit: 0.0,
        regularization: None,
    })
}

/// Completion followed by recovery; the misfit and α of the completion are
/// carried into the result.
pub fn recover_from_cauchy(
    mesh: &Mesh,
    sigma: &Conductivity,
    partition: &BoundaryPartition,
    completion: &Completion,
    floor: f64,
) -> Result<RecoveryResult> {
    let mut r = recover_robin(mesh, &completion.u, sigma, partition, floor)?;
    r.misfit = completion.misfit;
    r.regularization = Some(completion.regularization);
    Ok(r)
}

/// Normalizer of the uniqueness gap.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum GapNormalization {
    /// ‖u₁‖_{L²(Γ₀)}
    #[default]
    First,
    /// ½(‖u₁‖ + ‖u₂‖), symmetric in the pair.
    Symmetric,
}

fn same_problem(mesh: &Mesh, a: &RobinSpec, b: &RobinSpec) -> Result<()> {
    if a.partition != b.partition {
        return Err(Error::Mismatch("the two specs have different boundary partitions".into()));
    }
    if a.sigma != b.sigma {
        return Err(Error::Mismatch("the two specs have different conductivities".into()));
    }
    if a.g != b.g {
        return Err(Error::Mismatch("the two specs have different Neumann data".into()));
    }
    if a.partition.len() != mesh.num_boundary() {
        return Err(Error::Mismatch("specs do not belong to this mesh".into()));
    }
    Ok(())
}

/// ‖u₁ − u₂‖_{L²(Γ₀)} / ‖u₁‖_{L²(Γ₀)} for two Robin problems differing only in λ.
pub fn uniqueness_gap(spec1: &RobinSpec, spec2: &RobinSpec, mesh: &Mesh) -> Result<f64> {
    uniqueness_gap_with(spec1, spec2, mesh, GapNormalization::First)
}

pub fn uniqueness_gap_with(spec1: &RobinSpec, spec2: &RobinSpec, mesh: &Mesh, norm: GapNormalization) -> Result<f64> {
    same_problem(mesh, spec1, spec2)?;
    let u1 = RobinSolver::new(mesh, spec1)?.solve(mesh, &spec1.g)?;
    let u2 = RobinSolver::new(mesh, spec2)?.solve(mesh, &spec2.g)?;
    Ok(gap_of(mesh, &spec1.partition, &u1, &u2, norm))
}

pub(crate) fn gap_of(mesh: &Mesh, partition: &BoundaryPartition, u1: &ScalarField, u2: &ScalarField, norm: GapNormalization) -> f64 {
    let on_g0 = |k: usize| !partition.in_gamma(k);
    let (t1, t2) = (u1.trace(mesh), u2.trace(mesh));
    let diff = t1.sub(&t2).l2_norm_where(mesh, on_g0);
    let n1 = t1.l2_norm_where(mesh, on_g0);
    let scale = match norm {
        GapNormalization::First => n1,
        GapNormalization::Symmetric => 0.5 * (n1 + t2.l2_norm_where(mesh, on_g0)),
    };
    if scale > 0.0 {
        diff / scale
    } else {
        diff
    }
}

/// Relative algebraic residual ‖(K + M_λ)u − F‖/‖F‖ of the Robin solve,
/// the floor below which gaps are indistinguishable from solver error.
pub fn residual_floor(spec: &RobinSpec, mesh: &Mesh) -> Result<f64> {
    let solver = RobinSolver::new(mesh, spec)?;
    let u = solver.solve(mesh, &spec.g)?;
    let au = solver.matrix().matvec(u.values());
    let f = crate::fem::boundary_load(mesh, spec.g.values());
    let r: f64 = au.iter().zip(&f).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
    let s: f64 = f.iter().map(|v| v * v).sum::<f64>().sqrt();
    Ok(if s > 0.0 { r / s } else { r })
}
