use super::{complete_with_discrepancy, gap_of, recover_robin, residual_floor, CauchyData, GapNormalization, DEFAULT_DEGREE};
use crate::anisotropic::{pushforward_boundary_data, pushforward_conductivity, sample_mu1, solve_beltrami, BeltramiGrid};
use crate::error::{Error, Result};
use crate::factorization::continuation_probe;
use crate::fem::{BoundaryFunction, RobinSolver, RobinSpec, ScalarField};
use crate::geometry::{BoundaryPartition, Mesh};
use crate::problem::ExperimentConfig;
use rayon::prelude::*;
use serde::Serialize;
use std::fmt::Write as _;

/// One λ pair of the experiment.
#[derive(Debug, Clone, Serialize)]
pub struct CaseReport {
    pub case_id: String,
    /// Number of Γ nodes where λ₁ ≠ λ₂.
    pub size: usize,
    /// Λ({λ₁ ≠ λ₂}).
    pub measure: f64,
    pub gap: f64,
    /// Relative L² error of the recovered λ₂ off the mask.
    pub recovery_err: f64,
    pub masked_fraction: f64,
    /// Continuation-probe verdict on u₁ − u₂ with γ = Γ₀.
    pub verdict: String,
    pub gap_exceeds_floor: bool,
    pub error: Option<String>,
}

#[derive(Debug, Clone, Copy, Serialize, PartialEq)]
pub struct TrendPoint {
    pub measure: f64,
    pub gap: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct ExperimentReport {
    pub seed: u64,
    /// "isotropic", or "beltrami" when σ was reduced through Θ first.
    pub route: String,
    pub beltrami_residual: Option<f64>,
    /// Solver residual floor of the unperturbed problem.
    pub floor: f64,
    pub cases: Vec<CaseReport>,
    /// Perturbed cases by increasing measure.
    pub trend: Vec<TrendPoint>,
    /// Every perturbed case has a gap above 10× the floor.
    pub all_gaps_positive: bool,
    /// Every identical case has a gap at the floor.
    pub identical_at_floor: bool,
    /// The gap grows with the measure of {λ₁ ≠ λ₂}.
    pub gap_monotone: bool,
}

impl ExperimentReport {
    /// `case_id,gap,recovery_err,masked_fraction,verdict` with 17 significant digits.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("case_id,gap,recovery_err,masked_fraction,verdict\n");
        for c in &self.cases {
            let verdict = match &c.error {
                Some(e) => format!("ERROR: {}", e.replace([',', '\n'], ";")),
                None => c.verdict.clone(),
            };
            writeln!(out, "{},{:.16e},{:.16e},{:.16e},{}", c.case_id, c.gap, c.recovery_err, c.masked_fraction, verdict)
                .unwrap();
        }
        out
    }
}

/// Positions of the longest cyclic run of Γ nodes, in boundary order.
fn longest_gamma_run(partition: &BoundaryPartition) -> Vec<usize> {
    let n = partition.len();
    let flags = partition.gamma_flags();
    let start = (0..n).find(|&k| !flags[k]).expect("Γ₀ is nonempty");
    let mut best: Vec<usize> = Vec::new();
    let mut run = Vec::new();
    for step in 1..=n {
        let k = (start + step) % n;
        if flags[k] {
            run.push(k);
        } else {
            if run.len() > best.len() {
                best = run.clone();
            }
            run.clear();
        }
    }
    best
}

struct Prepared {
    mesh: Mesh,
    spec: RobinSpec,
    route: &'static str,
    beltrami_residual: Option<f64>,
}

/// Isotropic problems pass through; anisotropic ones are carried to Θ(Ω)
/// with σ̃ and with λ, g divided by the boundary stretch |DΘτ|.
fn prepare(config: &ExperimentConfig) -> Result<Prepared> {
    let (mesh, spec) = config.problem.build()?;
    if spec.sigma.is_isotropic() {
        return Ok(Prepared { mesh, spec, route: "isotropic", beltrami_residual: None });
    }
    let grid = BeltramiGrid::covering(mesh.domain(), config.anisotropic.grid)?;
    let map = solve_beltrami(&sample_mu1(&mesh, &spec.sigma, &grid)?)?;
    let push = pushforward_conductivity(&mesh, &spec.sigma, &map)?;
    let moved = pushforward_boundary_data(&mesh, &spec.lambda, &spec.g, &map)?;
    let lambda = BoundaryFunction::new(spec.lambda.values().iter().zip(&moved.stretch).map(|(l, s)| l / s).collect())?;
    let image = push.image;
    let partition = BoundaryPartition::from_nodes(&image, spec.partition.gamma_flags().to_vec())?;
    let spec = RobinSpec::new(&image, push.sigma_tilde, partition, lambda, moved.flux)?;
    Ok(Prepared { mesh: image, spec, route: "beltrami", beltrami_residual: Some(map.residual) })
}

fn run_case(
    p: &Prepared,
    config: &ExperimentConfig,
    u1: &ScalarField,
    run: &[usize],
    index: usize,
    size: usize,
) -> Result<(f64, f64, f64, String, f64)> {
    let (mesh, spec) = (&p.mesh, &p.spec);
    if size > run.len() {
        return Err(Error::InvalidInput(format!("perturbation of {size} nodes exceeds the Γ arc of {} nodes", run.len())));
    }
    let first = (run.len() - size) / 2;
    let set = &run[first..first + size];
    let mut lambda2 = spec.lambda.values().to_vec();
    for &k in set {
        lambda2[k] += config.perturbation.amplitude;
    }
    let lambda2 = BoundaryFunction::new(lambda2)?;
    let spec2 = spec.with_lambda(mesh, lambda2.clone())?;
    let u2 = RobinSolver::new(mesh, &spec2)?.solve(mesh, &spec2.g)?;
    let gap = gap_of(mesh, &spec.partition, u1, &u2, GapNormalization::First);
    let w = mesh.boundary_weights();
    let measure: f64 = set.iter().map(|&k| w[k]).sum();

    let floor = config.recovery.floor;
    let recovery = if config.recovery.noise > 0.0 {
        let data = CauchyData::from_solution(mesh, &spec.partition, &u2, &spec.sigma)?;
        let (noisy, delta) =
            data.with_trace_noise(mesh, &spec.partition, config.recovery.noise, config.seed.wrapping_add(index as u64))?;
        let completion = complete_with_discrepancy(mesh, &spec.sigma, &spec.partition, &noisy, delta, DEFAULT_DEGREE)?;
        super::recover_from_cauchy(mesh, &spec.sigma, &spec.partition, &completion, floor)?
    } else {
        recover_robin(mesh, &u2, &spec.sigma, &spec.partition, floor)?
    };
    let recovery_err = recovery.relative_error(mesh, &spec.partition, &lambda2);
    let masked = recovery.masked_fraction(mesh, &spec.partition);

    let gamma0: Vec<bool> = spec.partition.gamma_flags().iter().map(|g| !g).collect();
    let probe = continuation_probe(mesh, &u1.sub(&u2), &spec.sigma, &gamma0, None)?;
    let verdict = verdict_label(&probe.verdict);
    Ok((gap, recovery_err, masked, verdict, measure))
}

fn verdict_label(v: &crate::factorization::Verdict) -> String {
    use crate::factorization::Verdict::*;
    match v {
        Consistent => "CONSISTENT",
        NotApplicable => "NOT-APPLICABLE",
        Inconsistent => "INCONSISTENT",
    }
    .to_string()
}

/// Runs every λ pair of the family concurrently. Failures are recorded per
/// case; only a failure of the shared setup aborts the run.
pub fn run_uniqueness_experiment(config: &ExperimentConfig) -> Result<ExperimentReport> {
    let p = prepare(config)?;
    let floor = residual_floor(&p.spec, &p.mesh)?;
    let u1 = RobinSolver::new(&p.mesh, &p.spec)?.solve(&p.mesh, &p.spec.g)?;
    let run = longest_gamma_run(&p.spec.partition);
    let cases: Vec<CaseReport> = config
        .perturbation
        .sizes
        .par_iter()
        .enumerate()
        .map(|(i, &size)| {
            let case_id = format!("case{i:03}-n{size}");
            match run_case(&p, config, &u1, &run, i, size) {
                Ok((gap, recovery_err, masked_fraction, verdict, measure)) => CaseReport {
                    case_id,
                    size,
                    measure,
                    gap,
                    recovery_err,
                    masked_fraction,
                    verdict,
                    gap_exceeds_floor: gap > 10.0 * floor,
                    error: None,
                },
                Err(e) => CaseReport {
                    case_id,
                    size,
                    measure: 0.0,
                    gap: f64::NAN,
                    recovery_err: f64::NAN,
                    masked_fraction: f64::NAN,
                    verdict: "ERROR".into(),
                    gap_exceeds_floor: false,
                    error: Some(e.to_string()),
                },
            }
        })
        .collect();
    let ok = |c: &&CaseReport| c.error.is_none();
    let mut trend: Vec<TrendPoint> = cases
        .iter()
        .filter(ok)
        .filter(|c| c.size > 0)
        .map(|c| TrendPoint { measure: c.measure, gap: c.gap })
        .collect();
    trend.sort_by(|a, b| a.measure.total_cmp(&b.measure));
    Ok(ExperimentReport {
        seed: config.seed,
        route: p.route.to_string(),
        beltrami_residual: p.beltrami_residual,
        floor,
        all_gaps_positive: cases.iter().filter(ok).filter(|c| c.size > 0).all(|c| c.gap_exceeds_floor),
        identical_at_floor: cases.iter().filter(ok).filter(|c| c.size == 0).all(|c| c.gap <= 10.0 * floor),
        gap_monotone: trend.windows(2).all(|w| w[1].gap >= w[0].gap),
        trend,
        cases,
    })
}
