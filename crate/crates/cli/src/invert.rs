use crate::forward::{apply_mesh_flags, build, load_problem, nodal_csv};
use crate::run::{num, Run};
use crate::Global;
use anyhow::Result;
use clap::{Args, Subcommand};
use robinucq_core::fem::{solve_robin, RobinSpec, ScalarField};
use robinucq_core::inverse::{
    complete_with_discrepancy, recover_from_cauchy, recover_robin, residual_floor, run_uniqueness_experiment,
    uniqueness_gap_with, CauchyData, Completion, CompletionProblem, ExperimentReport, FluxBasis, GapNormalization,
    DEFAULT_DEGREE, DEFAULT_FLOOR,
};
use robinucq_core::problem::{DomainConfig, ExperimentConfig, SigmaConfig};
use robinucq_core::Mesh;
use serde_json::json;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

#[derive(Args)]
pub struct DataArgs {
    /// Problem file; the Cauchy data on Γ₀ are generated from its forward solve.
    #[arg(long, visible_alias = "config")]
    pub spec: PathBuf,
    /// Relative Gaussian noise on the Γ₀ trace.
    #[arg(long, default_value_t = 0.0)]
    pub noise: f64,
    /// Fixed regularization α; by default α (and the flux degree) follow the
    /// discrepancy principle when there is noise, and α = 1e-8 otherwise.
    #[arg(long)]
    pub alpha: Option<f64>,
    /// Largest Legendre degree of the unknown Γ flux.
    #[arg(long, default_value_t = DEFAULT_DEGREE)]
    pub degree: usize,
}

#[derive(Subcommand)]
pub enum InvertCommand {
    /// Complete the Cauchy data from Γ₀ onto Γ.
    Complete(DataArgs),
    /// Recover λ on Γ, from the exact solution or through completion.
    Recover {
        #[command(flatten)]
        data: DataArgs,
        /// Mask floor relative to max |u| on Γ.
        #[arg(long, default_value_t = DEFAULT_FLOOR)]
        floor: f64,
    },
    /// Uniqueness gap between two problems that differ only in λ.
    Gap {
        #[arg(long, visible_alias = "config")]
        spec: PathBuf,
        #[arg(long)]
        other: PathBuf,
        /// Normalize by the mean of both Γ₀ norms.
        #[arg(long)]
        symmetric: bool,
    },
    /// Run a uniqueness experiment file.
    Suite {
        #[arg(long, visible_alias = "spec")]
        config: PathBuf,
    },
}

struct Synthetic {
    mesh: Mesh,
    spec: RobinSpec,
    u: ScalarField,
    data: CauchyData,
    delta: f64,
}

fn synthetic(run: &mut Run, g: &Global, a: &DataArgs) -> Result<Synthetic> {
    let (mesh, spec) = build(run, g, &a.spec)?;
    let u = run.stage("solve", || solve_robin(&spec, &mesh))?;
    let exact = CauchyData::from_solution(&mesh, &spec.partition, &u, &spec.sigma)?;
    let (data, delta) = if a.noise > 0.0 {
        exact.with_trace_noise(&mesh, &spec.partition, a.noise, run.seed)?
    } else {
        (exact, 0.0)
    };
    Ok(Synthetic { mesh, spec, u, data, delta })
}

fn complete(run: &mut Run, s: &Synthetic, a: &DataArgs) -> Result<Completion> {
    let (mesh, spec) = (&s.mesh, &s.spec);
    let c = run.stage("complete", || match a.alpha {
        Some(alpha) => {
            CompletionProblem::with_basis(mesh, &spec.sigma, &spec.partition, &s.data, FluxBasis::Legendre(a.degree))?
                .solve(alpha)
        }
        None if a.noise > 0.0 => complete_with_discrepancy(mesh, &spec.sigma, &spec.partition, &s.data, s.delta, a.degree),
        None => CompletionProblem::with_basis(mesh, &spec.sigma, &spec.partition, &s.data, FluxBasis::Legendre(a.degree))?
            .solve(1e-8),
    })?;
    Ok(c)
}

fn completion_summary(s: &Synthetic, c: &Completion) -> serde_json::Value {
    let on_gamma = |k: usize| s.spec.partition.in_gamma(k);
    let t = s.u.trace(&s.mesh);
    let err = c.u.trace(&s.mesh).sub(&t).l2_norm_where(&s.mesh, on_gamma) / t.l2_norm_where(&s.mesh, on_gamma);
    let degree = match c.flux_basis {
        FluxBasis::Legendre(d) => Some(d),
        FluxBasis::Nodal => None,
    };
    json!({
        "regularization": c.regularization,
        "degree": degree,
        "misfit": c.misfit,
        "trace_residual": c.trace_residual,
        "delta": s.delta,
        "condition": c.condition,
        "gamma_trace_error": err,
    })
}

pub fn run(run: &mut Run, g: &Global, cmd: InvertCommand) -> Result<()> {
    match cmd {
        InvertCommand::Complete(a) => {
            let s = synthetic(run, g, &a)?;
            let c = complete(run, &s, &a)?;
            let (t, tc) = (s.u.trace(&s.mesh), c.u.trace(&s.mesh));
            let mut csv = String::from("k,s,x,y,gamma,u,u_completed\n");
            for k in 0..s.mesh.num_boundary() {
                let p = s.mesh.boundary_point(k);
                writeln!(
                    csv,
                    "{k},{},{},{},{},{},{}",
                    num(s.mesh.arclength()[k]),
                    num(p.x),
                    num(p.y),
                    u8::from(s.spec.partition.in_gamma(k)),
                    num(t.values()[k]),
                    num(tc.values()[k])
                )
                .unwrap();
            }
            run.write("completed.csv", &nodal_csv(&s.mesh, "u", c.u.values()))?;
            run.write("boundary.csv", &csv)?;
            run.write_json("summary.json", &completion_summary(&s, &c))
        }
        InvertCommand::Recover { data: a, floor } => {
            let s = synthetic(run, g, &a)?;
            let (r, summary) = if a.noise > 0.0 || a.alpha.is_some() {
                let c = complete(run, &s, &a)?;
                let r = run.stage("recover", || recover_from_cauchy(&s.mesh, &s.spec.sigma, &s.spec.partition, &c, floor))?;
                (r, completion_summary(&s, &c))
            } else {
                let r = run.stage("recover", || recover_robin(&s.mesh, &s.u, &s.spec.sigma, &s.spec.partition, floor))?;
                (r, json!({}))
            };
            let mut csv = String::from("k,s,x,y,lambda,lambda_hat,masked\n");
            for k in s.spec.partition.gamma_nodes() {
                let p = s.mesh.boundary_point(k);
                writeln!(
                    csv,
                    "{k},{},{},{},{},{},{}",
                    num(s.mesh.arclength()[k]),
                    num(p.x),
                    num(p.y),
                    num(s.spec.lambda.values()[k]),
                    num(r.lambda_hat.values()[k]),
                    u8::from(r.mask[k])
                )
                .unwrap();
            }
            run.write("lambda.csv", &csv)?;
            run.write_json(
                "summary.json",
                &json!({
                    "relative_error": r.relative_error(&s.mesh, &s.spec.partition, &s.spec.lambda),
                    "masked_fraction": r.masked_fraction(&s.mesh, &s.spec.partition),
                    "floor": floor,
                    "completion": summary,
                }),
            )
        }
        InvertCommand::Gap { spec, other, symmetric } => {
            let (mesh, s1) = build(run, g, &spec)?;
            let p2 = load_problem(run, g, &other)?;
            let s2 = p2.spec_on(&mesh)?;
            let norm = if symmetric { GapNormalization::Symmetric } else { GapNormalization::First };
            let gap = run.stage("gap", || uniqueness_gap_with(&s1, &s2, &mesh, norm))?;
            let floor = residual_floor(&s1, &mesh)?;
            run.write_json(
                "summary.json",
                &json!({ "gap": gap, "floor": floor, "exceeds_floor": gap > 10.0 * floor, "symmetric": symmetric }),
            )
        }
        InvertCommand::Suite { config } => {
            let c = load_experiment(run, g, &config)?;
            let report = run.stage("experiment", || run_uniqueness_experiment(&c))?;
            write_report(run, "report", &report)
        }
    }
}

fn load_experiment(run: &mut Run, g: &Global, path: &Path) -> Result<ExperimentConfig> {
    let text = run.read_input(path)?;
    let mut c = ExperimentConfig::from_toml(&text)?;
    apply_mesh_flags(&mut c.problem, g);
    c.seed = g.seed.unwrap_or(c.seed);
    run.set_seed(c.seed);
    Ok(c)
}

fn write_report(run: &mut Run, stem: &str, report: &ExperimentReport) -> Result<()> {
    run.write(&format!("{stem}.csv"), &report.to_csv())?;
    let mut trend = String::from("measure,gap\n");
    for t in &report.trend {
        writeln!(trend, "{},{}", num(t.measure), num(t.gap)).unwrap();
    }
    run.write(&format!("{stem}_trend.csv"), &trend)?;
    run.write_json(&format!("{stem}.json"), report)
}

/// The anisotropic variant of the default suite: σ = diag(1, 4) on the unit
/// square, carried through the Beltrami reduction.
fn anisotropic_suite(base: &ExperimentConfig) -> ExperimentConfig {
    let mut c = base.clone();
    c.problem.domain = DomainConfig::Rectangle { width: 1.0, height: 1.0 };
    c.problem.sigma = SigmaConfig::Matrix { s11: 1.0, s12: 0.0, s22: 4.0 };
    c.perturbation.sizes = vec![0, 2, 4, 8];
    c
}

pub fn suite(run: &mut Run, g: &Global, config: Option<&Path>) -> Result<()> {
    let base = match config {
        Some(path) => load_experiment(run, g, path)?,
        None => {
            let mut c = ExperimentConfig::default_suite();
            apply_mesh_flags(&mut c.problem, g);
            c.seed = g.seed.unwrap_or(0);
            c
        }
    };
    let aniso = anisotropic_suite(&base);
    let iso_report = run.stage("isotropic", || run_uniqueness_experiment(&base))?;
    let aniso_report = run.stage("beltrami", || run_uniqueness_experiment(&aniso))?;
    write_report(run, "report", &iso_report)?;
    write_report(run, "report_beltrami", &aniso_report)?;
    let flags = |r: &ExperimentReport| {
        json!({
            "route": r.route,
            "cases": r.cases.len(),
            "all_gaps_positive": r.all_gaps_positive,
            "identical_at_floor": r.identical_at_floor,
            "gap_monotone": r.gap_monotone,
        })
    };
    run.write_json("summary.json", &json!({ "isotropic": flags(&iso_report), "beltrami": flags(&aniso_report) }))
}
