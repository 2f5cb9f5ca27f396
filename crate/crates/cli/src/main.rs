//! `robinucq`: file-driven experiments on the conductivity equation.
//!
//! Every run writes its outputs and a `manifest.json` into `--out`. Exit
//! codes: 0 success, 1 bad input or usage, 2 numerical failure.

mod analysis;
mod forward;
mod invert;
mod iso;
mod run;

use clap::{Args, Parser, Subcommand, ValueEnum};
use run::Run;
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "robinucq", version, about = "Conductivity-equation workbench: forward solves, factorization, Hardy-space tools, Beltrami reduction and inverse Robin recovery")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    global: Global,
}

#[derive(Args, Clone)]
pub struct Global {
    /// Output directory.
    #[arg(long, global = true, default_value = "out")]
    pub out: PathBuf,
    /// Seed for every random choice [default: 0, or the seed of an
    /// experiment file].
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Overrides the mesh size of the problem file.
    #[arg(long, global = true)]
    pub mesh_h: Option<f64>,
    /// Halves the mesh size K times.
    #[arg(long, global = true, default_value_t = 0)]
    pub refine: u32,
    #[arg(long, global = true, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
}

#[derive(Clone, Copy, ValueEnum)]
pub enum Format {
    Csv,
}

#[derive(Args)]
pub struct SpecArg {
    /// Problem file (TOML).
    #[arg(long, visible_alias = "config")]
    pub spec: PathBuf,
}

#[derive(Subcommand)]
enum Command {
    /// Triangulate the domain of a problem file.
    Mesh(SpecArg),
    /// Solve the forward Robin problem.
    Solve(SpecArg),
    /// Similarity factorization ∂u = e^Ψ Φ of the forward solution.
    Factorize(SpecArg),
    /// Unique-continuation probe on Γ₀ for the family with data 2^{−k} g.
    ProbeContinuation {
        #[command(flatten)]
        spec: SpecArg,
        #[arg(long, default_value_t = 4)]
        levels: usize,
    },
    /// Rolle zero set of the boundary trace.
    Rolle {
        #[command(flatten)]
        spec: SpecArg,
        /// Vanishing tolerance; default 1e-6 · max |u| on ∂Ω.
        #[arg(long)]
        tol: Option<f64>,
    },
    /// Fourier-side tools on the unit circle.
    #[command(subcommand)]
    Hardy(analysis::HardyCommand),
    /// Schwarz–Christoffel maps.
    #[command(subcommand)]
    Conformal(analysis::ConformalCommand),
    /// Isothermal reduction of anisotropic conductivities.
    #[command(subcommand)]
    Iso(iso::IsoCommand),
    /// Data completion, Robin recovery and uniqueness experiments.
    #[command(subcommand)]
    Invert(invert::InvertCommand),
    /// Default disk-polygon uniqueness suite plus its anisotropic variant.
    Suite {
        /// Experiment file replacing the built-in isotropic suite.
        #[arg(long)]
        config: Option<PathBuf>,
    },
}

fn configure_threads() -> Result<(), String> {
    let Ok(value) = std::env::var("ROBINUCQ_THREADS") else {
        return Ok(());
    };
    let n: usize = value
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| format!("ROBINUCQ_THREADS must be a positive integer, got {value:?}"))?;
    rayon::ThreadPoolBuilder::new().num_threads(n).build_global().map_err(|e| e.to_string())
}

/// 2 for numerical failures of the core, 1 for everything else.
fn exit_code(err: &anyhow::Error) -> i32 {
    match err.chain().find_map(|e| e.downcast_ref::<robinucq_core::Error>()) {
        Some(e) if e.is_numerical() => 2,
        _ => 1,
    }
}

fn main() -> ExitCode {
    let argv: Vec<String> = std::env::args().collect();
    let cli = match Cli::try_parse_from(&argv) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    if let Err(e) = configure_threads() {
        eprintln!("error: {e}");
        return ExitCode::from(1);
    }
    let g = cli.global.clone();
    let mut run = Run::new(g.out.clone(), g.seed.unwrap_or(0), argv);
    let result = match cli.command {
        Command::Mesh(a) => forward::mesh(&mut run, &g, &a),
        Command::Solve(a) => forward::solve(&mut run, &g, &a),
        Command::Factorize(a) => forward::factorize(&mut run, &g, &a),
        Command::ProbeContinuation { spec, levels } => forward::probe(&mut run, &g, &spec, levels),
        Command::Rolle { spec, tol } => forward::rolle(&mut run, &g, &spec, tol),
        Command::Hardy(c) => analysis::hardy(&mut run, c),
        Command::Conformal(c) => analysis::conformal(&mut run, &g, c),
        Command::Iso(c) => iso::run(&mut run, &g, c),
        Command::Invert(c) => invert::run(&mut run, &g, c),
        Command::Suite { config } => invert::suite(&mut run, &g, config.as_deref()),
    };
    let (code, message) = match &result {
        Ok(()) => (0, None),
        Err(e) => (exit_code(e), Some(format!("{e:#}"))),
    };
    if let Some(m) = &message {
        eprintln!("error: {m}");
    }
    if let Err(e) = run.finish(code, message) {
        eprintln!("error: {e:#}");
        return ExitCode::from(1);
    }
    ExitCode::from(code as u8)
}
