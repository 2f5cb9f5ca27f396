use crate::run::{num, Run};
use crate::Global;
use anyhow::Result;
use clap::Subcommand;
use robinucq_core::conformal::{a2_of_derivative, schwarz_christoffel, ConformalMap};
use robinucq_core::disk_hardy::{a2_constant, conjugate_function, nodes, outer_function, CircleSeries};
use robinucq_core::problem::DomainConfig;
use robinucq_core::Complex64;
use serde_json::json;
use std::f64::consts::TAU;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

#[derive(Subcommand)]
pub enum HardyCommand {
    /// Conjugate function of a real series (cos θ ↦ sin θ).
    Conjugate {
        #[arg(long)]
        series: PathBuf,
    },
    /// Outer function of a positive series.
    Outer {
        #[arg(long)]
        series: PathBuf,
    },
    /// A₂ constant of a positive weight given as a series.
    A2 {
        #[arg(long)]
        series: PathBuf,
    },
}

#[derive(Subcommand)]
pub enum ConformalCommand {
    /// Fit the Schwarz–Christoffel map onto the `[domain]` of a file.
    Fit {
        #[arg(long, visible_alias = "config")]
        spec: PathBuf,
    },
    /// Boundary correspondence of a fitted map at offset equispaced angles.
    Eval {
        #[arg(long)]
        map: PathBuf,
        #[arg(long, default_value_t = 256)]
        samples: usize,
    },
    /// A₂ constants of |φ′| and 1/|φ′| on the circle.
    A2 {
        #[arg(long)]
        map: PathBuf,
        #[arg(long, default_value_t = 1024)]
        samples: usize,
    },
}

fn read_series(run: &mut Run, path: &Path) -> Result<CircleSeries> {
    let text = run.read_input(path)?;
    Ok(CircleSeries::from_text(&text)?)
}

fn real_table(order: usize, values: &[f64]) -> String {
    let mut out = String::from("theta,value\n");
    for (t, v) in nodes(order).iter().zip(values) {
        writeln!(out, "{},{}", num(*t), num(*v)).unwrap();
    }
    out
}

pub fn hardy(run: &mut Run, cmd: HardyCommand) -> Result<()> {
    match cmd {
        HardyCommand::Conjugate { series } => {
            let s = read_series(run, &series)?;
            let c = run.stage("conjugate", || conjugate_function(&s))?;
            run.write("conjugate.series", &c.to_text())?;
            run.write("conjugate.csv", &real_table(c.order(), &c.real_samples()))?;
            run.write_json("summary.json", &json!({ "order": c.order(), "l2_norm": c.l2_norm() }))
        }
        HardyCommand::Outer { series } => {
            let s = read_series(run, &series)?;
            let h = s.real_samples();
            let e = run.stage("outer", || outer_function(&h))?;
            let modulus: Vec<f64> = e.series().samples().iter().map(|z| z.norm()).collect();
            run.write("outer.series", &e.series().to_text())?;
            run.write("outer.csv", &real_table(e.series().order(), &modulus))?;
            let at0 = e.eval(Complex64::new(0.0, 0.0))?;
            let mean_log = h.iter().map(|v| v.ln()).sum::<f64>() / h.len() as f64;
            run.write_json(
                "summary.json",
                &json!({ "order": e.series().order(), "e0_re": at0.re, "e0_im": at0.im, "exp_mean_log": mean_log.exp() }),
            )
        }
        HardyCommand::A2 { series } => {
            let s = read_series(run, &series)?;
            let w = s.real_samples();
            let a2 = run.stage("a2", || a2_constant(&w))?;
            run.write("weight.csv", &real_table(s.order(), &w))?;
            run.write_json("summary.json", &json!({ "a2": a2, "samples": w.len() }))
        }
    }
}

fn read_map(run: &mut Run, path: &Path) -> Result<ConformalMap> {
    let text = run.read_input(path)?;
    Ok(ConformalMap::from_text(&text)?)
}

pub fn conformal(run: &mut Run, _g: &Global, cmd: ConformalCommand) -> Result<()> {
    match cmd {
        ConformalCommand::Fit { spec } => {
            let text = run.read_input(&spec)?;
            let domain = DomainConfig::from_toml(&text)?.build()?;
            let map = run.stage("fit", || schwarz_christoffel(&domain))?;
            run.write("map.txt", &map.to_text())?;
            let fitted = map.vertices();
            let vertex_error = fitted
                .iter()
                .zip(domain.vertices())
                .map(|(a, b)| a.dist(*b))
                .fold(0.0, f64::max);
            run.write_json(
                "summary.json",
                &json!({
                    "vertices": domain.len(),
                    "vertex_error": vertex_error,
                    "area": domain.area(),
                    "area_integral": map.area_integral(),
                    "perimeter": domain.perimeter(),
                    "map_perimeter": map.perimeter(),
                }),
            )
        }
        ConformalCommand::Eval { map, samples } => {
            let m = read_map(run, &map)?;
            if samples == 0 {
                anyhow::bail!(robinucq_core::Error::InvalidInput("--samples must be positive".into()));
            }
            let mut csv = String::from("theta,x,y,speed\n");
            run.stage("eval", || -> Result<()> {
                for j in 0..samples {
                    let t = TAU * (j as f64 + 0.5) / samples as f64;
                    let z = m.boundary_point(t)?;
                    writeln!(csv, "{},{},{},{}", num(t), num(z.re), num(z.im), num(m.boundary_speed(t)?)).unwrap();
                }
                Ok(())
            })?;
            run.write("boundary.csv", &csv)?;
            run.write_json("summary.json", &json!({ "samples": samples, "perimeter": m.perimeter() }))
        }
        ConformalCommand::A2 { map, samples } => {
            let m = read_map(run, &map)?;
            let (a, b) = run.stage("a2", || a2_of_derivative(&m, samples))?;
            run.write_json("summary.json", &json!({ "samples": samples, "a2_derivative": a, "a2_reciprocal": b }))
        }
    }
}
