use crate::forward::{build, nodal_csv};
use crate::run::{num, Run};
use crate::Global;
use anyhow::Result;
use clap::{Args, Subcommand};
use robinucq_core::anisotropic::{mu1, pushforward_conductivity, sample_mu1, solve_beltrami, BeltramiGrid, BeltramiMap};
use robinucq_core::geometry::write_mesh;
use serde_json::json;
use std::fmt::Write as _;
use std::path::PathBuf;

#[derive(Args)]
pub struct IsoArgs {
    #[arg(long, visible_alias = "config")]
    pub spec: PathBuf,
    /// Beltrami grid resolution n (n × n cells over twice the bounding box).
    #[arg(long, default_value_t = 128)]
    pub grid: usize,
}

#[derive(Subcommand)]
pub enum IsoCommand {
    /// Beltrami coefficient μ₁ of σ, on the nodes and on the grid.
    Mu1(IsoArgs),
    /// Solve the Beltrami equation for the isothermal map Θ.
    Solve(IsoArgs),
    /// Push σ forward to the isotropic σ̃ on Θ(Ω).
    Pushforward(IsoArgs),
}

fn solve_map(run: &mut Run, g: &Global, a: &IsoArgs) -> Result<(robinucq_core::Mesh, robinucq_core::fem::RobinSpec, BeltramiMap)> {
    let (mesh, spec) = build(run, g, &a.spec)?;
    let grid = BeltramiGrid::covering(mesh.domain(), a.grid)?;
    let mu = run.stage("sample", || sample_mu1(&mesh, &spec.sigma, &grid))?;
    let map = run.stage("beltrami", || solve_beltrami(&mu))?;
    Ok((mesh, spec, map))
}

fn map_summary(map: &BeltramiMap) -> serde_json::Value {
    json!({
        "k_bound": map.k_bound,
        "residual": map.residual,
        "iterations": map.iterations,
        "converged": map.converged,
    })
}

pub fn run(run: &mut Run, g: &Global, cmd: IsoCommand) -> Result<()> {
    match cmd {
        IsoCommand::Mu1(a) => {
            let (mesh, spec) = build(run, g, &a.spec)?;
            let nodal = run.stage("mu1", || mu1(&spec.sigma))?;
            let grid = BeltramiGrid::covering(mesh.domain(), a.grid)?;
            let field = run.stage("sample", || sample_mu1(&mesh, &spec.sigma, &grid))?;
            let mut csv = String::from("node,x,y,re_mu,im_mu\n");
            for (i, (p, m)) in mesh.nodes().iter().zip(nodal.values()).enumerate() {
                writeln!(csv, "{i},{},{},{},{}", num(p.x), num(p.y), num(m.re), num(m.im)).unwrap();
            }
            run.write("mu1.csv", &csv)?;
            run.write("mu1.grid", &field.to_text())?;
            run.write_json("summary.json", &json!({ "k": nodal.max_abs(), "grid_k": field.max_abs(), "grid": a.grid }))
        }
        IsoCommand::Solve(a) => {
            let (_, _, map) = solve_map(run, g, &a)?;
            if !map.converged {
                anyhow::bail!(robinucq_core::Error::NoConvergence { iterations: map.iterations, residual: map.residual });
            }
            run.write("beltrami.map", &map.to_text())?;
            run.write_json("summary.json", &map_summary(&map))
        }
        IsoCommand::Pushforward(a) => {
            let (mesh, spec, map) = solve_map(run, g, &a)?;
            let push = run.stage("pushforward", || pushforward_conductivity(&mesh, &spec.sigma, &map))?;
            let sigma: Vec<f64> = (0..push.image.num_nodes()).map(|i| push.sigma_tilde.scalar_at(i)).collect();
            run.write("image_mesh.txt", &write_mesh(&push.image))?;
            run.write("sigma_tilde.csv", &nodal_csv(&push.image, "sigma_tilde", &sigma))?;
            let mut summary = map_summary(&map);
            summary["matrix_discrepancy"] = json!(push.matrix_discrepancy);
            summary["det_discrepancy"] = json!(push.det_discrepancy);
            summary["inversion_error"] = json!(push.inversion_error);
            run.write_json("summary.json", &summary)
        }
    }
}
