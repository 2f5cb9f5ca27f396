use crate::run::{num, Run};
use crate::{Global, SpecArg};
use anyhow::Result;
use robinucq_core::factorization::{continuation_family, rolle_zero_set, similarity_factorize, vanishing_set};
use robinucq_core::fem::{flux_balance, interior_residual, normal_derivative, solve_robin, RobinSpec, ScalarField};
use robinucq_core::geometry::write_mesh;
use robinucq_core::problem::RobinProblem;
use robinucq_core::Mesh;
use serde_json::json;
use std::fmt::Write as _;
use std::path::Path;

/// Reads a problem file and applies `--mesh-h` and `--refine`.
pub fn load_problem(run: &mut Run, g: &Global, path: &Path) -> Result<RobinProblem> {
    let text = run.read_input(path)?;
    let mut p = RobinProblem::from_toml(&text)?;
    apply_mesh_flags(&mut p, g);
    Ok(p)
}

pub fn apply_mesh_flags(p: &mut RobinProblem, g: &Global) {
    if let Some(h) = g.mesh_h {
        p.mesh.h = h;
    }
    p.mesh.h /= 2f64.powi(g.refine as i32);
}

pub fn build(run: &mut Run, g: &Global, path: &Path) -> Result<(Mesh, RobinSpec)> {
    let p = load_problem(run, g, path)?;
    Ok(run.stage("mesh", || p.build())?)
}

pub fn nodal_csv(mesh: &Mesh, name: &str, u: &[f64]) -> String {
    let mut out = format!("node,x,y,{name}\n");
    for (i, (p, v)) in mesh.nodes().iter().zip(u).enumerate() {
        writeln!(out, "{i},{},{},{}", num(p.x), num(p.y), num(*v)).unwrap();
    }
    out
}

pub fn mesh(run: &mut Run, g: &Global, a: &SpecArg) -> Result<()> {
    let p = load_problem(run, g, &a.spec)?;
    let mesh = run.stage("mesh", || p.build_mesh())?;
    run.write("mesh.txt", &write_mesh(&mesh))?;
    run.write_json(
        "summary.json",
        &json!({
            "nodes": mesh.num_nodes(),
            "triangles": mesh.triangles().len(),
            "boundary_nodes": mesh.num_boundary(),
            "h": mesh.h(),
            "area": mesh.area(),
            "perimeter": mesh.perimeter(),
        }),
    )
}

pub fn solve(run: &mut Run, g: &Global, a: &SpecArg) -> Result<()> {
    let (mesh, spec) = build(run, g, &a.spec)?;
    let u = run.stage("solve", || solve_robin(&spec, &mesh))?;
    let flux = normal_derivative(&mesh, &u, &spec.sigma)?;
    let tr = u.trace(&mesh);
    run.write("nodal.csv", &nodal_csv(&mesh, "u", u.values()))?;
    let mut b = String::from("k,s,x,y,gamma,lambda,g,u,dn_u\n");
    for k in 0..mesh.num_boundary() {
        let p = mesh.boundary_point(k);
        writeln!(
            b,
            "{k},{},{},{},{},{},{},{},{}",
            num(mesh.arclength()[k]),
            num(p.x),
            num(p.y),
            u8::from(spec.partition.in_gamma(k)),
            num(spec.lambda.values()[k]),
            num(spec.g.values()[k]),
            num(tr.values()[k]),
            num(flux.values()[k])
        )
        .unwrap();
    }
    run.write("boundary.csv", &b)?;
    let (robin, neumann) = flux_balance(&mesh, &spec, &u);
    run.write_json(
        "summary.json",
        &json!({
            "nodes": mesh.num_nodes(),
            "h": mesh.h(),
            "robin_flux": robin,
            "neumann_flux": neumann,
            "interior_residual": interior_residual(&mesh, &u, &spec.sigma)?,
            "w12_norm": u.w12_norm(&mesh),
        }),
    )
}

fn forward_solution(run: &mut Run, g: &Global, path: &Path) -> Result<(Mesh, RobinSpec, ScalarField)> {
    let (mesh, spec) = build(run, g, path)?;
    let u = run.stage("solve", || solve_robin(&spec, &mesh))?;
    Ok((mesh, spec, u))
}

pub fn factorize(run: &mut Run, g: &Global, a: &SpecArg) -> Result<()> {
    let (mesh, spec, u) = forward_solution(run, g, &a.spec)?;
    let f = run.stage("factorize", || similarity_factorize(&mesh, &u, &spec.sigma))?;
    run.write("factorization.csv", &f.to_csv(&mesh))?;
    run.write_json(
        "summary.json",
        &json!({
            "dbar_residual": f.dbar_residual,
            "reconstruction_error": f.reconstruction_error,
            "conjugate_defect": f.conjugate_defect,
            "max_exp_neg_psi": f.max_exp_neg_psi,
            "trivial": f.trivial,
        }),
    )
}

pub fn probe(run: &mut Run, g: &Global, a: &SpecArg, levels: usize) -> Result<()> {
    let (mesh, spec) = build(run, g, &a.spec)?;
    let gamma0: Vec<bool> = spec.partition.gamma_flags().iter().map(|f| !f).collect();
    let reports = run.stage("probe", || continuation_family(&mesh, &spec, &gamma0, levels))?;
    let mut csv = String::from("level,eps1,eps2,ratio,verdict\n");
    for (k, r) in reports.iter().enumerate() {
        let verdict = serde_json::to_value(r.verdict)?;
        writeln!(csv, "{k},{},{},{},{}", num(r.eps1), num(r.eps2), num(r.ratio), verdict.as_str().unwrap_or("")).unwrap();
    }
    run.write("probe.csv", &csv)?;
    run.write_json("summary.json", &reports)
}

pub fn rolle(run: &mut Run, g: &Global, a: &SpecArg, tol: Option<f64>) -> Result<()> {
    let (mesh, _, u) = forward_solution(run, g, &a.spec)?;
    let tr = u.trace(&mesh);
    let tol = tol.unwrap_or_else(|| 1e-6 * tr.values().iter().fold(0.0f64, |m, v| m.max(v.abs())));
    let b = vanishing_set(&tr, tol);
    let set = run.stage("rolle", || rolle_zero_set(&mesh, &tr, &b, tol))?;
    let mut csv = String::from("k,s,x,y\n");
    for &k in &set.nodes {
        let p = mesh.boundary_point(k);
        writeln!(csv, "{k},{},{},{}", num(mesh.arclength()[k]), num(p.x), num(p.y)).unwrap();
    }
    run.write("rolle.csv", &csv)?;
    run.write_json(
        "summary.json",
        &json!({
            "tol": tol,
            "vanishing_nodes": b.iter().filter(|&&x| x).count(),
            "rolle_nodes": set.len(),
            "diagnostic": set.diagnostic,
        }),
    )
}
