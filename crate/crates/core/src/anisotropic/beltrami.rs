use super::grid::{read_block, BeltramiGrid, Fft2, GridField};
use crate::error::{Error, Result};
use crate::factorization::ComplexField;
use crate::fem::{Conductivity, Sym2};
use crate::geometry::{Locator, Mesh, Point};
use num_complex::Complex64;
use rayon::prelude::*;
use std::f64::consts::PI;
use std::fmt::Write as _;

const MAX_ITERATIONS: usize = 200;
const TOLERANCE: f64 = 1e-10;
/// The blend from σ to I starts at this fraction of the box half-width.
const BLEND_START: f64 = 0.75;

/// μ₁ = (−σ₁₁ + σ₂₂ − 2iσ₁₂)/(σ₁₁ + σ₂₂ + 2√det σ) of one SPD matrix.
pub fn mu1_of(s: Sym2) -> Result<Complex64> {
    if ![s.s11, s.s12, s.s22].iter().all(|v| v.is_finite()) || !(s.s11 > 0.0) || !(s.det() > 0.0) {
        return Err(Error::InvalidInput(format!(
            "σ = [[{}, {}], [{}, {}]] is not positive definite",
            s.s11, s.s12, s.s12, s.s22
        )));
    }
    Ok(Complex64::new(s.s22 - s.s11, -2.0 * s.s12) / (s.trace() + 2.0 * s.det().sqrt()))
}

/// Nodal μ₁ of a conductivity; zero exactly where σ is scalar.
pub fn mu1(sigma: &Conductivity) -> Result<ComplexField> {
    let values = (0..sigma.len())
        .map(|i| mu1_of(sigma.matrix_at(i)).map_err(|e| Error::Ellipticity { node: i, detail: e.to_string() }))
        .collect::<Result<Vec<_>>>()?;
    ComplexField::new(values)
}

/// 1 up to `BLEND_START`, then a quintic (C²) step down to 0 at 1.
fn blend(t: f64) -> f64 {
    let s = ((t.abs() - BLEND_START) / (1.0 - BLEND_START)).clamp(0.0, 1.0);
    1.0 - s * s * s * (10.0 - 15.0 * s + 6.0 * s * s)
}

/// μ₁ of σ extended to the grid box: σ at the closest point of Ω̄, blended
/// to I by χ(x)χ(y) over the outer quarter of the box half-width.
pub fn sample_mu1(mesh: &Mesh, sigma: &Conductivity, grid: &BeltramiGrid) -> Result<GridField> {
    if sigma.len() != mesh.num_nodes() {
        return Err(Error::Mismatch(format!(
            "conductivity has {} values, mesh has {} nodes",
            sigma.len(),
            mesh.num_nodes()
        )));
    }
    let loc = Locator::new(mesh);
    let entries: Vec<[f64; 3]> = (0..mesh.num_nodes())
        .map(|i| {
            let s = sigma.matrix_at(i);
            [s.s11, s.s12, s.s22]
        })
        .collect();
    let column = |c: usize| entries.iter().map(|e| e[c]).collect::<Vec<f64>>();
    let (s11, s12, s22) = (column(0), column(1), column(2));
    let domain = mesh.domain();
    let center = grid.center();
    let half = 0.5 * grid.side();
    let values = grid
        .points()
        .into_par_iter()
        .map(|p| {
            let q = if domain.contains(p) { p } else { domain.closest_boundary_point(p) };
            let chi = blend((p.x - center.x) / half) * blend((p.y - center.y) / half);
            let s = Sym2::new(
                1.0 + chi * (loc.interpolate(&s11, q) - 1.0),
                chi * loc.interpolate(&s12, q),
                1.0 + chi * (loc.interpolate(&s22, q) - 1.0),
            );
            mu1_of(s)
        })
        .collect::<Result<Vec<_>>>()?;
    GridField::new(*grid, values)
}

/// Normalized solution Θ(z) = z + C[h] of ∂̄Θ = μ∂Θ on a grid.
#[derive(Debug, Clone)]
pub struct BeltramiMap {
    mu: GridField,
    h: GridField,
    /// Θ(z) − z at the grid points.
    displacement: GridField,
    d_theta: GridField,
    dbar_theta: GridField,
    /// sup |μ|
    pub k_bound: f64,
    /// ‖∂̄Θ − μ∂Θ‖₂ / ‖∂Θ‖₂ with centred differences of Θ over interior grid points.
    pub residual: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Relative update ‖h_{k+1} − h_k‖/‖h_{k+1}‖ of each Neumann step.
    pub updates: Vec<f64>,
}

struct Kernels {
    n: usize,
    fft: Fft2,
    cauchy: Vec<Complex64>,
    beurling: Vec<Complex64>,
}

impl Kernels {
    /// Spectra of the sampled plane kernels 1/(πz) and −1/(πz²) on the
    /// zero-padded 2n grid, so that products are linear convolutions.
    fn new(grid: &BeltramiGrid) -> Self {
        let n = grid.n();
        let m = 2 * n;
        let dx = grid.spacing();
        let fft = Fft2::new(m);
        let offset = |a: usize| if a < n { a as f64 } else { a as f64 - m as f64 };
        let mut cauchy = vec![Complex64::new(0.0, 0.0); m * m];
        let mut beurling = vec![Complex64::new(0.0, 0.0); m * m];
        for b in 0..m {
            for a in 0..m {
                if a == 0 && b == 0 {
                    continue;
                }
                let d = Complex64::new(offset(a) * dx, offset(b) * dx);
                cauchy[b * m + a] = dx * dx / (PI * d);
                beurling[b * m + a] = -dx * dx / (PI * d * d);
            }
        }
        fft.forward(&mut cauchy);
        fft.forward(&mut beurling);
        Kernels { n, fft, cauchy, beurling }
    }

    fn apply(&self, kernel: &[Complex64], f: &[Complex64]) -> Vec<Complex64> {
        let (n, m) = (self.n, 2 * self.n);
        let mut buf = vec![Complex64::new(0.0, 0.0); m * m];
        for j in 0..n {
            buf[j * m..j * m + n].copy_from_slice(&f[j * n..(j + 1) * n]);
        }
        self.fft.forward(&mut buf);
        buf.par_iter_mut().zip(kernel.par_iter()).for_each(|(a, k)| *a *= k);
        self.fft.inverse(&mut buf);
        (0..n * n).map(|k| buf[(k / n) * m + k % n]).collect()
    }
}

fn l2(v: &[Complex64]) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// Centred differences in the interior, one-sided on the edges; returns (∂f, ∂̄f).
fn wirtinger(f: &GridField) -> (GridField, GridField) {
    let n = f.grid.n();
    let dx = f.grid.spacing();
    let diff = |lo: Complex64, hi: Complex64, span: f64| (hi - lo) / (span * dx);
    let mut d = Vec::with_capacity(n * n);
    let mut dbar = Vec::with_capacity(n * n);
    for j in 0..n {
        for i in 0..n {
            let (il, ih) = (i.saturating_sub(1), (i + 1).min(n - 1));
            let (jl, jh) = (j.saturating_sub(1), (j + 1).min(n - 1));
            let fx = diff(f.at(il, j), f.at(ih, j), (ih - il) as f64);
            let fy = diff(f.at(i, jl), f.at(i, jh), (jh - jl) as f64);
            let i_ = Complex64::i();
            d.push(0.5 * (fx - i_ * fy));
            dbar.push(0.5 * (fx + i_ * fy));
        }
    }
    (
        GridField { grid: f.grid, values: d },
        GridField { grid: f.grid, values: dbar },
    )
}

fn header<'a>(lines: &mut impl Iterator<Item = (usize, &'a str)>, key: &str) -> Result<(usize, Vec<String>)> {
    let perr = |line: usize, m: String| Error::Parse { line: line + 1, message: m };
    let (i, l) = lines.next().ok_or_else(|| perr(0, format!("missing `{key}` line")))?;
    let parts: Vec<String> = l.split_whitespace().map(String::from).collect();
    if parts.first().map(String::as_str) != Some(key) {
        return Err(perr(i, format!("expected `{key}`")));
    }
    Ok((i, parts[1..].to_vec()))
}

impl BeltramiMap {
    fn assemble(mu: GridField, h: GridField, displacement: GridField, iterations: usize, converged: bool, updates: Vec<f64>) -> Self {
        let grid = mu.grid;
        let (mut d_theta, dbar_theta) = wirtinger(&displacement);
        d_theta.values.iter_mut().for_each(|v| *v += 1.0);
        let n = grid.n();
        let (mut num, mut den) = (0.0, 0.0);
        for j in 1..n - 1 {
            for i in 1..n - 1 {
                let k = j * n + i;
                num += (dbar_theta.values[k] - mu.values[k] * d_theta.values[k]).norm_sqr();
                den += d_theta.values[k].norm_sqr();
            }
        }
        BeltramiMap {
            k_bound: mu.max_abs(),
            residual: (num / den).sqrt(),
            mu,
            h,
            displacement,
            d_theta,
            dbar_theta,
            iterations,
            converged,
            updates,
        }
    }

    /// Θ = identity on `grid`.
    pub fn identity(grid: BeltramiGrid) -> Self {
        let zero = GridField { grid, values: vec![Complex64::new(0.0, 0.0); grid.len()] };
        BeltramiMap::assemble(zero.clone(), zero.clone(), zero, 0, true, Vec::new())
    }

    /// Map with prescribed grid values of Θ; μ and h are read off by
    /// finite differences. Outside the grid hull the Cauchy sum of h is used,
    /// which is only meaningful for normalized maps.
    pub fn from_theta(theta: &GridField) -> Result<Self> {
        let grid = theta.grid;
        let displacement = GridField::new(
            grid,
            theta.values.iter().zip(grid.points()).map(|(t, p)| t - p.to_complex()).collect(),
        )?;
        let (d, dbar) = wirtinger(theta);
        let mu = d
            .values
            .iter()
            .zip(&dbar.values)
            .enumerate()
            .map(|(k, (a, b))| {
                if a.norm() <= b.norm() {
                    Err(Error::InvalidInput(format!("Θ is not sense preserving at grid index {k}")))
                } else {
                    Ok(b / a)
                }
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(BeltramiMap::assemble(GridField::new(grid, mu)?, dbar, displacement, 0, true, Vec::new()))
    }

    pub fn grid(&self) -> &BeltramiGrid {
        &self.mu.grid
    }

    pub fn mu(&self) -> &GridField {
        &self.mu
    }

    /// ∂̄Θ from the iteration.
    pub fn h(&self) -> &GridField {
        &self.h
    }

    /// Θ at the grid points.
    pub fn theta(&self) -> GridField {
        let grid = self.mu.grid;
        GridField {
            grid,
            values: self.displacement.values.iter().zip(grid.points()).map(|(d, p)| d + p.to_complex()).collect(),
        }
    }

    /// (∂Θ, ∂̄Θ) at the grid points by finite differences.
    pub fn wirtinger_derivatives(&self) -> (&GridField, &GridField) {
        (&self.d_theta, &self.dbar_theta)
    }

    /// Θ(z): bilinear inside the grid hull, the Cauchy sum z + C[h](z) outside.
    pub fn eval(&self, z: Point) -> Complex64 {
        if self.mu.grid.covers(z) {
            z.to_complex() + self.displacement.interpolate(z)
        } else {
            let grid = self.mu.grid;
            let zc = z.to_complex();
            let dx2 = grid.spacing() * grid.spacing();
            let sum: Complex64 = self
                .h
                .values
                .iter()
                .zip(grid.points())
                .filter(|(h, _)| h.norm_sqr() > 0.0)
                .map(|(h, p)| h / (zc - p.to_complex()))
                .sum();
            zc + sum * dx2 / PI
        }
    }

    /// (∂Θ, ∂̄Θ) at z, interpolated inside the grid hull and from the
    /// Cauchy sum outside.
    pub fn derivatives(&self, z: Point) -> (Complex64, Complex64) {
        if self.mu.grid.covers(z) {
            (self.d_theta.interpolate(z), self.dbar_theta.interpolate(z))
        } else {
            let grid = self.mu.grid;
            let zc = z.to_complex();
            let dx2 = grid.spacing() * grid.spacing();
            let sum: Complex64 = self
                .h
                .values
                .iter()
                .zip(grid.points())
                .filter(|(h, _)| h.norm_sqr() > 0.0)
                .map(|(h, p)| {
                    let d = zc - p.to_complex();
                    h / (d * d)
                })
                .sum();
            (Complex64::new(1.0, 0.0) - sum * dx2 / PI, Complex64::new(0.0, 0.0))
        }
    }

    /// Real Jacobian DΘ at z, rows (∂ₓ Re Θ, ∂ᵧ Re Θ) and (∂ₓ Im Θ, ∂ᵧ Im Θ).
    pub fn jacobian(&self, z: Point) -> [[f64; 2]; 2] {
        let (a, b) = self.derivatives(z);
        let cx = a + b;
        let cy = Complex64::i() * (a - b);
        [[cx.re, cy.re], [cx.im, cy.im]]
    }

    /// Θ⁻¹(ζ) by Newton iteration on the bilinear interpolant, seeded from
    /// the grid point whose image is closest to ζ.
    pub fn inverse(&self, zeta: Complex64) -> Result<Point> {
        let grid = self.mu.grid;
        let n = grid.n();
        let image = |i: usize, j: usize| grid.point(i, j).to_complex() + self.displacement.at(i, j);
        let (x, y) = grid.coords(Point::new(zeta.re, zeta.im));
        let clamp = |v: f64| (v.round().max(0.0) as usize).min(n - 1);
        let (mut i, mut j) = (clamp(x), clamp(y));
        loop {
            let mut best = ((image(i, j) - zeta).norm(), i, j);
            for (di, dj) in [(-1i64, 0i64), (1, 0), (0, -1), (0, 1), (-1, -1), (1, 1), (-1, 1), (1, -1)] {
                let (a, b) = (i as i64 + di, j as i64 + dj);
                if a < 0 || b < 0 || a >= n as i64 || b >= n as i64 {
                    continue;
                }
                let d = (image(a as usize, b as usize) - zeta).norm();
                if d < best.0 {
                    best = (d, a as usize, b as usize);
                }
            }
            if (best.1, best.2) == (i, j) {
                break;
            }
            (i, j) = (best.1, best.2);
        }
        let scale = grid.side();
        let mut z = grid.point(i, j);
        let mut r = self.eval(z) - zeta;
        for _ in 0..60 {
            if r.norm() <= 1e-13 * scale {
                return Ok(z);
            }
            let (_, dx, dy) = self.displacement.interpolate_with_gradient(z);
            let (jx, jy) = (Complex64::new(1.0, 0.0) + dx, Complex64::i() + dy);
            let det = jx.re * jy.im - jy.re * jx.im;
            if det.abs() < 1e-14 {
                break;
            }
            let sx = (jy.im * r.re - jy.re * r.im) / det;
            let sy = (-jx.im * r.re + jx.re * r.im) / det;
            let mut t = 1.0;
            loop {
                let trial = Point::new(z.x - t * sx, z.y - t * sy);
                let rt = self.eval(trial) - zeta;
                if rt.norm() < r.norm() {
                    z = trial;
                    r = rt;
                    break;
                }
                t *= 0.5;
                if t < 1e-6 {
                    return if r.norm() <= 1e-9 * scale {
                        Ok(z)
                    } else {
                        Err(Error::Numerical(format!("Θ⁻¹ stalled at residual {:e} for ζ = {zeta}", r.norm())))
                    };
                }
            }
        }
        if r.norm() <= 1e-9 * scale {
            Ok(z)
        } else {
            Err(Error::Numerical(format!("Θ⁻¹ did not converge for ζ = {zeta} (residual {:e})", r.norm())))
        }
    }

    /// Header with the iteration summary, then the μ, h and Θ − z grid blocks.
    pub fn to_text(&self) -> String {
        let mut out = String::from("# beltrami map\n");
        writeln!(out, "k_bound {:.17e}", self.k_bound).unwrap();
        writeln!(out, "residual {:.17e}", self.residual).unwrap();
        writeln!(out, "iterations {} {}", self.iterations, self.converged).unwrap();
        for (name, f) in [("mu", &self.mu), ("h", &self.h), ("displacement", &self.displacement)] {
            writeln!(out, "{name}").unwrap();
            out.push_str(&f.to_text());
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut lines = text
            .lines()
            .enumerate()
            .filter(|(_, l)| !l.trim().is_empty() && !l.trim_start().starts_with('#'));
        let perr = |line: usize, m: &str| Error::Parse { line: line + 1, message: m.to_string() };
        header(&mut lines, "k_bound")?;
        header(&mut lines, "residual")?;
        let (i, it) = header(&mut lines, "iterations")?;
        if it.len() != 2 {
            return Err(perr(i, "expected `iterations <count> <converged>`"));
        }
        let iterations: usize = it[0].parse().map_err(|_| perr(i, "bad iteration count"))?;
        let converged: bool = it[1].parse().map_err(|_| perr(i, "bad convergence flag"))?;
        let mut blocks = Vec::new();
        for name in ["mu", "h", "displacement"] {
            header(&mut lines, name)?;
            blocks.push(read_block(&mut lines)?);
        }
        if let Some((i, _)) = lines.next() {
            return Err(perr(i, "trailing content"));
        }
        let displacement = blocks.pop().unwrap();
        let h = blocks.pop().unwrap();
        let mu = blocks.pop().unwrap();
        if mu.grid != h.grid || mu.grid != displacement.grid {
            return Err(perr(0, "grid blocks disagree"));
        }
        Ok(BeltramiMap::assemble(mu, h, displacement, iterations, converged, Vec::new()))
    }
}

/// Solves h = μ(1 + B h) by Neumann iteration and returns Θ = z + C[h].
///
/// B and C are applied as linear convolutions with the sampled plane kernels
/// −1/(πz²) and 1/(πz), by FFT on the zero-padded grid. Stops when the
/// relative update drops below 1e-10 or after 200 steps; a capped run is
/// returned with `converged = false` and its residual.
pub fn solve_beltrami(mu: &GridField) -> Result<BeltramiMap> {
    let k = mu.max_abs();
    if !(k < 1.0) {
        return Err(Error::InvalidInput(format!("sup |μ| = {k} must be below 1")));
    }
    if k == 0.0 {
        let mut map = BeltramiMap::identity(mu.grid);
        map.mu = mu.clone();
        return Ok(map);
    }
    let kernels = Kernels::new(&mu.grid);
    let mut h: Vec<Complex64> = mu.values.clone();
    let mut updates = Vec::new();
    let mut converged = false;
    while updates.len() < MAX_ITERATIONS {
        let bh = kernels.apply(&kernels.beurling, &h);
        let next: Vec<Complex64> = mu.values.iter().zip(&bh).map(|(m, b)| m * (1.0 + b)).collect();
        let diff: Vec<Complex64> = next.iter().zip(&h).map(|(a, b)| a - b).collect();
        let update = l2(&diff) / l2(&next);
        updates.push(update);
        h = next;
        if update <= TOLERANCE {
            converged = true;
            break;
        }
    }
    let displacement = kernels.apply(&kernels.cauchy, &h);
    let grid = mu.grid;
    Ok(BeltramiMap::assemble(
        mu.clone(),
        GridField::new(grid, h)?,
        GridField::new(grid, displacement)?,
        updates.len(),
        converged,
        updates,
    ))
}
