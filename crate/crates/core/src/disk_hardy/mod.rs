//! Hardy-space tools on the unit disk, all working on the Fourier side.
//!
//! Boundary functions are [`CircleSeries`]. The conjugation operator is the
//! multiplier −i·sgn(k), the Poisson extension damps mode k by r^|k|, and
//! outer functions are built from the analytic completion of log h.
//! Integrals over 𝕋 use dm = dθ, so ‖1‖₂ = √(2π).

mod series;

pub use series::{nodes, CircleSeries};

use crate::error::{Error, Result};
use num_complex::Complex64;
use rayon::prelude::*;
use std::f64::consts::PI;

/// Default truncation order.
pub const DEFAULT_ORDER: usize = 256;

const HOLOMORPHIC_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DiskKind {
    /// Poisson extension of (possibly complex) boundary data.
    Harmonic,
    /// Boundary trace of a holomorphic function; c_k = 0 for k < 0.
    Holomorphic,
}

/// Function on the closed disk described by its boundary series.
#[derive(Debug, Clone)]
pub struct DiskFunction {
    series: CircleSeries,
    kind: DiskKind,
}

impl DiskFunction {
    pub fn harmonic(series: CircleSeries) -> Self {
        DiskFunction {
            series,
            kind: DiskKind::Harmonic,
        }
    }

    /// Accepts a series whose negative modes vanish to 1e-12 (relative) and
    /// projects them to exactly zero.
    pub fn holomorphic(mut series: CircleSeries) -> Result<Self> {
        let scale = series.coefficients().iter().map(|c| c.norm()).fold(0.0, f64::max);
        for k in 1..=series.order() as i64 {
            if series.coeff(-k).norm() > HOLOMORPHIC_TOL * scale.max(1.0) {
                return Err(Error::NotHolomorphic);
            }
            *series.coeff_mut(-k) = Complex64::new(0.0, 0.0);
        }
        Ok(DiskFunction {
            series,
            kind: DiskKind::Holomorphic,
        })
    }

    /// Polynomial Σ_{k≥0} a_k z^k.
    pub fn polynomial(coeffs: &[Complex64]) -> Self {
        let order = coeffs.len().saturating_sub(1);
        let modes: Vec<(i64, Complex64)> =
            coeffs.iter().enumerate().map(|(k, &c)| (k as i64, c)).collect();
        DiskFunction {
            series: CircleSeries::from_modes(order, &modes).expect("modes within order"),
            kind: DiskKind::Holomorphic,
        }
    }

    pub fn series(&self) -> &CircleSeries {
        &self.series
    }

    pub fn kind(&self) -> DiskKind {
        self.kind
    }

    /// Value at |z| ≤ 1 (the boundary value for |z| = 1).
    pub fn eval(&self, z: Complex64) -> Result<Complex64> {
        if z.norm() > 1.0 + 1e-14 {
            return Err(Error::OutOfDomain(format!("|z| = {} > 1", z.norm())));
        }
        Ok(eval_series(&self.series, z))
    }
}

fn eval_series(s: &CircleSeries, z: Complex64) -> Complex64 {
    let r = z.norm();
    let theta = z.arg();
    s.modes()
        .map(|(k, c)| c * r.powi(k.unsigned_abs() as i32) * Complex64::from_polar(1.0, k as f64 * theta))
        .sum()
}

/// P[ψ](z) = Σ c_k r^|k| e^{ikθ}.
pub fn poisson_extend(series: &CircleSeries, z: Complex64) -> Result<Complex64> {
    if !(z.norm() < 1.0) {
        return Err(Error::OutOfDomain(format!(
            "Poisson extension needs |z| < 1, got |z| = {}",
            z.norm()
        )));
    }
    Ok(eval_series(series, z))
}

/// Conjugate function ψ̃: multiplier −i·sgn(k), mean removed (v(0) = 0).
pub fn conjugate_function(series: &CircleSeries) -> Result<CircleSeries> {
    series.check_real(1e-12)?;
    let mut out = CircleSeries::zeros(series.order());
    for (k, c) in series.modes() {
        if k != 0 {
            *out.coeff_mut(k) = Complex64::new(0.0, -(k.signum() as f64)) * c;
        }
    }
    Ok(out)
}

/// Outer function E_h from positive samples of h at the 2N+1 nodes.
///
/// E_h = exp(G) with G the analytic completion of log h (G_0 = mean log h,
/// G_k = 2(log h)_k for k > 0). The returned series has order 2N; exp(G) is
/// sampled on the finer grid to keep aliasing out of the retained modes.
pub fn outer_function(samples: &[f64]) -> Result<DiskFunction> {
    for (index, &value) in samples.iter().enumerate() {
        if !(value > 0.0) || !value.is_finite() {
            return Err(Error::NonPositive { index, value });
        }
    }
    let logs: Vec<f64> = samples.iter().map(|h| h.ln()).collect();
    let l = CircleSeries::from_real_samples(&logs)?;
    let n = l.order();
    let mut g = CircleSeries::zeros(2 * n);
    *g.coeff_mut(0) = l.coeff(0);
    for k in 1..=n as i64 {
        *g.coeff_mut(k) = 2.0 * l.coeff(k);
    }
    let e: Vec<Complex64> = g.samples().iter().map(|z| z.exp()).collect();
    let mut es = CircleSeries::from_samples(&e)?;
    for k in 1..=es.order() as i64 {
        *es.coeff_mut(-k) = Complex64::new(0.0, 0.0);
    }
    Ok(DiskFunction {
        series: es,
        kind: DiskKind::Holomorphic,
    })
}

/// Hardy norm together with the per-radius circle means that produced it.
#[derive(Debug, Clone)]
pub struct HardyNorm {
    pub value: f64,
    /// `(ρ, ‖f_ρ‖_p)` for each supplied radius, sorted by ρ.
    pub by_radius: Vec<(f64, f64)>,
    /// Whether ‖f_ρ‖_p is non-decreasing in ρ, as subharmonicity requires.
    pub monotone: bool,
}

/// ‖f‖_{H^p}. For p = 2 this is the Parseval value; otherwise the largest
/// trapezoidal circle mean over `radii`.
pub fn hardy_norm(f: &DiskFunction, p: f64, radii: &[f64]) -> Result<HardyNorm> {
    if !(p >= 1.0) || !p.is_finite() {
        return Err(Error::InvalidInput(format!("exponent p must lie in [1, ∞), got {p}")));
    }
    if p == 2.0 && radii.is_empty() {
        return Ok(HardyNorm {
            value: f.series.l2_norm(),
            by_radius: Vec::new(),
            monotone: true,
        });
    }
    if f.kind != DiskKind::Holomorphic {
        return Err(Error::NotHolomorphic);
    }
    let mut rs = radii.to_vec();
    rs.sort_by(f64::total_cmp);
    if rs.iter().any(|&r| !(0.0..=1.0).contains(&r)) {
        return Err(Error::OutOfDomain("radii must lie in [0, 1]".into()));
    }
    let m = (8 * f.series.order() + 64).max(256);
    let by_radius: Vec<(f64, f64)> = rs
        .iter()
        .map(|&rho| {
            let sum: f64 = (0..m)
                .map(|j| {
                    let z = Complex64::from_polar(rho, 2.0 * PI * j as f64 / m as f64);
                    eval_series(&f.series, z).norm().powf(p)
                })
                .sum();
            (rho, (2.0 * PI * sum / m as f64).powf(1.0 / p))
        })
        .collect();
    let monotone = by_radius.windows(2).all(|w| w[1].1 >= w[0].1 * (1.0 - 1e-12));
    let value = if p == 2.0 {
        f.series.l2_norm()
    } else {
        by_radius.iter().map(|x| x.1).fold(0.0, f64::max)
    };
    Ok(HardyNorm {
        value,
        by_radius,
        monotone,
    })
}

fn check_positive(w: &[f64]) -> Result<()> {
    for (index, &value) in w.iter().enumerate() {
        if !(value > 0.0) || !value.is_finite() {
            return Err(Error::NonPositive { index, value });
        }
    }
    Ok(())
}

/// Muckenhoupt A₂ constant of equispaced weight samples: the largest
/// (arc mean of w)·(arc mean of 1/w) over all node-aligned arcs.
pub fn a2_constant(w: &[f64]) -> Result<f64> {
    check_positive(w)?;
    let m = w.len();
    // normalize by the maximum so constant weights give exactly 1
    let top = w.iter().copied().fold(0.0, f64::max);
    let a: Vec<f64> = w.iter().map(|x| x / top).collect();
    let pa = cyclic_prefix(&a);
    let pb = cyclic_prefix(&a.iter().map(|x| 1.0 / x).collect::<Vec<_>>());
    let best = (0..m)
        .into_par_iter()
        .map(|s| {
            let mut best: f64 = 1.0;
            for len in 1..=m {
                let ma = (pa[s + len] - pa[s]) / len as f64;
                let mb = (pb[s + len] - pb[s]) / len as f64;
                best = best.max(ma * mb);
            }
            best
        })
        .reduce(|| 1.0, f64::max);
    Ok(best)
}

fn cyclic_prefix(a: &[f64]) -> Vec<f64> {
    let m = a.len();
    let mut p = vec![0.0; 2 * m + 1];
    for i in 0..2 * m {
        p[i + 1] = p[i] + a[i % m];
    }
    p
}

/// Discrete Hardy–Littlewood maximal function: at each node, the largest
/// mean of |φ| over node-aligned arcs containing it.
pub fn hl_maximal(phi: &[f64]) -> Vec<f64> {
    let m = phi.len();
    let abs: Vec<f64> = phi.iter().map(|x| x.abs()).collect();
    let p = cyclic_prefix(&abs);
    let per_start: Vec<Vec<f64>> = (0..m)
        .into_par_iter()
        .map(|s| {
            // best[o] = max over arcs starting at s that cover offset o
            let mut best = vec![0.0; m];
            let mut run: f64 = 0.0;
            for len in (1..=m).rev() {
                run = run.max((p[s + len] - p[s]) / len as f64);
                best[len - 1] = run;
            }
            best
        })
        .collect();
    let mut out = vec![0.0; m];
    for (s, best) in per_start.iter().enumerate() {
        for (o, &b) in best.iter().enumerate() {
            let j = (s + o) % m;
            out[j] = f64::max(out[j], b);
        }
    }
    out
}

const CONE_RADII: usize = 16;
const CONE_ANGLES: usize = 33;

/// Nontangential maximal function at the 2N+1 nodes of `f`'s series.
pub fn nontangential_max(f: &DiskFunction, alpha: f64) -> Result<Vec<f64>> {
    nontangential_max_at(f, alpha, &nodes(f.series.order()))
}

/// Largest |f| over a 16 × 33 sample grid of the cone
/// {z : |z − ξ| < α(1 − |z|)} at each ξ = e^{iθ}, plus the boundary value.
pub fn nontangential_max_at(f: &DiskFunction, alpha: f64, thetas: &[f64]) -> Result<Vec<f64>> {
    if f.kind != DiskKind::Holomorphic {
        return Err(Error::NotHolomorphic);
    }
    if !(alpha > 1.0) {
        return Err(Error::OutOfDomain(format!("aperture α must exceed 1, got {alpha}")));
    }
    // 1 - r spaced geometrically from 1 down to 1e-3
    let radii: Vec<f64> = (0..CONE_RADII)
        .map(|i| 1.0 - 10f64.powf(-3.0 * i as f64 / (CONE_RADII - 1) as f64))
        .collect();
    Ok(thetas
        .par_iter()
        .map(|&theta| {
            let mut best = eval_series(&f.series, Complex64::from_polar(1.0, theta)).norm();
            for &r in &radii {
                let half_width = if r == 0.0 {
                    0.0
                } else {
                    let c = (r * r + 1.0 - alpha * alpha * (1.0 - r) * (1.0 - r)) / (2.0 * r);
                    c.clamp(-1.0, 1.0).acos()
                };
                for j in 0..CONE_ANGLES {
                    let t = -1.0 + 2.0 * j as f64 / (CONE_ANGLES - 1) as f64;
                    let z = Complex64::from_polar(r, theta + t * half_width);
                    best = best.max(eval_series(&f.series, z).norm());
                }
            }
            best
        })
        .collect())
}

/// Ratio ∫|φ̃|²w / ∫|φ|²w at the series nodes; `w` holds 2N+1 samples.
pub fn weighted_conjugation_ratio(w: &[f64], phi: &CircleSeries) -> Result<f64> {
    check_positive(w)?;
    if w.len() != 2 * phi.order() + 1 {
        return Err(Error::Mismatch(format!(
            "{} weight samples for a series of order {}",
            w.len(),
            phi.order()
        )));
    }
    let conj = conjugate_function(phi)?.real_samples();
    let orig = phi.real_samples();
    let num: f64 = conj.iter().zip(w).map(|(c, w)| c * c * w).sum();
    let den: f64 = orig.iter().zip(w).map(|(c, w)| c * c * w).sum();
    if den == 0.0 {
        return Ok(0.0);
    }
    Ok(num / den)
}

/// Smallest C for which the weighted conjugation bound holds on every test function.
pub fn weighted_conjugation_constant(w: &[f64], phis: &[CircleSeries]) -> Result<f64> {
    phis.iter()
        .map(|p| weighted_conjugation_ratio(w, p))
        .try_fold(0.0, |acc, r| r.map(|r| f64::max(acc, r)))
}
