//! Schwarz–Christoffel maps from the unit disk onto polygons.
//!
//! φ(z) = shift + scale·∫₀^z Π_k (1 − ζ/w_k)^{−β_k} dζ, where w_k = e^{iθ_k}
//! are the prevertices and πβ_k the exterior turning angle at vertex k.
//! Integrals that touch a prevertex use Gauss–Jacobi rules carrying the
//! power singularity; everything else uses Gauss–Legendre panels graded by
//! the distance to the nearest prevertex.

mod solve;

pub use solve::schwarz_christoffel;

use crate::disk_hardy::{a2_constant, CircleSeries};
use crate::error::{Error, Result};
use crate::geometry::Point;
use crate::quadrature::{gauss_jacobi, gauss_legendre, Rule};
use num_complex::Complex64;
use std::f64::consts::PI;
use std::fmt::Write as _;

const TWO_PI: f64 = 2.0 * PI;
const JACOBI_NODES: usize = 24;
const LEGENDRE_NODES: usize = 16;
const MAX_PANELS: usize = 400;

/// Per-prevertex quadrature data; depends only on the turning exponents.
#[derive(Debug, Clone)]
struct Rules {
    // weight (1 + x)^{-β_k}: singular end at the start of the interval
    start: Vec<Rule>,
    // weight (1 - x)^{-β_k}
    end: Vec<Rule>,
    legendre: Rule,
}

impl Rules {
    fn new(betas: &[f64]) -> Self {
        Rules {
            start: betas.iter().map(|&b| gauss_jacobi(JACOBI_NODES, 0.0, -b)).collect(),
            end: betas.iter().map(|&b| gauss_jacobi(JACOBI_NODES, -b, 0.0)).collect(),
            legendre: gauss_legendre(LEGENDRE_NODES),
        }
    }
}

/// Prevertex geometry without the affine part; shared by the parameter
/// solver and the finished map.
#[derive(Debug, Clone)]
pub(crate) struct Prevertices {
    angles: Vec<f64>,
    betas: Vec<f64>,
    points: Vec<Complex64>,
    rules: Rules,
}

fn angular_gap(a: f64, b: f64) -> f64 {
    let d = (a - b).rem_euclid(TWO_PI);
    d.min(TWO_PI - d)
}

impl Prevertices {
    pub(crate) fn new(angles: Vec<f64>, betas: Vec<f64>) -> Self {
        let points = angles.iter().map(|&t| Complex64::from_polar(1.0, t)).collect();
        let rules = Rules::new(&betas);
        Prevertices {
            angles,
            betas,
            points,
            rules,
        }
    }

    fn len(&self) -> usize {
        self.angles.len()
    }

    fn gap(&self, k: usize) -> f64 {
        let n = self.len();
        if k + 1 == n {
            TWO_PI - self.angles[k] + self.angles[0]
        } else {
            self.angles[k + 1] - self.angles[k]
        }
    }

    fn nearest_other(&self, k: usize) -> f64 {
        let n = self.len();
        self.gap(k).min(self.gap((k + n - 1) % n))
    }

    /// Π (1 − z/w_j)^{−β_j}, skipping factor `skip`.
    fn integrand(&self, z: Complex64, skip: Option<usize>) -> Complex64 {
        let mut log = Complex64::new(0.0, 0.0);
        for (j, (&w, &b)) in self.points.iter().zip(&self.betas).enumerate() {
            if Some(j) != skip && b != 0.0 {
                log -= b * (1.0 - z / w).ln();
            }
        }
        log.exp()
    }

    /// |integrand| at e^{iθ}; with `skip = k` the factor of vertex k is
    /// replaced by its smooth part (|2 sin(d/2)| / |d|)^{−β_k}.
    fn speed(&self, theta: f64, skip: Option<usize>) -> f64 {
        let mut log = 0.0;
        for (j, (&t, &b)) in self.angles.iter().zip(&self.betas).enumerate() {
            if b == 0.0 {
                continue;
            }
            let d = angular_gap(theta, t);
            if Some(j) == skip {
                if d > 0.0 {
                    log -= b * ((2.0 * (0.5 * d).sin()) / d).ln();
                }
            } else {
                log -= b * (2.0 * (0.5 * d).sin()).ln();
            }
        }
        log.exp()
    }

    fn distance_to_prevertex(&self, theta: f64) -> f64 {
        self.angles.iter().map(|&t| angular_gap(theta, t)).fold(f64::INFINITY, f64::min)
    }

    /// Nodes and weights for ∫ |integrand| dθ over the arc from `from` to
    /// `to` (either direction, weights positive). With `anchor = Some(k)`,
    /// `from` is prevertex k and its singularity is integrated exactly.
    fn arc_rule(&self, from: f64, to: f64, anchor: Option<usize>) -> Result<Vec<(f64, f64)>> {
        let dir = (to - from).signum();
        let total = (to - from).abs();
        let mut out = Vec::new();
        let mut s = 0.0;
        if let Some(k) = anchor {
            let b = self.betas[k];
            let t0 = total.min(0.5 * self.nearest_other(k));
            let rule = &self.rules.start[k];
            let scale = (0.5 * t0).powf(1.0 - b);
            for (x, w) in rule.nodes.iter().zip(&rule.weights) {
                let o = 0.5 * (1.0 + x) * t0;
                let theta = from + dir * o;
                out.push((theta, scale * w * self.speed(theta, Some(k))));
            }
            s = t0;
        }
        let mut panels = 0;
        while total - s > 1e-13 * total {
            let d = self.distance_to_prevertex(from + dir * s);
            let len = (total - s).min(0.5 * d);
            if !(len > 1e-15 * TWO_PI) || panels == MAX_PANELS {
                return Err(Error::OutOfDomain(format!(
                    "boundary point at angle {} is a prevertex",
                    from + dir * s
                )));
            }
            let rule = self.rules.legendre.mapped(s, s + len);
            for (o, w) in rule.nodes.iter().zip(&rule.weights) {
                let theta = from + dir * o;
                out.push((theta, w * self.speed(theta, None)));
            }
            s += len;
            panels += 1;
        }
        Ok(out)
    }

    fn arc_integral(&self, from: f64, to: f64, anchor: Option<usize>) -> Result<f64> {
        Ok(self.arc_rule(from, to, anchor)?.iter().map(|p| p.1).sum())
    }

    /// ∫ |integrand| over the arc from prevertex k to prevertex k + 1.
    fn side(&self, k: usize) -> Result<f64> {
        let n = self.len();
        let a = self.angles[k];
        let b = a + self.gap(k);
        let mid = 0.5 * (a + b);
        let j = (k + 1) % n;
        Ok(self.arc_integral(a, mid, Some(k))? + self.arc_integral(b, mid, Some(j))?)
    }

    /// ∫₀^{w_k} integrand dζ along the radius.
    fn radial_to(&self, k: usize) -> Complex64 {
        let wk = self.points[k];
        let delta = (0.5 * self.nearest_other(k)).sin().min(0.5);
        let stop = 1.0 - delta;
        let others = |t: f64| {
            self.points
                .iter()
                .enumerate()
                .filter(|&(j, _)| j != k)
                .map(|(_, &w)| (t * wk - w).norm())
                .fold(1.0 - t, f64::min)
        };
        let mut sum = Complex64::new(0.0, 0.0);
        let mut t = 0.0;
        while t < stop {
            let len = (stop - t).min(0.5 * others(t));
            let rule = self.rules.legendre.mapped(t, t + len);
            for (x, w) in rule.nodes.iter().zip(&rule.weights) {
                sum += w * self.integrand(x * wk, None);
            }
            t += len;
        }
        let b = self.betas[k];
        let rule = &self.rules.end[k];
        let scale = (0.5 * delta).powf(1.0 - b);
        for (x, w) in rule.nodes.iter().zip(&rule.weights) {
            let t = 1.0 - 0.5 * (1.0 - x) * delta;
            sum += scale * w * self.integrand(t * wk, Some(k));
        }
        wk * sum
    }

    /// ∫₀^z integrand dζ along the segment, panels graded toward prevertices.
    fn radial(&self, z: Complex64) -> Result<Complex64> {
        let r = z.norm();
        if r == 0.0 {
            return Ok(z);
        }
        let dist = |t: f64| {
            self.points.iter().map(|&w| (t * z - w).norm()).fold(f64::INFINITY, f64::min) / r
        };
        let mut sum = Complex64::new(0.0, 0.0);
        let mut t: f64 = 0.0;
        let mut panels = 0;
        while 1.0 - t > 1e-14 {
            let len = (1.0 - t).min(0.5 * dist(t));
            if !(len > 1e-14) || panels == MAX_PANELS {
                return Err(Error::OutOfDomain(format!("z = {z} is at a prevertex")));
            }
            let rule = self.rules.legendre.mapped(t, t + len);
            for (x, w) in rule.nodes.iter().zip(&rule.weights) {
                sum += w * self.integrand(x * z, None);
            }
            t += len;
            panels += 1;
        }
        Ok(z * sum)
    }
}

/// Conformal map from 𝔻 onto a polygon, in Schwarz–Christoffel form.
#[derive(Debug, Clone)]
pub struct ConformalMap {
    pre: Prevertices,
    scale: Complex64,
    shift: Complex64,
    vertices: Vec<Complex64>,
    sides: Vec<f64>,
    offsets: Vec<f64>,
}

impl ConformalMap {
    /// Assembles a map from its parameters. Prevertex angles must increase
    /// strictly within [0, 2π) and the turning exponents must sum to 2.
    pub fn new(prevertices: Vec<f64>, turning_exponents: Vec<f64>, scale: Complex64, shift: Complex64) -> Result<Self> {
        let n = prevertices.len();
        if n < 3 || turning_exponents.len() != n {
            return Err(Error::InvalidInput(format!(
                "need ≥ 3 prevertices with one exponent each, got {n} and {}",
                turning_exponents.len()
            )));
        }
        if prevertices[0] < 0.0 || prevertices[n - 1] >= TWO_PI || prevertices.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidInput(
                "prevertex angles must increase strictly within [0, 2π)".into(),
            ));
        }
        let total: f64 = turning_exponents.iter().sum();
        if (total - 2.0).abs() > 1e-9 {
            return Err(Error::InvalidInput(format!("turning exponents sum to {total}, expected 2")));
        }
        if turning_exponents.iter().any(|&b| !(b < 1.0 && b > -1.0)) {
            return Err(Error::InvalidInput("turning exponents must lie in (-1, 1)".into()));
        }
        if !(scale.norm() > 0.0) || !scale.is_finite() || !shift.is_finite() {
            return Err(Error::InvalidInput("scale must be nonzero and finite".into()));
        }
        Ok(Self::from_parts(Prevertices::new(prevertices, turning_exponents), scale, shift))
    }

    pub(crate) fn from_parts(pre: Prevertices, scale: Complex64, shift: Complex64) -> Self {
        let n = pre.len();
        let vertices: Vec<Complex64> = (0..n).map(|k| shift + scale * pre.radial_to(k)).collect();
        let sides: Vec<f64> = (0..n).map(|k| scale.norm() * pre.side(k).unwrap_or(f64::NAN)).collect();
        let mut offsets = vec![0.0; n + 1];
        for k in 0..n {
            offsets[k + 1] = offsets[k] + sides[k];
        }
        ConformalMap {
            pre,
            scale,
            shift,
            vertices,
            sides,
            offsets,
        }
    }

    pub fn prevertices(&self) -> &[f64] {
        &self.pre.angles
    }

    pub fn turning_exponents(&self) -> &[f64] {
        &self.pre.betas
    }

    pub fn scale(&self) -> Complex64 {
        self.scale
    }

    pub fn shift(&self) -> Complex64 {
        self.shift
    }

    /// Images of the prevertices.
    pub fn vertices(&self) -> Vec<Point> {
        self.vertices.iter().map(|z| Point::new(z.re, z.im)).collect()
    }

    /// Side lengths of the image polygon, from the boundary speed.
    pub fn side_lengths(&self) -> &[f64] {
        &self.sides
    }

    /// ∫_𝕋 |φ′| dm.
    pub fn perimeter(&self) -> f64 {
        self.offsets[self.pre.len()]
    }

    fn check_prevertex(&self, z: Complex64) -> Result<()> {
        if let Some(k) = self.pre.points.iter().position(|&w| (z - w).norm() < 1e-14) {
            return Err(Error::OutOfDomain(format!("z = {z} is prevertex {k}")));
        }
        Ok(())
    }

    /// φ(z) for |z| ≤ 1; prevertices map to their vertices.
    pub fn eval(&self, z: Complex64) -> Result<Complex64> {
        if z.norm() > 1.0 + 1e-12 {
            return Err(Error::OutOfDomain(format!("|z| = {} > 1", z.norm())));
        }
        if let Some(k) = self.pre.points.iter().position(|&w| (z - w).norm() < 1e-14) {
            return Ok(self.vertices[k]);
        }
        Ok(self.shift + self.scale * self.pre.radial(z)?)
    }

    /// φ′(z) for |z| ≤ 1 away from the prevertices.
    pub fn derivative(&self, z: Complex64) -> Result<Complex64> {
        if z.norm() > 1.0 + 1e-12 {
            return Err(Error::OutOfDomain(format!("|z| = {} > 1", z.norm())));
        }
        self.check_prevertex(z)?;
        Ok(self.scale * self.pre.integrand(z, None))
    }

    /// (φ′)^{1/2} on the branch that is continuous along radii from z = 0.
    pub fn sqrt_derivative(&self, z: Complex64) -> Result<Complex64> {
        if z.norm() > 1.0 + 1e-12 {
            return Err(Error::OutOfDomain(format!("|z| = {} > 1", z.norm())));
        }
        self.check_prevertex(z)?;
        let mut log = 0.5 * self.scale.ln();
        for (&w, &b) in self.pre.points.iter().zip(&self.pre.betas) {
            log -= 0.5 * b * (1.0 - z / w).ln();
        }
        Ok(log.exp())
    }

    /// |φ′(e^{iθ})|.
    pub fn boundary_speed(&self, theta: f64) -> Result<f64> {
        if self.pre.distance_to_prevertex(theta) < 1e-14 {
            return Err(Error::OutOfDomain(format!("angle {theta} is a prevertex")));
        }
        Ok(self.scale.norm() * self.pre.speed(theta, None))
    }

    fn arc_of(&self, theta: f64) -> (usize, f64) {
        let t = (theta - self.pre.angles[0]).rem_euclid(TWO_PI) + self.pre.angles[0];
        let k = self.pre.angles.iter().rposition(|&a| a <= t).unwrap_or(0);
        (k, t)
    }

    /// Arclength along ∂Ω from vertex 0 to φ(e^{iθ}).
    pub fn boundary_arclength(&self, theta: f64) -> Result<f64> {
        let (k, t) = self.arc_of(theta);
        let n = self.pre.len();
        let a = self.pre.angles[k];
        let gap = self.pre.gap(k);
        let scale = self.scale.norm();
        if t - a <= 0.5 * gap {
            Ok(self.offsets[k] + scale * self.pre.arc_integral(a, t, Some(k))?)
        } else {
            let end = a + gap;
            Ok(self.offsets[k + 1] - scale * self.pre.arc_integral(end, t, Some((k + 1) % n))?)
        }
    }

    /// Boundary value φ(e^{iθ}), located through the arclength correspondence.
    pub fn boundary_point(&self, theta: f64) -> Result<Complex64> {
        let (k, _) = self.arc_of(theta);
        let s = self.boundary_arclength(theta)? - self.offsets[k];
        let n = self.pre.len();
        let dir = self.vertices[(k + 1) % n] - self.vertices[k];
        Ok(self.vertices[k] + dir / dir.norm() * s)
    }

    /// Angle θ with boundary_arclength(θ) = s.
    pub fn boundary_angle(&self, s: f64) -> Result<f64> {
        let n = self.pre.len();
        let per = self.perimeter();
        let s = s.rem_euclid(per);
        let k = (0..n).rposition(|k| self.offsets[k] <= s).unwrap_or(0);
        let (mut lo, mut hi) = (self.pre.angles[k], self.pre.angles[k] + self.pre.gap(k));
        if s - self.offsets[k] <= 1e-14 * per {
            return Ok(lo);
        }
        if self.offsets[k + 1] - s <= 1e-14 * per {
            return Ok(hi.rem_euclid(TWO_PI));
        }
        let mut t = lo + (hi - lo) * (s - self.offsets[k]) / self.sides[k];
        for _ in 0..200 {
            let f = self.boundary_arclength(t)? - s;
            if f.abs() <= 1e-14 * per {
                return Ok(t.rem_euclid(TWO_PI));
            }
            if f > 0.0 {
                hi = t;
            } else {
                lo = t;
            }
            let step = self.boundary_speed(t).map(|v| t - f / v).unwrap_or(lo);
            t = if step > lo && step < hi { step } else { 0.5 * (lo + hi) };
            if hi - lo < 1e-15 {
                return Ok(t.rem_euclid(TWO_PI));
            }
        }
        Err(Error::NoConvergence {
            iterations: 200,
            residual: (self.boundary_arclength(t)? - s).abs(),
        })
    }

    /// Quadrature nodes θ_i and weights W_i with Σ W_i h(θ_i) ≈ ∫_a^b h |φ′| dθ.
    pub fn boundary_rule(&self, a: f64, b: f64) -> Result<Vec<(f64, f64)>> {
        if b < a {
            return Err(Error::InvalidInput(format!("empty angle range [{a}, {b}]")));
        }
        let n = self.pre.len();
        let base = self.pre.angles[0];
        let first = ((a - base) / TWO_PI).floor() as i64;
        let last = ((b - base) / TWO_PI).ceil() as i64;
        // endpoints within rounding of a prevertex are moved onto it
        let snap = |t: f64| {
            for k in 0..n {
                let p = self.pre.angles[k];
                let q = p + ((t - p) / TWO_PI).round() * TWO_PI;
                if (t - q).abs() < 1e-12 {
                    return q;
                }
            }
            t
        };
        let (a, b) = (snap(a), snap(b));
        let mut cuts = vec![(a, None), (b, None)];
        for turn in first..=last {
            for k in 0..n {
                let t = self.pre.angles[k] + turn as f64 * TWO_PI;
                if t >= a && t <= b {
                    cuts.push((t, Some(k)));
                }
            }
        }
        cuts.sort_by(|x, y| x.0.total_cmp(&y.0).then(y.1.is_some().cmp(&x.1.is_some())));
        cuts.dedup_by(|x, y| x.0 == y.0);
        let mut out = Vec::new();
        let scale = self.scale.norm();
        for w in cuts.windows(2) {
            let ((p, kp), (q, kq)) = (w[0], w[1]);
            if q <= p {
                continue;
            }
            let mid = 0.5 * (p + q);
            out.extend(self.pre.arc_rule(p, mid, kp)?);
            out.extend(self.pre.arc_rule(q, mid, kq)?);
        }
        for node in &mut out {
            node.1 *= scale;
        }
        Ok(out)
    }

    /// ∫_𝔻 |φ′|² dm₂ by polar quadrature graded toward the prevertices.
    pub fn area_integral(&self) -> f64 {
        let legendre = gauss_legendre(LEGENDRE_NODES);
        let radial = gauss_legendre(8);
        let n = self.pre.len();
        let mut total = 0.0;
        let mut lo = 0.0;
        for j in 1..=60 {
            let hi = 1.0 - 0.5f64.powi(j);
            let mut part = 0.0;
            let rr = radial.mapped(lo, hi);
            for (&r, wr) in rr.nodes.iter().zip(&rr.weights) {
                let eps = 1.0 - r;
                let mut ring = 0.0;
                for k in 0..n {
                    let a = self.pre.angles[k];
                    let b = a + self.pre.gap(k);
                    for (from, dir) in [(a, 1.0), (b, -1.0)] {
                        let mut s = 0.0;
                        let half = 0.5 * (b - a);
                        while s < half {
                            let len = (half - s).min(eps.max(0.5 * s));
                            let rule = legendre.mapped(s, s + len);
                            for (o, w) in rule.nodes.iter().zip(&rule.weights) {
                                let z = Complex64::from_polar(r, from + dir * o);
                                ring += w * self.pre.integrand(z, None).norm_sqr();
                            }
                            s += len;
                        }
                    }
                }
                part += wr * r * ring;
            }
            total += part;
            lo = hi;
            if j >= 8 && part < 1e-9 * total {
                break;
            }
        }
        self.scale.norm_sqr() * total
    }

    /// Text form: `scale`, `shift` and one `prevertex angle beta` line each.
    pub fn to_text(&self) -> String {
        let mut out = String::from("# schwarz-christoffel map\n");
        writeln!(out, "scale {:.17e} {:.17e}", self.scale.re, self.scale.im).unwrap();
        writeln!(out, "shift {:.17e} {:.17e}", self.shift.re, self.shift.im).unwrap();
        for (t, b) in self.pre.angles.iter().zip(&self.pre.betas) {
            writeln!(out, "prevertex {t:.17e} {b:.17e}").unwrap();
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut scale = None;
        let mut shift = None;
        let mut angles = Vec::new();
        let mut betas = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap().trim();
            if line.is_empty() {
                continue;
            }
            let err = |message: String| Error::Parse { line: i + 1, message };
            let f: Vec<&str> = line.split_whitespace().collect();
            if f.len() != 3 {
                return Err(err(format!("expected `key a b`, got {} fields", f.len())));
            }
            let a: f64 = f[1].parse().map_err(|e| err(format!("{e}")))?;
            let b: f64 = f[2].parse().map_err(|e| err(format!("{e}")))?;
            match f[0] {
                "scale" => scale = Some(Complex64::new(a, b)),
                "shift" => shift = Some(Complex64::new(a, b)),
                "prevertex" => {
                    angles.push(a);
                    betas.push(b);
                }
                other => return Err(err(format!("unknown key `{other}`"))),
            }
        }
        let missing = |what: &str| Error::Parse {
            line: 0,
            message: format!("missing `{what}` line"),
        };
        Self::new(angles, betas, scale.ok_or_else(|| missing("scale"))?, shift.ok_or_else(|| missing("shift"))?)
    }
}

/// φ′(z); errors at a prevertex or outside the closed disk.
pub fn map_derivative(map: &ConformalMap, z: Complex64) -> Result<Complex64> {
    map.derivative(z)
}

/// Λ(E) = ∫_{φ⁻¹(E)} |φ′| dm for E a union of boundary arcs given as
/// arclength intervals [s₀, s₁] measured from vertex 0.
pub fn arclength_pullback(map: &ConformalMap, arcs: &[(f64, f64)]) -> Result<f64> {
    let mut total = 0.0;
    for &(s0, s1) in arcs {
        if s1 < s0 {
            return Err(Error::InvalidInput(format!("arc [{s0}, {s1}] is reversed")));
        }
        if s1 - s0 >= map.perimeter() * (1.0 - 1e-15) {
            total += map.boundary_rule(map.prevertices()[0], map.prevertices()[0] + TWO_PI)?.iter().map(|p| p.1).sum::<f64>();
            continue;
        }
        let a = map.boundary_angle(s0)?;
        let mut b = map.boundary_angle(s1)?;
        if b <= a {
            b += TWO_PI;
        }
        total += map.boundary_rule(a, b)?.iter().map(|p| p.1).sum::<f64>();
    }
    Ok(total)
}

/// ‖(f∘φ)(φ′)^{1/2}‖_{L²(𝕋)} for boundary samples `values` at arclength
/// positions `arclength` (increasing, measured from vertex 0), interpolated
/// linearly and periodically along ∂Ω.
pub fn smirnov_norm(map: &ConformalMap, arclength: &[f64], values: &[Complex64]) -> Result<f64> {
    if arclength.len() != values.len() || values.is_empty() {
        return Err(Error::Mismatch(format!(
            "{} arclength positions for {} values",
            arclength.len(),
            values.len()
        )));
    }
    let per = map.perimeter();
    let interp = |s: f64| {
        let m = arclength.len();
        let i = arclength.partition_point(|&x| x <= s);
        let (j0, j1) = if i == 0 || i == m { (m - 1, 0) } else { (i - 1, i) };
        let (a, mut b) = (arclength[j0], arclength[j1]);
        let mut t = s;
        if b <= a {
            b += per;
            if t < a {
                t += per;
            }
        }
        let lam = if b > a { (t - a) / (b - a) } else { 0.0 };
        values[j0] * (1.0 - lam) + values[j1] * lam
    };
    let start = map.prevertices()[0];
    let mut sum = 0.0;
    for (theta, w) in map.boundary_rule(start, start + TWO_PI)? {
        let s = map.boundary_arclength(theta)?;
        sum += w * interp(s).norm_sqr();
    }
    Ok(sum.sqrt())
}

/// A₂ constants of |φ′| and 1/|φ′| sampled at `samples` offset equispaced
/// angles.
pub fn a2_of_derivative(map: &ConformalMap, samples: usize) -> Result<(f64, f64)> {
    let w = (0..samples)
        .map(|j| map.boundary_speed(TWO_PI * (j as f64 + 0.5) / samples as f64))
        .collect::<Result<Vec<f64>>>()?;
    let inv: Vec<f64> = w.iter().map(|x| 1.0 / x).collect();
    Ok((a2_constant(&w)?, a2_constant(&inv)?))
}

/// ‖φ′_ρ‖₂ and ‖1/φ′_ρ‖₂ on the circle |z| = ρ < 1, by FFT sampling.
pub fn derivative_circle_norms(map: &ConformalMap, radius: f64, order: usize) -> Result<(f64, f64)> {
    if !(radius > 0.0 && radius < 1.0) {
        return Err(Error::OutOfDomain(format!("radius must lie in (0, 1), got {radius}")));
    }
    let d = CircleSeries::from_fn(order, |t| map.scale * map.pre.integrand(Complex64::from_polar(radius, t), None));
    let inv = CircleSeries::from_fn(order, |t| 1.0 / (map.scale * map.pre.integrand(Complex64::from_polar(radius, t), None)));
    Ok((d.l2_norm(), inv.l2_norm()))
}

#[cfg(test)]
mod tests;
