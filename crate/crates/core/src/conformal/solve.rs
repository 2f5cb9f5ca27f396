use super::{ConformalMap, Prevertices, TWO_PI};
use crate::error::{Error, Result};
use crate::geometry::Domain;
use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

const MAX_NEWTON: usize = 100;
const TOLERANCE: f64 = 1e-12;

/// Gaps 2π·softmax(0, y₁, …, y_{n−1}) turned into prevertex angles with θ₀ = 0.
fn angles_from(y: &[f64]) -> Vec<f64> {
    let top = y.iter().copied().fold(0.0, f64::max);
    let mut e = vec![(-top).exp()];
    e.extend(y.iter().map(|v| (v - top).exp()));
    let total: f64 = e.iter().sum();
    let mut angles = Vec::with_capacity(e.len());
    let mut acc = 0.0;
    for g in &e {
        angles.push(acc);
        acc += TWO_PI * g / total;
    }
    angles
}

struct Problem<'a> {
    betas: Vec<f64>,
    target: Vec<Complex64>,
    centroid: Complex64,
    diameter: f64,
    domain: &'a Domain,
}

impl Problem<'_> {
    fn scale(&self, pre: &Prevertices) -> Complex64 {
        (self.target[1] - self.target[0]) / (pre.radial_to(1) - pre.radial_to(0))
    }

    /// n − 3 log side-length ratios, then the two components of
    /// (φ(w₀) − v₀)/diam with φ(0) pinned at the centroid.
    fn residual(&self, y: &[f64]) -> Result<Vec<f64>> {
        let pre = Prevertices::new(angles_from(y), self.betas.clone());
        let n = self.betas.len();
        let lengths = self.domain.edge_lengths();
        let l0 = pre.side(0)?;
        let mut r = Vec::with_capacity(n - 1);
        for k in 1..n - 2 {
            r.push((pre.side(k)? / l0).ln() - (lengths[k] / lengths[0]).ln());
        }
        let miss = (self.centroid + self.scale(&pre) * pre.radial_to(0) - self.target[0]) / self.diameter;
        r.push(miss.re);
        r.push(miss.im);
        Ok(r)
    }
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Solves the parameter problem for `domain` by damped Newton iteration on
/// side-length ratios, with φ(0) at the polygon centroid and θ₀ = 0.
pub fn schwarz_christoffel(domain: &Domain) -> Result<ConformalMap> {
    let n = domain.len();
    let betas: Vec<f64> = domain.interior_angles().iter().map(|a| 1.0 - a / std::f64::consts::PI).collect();
    let c = domain.centroid();
    let problem = Problem {
        betas: betas.clone(),
        target: domain.vertices().iter().map(|p| p.to_complex()).collect(),
        centroid: Complex64::new(c.x, c.y),
        diameter: domain.diameter(),
        domain,
    };
    let lengths = domain.edge_lengths();
    let mut y: Vec<f64> = (1..n).map(|k| (lengths[k] / lengths[0]).ln()).collect();
    let mut r = problem.residual(&y)?;
    let mut res = norm(&r);
    let mut iterations = 0;
    while res > TOLERANCE {
        if iterations == MAX_NEWTON {
            return Err(Error::NoConvergence { iterations, residual: res });
        }
        iterations += 1;
        let m = n - 1;
        let mut jac = DMatrix::zeros(m, m);
        for j in 0..m {
            let h = 1e-7 * (1.0 + y[j].abs());
            let mut yp = y.clone();
            yp[j] += h;
            let rp = problem.residual(&yp)?;
            for i in 0..m {
                jac[(i, j)] = (rp[i] - r[i]) / h;
            }
        }
        let step = jac
            .lu()
            .solve(&DVector::from_column_slice(&r))
            .ok_or_else(|| Error::Numerical(format!("singular Jacobian in the parameter problem (residual {res:e})")))?;
        let mut alpha = 1.0;
        loop {
            let trial: Vec<f64> = y.iter().zip(step.iter()).map(|(a, d)| a - alpha * d).collect();
            // a step that collapses two prevertices is rejected like any other failed step
            if let Ok(rt) = problem.residual(&trial) {
                let rn = norm(&rt);
                if rn.is_finite() && rn < res {
                    y = trial;
                    r = rt;
                    res = rn;
                    break;
                }
            }
            alpha *= 0.5;
            if alpha < 1e-10 {
                return Err(Error::NoConvergence { iterations, residual: res });
            }
        }
    }
    let pre = Prevertices::new(angles_from(&y), betas);
    let scale = problem.scale(&pre);
    let map = ConformalMap::from_parts(pre, scale, problem.centroid);
    let worst = map
        .vertices
        .iter()
        .zip(&problem.target)
        .map(|(a, b)| (a - b).norm())
        .fold(0.0, f64::max);
    if worst > 1e-6 * problem.diameter {
        return Err(Error::Numerical(format!(
            "map misses a polygon vertex by {worst:e} after {iterations} Newton steps"
        )));
    }
    Ok(map)
}
