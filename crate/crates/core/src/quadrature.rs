//! Gaussian quadrature rules on [-1, 1] via the Golub–Welsch eigenvalue method.

use nalgebra::{DMatrix, SymmetricEigen};
use statrs::function::gamma::ln_gamma;

/// Nodes and weights, nodes increasing.
#[derive(Debug, Clone)]
pub struct Rule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl Rule {
    /// Maps the rule from [-1, 1] to [a, b] (weights scaled by the Jacobian only).
    pub fn mapped(&self, a: f64, b: f64) -> Rule {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        Rule {
            nodes: self.nodes.iter().map(|x| mid + half * x).collect(),
            weights: self.weights.iter().map(|w| half * w).collect(),
        }
    }
}

fn golub_welsch(diag: &[f64], off: &[f64], mu0: f64) -> Rule {
    let n = diag.len();
    let mut j = DMatrix::zeros(n, n);
    for i in 0..n {
        j[(i, i)] = diag[i];
        if i + 1 < n {
            j[(i, i + 1)] = off[i];
            j[(i + 1, i)] = off[i];
        }
    }
    let eig = SymmetricEigen::new(j);
    let mut pairs: Vec<(f64, f64)> = (0..n)
        .map(|i| {
            let v0 = eig.eigenvectors[(0, i)];
            (eig.eigenvalues[i], mu0 * v0 * v0)
        })
        .collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    Rule {
        nodes: pairs.iter().map(|p| p.0).collect(),
        weights: pairs.iter().map(|p| p.1).collect(),
    }
}

/// n-point Gauss–Legendre rule.
pub fn gauss_legendre(n: usize) -> Rule {
    assert!(n >= 1);
    let off: Vec<f64> = (1..n)
        .map(|k| {
            let k = k as f64;
            k / (4.0 * k * k - 1.0).sqrt()
        })
        .collect();
    golub_welsch(&vec![0.0; n], &off, 2.0)
}

/// n-point Gauss–Jacobi rule for the weight (1 - x)^a (1 + x)^b, a, b > -1.
pub fn gauss_jacobi(n: usize, a: f64, b: f64) -> Rule {
    assert!(n >= 1 && a > -1.0 && b > -1.0);
    let ab = a + b;
    let diag: Vec<f64> = (0..n)
        .map(|k| {
            if k == 0 {
                (b - a) / (ab + 2.0)
            } else {
                let t = 2.0 * k as f64 + ab;
                (b * b - a * a) / (t * (t + 2.0))
            }
        })
        .collect();
    let off: Vec<f64> = (1..n)
        .map(|k| {
            let kf = k as f64;
            let t = 2.0 * kf + ab;
            if k == 1 {
                (4.0 * (1.0 + a) * (1.0 + b) / ((2.0 + ab).powi(2) * (3.0 + ab))).sqrt()
            } else {
                (4.0 * kf * (kf + a) * (kf + b) * (kf + ab) / (t * t * (t + 1.0) * (t - 1.0))).sqrt()
            }
        })
        .collect();
    let mu0 = ((ab + 1.0) * 2f64.ln() + ln_gamma(a + 1.0) + ln_gamma(b + 1.0) - ln_gamma(ab + 2.0)).exp();
    golub_welsch(&diag, &off, mu0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn legendre_integrates_polynomials_exactly() {
        let r = gauss_legendre(6);
        for p in 0..12 {
            let q: f64 = r.nodes.iter().zip(&r.weights).map(|(x, w)| w * x.powi(p)).sum();
            let exact = if p % 2 == 1 { 0.0 } else { 2.0 / (p as f64 + 1.0) };
            assert_relative_eq!(q, exact, epsilon = 1e-14);
        }
    }

    #[test]
    fn jacobi_matches_beta_integrals() {
        // ∫(1-x)^a(1+x)^b x dx over [-1,1] = 2^{a+b+1} B(a+1,b+1) (b-a)/(a+b+2)
        for &(a, b) in &[(-0.5, -0.5), (0.5, -0.25), (-0.75, 1.5), (0.0, 0.0)] {
            let r = gauss_jacobi(8, a, b);
            let mass: f64 = r.weights.iter().sum();
            let mu0 = ((a + b + 1.0) * 2f64.ln() + ln_gamma(a + 1.0) + ln_gamma(b + 1.0)
                - ln_gamma(a + b + 2.0))
            .exp();
            assert_relative_eq!(mass, mu0, max_relative = 1e-13);
            let first: f64 = r.nodes.iter().zip(&r.weights).map(|(x, w)| w * x).sum();
            assert_relative_eq!(first, mu0 * (b - a) / (a + b + 2.0), epsilon = 1e-13);
        }
    }

    #[test]
    fn chebyshev_nodes() {
        let r = gauss_jacobi(5, -0.5, -0.5);
        for (k, x) in r.nodes.iter().enumerate() {
            let exact = -((2 * k + 1) as f64 * std::f64::consts::PI / 10.0).cos();
            assert_relative_eq!(*x, exact, epsilon = 1e-13);
        }
    }
}
