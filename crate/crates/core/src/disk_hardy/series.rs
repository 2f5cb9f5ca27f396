use crate::error::{Error, Result};
use num_complex::Complex64;
use rustfft::FftPlanner;
use std::f64::consts::PI;
use std::fmt::Write as _;

/// Truncated Fourier series Σ_{|k|≤N} c_k e^{ikθ} on the unit circle.
///
/// Transforms use the 2N+1 equispaced angles θ_j = 2πj/(2N+1), so sampling
/// and coefficient extraction are exact inverses of each other.
#[derive(Debug, Clone, PartialEq)]
pub struct CircleSeries {
    order: usize,
    coeffs: Vec<Complex64>,
}

impl CircleSeries {
    pub fn zeros(order: usize) -> Self {
        CircleSeries {
            order,
            coeffs: vec![Complex64::new(0.0, 0.0); 2 * order + 1],
        }
    }

    /// Builds a series from `(k, c_k)` pairs; unspecified modes are zero.
    pub fn from_modes(order: usize, modes: &[(i64, Complex64)]) -> Result<Self> {
        let mut s = Self::zeros(order);
        for &(k, c) in modes {
            if k.unsigned_abs() as usize > order {
                return Err(Error::InvalidInput(format!(
                    "mode {k} exceeds truncation order {order}"
                )));
            }
            *s.coeff_mut(k) += c;
        }
        Ok(s)
    }

    /// Coefficients ordered from k = -N to k = N.
    pub fn from_coefficients(coeffs: Vec<Complex64>) -> Result<Self> {
        if coeffs.len() % 2 == 0 {
            return Err(Error::InvalidInput(format!(
                "expected 2N+1 coefficients, got {}",
                coeffs.len()
            )));
        }
        Ok(CircleSeries {
            order: coeffs.len() / 2,
            coeffs,
        })
    }

    /// Interpolating series through samples at the 2N+1 nodes.
    pub fn from_samples(samples: &[Complex64]) -> Result<Self> {
        let m = samples.len();
        if m % 2 == 0 {
            return Err(Error::InvalidInput(format!(
                "expected an odd number 2N+1 of samples, got {m}"
            )));
        }
        let mut buf = samples.to_vec();
        FftPlanner::new().plan_fft_forward(m).process(&mut buf);
        let order = m / 2;
        let mut s = Self::zeros(order);
        for k in -(order as i64)..=(order as i64) {
            *s.coeff_mut(k) = buf[k.rem_euclid(m as i64) as usize] / m as f64;
        }
        Ok(s)
    }

    pub fn from_real_samples(samples: &[f64]) -> Result<Self> {
        let c: Vec<Complex64> = samples.iter().map(|&x| Complex64::new(x, 0.0)).collect();
        let mut s = Self::from_samples(&c)?;
        s.symmetrize();
        Ok(s)
    }

    /// Samples `f` at the 2N+1 nodes and interpolates.
    pub fn from_fn(order: usize, f: impl Fn(f64) -> Complex64) -> Self {
        let samples: Vec<Complex64> = nodes(order).into_iter().map(f).collect();
        Self::from_samples(&samples).expect("2N+1 samples")
    }

    pub fn from_real_fn(order: usize, f: impl Fn(f64) -> f64) -> Self {
        let samples: Vec<f64> = nodes(order).into_iter().map(f).collect();
        Self::from_real_samples(&samples).expect("2N+1 samples")
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn coefficients(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub fn coeff(&self, k: i64) -> Complex64 {
        if k.unsigned_abs() as usize > self.order {
            Complex64::new(0.0, 0.0)
        } else {
            self.coeffs[(k + self.order as i64) as usize]
        }
    }

    pub fn coeff_mut(&mut self, k: i64) -> &mut Complex64 {
        &mut self.coeffs[(k + self.order as i64) as usize]
    }

    pub fn modes(&self) -> impl Iterator<Item = (i64, Complex64)> + '_ {
        let n = self.order as i64;
        (-n..=n).map(move |k| (k, self.coeff(k)))
    }

    /// Values at the 2N+1 nodes.
    pub fn samples(&self) -> Vec<Complex64> {
        let m = self.coeffs.len();
        let mut buf = vec![Complex64::new(0.0, 0.0); m];
        for (k, c) in self.modes() {
            buf[k.rem_euclid(m as i64) as usize] = c;
        }
        FftPlanner::new().plan_fft_inverse(m).process(&mut buf);
        buf
    }

    pub fn real_samples(&self) -> Vec<f64> {
        self.samples().iter().map(|z| z.re).collect()
    }

    pub fn eval(&self, theta: f64) -> Complex64 {
        self.modes()
            .map(|(k, c)| c * Complex64::from_polar(1.0, k as f64 * theta))
            .sum()
    }

    /// Same function represented at a larger (or smaller, truncating) order.
    pub fn resized(&self, order: usize) -> Self {
        let mut s = Self::zeros(order);
        let n = order.min(self.order) as i64;
        for k in -n..=n {
            *s.coeff_mut(k) = self.coeff(k);
        }
        s
    }

    pub fn mean(&self) -> Complex64 {
        self.coeff(0)
    }

    /// Largest violation of c_{-k} = conj(c_k).
    pub fn reality_defect(&self) -> (i64, f64) {
        let mut worst = (0, self.coeff(0).im.abs());
        for k in 1..=self.order as i64 {
            let d = (self.coeff(-k) - self.coeff(k).conj()).norm();
            if d > worst.1 {
                worst = (k, d);
            }
        }
        worst
    }

    /// Errors unless the series is real-valued to `tol` relative to its size.
    pub fn check_real(&self, tol: f64) -> Result<()> {
        let scale = self.coeffs.iter().map(|c| c.norm()).fold(0.0, f64::max).max(1.0);
        let (mode, defect) = self.reality_defect();
        if defect > tol * scale {
            return Err(Error::NotReal { mode, defect });
        }
        Ok(())
    }

    fn symmetrize(&mut self) {
        let c0 = self.coeff(0);
        *self.coeff_mut(0) = Complex64::new(c0.re, 0.0);
        for k in 1..=self.order as i64 {
            let avg = 0.5 * (self.coeff(k) + self.coeff(-k).conj());
            *self.coeff_mut(k) = avg;
            *self.coeff_mut(-k) = avg.conj();
        }
    }

    /// (∫_𝕋 |f|² dm)^{1/2} with dm = dθ, by Parseval.
    pub fn l2_norm(&self) -> f64 {
        (2.0 * PI * self.coeffs.iter().map(|c| c.norm_sqr()).sum::<f64>()).sqrt()
    }

    pub fn scale(&self, a: Complex64) -> Self {
        CircleSeries {
            order: self.order,
            coeffs: self.coeffs.iter().map(|c| c * a).collect(),
        }
    }

    pub fn sub(&self, other: &Self) -> Self {
        let order = self.order.max(other.order);
        let mut s = Self::zeros(order);
        for k in -(order as i64)..=(order as i64) {
            *s.coeff_mut(k) = self.coeff(k) - other.coeff(k);
        }
        s
    }

    /// Text format: one `k re im` line per mode, '#' comments allowed.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for (k, c) in self.modes() {
            writeln!(out, "{k} {:.17e} {:.17e}", c.re, c.im).unwrap();
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut modes = Vec::new();
        let mut order = 0usize;
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap().trim();
            if line.is_empty() {
                continue;
            }
            let parse_err = |message: String| Error::Parse { line: i + 1, message };
            let f: Vec<&str> = line.split_whitespace().collect();
            if f.len() != 3 {
                return Err(parse_err(format!("expected `k re im`, got {} fields", f.len())));
            }
            let k: i64 = f[0].parse().map_err(|e| parse_err(format!("mode index: {e}")))?;
            let re: f64 = f[1].parse().map_err(|e| parse_err(format!("real part: {e}")))?;
            let im: f64 = f[2].parse().map_err(|e| parse_err(format!("imaginary part: {e}")))?;
            order = order.max(k.unsigned_abs() as usize);
            modes.push((k, Complex64::new(re, im)));
        }
        Self::from_modes(order, &modes)
    }
}

/// The 2N+1 equispaced transform angles.
pub fn nodes(order: usize) -> Vec<f64> {
    let m = 2 * order + 1;
    (0..m).map(|j| 2.0 * PI * j as f64 / m as f64).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn sample_round_trip() {
        let s = CircleSeries::from_modes(
            8,
            &[(-3, Complex64::new(0.5, -1.0)), (0, Complex64::new(2.0, 0.0)), (7, Complex64::new(0.0, 0.25))],
        )
        .unwrap();
        let back = CircleSeries::from_samples(&s.samples()).unwrap();
        for (a, b) in s.coefficients().iter().zip(back.coefficients()) {
            assert!((a - b).norm() < 1e-14);
        }
    }

    #[test]
    fn cosine_has_half_coefficients() {
        let s = CircleSeries::from_real_fn(4, |t| (2.0 * t).cos());
        assert_relative_eq!(s.coeff(2).re, 0.5, epsilon = 1e-15);
        assert_relative_eq!(s.coeff(-2).re, 0.5, epsilon = 1e-15);
        assert!(s.check_real(1e-12).is_ok());
        assert!((s.eval(0.3) - Complex64::new(0.6f64.cos(), 0.0)).norm() < 1e-14);
    }

    #[test]
    fn text_round_trip() {
        let s = CircleSeries::from_modes(2, &[(1, Complex64::new(0.1, 0.2)), (-2, Complex64::new(1.0 / 3.0, 0.0))]).unwrap();
        let t = CircleSeries::from_text(&s.to_text()).unwrap();
        assert_eq!(s, t);
        assert!(matches!(CircleSeries::from_text("1 2"), Err(Error::Parse { line: 1, .. })));
    }

    #[test]
    fn complex_series_is_not_real() {
        let s = CircleSeries::from_modes(1, &[(1, Complex64::new(1.0, 0.0))]).unwrap();
        assert!(matches!(s.check_real(1e-12), Err(Error::NotReal { mode: 1, .. })));
    }
}
