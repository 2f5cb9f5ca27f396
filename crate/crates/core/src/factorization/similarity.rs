use super::{beltrami_coefficient, cauchy_transform, complex_derivative, complex_derivative_of, element_derivatives, ComplexField};
use crate::error::{Error, Result};
use crate::fem::{sigma_conjugate, solve_dirichlet, BoundaryFunction, Conductivity, ScalarField};
use crate::geometry::Mesh;
use num_complex::Complex64;
use std::fmt::Write as _;

/// Relative size below which w counts as zero in the quotient w̄/w.
const QUOTIENT_GUARD: f64 = 1e-10;
/// max|∂u| below this times max|u|/diam(Ω) counts as ∇u ≡ 0.
const TRIVIAL_GRADIENT: f64 = 1e-12;

/// ∂u = e^Ψ Φ with Φ pseudo-holomorphic, plus the diagnostics of the run.
#[derive(Debug, Clone)]
pub struct FactorizationResult {
    pub psi: ComplexField,
    pub phi: ComplexField,
    /// ‖∂̄Φ‖ / ‖Φ‖ over Ω, element-wise.
    pub dbar_residual: f64,
    /// Relative nodal L² misfit of ∂u − e^Ψ Φ where |w| is above the guard.
    pub reconstruction_error: f64,
    /// ‖∂f − (1 + σ)∂u‖ / ‖(1 + σ)∂u‖ with f = u + iv from the discrete conjugate.
    pub conjugate_defect: f64,
    /// max |e^{−Ψ}|.
    pub max_exp_neg_psi: f64,
    /// ∇u ≡ 0: Φ ≡ 0 and the factorization carries no information.
    pub trivial: bool,
    du: ComplexField,
    guarded: Vec<bool>,
}

impl FactorizationResult {
    pub fn du(&self) -> &ComplexField {
        &self.du
    }

    /// CSV rows `x,y,Re psi,Im psi,Re phi,Im phi`.
    pub fn to_csv(&self, mesh: &Mesh) -> String {
        let mut out = String::from("x,y,re_psi,im_psi,re_phi,im_phi\n");
        for (i, p) in mesh.nodes().iter().enumerate() {
            let (s, f) = (self.psi.values()[i], self.phi.values()[i]);
            writeln!(out, "{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e}", p.x, p.y, s.re, s.im, f.re, f.im).unwrap();
        }
        out
    }
}

fn lumped_norm(mass: &[f64], values: impl Iterator<Item = Complex64>) -> f64 {
    mass.iter().zip(values).map(|(m, z)| m * z.norm_sqr()).sum::<f64>().sqrt()
}

fn dbar_ratio(mesh: &Mesh, phi: &ComplexField) -> f64 {
    let size = phi.l2_norm(mesh);
    if size == 0.0 {
        return 0.0;
    }
    let num: f64 = (0..mesh.triangles().len())
        .map(|t| mesh.triangle_area(t) * element_derivatives(mesh, t, phi.values()).1.norm_sqr())
        .sum();
    num.sqrt() / size
}

fn reconstruction(mesh: &Mesh, du: &ComplexField, psi: &ComplexField, phi: &ComplexField, guarded: &[bool]) -> f64 {
    let mass = mesh.lumped_mass();
    let keep = |i: usize| !guarded[i];
    let diff = lumped_norm(
        &mass,
        (0..du.len()).map(|i| if keep(i) { du.values()[i] - psi.values()[i].exp() * phi.values()[i] } else { Complex64::new(0.0, 0.0) }),
    );
    let size = lumped_norm(&mass, (0..du.len()).map(|i| if keep(i) { du.values()[i] } else { Complex64::new(0.0, 0.0) }));
    if size == 0.0 {
        diff
    } else {
        diff / size
    }
}

/// Similarity factorization of the complex derivative of a σ-harmonic u.
///
/// With ν = (1 − σ)/(1 + σ) and ∂f = (1 + σ)∂u, w = (1 − ν²)^{1/2}∂f solves
/// ∂̄w = α w̄ with α = ∂ν/(1 − ν²). Then s = C[α w̄/w], Φ = w e^{−s} and
/// Ψ = s − ½ log(1 − ν²) − log(1 + σ).
pub fn similarity_factorize(mesh: &Mesh, u: &ScalarField, sigma: &Conductivity) -> Result<FactorizationResult> {
    let nu = beltrami_coefficient(sigma)?;
    let s_values = sigma.scalar_values().expect("isotropic after beltrami_coefficient");
    let du = complex_derivative(mesh, u)?;
    let n = mesh.num_nodes();
    let one_minus: Vec<f64> = nu.values().iter().map(|z| 1.0 - z.re * z.re).collect();
    let level = u.values().iter().fold(0.0f64, |m, v| m.max(v.abs())) / mesh.domain().diameter();
    if du.max_abs() <= TRIVIAL_GRADIENT * level {
        // ∇u ≡ 0 up to rounding: there is nothing to factor
        let psi = ComplexField::new(
            (0..n).map(|i| Complex64::new(-0.5 * one_minus[i].ln() - (1.0 + s_values[i]).ln(), 0.0)).collect(),
        )?;
        let max_exp_neg_psi = psi.values().iter().map(|z| (-z.re).exp()).fold(0.0, f64::max);
        return Ok(FactorizationResult {
            psi,
            phi: ComplexField::zeros(n),
            dbar_residual: 0.0,
            reconstruction_error: 0.0,
            conjugate_defect: 0.0,
            max_exp_neg_psi,
            trivial: true,
            du,
            guarded: vec![true; n],
        });
    }
    let v = sigma_conjugate(mesh, u, sigma)?;

    let df: Vec<Complex64> = (0..n).map(|i| (1.0 + s_values[i]) * du.values()[i]).collect();
    let f = ComplexField::new(
        u.values().iter().zip(v.values()).map(|(&a, &b)| Complex64::new(a, b)).collect(),
    )?;
    let df_discrete = complex_derivative_of(mesh, &f)?;
    let mass = mesh.lumped_mass();
    let df_size = lumped_norm(&mass, df.iter().copied());
    let conjugate_defect = if df_size == 0.0 {
        0.0
    } else {
        lumped_norm(&mass, df.iter().zip(df_discrete.values()).map(|(a, b)| a - b)) / df_size
    };

    let w: Vec<Complex64> = (0..n).map(|i| one_minus[i].sqrt() * df[i]).collect();
    let dnu = complex_derivative_of(mesh, &nu)?;
    let alpha: Vec<Complex64> = (0..n).map(|i| dnu.values()[i] / one_minus[i]).collect();
    let wmax = w.iter().map(|z| z.norm()).fold(0.0, f64::max);
    let guarded: Vec<bool> = w.iter().map(|z| z.norm() < QUOTIENT_GUARD * wmax).collect();
    let q: Vec<Complex64> = (0..n)
        .map(|i| if guarded[i] { Complex64::new(0.0, 0.0) } else { alpha[i] * w[i].conj() / w[i] })
        .collect();
    let s = if q.iter().all(|z| z.norm_sqr() == 0.0) {
        ComplexField::zeros(n)
    } else {
        cauchy_transform(mesh, &ComplexField::new(q)?)?
    };

    let psi = ComplexField::new(
        (0..n)
            .map(|i| s.values()[i] - 0.5 * one_minus[i].ln() - (1.0 + s_values[i]).ln())
            .collect(),
    )?;
    let phi = ComplexField::new((0..n).map(|i| w[i] * (-s.values()[i]).exp()).collect())?;
    let max_exp_neg_psi = psi.values().iter().map(|z| (-z.re).exp()).fold(0.0, f64::max);
    let reconstruction_error = reconstruction(mesh, &du, &psi, &phi, &guarded);
    if !(reconstruction_error <= 1e-8) {
        return Err(Error::Numerical(format!(
            "similarity factorization does not reproduce ∂u (relative error {reconstruction_error:e})"
        )));
    }
    Ok(FactorizationResult {
        dbar_residual: dbar_ratio(mesh, &phi),
        psi,
        phi,
        reconstruction_error,
        conjugate_defect,
        max_exp_neg_psi,
        trivial: false,
        du,
        guarded,
    })
}

/// Moves Im Ψ off the boundary: with h harmonic, h = Im Ψ on ∂Ω, and
/// H = −h̃ + i h holomorphic, returns Ψ − H and Φ e^H.
pub fn realify_on_boundary(mesh: &Mesh, result: &FactorizationResult) -> Result<FactorizationResult> {
    let one = Conductivity::constant(mesh, 1.0)?;
    let trace = BoundaryFunction::new(result.psi.trace(mesh).iter().map(|z| z.im).collect())?;
    let h = solve_dirichlet(mesh, &one, &trace)?;
    let ht = sigma_conjugate(mesh, &h, &one)?;
    let hol: Vec<Complex64> = h.values().iter().zip(ht.values()).map(|(&b, &a)| Complex64::new(-a, b)).collect();
    let psi = ComplexField::new(result.psi.values().iter().zip(&hol).map(|(p, h)| p - h).collect())?;
    let phi = ComplexField::new(result.phi.values().iter().zip(&hol).map(|(f, h)| f * h.exp()).collect())?;
    let max_exp_neg_psi = psi.values().iter().map(|z| (-z.re).exp()).fold(0.0, f64::max);
    Ok(FactorizationResult {
        dbar_residual: dbar_ratio(mesh, &phi),
        reconstruction_error: reconstruction(mesh, &result.du, &psi, &phi, &result.guarded),
        psi,
        phi,
        conjugate_defect: result.conjugate_defect,
        max_exp_neg_psi,
        trivial: result.trivial,
        du: result.du.clone(),
        guarded: result.guarded.clone(),
    })
}
