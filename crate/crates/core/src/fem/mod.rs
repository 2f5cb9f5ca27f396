//! P1 finite elements for ∇·(σ∇u) = 0 with Neumann or Robin boundary data.
//!
//! Boundary data (g, λ, fluxes) are piecewise constant on node supports: node
//! k owns the arc between the midpoints of its two adjacent boundary
//! segments. Integrals of boundary data are therefore Σ_k v_k w_k with w_k the
//! support length, and the weak forms integrate those piecewise constants
//! against the P1 traces exactly.

mod assembly;
mod conjugate;
mod oracle;
mod solve;
mod trace;

pub use assembly::{boundary_load, robin_mass, stiffness, weighted_boundary_integral};
pub use conjugate::{sigma_conjugate, sigma_conjugate_with_residual, ConjugateField};
pub use oracle::{disk_series_oracle, CircleSplit, OracleSolution};
pub use solve::{
    compatibility_residual, flux_balance, interior_residual, robin_energy_norm, solve_dirichlet, solve_neumann,
    solve_neumann_with, solve_robin, Normalization, NeumannSolver, RobinSolver, RobinSpec,
};
pub use trace::{normal_derivative, tangential_derivative};

use crate::error::{Error, Result};
use crate::geometry::{BoundaryPartition, Mesh, Point};

/// Real nodal P1 field.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarField {
    values: Vec<f64>,
}

impl ScalarField {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidInput(format!("non-finite value at node {i}")));
        }
        Ok(ScalarField { values })
    }

    pub fn zeros(n: usize) -> Self {
        ScalarField { values: vec![0.0; n] }
    }

    /// Nodal interpolant of `f`.
    pub fn from_fn(mesh: &Mesh, f: impl Fn(Point) -> f64) -> Self {
        ScalarField {
            values: mesh.nodes().iter().map(|&p| f(p)).collect(),
        }
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn scaled(&self, a: f64) -> Self {
        ScalarField {
            values: self.values.iter().map(|v| a * v).collect(),
        }
    }

    pub fn sub(&self, other: &ScalarField) -> Self {
        ScalarField {
            values: self.values.iter().zip(&other.values).map(|(a, b)| a - b).collect(),
        }
    }

    /// Values at the boundary nodes, in boundary order.
    pub fn trace(&self, mesh: &Mesh) -> BoundaryFunction {
        BoundaryFunction {
            values: mesh.boundary_nodes().iter().map(|&i| self.values[i]).collect(),
        }
    }

    pub fn l2_norm(&self, mesh: &Mesh) -> f64 {
        mesh.l2_norm(&self.values)
    }

    /// ‖∇u‖_{L²(Ω)}.
    pub fn gradient_norm(&self, mesh: &Mesh) -> f64 {
        (0..mesh.triangles().len())
            .map(|t| {
                let g = mesh.gradient(t, &self.values);
                mesh.triangle_area(t) * g.dot(g)
            })
            .sum::<f64>()
            .sqrt()
    }

    /// ‖u‖_{W^{1,2}(Ω)} = (‖u‖² + ‖∇u‖²)^{1/2}.
    pub fn w12_norm(&self, mesh: &Mesh) -> f64 {
        (self.l2_norm(mesh).powi(2) + self.gradient_norm(mesh).powi(2)).sqrt()
    }

    pub(crate) fn check_len(&self, mesh: &Mesh) -> Result<()> {
        if self.values.len() != mesh.num_nodes() {
            return Err(Error::Mismatch(format!(
                "field has {} values, mesh has {} nodes",
                self.values.len(),
                mesh.num_nodes()
            )));
        }
        Ok(())
    }
}

/// Real values at the boundary nodes (boundary order), read as piecewise
/// constant on node supports.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundaryFunction {
    values: Vec<f64>,
}

impl BoundaryFunction {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidInput(format!("non-finite boundary value at position {i}")));
        }
        Ok(BoundaryFunction { values })
    }

    pub fn zeros(n: usize) -> Self {
        BoundaryFunction { values: vec![0.0; n] }
    }

    /// Samples `f(k, point)` at every boundary position.
    pub fn from_fn(mesh: &Mesh, f: impl Fn(usize, Point) -> f64) -> Self {
        BoundaryFunction {
            values: (0..mesh.num_boundary()).map(|k| f(k, mesh.boundary_point(k))).collect(),
        }
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn scaled(&self, a: f64) -> Self {
        BoundaryFunction {
            values: self.values.iter().map(|v| a * v).collect(),
        }
    }

    pub fn sub(&self, other: &BoundaryFunction) -> Self {
        BoundaryFunction {
            values: self.values.iter().zip(&other.values).map(|(a, b)| a - b).collect(),
        }
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        BoundaryFunction {
            values: self.values.iter().map(|&v| f(v)).collect(),
        }
    }

    /// Copy that keeps the values on Γ (`on_gamma`) or on Γ₀ and zeroes the rest.
    pub fn restrict(&self, partition: &BoundaryPartition, on_gamma: bool) -> Self {
        BoundaryFunction {
            values: self
                .values
                .iter()
                .enumerate()
                .map(|(k, &v)| if partition.in_gamma(k) == on_gamma { v } else { 0.0 })
                .collect(),
        }
    }

    /// ∫_{∂Ω} v dΛ.
    pub fn integrate(&self, mesh: &Mesh) -> f64 {
        mesh.boundary_weights().iter().zip(&self.values).map(|(w, v)| w * v).sum()
    }

    /// ‖v‖_{L²(∂Ω)}.
    pub fn l2_norm(&self, mesh: &Mesh) -> f64 {
        self.l2_norm_where(mesh, |_| true)
    }

    /// L² norm over the supports of the positions selected by `keep`.
    pub fn l2_norm_where(&self, mesh: &Mesh, keep: impl Fn(usize) -> bool) -> f64 {
        mesh.boundary_weights()
            .iter()
            .zip(&self.values)
            .enumerate()
            .filter(|(k, _)| keep(*k))
            .map(|(_, (w, v))| w * v * v)
            .sum::<f64>()
            .sqrt()
    }

    pub(crate) fn check_len(&self, mesh: &Mesh, what: &str) -> Result<()> {
        if self.values.len() != mesh.num_boundary() {
            return Err(Error::Mismatch(format!(
                "{what} has {} values, mesh has {} boundary nodes",
                self.values.len(),
                mesh.num_boundary()
            )));
        }
        Ok(())
    }
}

/// Symmetric 2×2 matrix [[s11, s12], [s12, s22]].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sym2 {
    pub s11: f64,
    pub s12: f64,
    pub s22: f64,
}

impl Sym2 {
    pub fn new(s11: f64, s12: f64, s22: f64) -> Self {
        Sym2 { s11, s12, s22 }
    }

    pub fn scalar(a: f64) -> Self {
        Sym2::new(a, 0.0, a)
    }

    pub fn det(&self) -> f64 {
        self.s11 * self.s22 - self.s12 * self.s12
    }

    pub fn trace(&self) -> f64 {
        self.s11 + self.s22
    }

    /// Eigenvalues, smaller first.
    pub fn eigenvalues(&self) -> (f64, f64) {
        let m = 0.5 * self.trace();
        let r = (0.25 * (self.s11 - self.s22).powi(2) + self.s12 * self.s12).sqrt();
        (m - r, m + r)
    }

    pub fn apply(&self, p: Point) -> Point {
        Point::new(self.s11 * p.x + self.s12 * p.y, self.s12 * p.x + self.s22 * p.y)
    }

    pub fn is_scalar(&self) -> bool {
        self.s12 == 0.0 && self.s11 == self.s22
    }

    fn avg(a: Sym2, b: Sym2, c: Sym2) -> Sym2 {
        Sym2::new(
            (a.s11 + b.s11 + c.s11) / 3.0,
            (a.s12 + b.s12 + c.s12) / 3.0,
            (a.s22 + b.s22 + c.s22) / 3.0,
        )
    }
}

#[derive(Debug, Clone, PartialEq)]
enum SigmaValues {
    Scalar(Vec<f64>),
    Matrix(Vec<Sym2>),
}

/// Nodal conductivity, scalar or symmetric-matrix valued, with its
/// ellipticity constant c (c ≤ σ ≤ 1/c, or eigenvalues in [c, 1/c]).
#[derive(Debug, Clone, PartialEq)]
pub struct Conductivity {
    values: SigmaValues,
    ellipticity: f64,
}

impl Conductivity {
    /// Isotropic σ; c is the largest constant the samples satisfy.
    pub fn isotropic(values: Vec<f64>) -> Result<Self> {
        for (node, &s) in values.iter().enumerate() {
            if !(s > 0.0) || !s.is_finite() {
                return Err(Error::Ellipticity {
                    node,
                    detail: format!("σ = {s} is not a positive finite number"),
                });
            }
        }
        let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = values.iter().copied().fold(0.0, f64::max);
        Ok(Conductivity {
            ellipticity: lo.min(1.0 / hi),
            values: SigmaValues::Scalar(values),
        })
    }

    /// Isotropic σ checked against a prescribed ellipticity constant.
    pub fn isotropic_with_bound(values: Vec<f64>, c: f64) -> Result<Self> {
        if !(c > 0.0 && c <= 1.0) {
            return Err(Error::InvalidInput(format!("ellipticity constant must lie in (0, 1], got {c}")));
        }
        for (node, &s) in values.iter().enumerate() {
            if !(s >= c && s <= 1.0 / c) {
                return Err(Error::Ellipticity {
                    node,
                    detail: format!("σ = {s} outside [{c}, {}]", 1.0 / c),
                });
            }
        }
        Ok(Conductivity {
            values: SigmaValues::Scalar(values),
            ellipticity: c,
        })
    }

    pub fn constant(mesh: &Mesh, s: f64) -> Result<Self> {
        Self::isotropic(vec![s; mesh.num_nodes()])
    }

    pub fn from_fn(mesh: &Mesh, f: impl Fn(Point) -> f64) -> Result<Self> {
        Self::isotropic(mesh.nodes().iter().map(|&p| f(p)).collect())
    }

    /// Matrix-valued σ; every sample must be symmetric positive definite.
    pub fn anisotropic(values: Vec<Sym2>) -> Result<Self> {
        let mut c = f64::INFINITY;
        for (node, m) in values.iter().enumerate() {
            let (lo, hi) = m.eigenvalues();
            if !(lo > 0.0) || !hi.is_finite() {
                return Err(Error::Ellipticity {
                    node,
                    detail: format!("matrix {m:?} is not positive definite"),
                });
            }
            c = c.min(lo).min(1.0 / hi);
        }
        Ok(Conductivity {
            values: SigmaValues::Matrix(values),
            ellipticity: c,
        })
    }

    pub fn anisotropic_from_fn(mesh: &Mesh, f: impl Fn(Point) -> Sym2) -> Result<Self> {
        Self::anisotropic(mesh.nodes().iter().map(|&p| f(p)).collect())
    }

    pub fn ellipticity(&self) -> f64 {
        self.ellipticity
    }

    pub fn is_isotropic(&self) -> bool {
        matches!(self.values, SigmaValues::Scalar(_))
    }

    pub fn len(&self) -> usize {
        match &self.values {
            SigmaValues::Scalar(v) => v.len(),
            SigmaValues::Matrix(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Nodal scalar values, if isotropic.
    pub fn scalar_values(&self) -> Option<&[f64]> {
        match &self.values {
            SigmaValues::Scalar(v) => Some(v),
            SigmaValues::Matrix(_) => None,
        }
    }

    pub fn matrix_at(&self, node: usize) -> Sym2 {
        match &self.values {
            SigmaValues::Scalar(v) => Sym2::scalar(v[node]),
            SigmaValues::Matrix(v) => v[node],
        }
    }

    /// Scalar value at `node`; for a matrix field, √det σ.
    pub fn scalar_at(&self, node: usize) -> f64 {
        match &self.values {
            SigmaValues::Scalar(v) => v[node],
            SigmaValues::Matrix(v) => v[node].det().sqrt(),
        }
    }

    /// Mean of the nodal values over triangle `t` (exact for P1 σ in the
    /// stiffness integral, since hat gradients are constant).
    pub fn element_matrix(&self, mesh: &Mesh, t: usize) -> Sym2 {
        let [a, b, c] = mesh.triangles()[t];
        Sym2::avg(self.matrix_at(a), self.matrix_at(b), self.matrix_at(c))
    }

    pub fn element_scalar(&self, mesh: &Mesh, t: usize) -> f64 {
        let [a, b, c] = mesh.triangles()[t];
        (self.scalar_at(a) + self.scalar_at(b) + self.scalar_at(c)) / 3.0
    }

    /// 1/σ (isotropic only).
    pub fn reciprocal(&self) -> Result<Self> {
        match &self.values {
            SigmaValues::Scalar(v) => Self::isotropic(v.iter().map(|s| 1.0 / s).collect()),
            SigmaValues::Matrix(_) => Err(Error::InvalidInput(
                "reciprocal conductivity is only defined here for isotropic σ".into(),
            )),
        }
    }

    pub(crate) fn check_len(&self, mesh: &Mesh) -> Result<()> {
        if self.len() != mesh.num_nodes() {
            return Err(Error::Mismatch(format!(
                "conductivity has {} values, mesh has {} nodes",
                self.len(),
                mesh.num_nodes()
            )));
        }
        Ok(())
    }

    pub(crate) fn require_isotropic(&self, what: &str) -> Result<&[f64]> {
        self.scalar_values()
            .ok_or_else(|| Error::InvalidInput(format!("{what} requires an isotropic conductivity")))
    }
}
