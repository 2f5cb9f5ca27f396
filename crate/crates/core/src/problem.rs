//! TOML problem and experiment descriptions shared by the CLI and the tests.
//!
//! ```toml
//! [domain]
//! kind = "regular"
//! sides = 64
//!
//! [mesh]
//! h = 0.1
//!
//! [sigma]
//! kind = "bump"
//! amplitude = 0.5
//! width = 4.0
//!
//! [partition]
//! gamma = [[0.5, 1.0]]
//!
//! [lambda]
//! kind = "constant"
//! value = 0.7
//!
//! [g]
//! kind = "cosine"
//! mode = 1
//! ```
//!
//! Boundary positions are read as arclength fractions s ∈ [0, 1) of the
//! perimeter, starting at boundary node 0 and running counterclockwise.

use crate::error::{Error, Result};
use crate::fem::{BoundaryFunction, Conductivity, RobinSpec, Sym2};
use crate::geometry::{triangulate, BoundaryPartition, Domain, Mesh, Point};
use serde::{Deserialize, Serialize};
use std::f64::consts::TAU;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum DomainConfig {
    /// Regular polygon inscribed in the circle of `radius` about the origin,
    /// vertex 0 on the positive x axis.
    Regular {
        sides: usize,
        #[serde(default = "one")]
        radius: f64,
    },
    /// [0, width] × [0, height].
    Rectangle { width: f64, height: f64 },
    Polygon { vertices: Vec<[f64; 2]> },
}

fn one() -> f64 {
    1.0
}

impl DomainConfig {
    pub fn build(&self) -> Result<Domain> {
        match self {
            DomainConfig::Regular { sides, radius } => Domain::regular(*sides, *radius),
            DomainConfig::Rectangle { width, height } => Domain::rectangle(*width, *height),
            DomainConfig::Polygon { vertices } => Domain::new(vertices.iter().map(|v| Point::new(v[0], v[1])).collect()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MeshConfig {
    pub h: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum SigmaConfig {
    Constant { value: f64 },
    /// base + amplitude · exp(−width |x − c|²), c the domain centroid.
    Bump {
        #[serde(default = "one")]
        base: f64,
        amplitude: f64,
        width: f64,
    },
    /// Constant symmetric matrix [[s11, s12], [s12, s22]].
    Matrix { s11: f64, s12: f64, s22: f64 },
}

impl SigmaConfig {
    pub fn build(&self, mesh: &Mesh) -> Result<Conductivity> {
        match *self {
            SigmaConfig::Constant { value } => Conductivity::constant(mesh, value),
            SigmaConfig::Bump { base, amplitude, width } => {
                let c = mesh.domain().centroid();
                Conductivity::from_fn(mesh, |p| base + amplitude * (-width * (p - c).dot(p - c)).exp())
            }
            SigmaConfig::Matrix { s11, s12, s22 } => Conductivity::anisotropic_from_fn(mesh, |_| Sym2::new(s11, s12, s22)),
        }
    }
}

/// Γ as a union of half-open arclength-fraction intervals [a, b) (b may
/// exceed 1 to wrap).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PartitionConfig {
    pub gamma: Vec<[f64; 2]>,
}

/// Arclength fraction of every boundary position.
pub fn boundary_fractions(mesh: &Mesh) -> Vec<f64> {
    let p = mesh.perimeter();
    mesh.arclength().iter().map(|s| s / p).collect()
}

impl PartitionConfig {
    pub fn build(&self, mesh: &Mesh) -> Result<BoundaryPartition> {
        for &[a, b] in &self.gamma {
            if !(a.is_finite() && b.is_finite() && a < b && b - a <= 1.0) {
                return Err(Error::InvalidInput(format!("bad Γ interval [{a}, {b}]")));
            }
        }
        let s = boundary_fractions(mesh);
        let flags = s
            .iter()
            .map(|&t| {
                self.gamma.iter().any(|&[a, b]| {
                    let shifted = (t - a).rem_euclid(1.0);
                    shifted < b - a
                })
            })
            .collect();
        BoundaryPartition::from_nodes(mesh, flags)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum BoundaryConfig {
    Constant { value: f64 },
    /// mean + amplitude · cos(2π · mode · s), s the arclength fraction.
    Cosine {
        #[serde(default)]
        mean: f64,
        #[serde(default = "one")]
        amplitude: f64,
        mode: u32,
    },
    /// mean + amplitude · sin(2π · mode · s).
    Sine {
        #[serde(default)]
        mean: f64,
        #[serde(default = "one")]
        amplitude: f64,
        mode: u32,
    },
}

impl BoundaryConfig {
    pub fn eval(&self, s: f64) -> f64 {
        match *self {
            BoundaryConfig::Constant { value } => value,
            BoundaryConfig::Cosine { mean, amplitude, mode } => mean + amplitude * (TAU * mode as f64 * s).cos(),
            BoundaryConfig::Sine { mean, amplitude, mode } => mean + amplitude * (TAU * mode as f64 * s).sin(),
        }
    }

    pub fn build(&self, mesh: &Mesh) -> BoundaryFunction {
        let s = boundary_fractions(mesh);
        BoundaryFunction::from_fn(mesh, |k, _| self.eval(s[k]))
    }
}

#[derive(Deserialize)]
struct DomainSection {
    domain: DomainConfig,
}

impl DomainConfig {
    /// The `[domain]` table of any problem or experiment file.
    pub fn from_toml(text: &str) -> Result<Self> {
        if let Ok(d) = parse_toml::<DomainSection>(text) {
            return Ok(d.domain);
        }
        #[derive(Deserialize)]
        struct Nested {
            problem: DomainSection,
        }
        parse_toml::<Nested>(text).map(|n| n.problem.domain)
    }
}

/// A forward Robin problem.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RobinProblem {
    pub domain: DomainConfig,
    pub mesh: MeshConfig,
    pub sigma: SigmaConfig,
    pub partition: PartitionConfig,
    pub lambda: BoundaryConfig,
    pub g: BoundaryConfig,
}

fn parse_toml<T: for<'de> Deserialize<'de>>(text: &str) -> Result<T> {
    toml::from_str(text).map_err(|e| {
        let line = e
            .span()
            .map(|s| text[..s.start.min(text.len())].matches('\n').count() + 1)
            .unwrap_or(0);
        Error::Parse { line, message: e.message().to_string() }
    })
}

impl RobinProblem {
    pub fn from_toml(text: &str) -> Result<Self> {
        parse_toml(text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn build_mesh(&self) -> Result<Mesh> {
        triangulate(&self.domain.build()?, self.mesh.h)
    }

    pub fn build(&self) -> Result<(Mesh, RobinSpec)> {
        let mesh = self.build_mesh()?;
        let spec = self.spec_on(&mesh)?;
        Ok((mesh, spec))
    }

    pub fn spec_on(&self, mesh: &Mesh) -> Result<RobinSpec> {
        RobinSpec::new(
            mesh,
            self.sigma.build(mesh)?,
            self.partition.build(mesh)?,
            self.lambda.build(mesh),
            self.g.build(mesh),
        )
    }
}

/// The λ-pair family: λ₂ = λ₁ + amplitude on a run of `size` Γ nodes
/// centred in the longest Γ arc; size 0 is the identical pair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PerturbationConfig {
    #[serde(default = "half")]
    pub amplitude: f64,
    pub sizes: Vec<usize>,
}

fn half() -> f64 {
    0.5
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RecoveryConfig {
    #[serde(default = "default_floor")]
    pub floor: f64,
    /// Relative Gaussian noise on the Γ₀ trace; above zero the recovery goes
    /// through data completion with the discrepancy principle.
    #[serde(default)]
    pub noise: f64,
}

fn default_floor() -> f64 {
    crate::inverse::DEFAULT_FLOOR
}

impl Default for RecoveryConfig {
    fn default() -> Self {
        RecoveryConfig { floor: default_floor(), noise: 0.0 }
    }
}

/// Beltrami grid resolution for anisotropic problems.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnisotropicConfig {
    #[serde(default = "default_grid")]
    pub grid: usize,
}

fn default_grid() -> usize {
    128
}

impl Default for AnisotropicConfig {
    fn default() -> Self {
        AnisotropicConfig { grid: default_grid() }
    }
}

/// A uniqueness experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default)]
    pub seed: u64,
    pub problem: RobinProblem,
    pub perturbation: PerturbationConfig,
    #[serde(default)]
    pub recovery: RecoveryConfig,
    #[serde(default)]
    pub anisotropic: AnisotropicConfig,
}

impl ExperimentConfig {
    /// Disk-polygon suite: 64-gon, σ a centred bump, Γ the lower half,
    /// λ = 1.1 + 0.9 sin 2θ, g = cos θ, the identical pair and ten
    /// perturbations from 2 nodes up to half of Γ.
    pub fn default_suite() -> Self {
        ExperimentConfig {
            seed: 0,
            problem: RobinProblem {
                domain: DomainConfig::Regular { sides: 64, radius: 1.0 },
                mesh: MeshConfig { h: 0.095 },
                sigma: SigmaConfig::Bump { base: 1.0, amplitude: 0.5, width: 4.0 },
                partition: PartitionConfig { gamma: vec![[0.5, 1.0]] },
                lambda: BoundaryConfig::Sine { mean: 1.1, amplitude: 0.9, mode: 2 },
                g: BoundaryConfig::Cosine { mean: 0.0, amplitude: 1.0, mode: 1 },
            },
            perturbation: PerturbationConfig { amplitude: 0.5, sizes: vec![0, 2, 3, 4, 6, 8, 12, 16, 20, 24, 32] },
            recovery: RecoveryConfig::default(),
            anisotropic: AnisotropicConfig::default(),
        }
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        parse_toml(text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const ROBIN: &str = r#"
[domain]
kind = "regular"
sides = 32

[mesh]
h = 0.15

[sigma]
kind = "bump"
amplitude = 0.5
width = 4.0

[partition]
gamma = [[0.5, 1.0]]

[lambda]
kind = "constant"
value = 0.7

[g]
kind = "cosine"
mode = 1
"#;

    #[test]
    fn robin_problem_builds() {
        let p = RobinProblem::from_toml(ROBIN).unwrap();
        let (mesh, spec) = p.build().unwrap();
        let s = boundary_fractions(&mesh);
        for k in 0..mesh.num_boundary() {
            assert_eq!(spec.partition.in_gamma(k), s[k] >= 0.5);
            if spec.partition.in_gamma(k) {
                assert_eq!(spec.lambda.values()[k], 0.7);
                assert_eq!(spec.g.values()[k], 0.0);
            } else {
                let theta = mesh.boundary_point(k).y.atan2(mesh.boundary_point(k).x);
                assert!((spec.g.values()[k] - theta.cos()).abs() < 1e-9);
            }
        }
        assert_eq!(RobinProblem::from_toml(&p.to_toml()).unwrap(), p);
    }

    #[test]
    fn wrapping_interval_and_errors() {
        let mut p = RobinProblem::from_toml(ROBIN).unwrap();
        p.partition.gamma = vec![[0.9, 1.1]];
        let (mesh, spec) = p.build().unwrap();
        assert!(spec.partition.in_gamma(0));
        assert!(!spec.partition.in_gamma(mesh.num_boundary() / 2));

        let err = RobinProblem::from_toml(&ROBIN.replace("sides = 32", "sides = 32\ncolour = 1")).unwrap_err();
        // fields of a tagged table are reported at the table header
        assert!(matches!(err, Error::Parse { line: 2, .. }), "{err}");
        assert!(RobinProblem::from_toml(&ROBIN.replace("\"regular\"", "\"circle\"")).is_err());
        p.partition.gamma = vec![[0.5, 0.2]];
        assert!(p.build().is_err());
    }

    #[test]
    fn experiment_defaults() {
        let text = format!("[problem]\n{}\n[perturbation]\nsizes = [0, 2]\n", ROBIN.replace("\n[", "\n[problem."));
        let c = ExperimentConfig::from_toml(&text).unwrap();
        assert_eq!(c.seed, 0);
        assert_eq!(c.perturbation.amplitude, 0.5);
        assert_eq!(c.recovery, RecoveryConfig::default());
        assert_eq!(c.anisotropic.grid, 128);
        assert_eq!(ExperimentConfig::from_toml(&c.to_toml()).unwrap(), c);
    }
}
