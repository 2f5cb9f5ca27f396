//! Numerical workbench for the two-dimensional conductivity equation
//! ∇·(σ∇u) = 0 and the inverse Robin problem.
//!
//! The crate is organised by subsystem:
//!
//! * [`geometry`]: polygons, triangulations, boundary frames and partitions;
//! * [`disk_hardy`]: Fourier-side Hardy space tools on the unit disk;
//! * [`conformal`]: Schwarz–Christoffel maps and Smirnov norms;
//! * [`fem`]: P1 Neumann and Robin solvers, traces and σ-harmonic conjugates;
//! * [`factorization`]: the similarity factorization ∂u = e^Ψ Φ and the
//!   unique-continuation diagnostics built on it;
//! * [`anisotropic`]: reduction of anisotropic conductivities to isotropic
//!   ones through a Beltrami map;
//! * [`inverse`]: data completion, Robin coefficient recovery and the
//!   uniqueness experiments.

pub mod anisotropic;
pub mod conformal;
pub mod disk_hardy;
pub mod error;
pub mod factorization;
pub mod fem;
pub mod geometry;
pub mod inverse;
pub mod linalg;
pub mod problem;
pub mod quadrature;

pub use error::{Error, Result};
pub use geometry::{Domain, Mesh, Point};
pub use num_complex::Complex64;
