//! Fixtures shared by the benchmarks.

use robinucq_core::fem::RobinSpec;
use robinucq_core::problem::RobinProblem;
use robinucq_core::Mesh;

pub const DISK: &str = include_str!("../../../configs/disk.toml");
pub const SQUARE_ANISO: &str = include_str!("../../../configs/square_aniso.toml");
pub const LSHAPE: &str = include_str!("../../../configs/lshape.toml");

/// Mesh and Robin data of a bundled problem, with the mesh size overridden.
pub fn problem(text: &str, h: f64) -> (Mesh, RobinSpec) {
    let mut p = RobinProblem::from_toml(text).expect("bundled config parses");
    p.mesh.h = h;
    p.build().expect("bundled config builds")
}
