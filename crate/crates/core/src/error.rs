use thiserror::Error;

/// Errors raised by the workbench.
///
/// Variants split into two families: bad input (the caller can fix the data)
/// and numerical failure (the data was acceptable but a solver broke down).
/// [`Error::is_numerical`] tells them apart, which the CLI maps onto exit codes.
#[derive(Debug, Error)]
pub enum Error {
    #[error("polygon needs at least 3 distinct vertices, got {0}")]
    TooFewVertices(usize),

    #[error("consecutive polygon vertices {0} and {1} coincide")]
    RepeatedVertex(usize, usize),

    #[error("polygon is self-intersecting: edge {edge_a} crosses edge {edge_b}")]
    SelfIntersecting { edge_a: usize, edge_b: usize },

    #[error("target size h = {h_target} is too coarse for this polygon; largest feasible h is {max_feasible}")]
    MeshTooCoarse { h_target: f64, max_feasible: f64 },

    #[error("invalid mesh: {0}")]
    InvalidMesh(String),

    #[error("boundary partition violates Γ ∪ Γ₀ = ∂Ω with Λ(Γ) > 0, Λ(Γ₀) > 0: {0}")]
    DegeneratePartition(String),

    #[error("argument outside the domain of definition: {0}")]
    OutOfDomain(String),

    #[error("expected a real-valued series, mode {mode} violates c(-k) = conj(c(k)) by {defect:e}")]
    NotReal { mode: i64, defect: f64 },

    #[error("sample {index} = {value} is not positive (log h ∈ L¹(𝕋) needs h > 0 at every node)")]
    NonPositive { index: usize, value: f64 },

    #[error("expected a holomorphic (analytic) disk function")]
    NotHolomorphic,

    #[error("incompatible Neumann data: ⟨g, σ⟩ = {residual:e} exceeds tolerance {tolerance:e} (compatibility ⟨∂ₙu, σ⟩ = 0)")]
    Incompatible { residual: f64, tolerance: f64 },

    #[error("conductivity violates ellipticity c ≤ σ ≤ 1/c at node {node}: {detail}")]
    Ellipticity { node: usize, detail: String },

    #[error("invalid Robin coefficient: {0}")]
    InvalidRobin(String),

    #[error("size mismatch: {0}")]
    Mismatch(String),

    #[error("{0}")]
    InvalidInput(String),

    #[error("linear solver failure: {0}")]
    Solver(String),

    #[error("iteration did not converge after {iterations} steps (residual {residual:e})")]
    NoConvergence { iterations: usize, residual: f64 },

    #[error("ill-conditioned system (condition estimate {condition:e}); {advice}")]
    IllConditioned { condition: f64, advice: String },

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// True when the failure happened inside a numerical method rather than
    /// because of malformed input.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::Solver(_)
                | Error::NoConvergence { .. }
                | Error::IllConditioned { .. }
                | Error::Numerical(_)
        )
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
