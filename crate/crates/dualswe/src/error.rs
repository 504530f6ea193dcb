use thiserror::Error;

/// Errors produced by mesh construction, I/O and the solvers.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// Geometric degeneracy detected while building or checking a mesh.
    #[error("mesh quality: {0}")]
    MeshQuality(String),

    /// Malformed mesh file; carries the 1-based line number.
    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    /// The state violates a physical precondition (e.g. φ ≤ 0).
    #[error("state error: {0}")]
    State(String),

    /// The iterative solver did not reach the requested residual.
    #[error("solver failure: residual {residual:.3e} after {iterations} iterations")]
    SolverFailure {
        iterations: usize,
        residual: f64,
        /// Relative residual at each iteration, for post-mortems.
        history: Vec<f64>,
    },

    /// A required run/mesh configuration item is missing or inconsistent.
    #[error("configuration error: {0}")]
    Config(String),

    #[error("unsupported: {0}")]
    Unsupported(String),
}
