use thiserror::Error;

/// Errors raised by the mesh, assembly, and time-stepping layers.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("mesh parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("invalid mesh: {0}")]
    InvalidMesh(String),

    #[error("degenerate element {element}: {message}")]
    DegenerateElement { element: usize, message: String },

    #[error("configuration has {got} degrees of freedom, expected {expected}")]
    SizeMismatch { expected: usize, got: usize },

    #[error("configuration is not admissible (margin {margin:e})")]
    NotAdmissible { margin: f64 },

    #[error("density must be non-negative, got {0}")]
    NegativeDensity(f64),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("free energy is not defined for law 2 with alpha = {alpha} < 2 (formal mode)")]
    FormalMode { alpha: f64 },

    #[error("singular or indefinite matrix: {reason} (smallest pivot {pivot:e})")]
    Singular { reason: String, pivot: f64 },

    #[error("linear solver failure: {0}")]
    Solver(String),

    #[error("newton did not converge in {iterations} iterations (residual {residual:e})")]
    NewtonMaxIterations { iterations: usize, residual: f64 },

    #[error("newton damping fell below the floor at iteration {iteration} (residual {residual:e})")]
    DampingFloor { iteration: usize, residual: f64 },

    #[error("discrete energy inequality violated: {lhs:e} > {rhs:e}")]
    EnergyInequality { lhs: f64, rhs: f64 },

    #[error("step {step} failed: {source}")]
    Step {
        step: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("insufficient data: {0}")]
    InsufficientData(String),
}

pub type Result<T> = std::result::Result<T, Error>;
