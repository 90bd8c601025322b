use thiserror::Error;

/// Errors raised by the library.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("division by zero")]
    DivisionByZero,

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("unknown manifold `{0}`")]
    UnknownManifold(String),

    #[error("evaluator failed at {point:?}: {reason}")]
    Evaluation { point: Vec<f64>, reason: String },

    #[error("point is not on the surface (|Phi| = {residual:e})")]
    NotOnSurface { residual: f64 },

    #[error("Newton solve failed for theta = {theta:?}: {reason}")]
    Solver { theta: Vec<f64>, reason: String },

    #[error("near-singular Hessian (|det| = {det:e})")]
    Singular { det: f64 },

    #[error("exact mode unsupported: {0}")]
    ExactUnsupported(String),

    #[error("memory budget exceeded: {shards} shards of {shard_bytes} bytes needed (budget {budget} bytes)")]
    Resource {
        shards: u64,
        shard_bytes: u64,
        budget: u64,
    },

    #[error("symbol bound violated: grid estimate {estimate} exceeds declared B = {declared}")]
    SymbolBound { estimate: f64, declared: f64 },

    #[error("degenerate input: {0}")]
    Degenerate(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// True for failures of numerical procedures (solver, singularity,
    /// surface membership, evaluator), as opposed to bad input.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::Solver { .. }
                | Error::Singular { .. }
                | Error::NotOnSurface { .. }
                | Error::Evaluation { .. }
        )
    }
}
