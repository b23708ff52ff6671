use crate::channel::SystemDims;

pub type Result<T> = std::result::Result<T, Error>;

/// Library-wide error type.
///
/// The CLI maps variants onto process exit codes: config errors -> 2,
/// infeasible dimensions -> 3, resource guard -> 4, excessive solver
/// exclusions -> 5.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("matrix is rank deficient (sigma_min = {sigma_min:.3e}, sigma_max = {sigma_max:.3e})")]
    RankDeficient { sigma_min: f64, sigma_max: f64 },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("infeasible system dimensions {0:?}: properness requires d*(K+1) <= M+N")]
    InfeasibleDims(SystemDims),

    #[error("quantization pipeline requires (K-1)*N > M, got dims {0:?}")]
    NotQuantizable(SystemDims),

    #[error("triangular factor is singular and cannot be inverted")]
    SingularFactor,

    #[error("codebook of {bits} bits exceeds the resource guard of {max} bits; use the perturbation mode for large codebooks")]
    ResourceGuard { bits: u32, max: u32 },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("degenerate sampling parameters: {0}")]
    DegenerateParams(String),

    #[error("numerical failure: {0}")]
    NumericalFailure(String),

    #[error("alignment residual {residual:.3e} violates the solver postcondition (tolerance {tol:.3e})")]
    AlignmentViolated { residual: f64, tol: f64 },

    #[error("{excluded} of {trials} trials excluded for non-convergence (limit {limit_percent}%)")]
    ExcessiveExclusions {
        excluded: usize,
        trials: usize,
        limit_percent: f64,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
