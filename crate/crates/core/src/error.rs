use thiserror::Error;

/// Errors raised by fitting, statistic construction and the numeric kit.
#[derive(Debug, Error)]
pub enum Error {
    #[error(
        "root statistic {value:e} lies inside the near-zero guard band (threshold {threshold:e})"
    )]
    NearZeroRoot { value: f64, threshold: f64 },

    #[error("correction-to-root ratio u/r = {ratio} is not positive")]
    NonPositiveRatio { ratio: f64 },

    #[error("correction statistic is zero")]
    ZeroCorrection,

    #[error("no convergence within {max_iter} iterations")]
    NonConvergence { max_iter: usize },

    #[error("degenerate data: {0}")]
    DegenerateData(String),

    #[error("constrained log-likelihood exceeds the global maximum by {excess:e}")]
    InconsistentFit { excess: f64 },

    #[error("information matrix is singular or not positive definite")]
    SingularInformation,

    #[error("prior density is not strictly positive at psi = {psi}")]
    NonPositivePrior { psi: f64 },

    #[error(
        "adjusted profile log-likelihood is not concave at its maximum (second derivative {0:e})"
    )]
    NonConcaveAtMax(f64),

    #[error("failed to bracket an interior maximum after {expansions} expansions")]
    BracketFailure { expansions: usize },

    #[error("cell CDF is not monotone over the search bracket")]
    NonMonotone,

    #[error("function evaluation failed near x = {x}")]
    EvaluationFailure { x: f64 },
}

pub type Result<T> = std::result::Result<T, Error>;
