use thiserror::Error;

pub type Result<T> = std::result::Result<T, IsacError>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum IsacError {
    /// An argument fell outside the domain of the function.
    #[error("domain error in {function}: {detail}")]
    Domain {
        function: &'static str,
        detail: String,
    },

    /// A quadrature or root search did not converge within its budget.
    #[error("numerical failure in {context}: residual estimate {residual:e}")]
    NumericalFailure { context: String, residual: f64 },

    /// Every sensing stream of the block has unit variance under the
    /// Gaussian surrogate, so the test statistic has no chi-square part.
    #[error("degenerate detection statistic in block {block}: sigma^2 = 1 on every stream")]
    DegenerateStatistic { block: usize },

    /// Zero dispersion exactly at the decoding threshold.
    #[error("undefined argument: {0}")]
    UndefinedArgument(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    /// Requested subset enumeration is too large for heterogeneous gains.
    #[error("enumeration over {blocks} blocks exceeds the limit of {limit}; set equal_gains to use the collapsed formulas")]
    EnumerationLimit { blocks: usize, limit: usize },
}

impl IsacError {
    pub(crate) fn domain(function: &'static str, detail: impl Into<String>) -> Self {
        IsacError::Domain {
            function,
            detail: detail.into(),
        }
    }
}
