use thiserror::Error;

#[derive(Debug, Error)]
pub enum LsepError {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("contraction violated: chi_m + ||eps||_{q}*chi_sigma = {value:.6} >= 1")]
    Contraction { value: f64, q: f64 },

    #[error("coefficient template is not summable: {0}")]
    NotSummable(String),

    #[error("lag {lag} at index {index} reaches before the stored history (burn-in {burn_in})")]
    HistoryExceeded { lag: usize, index: usize, burn_in: usize },

    #[error("quadrature did not converge: estimate {estimate:.6e}, residual {residual:.3e}")]
    Quadrature { estimate: f64, residual: f64 },

    #[error("integral diverges near zero: local exponent {exponent:.4} >= 1")]
    Divergent { exponent: f64 },

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl LsepError {
    pub fn invalid(msg: impl Into<String>) -> Self {
        LsepError::InvalidArgument(msg.into())
    }

    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            LsepError::Quadrature { .. } | LsepError::Divergent { .. } | LsepError::Numerical(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, LsepError>;
