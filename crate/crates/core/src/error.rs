use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("symbol {symbol} is outside the alphabet of size {alphabet_size}")]
    InvalidWord { symbol: usize, alphabet_size: usize },

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("non-finite value in {0}")]
    NonFinite(String),

    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("model is not valid: {0}")]
    Validity(String),

    #[error("effect eigenvalue {eigenvalue:.3e} lies outside [0, 1]")]
    InvalidEffect { eigenvalue: f64 },

    #[error("construction failed: {0}")]
    Construction(String),

    #[error("degenerate stationarity: {0}")]
    DegenerateStationarity(String),

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("truncated chain is not stationary (residual {residual:.3e})")]
    Truncation { residual: f64 },

    #[error("factorization is rank deficient (sigma_r / sigma_1 = {ratio:.3e})")]
    RankDeficient { ratio: f64 },

    #[error("matrix is not diagonalizable near eigenvalue {re:.6} {im:+.6}i")]
    JordanStructure { re: f64, im: f64 },

    #[error("all symbol probabilities vanished at step {step}")]
    NumericalCollapse { step: usize },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// True for failures caused by the numerics rather than by the inputs.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::DegenerateStationarity(_)
                | Error::Numerical(_)
                | Error::Truncation { .. }
                | Error::RankDeficient { .. }
                | Error::JordanStructure { .. }
                | Error::NumericalCollapse { .. }
        )
    }
}
