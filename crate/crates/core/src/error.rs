use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("argument outside the function domain: {0}")]
    Domain(String),

    #[error("no sign change on [{lo}, {hi}]: f(lo) = {f_lo}, f(hi) = {f_hi}")]
    NoSignChange { lo: f64, hi: f64, f_lo: f64, f_hi: f64 },

    #[error("received statistic has zero magnitude")]
    ZeroMagnitude,

    #[error("scale estimate is zero; SNR is undefined")]
    DegenerateScale,

    #[error("covariance matrix is singular (det = {0})")]
    SingularCovariance(f64),

    #[error("no real root of the {equation} equation in ({lo}, {hi}]")]
    NoRealRoot { equation: &'static str, lo: f64, hi: f64 },

    #[error("all {0} trials saturated (|z| > sqrt(P))")]
    AllSaturated(usize),

    #[error("invalid {field}: {reason}")]
    InvalidConfig { field: &'static str, reason: String },

    #[error("saturated snapshot: |z| = {magnitude} exceeds sqrt(P) = {limit}")]
    Saturated { magnitude: f64, limit: f64 },
}

impl Error {
    pub(crate) fn invalid(field: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidConfig { field, reason: reason.into() }
    }
}
