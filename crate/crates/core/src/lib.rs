//! Temporal point process modeling for event sequences paired with evenly
//! sampled time series.
//!
//! The crate covers the full experimental loop at desk scale:
//!
//! - [`hawkes`]: exact simulation of multivariate exponential-kernel Hawkes
//!   processes (Ogata thinning) and a synthetic-study generator.
//! - [`model`]: the attentional twin-LSTM point process (ATRPP): one LSTM over
//!   asynchronous events, one over the time series, per-dimension attention,
//!   a synergic fusion layer, and dimension/time prediction heads, with exact
//!   analytic gradients for every parameter.
//! - [`train`]: weighted likelihood objective and RMSprop training.
//! - [`baselines`]: classical comparison models (Poisson, self-correcting,
//!   Markov chain, CTMC, Hawkes MLE, logistic) behind a common [`predictor`]
//!   trait, registered by name.
//! - [`metrics`]: precision/recall/F1, MAE, accuracy@k, Kendall tau-b based
//!   rank correlation, and relative error of infectivity estimates.

pub mod baselines;
pub mod checkpoint;
pub mod data;
pub mod hawkes;
pub mod io;
pub mod linalg;
pub mod metrics;
pub mod model;
pub mod predictor;
pub mod train;

/// Crate-wide error type.
///
/// Variants are grouped so callers (notably the CLI) can map them onto
/// usage/data/numeric failure classes.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("invalid data: {0}")]
    Data(String),
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("invalid config: {0}")]
    Config(String),
    #[error("numeric failure: {0}")]
    Numeric(String),
    #[error("unstable parameters: {0}")]
    Unstable(String),
}

pub type Result<T> = std::result::Result<T, Error>;
