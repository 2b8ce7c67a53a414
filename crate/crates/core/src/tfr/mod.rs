//! Time-frequency analysis: smoothing windows, the analytic signal, and the
//! smoothed pseudo Wigner-Ville distribution.

mod analytic;
mod spwvd;
mod window;

pub use analytic::analytic_signal;
pub use spwvd::{spwvd, spwvd_checked, SpwvdConfig, TfrMatrix};
pub use window::{make_window, WindowKind};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum TfrError {
    #[error("window length must be odd, got {length}")]
    EvenLength { length: usize },
    #[error("signal of {n_samples} samples is shorter than required {required}")]
    TooShort { n_samples: usize, required: usize },
    #[error("bad config: {reason}")]
    BadConfig { reason: String },
}
