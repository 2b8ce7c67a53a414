//! Signal cleaning: zero-phase band-pass filtering, FastICA decomposition,
//! and pluggable component rejection.

mod fir;
mod ica;

pub use fir::{apply_zero_phase, design_bandpass, FirKernel};
pub use ica::{
    excess_kurtosis, fastica, reject_and_rebuild, rejected_indices, IcaDecomposition,
    RejectionPolicy,
};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum PreprocessError {
    #[error("band edges must satisfy 0 < {low_hz} < {high_hz} < {sample_rate_hz}/2")]
    BadBand {
        low_hz: f64,
        high_hz: f64,
        sample_rate_hz: f64,
    },
    #[error("recording of {n_samples} samples is not longer than the {n_taps}-tap kernel")]
    TooShort { n_samples: usize, n_taps: usize },
    #[error("fixed-point iteration hit the cap without converging (partial result attached)")]
    NoConvergence { partial: Box<IcaDecomposition> },
    #[error("covariance is rank deficient beyond tolerance")]
    RankDeficient,
    #[error("{n_samples} samples is too few for {n_channels} channels (need 10x)")]
    TooFewSamples { n_samples: usize, n_channels: usize },
    #[error("component index {index} out of range for {n_components} components")]
    BadIndex { index: usize, n_components: usize },
}
