//! Forged-channel EEG classification pipeline.
//!
//! Turns raw multichannel EEG recordings into "forged" RGB-like images and
//! classifies them with a small CNN, evaluated by leave-one-subject-out
//! cross-validation:
//!
//! ```text
//! recording ──band-pass──ICA──▶ cleaned recording
//!    │ epoch (2 s windows)
//!    ▼
//! epoch [C × L] ──split channels into 3 groups──average──▶ 3 signals
//!    │ SPWVD per signal
//!    ▼
//! 3 time-frequency matrices ──resize──min-max──stack──▶ image [3 × H × W]
//!    │ CNN (train / predict)
//!    ▼
//! per-epoch labels ──majority per subject──▶ LOSOCV report
//! ```
//!
//! Module map:
//! - [`model`] — domain types (recordings, epochs, labels, manifests) and epoching
//! - [`ingest`] — BDF and raw tensor file formats plus a synthetic EEG generator
//! - [`preprocess`] — windowed-sinc band-pass filtering and FastICA
//! - [`tfr`] — analytic signal and the smoothed pseudo Wigner-Ville distribution
//! - [`forge`] — epoch → image pipeline (split, average, transform, resize, stack)
//! - [`nn`] — from-scratch CNN: layers, backprop, Adam, training loop, checkpoints
//! - [`losocv`] — leave-one-subject-out harness and report rendering

pub mod forge;
pub mod ingest;
pub mod losocv;
pub mod mat;
pub mod model;
pub mod nn;
pub mod preprocess;
pub mod tfr;
pub mod util;

pub use mat::Mat;
pub use model::{ClassLabel, DatasetManifest, Epoch, Recording};
