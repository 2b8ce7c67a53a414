//! File ingestion: the raw tensor format, a single-rate BDF parser/writer,
//! and a synthetic EEG generator for desk-scale experiments.

mod bdf;
mod raw;
mod synth;

pub use bdf::{
    read_bdf, read_bdf_header, write_bdf, BdfChannel, BdfHeader, BDF_DIGITAL_MAX, BDF_DIGITAL_MIN,
};
pub use raw::{read_raw, read_raw_tensor, write_raw, write_raw_tensor, RawTensor, RAW_MAGIC};
pub use synth::{synth_recording, SpectralPeak, SynthSpec};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("bad magic: {context}")]
    BadMagic { context: String },
    #[error("truncated file: expected {expected} bytes, found {actual}")]
    TruncatedFile { expected: u64, actual: u64 },
    #[error("channels disagree on samples per record; this reader only supports single-rate files")]
    MixedRates,
    #[error("sample {value} at channel {channel} outside physical range [{min}, {max}]")]
    RangeOverflow {
        channel: usize,
        value: f64,
        min: f64,
        max: f64,
    },
    #[error("unsupported layout: {reason}")]
    UnsupportedLayout { reason: String },
    #[error("bad synthesis spec: {reason}")]
    BadSpec { reason: String },
    #[error("malformed header field {field}: {value:?}")]
    BadHeaderField { field: &'static str, value: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
