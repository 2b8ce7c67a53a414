//! Synthetic EEG generator: band-limited oscillations plus white noise,
//! fully determined by a seed. Stands in for real recordings in tests and
//! desk-scale experiments.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::ingest::IngestError;
use crate::mat::Mat;
use crate::model::{ClassLabel, Recording};
use crate::util::derive_seed_indexed;

/// One spectral peak: a sinusoid at `center_hz` whose instantaneous
/// frequency wanders within roughly `bandwidth_hz` (zero bandwidth gives a
/// pure tone).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectralPeak {
    pub center_hz: f64,
    pub bandwidth_hz: f64,
    pub amplitude: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthSpec {
    pub peaks: Vec<SpectralPeak>,
    pub noise_sigma: f64,
    pub duration_s: f64,
    pub n_channels: usize,
    pub sample_rate_hz: f64,
    pub seed: u64,
}

impl SynthSpec {
    fn validate(&self) -> Result<(), IngestError> {
        let nyquist = self.sample_rate_hz / 2.0;
        for p in &self.peaks {
            if !(p.center_hz > 0.0 && p.center_hz < nyquist) {
                return Err(IngestError::BadSpec {
                    reason: format!("peak at {} Hz outside (0, {nyquist}) Hz", p.center_hz),
                });
            }
        }
        if !(self.duration_s > 0.0) {
            return Err(IngestError::BadSpec {
                reason: format!("nonpositive duration {}", self.duration_s),
            });
        }
        if self.n_channels == 0 || !(self.sample_rate_hz > 0.0) {
            return Err(IngestError::BadSpec {
                reason: "need at least one channel and a positive sample rate".into(),
            });
        }
        Ok(())
    }
}

/// Zero-mean, unit-variance slow noise: white Gaussian samples smoothed by a
/// moving average of `window` samples (variance restored analytically).
fn smoothed_noise(rng: &mut ChaCha8Rng, n: usize, window: usize) -> Vec<f64> {
    let window = window.max(1);
    let white: Vec<f64> = (0..n + window).map(|_| StandardNormal.sample(rng)).collect();
    let scale = (window as f64).sqrt() / window as f64;
    let mut acc: f64 = white[..window].iter().sum();
    let mut out = Vec::with_capacity(n);
    for t in 0..n {
        out.push(acc * scale);
        acc += white[t + window] - white[t];
    }
    out
}

/// Generate one recording. Each channel draws its own RNG stream derived
/// from `(spec.seed, channel)`, so output is independent of evaluation order.
pub fn synth_recording(
    spec: &SynthSpec,
    subject_id: &str,
    label: ClassLabel,
) -> Result<Recording, IngestError> {
    spec.validate()?;
    let fs = spec.sample_rate_hz;
    let n = (spec.duration_s * fs).round() as usize;
    let mut data = Mat::zeros(spec.n_channels, n);

    for ch in 0..spec.n_channels {
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed_indexed(spec.seed, ch as u64));
        let mut signal = vec![0.0f64; n];
        for peak in &spec.peaks {
            let phase0: f64 = rng.gen_range(0.0..std::f64::consts::TAU);
            if peak.bandwidth_hz > 0.0 {
                // Frequency modulation by slow noise: the instantaneous
                // frequency has standard deviation bandwidth_hz.
                let window = ((fs / (2.0 * peak.bandwidth_hz)).round() as usize).max(1);
                let drift = smoothed_noise(&mut rng, n, window);
                let mut phase = phase0;
                for t in 0..n {
                    signal[t] += peak.amplitude * phase.sin();
                    let f_inst = peak.center_hz + peak.bandwidth_hz * drift[t];
                    phase += std::f64::consts::TAU * f_inst / fs;
                }
            } else {
                for (t, s) in signal.iter_mut().enumerate() {
                    let phase = phase0 + std::f64::consts::TAU * peak.center_hz * t as f64 / fs;
                    *s += peak.amplitude * phase.sin();
                }
            }
        }
        if spec.noise_sigma > 0.0 {
            for s in signal.iter_mut() {
                let w: f64 = StandardNormal.sample(&mut rng);
                *s += spec.noise_sigma * w;
            }
        }
        for (t, &v) in signal.iter().enumerate() {
            data.set(ch, t, v as f32);
        }
    }

    Ok(Recording {
        subject_id: subject_id.to_string(),
        label,
        sample_rate_hz: fs,
        channel_names: (0..spec.n_channels).map(|i| format!("ch{i:02}")).collect(),
        data,
    })
}

// ChaCha8Rng re-exported seeding trait.
use rand::SeedableRng;
