//! Windowed-sinc band-pass design and zero-phase filtering.

use rayon::prelude::*;

use crate::mat::Mat;
use crate::model::Recording;
use crate::preprocess::PreprocessError;

/// Linear-phase FIR band-pass kernel (odd length, symmetric taps).
#[derive(Debug, Clone)]
pub struct FirKernel {
    pub taps: Vec<f64>,
    pub low_hz: f64,
    pub high_hz: f64,
}

impl FirKernel {
    pub fn n_taps(&self) -> usize {
        self.taps.len()
    }

    /// Complex frequency-response magnitude at `freq_hz` for rate `fs`.
    pub fn response_magnitude(&self, freq_hz: f64, sample_rate_hz: f64) -> f64 {
        let omega = std::f64::consts::TAU * freq_hz / sample_rate_hz;
        let (mut re, mut im) = (0.0, 0.0);
        for (k, &t) in self.taps.iter().enumerate() {
            re += t * (omega * k as f64).cos();
            im -= t * (omega * k as f64).sin();
        }
        (re * re + im * im).sqrt()
    }
}

/// Hamming-windowed sinc lowpass, normalized to exactly unit DC gain.
fn windowed_sinc_lowpass(cutoff_hz: f64, n_taps: usize, sample_rate_hz: f64) -> Vec<f64> {
    let fc = cutoff_hz / sample_rate_hz;
    let center = (n_taps - 1) as f64 / 2.0;
    let mut taps: Vec<f64> = (0..n_taps)
        .map(|k| {
            let x = k as f64 - center;
            let sinc = if x == 0.0 {
                2.0 * fc
            } else {
                (std::f64::consts::TAU * fc * x).sin() / (std::f64::consts::PI * x)
            };
            let hamming =
                0.54 - 0.46 * (std::f64::consts::TAU * k as f64 / (n_taps - 1) as f64).cos();
            sinc * hamming
        })
        .collect();
    let sum: f64 = taps.iter().sum();
    for t in taps.iter_mut() {
        *t /= sum;
    }
    taps
}

/// Design a band-pass kernel as the difference of two unit-DC lowpass
/// kernels, so the band-pass DC gain is exactly zero. The tap count is the
/// smallest odd integer >= 3.3 * fs / transition, where the transition width
/// is `min(low_hz, 0.25 * (fs/2 - high_hz))`.
pub fn design_bandpass(
    sample_rate_hz: f64,
    low_hz: f64,
    high_hz: f64,
) -> Result<FirKernel, PreprocessError> {
    if !(0.0 < low_hz && low_hz < high_hz && high_hz < sample_rate_hz / 2.0) {
        return Err(PreprocessError::BadBand {
            low_hz,
            high_hz,
            sample_rate_hz,
        });
    }
    let transition = low_hz.min(0.25 * (sample_rate_hz / 2.0 - high_hz));
    let mut n = (3.3 * sample_rate_hz / transition).ceil() as usize;
    if n % 2 == 0 {
        n += 1;
    }
    let upper = windowed_sinc_lowpass(high_hz, n, sample_rate_hz);
    let lower = windowed_sinc_lowpass(low_hz, n, sample_rate_hz);
    let taps: Vec<f64> = upper.iter().zip(&lower).map(|(u, l)| u - l).collect();
    Ok(FirKernel {
        taps,
        low_hz,
        high_hz,
    })
}

/// Filter one channel with reflection padding; output has the input length
/// and zero phase (symmetric kernel, group delay compensated).
fn filter_channel(x: &[f32], taps: &[f64]) -> Vec<f32> {
    let n = x.len();
    let pad = (taps.len() - 1) / 2;
    // Reflect without repeating the edge sample: [x[p], ..., x[1]] ++ x ++ [x[n-2], ..., x[n-1-p]]
    let mut padded = Vec::with_capacity(n + 2 * pad);
    for i in 0..pad {
        padded.push(x[pad - i] as f64);
    }
    padded.extend(x.iter().map(|&v| v as f64));
    for i in 0..pad {
        padded.push(x[n - 2 - i] as f64);
    }
    (0..n)
        .map(|t| {
            let mut acc = 0.0;
            for (k, &w) in taps.iter().enumerate() {
                acc += w * padded[t + k];
            }
            acc as f32
        })
        .collect()
}

/// Apply a symmetric kernel to every channel of a recording with zero phase.
pub fn apply_zero_phase(r: &Recording, kernel: &FirKernel) -> Result<Recording, PreprocessError> {
    if r.n_samples() <= kernel.n_taps() {
        return Err(PreprocessError::TooShort {
            n_samples: r.n_samples(),
            n_taps: kernel.n_taps(),
        });
    }
    let rows: Vec<Vec<f32>> = (0..r.n_channels())
        .into_par_iter()
        .map(|ch| filter_channel(r.data.row(ch), &kernel.taps))
        .collect();
    let mut data = Mat::zeros(r.n_channels(), r.n_samples());
    for (ch, row) in rows.into_iter().enumerate() {
        data.row_mut(ch).copy_from_slice(&row);
    }
    Ok(Recording {
        subject_id: r.subject_id.clone(),
        label: r.label,
        sample_rate_hz: r.sample_rate_hz,
        channel_names: r.channel_names.clone(),
        data,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::ClassLabel;

    fn recording_of(rows: Vec<Vec<f32>>, fs: f64) -> Recording {
        let n_ch = rows.len();
        let n = rows[0].len();
        let data: Vec<f32> = rows.into_iter().flatten().collect();
        Recording {
            subject_id: "S01".into(),
            label: ClassLabel::Hc,
            sample_rate_hz: fs,
            channel_names: (0..n_ch).map(|i| format!("ch{i}")).collect(),
            data: Mat::from_vec(n_ch, n, data),
        }
    }

    fn sinusoid(freq: f64, fs: f64, n: usize) -> Vec<f32> {
        (0..n)
            .map(|t| (std::f64::consts::TAU * freq * t as f64 / fs).sin() as f32)
            .collect()
    }

    #[test]
    fn paper_band_design_response() {
        let k = design_bandpass(512.0, 0.5, 50.0).unwrap();
        assert_eq!(k.n_taps() % 2, 1);
        // Smallest odd n >= 3.3 * 512 / 0.5.
        assert_eq!(k.n_taps(), 3381);
        let dc = k.response_magnitude(0.0, 512.0);
        assert!(dc <= 0.01, "DC gain {dc} above -40 dB");
        let mid = k.response_magnitude(10.0, 512.0);
        assert!(
            (20.0 * mid.log10()).abs() <= 0.5,
            "10 Hz gain {mid} outside +/-0.5 dB"
        );
        let stop = k.response_magnitude(100.0, 512.0);
        assert!(stop <= 0.01, "100 Hz gain {stop} above -40 dB");
    }

    #[test]
    fn kernel_is_symmetric() {
        let k = design_bandpass(256.0, 2.0, 50.0).unwrap();
        let n = k.n_taps();
        for i in 0..n {
            assert!((k.taps[i] - k.taps[n - 1 - i]).abs() < 1e-12);
        }
    }

    #[test]
    fn bad_band_ordering_is_rejected() {
        assert!(matches!(
            design_bandpass(512.0, 50.0, 0.5),
            Err(PreprocessError::BadBand { .. })
        ));
        assert!(design_bandpass(512.0, 0.5, 300.0).is_err());
    }

    #[test]
    fn zero_signal_stays_zero() {
        let k = design_bandpass(256.0, 2.0, 50.0).unwrap();
        let r = recording_of(vec![vec![0.0; 2048]; 2], 256.0);
        let y = apply_zero_phase(&r, &k).unwrap();
        assert!(y.data.as_slice().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn passband_sinusoid_keeps_phase_and_amplitude() {
        let fs = 256.0;
        let k = design_bandpass(fs, 2.0, 50.0).unwrap();
        let x = sinusoid(10.0, fs, 2048);
        let r = recording_of(vec![x.clone()], fs);
        let y = apply_zero_phase(&r, &k).unwrap();
        let gain = k.response_magnitude(10.0, fs);
        let lo = k.n_taps();
        let hi = 2048 - k.n_taps();
        for t in lo..hi {
            let expect = gain * x[t] as f64;
            assert!(
                (y.data.get(0, t) as f64 - expect).abs() <= 2e-3,
                "t={t}: {} vs {expect}",
                y.data.get(0, t)
            );
        }
        // Interior peak position is unchanged (zero phase).
        let argmax = |v: &[f32]| {
            (lo..hi)
                .max_by(|&a, &b| v[a].partial_cmp(&v[b]).unwrap())
                .unwrap()
        };
        assert_eq!(argmax(&x), argmax(y.data.row(0)));
    }

    #[test]
    fn below_band_sinusoid_is_attenuated() {
        let fs = 256.0;
        let k = design_bandpass(fs, 2.0, 50.0).unwrap();
        let x = sinusoid(0.05, fs, 2048);
        let r = recording_of(vec![x.clone()], fs);
        let y = apply_zero_phase(&r, &k).unwrap();
        let lo = k.n_taps();
        let hi = 2048 - k.n_taps();
        let rms = |v: &[f32]| {
            (v[lo..hi].iter().map(|&s| (s as f64) * (s as f64)).sum::<f64>()
                / (hi - lo) as f64)
                .sqrt()
        };
        let ratio = rms(y.data.row(0)) / rms(&x);
        assert!(ratio <= 0.0316, "attenuation only {ratio}");
    }

    #[test]
    fn filtering_is_linear() {
        let fs = 256.0;
        let k = design_bandpass(fs, 2.0, 50.0).unwrap();
        let a: Vec<f32> = sinusoid(7.0, fs, 1024);
        let b: Vec<f32> = sinusoid(23.0, fs, 1024);
        let combo: Vec<f32> = a.iter().zip(&b).map(|(&x, &y)| 2.0 * x - 3.0 * y).collect();
        let fa = apply_zero_phase(&recording_of(vec![a], fs), &k).unwrap();
        let fb = apply_zero_phase(&recording_of(vec![b], fs), &k).unwrap();
        let fc = apply_zero_phase(&recording_of(vec![combo], fs), &k).unwrap();
        let scale = fc.data.as_slice().iter().fold(0.0f32, |m, &v| m.max(v.abs()));
        for t in 0..1024 {
            let lhs = fc.data.get(0, t);
            let rhs = 2.0 * fa.data.get(0, t) - 3.0 * fb.data.get(0, t);
            assert!((lhs - rhs).abs() <= 1e-5 * scale.max(1.0), "t={t}");
        }
    }

    #[test]
    fn commutes_with_channel_permutation() {
        let fs = 256.0;
        let k = design_bandpass(fs, 2.0, 50.0).unwrap();
        let a = sinusoid(5.0, fs, 1024);
        let b = sinusoid(30.0, fs, 1024);
        let fwd = apply_zero_phase(&recording_of(vec![a.clone(), b.clone()], fs), &k).unwrap();
        let rev = apply_zero_phase(&recording_of(vec![b, a], fs), &k).unwrap();
        assert_eq!(fwd.data.row(0), rev.data.row(1));
        assert_eq!(fwd.data.row(1), rev.data.row(0));
    }

    #[test]
    fn too_short_recording_is_rejected() {
        let k = design_bandpass(256.0, 2.0, 50.0).unwrap();
        let r = recording_of(vec![vec![1.0; 100]], 256.0);
        assert!(matches!(
            apply_zero_phase(&r, &k),
            Err(PreprocessError::TooShort { .. })
        ));
    }
}
