//! Discrete smoothed pseudo Wigner-Ville distribution.
//!
//! For the analytic signal `z` of the input, each time column `n` builds the
//! windowed instantaneous autocorrelation
//!
//! ```text
//! K(n, m) = h[m] * sum_u g[u] * z[n-u+m] * conj(z[n-u-m])     m in [-M, M]
//! ```
//!
//! with `g` smoothing over time and `h` over lag; indices outside the signal
//! contribute zero. The column spectrum is the `n_freq_bins`-point FFT over
//! the lag axis (negative lags wrapped), which is real because `K(n, .)` is
//! conjugate-symmetric. Bin `k` sits at `k * fs / (2 * n_freq_bins)` Hz —
//! the half-rate spacing of the Wigner-Ville bilinear form — so the axis
//! covers `[0, fs/2)`.

use rustfft::{num_complex::Complex64, FftPlanner};

use crate::mat::Mat;
use crate::tfr::{analytic_signal, make_window, TfrError, WindowKind};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpwvdConfig {
    pub n_freq_bins: usize,
    /// Time-smoothing window `g`: kind and odd length.
    pub time_window: (WindowKind, usize),
    /// Lag-smoothing window `h`: kind and odd length.
    pub lag_window: (WindowKind, usize),
}

impl Default for SpwvdConfig {
    fn default() -> Self {
        Self {
            n_freq_bins: 2048,
            time_window: (WindowKind::Hamming, 31),
            lag_window: (WindowKind::Hamming, 255),
        }
    }
}

impl SpwvdConfig {
    pub fn validate(&self) -> Result<(), TfrError> {
        for (name, len) in [("time", self.time_window.1), ("lag", self.lag_window.1)] {
            if len == 0 || len % 2 == 0 {
                return Err(TfrError::BadConfig {
                    reason: format!("{name} window length {len} is not odd"),
                });
            }
        }
        let half_extent = (self.lag_window.1 - 1) / 2;
        if self.n_freq_bins < 2 || self.n_freq_bins < 2 * half_extent {
            return Err(TfrError::BadConfig {
                reason: format!(
                    "n_freq_bins {} must be >= 2 and >= twice the lag half-extent {half_extent}",
                    self.n_freq_bins
                ),
            });
        }
        Ok(())
    }
}

/// A time-frequency matrix: `values` is freq bins x time samples.
#[derive(Debug, Clone)]
pub struct TfrMatrix {
    pub values: Mat<f64>,
    pub freq_axis_hz: Vec<f64>,
    pub time_axis_s: Vec<f64>,
}

/// Compute the SPWVD of a real signal. See the module docs for the exact
/// discrete form. Output shape is `n_freq_bins x x.len()`.
pub fn spwvd(x: &[f64], cfg: &SpwvdConfig, sample_rate_hz: f64) -> Result<TfrMatrix, TfrError> {
    let (tfr, residual) = spwvd_checked(x, cfg, sample_rate_hz)?;
    debug_assert!(
        residual < 1e-9,
        "imaginary residual {residual} exceeds realness tolerance"
    );
    Ok(tfr)
}

/// Like [`spwvd`], also returning the largest imaginary magnitude left over
/// after taking real parts, relative to the largest real magnitude. The
/// transform of a real signal is real up to rounding, so this is a cheap
/// internal-consistency diagnostic.
pub fn spwvd_checked(
    x: &[f64],
    cfg: &SpwvdConfig,
    sample_rate_hz: f64,
) -> Result<(TfrMatrix, f64), TfrError> {
    cfg.validate()?;
    let nt = x.len();
    let lag_len = cfg.lag_window.1;
    if nt < lag_len {
        return Err(TfrError::TooShort {
            n_samples: nt,
            required: lag_len,
        });
    }
    let nf = cfg.n_freq_bins;
    let g = make_window(cfg.time_window.0, cfg.time_window.1)?;
    let h = make_window(cfg.lag_window.0, cfg.lag_window.1)?;
    let half_g = (g.len() - 1) as isize / 2;
    let half_m = (h.len() - 1) as isize / 2;

    let z = analytic_signal(x)?;
    let fft = FftPlanner::new().plan_fft_forward(nf);
    let mut scratch = vec![Complex64::ZERO; fft.get_inplace_scratch_len()];
    let mut buf = vec![Complex64::ZERO; nf];

    let mut values = Mat::zeros64(nf, nt);
    let mut max_re = 0.0f64;
    let mut max_im = 0.0f64;
    let nt_i = nt as isize;

    for n in 0..nt {
        buf.fill(Complex64::ZERO);
        let n_i = n as isize;
        for m in -half_m..=half_m {
            // j = n - u runs over the time-smoothing support, clipped so that
            // both z[j + m] and z[j - m] stay inside the signal.
            let j_lo = (n_i - half_g).max(m.abs());
            let j_hi = (n_i + half_g).min(nt_i - 1 - m.abs());
            if j_lo > j_hi {
                continue;
            }
            let mut acc = Complex64::ZERO;
            for j in j_lo..=j_hi {
                let w = g[(n_i - j + half_g) as usize];
                let prod = z[(j + m) as usize] * z[(j - m) as usize].conj();
                acc += w * prod;
            }
            let slot = (m.rem_euclid(nf as isize)) as usize;
            buf[slot] += h[(m + half_m) as usize] * acc;
        }
        fft.process_with_scratch(&mut buf, &mut scratch);
        for (k, v) in buf.iter().enumerate() {
            values.set(k, n, v.re);
            max_re = max_re.max(v.re.abs());
            max_im = max_im.max(v.im.abs());
        }
    }

    let residual = if max_re > 0.0 { max_im / max_re } else { 0.0 };
    let freq_axis_hz = (0..nf)
        .map(|k| k as f64 * sample_rate_hz / (2.0 * nf as f64))
        .collect();
    let time_axis_s = (0..nt).map(|n| n as f64 / sample_rate_hz).collect();
    Ok((
        TfrMatrix {
            values,
            freq_axis_hz,
            time_axis_s,
        },
        residual,
    ))
}
