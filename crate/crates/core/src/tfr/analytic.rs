//! Analytic signal via the FFT construction of the Hilbert transform.

use rustfft::{num_complex::Complex64, FftPlanner};

use crate::tfr::TfrError;

/// Build the analytic signal of a real vector: keep DC and Nyquist, double
/// the positive-frequency bins, zero the negative ones, inverse-transform.
/// The real part of the result equals the input (to rounding).
pub fn analytic_signal(x: &[f64]) -> Result<Vec<Complex64>, TfrError> {
    let n = x.len();
    if n < 2 {
        return Err(TfrError::TooShort {
            n_samples: n,
            required: 2,
        });
    }
    let mut planner = FftPlanner::new();
    let mut buf: Vec<Complex64> = x.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    planner.plan_fft_forward(n).process(&mut buf);

    let half = n / 2;
    for (k, v) in buf.iter_mut().enumerate() {
        if k == 0 || (n % 2 == 0 && k == half) {
            // DC, and Nyquist for even lengths, pass through unchanged.
        } else if k < half || (n % 2 == 1 && k == half) {
            *v *= 2.0;
        } else {
            *v = Complex64::ZERO;
        }
    }

    planner.plan_fft_inverse(n).process(&mut buf);
    let scale = 1.0 / n as f64;
    for v in buf.iter_mut() {
        *v *= scale;
    }
    Ok(buf)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_in_zero_out() {
        let z = analytic_signal(&[0.0; 64]).unwrap();
        assert!(z.iter().all(|c| c.norm() == 0.0));
    }

    #[test]
    fn real_part_reproduces_input() {
        let x: Vec<f64> = (0..777).map(|i| ((i * i) as f64 * 0.013).sin() * 3.0).collect();
        let max = x.iter().fold(0.0f64, |m, &v| m.max(v.abs()));
        let z = analytic_signal(&x).unwrap();
        for (zi, xi) in z.iter().zip(&x) {
            assert!((zi.re - xi).abs() <= 1e-9 * max);
        }
    }

    #[test]
    fn binned_cosine_becomes_complex_exponential() {
        let n = 1024;
        let x: Vec<f64> = (0..n)
            .map(|t| (std::f64::consts::TAU * 32.0 * t as f64 / n as f64).cos())
            .collect();
        let z = analytic_signal(&x).unwrap();
        for (t, zi) in z.iter().enumerate() {
            let arg = std::f64::consts::TAU * 32.0 * t as f64 / n as f64;
            let expect = Complex64::new(arg.cos(), arg.sin());
            assert!((zi - expect).norm() <= 1e-6, "t={t}");
        }
    }

    #[test]
    fn too_short_input_errors() {
        assert!(matches!(
            analytic_signal(&[1.0]),
            Err(TfrError::TooShort { .. })
        ));
    }
}
