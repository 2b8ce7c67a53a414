//! Odd-length symmetric smoothing windows, peak-normalized to 1 at center.

use crate::tfr::TfrError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WindowKind {
    Hamming,
    Gaussian,
    Rect,
}

impl WindowKind {
    pub fn parse(s: &str) -> Option<WindowKind> {
        match s.to_ascii_lowercase().as_str() {
            "hamming" => Some(WindowKind::Hamming),
            "gaussian" => Some(WindowKind::Gaussian),
            "rect" => Some(WindowKind::Rect),
            _ => None,
        }
    }
}

/// Build a symmetric window of odd `length`. Gaussian uses sigma = length/6.
pub fn make_window(kind: WindowKind, length: usize) -> Result<Vec<f64>, TfrError> {
    if length == 0 || length % 2 == 0 {
        return Err(TfrError::EvenLength { length });
    }
    if length == 1 {
        return Ok(vec![1.0]);
    }
    let center = (length - 1) as f64 / 2.0;
    let raw: Vec<f64> = (0..length)
        .map(|k| match kind {
            WindowKind::Rect => 1.0,
            WindowKind::Hamming => {
                0.54 - 0.46 * (std::f64::consts::TAU * k as f64 / (length - 1) as f64).cos()
            }
            WindowKind::Gaussian => {
                let sigma = length as f64 / 6.0;
                let d = (k as f64 - center) / sigma;
                (-0.5 * d * d).exp()
            }
        })
        .collect();
    let peak = raw[(length - 1) / 2];
    Ok(raw.into_iter().map(|v| v / peak).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rect_is_all_ones() {
        assert_eq!(make_window(WindowKind::Rect, 5).unwrap(), vec![1.0; 5]);
    }

    #[test]
    fn length_one_is_trivial() {
        for kind in [WindowKind::Hamming, WindowKind::Gaussian, WindowKind::Rect] {
            assert_eq!(make_window(kind, 1).unwrap(), vec![1.0]);
        }
    }

    #[test]
    fn hamming_matches_closed_form() {
        let w = make_window(WindowKind::Hamming, 5).unwrap();
        let closed: Vec<f64> = (0..5)
            .map(|k| 0.54 - 0.46 * (std::f64::consts::TAU * k as f64 / 4.0).cos())
            .collect();
        let peak = closed[2];
        for (a, b) in w.iter().zip(&closed) {
            assert!((a - b / peak).abs() < 1e-15);
        }
        assert_eq!(w[2], 1.0);
    }

    #[test]
    fn windows_are_symmetric_and_positive() {
        for kind in [WindowKind::Hamming, WindowKind::Gaussian, WindowKind::Rect] {
            let w = make_window(kind, 31).unwrap();
            for k in 0..31 {
                assert!(w[k] > 0.0);
                assert!((w[k] - w[30 - k]).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn even_length_is_rejected() {
        assert!(matches!(
            make_window(WindowKind::Hamming, 4),
            Err(TfrError::EvenLength { length: 4 })
        ));
    }
}
