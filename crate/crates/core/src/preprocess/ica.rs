//! FastICA: whitening, symmetric fixed-point iteration with a tanh
//! contrast, and component rejection / signal rebuild.

use nalgebra::{DMatrix, SymmetricEigen};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::mat::Mat;
use crate::model::{ClassLabel, Recording};
use crate::preprocess::PreprocessError;

/// Which independent components to drop before rebuilding.
#[derive(Debug, Clone, PartialEq)]
pub enum RejectionPolicy {
    /// Rebuild from every component (the identity pipeline stage).
    KeepAll,
    /// Drop components whose excess kurtosis exceeds the threshold —
    /// a simple stand-in for artifact classifiers: spiky artifacts are
    /// heavy-tailed, ongoing activity is not.
    KurtosisThreshold(f64),
    /// Drop exactly these component indices.
    ExplicitList(Vec<usize>),
}

/// Result of [`fastica`]: `sources = unmixing * (data - channel_means)` and
/// `mixing * unmixing` is the identity. Recording metadata is kept so a
/// cleaned signal can be rebuilt without the original at hand.
#[derive(Debug, Clone)]
pub struct IcaDecomposition {
    pub unmixing: Mat<f64>,
    pub mixing: Mat<f64>,
    pub sources: Mat<f64>,
    pub whitening: Mat<f64>,
    pub channel_means: Vec<f64>,
    pub converged: bool,
    pub n_iterations: usize,
    subject_id: String,
    label: ClassLabel,
    sample_rate_hz: f64,
    channel_names: Vec<String>,
}

impl IcaDecomposition {
    pub fn n_components(&self) -> usize {
        self.channel_means.len()
    }
}

fn sym_decorrelate(m: &DMatrix<f64>) -> Result<DMatrix<f64>, PreprocessError> {
    let s = m * m.transpose();
    let eig = SymmetricEigen::new(s);
    let max_ev = eig.eigenvalues.iter().cloned().fold(f64::MIN, f64::max);
    if eig.eigenvalues.iter().any(|&v| v <= 1e-12 * max_ev.max(0.0)) {
        return Err(PreprocessError::RankDeficient);
    }
    let k = m.nrows();
    let inv_sqrt = DMatrix::from_fn(k, k, |i, j| {
        (0..k)
            .map(|c| eig.eigenvectors[(i, c)] * eig.eigenvectors[(j, c)] / eig.eigenvalues[c].sqrt())
            .sum()
    });
    Ok(inv_sqrt * m)
}

/// Sample excess kurtosis of one source: `m4 / m2^2 - 3`.
pub fn excess_kurtosis(xs: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let m2 = xs.iter().map(|&x| (x - mean).powi(2)).sum::<f64>() / n;
    let m4 = xs.iter().map(|&x| (x - mean).powi(4)).sum::<f64>() / n;
    m4 / (m2 * m2) - 3.0
}

/// Decompose a recording into independent components. Deterministic given
/// `seed`: the starting rotation is drawn from the seeded generator and then
/// orthonormalized. Hitting `max_iter` returns `NoConvergence` carrying the
/// partial decomposition.
pub fn fastica(
    r: &Recording,
    max_iter: usize,
    tol: f64,
    seed: u64,
) -> Result<IcaDecomposition, PreprocessError> {
    let k = r.n_channels();
    let n = r.n_samples();
    if n < 10 * k {
        return Err(PreprocessError::TooFewSamples {
            n_samples: n,
            n_channels: k,
        });
    }

    let means: Vec<f64> = (0..k)
        .map(|ch| r.data.row(ch).iter().map(|&v| v as f64).sum::<f64>() / n as f64)
        .collect();
    let centered = DMatrix::from_fn(k, n, |i, j| r.data.get(i, j) as f64 - means[i]);

    // Whiten via the eigendecomposition of the sample covariance.
    let cov = &centered * centered.transpose() / (n as f64 - 1.0);
    let eig = SymmetricEigen::new(cov);
    let max_ev = eig.eigenvalues.iter().cloned().fold(f64::MIN, f64::max);
    if max_ev <= 0.0 || eig.eigenvalues.iter().any(|&v| v <= 1e-12 * max_ev) {
        return Err(PreprocessError::RankDeficient);
    }
    let whitening = DMatrix::from_fn(k, k, |i, j| eig.eigenvectors[(j, i)] / eig.eigenvalues[i].sqrt());
    let dewhitening = DMatrix::from_fn(k, k, |i, j| eig.eigenvectors[(i, j)] * eig.eigenvalues[j].sqrt());
    let z = &whitening * &centered;

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let init = DMatrix::from_fn(k, k, |_, _| StandardNormal.sample(&mut rng));
    let mut rotation = sym_decorrelate(&init)?;

    let mut converged = false;
    let mut n_iterations = max_iter;
    for iter in 0..max_iter {
        let y = &rotation * &z;
        let g = y.map(f64::tanh);
        let g_prime_mean: Vec<f64> = (0..k)
            .map(|i| g.row(i).iter().map(|&v| 1.0 - v * v).sum::<f64>() / n as f64)
            .collect();
        let mut next = &g * z.transpose() / n as f64;
        for i in 0..k {
            for j in 0..k {
                next[(i, j)] -= g_prime_mean[i] * rotation[(i, j)];
            }
        }
        let next = sym_decorrelate(&next)?;
        let delta = (0..k)
            .map(|i| (1.0 - rotation.row(i).dot(&next.row(i)).abs()).abs())
            .fold(0.0, f64::max);
        rotation = next;
        if delta < tol {
            converged = true;
            n_iterations = iter + 1;
            break;
        }
    }

    let unmixing = &rotation * &whitening;
    let mixing = &dewhitening * rotation.transpose();
    let sources = &unmixing * &centered;

    let to_mat = |m: &DMatrix<f64>| {
        Mat::from_vec(
            m.nrows(),
            m.ncols(),
            (0..m.nrows())
                .flat_map(|i| (0..m.ncols()).map(move |j| (i, j)))
                .map(|(i, j)| m[(i, j)])
                .collect(),
        )
    };
    let decomposition = IcaDecomposition {
        unmixing: to_mat(&unmixing),
        mixing: to_mat(&mixing),
        sources: to_mat(&sources),
        whitening: to_mat(&whitening),
        channel_means: means,
        converged,
        n_iterations,
        subject_id: r.subject_id.clone(),
        label: r.label,
        sample_rate_hz: r.sample_rate_hz,
        channel_names: r.channel_names.clone(),
    };
    if converged {
        Ok(decomposition)
    } else {
        Err(PreprocessError::NoConvergence {
            partial: Box::new(decomposition),
        })
    }
}

/// Indices a policy would reject for this decomposition.
pub fn rejected_indices(
    d: &IcaDecomposition,
    policy: &RejectionPolicy,
) -> Result<Vec<usize>, PreprocessError> {
    let k = d.n_components();
    match policy {
        RejectionPolicy::KeepAll => Ok(Vec::new()),
        RejectionPolicy::KurtosisThreshold(thr) => Ok((0..k)
            .filter(|&i| excess_kurtosis(d.sources.row(i)) > *thr)
            .collect()),
        RejectionPolicy::ExplicitList(indices) => {
            for &i in indices {
                if i >= k {
                    return Err(PreprocessError::BadIndex {
                        index: i,
                        n_components: k,
                    });
                }
            }
            Ok(indices.clone())
        }
    }
}

/// Zero the rejected source rows and remix:
/// `output = mixing * sources_kept + channel_means`.
pub fn reject_and_rebuild(
    d: &IcaDecomposition,
    policy: &RejectionPolicy,
) -> Result<Recording, PreprocessError> {
    let rejected = rejected_indices(d, policy)?;
    let k = d.n_components();
    let n = d.sources.cols();
    let keep: Vec<bool> = {
        let mut v = vec![true; k];
        for &i in &rejected {
            v[i] = false;
        }
        v
    };
    let mut data = Mat::zeros(k, n);
    for ch in 0..k {
        let row = data.row_mut(ch);
        for (comp, &kept) in keep.iter().enumerate() {
            if !kept {
                continue;
            }
            let a = d.mixing.get(ch, comp);
            let src = d.sources.row(comp);
            for (t, out) in row.iter_mut().enumerate() {
                *out += (a * src[t]) as f32;
            }
        }
        let mean = d.channel_means[ch] as f32;
        for out in row.iter_mut() {
            *out += mean;
        }
    }
    Ok(Recording {
        subject_id: d.subject_id.clone(),
        label: d.label,
        sample_rate_hz: d.sample_rate_hz,
        channel_names: d.channel_names.clone(),
        data,
    })
}
