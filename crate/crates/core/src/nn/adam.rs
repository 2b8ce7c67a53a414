//! Adam with bias correction and optional L2 weight coupling.

use crate::nn::tensor::Scalar;
use crate::nn::NnError;

#[derive(Debug, Clone, Copy)]
pub struct AdamHyper<T> {
    pub lr: T,
    pub beta1: T,
    pub beta2: T,
    pub epsilon: T,
}

impl<T: Scalar> AdamHyper<T> {
    pub fn with_lr(lr: T) -> Self {
        Self {
            lr,
            beta1: T::from_f64(0.9),
            beta2: T::from_f64(0.999),
            epsilon: T::from_f64(1e-8),
        }
    }
}

/// First/second moment estimates for one parameter tensor plus its step
/// counter.
#[derive(Debug, Clone)]
pub struct AdamState<T> {
    pub m: Vec<T>,
    pub v: Vec<T>,
    pub step: u64,
}

impl<T: Scalar> AdamState<T> {
    pub fn new(len: usize) -> Self {
        Self {
            m: vec![T::zero(); len],
            v: vec![T::zero(); len],
            step: 0,
        }
    }
}

/// One Adam update. The effective gradient is `grad + l2 * param` (pass
/// `l2 = 0` for bias tensors), then the standard bias-corrected step.
pub fn adam_step<T: Scalar>(
    param: &mut [T],
    grad: &[T],
    state: &mut AdamState<T>,
    hp: &AdamHyper<T>,
    l2: T,
) -> Result<(), NnError> {
    if param.len() != grad.len() || param.len() != state.m.len() {
        return Err(NnError::ShapeMismatch {
            context: format!(
                "adam: param {} vs grad {} vs state {}",
                param.len(),
                grad.len(),
                state.m.len()
            ),
        });
    }
    state.step += 1;
    let t = state.step as i32;
    let bc1 = T::one() - hp.beta1.powi(t);
    let bc2 = T::one() - hp.beta2.powi(t);
    let one = T::one();
    for i in 0..param.len() {
        let g = grad[i] + l2 * param[i];
        state.m[i] = hp.beta1 * state.m[i] + (one - hp.beta1) * g;
        state.v[i] = hp.beta2 * state.v[i] + (one - hp.beta2) * g * g;
        let m_hat = state.m[i] / bc1;
        let v_hat = state.v[i] / bc2;
        param[i] = param[i] - hp.lr * m_hat / (v_hat.sqrt() + hp.epsilon);
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_gradient_leaves_parameters_alone() {
        let mut p = vec![1.5f64, -2.0, 0.25];
        let snapshot = p.clone();
        let mut state = AdamState::new(3);
        let hp = AdamHyper::with_lr(0.1);
        adam_step(&mut p, &[0.0; 3], &mut state, &hp, 0.0).unwrap();
        assert_eq!(p, snapshot);
    }

    #[test]
    fn first_step_moves_by_signed_learning_rate() {
        let mut p = vec![0.0f64];
        let mut state = AdamState::new(1);
        let hp = AdamHyper::with_lr(1e-3);
        adam_step(&mut p, &[0.37], &mut state, &hp, 0.0).unwrap();
        // m_hat = g, v_hat = g^2, update = lr * g / (|g| + eps) ~ lr * sign(g).
        assert!((p[0] - (-1e-3)).abs() < 1e-9, "got {}", p[0]);
    }

    #[test]
    fn five_steps_match_scalar_reference() {
        let grads = [0.5f64, -0.2, 0.05, 0.9, -0.4];
        let (lr, b1, b2, eps, l2) = (0.01, 0.9, 0.999, 1e-8, 0.1);

        // Independent step-by-step reference with explicit scalars.
        let mut ref_p = 0.3f64;
        let (mut ref_m, mut ref_v) = (0.0f64, 0.0f64);
        let mut expected = Vec::new();
        for (t, &g0) in grads.iter().enumerate() {
            let g = g0 + l2 * ref_p;
            ref_m = b1 * ref_m + (1.0 - b1) * g;
            ref_v = b2 * ref_v + (1.0 - b2) * g * g;
            let mh = ref_m / (1.0 - b1.powi(t as i32 + 1));
            let vh = ref_v / (1.0 - b2.powi(t as i32 + 1));
            ref_p -= lr * mh / (vh.sqrt() + eps);
            expected.push(ref_p);
        }

        let mut p = vec![0.3f64];
        let mut state = AdamState::new(1);
        let hp = AdamHyper {
            lr,
            beta1: b1,
            beta2: b2,
            epsilon: eps,
        };
        for (t, &g) in grads.iter().enumerate() {
            adam_step(&mut p, &[g], &mut state, &hp, l2).unwrap();
            assert!(
                (p[0] - expected[t]).abs() < 1e-12,
                "step {t}: {} vs {}",
                p[0],
                expected[t]
            );
        }
    }

    #[test]
    fn mismatched_lengths_are_rejected() {
        let mut p = vec![0.0f32; 2];
        let mut state = AdamState::new(2);
        let hp = AdamHyper::with_lr(0.1f32);
        assert!(adam_step(&mut p, &[0.0; 3], &mut state, &hp, 0.0).is_err());
    }
}
