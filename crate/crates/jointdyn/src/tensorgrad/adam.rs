//! Adam with bias correction, plus global-norm gradient clipping.

use crate::error::{Error, Result};

/// Per-parameter moment buffers and the shared step counter.
#[derive(Debug, Clone)]
pub struct AdamState {
    first_moment: Vec<Vec<f64>>,
    second_moment: Vec<Vec<f64>>,
    step: u64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl AdamState {
    /// Buffers sized to match `param_lens`, in the canonical parameter order.
    pub fn new(param_lens: &[usize], beta1: f64, beta2: f64, epsilon: f64) -> Self {
        AdamState {
            first_moment: param_lens.iter().map(|&n| vec![0.0; n]).collect(),
            second_moment: param_lens.iter().map(|&n| vec![0.0; n]).collect(),
            step: 0,
            beta1,
            beta2,
            epsilon,
        }
    }

    pub fn step_count(&self) -> u64 {
        self.step
    }
}

/// One bias-corrected Adam update applied in place.
///
/// `params` and `grads` must align with the state's buffers. Non-finite
/// gradients abort with a diagnostic naming the parameter slot.
pub fn adam_step(
    params: &mut [&mut [f64]],
    grads: &[Vec<f64>],
    state: &mut AdamState,
    learning_rate: f64,
) -> Result<()> {
    if params.len() != grads.len() || params.len() != state.first_moment.len() {
        return Err(Error::shape(
            "adam_step",
            format!(
                "{} params, {} grads, {} state slots",
                params.len(),
                grads.len(),
                state.first_moment.len()
            ),
        ));
    }
    if learning_rate <= 0.0 {
        return Err(Error::InvalidConfig("learning rate must be positive".into()));
    }
    for (slot, g) in grads.iter().enumerate() {
        if g.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite(format!(
                "gradient for parameter slot {slot} at adam step {}",
                state.step + 1
            )));
        }
    }
    state.step += 1;
    let t = state.step as i32;
    let bias1 = 1.0 - state.beta1.powi(t);
    let bias2 = 1.0 - state.beta2.powi(t);
    for ((p, g), (m, v)) in params
        .iter_mut()
        .zip(grads)
        .zip(state.first_moment.iter_mut().zip(&mut state.second_moment))
    {
        debug_assert_eq!(p.len(), g.len());
        for i in 0..p.len() {
            m[i] = state.beta1 * m[i] + (1.0 - state.beta1) * g[i];
            v[i] = state.beta2 * v[i] + (1.0 - state.beta2) * g[i] * g[i];
            let m_hat = m[i] / bias1;
            let v_hat = v[i] / bias2;
            p[i] -= learning_rate * m_hat / (v_hat.sqrt() + state.epsilon);
        }
    }
    Ok(())
}

/// Global L2 norm over the concatenation of all gradient buffers.
pub fn global_grad_norm(grads: &[Vec<f64>]) -> f64 {
    grads
        .iter()
        .flat_map(|g| g.iter())
        .map(|v| v * v)
        .sum::<f64>()
        .sqrt()
}

/// Scale all gradients by `threshold / norm` when the global L2 norm
/// exceeds the threshold; otherwise leave them untouched. Idempotent.
pub fn clip_gradients_global_norm(grads: &mut [Vec<f64>], threshold: f64) -> f64 {
    debug_assert!(threshold > 0.0);
    let norm = global_grad_norm(grads);
    if norm > threshold {
        let scale = threshold / norm;
        for g in grads.iter_mut() {
            for v in g.iter_mut() {
                *v *= scale;
            }
        }
    }
    norm
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run_step(p0: f64, g: f64, lr: f64) -> f64 {
        let mut p = vec![p0];
        let mut state = AdamState::new(&[1], 0.9, 0.95, 1e-8);
        adam_step(&mut [&mut p], &[vec![g]], &mut state, lr).unwrap();
        p[0]
    }

    #[test]
    fn zero_gradient_leaves_params_unchanged() {
        assert_eq!(run_step(0.3, 0.0, 1e-4), 0.3);
    }

    #[test]
    fn first_step_magnitude_matches_hand_evaluation() {
        // Bias correction makes m_hat = g and v_hat = g^2 on step one, so the
        // update is lr * g / (|g| + eps) = lr / (1 + 1e-8) for g = 1.
        let p1 = run_step(0.0, 1.0, 1e-4);
        let expected = -1e-4 / (1.0 + 1e-8);
        assert!((p1 - expected).abs() < 1e-9);
        assert!((p1.abs() - 1e-4).abs() < 1e-9);
    }

    #[test]
    fn identical_seeds_give_bit_identical_trajectories() {
        let mut rng = crate::util::rng_from_seed(3);
        let grads: Vec<Vec<f64>> = (0..5)
            .map(|_| {
                crate::tensorgrad::Tensor::uniform(&[4], -1.0, 1.0, &mut rng)
                    .into_values()
            })
            .collect();
        let run = |grads: &[Vec<f64>]| {
            let mut p = vec![0.5; 4];
            let mut state = AdamState::new(&[4], 0.9, 0.95, 1e-8);
            for g in grads {
                adam_step(&mut [&mut p], std::slice::from_ref(g), &mut state, 1e-3).unwrap();
            }
            p
        };
        let a = run(&grads);
        let b = run(&grads);
        assert!(a.iter().zip(&b).all(|(x, y)| x.to_bits() == y.to_bits()));
    }

    #[test]
    fn non_finite_gradient_aborts() {
        let mut p = vec![0.0];
        let mut state = AdamState::new(&[1], 0.9, 0.95, 1e-8);
        let err = adam_step(&mut [&mut p], &[vec![f64::NAN]], &mut state, 1e-4);
        assert!(err.is_err());
    }

    #[test]
    fn step_counter_increments_by_one() {
        let mut p = vec![0.0];
        let mut state = AdamState::new(&[1], 0.9, 0.95, 1e-8);
        for expect in 1..=3 {
            adam_step(&mut [&mut p], &[vec![0.1]], &mut state, 1e-4).unwrap();
            assert_eq!(state.step_count(), expect);
        }
    }

    #[test]
    fn clip_leaves_small_gradients_alone() {
        let mut g = vec![vec![0.3, 0.4]]; // norm 0.5
        let before = g.clone();
        clip_gradients_global_norm(&mut g, 1.0);
        assert_eq!(g, before);
    }

    #[test]
    fn clip_scales_by_threshold_over_norm() {
        let mut g = vec![vec![0.0, 4.0]]; // norm 4
        clip_gradients_global_norm(&mut g, 1.0);
        assert_eq!(g[0], vec![0.0, 1.0]);

        let mut g = vec![vec![2.4], vec![3.2]]; // norm 4 across buffers
        clip_gradients_global_norm(&mut g, 1.0);
        assert!((g[0][0] - 0.6).abs() < 1e-15);
        assert!((g[1][0] - 0.8).abs() < 1e-15);
    }

    #[test]
    fn clipped_norm_is_min_of_original_and_threshold() {
        let mut rng = crate::util::rng_from_seed(9);
        for threshold in [0.5, 1.0, 10.0] {
            let mut g = vec![
                crate::tensorgrad::Tensor::uniform(&[16], -2.0, 2.0, &mut rng).into_values(),
                crate::tensorgrad::Tensor::uniform(&[7], -2.0, 2.0, &mut rng).into_values(),
            ];
            let original = global_grad_norm(&g);
            clip_gradients_global_norm(&mut g, threshold);
            let after = global_grad_norm(&g);
            assert!((after - original.min(threshold)).abs() < 1e-12);
        }
    }

    #[test]
    fn clip_is_idempotent() {
        let mut g = vec![vec![3.0, -4.0, 12.0]];
        clip_gradients_global_norm(&mut g, 1.0);
        let once = g.clone();
        clip_gradients_global_norm(&mut g, 1.0);
        assert_eq!(g, once);
    }
}
