//! Bias-corrected Adam over the model's parameter tensors.

use super::{Gradients, MgatModel};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdamParams {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Default for AdamParams {
    fn default() -> Self {
        AdamParams { lr: 0.01, beta1: 0.9, beta2: 0.999, eps: 1e-8 }
    }
}

/// First/second moment estimates, shaped like the parameters.
#[derive(Debug, Clone)]
pub struct AdamState {
    m: Gradients,
    v: Gradients,
    t: u64,
}

impl AdamState {
    pub fn new(model: &MgatModel) -> Self {
        AdamState { m: Gradients::zeros_like(model), v: Gradients::zeros_like(model), t: 0 }
    }

    pub fn step_count(&self) -> u64 {
        self.t
    }

    /// Largest second-moment entry, handy for monotonicity checks.
    pub fn max_second_moment(&self) -> f64 {
        self.v
            .layers
            .iter()
            .flat_map(|l| &l.heads)
            .flat_map(|h| h.w.iter().chain(h.a.iter()))
            .fold(0.0f64, |acc, &x| acc.max(x))
    }
}

fn update_slice(
    params: &mut [f64],
    grads: &[f64],
    m: &mut [f64],
    v: &mut [f64],
    p: &AdamParams,
    bc1: f64,
    bc2: f64,
) {
    for k in 0..params.len() {
        let g = grads[k];
        m[k] = p.beta1 * m[k] + (1.0 - p.beta1) * g;
        v[k] = p.beta2 * v[k] + (1.0 - p.beta2) * g * g;
        let m_hat = m[k] / bc1;
        let v_hat = v[k] / bc2;
        params[k] -= p.lr * m_hat / (v_hat.sqrt() + p.eps);
    }
}

/// One Adam update of every parameter from matching gradients.
pub fn adam_step(model: &mut MgatModel, grads: &Gradients, state: &mut AdamState, p: &AdamParams) {
    state.t += 1;
    let bc1 = 1.0 - p.beta1.powi(state.t as i32);
    let bc2 = 1.0 - p.beta2.powi(state.t as i32);
    for (lp, (lg, (lm, lv))) in model.layers.iter_mut().zip(
        grads.layers.iter().zip(state.m.layers.iter_mut().zip(state.v.layers.iter_mut())),
    ) {
        for (hp, (hg, (hm, hv))) in lp
            .heads
            .iter_mut()
            .zip(lg.heads.iter().zip(lm.heads.iter_mut().zip(lv.heads.iter_mut())))
        {
            update_slice(
                hp.w.as_mut_slice(),
                hg.w.as_slice(),
                hm.w.as_mut_slice(),
                hv.w.as_mut_slice(),
                p,
                bc1,
                bc2,
            );
            update_slice(
                hp.a.as_mut_slice(),
                hg.a.as_slice(),
                hm.a.as_mut_slice(),
                hv.a.as_mut_slice(),
                p,
                bc1,
                bc2,
            );
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mgat::MgatConfig;
    use approx::assert_relative_eq;

    fn one_param_model() -> MgatModel {
        let config = MgatConfig {
            hidden: vec![],
            heads: 1,
            dropout: 0.0,
            ..MgatConfig::with_input(1)
        };
        // dims 1 → 2: w is 2×1, a is 4.
        MgatModel::init(config, 0)
    }

    #[test]
    fn zero_gradient_leaves_params_unchanged() {
        let mut model = one_param_model();
        let before = model.clone();
        let grads = Gradients::zeros_like(&model);
        let mut state = AdamState::new(&model);
        adam_step(&mut model, &grads, &mut state, &AdamParams::default());
        assert_eq!(model, before);
        assert_eq!(state.step_count(), 1);
    }

    #[test]
    fn first_step_moves_by_learning_rate() {
        // Scalar check: g = 1 → m̂ = 1, v̂ = 1 → Δ = −lr/(1 + eps).
        let mut model = one_param_model();
        let before = model.layers[0].heads[0].w[(0, 0)];
        let mut grads = Gradients::zeros_like(&model);
        grads.layers[0].heads[0].w[(0, 0)] = 1.0;
        let mut state = AdamState::new(&model);
        let p = AdamParams { lr: 0.01, ..AdamParams::default() };
        adam_step(&mut model, &grads, &mut state, &p);
        let delta = model.layers[0].heads[0].w[(0, 0)] - before;
        assert_relative_eq!(delta, -0.01, epsilon = 1e-9);
        // Untouched parameters stay put.
        assert_eq!(model.layers[0].heads[0].a, one_param_model().layers[0].heads[0].a);
    }

    #[test]
    fn second_moment_grows_under_repeated_gradient() {
        let mut model = one_param_model();
        let mut grads = Gradients::zeros_like(&model);
        grads.layers[0].heads[0].w[(0, 0)] = 0.5;
        let mut state = AdamState::new(&model);
        let p = AdamParams::default();
        adam_step(&mut model, &grads, &mut state, &p);
        let v1 = state.max_second_moment();
        adam_step(&mut model, &grads, &mut state, &p);
        let v2 = state.max_second_moment();
        assert!(v2 > v1, "second moment must strictly increase: {v1} vs {v2}");
    }
}
