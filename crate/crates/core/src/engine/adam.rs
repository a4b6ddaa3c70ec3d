use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

use super::model::{Gradients, Model};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AdamConfig {
    pub learning_rate: f64,
    #[serde(default = "default_beta1")]
    pub beta1: f64,
    #[serde(default = "default_beta2")]
    pub beta2: f64,
    #[serde(default = "default_eps")]
    pub eps: f64,
}

fn default_beta1() -> f64 {
    0.9
}
fn default_beta2() -> f64 {
    0.999
}
fn default_eps() -> f64 {
    1e-8
}

impl AdamConfig {
    pub fn with_lr(learning_rate: f64) -> Self {
        Self {
            learning_rate,
            beta1: default_beta1(),
            beta2: default_beta2(),
            eps: default_eps(),
        }
    }
}

/// First and second moment estimates, flattened in model parameter order.
#[derive(Debug, Clone, PartialEq)]
pub struct OptimizerState {
    pub config: AdamConfig,
    pub step: u64,
    first: Vec<f64>,
    second: Vec<f64>,
}

impl OptimizerState {
    pub fn new(model: &Model, config: AdamConfig) -> Self {
        let n = model.num_params();
        Self {
            config,
            step: 0,
            first: vec![0.0; n],
            second: vec![0.0; n],
        }
    }

    /// One bias-corrected Adam update of `model` in place.
    pub fn step(&mut self, model: &mut Model, grads: &Gradients) -> Result<()> {
        if grads.shapes() != model.shapes() || self.first.len() != model.num_params() {
            return Err(Error::Shape("gradients do not match model or optimizer".into()));
        }
        self.step += 1;
        let AdamConfig {
            learning_rate,
            beta1,
            beta2,
            eps,
        } = self.config;
        let t = self.step as i32;
        let correct1 = 1.0 - beta1.powi(t);
        let correct2 = 1.0 - beta2.powi(t);
        let mut k = 0;
        for (w, g) in model.params_mut().zip(grads.iter()) {
            for (wv, &gv) in w.data_mut().iter_mut().zip(g.data()) {
                let m = &mut self.first[k];
                let v = &mut self.second[k];
                *m = beta1 * *m + (1.0 - beta1) * gv;
                *v = beta2 * *v + (1.0 - beta2) * gv * gv;
                let m_hat = *m / correct1;
                let v_hat = *v / correct2;
                *wv -= learning_rate * m_hat / (v_hat.sqrt() + eps);
                k += 1;
            }
        }
        Ok(())
    }
}

/// Convenience wrapper matching the free-function style of the engine.
pub fn adam_step(state: &mut OptimizerState, model: &mut Model, grads: &Gradients) -> Result<()> {
    state.step(model, grads)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::model::{Layer, LayerKind};
    use crate::matrix::Matrix;

    fn scalar_model(w: f64) -> Model {
        let mut layer = Layer {
            kind: LayerKind::Gcn,
            c_in: 1,
            c_out: 1,
            gin_eps: 0.0,
            params: vec![Matrix::zeros(1, 1), Matrix::zeros(1, 1)],
        };
        layer.params[0][(0, 0)] = w;
        Model {
            layers: vec![layer],
            normalize_adjacency: false,
        }
    }

    fn grad_of(model: &Model, g: f64) -> Gradients {
        let mut grads = Gradients::zeros_like(model);
        grads.layers[0][0][(0, 0)] = g;
        grads
    }

    #[test]
    fn zero_gradient_leaves_weights() {
        let mut model = scalar_model(0.3);
        let mut state = OptimizerState::new(&model, AdamConfig::with_lr(0.1));
        let before = model.clone();
        state.step(&mut model, &Gradients::zeros_like(&before)).unwrap();
        assert_eq!(model, before);
        assert_eq!(state.step, 1);
    }

    #[test]
    fn first_step_moves_by_learning_rate() {
        let mut model = scalar_model(1.0);
        let cfg = AdamConfig::with_lr(0.01);
        let mut state = OptimizerState::new(&model, cfg);
        let g = 0.37;
        let grads = grad_of(&model, g);
        state.step(&mut model, &grads).unwrap();
        let delta = model.layers[0].params[0][(0, 0)] - 1.0;
        let expected = -cfg.learning_rate * g / (g.abs() + cfg.eps);
        assert!((delta - expected).abs() < 1e-15);
        assert!((delta + cfg.learning_rate).abs() < 1e-9);
    }

    #[test]
    fn quadratic_decreases_over_two_steps() {
        // f(w) = w², ∇f = 2w, from w = 1
        let mut model = scalar_model(1.0);
        let mut state = OptimizerState::new(&model, AdamConfig::with_lr(0.1));
        let mut f_prev = 1.0;
        for _ in 0..2 {
            let w = model.layers[0].params[0][(0, 0)];
            let grads = grad_of(&model, 2.0 * w);
            state.step(&mut model, &grads).unwrap();
            let w_new = model.layers[0].params[0][(0, 0)];
            assert!(w_new * w_new < f_prev);
            f_prev = w_new * w_new;
        }
        // oracle recurrence, written out independently
        let (b1, b2, lr, eps) = (0.9f64, 0.999f64, 0.1, 1e-8);
        let (mut w, mut m, mut v) = (1.0f64, 0.0, 0.0);
        for t in 1..=2 {
            let g = 2.0 * w;
            m = b1 * m + (1.0 - b1) * g;
            v = b2 * v + (1.0 - b2) * g * g;
            w -= lr * (m / (1.0 - b1.powi(t))) / ((v / (1.0 - b2.powi(t))).sqrt() + eps);
        }
        assert!((model.layers[0].params[0][(0, 0)] - w).abs() < 1e-15);
    }

    #[test]
    fn shape_mismatch_rejected() {
        let mut model = scalar_model(1.0);
        let mut state = OptimizerState::new(&model, AdamConfig::with_lr(0.1));
        let bad = Gradients { layers: vec![] };
        assert!(state.step(&mut model, &bad).is_err());
    }
}
