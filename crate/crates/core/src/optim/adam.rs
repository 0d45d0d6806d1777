use crate::backprop::Gradients;
use crate::error::{Error, Result};
use crate::model::GnnModel;

pub const ADAM_BETA1: f64 = 0.9;
pub const ADAM_BETA2: f64 = 0.999;
pub const ADAM_EPSILON: f64 = 1e-8;

/// Moment estimates for every parameter tensor of a model.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    step: u64,
    m: Vec<Vec<f64>>,
    v: Vec<Vec<f64>>,
}

impl AdamState {
    pub fn new(model: &GnnModel, lr: f64) -> Result<Self> {
        AdamState::with_hyperparameters(model, lr, ADAM_BETA1, ADAM_BETA2, ADAM_EPSILON)
    }

    pub fn with_hyperparameters(
        model: &GnnModel,
        lr: f64,
        beta1: f64,
        beta2: f64,
        epsilon: f64,
    ) -> Result<Self> {
        if !(lr >= 0.0) || !lr.is_finite() {
            return Err(Error::InvalidParameter(format!("learning rate {lr}")));
        }
        if !(0.0..1.0).contains(&beta1) || !(0.0..1.0).contains(&beta2) || !(epsilon > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "ADAM betas ({beta1}, {beta2}) and epsilon {epsilon}"
            )));
        }
        let zeros: Vec<Vec<f64>> = model
            .param_tensors()
            .iter()
            .map(|t| vec![0.0; t.len()])
            .collect();
        Ok(AdamState {
            lr,
            beta1,
            beta2,
            epsilon,
            step: 0,
            m: zeros.clone(),
            v: zeros,
        })
    }

    pub fn step_count(&self) -> u64 {
        self.step
    }

    /// One bias-corrected ADAM update of `model` in place.
    pub fn step(&mut self, grads: &Gradients, model: &mut GnnModel) -> Result<()> {
        let g = grads.tensors(model);
        if g.len() != self.m.len() || g.iter().zip(&self.m).any(|(a, b)| a.len() != b.len()) {
            return Err(Error::DimensionMismatch(
                "gradients do not match the optimizer state".into(),
            ));
        }
        if g.iter().any(|t| t.iter().any(|v| !v.is_finite())) {
            return Err(Error::NonFinite("gradient".into()));
        }
        let g: Vec<Vec<f64>> = g.into_iter().map(<[f64]>::to_vec).collect();
        self.step += 1;
        let t = self.step as i32;
        let c1 = 1.0 - self.beta1.powi(t);
        let c2 = 1.0 - self.beta2.powi(t);
        for (((params, grad), m), v) in model
            .param_tensors_mut()
            .into_iter()
            .zip(&g)
            .zip(&mut self.m)
            .zip(&mut self.v)
        {
            for (((p, &gi), mi), vi) in params.iter_mut().zip(grad).zip(m).zip(v) {
                *mi = self.beta1 * *mi + (1.0 - self.beta1) * gi;
                *vi = self.beta2 * *vi + (1.0 - self.beta2) * gi * gi;
                let m_hat = *mi / c1;
                let v_hat = *vi / c2;
                let delta = self.lr * m_hat / (v_hat.sqrt() + self.epsilon);
                if delta != 0.0 {
                    *p -= delta;
                }
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    use super::*;
    use crate::graph::Graph;
    use crate::model::{ActivationKind, ModelConfig, ModelOperators};

    fn tiny() -> GnnModel {
        let cfg = ModelConfig::single_layer(ActivationKind::Relu, 1, 1, 0, 2);
        let ops = ModelOperators::from_graph(&Graph::path(3).unwrap()).unwrap();
        GnnModel::init(&cfg, ops, &mut ChaCha8Rng::seed_from_u64(1)).unwrap()
    }

    fn flat(m: &GnnModel) -> Vec<f64> {
        m.param_tensors().concat()
    }

    #[test]
    fn first_step_moves_by_learning_rate() {
        let mut m = tiny();
        let before = flat(&m);
        let mut g = Gradients::zeros_like(&m);
        g.d_readout_bias = vec![3.0, -0.25];
        let mut adam = AdamState::new(&m, 0.01).unwrap();
        adam.step(&g, &mut m).unwrap();
        let after = flat(&m);
        let n = after.len();
        assert!((after[n - 2] - (before[n - 2] - 0.01)).abs() < 1e-10);
        assert!((after[n - 1] - (before[n - 1] + 0.01)).abs() < 1e-9);
        assert_eq!(&after[..n - 2], &before[..n - 2]);
    }

    #[test]
    fn zero_gradient_leaves_parameters() {
        let mut m = tiny();
        let before = m.clone();
        let mut adam = AdamState::new(&m, 0.1).unwrap();
        adam.step(&Gradients::zeros_like(&m), &mut m).unwrap();
        assert_eq!(m, before);
        assert_eq!(adam.step_count(), 1);
    }

    #[test]
    fn two_steps_match_scripted_trace() {
        let mut m = tiny();
        let p0 = m.layers()[0].taps.as_slice()[0];
        let mut g = Gradients::zeros_like(&m);
        g.layers[0].d_taps = vec![0.5];
        let mut adam = AdamState::new(&m, 0.005).unwrap();
        adam.step(&g, &mut m).unwrap();
        adam.step(&g, &mut m).unwrap();

        let (b1, b2, eps, lr, grad) = (0.9f64, 0.999f64, 1e-8, 0.005, 0.5);
        let (mut mm, mut vv, mut p) = (0.0, 0.0, p0);
        for t in 1..=2 {
            mm = b1 * mm + (1.0 - b1) * grad;
            vv = b2 * vv + (1.0 - b2) * grad * grad;
            let m_hat = mm / (1.0 - b1.powi(t));
            let v_hat = vv / (1.0 - b2.powi(t));
            p -= lr * m_hat / (v_hat.sqrt() + eps);
        }
        assert_eq!(m.layers()[0].taps.as_slice()[0], p);
    }

    #[test]
    fn rejects_bad_gradients() {
        let mut m = tiny();
        let mut adam = AdamState::new(&m, 0.1).unwrap();
        let mut g = Gradients::zeros_like(&m);
        g.d_readout_bias[0] = f64::NAN;
        assert!(matches!(adam.step(&g, &mut m), Err(Error::NonFinite(_))));
        let mut g = Gradients::zeros_like(&m);
        g.d_readout_weights.pop();
        assert!(matches!(adam.step(&g, &mut m), Err(Error::DimensionMismatch(_))));
        assert!(AdamState::new(&m, -1.0).is_err());
    }
}
