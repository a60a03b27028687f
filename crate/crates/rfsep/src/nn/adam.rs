//! Adam optimizer with bias correction.

use crate::error::{Error, Result};
use crate::nn::graph::{GradStore, ParamSet};

#[derive(Debug, Clone)]
pub struct Adam {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    step: u64,
    m: Vec<Vec<f64>>,
    v: Vec<Vec<f64>>,
}

impl Adam {
    pub fn new(params: &ParamSet, learning_rate: f64) -> Self {
        Self {
            learning_rate,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
            step: 0,
            m: params.params.iter().map(|p| vec![0.0; p.data.len()]).collect(),
            v: params.params.iter().map(|p| vec![0.0; p.data.len()]).collect(),
        }
    }

    /// One update. Fails fast on a non-finite gradient instead of
    /// silently corrupting the moment estimates.
    pub fn step(&mut self, params: &mut ParamSet, grads: &GradStore) -> Result<()> {
        if grads.grads.len() != params.params.len() {
            return Err(Error::ShapeMismatch("gradient/parameter count".into()));
        }
        for g in &grads.grads {
            if g.iter().any(|v| !v.is_finite()) {
                return Err(Error::NonFinite("gradient".into()));
            }
        }
        self.step += 1;
        let bc1 = 1.0 - self.beta1.powi(self.step as i32);
        let bc2 = 1.0 - self.beta2.powi(self.step as i32);
        for (p, (m, (v, g))) in params.params.iter_mut().zip(
            self.m
                .iter_mut()
                .zip(self.v.iter_mut().zip(grads.grads.iter())),
        ) {
            for i in 0..p.data.len() {
                m[i] = self.beta1 * m[i] + (1.0 - self.beta1) * g[i];
                v[i] = self.beta2 * v[i] + (1.0 - self.beta2) * g[i] * g[i];
                let m_hat = m[i] / bc1;
                let v_hat = v[i] / bc2;
                p.data[i] -= self.learning_rate * m_hat / (v_hat.sqrt() + self.epsilon);
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toy_params() -> ParamSet {
        let mut p = ParamSet::default();
        p.add("w", vec![3], vec![1.0, -2.0, 0.5]);
        p
    }

    #[test]
    fn first_step_moves_by_signed_learning_rate() {
        let mut params = toy_params();
        let mut opt = Adam::new(&params, 0.01);
        let mut grads = GradStore::zeros_like(&params);
        grads.grads[0] = vec![0.3, -0.7, 0.0];
        opt.step(&mut params, &grads).unwrap();
        // With bias correction the first step is ~ -lr * sign(g).
        assert!((params.params[0].data[0] - (1.0 - 0.01)).abs() < 1e-6);
        assert!((params.params[0].data[1] - (-2.0 + 0.01)).abs() < 1e-6);
        // Zero gradient leaves the entry untouched.
        assert_eq!(params.params[0].data[2], 0.5);
    }

    #[test]
    fn deterministic_across_runs() {
        let run = || {
            let mut params = toy_params();
            let mut opt = Adam::new(&params, 0.05);
            let mut grads = GradStore::zeros_like(&params);
            for k in 0..20 {
                grads.grads[0] = vec![0.1 * k as f64, -0.2, 0.4];
                opt.step(&mut params, &grads).unwrap();
            }
            params.params[0].data.clone()
        };
        assert_eq!(run(), run());
    }

    #[test]
    fn rejects_non_finite_gradient() {
        let mut params = toy_params();
        let mut opt = Adam::new(&params, 0.01);
        let mut grads = GradStore::zeros_like(&params);
        grads.grads[0] = vec![0.0, f64::NAN, 0.0];
        assert!(opt.step(&mut params, &grads).is_err());
    }

    #[test]
    fn converges_on_quadratic() {
        let mut params = toy_params();
        let mut opt = Adam::new(&params, 0.1);
        let mut grads = GradStore::zeros_like(&params);
        for _ in 0..500 {
            grads.grads[0] = params.params[0].data.iter().map(|&w| 2.0 * w).collect();
            opt.step(&mut params, &grads).unwrap();
        }
        for &w in &params.params[0].data {
            assert!(w.abs() < 1e-3, "did not converge: {w}");
        }
    }
}
