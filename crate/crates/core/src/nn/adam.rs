use serde::{Deserialize, Serialize};

use super::params::ParamSet;
use crate::error::Result;

/// Adam with bias correction. Moments are stored per parameter buffer.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AdamState {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    pub step_count: u64,
    pub first_moment: Vec<Vec<f64>>,
    pub second_moment: Vec<Vec<f64>>,
}

impl AdamState {
    pub fn new(learning_rate: f64, params: &ParamSet) -> Self {
        let zeros: Vec<Vec<f64>> = params
            .buffers
            .iter()
            .map(|b| vec![0.0; b.data.len()])
            .collect();
        AdamState {
            learning_rate,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
            step_count: 0,
            first_moment: zeros.clone(),
            second_moment: zeros,
        }
    }

    /// In-place update used by the training loop.
    pub fn step(&mut self, params: &mut ParamSet, grads: &ParamSet) -> Result<()> {
        params.same_layout(grads)?;
        self.step_count += 1;
        let t = self.step_count as i32;
        let c1 = 1.0 - self.beta1.powi(t);
        let c2 = 1.0 - self.beta2.powi(t);
        for (b, (p, g)) in params.buffers.iter_mut().zip(&grads.buffers).enumerate() {
            let m = &mut self.first_moment[b];
            let v = &mut self.second_moment[b];
            for k in 0..p.data.len() {
                let gk = g.data[k];
                m[k] = self.beta1 * m[k] + (1.0 - self.beta1) * gk;
                v[k] = self.beta2 * v[k] + (1.0 - self.beta2) * gk * gk;
                let m_hat = m[k] / c1;
                let v_hat = v[k] / c2;
                p.data[k] -= self.learning_rate * m_hat / (v_hat.sqrt() + self.epsilon);
            }
        }
        Ok(())
    }
}

/// Pure form of [`AdamState::step`]: returns the updated parameters and state.
pub fn adam_step(
    state: &AdamState,
    params: &ParamSet,
    grads: &ParamSet,
) -> Result<(ParamSet, AdamState)> {
    let mut state = state.clone();
    let mut params = params.clone();
    state.step(&mut params, grads)?;
    Ok((params, state))
}
