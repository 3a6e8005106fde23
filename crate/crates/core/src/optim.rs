//! AdaDelta optimizer.
//!
//! Per coordinate:
//!
//! ```text
//! E[g²] <- ρ E[g²] + (1 - ρ) g²
//! Δ     <- -sqrt(E[Δ²] + ε) / sqrt(E[g²] + ε) * g
//! E[Δ²] <- ρ E[Δ²] + (1 - ρ) Δ²
//! x     <- x + lr * Δ
//! ```

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::params::ParamStore;
use crate::tensor::Tensor;

pub const DEFAULT_RHO: f64 = 0.95;
pub const DEFAULT_EPSILON: f64 = 1e-6;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AdaDeltaState {
    pub acc_grad_sq: Vec<Tensor>,
    pub acc_update_sq: Vec<Tensor>,
    pub rho: f64,
    pub epsilon: f64,
    /// Multiplier on the update; 1.0 is the unscaled rule.
    pub learning_rate: f64,
}

impl AdaDeltaState {
    pub fn new(store: &ParamStore, rho: f64, epsilon: f64) -> Result<Self> {
        if !(rho > 0.0 && rho < 1.0) {
            return Err(Error::InvalidArgument(format!("rho must lie in (0, 1), got {rho}")));
        }
        if !(epsilon > 0.0) {
            return Err(Error::InvalidArgument(format!("epsilon must be positive, got {epsilon}")));
        }
        let zeros: Vec<Tensor> = store.iter().map(|(_, _, t)| Tensor::zeros(t.shape())).collect();
        Ok(Self { acc_grad_sq: zeros.clone(), acc_update_sq: zeros, rho, epsilon, learning_rate: 1.0 })
    }

    /// One in-place update of every parameter in `store`.
    pub fn step(&mut self, store: &mut ParamStore, grads: &[Tensor]) -> Result<()> {
        if grads.len() != store.len() || self.acc_grad_sq.len() != store.len() {
            return Err(Error::Shape(format!(
                "adadelta: {} parameters, {} gradients, {} accumulators",
                store.len(),
                grads.len(),
                self.acc_grad_sq.len()
            )));
        }
        let (rho, eps, lr) = (self.rho, self.epsilon, self.learning_rate);
        for (i, id) in store.ids().enumerate().collect::<Vec<_>>() {
            let param = store.get_mut(id);
            let g = &grads[i];
            if param.shape() != g.shape() || self.acc_grad_sq[i].shape() != g.shape() {
                return Err(Error::Shape(format!(
                    "adadelta: parameter {:?} vs gradient {:?}",
                    param.shape(),
                    g.shape()
                )));
            }
            let eg = self.acc_grad_sq[i].data_mut();
            let eu = self.acc_update_sq[i].data_mut();
            for (((x, &gv), a), u) in param.data_mut().iter_mut().zip(g.data()).zip(eg).zip(eu) {
                *a = rho * *a + (1.0 - rho) * gv * gv;
                let delta = -((*u + eps).sqrt() / (*a + eps).sqrt()) * gv;
                *u = rho * *u + (1.0 - rho) * delta * delta;
                *x += lr * delta;
            }
        }
        Ok(())
    }
}
