use serde::{Deserialize, Serialize};

use super::{Dense, Gradients, Mlp};
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OptimizerKind {
    Sgd,
    Adam,
}

/// Optimizer hyperparameters plus Adam's running moments.
#[derive(Clone, Debug, PartialEq)]
pub struct OptimState {
    kind: OptimizerKind,
    learning_rate: f64,
    beta1: f64,
    beta2: f64,
    epsilon: f64,
    step: u64,
    first: Vec<Dense>,
    second: Vec<Dense>,
}

impl OptimState {
    pub fn new(kind: OptimizerKind, learning_rate: f64) -> Result<Self> {
        if !(learning_rate.is_finite() && learning_rate > 0.0) {
            return Err(Error::config(format!(
                "learning rate must be positive, got {learning_rate}"
            )));
        }
        Ok(OptimState {
            kind,
            learning_rate,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
            step: 0,
            first: Vec::new(),
            second: Vec::new(),
        })
    }

    pub fn sgd(learning_rate: f64) -> Result<Self> {
        Self::new(OptimizerKind::Sgd, learning_rate)
    }

    pub fn adam(learning_rate: f64) -> Result<Self> {
        Self::new(OptimizerKind::Adam, learning_rate)
    }

    pub fn kind(&self) -> OptimizerKind {
        self.kind
    }

    pub fn learning_rate(&self) -> f64 {
        self.learning_rate
    }

    pub fn step(&self) -> u64 {
        self.step
    }

    /// One optimizer step. Non-finite gradients are rejected before any
    /// parameter is touched.
    pub fn apply(&mut self, params: &mut Mlp, grads: &Gradients) -> Result<()> {
        if grads.layers.len() != params.layers.len()
            || grads
                .layers
                .iter()
                .zip(&params.layers)
                .any(|(g, p)| g.in_dim != p.in_dim || g.out_dim != p.out_dim)
        {
            return Err(Error::contract("gradient shape does not match parameters"));
        }
        if !grads.is_finite() {
            return Err(Error::Training("non-finite gradient".into()));
        }

        self.step += 1;
        let lr = self.learning_rate;
        match self.kind {
            OptimizerKind::Sgd => {
                for (p, g) in params.layers.iter_mut().zip(&grads.layers) {
                    p.params_mut().zip(g.params()).for_each(|(p, g)| *p -= lr * g);
                }
            }
            OptimizerKind::Adam => {
                if self.first.is_empty() {
                    self.first = Gradients::zeros_like(params).layers;
                    self.second = self.first.clone();
                }
                let (b1, b2, eps) = (self.beta1, self.beta2, self.epsilon);
                let t = self.step as i32;
                let c1 = 1.0 - b1.powi(t);
                let c2 = 1.0 - b2.powi(t);
                for (((p, g), m), v) in params
                    .layers
                    .iter_mut()
                    .zip(&grads.layers)
                    .zip(&mut self.first)
                    .zip(&mut self.second)
                {
                    for (((p, g), m), v) in p
                        .params_mut()
                        .zip(g.params())
                        .zip(m.params_mut())
                        .zip(v.params_mut())
                    {
                        *m = b1 * *m + (1.0 - b1) * g;
                        *v = b2 * *v + (1.0 - b2) * g * g;
                        *p -= lr * (*m / c1) / ((*v / c2).sqrt() + eps);
                    }
                }
            }
        }
        debug_assert!(params.is_finite(), "optimizer produced non-finite parameters");
        Ok(())
    }
}
