use rand::Rng;

use super::DqnConfig;
use crate::env::{state_dim, Action, StateVector, Transition};
use crate::error::{Error, Result};
use crate::nn::{Gradients, Mlp, MlpSpec, OptimState};

/// Online and target networks plus optimizer and step counters.
#[derive(Clone, Debug)]
pub struct Agent {
    config: DqnConfig,
    online: Mlp,
    target: Mlp,
    optim: OptimState,
    env_steps: u64,
    learn_steps: u64,
    grads: Gradients,
}

/// Index of the largest value; the lowest index wins ties.
pub fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, v) in values.iter().enumerate().skip(1) {
        if *v > values[best] {
            best = i;
        }
    }
    best
}

/// `reward` when `done`, otherwise `reward + discount * max_a Q_target(next, a)`.
pub fn td_target(
    reward: f64,
    next_state: &StateVector,
    done: bool,
    target: &Mlp,
    discount: f64,
) -> Result<f64> {
    if done {
        return Ok(reward);
    }
    let q = target.forward(next_state.as_slice())?;
    let best = q.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    Ok(reward + discount * best)
}

impl Agent {
    /// Fresh agent for a cluster with `nodes` nodes; the network is seeded
    /// from `config.seed`.
    pub fn new(config: DqnConfig, nodes: usize) -> Result<Self> {
        config.validate()?;
        let spec = MlpSpec::new(state_dim(nodes), config.hidden.clone(), nodes, config.seed);
        let online = Mlp::new(spec)?;
        let optim = OptimState::new(config.optimizer, config.learning_rate)?;
        Self::from_parts(config, online.clone(), online, optim)
    }

    /// Assembles an agent from explicit networks, e.g. to start from a
    /// target network that differs from the online one.
    pub fn from_parts(config: DqnConfig, online: Mlp, target: Mlp, optim: OptimState) -> Result<Self> {
        config.validate()?;
        if online.spec().layer_dims() != target.spec().layer_dims() {
            return Err(Error::structure("online and target networks differ in shape"));
        }
        let grads = Gradients::zeros_like(&online);
        Ok(Agent {
            config,
            online,
            target,
            optim,
            env_steps: 0,
            learn_steps: 0,
            grads,
        })
    }

    pub fn config(&self) -> &DqnConfig {
        &self.config
    }

    pub fn online(&self) -> &Mlp {
        &self.online
    }

    pub fn target(&self) -> &Mlp {
        &self.target
    }

    pub fn into_online(self) -> Mlp {
        self.online
    }

    pub fn env_steps(&self) -> u64 {
        self.env_steps
    }

    pub fn learn_steps(&self) -> u64 {
        self.learn_steps
    }

    pub(crate) fn record_env_step(&mut self) {
        self.env_steps += 1;
    }

    pub fn q_values(&self, state: &StateVector) -> Result<Vec<f64>> {
        self.online.forward(state.as_slice())
    }

    /// Epsilon-greedy. Always draws one uniform number for the exploration
    /// coin, plus one action index when exploring.
    pub fn select_action<R: Rng>(&self, state: &StateVector, epsilon: f64, rng: &mut R) -> Result<Action> {
        let explore = rng.gen::<f64>() < epsilon;
        if explore {
            return Ok(Action(rng.gen_range(0..self.online.output_dim())));
        }
        Ok(Action(argmax(&self.q_values(state)?)))
    }

    /// One gradient step on the mean squared TD error of `batch`.
    ///
    /// The gradient of each sample is `(Q(s,a) - y) / B` (clamped to
    /// `td_clip` before dividing), i.e. the gradient of half the mean
    /// squared error, so with a single sample and plain SGD the update is
    /// exactly `Q += lr * (y - Q)`. Returns the mean squared TD error.
    pub fn learn_step(&mut self, batch: &[&Transition]) -> Result<f64> {
        if batch.is_empty() {
            return Err(Error::contract("learn_step needs a nonempty batch"));
        }
        let scale = 1.0 / batch.len() as f64;
        let mut loss = 0.0;
        let mut upstream = vec![0.0; self.online.output_dim()];
        self.grads.fill_zero();

        for t in batch {
            let q = self.online.forward(t.state.as_slice())?;
            let Some(&q_sa) = q.get(t.action.0) else {
                return Err(Error::contract(format!("action {} out of range", t.action.0)));
            };
            let y = td_target(t.reward, &t.next_state, t.done, &self.target, self.config.discount)?;
            let err = q_sa - y;
            loss += err * err;
            let clipped = match self.config.td_clip {
                Some(c) => err.clamp(-c, c),
                None => err,
            };
            upstream.iter_mut().for_each(|u| *u = 0.0);
            upstream[t.action.0] = clipped * scale;
            self.online
                .accumulate_gradients(t.state.as_slice(), &upstream, &mut self.grads)?;
        }
        loss *= scale;

        if !loss.is_finite() {
            let worst = batch
                .iter()
                .map(|t| t.reward)
                .fold(0.0f64, |a, r| a.max(r.abs()));
            return Err(Error::Training(format!(
                "non-finite loss at learning step {} (batch of {}, max |reward| {worst}, online params finite: {})",
                self.learn_steps,
                batch.len(),
                self.online.is_finite()
            )));
        }
        self.optim.apply(&mut self.online, &self.grads)?;
        self.learn_steps += 1;
        if self.learn_steps.is_multiple_of(self.config.target_sync_every) {
            self.target.clone_from(&self.online);
        }
        Ok(loss)
    }
}
