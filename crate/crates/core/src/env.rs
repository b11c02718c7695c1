//! Sequential assignment MDP.
//!
//! One episode places the tasks of a workload in arrival order, one decision
//! per task over the `M + K` nodes, so a complete episode enumerates exactly
//! one joint assignment.
//!
//! Rewards are shaped per step: each step pays its own weighted execution
//! time and migration cost, and the final step additionally pays the
//! utilization penalty of the finished assignment. The episode return is
//! therefore `-(alpha * T + beta * (1 - U) + gamma_m * D)`.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{
    evaluate_assignment, migration_cost, task_time, Assignment, ClusterSpec, MigrationCostModel,
    Metrics, Task, Workload,
};

/// Number of features after the per-node block.
pub const EXTRA_FEATURES: usize = 4;

/// State width for a cluster with `nodes` nodes.
pub fn state_dim(nodes: usize) -> usize {
    nodes + EXTRA_FEATURES
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RewardWeights {
    /// Weight on execution time.
    pub alpha: f64,
    /// Weight on idle capacity, `1 - U`.
    pub beta: f64,
    /// Weight on migration cost.
    pub gamma_m: f64,
}

impl Default for RewardWeights {
    fn default() -> Self {
        RewardWeights {
            alpha: 1.0,
            beta: 10.0,
            gamma_m: 1.0,
        }
    }
}

impl RewardWeights {
    pub fn new(alpha: f64, beta: f64, gamma_m: f64) -> Result<Self> {
        let w = RewardWeights {
            alpha,
            beta,
            gamma_m,
        };
        w.validate()?;
        Ok(w)
    }

    pub fn validate(&self) -> Result<()> {
        let all = [self.alpha, self.beta, self.gamma_m];
        if all.iter().any(|w| !(w.is_finite() && *w >= 0.0)) {
            return Err(Error::config(format!(
                "reward weights must be nonnegative: {self:?}"
            )));
        }
        if all.iter().all(|w| *w == 0.0) {
            return Err(Error::config("reward weights must not all be zero"));
        }
        Ok(())
    }

    /// Weighted cost of running `task` on `node`, excluding the terminal
    /// utilization term. The non-final step reward is its negation.
    pub fn step_cost(
        &self,
        task: &Task,
        node: usize,
        cluster: &ClusterSpec,
        model: &MigrationCostModel,
    ) -> f64 {
        self.alpha * task_time(task, cluster.node(node))
            + self.gamma_m * migration_cost(task, node, model, cluster)
    }

    /// The full episodic return for a finished assignment.
    pub fn episode_value(&self, metrics: &Metrics) -> f64 {
        -(self.alpha * metrics.t_total
            + self.beta * (1.0 - metrics.utilization)
            + self.gamma_m * metrics.d_total)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct StateVector(pub Vec<f64>);

impl StateVector {
    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// Index of the node the current task is sent to.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Action(pub usize);

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Transition {
    pub state: StateVector,
    pub action: Action,
    pub reward: f64,
    pub next_state: StateVector,
    pub done: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct StepOutcome {
    pub state: StateVector,
    pub reward: f64,
    pub done: bool,
}

#[derive(Clone, Debug)]
pub struct Episode<'a> {
    workload: &'a Workload,
    cluster: &'a ClusterSpec,
    weights: RewardWeights,
    model: MigrationCostModel,
    cursor: usize,
    work: Vec<f64>,
    placement: Vec<usize>,
    // suffix_demand[t] = sum of demands of tasks t..N
    suffix_demand: Vec<f64>,
}

impl<'a> Episode<'a> {
    pub fn reset(
        workload: &'a Workload,
        cluster: &'a ClusterSpec,
        weights: RewardWeights,
        model: MigrationCostModel,
    ) -> Result<(Self, StateVector)> {
        weights.validate()?;
        model.validate()?;
        workload.check_against(cluster)?;

        let n = workload.len();
        let mut suffix_demand = vec![0.0; n + 1];
        for (i, task) in workload.tasks().iter().enumerate().rev() {
            suffix_demand[i] = suffix_demand[i + 1] + task.demand;
        }
        let episode = Episode {
            workload,
            cluster,
            weights,
            model,
            cursor: 0,
            work: vec![0.0; cluster.len()],
            placement: Vec::with_capacity(n),
            suffix_demand,
        };
        let state = episode.encode_state();
        Ok((episode, state))
    }

    pub fn cursor(&self) -> usize {
        self.cursor
    }

    pub fn is_done(&self) -> bool {
        self.cursor == self.workload.len()
    }

    pub fn current_task(&self) -> Option<&'a Task> {
        self.workload.tasks().get(self.cursor)
    }

    pub fn placement(&self) -> &[usize] {
        &self.placement
    }

    pub fn node_work(&self) -> &[f64] {
        &self.work
    }

    pub fn weights(&self) -> &RewardWeights {
        &self.weights
    }

    pub fn action_count(&self) -> usize {
        self.cluster.len()
    }

    pub fn step(&mut self, action: Action) -> Result<StepOutcome> {
        let Some(task) = self.current_task() else {
            return Err(Error::contract("step called on a finished episode"));
        };
        let node = action.0;
        if node >= self.cluster.len() {
            return Err(Error::contract(format!(
                "action {node} out of range for {} nodes",
                self.cluster.len()
            )));
        }

        let mut reward = -self.weights.step_cost(task, node, self.cluster, &self.model);
        self.work[node] += task.demand;
        self.placement.push(node);
        self.cursor += 1;

        let done = self.is_done();
        if done {
            let metrics = self.metrics()?;
            reward -= self.weights.beta * (1.0 - metrics.utilization);
        }
        Ok(StepOutcome {
            state: self.encode_state(),
            reward,
            done,
        })
    }

    /// Metrics of the completed assignment.
    pub fn metrics(&self) -> Result<Metrics> {
        if !self.is_done() {
            return Err(Error::contract(format!(
                "episode incomplete: {} of {} tasks placed",
                self.cursor,
                self.workload.len()
            )));
        }
        evaluate_assignment(
            self.workload,
            self.cluster,
            &Assignment::new(self.placement.clone()),
            &self.model,
        )
    }

    pub fn into_assignment(self) -> Result<Assignment> {
        if !self.is_done() {
            return Err(Error::contract("episode incomplete"));
        }
        Ok(Assignment::new(self.placement))
    }

    /// Feature layout, all entries in `[0, 1]`:
    ///
    /// - `0..M+K`: node busy time `work / capacity`, divided by `max(1, max busy)`
    /// - current task demand / demand upper bound
    /// - busy feature of the current task's origin node
    /// - fraction of tasks not yet placed
    /// - mean demand of unplaced tasks / demand upper bound
    ///
    /// The task features are 0 once every task is placed.
    pub fn encode_state(&self) -> StateVector {
        let nodes = self.cluster.len();
        let mut features = Vec::with_capacity(state_dim(nodes));
        let busy = self
            .work
            .iter()
            .zip(self.cluster.nodes())
            .map(|(w, n)| w / n.capacity);
        let scale = busy.clone().fold(1.0, f64::max);
        features.extend(busy.map(|b| b / scale));

        let n = self.workload.len();
        let demand_hi = self.workload.demand_range().1;
        match self.current_task() {
            Some(task) => {
                let remaining = n - self.cursor;
                let mean_remaining = self.suffix_demand[self.cursor] / remaining as f64;
                features.push((task.demand / demand_hi).min(1.0));
                features.push(features[task.origin]);
                features.push(1.0 - self.cursor as f64 / n as f64);
                features.push((mean_remaining / demand_hi).min(1.0));
            }
            None => features.extend([0.0; EXTRA_FEATURES]),
        }
        StateVector(features)
    }
}

/// Sum of rewards of one complete episode.
pub fn episode_return(transitions: &[Transition]) -> Result<f64> {
    let Some((last, body)) = transitions.split_last() else {
        return Err(Error::contract("empty episode"));
    };
    if !last.done || body.iter().any(|t| t.done) {
        return Err(Error::contract(
            "transitions do not form one complete episode",
        ));
    }
    Ok(transitions.iter().map(|t| t.reward).sum())
}

/// Runs one episode with `policy` choosing each action, recording every
/// transition.
pub fn run_episode<F>(
    workload: &Workload,
    cluster: &ClusterSpec,
    weights: RewardWeights,
    model: MigrationCostModel,
    mut policy: F,
) -> Result<(Vec<Transition>, Assignment)>
where
    F: FnMut(&Episode<'_>, &StateVector) -> Action,
{
    let (mut episode, mut state) = Episode::reset(workload, cluster, weights, model)?;
    let mut transitions = Vec::with_capacity(workload.len());
    while !episode.is_done() {
        let action = policy(&episode, &state);
        let out = episode.step(action)?;
        transitions.push(Transition {
            state: std::mem::replace(&mut state, out.state.clone()),
            action,
            reward: out.reward,
            next_state: out.state,
            done: out.done,
        });
    }
    Ok((transitions, episode.into_assignment()?))
}

/// Writes one JSON object per transition.
pub fn write_trace<W: Write>(mut out: W, transitions: &[Transition]) -> std::io::Result<()> {
    for t in transitions {
        serde_json::to_writer(&mut out, t)?;
        out.write_all(b"\n")?;
    }
    Ok(())
}
