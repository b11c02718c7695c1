//! Heuristic baselines.
//!
//! Every scheduler breaks ties toward the lowest node index so results are
//! reproducible bit for bit.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::env::RewardWeights;
use crate::error::Error;
use crate::model::{Assignment, ClusterSpec, MigrationCostModel, Workload};
use crate::rng;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SchedulerKind {
    Priority,
    LoadBalance,
    Random,
    Greedy,
    Oracle,
}

impl SchedulerKind {
    pub const ALL: [SchedulerKind; 5] = [
        SchedulerKind::Priority,
        SchedulerKind::LoadBalance,
        SchedulerKind::Random,
        SchedulerKind::Greedy,
        SchedulerKind::Oracle,
    ];

    pub fn name(self) -> &'static str {
        match self {
            SchedulerKind::Priority => "ps",
            SchedulerKind::LoadBalance => "lbs",
            SchedulerKind::Random => "random",
            SchedulerKind::Greedy => "greedy",
            SchedulerKind::Oracle => "oracle",
        }
    }
}

impl fmt::Display for SchedulerKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SchedulerKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Error> {
        SchedulerKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::config(format!("unknown scheduler {s:?}")))
    }
}

/// Index of the smallest key, first one wins on ties.
pub(crate) fn argmin_by<F: FnMut(usize) -> f64>(n: usize, mut key: F) -> usize {
    let mut best = 0;
    let mut best_key = key(0);
    for i in 1..n {
        let k = key(i);
        if k < best_key {
            best = i;
            best_key = k;
        }
    }
    best
}

/// Largest demand first (ties: lower task id), each task on the node with the
/// earliest projected finish `(work + demand) / capacity`.
pub fn schedule_priority(workload: &Workload, cluster: &ClusterSpec) -> Assignment {
    let tasks = workload.tasks();
    let mut order: Vec<usize> = (0..tasks.len()).collect();
    order.sort_by(|&a, &b| tasks[b].demand.total_cmp(&tasks[a].demand).then(a.cmp(&b)));

    let mut work = vec![0.0; cluster.len()];
    let mut placement = vec![0; tasks.len()];
    for i in order {
        let demand = tasks[i].demand;
        let node = argmin_by(cluster.len(), |n| (work[n] + demand) / cluster.capacity(n));
        work[node] += demand;
        placement[i] = node;
    }
    Assignment::new(placement)
}

/// Arrival order, each task on the node with the lowest busy time
/// `work / capacity` before the task is added.
pub fn schedule_load_balance(workload: &Workload, cluster: &ClusterSpec) -> Assignment {
    let mut work = vec![0.0; cluster.len()];
    let placement = workload
        .tasks()
        .iter()
        .map(|task| {
            let node = argmin_by(cluster.len(), |n| work[n] / cluster.capacity(n));
            work[node] += task.demand;
            node
        })
        .collect();
    Assignment::new(placement)
}

pub fn schedule_random(workload: &Workload, cluster: &ClusterSpec, seed: u64) -> Assignment {
    let mut rng = rng::seeded(seed);
    let placement = (0..workload.len())
        .map(|_| rng.gen_range(0..cluster.len()))
        .collect();
    Assignment::new(placement)
}

/// Myopic: each task goes to the node with the best immediate step reward.
pub fn schedule_greedy(
    workload: &Workload,
    cluster: &ClusterSpec,
    model: &MigrationCostModel,
    weights: &RewardWeights,
) -> Assignment {
    let placement = workload
        .tasks()
        .iter()
        .map(|task| argmin_by(cluster.len(), |n| weights.step_cost(task, n, cluster, model)))
        .collect();
    Assignment::new(placement)
}
