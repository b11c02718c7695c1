//! Exhaustive search over all `(M+K)^N` assignments for tiny instances.
//!
//! The scoring here is written independently of [`crate::model`] so the two
//! can be cross-checked; both sum per-task terms in ascending task order and
//! must agree bit for bit.

use crate::error::{Error, Result};
use crate::model::{evaluate_assignment, Assignment, ClusterSpec, Metrics, MigrationCostModel, Workload};

pub const DEFAULT_BUDGET: u64 = 10_000_000;

/// Number of assignments an exhaustive search over this instance visits.
pub fn search_space(tasks: usize, nodes: usize) -> f64 {
    (nodes as f64).powi(tasks as i32)
}

pub fn check_budget(tasks: usize, nodes: usize, budget: u64) -> Result<()> {
    let needed = search_space(tasks, nodes);
    if needed > budget as f64 {
        return Err(Error::BudgetExceeded { needed, budget });
    }
    Ok(())
}

/// Per (task, node) execution time and migration cost.
struct CostTable {
    nodes: usize,
    time: Vec<f64>,
    migration: Vec<f64>,
}

impl CostTable {
    fn build(workload: &Workload, cluster: &ClusterSpec, model: &MigrationCostModel) -> Self {
        let nodes = cluster.len();
        let edges = cluster.edge_count();
        let mut time = Vec::with_capacity(workload.len() * nodes);
        let mut migration = Vec::with_capacity(workload.len() * nodes);
        for task in workload.tasks() {
            for (n, node) in cluster.nodes().iter().enumerate() {
                time.push(task.demand / node.capacity);
                let moved = model.base + model.per_mi * task.demand;
                migration.push(if n == task.origin {
                    0.0
                } else if n < edges {
                    moved * model.edge_to_edge_factor
                } else {
                    moved
                });
            }
        }
        CostTable {
            nodes,
            time,
            migration,
        }
    }

    fn score(&self, placement: &[usize]) -> f64 {
        let mut t = 0.0;
        let mut d = 0.0;
        for (i, &n) in placement.iter().enumerate() {
            t += self.time[i * self.nodes + n];
            d += self.migration[i * self.nodes + n];
        }
        t + d
    }
}

/// Objective `T_total + D_total` computed without going through
/// [`evaluate_assignment`].
pub fn independent_objective(
    workload: &Workload,
    cluster: &ClusterSpec,
    assignment: &Assignment,
    model: &MigrationCostModel,
) -> Result<f64> {
    assignment.validate(workload, cluster)?;
    Ok(CostTable::build(workload, cluster, model).score(&assignment.placement))
}

/// Sum over tasks of the fastest possible execution time on any node,
/// ignoring migration. No assignment has a smaller `t_total`.
pub fn time_lower_bound(workload: &Workload, cluster: &ClusterSpec) -> f64 {
    let fastest = cluster
        .nodes()
        .iter()
        .map(|n| n.capacity)
        .fold(0.0, f64::max);
    workload.tasks().iter().map(|t| t.demand / fastest).sum()
}

pub fn brute_force_optimal(
    workload: &Workload,
    cluster: &ClusterSpec,
    model: &MigrationCostModel,
) -> Result<(Assignment, Metrics)> {
    brute_force_optimal_with_budget(workload, cluster, model, DEFAULT_BUDGET)
}

/// Minimises `T_total + D_total`; ties go to the lexicographically smallest
/// placement.
pub fn brute_force_optimal_with_budget(
    workload: &Workload,
    cluster: &ClusterSpec,
    model: &MigrationCostModel,
    budget: u64,
) -> Result<(Assignment, Metrics)> {
    check_budget(workload.len(), cluster.len(), budget)?;
    workload.check_against(cluster)?;
    model.validate()?;

    let table = CostTable::build(workload, cluster, model);
    let nodes = cluster.len();
    let mut current = vec![0usize; workload.len()];
    let mut best = current.clone();
    let mut best_score = table.score(&current);

    // odometer over placements in lexicographic order, last task fastest
    loop {
        let mut pos = current.len();
        loop {
            if pos == 0 {
                let assignment = Assignment::new(best);
                let metrics = evaluate_assignment(workload, cluster, &assignment, model)?;
                return Ok((assignment, metrics));
            }
            pos -= 1;
            current[pos] += 1;
            if current[pos] < nodes {
                break;
            }
            current[pos] = 0;
        }
        let score = table.score(&current);
        if score < best_score {
            best_score = score;
            best.copy_from_slice(&current);
        }
    }
}
