//! Cluster and workload types plus the scheduling objective.
//!
//! Demand is measured in million instructions (MI) and capacity in MIPS, so
//! every time quantity below is in simulated seconds. All sums run in
//! ascending task index so metrics are bit-reproducible.

use std::fmt;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NodeKind {
    Edge,
    Cloud,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NodeSpec {
    pub id: usize,
    pub kind: NodeKind,
    /// MIPS.
    pub capacity: f64,
}

/// Edge nodes occupy indices `0..M`, cloud nodes `M..M+K`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ClusterFile", into = "ClusterFile")]
pub struct ClusterSpec {
    nodes: Vec<NodeSpec>,
    edge_count: usize,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ClusterFile {
    nodes: Vec<NodeSpec>,
}

impl TryFrom<ClusterFile> for ClusterSpec {
    type Error = Error;

    fn try_from(file: ClusterFile) -> Result<Self> {
        ClusterSpec::new(file.nodes)
    }
}

impl From<ClusterSpec> for ClusterFile {
    fn from(cluster: ClusterSpec) -> Self {
        ClusterFile {
            nodes: cluster.nodes,
        }
    }
}

impl ClusterSpec {
    /// Validates ids, kinds and capacities.
    pub fn new(nodes: Vec<NodeSpec>) -> Result<Self> {
        let edge_count = nodes
            .iter()
            .take_while(|n| n.kind == NodeKind::Edge)
            .count();
        if edge_count == 0 {
            return Err(Error::config("cluster needs at least one edge node"));
        }
        if edge_count == nodes.len() {
            return Err(Error::config("cluster needs at least one cloud node"));
        }
        for (idx, node) in nodes.iter().enumerate() {
            if node.id != idx {
                return Err(Error::config(format!(
                    "node ids must be contiguous: position {idx} has id {}",
                    node.id
                )));
            }
            let expected = if idx < edge_count {
                NodeKind::Edge
            } else {
                NodeKind::Cloud
            };
            if node.kind != expected {
                return Err(Error::config(format!(
                    "node {idx}: edge nodes must precede cloud nodes"
                )));
            }
            if !(node.capacity.is_finite() && node.capacity > 0.0) {
                return Err(Error::config(format!(
                    "node {idx}: capacity must be positive, got {}",
                    node.capacity
                )));
            }
        }
        Ok(ClusterSpec { nodes, edge_count })
    }

    /// Builds a cluster from explicit edge and cloud capacities.
    pub fn from_capacities(edge: &[f64], cloud: &[f64]) -> Result<Self> {
        let nodes = edge
            .iter()
            .map(|&c| (NodeKind::Edge, c))
            .chain(cloud.iter().map(|&c| (NodeKind::Cloud, c)))
            .enumerate()
            .map(|(id, (kind, capacity))| NodeSpec { id, kind, capacity })
            .collect();
        ClusterSpec::new(nodes)
    }

    pub fn nodes(&self) -> &[NodeSpec] {
        &self.nodes
    }

    pub fn node(&self, idx: usize) -> &NodeSpec {
        &self.nodes[idx]
    }

    /// M.
    pub fn edge_count(&self) -> usize {
        self.edge_count
    }

    /// K.
    pub fn cloud_count(&self) -> usize {
        self.nodes.len() - self.edge_count
    }

    /// M + K.
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn capacity(&self, idx: usize) -> f64 {
        self.nodes[idx].capacity
    }

    pub fn is_cloud(&self, idx: usize) -> bool {
        idx >= self.edge_count
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Task {
    pub id: usize,
    /// MI.
    pub demand: f64,
    /// Edge node the task arrives at.
    pub origin: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "WorkloadFile", into = "WorkloadFile")]
pub struct Workload {
    seed: u64,
    demand_range: (f64, f64),
    tasks: Vec<Task>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct WorkloadFile {
    seed: u64,
    demand_range: [f64; 2],
    tasks: Vec<Task>,
}

impl TryFrom<WorkloadFile> for Workload {
    type Error = Error;

    fn try_from(file: WorkloadFile) -> Result<Self> {
        let [lo, hi] = file.demand_range;
        Workload::new(file.seed, (lo, hi), file.tasks)
    }
}

impl From<Workload> for WorkloadFile {
    fn from(w: Workload) -> Self {
        WorkloadFile {
            seed: w.seed,
            demand_range: [w.demand_range.0, w.demand_range.1],
            tasks: w.tasks,
        }
    }
}

fn check_range(what: &str, lo: f64, hi: f64) -> Result<()> {
    if !(lo.is_finite() && hi.is_finite() && lo > 0.0 && lo <= hi) {
        return Err(Error::config(format!(
            "{what} range must satisfy 0 < lo <= hi, got ({lo}, {hi})"
        )));
    }
    Ok(())
}

impl Workload {
    pub fn new(seed: u64, demand_range: (f64, f64), tasks: Vec<Task>) -> Result<Self> {
        let (lo, hi) = demand_range;
        check_range("demand", lo, hi)?;
        if tasks.is_empty() {
            return Err(Error::config("workload needs at least one task"));
        }
        for (idx, task) in tasks.iter().enumerate() {
            if task.id != idx {
                return Err(Error::config(format!(
                    "task ids must be contiguous: position {idx} has id {}",
                    task.id
                )));
            }
            if !(task.demand >= lo && task.demand <= hi) {
                return Err(Error::config(format!(
                    "task {idx}: demand {} outside [{lo}, {hi}]",
                    task.demand
                )));
            }
        }
        Ok(Workload {
            seed,
            demand_range,
            tasks,
        })
    }

    pub fn tasks(&self) -> &[Task] {
        &self.tasks
    }

    /// N.
    pub fn len(&self) -> usize {
        self.tasks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tasks.is_empty()
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn demand_range(&self) -> (f64, f64) {
        self.demand_range
    }

    /// Checks that every task originates at an edge node of `cluster`.
    pub fn check_against(&self, cluster: &ClusterSpec) -> Result<()> {
        match self
            .tasks
            .iter()
            .find(|t| t.origin >= cluster.edge_count())
        {
            Some(t) => Err(Error::structure(format!(
                "task {} originates at node {} but the cluster has {} edge nodes",
                t.id,
                t.origin,
                cluster.edge_count()
            ))),
            None => Ok(()),
        }
    }
}

/// `placement[i]` is the node executing task `i`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Assignment {
    pub placement: Vec<usize>,
}

impl Assignment {
    pub fn new(placement: Vec<usize>) -> Self {
        Assignment { placement }
    }

    /// Every task on its origin node.
    pub fn at_origin(workload: &Workload) -> Self {
        Assignment::new(workload.tasks().iter().map(|t| t.origin).collect())
    }

    pub fn len(&self) -> usize {
        self.placement.len()
    }

    pub fn is_empty(&self) -> bool {
        self.placement.is_empty()
    }

    pub fn validate(&self, workload: &Workload, cluster: &ClusterSpec) -> Result<()> {
        if self.placement.len() != workload.len() {
            return Err(Error::structure(format!(
                "assignment has {} entries for {} tasks",
                self.placement.len(),
                workload.len()
            )));
        }
        if let Some((i, &n)) = self
            .placement
            .iter()
            .enumerate()
            .find(|(_, &n)| n >= cluster.len())
        {
            return Err(Error::structure(format!(
                "task {i} placed on node {n}, cluster has {} nodes",
                cluster.len()
            )));
        }
        workload.check_against(cluster)
    }
}

/// Affine migration cost: `base + per_mi * demand`, scaled by
/// `edge_to_edge_factor` when the destination is another edge node.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MigrationCostModel {
    pub base: f64,
    pub per_mi: f64,
    pub edge_to_edge_factor: f64,
}

impl Default for MigrationCostModel {
    fn default() -> Self {
        MigrationCostModel {
            base: 0.5,
            per_mi: 0.001,
            edge_to_edge_factor: 1.0,
        }
    }
}

impl MigrationCostModel {
    /// A model where migrating is free.
    pub fn free() -> Self {
        MigrationCostModel {
            base: 0.0,
            per_mi: 0.0,
            edge_to_edge_factor: 0.0,
        }
    }

    /// Flat cost per migration regardless of size or destination.
    pub fn flat(base: f64) -> Self {
        MigrationCostModel {
            base,
            per_mi: 0.0,
            edge_to_edge_factor: 1.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let fields = [
            ("base", self.base),
            ("per_mi", self.per_mi),
            ("edge_to_edge_factor", self.edge_to_edge_factor),
        ];
        for (name, v) in fields {
            if !(v.is_finite() && v >= 0.0) {
                return Err(Error::config(format!(
                    "migration {name} must be a nonnegative number, got {v}"
                )));
            }
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    /// Sum of per-task execution times.
    pub t_total: f64,
    /// Sum of migration costs.
    pub d_total: f64,
    pub makespan: f64,
    pub utilization: f64,
    pub migration_count: usize,
    /// `t_total + d_total`.
    pub objective: f64,
}

impl fmt::Display for Metrics {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "T={:.3}s D={:.3}s objective={:.3}s makespan={:.3}s U={:.3} migrations={}",
            self.t_total,
            self.d_total,
            self.objective,
            self.makespan,
            self.utilization,
            self.migration_count
        )
    }
}

/// Execution time of `task` on `node`.
pub fn task_time(task: &Task, node: &NodeSpec) -> f64 {
    task.demand / node.capacity
}

/// Cost of running `task` on `dest` instead of its origin.
pub fn migration_cost(
    task: &Task,
    dest: usize,
    model: &MigrationCostModel,
    cluster: &ClusterSpec,
) -> f64 {
    if dest == task.origin {
        return 0.0;
    }
    let cost = model.base + model.per_mi * task.demand;
    if cluster.is_cloud(dest) {
        cost
    } else {
        cost * model.edge_to_edge_factor
    }
}

/// Accumulated demand per node.
pub fn node_work(workload: &Workload, cluster: &ClusterSpec, assignment: &Assignment) -> Vec<f64> {
    let mut work = vec![0.0; cluster.len()];
    for (task, &node) in workload.tasks().iter().zip(&assignment.placement) {
        work[node] += task.demand;
    }
    work
}

/// Makespan and busy-fraction utilization from per-node busy times.
///
/// Utilization is the mean over all nodes of `busy_n / makespan`, and 0 when
/// nothing is scheduled.
pub fn makespan_and_utilization(busy: &[f64]) -> (f64, f64) {
    let makespan = busy.iter().copied().fold(0.0, f64::max);
    if makespan <= 0.0 {
        return (0.0, 0.0);
    }
    let sum: f64 = busy.iter().map(|b| b / makespan).sum();
    let utilization = (sum / busy.len() as f64).min(1.0);
    (makespan, utilization)
}

pub fn evaluate_assignment(
    workload: &Workload,
    cluster: &ClusterSpec,
    assignment: &Assignment,
    model: &MigrationCostModel,
) -> Result<Metrics> {
    assignment.validate(workload, cluster)?;

    let mut t_total = 0.0;
    let mut d_total = 0.0;
    let mut migration_count = 0;
    for (task, &node) in workload.tasks().iter().zip(&assignment.placement) {
        t_total += task_time(task, cluster.node(node));
        d_total += migration_cost(task, node, model, cluster);
        if node != task.origin {
            migration_count += 1;
        }
    }

    let busy: Vec<f64> = node_work(workload, cluster, assignment)
        .iter()
        .zip(cluster.nodes())
        .map(|(w, n)| w / n.capacity)
        .collect();
    let (makespan, utilization) = makespan_and_utilization(&busy);

    Ok(Metrics {
        t_total,
        d_total,
        makespan,
        utilization,
        migration_count,
        objective: t_total + d_total,
    })
}

/// Draws `n` tasks with demand uniform on `[demand_lo, demand_hi]` and origin
/// uniform over the `m` edge nodes.
pub fn generate_workload(
    n: usize,
    demand_lo: f64,
    demand_hi: f64,
    m: usize,
    seed: u64,
) -> Result<Workload> {
    check_range("demand", demand_lo, demand_hi)?;
    if n == 0 {
        return Err(Error::config("task count must be at least 1"));
    }
    if m == 0 {
        return Err(Error::config("edge node count must be at least 1"));
    }
    let mut rng = rng::seeded(seed);
    let tasks = (0..n)
        .map(|id| {
            let demand = rng.gen_range(demand_lo..=demand_hi);
            let origin = rng.gen_range(0..m);
            Task { id, demand, origin }
        })
        .collect();
    Workload::new(seed, (demand_lo, demand_hi), tasks)
}

pub fn generate_cluster(
    m: usize,
    k: usize,
    edge_cap_range: (f64, f64),
    cloud_cap_range: (f64, f64),
    seed: u64,
) -> Result<ClusterSpec> {
    if m == 0 || k == 0 {
        return Err(Error::config(format!(
            "need at least one edge and one cloud node, got m={m} k={k}"
        )));
    }
    check_range("edge capacity", edge_cap_range.0, edge_cap_range.1)?;
    check_range("cloud capacity", cloud_cap_range.0, cloud_cap_range.1)?;
    let mut rng = rng::seeded(seed);
    let edge: Vec<f64> = (0..m)
        .map(|_| rng.gen_range(edge_cap_range.0..=edge_cap_range.1))
        .collect();
    let cloud: Vec<f64> = (0..k)
        .map(|_| rng.gen_range(cloud_cap_range.0..=cloud_cap_range.1))
        .collect();
    ClusterSpec::from_capacities(&edge, &cloud)
}

/// Cluster generator parameters.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ClusterSettings {
    pub edge_nodes: usize,
    pub cloud_nodes: usize,
    pub edge_capacity: (f64, f64),
    pub cloud_capacity: (f64, f64),
    pub seed: u64,
}

impl Default for ClusterSettings {
    fn default() -> Self {
        ClusterSettings {
            edge_nodes: 10,
            cloud_nodes: 3,
            edge_capacity: (80.0, 120.0),
            cloud_capacity: (300.0, 500.0),
            seed: 0,
        }
    }
}

impl ClusterSettings {
    pub fn generate(&self) -> Result<ClusterSpec> {
        generate_cluster(
            self.edge_nodes,
            self.cloud_nodes,
            self.edge_capacity,
            self.cloud_capacity,
            self.seed,
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn task(id: usize, demand: f64, origin: usize) -> Task {
        Task { id, demand, origin }
    }

    fn node(capacity: f64) -> NodeSpec {
        NodeSpec {
            id: 0,
            kind: NodeKind::Edge,
            capacity,
        }
    }

    #[test]
    fn task_time_examples() {
        assert_eq!(task_time(&task(0, 100.0, 0), &node(100.0)), 1.0);
        assert_eq!(task_time(&task(0, 100.0, 0), &node(50.0)), 2.0);
        let t = task_time(&task(0, 50.0, 0), &node(150.0));
        assert!((t - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn migration_cost_examples() {
        let cluster = ClusterSpec::from_capacities(&[100.0, 100.0], &[200.0]).unwrap();
        let model = MigrationCostModel {
            base: 0.5,
            per_mi: 0.0,
            edge_to_edge_factor: 0.5,
        };
        let t = task(0, 80.0, 0);
        assert_eq!(migration_cost(&t, 0, &model, &cluster), 0.0);
        assert_eq!(migration_cost(&t, 2, &model, &cluster), 0.5);
        assert_eq!(migration_cost(&t, 1, &model, &cluster), 0.25);
    }

    #[test]
    fn evaluate_two_task_example() {
        let cluster = ClusterSpec::from_capacities(&[100.0], &[200.0]).unwrap();
        let workload =
            Workload::new(0, (100.0, 200.0), vec![task(0, 100.0, 0), task(1, 200.0, 0)]).unwrap();
        let m = evaluate_assignment(
            &workload,
            &cluster,
            &Assignment::new(vec![0, 1]),
            &MigrationCostModel::flat(0.5),
        )
        .unwrap();
        assert_eq!(m.t_total, 2.0);
        assert_eq!(m.d_total, 0.5);
        assert_eq!(m.objective, 2.5);
        assert_eq!(m.migration_count, 1);
    }

    #[test]
    fn single_task_on_origin_has_no_migration() {
        let cluster = ClusterSpec::from_capacities(&[100.0], &[200.0]).unwrap();
        let workload = Workload::new(0, (10.0, 10.0), vec![task(0, 10.0, 0)]).unwrap();
        let m = evaluate_assignment(
            &workload,
            &cluster,
            &Assignment::at_origin(&workload),
            &MigrationCostModel::default(),
        )
        .unwrap();
        assert_eq!(m.d_total, 0.0);
        assert_eq!(m.migration_count, 0);
    }

    #[test]
    fn utilization_example() {
        let cluster = ClusterSpec::from_capacities(&[100.0], &[100.0]).unwrap();
        let workload =
            Workload::new(0, (50.0, 100.0), vec![task(0, 100.0, 0), task(1, 50.0, 0)]).unwrap();
        let m = evaluate_assignment(
            &workload,
            &cluster,
            &Assignment::new(vec![0, 1]),
            &MigrationCostModel::free(),
        )
        .unwrap();
        assert_eq!(m.makespan, 1.0);
        assert_eq!(m.utilization, 0.75);
    }

    #[test]
    fn length_mismatch_is_structural() {
        let cluster = ClusterSpec::from_capacities(&[100.0], &[100.0]).unwrap();
        let workload = Workload::new(0, (1.0, 1.0), vec![task(0, 1.0, 0)]).unwrap();
        let err = evaluate_assignment(
            &workload,
            &cluster,
            &Assignment::new(vec![0, 1]),
            &MigrationCostModel::default(),
        )
        .unwrap_err();
        assert!(matches!(err, Error::Structure(_)));
        let err = evaluate_assignment(
            &workload,
            &cluster,
            &Assignment::new(vec![7]),
            &MigrationCostModel::default(),
        )
        .unwrap_err();
        assert!(matches!(err, Error::Structure(_)));
    }

    #[test]
    fn generated_demands_respect_table_ranges() {
        let w = generate_workload(100, 50.0, 150.0, 10, 3).unwrap();
        assert_eq!(w.len(), 100);
        assert!(w.tasks().iter().all(|t| (50.0..=150.0).contains(&t.demand)));
        assert!(w.tasks().iter().all(|t| t.origin < 10));
        let w = generate_workload(800, 400.0, 1200.0, 10, 3).unwrap();
        assert!(w.tasks().iter().all(|t| (400.0..=1200.0).contains(&t.demand)));
    }

    #[test]
    fn generation_is_deterministic() {
        let a = generate_workload(50, 1.0, 2.0, 3, 9).unwrap();
        let b = generate_workload(50, 1.0, 2.0, 3, 9).unwrap();
        assert_eq!(
            serde_json::to_string(&a).unwrap(),
            serde_json::to_string(&b).unwrap()
        );
        let c = generate_cluster(10, 3, (80.0, 120.0), (300.0, 500.0), 4).unwrap();
        let d = generate_cluster(10, 3, (80.0, 120.0), (300.0, 500.0), 4).unwrap();
        assert_eq!(c, d);
    }

    #[test]
    fn invalid_ranges_are_rejected() {
        assert!(matches!(
            generate_workload(10, 150.0, 50.0, 2, 0),
            Err(Error::Config(_))
        ));
        assert!(matches!(
            generate_workload(10, 0.0, 50.0, 2, 0),
            Err(Error::Config(_))
        ));
        assert!(matches!(
            generate_workload(0, 1.0, 2.0, 2, 0),
            Err(Error::Config(_))
        ));
        assert!(matches!(
            generate_cluster(1, 1, (5.0, 1.0), (1.0, 2.0), 0),
            Err(Error::Config(_))
        ));
        assert!(matches!(
            generate_cluster(0, 1, (1.0, 1.0), (1.0, 2.0), 0),
            Err(Error::Config(_))
        ));
    }

    #[test]
    fn cluster_layout() {
        let c = generate_cluster(10, 3, (100.0, 100.0), (300.0, 500.0), 1).unwrap();
        assert_eq!(c.len(), 13);
        assert_eq!(c.edge_count(), 10);
        assert_eq!(c.cloud_count(), 3);
        for n in c.nodes() {
            let expected = if n.id < 10 {
                NodeKind::Edge
            } else {
                NodeKind::Cloud
            };
            assert_eq!(n.kind, expected);
        }
        assert!(c.nodes()[..10].iter().all(|n| n.capacity == 100.0));
    }

    #[test]
    fn json_formats() {
        let c = ClusterSpec::from_capacities(&[100.0], &[250.0]).unwrap();
        let json = serde_json::to_string(&c).unwrap();
        assert_eq!(
            json,
            r#"{"nodes":[{"id":0,"kind":"edge","capacity":100.0},{"id":1,"kind":"cloud","capacity":250.0}]}"#
        );
        let w = Workload::new(7, (1.0, 2.0), vec![task(0, 1.5, 0)]).unwrap();
        let json = serde_json::to_string(&w).unwrap();
        assert_eq!(
            json,
            r#"{"seed":7,"demand_range":[1.0,2.0],"tasks":[{"id":0,"demand":1.5,"origin":0}]}"#
        );
        assert_eq!(serde_json::from_str::<Workload>(&json).unwrap(), w);
        assert_eq!(
            serde_json::to_string(&Assignment::new(vec![1, 0])).unwrap(),
            r#"{"placement":[1,0]}"#
        );
    }

    #[test]
    fn json_rejects_unknown_fields_and_bad_layouts() {
        let extra = r#"{"nodes":[{"id":0,"kind":"edge","capacity":1.0,"x":1}]}"#;
        assert!(serde_json::from_str::<ClusterSpec>(extra).is_err());
        let extra = r#"{"nodes":[],"other":1}"#;
        assert!(serde_json::from_str::<ClusterSpec>(extra).is_err());
        let cloud_first = r#"{"nodes":[{"id":0,"kind":"cloud","capacity":1.0},{"id":1,"kind":"edge","capacity":1.0}]}"#;
        assert!(serde_json::from_str::<ClusterSpec>(cloud_first).is_err());
        let bad_demand = r#"{"seed":0,"demand_range":[1.0,2.0],"tasks":[{"id":0,"demand":3.0,"origin":0}]}"#;
        assert!(serde_json::from_str::<Workload>(bad_demand).is_err());
        let unknown = r#"{"seed":0,"demand_range":[1.0,2.0],"tasks":[],"n":0}"#;
        assert!(serde_json::from_str::<Workload>(unknown).is_err());
    }
}
