//! Experiment runs: workload sweeps, per-algorithm result rows, summaries,
//! and the verification suites used by the command-line front end.

use std::collections::{BTreeMap, HashSet};
use std::fmt;
use std::io::{Read, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::Instant;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::dqn::{greedy_rollout, train, DqnConfig, TrainedModel, TrainingLog, WorkloadSettings};
use crate::env::RewardWeights;
use crate::error::{Error, Result};
use crate::model::{
    evaluate_assignment, generate_cluster, generate_workload, Assignment, ClusterSettings,
    ClusterSpec, Metrics, MigrationCostModel, Workload,
};
use crate::nn::{gradient_check, GradCheckReport, MlpSpec};
use crate::oracle::{brute_force_optimal, check_budget, independent_objective, DEFAULT_BUDGET};
use crate::rng;
use crate::schedulers::{
    schedule_greedy, schedule_load_balance, schedule_priority, schedule_random, SchedulerKind,
};

/// The eight task scales 100..=800 with demand range `(N/2, 3N/2)`.
pub fn standard_scales() -> Vec<WorkloadSettings> {
    (1..=8)
        .map(|k| WorkloadSettings {
            tasks: 100 * k,
            demand_lo: 50.0 * k as f64,
            demand_hi: 150.0 * k as f64,
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentConfig {
    pub cluster: ClusterSettings,
    pub task_scales: Vec<WorkloadSettings>,
    pub weights: RewardWeights,
    pub migration: MigrationCostModel,
    pub dqn: DqnConfig,
    pub replicate_seeds: Vec<u64>,
    pub output_dir: PathBuf,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            cluster: ClusterSettings::default(),
            task_scales: standard_scales(),
            weights: RewardWeights::default(),
            migration: MigrationCostModel::default(),
            dqn: DqnConfig {
                episodes: 40,
                ..DqnConfig::default()
            },
            replicate_seeds: vec![1, 2, 3, 4, 5],
            output_dir: PathBuf::from("results"),
        }
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        if self.task_scales.is_empty() {
            return Err(Error::config("task_scales must not be empty"));
        }
        if self.replicate_seeds.is_empty() {
            return Err(Error::config("replicate_seeds must not be empty"));
        }
        let distinct: HashSet<_> = self.replicate_seeds.iter().collect();
        if distinct.len() != self.replicate_seeds.len() {
            return Err(Error::config("replicate_seeds must be distinct"));
        }
        for s in &self.task_scales {
            if s.tasks == 0 || !(s.demand_lo > 0.0 && s.demand_lo <= s.demand_hi) {
                return Err(Error::config(format!("invalid task scale {s:?}")));
            }
        }
        self.cluster.generate()?;
        self.weights.validate()?;
        self.migration.validate()?;
        self.dqn.validate()
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let config: ExperimentConfig = serde_json::from_str(&text).map_err(|source| Error::Json {
            path: path.into(),
            source,
        })?;
        config.validate()?;
        Ok(config)
    }

    pub fn scale(&self, tasks: usize) -> Result<&WorkloadSettings> {
        self.task_scales
            .iter()
            .find(|s| s.tasks == tasks)
            .ok_or_else(|| Error::config(format!("no task scale with {tasks} tasks in the config")))
    }
}

/// Seed of the evaluation workload for one (replicate, scale) cell.
pub fn workload_seed(replicate_seed: u64, tasks: usize) -> u64 {
    replicate_seed
        .wrapping_mul(1_000_003)
        .wrapping_add(tasks as u64)
}

fn random_scheduler_seed(workload_seed: u64) -> u64 {
    workload_seed ^ 0x9e37_79b9_7f4a_7c15
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Algorithm {
    Baseline(SchedulerKind),
    Dqn,
}

impl Algorithm {
    pub fn name(self) -> &'static str {
        match self {
            Algorithm::Baseline(k) => k.name(),
            Algorithm::Dqn => "dqn",
        }
    }

    pub fn parse_list(list: &str) -> Result<Vec<Algorithm>> {
        let algorithms: Vec<Algorithm> = list
            .split(',')
            .map(str::trim)
            .filter(|s| !s.is_empty())
            .map(str::parse)
            .collect::<Result<_>>()?;
        if algorithms.is_empty() {
            return Err(Error::config("no algorithms given"));
        }
        Ok(algorithms)
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Algorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s == "dqn" {
            Ok(Algorithm::Dqn)
        } else {
            s.parse().map(Algorithm::Baseline)
        }
    }
}

/// One (scale, algorithm, replicate) measurement. Column order is the CSV
/// layout.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ResultRow {
    pub n_tasks: usize,
    pub algorithm: String,
    pub seed: u64,
    pub t_total: f64,
    pub d_total: f64,
    pub objective: f64,
    pub utilization: f64,
    pub migration_count: usize,
    pub makespan: f64,
    pub wall_time_ms: f64,
}

pub const RESULT_COLUMNS: [&str; 10] = [
    "n_tasks",
    "algorithm",
    "seed",
    "t_total",
    "d_total",
    "objective",
    "utilization",
    "migration_count",
    "makespan",
    "wall_time_ms",
];

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct RunOptions {
    /// Off by default so result files are byte-for-byte reproducible;
    /// when off the column holds 0.
    pub record_wall_time: bool,
}

/// Trained networks keyed by task count.
pub type ModelSet = BTreeMap<usize, TrainedModel>;

pub fn model_file_name(tasks: usize) -> String {
    format!("dqn_n{tasks}.json")
}

/// Runs one scheduler on one workload.
pub fn schedule(
    algorithm: Algorithm,
    workload: &Workload,
    cluster: &ClusterSpec,
    config: &ExperimentConfig,
    model: Option<&TrainedModel>,
    random_seed: u64,
) -> Result<(Assignment, Metrics)> {
    let assignment = match algorithm {
        Algorithm::Baseline(SchedulerKind::Priority) => schedule_priority(workload, cluster),
        Algorithm::Baseline(SchedulerKind::LoadBalance) => schedule_load_balance(workload, cluster),
        Algorithm::Baseline(SchedulerKind::Random) => schedule_random(workload, cluster, random_seed),
        Algorithm::Baseline(SchedulerKind::Greedy) => {
            schedule_greedy(workload, cluster, &config.migration, &config.weights)
        }
        Algorithm::Baseline(SchedulerKind::Oracle) => {
            return brute_force_optimal(workload, cluster, &config.migration)
        }
        Algorithm::Dqn => {
            let model = model.ok_or_else(|| {
                Error::config(format!("no DQN model for {} tasks", workload.len()))
            })?;
            return greedy_rollout(
                &model.network,
                workload,
                cluster,
                config.weights,
                config.migration,
            );
        }
    };
    let metrics = evaluate_assignment(workload, cluster, &assignment, &config.migration)?;
    Ok((assignment, metrics))
}

/// Every (scale, algorithm, replicate seed) cell, in that nesting order.
///
/// Preconditions are checked up front: a missing DQN model or an oracle
/// request beyond the enumeration budget fails before any cell runs.
pub fn run_comparison(
    config: &ExperimentConfig,
    algorithms: &[Algorithm],
    models: &ModelSet,
    options: RunOptions,
) -> Result<Vec<ResultRow>> {
    config.validate()?;
    let cluster = config.cluster.generate()?;
    for scale in &config.task_scales {
        if algorithms.contains(&Algorithm::Dqn) && !models.contains_key(&scale.tasks) {
            return Err(Error::config(format!(
                "dqn requested but no model for {} tasks",
                scale.tasks
            )));
        }
        if algorithms.contains(&Algorithm::Baseline(SchedulerKind::Oracle)) {
            check_budget(scale.tasks, cluster.len(), DEFAULT_BUDGET)?;
        }
    }

    let mut rows = Vec::new();
    for scale in &config.task_scales {
        let workloads = config
            .replicate_seeds
            .iter()
            .map(|&s| {
                let seed = workload_seed(s, scale.tasks);
                scale.generate(cluster.edge_count(), seed).map(|w| (s, seed, w))
            })
            .collect::<Result<Vec<_>>>()?;
        for &algorithm in algorithms {
            for (replicate, wseed, workload) in &workloads {
                let started = Instant::now();
                let (_, m) = schedule(
                    algorithm,
                    workload,
                    &cluster,
                    config,
                    models.get(&scale.tasks),
                    random_scheduler_seed(*wseed),
                )?;
                let wall_time_ms = if options.record_wall_time {
                    started.elapsed().as_secs_f64() * 1e3
                } else {
                    0.0
                };
                rows.push(ResultRow {
                    n_tasks: scale.tasks,
                    algorithm: algorithm.name().to_string(),
                    seed: *replicate,
                    t_total: m.t_total,
                    d_total: m.d_total,
                    objective: m.objective,
                    utilization: m.utilization,
                    migration_count: m.migration_count,
                    makespan: m.makespan,
                    wall_time_ms,
                });
            }
        }
    }
    Ok(rows)
}

/// Trains the DQN model used for one task scale.
pub fn train_for_scale(
    config: &ExperimentConfig,
    scale: &WorkloadSettings,
) -> Result<(TrainedModel, TrainingLog)> {
    config.validate()?;
    let cluster = config.cluster.generate()?;
    train(scale, &cluster, config.weights, config.migration, &config.dqn)
}

pub fn write_results<W: Write>(rows: &[ResultRow], out: W) -> csv::Result<()> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(out);
    w.write_record(RESULT_COLUMNS)?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

/// Parses a results CSV, requiring the exact column layout.
pub fn read_results<R: Read>(input: R) -> Result<Vec<ResultRow>> {
    let mut reader = csv::Reader::from_reader(input);
    let headers = reader
        .headers()
        .map_err(|e| Error::structure(format!("results header: {e}")))?
        .clone();
    if headers.iter().ne(RESULT_COLUMNS) {
        return Err(Error::structure(format!(
            "results header {:?} does not match {:?}",
            headers.iter().collect::<Vec<_>>(),
            RESULT_COLUMNS
        )));
    }
    reader
        .deserialize()
        .map(|r| r.map_err(|e| Error::structure(format!("results row: {e}"))))
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub n_tasks: usize,
    pub algorithm: String,
    pub runs: usize,
    pub t_total_mean: f64,
    pub t_total_std: f64,
    pub d_total_mean: f64,
    pub d_total_std: f64,
    pub objective_mean: f64,
    pub objective_std: f64,
    pub utilization_mean: f64,
    pub utilization_std: f64,
    pub migration_count_mean: f64,
    pub migration_count_std: f64,
    pub makespan_mean: f64,
    pub makespan_std: f64,
}

/// Mean and sample standard deviation (0 for a single value).
pub fn mean_std(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

/// Aggregates rows per (scale, algorithm), keeping first-appearance order.
pub fn summarize(rows: &[ResultRow]) -> Vec<SummaryRow> {
    let mut keys: Vec<(usize, &str)> = Vec::new();
    for r in rows {
        let key = (r.n_tasks, r.algorithm.as_str());
        if !keys.contains(&key) {
            keys.push(key);
        }
    }
    keys.into_iter()
        .map(|(n, alg)| {
            let cell: Vec<&ResultRow> = rows
                .iter()
                .filter(|r| r.n_tasks == n && r.algorithm == alg)
                .collect();
            let stat = |f: fn(&ResultRow) -> f64| {
                mean_std(&cell.iter().map(|r| f(r)).collect::<Vec<_>>())
            };
            let (t_total_mean, t_total_std) = stat(|r| r.t_total);
            let (d_total_mean, d_total_std) = stat(|r| r.d_total);
            let (objective_mean, objective_std) = stat(|r| r.objective);
            let (utilization_mean, utilization_std) = stat(|r| r.utilization);
            let (migration_count_mean, migration_count_std) = stat(|r| r.migration_count as f64);
            let (makespan_mean, makespan_std) = stat(|r| r.makespan);
            SummaryRow {
                n_tasks: n,
                algorithm: alg.to_string(),
                runs: cell.len(),
                t_total_mean,
                t_total_std,
                d_total_mean,
                d_total_std,
                objective_mean,
                objective_std,
                utilization_mean,
                utilization_std,
                migration_count_mean,
                migration_count_std,
                makespan_mean,
                makespan_std,
            }
        })
        .collect()
}

pub fn write_summary<W: Write>(rows: &[SummaryRow], out: W) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

/// `results.csv` -> `results_summary.csv`.
pub fn summary_path(results: &Path) -> PathBuf {
    let stem = results
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "results".into());
    results.with_file_name(format!("{stem}_summary.csv"))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct OracleCheckReport {
    pub instances: usize,
    pub passed: usize,
    pub failed: usize,
    /// Instances where the greedy scheduler reached the optimum.
    pub greedy_optimal: usize,
    pub failures: Vec<String>,
}

impl OracleCheckReport {
    pub fn all_passed(&self) -> bool {
        self.failed == 0
    }
}

impl fmt::Display for OracleCheckReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for line in &self.failures {
            writeln!(f, "FAIL {line}")?;
        }
        write!(
            f,
            "oracle-check: {} instances, {} passed, {} failed, greedy optimal on {}",
            self.instances, self.passed, self.failed, self.greedy_optimal
        )
    }
}

/// Settings for [`oracle_check`].
#[derive(Clone, Debug, PartialEq)]
pub struct OracleCheckSettings {
    pub max_tasks: usize,
    pub instances: usize,
    pub seed: u64,
    pub edge_nodes: usize,
    pub cloud_nodes: usize,
    pub demand: (f64, f64),
    pub cluster: ClusterSettings,
    pub migration: MigrationCostModel,
    pub weights: RewardWeights,
}

impl Default for OracleCheckSettings {
    fn default() -> Self {
        OracleCheckSettings {
            max_tasks: 6,
            instances: 100,
            seed: 0,
            edge_nodes: 2,
            cloud_nodes: 1,
            demand: (50.0, 150.0),
            cluster: ClusterSettings::default(),
            migration: MigrationCostModel::default(),
            weights: RewardWeights::default(),
        }
    }
}

/// Random tiny instances on which the exhaustive optimum must be no worse
/// than every heuristic, and [`evaluate_assignment`] must agree bit for bit
/// with the oracle's own scoring.
pub fn oracle_check(settings: &OracleCheckSettings) -> Result<OracleCheckReport> {
    if settings.max_tasks == 0 {
        return Err(Error::config("max_tasks must be at least 1"));
    }
    check_budget(
        settings.max_tasks,
        settings.edge_nodes + settings.cloud_nodes,
        DEFAULT_BUDGET,
    )?;
    let mut rng = rng::seeded(settings.seed);
    let mut report = OracleCheckReport {
        instances: settings.instances,
        passed: 0,
        failed: 0,
        greedy_optimal: 0,
        failures: Vec::new(),
    };
    let model = &settings.migration;

    for instance in 0..settings.instances {
        let tasks = rng.gen_range(1..=settings.max_tasks);
        let cluster = generate_cluster(
            settings.edge_nodes,
            settings.cloud_nodes,
            settings.cluster.edge_capacity,
            settings.cluster.cloud_capacity,
            rng.gen(),
        )?;
        let workload = generate_workload(
            tasks,
            settings.demand.0,
            settings.demand.1,
            settings.edge_nodes,
            rng.gen(),
        )?;
        let (best, best_metrics) = brute_force_optimal(&workload, &cluster, model)?;
        let candidates = [
            ("oracle", best),
            ("ps", schedule_priority(&workload, &cluster)),
            ("lbs", schedule_load_balance(&workload, &cluster)),
            ("random", schedule_random(&workload, &cluster, rng.gen())),
            ("greedy", schedule_greedy(&workload, &cluster, model, &settings.weights)),
        ];

        let mut problems = Vec::new();
        for (name, assignment) in &candidates {
            let metrics = evaluate_assignment(&workload, &cluster, assignment, model)?;
            let independent = independent_objective(&workload, &cluster, assignment, model)?;
            if metrics.objective.to_bits() != independent.to_bits() {
                problems.push(format!(
                    "{name}: evaluate_assignment {} != independent {}",
                    metrics.objective, independent
                ));
            }
            if best_metrics.objective > metrics.objective {
                problems.push(format!(
                    "{name}: objective {} beats oracle {}",
                    metrics.objective, best_metrics.objective
                ));
            }
            if *name == "greedy" && metrics.objective == best_metrics.objective {
                report.greedy_optimal += 1;
            }
        }
        if problems.is_empty() {
            report.passed += 1;
        } else {
            report.failed += 1;
            report
                .failures
                .push(format!("instance {instance} (N={tasks}): {}", problems.join("; ")));
        }
    }
    Ok(report)
}

/// The network shape checked first by [`gradcheck_suite`].
pub fn default_gradcheck_spec() -> MlpSpec {
    MlpSpec::new(4, vec![8], 3, 0)
}

/// Gradient checks on the default spec plus `random_specs` random shapes
/// with up to two hidden layers of at most 64 units.
pub fn gradcheck_suite(seed: u64, tolerance: f64, random_specs: usize) -> Result<Vec<GradCheckReport>> {
    let mut rng = rng::seeded(seed);
    let mut specs = vec![default_gradcheck_spec()];
    for _ in 0..random_specs {
        let layers = rng.gen_range(1..=2);
        let hidden = (0..layers).map(|_| rng.gen_range(1..=64)).collect();
        specs.push(MlpSpec::new(
            rng.gen_range(1..=12),
            hidden,
            rng.gen_range(1..=8),
            rng.gen(),
        ));
    }
    specs
        .iter()
        .enumerate()
        .map(|(i, spec)| gradient_check(spec, seed.wrapping_add(i as u64), tolerance))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn standard_scales_cover_table() {
        let s = standard_scales();
        assert_eq!(s.len(), 8);
        assert_eq!(
            s[0],
            WorkloadSettings {
                tasks: 100,
                demand_lo: 50.0,
                demand_hi: 150.0
            }
        );
        assert_eq!(
            s[7],
            WorkloadSettings {
                tasks: 800,
                demand_lo: 400.0,
                demand_hi: 1200.0
            }
        );
    }

    #[test]
    fn config_validation() {
        assert!(ExperimentConfig::default().validate().is_ok());
        let dup = ExperimentConfig {
            replicate_seeds: vec![1, 1],
            ..ExperimentConfig::default()
        };
        assert!(dup.validate().is_err());
        let empty = ExperimentConfig {
            task_scales: vec![],
            ..ExperimentConfig::default()
        };
        assert!(empty.validate().is_err());
    }

    #[test]
    fn algorithm_names() {
        let list = Algorithm::parse_list("ps, lbs,dqn").unwrap();
        assert_eq!(
            list,
            vec![
                Algorithm::Baseline(SchedulerKind::Priority),
                Algorithm::Baseline(SchedulerKind::LoadBalance),
                Algorithm::Dqn
            ]
        );
        assert!(Algorithm::parse_list("ps,xyz").is_err());
        assert!(Algorithm::parse_list("").is_err());
    }

    #[test]
    fn mean_and_sample_std() {
        let (m, s) = mean_std(&[1.0, 2.0, 3.0, 4.0]);
        assert_eq!(m, 2.5);
        assert!((s - (5.0f64 / 3.0).sqrt()).abs() < 1e-15);
        assert_eq!(mean_std(&[7.0]), (7.0, 0.0));
    }

    #[test]
    fn comparison_rows_and_summary() {
        let config = ExperimentConfig {
            task_scales: standard_scales()[..2].to_vec(),
            replicate_seeds: vec![3, 4],
            ..ExperimentConfig::default()
        };
        let algs = Algorithm::parse_list("ps,lbs,random").unwrap();
        let rows = run_comparison(&config, &algs, &ModelSet::new(), RunOptions::default()).unwrap();
        assert_eq!(rows.len(), 2 * 3 * 2);
        assert_eq!(rows[0].n_tasks, 100);
        assert_eq!(rows[0].algorithm, "ps");
        assert_eq!(rows[1].seed, 4);
        assert!(rows.iter().all(|r| r.wall_time_ms == 0.0));

        let summary = summarize(&rows);
        assert_eq!(summary.len(), 6);
        assert_eq!(summary[1].algorithm, "lbs");
        assert_eq!(summary[1].runs, 2);

        let mut buf = Vec::new();
        write_results(&rows, &mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("n_tasks,algorithm,seed,t_total,d_total,objective,utilization,migration_count,makespan,wall_time_ms\n"));
        assert_eq!(read_results(buf.as_slice()).unwrap(), rows);
    }

    #[test]
    fn comparison_preconditions() {
        let config = ExperimentConfig {
            task_scales: standard_scales()[..1].to_vec(),
            ..ExperimentConfig::default()
        };
        let err = run_comparison(&config, &[Algorithm::Dqn], &ModelSet::new(), RunOptions::default())
            .unwrap_err();
        assert!(matches!(err, Error::Config(_)));
        let err = run_comparison(
            &config,
            &[Algorithm::Baseline(SchedulerKind::Oracle)],
            &ModelSet::new(),
            RunOptions::default(),
        )
        .unwrap_err();
        assert!(matches!(err, Error::BudgetExceeded { .. }));
        assert_eq!(err.exit_code(), 2);
    }

    #[test]
    fn results_header_is_checked() {
        let bad = "n_tasks,algo\n1,ps\n";
        assert!(matches!(read_results(bad.as_bytes()), Err(Error::Structure(_))));
        let empty = RESULT_COLUMNS.join(",") + "\n";
        assert!(read_results(empty.as_bytes()).unwrap().is_empty());
    }

    #[test]
    fn summary_file_name() {
        assert_eq!(
            summary_path(Path::new("out/results.csv")),
            PathBuf::from("out/results_summary.csv")
        );
    }

    #[test]
    fn oracle_check_small_run() {
        let report = oracle_check(&OracleCheckSettings {
            instances: 20,
            ..OracleCheckSettings::default()
        })
        .unwrap();
        assert!(report.all_passed(), "{report}");
        let err = oracle_check(&OracleCheckSettings {
            max_tasks: 30,
            ..OracleCheckSettings::default()
        })
        .unwrap_err();
        assert!(matches!(err, Error::BudgetExceeded { .. }));
    }

    #[test]
    fn gradcheck_suite_passes() {
        let reports = gradcheck_suite(0, 1e-4, 5).unwrap();
        assert_eq!(reports.len(), 6);
        assert_eq!(reports[0].spec.input_dim, 4);
        for r in &reports {
            assert!(r.pass, "{r}");
        }
    }
}
