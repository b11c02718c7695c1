use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use edgesched::harness::{
    self, model_file_name, summary_path, Algorithm, ExperimentConfig, ModelSet, OracleCheckSettings,
    RunOptions,
};
use edgesched::model::{ClusterSettings, Workload};
use edgesched::dqn::{TrainedModel, WorkloadSettings};
use edgesched::plot::{plot_file, PlotKind};
use edgesched::{Error, Result};

#[derive(Parser)]
#[command(name = "edgesched", version, about = "Edge-cloud task scheduling experiments")]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Global {
    /// Experiment configuration (JSON, ExperimentConfig fields).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Seed override; see each command for what it seeds.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output file or directory, depending on the command.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Write workload.json and cluster.json into --out (a directory).
    /// --seed seeds the workload; the cluster comes from the config.
    Gen {
        #[arg(long, default_value_t = 100)]
        tasks: usize,
        #[arg(long, default_value_t = 50.0)]
        demand_lo: f64,
        #[arg(long, default_value_t = 150.0)]
        demand_hi: f64,
    },
    /// Train one model per task scale into --out (a directory), writing
    /// dqn_n{N}.json and train_n{N}.csv. --seed overrides the DQN seed.
    Train {
        /// Only train the scale with this many tasks.
        #[arg(long)]
        tasks: Option<usize>,
    },
    /// Run every (scale, algorithm, replicate) cell and write the results
    /// CSV to --out plus a *_summary.csv next to it. --seed replaces the
    /// replicate seeds with that single seed.
    Compare {
        #[arg(long, default_value = "ps,lbs,dqn")]
        algorithms: String,
        /// Directory holding dqn_n{N}.json files.
        #[arg(long)]
        models: Option<PathBuf>,
        /// Fill wall_time_ms (makes output non-reproducible).
        #[arg(long)]
        record_wall_time: bool,
    },
    /// Check the exhaustive oracle against every heuristic on random tiny
    /// instances.
    OracleCheck {
        #[arg(long, default_value_t = 6)]
        max_n: usize,
        #[arg(long, default_value_t = 100)]
        instances: usize,
        #[arg(long, default_value_t = 2)]
        edge_nodes: usize,
        #[arg(long, default_value_t = 1)]
        cloud_nodes: usize,
    },
    /// Compare backprop with central differences on several network shapes.
    Gradcheck {
        #[arg(long, default_value_t = 1e-4)]
        tolerance: f64,
        #[arg(long, default_value_t = 5)]
        random_specs: usize,
    },
    /// Render a results CSV as an SVG chart at --out.
    Plot {
        #[arg(long)]
        input: PathBuf,
        #[arg(long, default_value = "time_vs_tasks")]
        kind: String,
    },
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

fn load_config(path: Option<&Path>) -> Result<ExperimentConfig> {
    match path {
        Some(p) => ExperimentConfig::load(p),
        None => Ok(ExperimentConfig::default()),
    }
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value).map_err(|source| Error::Json {
        path: path.into(),
        source,
    })?;
    std::fs::write(path, text + "\n").map_err(|source| Error::Io {
        path: path.into(),
        source,
    })
}

fn create_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|source| Error::Io {
        path: dir.into(),
        source,
    })
}

fn run(cli: Cli) -> Result<()> {
    let Global { config, seed, out } = cli.global;
    let config_path = config.as_deref();
    match cli.command {
        Command::Gen {
            tasks,
            demand_lo,
            demand_hi,
        } => {
            let cluster_settings: ClusterSettings = match config_path {
                Some(p) => ExperimentConfig::load(p)?.cluster,
                None => ClusterSettings::default(),
            };
            let cluster = cluster_settings.generate()?;
            let settings = WorkloadSettings {
                tasks,
                demand_lo,
                demand_hi,
            };
            let workload: Workload = settings.generate(cluster.edge_count(), seed.unwrap_or(0))?;
            let dir = out.unwrap_or_else(|| PathBuf::from("."));
            create_dir(&dir)?;
            write_json(&dir.join("workload.json"), &workload)?;
            write_json(&dir.join("cluster.json"), &cluster)?;
            println!(
                "wrote {} tasks and {} nodes to {}",
                workload.len(),
                cluster.len(),
                dir.display()
            );
            Ok(())
        }
        Command::Train { tasks } => {
            let mut config = load_config(config_path)?;
            if let Some(s) = seed {
                config.dqn.seed = s;
            }
            config.validate()?;
            let scales: Vec<WorkloadSettings> = match tasks {
                Some(n) => vec![*config.scale(n)?],
                None => config.task_scales.clone(),
            };
            let dir = out.unwrap_or_else(|| config.output_dir.clone());
            create_dir(&dir)?;
            for scale in &scales {
                let (model, log) = harness::train_for_scale(&config, scale)?;
                let model_path = dir.join(model_file_name(scale.tasks));
                model.save(&model_path)?;
                log.save_csv(&dir.join(format!("train_n{}.csv", scale.tasks)))?;
                match log.episodes.last() {
                    Some(e) => println!(
                        "n={} episode {} return {:.4} epsilon {:.3} t_total {:.4} utilization {:.4} migrations {} -> {}",
                        scale.tasks,
                        e.episode,
                        e.episode_return,
                        e.epsilon,
                        e.t_total,
                        e.utilization,
                        e.migrations,
                        model_path.display()
                    ),
                    None => println!("n={} no episodes -> {}", scale.tasks, model_path.display()),
                }
            }
            Ok(())
        }
        Command::Compare {
            algorithms,
            models,
            record_wall_time,
        } => {
            let mut config = load_config(config_path)?;
            if let Some(s) = seed {
                config.replicate_seeds = vec![s];
            }
            let algorithms = Algorithm::parse_list(&algorithms)?;
            let mut set = ModelSet::new();
            if algorithms.contains(&Algorithm::Dqn) {
                let dir = models.unwrap_or_else(|| config.output_dir.clone());
                for scale in &config.task_scales {
                    let path = dir.join(model_file_name(scale.tasks));
                    if !path.exists() {
                        return Err(Error::Config(format!(
                            "dqn requested but {} is missing (run train first)",
                            path.display()
                        )));
                    }
                    set.insert(scale.tasks, TrainedModel::load(&path)?);
                }
            }
            let rows = harness::run_comparison(&config, &algorithms, &set, RunOptions { record_wall_time })?;
            let out = out.unwrap_or_else(|| config.output_dir.join("results.csv"));
            if let Some(parent) = out.parent().filter(|p| !p.as_os_str().is_empty()) {
                create_dir(parent)?;
            }
            let csv_err = |path: &Path| {
                let path = path.to_path_buf();
                move |source| Error::Csv { path, source }
            };
            let file = std::fs::File::create(&out).map_err(|source| Error::Io {
                path: out.clone(),
                source,
            })?;
            harness::write_results(&rows, file).map_err(csv_err(&out))?;
            let summary = harness::summarize(&rows);
            let spath = summary_path(&out);
            let file = std::fs::File::create(&spath).map_err(|source| Error::Io {
                path: spath.clone(),
                source,
            })?;
            harness::write_summary(&summary, file).map_err(csv_err(&spath))?;
            for s in &summary {
                println!(
                    "n={:<4} {:<7} t_total {:>12.4} ± {:<10.4} utilization {:.4} migrations {:.1}",
                    s.n_tasks,
                    s.algorithm,
                    s.t_total_mean,
                    s.t_total_std,
                    s.utilization_mean,
                    s.migration_count_mean
                );
            }
            Ok(())
        }
        Command::OracleCheck {
            max_n,
            instances,
            edge_nodes,
            cloud_nodes,
        } => {
            let config = load_config(config_path)?;
            let settings = OracleCheckSettings {
                max_tasks: max_n,
                instances,
                seed: seed.unwrap_or(0),
                edge_nodes,
                cloud_nodes,
                cluster: config.cluster,
                migration: config.migration,
                weights: config.weights,
                ..OracleCheckSettings::default()
            };
            let report = harness::oracle_check(&settings)?;
            println!("{report}");
            if report.all_passed() {
                Ok(())
            } else {
                Err(Error::Verification(format!(
                    "{} of {} instances failed",
                    report.failed, report.instances
                )))
            }
        }
        Command::Gradcheck {
            tolerance,
            random_specs,
        } => {
            if !(tolerance > 0.0) {
                return Err(Error::Config("tolerance must be positive".into()));
            }
            let reports = harness::gradcheck_suite(seed.unwrap_or(0), tolerance, random_specs)?;
            for r in &reports {
                println!("{r}");
            }
            match reports.iter().filter(|r| !r.pass).max_by(|a, b| a.max_rel_error.total_cmp(&b.max_rel_error)) {
                None => Ok(()),
                Some(worst) => Err(Error::Verification(format!(
                    "gradient check failed; worst {:?} relative error {:e}",
                    worst.worst, worst.max_rel_error
                ))),
            }
        }
        Command::Plot { input, kind } => {
            let kind: PlotKind = kind.parse()?;
            let out = out.unwrap_or_else(|| PathBuf::from(format!("{}.svg", kind.name())));
            plot_file(&input, &out, kind)?;
            println!("wrote {}", out.display());
            Ok(())
        }
    }
}
