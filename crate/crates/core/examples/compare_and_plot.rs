// Run a reduced comparison sweep and render all three charts.

use std::path::PathBuf;

use edgesched::dqn::WorkloadSettings;
use edgesched::harness::{
    run_comparison, standard_scales, summarize, train_for_scale, write_results, Algorithm,
    ExperimentConfig, ModelSet, RunOptions,
};
use edgesched::plot::{render_svg, PlotKind};

pub fn run_example() -> edgesched::Result<PathBuf> {
    let mut config = ExperimentConfig {
        task_scales: standard_scales()[..3].to_vec(),
        replicate_seeds: vec![1, 2],
        ..ExperimentConfig::default()
    };
    config.dqn.episodes = 3;
    config.dqn.learn_start = 100;

    let mut models = ModelSet::new();
    for scale in config.task_scales.clone() {
        let WorkloadSettings { tasks, .. } = scale;
        models.insert(tasks, train_for_scale(&config, &scale)?.0);
    }
    let algorithms = Algorithm::parse_list("ps,lbs,greedy,dqn")?;
    let rows = run_comparison(&config, &algorithms, &models, RunOptions::default())?;
    for s in summarize(&rows) {
        println!(
            "n={:<4} {:<7} t_total {:>9.2} ± {:.2}",
            s.n_tasks, s.algorithm, s.t_total_mean, s.t_total_std
        );
    }

    let dir = std::env::temp_dir().join("edgesched_compare_and_plot");
    std::fs::create_dir_all(&dir).map_err(|e| edgesched::Error::Io { path: dir.clone(), source: e })?;
    let mut csv = Vec::new();
    write_results(&rows, &mut csv).expect("in-memory write");
    let write = |name: &str, bytes: &[u8]| {
        let path = dir.join(name);
        std::fs::write(&path, bytes).map_err(|source| edgesched::Error::Io { path, source })
    };
    write("results.csv", &csv)?;
    for kind in PlotKind::ALL {
        write(&format!("{}.svg", kind.name()), render_svg(&rows, kind).as_bytes())?;
    }
    println!("wrote results and charts to {}", dir.display());
    Ok(dir)
}

fn main() -> edgesched::Result<()> {
    run_example().map(|_| ())
}
