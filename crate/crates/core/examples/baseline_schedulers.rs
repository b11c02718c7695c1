// Score every heuristic baseline on the same workload.

use edgesched::env::RewardWeights;
use edgesched::model::{evaluate_assignment, generate_workload, ClusterSettings, Metrics, MigrationCostModel};
use edgesched::schedulers::{schedule_greedy, schedule_load_balance, schedule_priority, schedule_random};

pub fn run_example() -> edgesched::Result<Vec<(&'static str, Metrics)>> {
    let cluster = ClusterSettings::default().generate()?;
    let workload = generate_workload(500, 250.0, 750.0, cluster.edge_count(), 1)?;
    let model = MigrationCostModel::default();

    let runs = [
        ("ps", schedule_priority(&workload, &cluster)),
        ("lbs", schedule_load_balance(&workload, &cluster)),
        ("random", schedule_random(&workload, &cluster, 1)),
        ("greedy", schedule_greedy(&workload, &cluster, &model, &RewardWeights::default())),
    ];
    let mut out = Vec::new();
    for (name, assignment) in runs {
        let m = evaluate_assignment(&workload, &cluster, &assignment, &model)?;
        println!("{name:<7} {m}");
        out.push((name, m));
    }
    Ok(out)
}

fn main() -> edgesched::Result<()> {
    run_example().map(|_| ())
}
