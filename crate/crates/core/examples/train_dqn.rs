// Train a small DQN scheduler and compare its greedy rollout with the
// random baseline.

use edgesched::dqn::{greedy_rollout, train, DqnConfig, TrainingLog, WorkloadSettings};
use edgesched::env::RewardWeights;
use edgesched::model::{evaluate_assignment, generate_cluster, MigrationCostModel};
use edgesched::schedulers::schedule_random;

pub fn run_example() -> edgesched::Result<TrainingLog> {
    let cluster = generate_cluster(4, 2, (80.0, 120.0), (300.0, 500.0), 5)?;
    let settings = WorkloadSettings {
        tasks: 20,
        demand_lo: 50.0,
        demand_hi: 150.0,
    };
    let weights = RewardWeights::default();
    let model = MigrationCostModel::default();
    let config = DqnConfig {
        episodes: 100,
        epsilon_decay_steps: 1000,
        learn_start: 200,
        hidden: vec![32, 32],
        seed: 3,
        ..DqnConfig::default()
    };
    let (trained, log) = train(&settings, &cluster, weights, model, &config)?;
    for e in log.episodes.iter().step_by(20) {
        println!("episode {:>3} return {:>9.3} epsilon {:.3}", e.episode, e.episode_return, e.epsilon);
    }

    let held_out = settings.generate(cluster.edge_count(), 12345)?;
    let (_, dqn) = greedy_rollout(&trained.network, &held_out, &cluster, weights, model)?;
    let random = evaluate_assignment(&held_out, &cluster, &schedule_random(&held_out, &cluster, 0), &model)?;
    println!("dqn    {dqn}");
    println!("random {random}");
    Ok(log)
}

fn main() -> edgesched::Result<()> {
    run_example().map(|_| ())
}
