// Step through one episode by hand and check the return against the
// closed-form episode value.

use edgesched::env::{episode_return, run_episode, Action, RewardWeights};
use edgesched::model::{evaluate_assignment, generate_cluster, generate_workload, MigrationCostModel};

pub fn run_example() -> edgesched::Result<f64> {
    let cluster = generate_cluster(3, 1, (80.0, 120.0), (300.0, 500.0), 2)?;
    let workload = generate_workload(8, 50.0, 150.0, 3, 2)?;
    let weights = RewardWeights::default();
    let model = MigrationCostModel::default();

    // send even tasks home and odd ones to the cloud
    let (transitions, assignment) = run_episode(&workload, &cluster, weights, model, |ep, _| {
        let task = ep.current_task().expect("episode not finished");
        Action(if task.id % 2 == 0 { task.origin } else { 3 })
    })?;
    for t in &transitions {
        println!("action {} reward {:>8.4} done {}", t.action.0, t.reward, t.done);
    }
    let total = episode_return(&transitions)?;
    let metrics = evaluate_assignment(&workload, &cluster, &assignment, &model)?;
    println!("return {total:.6}, closed form {:.6}", weights.episode_value(&metrics));
    Ok(total)
}

fn main() -> edgesched::Result<()> {
    run_example().map(|_| ())
}
