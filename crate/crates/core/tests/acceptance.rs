//! Acceptance criteria, one test per criterion. Each prints a single
//! `criterion N: PASS|FAIL ...` line; run with `--nocapture` to see them all.

use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use edgesched::dqn::{
    epsilon_at, greedy_rollout, train, Agent, DqnConfig, ReplayBuffer, WorkloadSettings,
};
use edgesched::env::{episode_return, run_episode, state_dim, Action, RewardWeights, StateVector, Transition};
use edgesched::harness::{
    gradcheck_suite, oracle_check, workload_seed, ExperimentConfig, OracleCheckSettings,
};
use edgesched::model::{
    evaluate_assignment, generate_cluster, ClusterSettings, ClusterSpec, MigrationCostModel,
};
use edgesched::nn::{Mlp, MlpSpec, OptimState};
use edgesched::oracle::brute_force_optimal;
use edgesched::schedulers::{schedule_load_balance, schedule_priority, schedule_random};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn report(n: u32, pass: bool, detail: impl AsRef<str>) -> bool {
    println!(
        "criterion {n}: {} {}",
        if pass { "PASS" } else { "FAIL" },
        detail.as_ref()
    );
    pass
}

#[test]
fn criterion_1_objective_correctness() {
    let started = Instant::now();
    let r = oracle_check(&OracleCheckSettings {
        max_tasks: 6,
        instances: 100,
        seed: 2024,
        edge_nodes: 2,
        cloud_nodes: 1,
        ..OracleCheckSettings::default()
    })
    .unwrap();
    let elapsed = started.elapsed();
    let pass = r.all_passed() && r.instances == 100 && elapsed < Duration::from_secs(30);
    assert!(
        report(1, pass, format!("{r} in {:.2?}", elapsed)),
        "{r}"
    );
}

#[test]
fn criterion_2_q_update_arithmetic() {
    let net = |b: f64, w: f64| {
        let mut m = Mlp::zeros(MlpSpec::new(1, vec![], 1, 0)).unwrap();
        m.layers_mut()[0].bias_mut()[0] = b;
        m.layers_mut()[0].weights_mut()[0] = w;
        m
    };
    let config = DqnConfig {
        discount: 0.9,
        batch_size: 1,
        buffer_capacity: 1,
        td_clip: None,
        ..DqnConfig::default()
    };
    // online Q(s0, a) = 0; target max Q(s1, .) = 0.5
    let mut agent =
        Agent::from_parts(config, net(0.0, 0.0), net(0.0, 0.5), OptimState::sgd(0.1).unwrap()).unwrap();
    let t = Transition {
        state: StateVector(vec![0.0]),
        action: Action(0),
        reward: 1.0,
        next_state: StateVector(vec![1.0]),
        done: false,
    };
    agent.learn_step(&[&t]).unwrap();
    let q = agent.q_values(&t.state).unwrap()[0];
    let err = (q - 0.145).abs();
    assert!(report(2, err <= 1e-12, format!("Q = {q:.15} (|error| {err:.1e})")));
}

#[test]
fn criterion_3_reward_decomposition() {
    let mut rng = ChaCha8Rng::seed_from_u64(33);
    let model = MigrationCostModel::default();
    let mut worst = 0.0f64;
    for i in 0..50 {
        let m = rng.gen_range(1..=5);
        let k = rng.gen_range(1..=3);
        let cluster = generate_cluster(m, k, (80.0, 120.0), (300.0, 500.0), rng.gen()).unwrap();
        let settings = WorkloadSettings {
            tasks: rng.gen_range(1..=40),
            demand_lo: 50.0,
            demand_hi: 150.0,
        };
        let workload = settings.generate(m, i).unwrap();
        let weights = RewardWeights::new(rng.gen_range(0.1..2.0), rng.gen_range(0.0..20.0), rng.gen_range(0.0..2.0))
            .unwrap();
        let mut policy_rng = ChaCha8Rng::seed_from_u64(i);
        let (transitions, assignment) = run_episode(&workload, &cluster, weights, model, |_, _| {
            Action(policy_rng.gen_range(0..m + k))
        })
        .unwrap();
        let total = episode_return(&transitions).unwrap();
        let metrics = evaluate_assignment(&workload, &cluster, &assignment, &model).unwrap();
        worst = worst.max((total - weights.episode_value(&metrics)).abs());
    }
    assert!(report(3, worst <= 1e-9, format!("max |return - closed form| over 50 episodes = {worst:.2e}")));
}

#[test]
fn criterion_4_gradient_fidelity() {
    let reports = gradcheck_suite(7, 1e-4, 5).unwrap();
    let worst = reports
        .iter()
        .map(|r| r.max_rel_error)
        .fold(0.0f64, f64::max);
    let pass = reports.len() == 6 && reports.iter().all(|r| r.pass);
    assert!(report(4, pass, format!("{} specs, max relative error {worst:.2e}", reports.len())));
}

#[test]
fn criterion_5_learning_progress() {
    let settings = WorkloadSettings {
        tasks: 20,
        demand_lo: 50.0,
        demand_hi: 150.0,
    };
    let cluster = generate_cluster(4, 2, (80.0, 120.0), (300.0, 500.0), 5).unwrap();
    let weights = RewardWeights::default();
    let model = MigrationCostModel::default();
    let mut lines = Vec::new();
    let mut pass = true;
    for seed in [1u64, 2, 3] {
        let started = Instant::now();
        let config = DqnConfig {
            episodes: 300,
            seed,
            ..DqnConfig::default()
        };
        let (trained, log) = train(&settings, &cluster, weights, model, &config).unwrap();
        let returns = log.returns();
        let first = returns[..50].iter().sum::<f64>() / 50.0;
        let last = returns[returns.len() - 50..].iter().sum::<f64>() / 50.0;
        let mut wins = 0;
        for h in 0..20u64 {
            let w = settings.generate(4, 1_000_000 + 100 * seed + h).unwrap();
            let (_, dqn) = greedy_rollout(&trained.network, &w, &cluster, weights, model).unwrap();
            let random = evaluate_assignment(&w, &cluster, &schedule_random(&w, &cluster, h), &model).unwrap();
            if dqn.objective <= random.objective {
                wins += 1;
            }
        }
        let elapsed = started.elapsed();
        let ok = last > first && wins >= 18 && elapsed < Duration::from_secs(300);
        pass &= ok;
        lines.push(format!(
            "seed {seed}: first50 {first:.2} last50 {last:.2}, beats random {wins}/20, {elapsed:.1?}"
        ));
    }
    assert!(report(5, pass, lines.join("; ")));
}

#[test]
fn criterion_6_near_oracle_tiny() {
    let started = Instant::now();
    let settings = WorkloadSettings {
        tasks: 6,
        demand_lo: 50.0,
        demand_hi: 150.0,
    };
    let cluster = generate_cluster(2, 1, (80.0, 120.0), (300.0, 500.0), 6).unwrap();
    // without the utilization term the episode return is exactly -objective
    let weights = RewardWeights::new(1.0, 0.0, 1.0).unwrap();
    let model = MigrationCostModel::default();
    // exploration decays over the first half of the 6,000 training steps
    let config = DqnConfig {
        episodes: 1000,
        epsilon_decay_steps: 3000,
        seed: 6,
        ..DqnConfig::default()
    };
    let (trained, _) = train(&settings, &cluster, weights, model, &config).unwrap();
    let mut within = 0;
    let mut worst_ratio = 0.0f64;
    for h in 0..50u64 {
        let w = settings.generate(2, 9_000_000 + h).unwrap();
        let (_, dqn) = greedy_rollout(&trained.network, &w, &cluster, weights, model).unwrap();
        let (_, best) = brute_force_optimal(&w, &cluster, &model).unwrap();
        let ratio = dqn.objective / best.objective;
        worst_ratio = worst_ratio.max(ratio);
        if ratio <= 1.10 {
            within += 1;
        }
    }
    let elapsed = started.elapsed();
    let pass = within >= 40 && elapsed < Duration::from_secs(300);
    assert!(report(
        6,
        pass,
        format!("within 10% of optimum on {within}/50, worst ratio {worst_ratio:.3}, {elapsed:.1?}")
    ));
}

fn table2_cluster() -> ClusterSpec {
    ClusterSettings::default().generate().unwrap()
}

#[test]
fn criterion_7_table2_ordering() {
    let config = ExperimentConfig::default();
    let scale = *config.scale(500).unwrap();
    let cluster = table2_cluster();
    let mut dqn_lt_lbs = 0;
    let mut lbs_lt_ps = 0;
    let mut both = 0;
    let mut lines = Vec::new();
    for &rep in &config.replicate_seeds {
        let dqn_config = DqnConfig {
            seed: rep,
            ..config.dqn.clone()
        };
        let (trained, _) = train(&scale, &cluster, config.weights, config.migration, &dqn_config).unwrap();
        let w = scale.generate(cluster.edge_count(), workload_seed(rep, 500)).unwrap();
        let (_, dqn) = greedy_rollout(&trained.network, &w, &cluster, config.weights, config.migration).unwrap();
        let ps = evaluate_assignment(&w, &cluster, &schedule_priority(&w, &cluster), &config.migration).unwrap();
        let lbs =
            evaluate_assignment(&w, &cluster, &schedule_load_balance(&w, &cluster), &config.migration).unwrap();
        let a = dqn.t_total < lbs.t_total;
        let b = lbs.t_total < ps.t_total;
        dqn_lt_lbs += a as usize;
        lbs_lt_ps += b as usize;
        both += (a && b) as usize;
        lines.push(format!(
            "seed {rep}: dqn {:.1} lbs {:.1} ps {:.1}",
            dqn.t_total, lbs.t_total, ps.t_total
        ));
    }
    let pass = both >= 4;
    let detail = format!(
        "DQN<LBS on {dqn_lt_lbs}/5, LBS<PS on {lbs_lt_ps}/5, full ordering on {both}/5 ({})",
        lines.join("; ")
    );
    assert!(report(7, pass, detail));
}

fn run_cli(args: &[&str]) {
    let status = Command::new(env!("CARGO_BIN_EXE_edgesched"))
        .args(args)
        .output()
        .unwrap();
    assert!(status.status.success(), "{args:?}: {}", String::from_utf8_lossy(&status.stderr));
}

fn read(path: &Path) -> Vec<u8> {
    std::fs::read(path).unwrap_or_else(|e| panic!("{}: {e}", path.display()))
}

#[test]
fn criterion_8_determinism() {
    let dir = tempfile::tempdir().unwrap();
    let config = ExperimentConfig {
        task_scales: vec![WorkloadSettings {
            tasks: 30,
            demand_lo: 15.0,
            demand_hi: 45.0,
        }],
        replicate_seeds: vec![1, 2],
        dqn: DqnConfig {
            episodes: 8,
            learn_start: 64,
            batch_size: 16,
            hidden: vec![16],
            ..DqnConfig::default()
        },
        ..ExperimentConfig::default()
    };
    let cfg = dir.path().join("config.json");
    std::fs::write(&cfg, serde_json::to_string(&config).unwrap()).unwrap();
    let cfg = cfg.to_str().unwrap();

    let mut outputs = Vec::new();
    for run in ["a", "b"] {
        let out = dir.path().join(run);
        let out_s = out.to_str().unwrap();
        run_cli(&["train", "--config", cfg, "--seed", "4", "--out", out_s]);
        let results = out.join("results.csv");
        run_cli(&[
            "compare",
            "--config",
            cfg,
            "--algorithms",
            "ps,lbs,random,greedy,dqn",
            "--models",
            out_s,
            "--out",
            results.to_str().unwrap(),
        ]);
        outputs.push(
            ["dqn_n30.json", "train_n30.csv", "results.csv", "results_summary.csv"]
                .map(|f| read(&out.join(f))),
        );
    }
    let same = outputs[0] == outputs[1];
    assert!(report(8, same, "train and compare outputs byte-identical across reruns"));
}

#[test]
fn criterion_9_replay_and_schedule_invariants() {
    let mut checks = Vec::new();

    let mut buf = ReplayBuffer::new(3);
    (0..5).for_each(|i| buf.push(i));
    checks.push(("ring eviction", buf.iter().copied().collect::<Vec<_>>() == vec![2, 3, 4]));

    let d = DqnConfig::default();
    let mid = epsilon_at(&d, d.epsilon_decay_steps / 2);
    checks.push(("epsilon at 0", epsilon_at(&d, 0) == 1.0));
    checks.push(("epsilon after decay", epsilon_at(&d, d.epsilon_decay_steps) == 0.05));
    checks.push(("epsilon at midpoint", (mid - 0.525).abs() < 1e-12));

    let config = DqnConfig {
        batch_size: 4,
        target_sync_every: 5,
        ..DqnConfig::default()
    };
    let mut agent = Agent::new(config, 3).unwrap();
    let t = Transition {
        state: StateVector(vec![0.3; state_dim(3)]),
        action: Action(2),
        reward: -2.0,
        next_state: StateVector(vec![0.6; state_dim(3)]),
        done: false,
    };
    let mut sync_ok = true;
    for step in 1..=15u64 {
        agent.learn_step(&[&t; 4]).unwrap();
        let synced = agent.target() == agent.online();
        sync_ok &= synced == (step % 5 == 0);
    }
    checks.push(("target sync bit-equality", sync_ok));

    let failed: Vec<&str> = checks.iter().filter(|c| !c.1).map(|c| c.0).collect();
    let detail = if failed.is_empty() {
        format!("{} checks", checks.len())
    } else {
        format!("failed: {}", failed.join(", "))
    };
    assert!(report(9, failed.is_empty(), detail));
}
