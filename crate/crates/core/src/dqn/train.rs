use std::io::Write;
use std::path::Path;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{argmax, epsilon_at, Agent, DqnConfig, ReplayBuffer, TrainedModel};
use crate::env::{run_episode, state_dim, Action, Episode, RewardWeights, Transition};
use crate::error::{Error, Result};
use crate::model::{
    evaluate_assignment, generate_workload, Assignment, ClusterSpec, Metrics, MigrationCostModel,
    Workload,
};
use crate::nn::Mlp;
use crate::rng;

// Keeps the agent's stream apart from the weight-initialisation stream,
// which is seeded with the plain config seed.
const STREAM_SALT: u64 = 0x5eed_d0d0_cafe_f00d;

/// Distribution training workloads are drawn from.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WorkloadSettings {
    pub tasks: usize,
    pub demand_lo: f64,
    pub demand_hi: f64,
}

impl WorkloadSettings {
    pub fn generate(&self, edge_nodes: usize, seed: u64) -> Result<Workload> {
        generate_workload(self.tasks, self.demand_lo, self.demand_hi, edge_nodes, seed)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpisodeRecord {
    pub episode: usize,
    #[serde(rename = "return")]
    pub episode_return: f64,
    /// None when no learning step ran during the episode.
    pub mean_loss: Option<f64>,
    /// Exploration rate at the end of the episode.
    pub epsilon: f64,
    pub t_total: f64,
    pub utilization: f64,
    pub migrations: usize,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct TrainingLog {
    pub episodes: Vec<EpisodeRecord>,
}

impl TrainingLog {
    pub fn returns(&self) -> Vec<f64> {
        self.episodes.iter().map(|e| e.episode_return).collect()
    }

    pub fn write_csv<W: Write>(&self, mut out: W) -> csv::Result<()> {
        // explicit header so an empty log still has one
        out.write_all(b"episode,return,mean_loss,epsilon,t_total,utilization,migrations\n")?;
        let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(out);
        for e in &self.episodes {
            w.serialize(e)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn save_csv(&self, path: &Path) -> Result<()> {
        let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        self.write_csv(file).map_err(|source| Error::Csv {
            path: path.into(),
            source,
        })
    }
}

/// Trains a fresh agent on workloads drawn from `settings`.
///
/// All randomness comes from one stream seeded by `config.seed`. Each
/// episode first draws its workload seed; each step then draws the
/// exploration coin (plus a random action when exploring) followed by the
/// replay sample indices.
pub fn train(
    settings: &WorkloadSettings,
    cluster: &ClusterSpec,
    weights: RewardWeights,
    model: MigrationCostModel,
    config: &DqnConfig,
) -> Result<(TrainedModel, TrainingLog)> {
    weights.validate()?;
    model.validate()?;
    let mut agent = Agent::new(config.clone(), cluster.len())?;
    let mut buffer: ReplayBuffer<Transition> = ReplayBuffer::new(config.buffer_capacity);
    let mut rng = rng::seeded(config.seed ^ STREAM_SALT);
    let mut log = TrainingLog::default();

    for episode in 0..config.episodes {
        let workload = settings.generate(cluster.edge_count(), rng.gen())?;
        let (mut env, mut state) = Episode::reset(&workload, cluster, weights, model)?;
        let mut episode_return = 0.0;
        let mut loss_sum = 0.0;
        let mut loss_count = 0usize;

        while !env.is_done() {
            let epsilon = epsilon_at(config, agent.env_steps());
            let action = agent.select_action(&state, epsilon, &mut rng)?;
            let out = env.step(action)?;
            episode_return += out.reward;
            agent.record_env_step();
            let next = out.state.clone();
            buffer.push(Transition {
                state: std::mem::replace(&mut state, out.state),
                action,
                reward: out.reward,
                next_state: next,
                done: out.done,
            });

            if buffer.len() >= config.learn_start.max(1) {
                let batch = buffer.sample(config.batch_size, &mut rng);
                loss_sum += agent.learn_step(&batch)?;
                loss_count += 1;
            }
        }

        let metrics = env.metrics()?;
        log.episodes.push(EpisodeRecord {
            episode,
            episode_return,
            mean_loss: (loss_count > 0).then(|| loss_sum / loss_count as f64),
            epsilon: epsilon_at(config, agent.env_steps()),
            t_total: metrics.t_total,
            utilization: metrics.utilization,
            migrations: metrics.migration_count,
        });
    }

    Ok((
        TrainedModel {
            network: agent.into_online(),
            config: config.clone(),
        },
        log,
    ))
}

/// Runs the network greedily (no exploration) over `workload`.
pub fn greedy_rollout(
    network: &Mlp,
    workload: &Workload,
    cluster: &ClusterSpec,
    weights: RewardWeights,
    model: MigrationCostModel,
) -> Result<(Assignment, Metrics)> {
    if network.input_dim() != state_dim(cluster.len()) || network.output_dim() != cluster.len() {
        return Err(Error::contract(format!(
            "network is {}->{} but the cluster needs {}->{}",
            network.input_dim(),
            network.output_dim(),
            state_dim(cluster.len()),
            cluster.len()
        )));
    }
    let (_, assignment) = run_episode(workload, cluster, weights, model, |_, state| {
        let q = network
            .forward(state.as_slice())
            .expect("state width checked above");
        Action(argmax(&q))
    })?;
    let metrics = evaluate_assignment(workload, cluster, &assignment, &model)?;
    Ok((assignment, metrics))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::generate_cluster;
    use crate::nn::MlpSpec;

    fn tiny_config(episodes: usize) -> DqnConfig {
        DqnConfig {
            episodes,
            buffer_capacity: 500,
            batch_size: 8,
            learn_start: 16,
            target_sync_every: 20,
            epsilon_decay_steps: 100,
            hidden: vec![8],
            seed: 11,
            ..DqnConfig::default()
        }
    }

    fn setup() -> (WorkloadSettings, ClusterSpec) {
        let settings = WorkloadSettings {
            tasks: 6,
            demand_lo: 50.0,
            demand_hi: 150.0,
        };
        (settings, generate_cluster(2, 1, (80.0, 120.0), (300.0, 500.0), 1).unwrap())
    }

    #[test]
    fn zero_episodes_returns_initial_network() {
        let (s, c) = setup();
        let config = tiny_config(0);
        let (model, log) = train(&s, &c, RewardWeights::default(), Default::default(), &config).unwrap();
        assert!(log.episodes.is_empty());
        let fresh = Agent::new(config, c.len()).unwrap();
        assert_eq!(&model.network, fresh.online());
    }

    #[test]
    fn training_is_deterministic() {
        let (s, c) = setup();
        let config = tiny_config(30);
        let a = train(&s, &c, RewardWeights::default(), Default::default(), &config).unwrap();
        let b = train(&s, &c, RewardWeights::default(), Default::default(), &config).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.1.episodes.len(), 30);
        assert!(a.1.episodes[0].mean_loss.is_none());
        assert!(a.1.episodes[29].mean_loss.is_some());
    }

    #[test]
    fn zero_network_rollout_sends_everything_to_node_zero() {
        let (s, c) = setup();
        let w = s.generate(2, 4).unwrap();
        let net = Mlp::zeros(MlpSpec::new(state_dim(3), vec![4], 3, 0)).unwrap();
        let model = MigrationCostModel::default();
        let (a, m) = greedy_rollout(&net, &w, &c, RewardWeights::default(), model).unwrap();
        assert!(a.placement.iter().all(|&n| n == 0));
        assert_eq!(m, evaluate_assignment(&w, &c, &a, &model).unwrap());
        let again = greedy_rollout(&net, &w, &c, RewardWeights::default(), model).unwrap();
        assert_eq!(again.0, a);
    }

    #[test]
    fn rollout_rejects_mismatched_network() {
        let (s, c) = setup();
        let w = s.generate(2, 4).unwrap();
        let net = Mlp::zeros(MlpSpec::new(5, vec![4], 2, 0)).unwrap();
        let err = greedy_rollout(&net, &w, &c, RewardWeights::default(), Default::default()).unwrap_err();
        assert!(matches!(err, Error::Contract(_)));
    }

    #[test]
    fn log_csv_layout() {
        let log = TrainingLog {
            episodes: vec![EpisodeRecord {
                episode: 0,
                episode_return: -3.5,
                mean_loss: None,
                epsilon: 1.0,
                t_total: 2.0,
                utilization: 0.5,
                migrations: 1,
            }],
        };
        let mut buf = Vec::new();
        log.write_csv(&mut buf).unwrap();
        assert_eq!(
            String::from_utf8(buf).unwrap(),
            "episode,return,mean_loss,epsilon,t_total,utilization,migrations\n0,-3.5,,1.0,2.0,0.5,1\n"
        );
        let mut buf = Vec::new();
        TrainingLog::default().write_csv(&mut buf).unwrap();
        assert_eq!(
            String::from_utf8(buf).unwrap(),
            "episode,return,mean_loss,epsilon,t_total,utilization,migrations\n"
        );
    }

    #[test]
    fn trained_model_file_round_trip() {
        let (s, c) = setup();
        let (model, _) = train(&s, &c, RewardWeights::default(), Default::default(), &tiny_config(2)).unwrap();
        let json = model.to_json();
        assert!(json.contains(r#""config":{"discount":0.99"#));
        assert_eq!(TrainedModel::from_json(&json).unwrap(), model);
    }
}
