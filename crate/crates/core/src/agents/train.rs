use rand_chacha::ChaCha8Rng;

use super::dqn::DqnAgent;
use super::maql::{maql_discretize, QTable};
use super::{epsilon_schedule, select_action, Scheme};
use crate::env::{Env, ObservationLayout, StepOutcome};
use crate::error::Result;
use crate::neural::{q_network_sizes, Mlp};
use crate::rng::{stream, Stream};
use crate::scenario::ScenarioConfig;
use crate::units::{linear_to_db, watts_to_dbm};

/// Per-episode aggregates shared by the training and testing logs.
#[derive(Debug, Clone, PartialEq)]
pub struct EpisodeStats {
    pub episode: usize,
    /// Slot-averaged common reward.
    pub mean_reward: f64,
    /// Slot-averaged energy efficiency, bit/s/Hz/W.
    pub mean_eta: f64,
    /// Mean loss of the learning updates in this episode; NaN without any.
    pub mean_loss: f64,
    pub epsilon: f64,
    /// Fraction of (HUE, slot) pairs meeting the SINR threshold.
    pub h2h_satisfaction: f64,
    /// Mean outage bound over (critical device, slot) pairs.
    pub cmtcd_outage: f64,
    /// Fraction of tolerable links that delivered their whole payload.
    pub payload_success: f64,
    /// Slot-averaged total harvested power, W.
    pub mean_harvested_w: f64,
}

/// One row of the per-slot trace export.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceRow {
    pub episode: usize,
    pub t: usize,
    pub agent: usize,
    /// 1-based sub-band.
    pub sub_band: usize,
    pub p_dbm: f64,
    pub rho: f64,
    pub sinr_db: f64,
    pub c_bits: f64,
    pub eh_w: f64,
    pub reward: f64,
}

/// Learned parameters of a scheme.
#[derive(Debug, Clone, PartialEq)]
pub enum Policy {
    /// One network per tolerable link.
    Independent(Vec<Mlp<f32>>),
    /// A single network used by every link, one link re-selecting per slot.
    Shared { net: Mlp<f32>, agents: usize },
    /// One table per tolerable link.
    Tabular(Vec<QTable>),
}

impl Policy {
    pub fn num_agents(&self) -> usize {
        match self {
            Policy::Independent(nets) => nets.len(),
            Policy::Shared { agents, .. } => *agents,
            Policy::Tabular(tables) => tables.len(),
        }
    }
}

/// Result of a training run.
#[derive(Debug, Clone)]
pub struct TrainingRun {
    pub scheme: Scheme,
    pub seed: u64,
    pub policy: Policy,
    pub log: Vec<EpisodeStats>,
    pub target_syncs: usize,
    /// Largest replay size reached by any memory.
    pub max_replay_len: usize,
}

/// Decision and learning hooks of one scheme.
trait Controller {
    fn q_values(&self, agent: usize, obs: &[f64]) -> Result<Vec<f64>>;

    /// Whether only one agent (round robin) re-selects per slot.
    fn round_robin(&self) -> bool {
        false
    }

    fn record(&mut self, _obs: &[Vec<f64>], _out: &StepOutcome) {}

    /// Learning at the end of 0-based episode `e`; returns the losses.
    fn end_episode(&mut self, _e: usize, _rng: &mut ChaCha8Rng) -> Result<Vec<f64>> {
        Ok(Vec::new())
    }
}

struct DqnTrainer {
    agents: Vec<DqnAgent>,
    shared: bool,
    num_agents: usize,
    batch: usize,
    updates: usize,
    sync_every: usize,
    max_replay: usize,
}

impl Controller for DqnTrainer {
    fn q_values(&self, agent: usize, obs: &[f64]) -> Result<Vec<f64>> {
        let idx = if self.shared { 0 } else { agent };
        Ok(self.agents[idx].q_values(obs)?.into_iter().map(f64::from).collect())
    }

    fn round_robin(&self) -> bool {
        self.shared
    }

    fn record(&mut self, obs: &[Vec<f64>], out: &StepOutcome) {
        for n in 0..self.num_agents {
            let idx = if self.shared { 0 } else { n };
            let memory = &mut self.agents[idx].replay;
            memory.push(
                &obs[n],
                out.actions[n].index,
                out.reward,
                &out.observations[n],
                out.terminal,
            );
            self.max_replay = self.max_replay.max(memory.len());
        }
    }

    fn end_episode(&mut self, e: usize, rng: &mut ChaCha8Rng) -> Result<Vec<f64>> {
        let mut losses = Vec::new();
        for agent in &mut self.agents {
            for _ in 0..self.updates {
                if let Some(loss) = agent.update(self.batch, rng)? {
                    losses.push(loss);
                }
            }
            if (e + 1).is_multiple_of(self.sync_every) {
                agent.sync_target();
            }
        }
        Ok(losses)
    }
}

struct MaqlTrainer {
    tables: Vec<QTable>,
    layout: ObservationLayout,
    losses: Vec<f64>,
}

impl Controller for MaqlTrainer {
    fn q_values(&self, agent: usize, obs: &[f64]) -> Result<Vec<f64>> {
        Ok(self.tables[agent].row(&maql_discretize(obs, &self.layout)))
    }

    fn record(&mut self, obs: &[Vec<f64>], out: &StepOutcome) {
        for (n, table) in self.tables.iter_mut().enumerate() {
            let key = maql_discretize(&obs[n], &self.layout);
            let next = maql_discretize(&out.observations[n], &self.layout);
            let delta = table.update(key, out.actions[n].index, out.reward, next, out.terminal);
            self.losses.push(delta * delta);
        }
    }

    fn end_episode(&mut self, _e: usize, _rng: &mut ChaCha8Rng) -> Result<Vec<f64>> {
        Ok(std::mem::take(&mut self.losses))
    }
}

enum Learner {
    Dqn(DqnTrainer),
    Maql(MaqlTrainer),
}

/// Frozen policy used for testing.
struct Frozen<'a> {
    policy: &'a Policy,
    layout: ObservationLayout,
}

impl Controller for Frozen<'_> {
    fn q_values(&self, agent: usize, obs: &[f64]) -> Result<Vec<f64>> {
        let to_f32 = |o: &[f64]| o.iter().map(|&v| v as f32).collect::<Vec<_>>();
        Ok(match self.policy {
            Policy::Independent(nets) => {
                nets[agent].forward(&to_f32(obs))?.into_iter().map(f64::from).collect()
            }
            Policy::Shared { net, .. } => {
                net.forward(&to_f32(obs))?.into_iter().map(f64::from).collect()
            }
            Policy::Tabular(tables) => tables[agent].row(&maql_discretize(obs, &self.layout)),
        })
    }

    fn round_robin(&self) -> bool {
        matches!(self.policy, Policy::Shared { .. })
    }
}

/// Constant Q-values; with exploration rate 1 this is the uniform policy.
struct Uniform {
    actions: usize,
}

impl Controller for Uniform {
    fn q_values(&self, _agent: usize, _obs: &[f64]) -> Result<Vec<f64>> {
        Ok(vec![0.0; self.actions])
    }
}

/// Plays one episode of `env` and returns its statistics. `previous` holds
/// the last joint action and is updated in place.
#[allow(clippy::too_many_arguments)]
fn run_episode(
    env: &mut Env,
    controller: &mut dyn Controller,
    e: usize,
    fingerprint_episode: usize,
    epsilon: f64,
    previous: &mut Option<Vec<usize>>,
    explore_rng: &mut ChaCha8Rng,
    learn_rng: &mut ChaCha8Rng,
    mut trace: Option<&mut Vec<TraceRow>>,
) -> Result<EpisodeStats> {
    let mut obs = env.reset(fingerprint_episode, epsilon);
    let n_agents = env.num_agents();
    let budget = env.config().time_budget_slots;
    let (hues, cmtcds) = (env.network().hues, env.network().cmtcds);
    let slot_s = env.config().slot_duration_s;
    let (mut reward, mut eta, mut h2h, mut outage, mut harvested) = (0.0, 0.0, 0.0, 0.0, 0.0);

    loop {
        let t = env.slot();
        let mut actions = Vec::with_capacity(n_agents);
        for n in 0..n_agents {
            let keep = match previous {
                Some(prev) if controller.round_robin() => n != (t - 1) % n_agents,
                _ => false,
            };
            if keep {
                actions.push(previous.as_ref().expect("checked")[n]);
            } else {
                let q = controller.q_values(n, &obs[n])?;
                actions.push(select_action(&q, epsilon, explore_rng));
            }
        }
        let out = env.step(&actions)?;
        controller.record(&obs, &out);

        reward += out.reward;
        eta += out.ee.eta;
        h2h += out.qos.qos_h.iter().filter(|&&q| q).count() as f64;
        outage += out.qos.outage.iter().sum::<f64>();
        harvested += out.metrics.harvested_cmtcd.iter().sum::<f64>()
            + out.metrics.harvested_tmtcd.iter().sum::<f64>();
        if let Some(rows) = trace.as_deref_mut() {
            for (n, a) in out.actions.iter().enumerate() {
                rows.push(TraceRow {
                    episode: e,
                    t,
                    agent: n,
                    sub_band: a.sub_band + 1,
                    p_dbm: watts_to_dbm(a.power_w),
                    rho: a.ps_ratio,
                    sinr_db: linear_to_db(out.metrics.sinr_tmtcd[n]),
                    c_bits: out.metrics.capacity_tmtcd[n] * slot_s,
                    eh_w: out.metrics.harvested_tmtcd[n],
                    reward: out.reward,
                });
            }
        }
        *previous = Some(actions);
        obs = out.observations;
        if out.terminal {
            break;
        }
    }

    let losses = controller.end_episode(e, learn_rng)?;
    let slots = budget as f64;
    let delivered = env.payload_remaining().iter().filter(|&&v| v <= 0.0).count();
    Ok(EpisodeStats {
        episode: e,
        mean_reward: reward / slots,
        mean_eta: eta / slots,
        mean_loss: if losses.is_empty() {
            f64::NAN
        } else {
            losses.iter().sum::<f64>() / losses.len() as f64
        },
        epsilon,
        h2h_satisfaction: if hues == 0 { 1.0 } else { h2h / (hues as f64 * slots) },
        cmtcd_outage: if cmtcds == 0 { 0.0 } else { outage / (cmtcds as f64 * slots) },
        payload_success: if n_agents == 0 {
            1.0
        } else {
            delivered as f64 / n_agents as f64
        },
        mean_harvested_w: harvested / slots,
    })
}

/// Trains `scheme` for `cfg.episodes` episodes. `progress` is called after
/// every episode.
pub fn run_training(
    cfg: &ScenarioConfig,
    scheme: Scheme,
    seed: u64,
    mut progress: Option<&mut dyn FnMut(&EpisodeStats)>,
) -> Result<TrainingRun> {
    let mut env = Env::new(cfg, scheme.swipt(), seed, Stream::Environment)?;
    let n_agents = env.num_agents();
    let sizes = q_network_sizes(env.obs_len(), env.action_space().len(), cfg.hidden_layers);
    let mut init_rng = stream(seed, Stream::Init);
    let mut explore_rng = stream(seed, Stream::Exploration);
    let mut learn_rng = stream(seed, Stream::Replay);

    let mut learner = match scheme {
        Scheme::Maql => Learner::Maql(MaqlTrainer {
            tables: (0..n_agents)
                .map(|_| QTable::new(env.action_space().len(), cfg.maql_learning_rate, cfg.discount))
                .collect(),
            layout: *env.layout(),
            losses: Vec::new(),
        }),
        _ => {
            let shared = scheme == Scheme::Sadrl;
            let count = if shared { 1 } else { n_agents };
            Learner::Dqn(DqnTrainer {
                agents: (0..count)
                    .map(|_| DqnAgent::new(&sizes, cfg, &mut init_rng))
                    .collect(),
                shared,
                num_agents: n_agents,
                batch: cfg.minibatch_size,
                updates: cfg.updates_per_episode,
                sync_every: cfg.target_sync,
                max_replay: 0,
            })
        }
    };
    let controller: &mut dyn Controller = match &mut learner {
        Learner::Dqn(d) => d,
        Learner::Maql(m) => m,
    };

    let mut log = Vec::with_capacity(cfg.episodes);
    let mut previous = None;
    for e in 0..cfg.episodes {
        let epsilon = epsilon_schedule(e, cfg);
        let stats = run_episode(
            &mut env,
            controller,
            e,
            e,
            epsilon,
            &mut previous,
            &mut explore_rng,
            &mut learn_rng,
            None,
        )?;
        if let Some(cb) = progress.as_mut() {
            cb(&stats);
        }
        log.push(stats);
    }

    let (policy, target_syncs, max_replay_len) = match learner {
        Learner::Maql(m) => (Policy::Tabular(m.tables), 0, 0),
        Learner::Dqn(d) => {
            let syncs = d.agents.first().map_or(0, |a| a.target_syncs);
            let policy = if d.shared {
                let net = d.agents.into_iter().next().map(|a| a.online);
                Policy::Shared {
                    net: net.unwrap_or_else(|| Mlp::zeros(&sizes)),
                    agents: n_agents,
                }
            } else {
                Policy::Independent(d.agents.into_iter().map(|a| a.online).collect())
            };
            (policy, syncs, d.max_replay)
        }
    };
    Ok(TrainingRun {
        scheme,
        seed,
        policy,
        log,
        target_syncs,
        max_replay_len,
    })
}

/// Runs `episodes` testing episodes with the trained policy: exploration
/// fixed at the final rate, fingerprint at the end of training, no
/// learning. Uses channel and exploration streams disjoint from training.
pub fn run_testing(
    policy: &Policy,
    cfg: &ScenarioConfig,
    scheme: Scheme,
    seed: u64,
    episodes: usize,
    mut trace: Option<&mut Vec<TraceRow>>,
) -> Result<Vec<EpisodeStats>> {
    let mut env = Env::new(cfg, scheme.swipt(), seed, Stream::TestEnvironment)?;
    let mut controller = Frozen {
        policy,
        layout: *env.layout(),
    };
    let mut explore_rng = stream(seed, Stream::Test);
    let mut unused = stream(seed, Stream::Test);
    let mut previous = None;
    (0..episodes)
        .map(|e| {
            run_episode(
                &mut env,
                &mut controller,
                e,
                cfg.episodes,
                cfg.epsilon_final,
                &mut previous,
                &mut explore_rng,
                &mut unused,
                trace.as_deref_mut(),
            )
        })
        .collect()
}

/// The uniform-random policy on the testing environment of `seed`.
pub fn run_random_policy(
    cfg: &ScenarioConfig,
    swipt: bool,
    seed: u64,
    episodes: usize,
) -> Result<Vec<EpisodeStats>> {
    let mut env = Env::new(cfg, swipt, seed, Stream::TestEnvironment)?;
    let mut controller = Uniform {
        actions: env.action_space().len(),
    };
    let mut rng = stream(seed, Stream::Test);
    let mut unused = stream(seed, Stream::Test);
    let mut previous = None;
    (0..episodes)
        .map(|e| {
            run_episode(
                &mut env,
                &mut controller,
                e,
                cfg.episodes,
                1.0,
                &mut previous,
                &mut rng,
                &mut unused,
                None,
            )
        })
        .collect()
}

/// First episode whose trailing 100-episode mean reward lies within 5% of
/// the plateau, the mean of the smoothed curve over the last 10% of
/// episodes.
pub fn convergence_episode(rewards: &[f64]) -> usize {
    if rewards.is_empty() {
        return 0;
    }
    let window = 100;
    let mut smoothed = Vec::with_capacity(rewards.len());
    let mut sum = 0.0;
    for (i, &r) in rewards.iter().enumerate() {
        sum += r;
        if i >= window {
            sum -= rewards[i - window];
        }
        smoothed.push(sum / (i + 1).min(window) as f64);
    }
    let tail = (rewards.len() / 10).max(1);
    let plateau = smoothed[smoothed.len() - tail..].iter().sum::<f64>() / tail as f64;
    let tolerance = 0.05 * plateau.abs();
    smoothed
        .iter()
        .position(|&s| (s - plateau).abs() <= tolerance)
        .unwrap_or(rewards.len() - 1)
}
