use ndarray::Array2;
use rand::Rng;

use super::replay::ReplayMemory;
use super::{select_action, td_target};
use crate::error::Result;
use crate::neural::{Mlp, RmsProp};
use crate::scenario::ScenarioConfig;

/// Transitions gathered for one gradient step.
#[derive(Debug, Clone, PartialEq)]
pub struct Minibatch {
    pub observations: Array2<f32>,
    pub actions: Vec<usize>,
    pub rewards: Vec<f64>,
    pub next_observations: Array2<f32>,
    pub terminal: Vec<bool>,
}

impl Minibatch {
    pub fn from_memory(memory: &ReplayMemory, indices: &[usize]) -> Self {
        let n = memory.obs_len();
        let mut obs = Array2::zeros((indices.len(), n));
        let mut next = Array2::zeros((indices.len(), n));
        let mut actions = Vec::with_capacity(indices.len());
        let mut rewards = Vec::with_capacity(indices.len());
        let mut terminal = Vec::with_capacity(indices.len());
        for (row, &i) in indices.iter().enumerate() {
            let e = memory.get(i);
            obs.row_mut(row).assign(&ndarray::ArrayView1::from(e.observation));
            next.row_mut(row).assign(&ndarray::ArrayView1::from(e.next_observation));
            actions.push(e.action);
            rewards.push(e.reward);
            terminal.push(e.terminal);
        }
        Minibatch {
            observations: obs,
            actions,
            rewards,
            next_observations: next,
            terminal,
        }
    }

    pub fn len(&self) -> usize {
        self.actions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.actions.is_empty()
    }
}

/// Online and target networks, optimizer state and replay memory.
#[derive(Debug, Clone)]
pub struct DqnAgent {
    pub online: Mlp<f32>,
    pub target: Mlp<f32>,
    pub optimizer: RmsProp<f32>,
    pub replay: ReplayMemory,
    pub gamma: f64,
    pub target_syncs: usize,
}

impl DqnAgent {
    pub fn new<R: Rng + ?Sized>(sizes: &[usize], cfg: &ScenarioConfig, rng: &mut R) -> Self {
        let online = Mlp::init(sizes, rng);
        DqnAgent {
            target: online.clone(),
            online,
            optimizer: RmsProp::new(sizes, cfg.learning_rate, cfg.rmsprop_decay, cfg.rmsprop_epsilon),
            replay: ReplayMemory::new(cfg.replay_capacity, sizes[0]),
            gamma: cfg.discount,
            target_syncs: 0,
        }
    }

    pub fn q_values(&self, obs: &[f64]) -> Result<Vec<f32>> {
        let x: Vec<f32> = obs.iter().map(|&v| v as f32).collect();
        self.online.forward(&x)
    }

    pub fn act<R: Rng + ?Sized>(&self, obs: &[f64], epsilon: f64, rng: &mut R) -> Result<usize> {
        Ok(select_action(&self.q_values(obs)?, epsilon, rng))
    }

    /// One optimizer step on the mean squared TD residual of `batch`;
    /// returns the loss before the step.
    pub fn train_step(&mut self, batch: &Minibatch) -> Result<f64> {
        let next_q = self.target.forward_batch(batch.next_observations.view())?;
        let targets: Vec<f32> = next_q
            .rows()
            .into_iter()
            .enumerate()
            .map(|(b, row)| {
                let best = row.iter().copied().fold(f32::NEG_INFINITY, f32::max) as f64;
                td_target(batch.rewards[b], &[best], batch.terminal[b], self.gamma) as f32
            })
            .collect();
        let (grads, loss) =
            self.online
                .batch_gradient(batch.observations.view(), &batch.actions, &targets)?;
        self.optimizer.step(&mut self.online, &grads);
        Ok(loss as f64)
    }

    /// Samples a minibatch and trains on it; `None` while the memory holds
    /// fewer transitions than one minibatch.
    pub fn update<R: Rng + ?Sized>(&mut self, batch_size: usize, rng: &mut R) -> Result<Option<f64>> {
        if self.replay.len() < batch_size.max(1) {
            return Ok(None);
        }
        let idx = self.replay.sample_indices(batch_size, rng);
        let batch = Minibatch::from_memory(&self.replay, &idx);
        self.train_step(&batch).map(Some)
    }

    pub fn sync_target(&mut self) {
        self.target.clone_from(&self.online);
        self.target_syncs += 1;
    }
}
