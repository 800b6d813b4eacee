//! Learning agents: epsilon-greedy selection, replay memory, DQN agents,
//! the tabular baseline, and the training and testing loops of every
//! scheme.

mod dqn;
mod maql;
mod replay;
mod train;

pub use dqn::{DqnAgent, Minibatch};
pub use maql::{maql_discretize, QTable, StateKey, MAQL_BINS};
pub use replay::{Experience, ReplayMemory};
pub use train::{
    convergence_episode, run_random_policy, run_testing, run_training, EpisodeStats, Policy,
    TraceRow, TrainingRun,
};

use std::fmt;
use std::str::FromStr;

use rand::Rng;

use crate::error::Error;
use crate::scenario::ScenarioConfig;

/// Resource-allocation scheme.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Scheme {
    /// One DQN per tolerable link, SWIPT enabled.
    MadrlAspra,
    /// One Q-table per tolerable link.
    Maql,
    /// One DQN shared by all links; one link changes its action per slot.
    Sadrl,
    /// As `MadrlAspra` with power splitting disabled.
    NonSwiptMadrl,
}

impl Scheme {
    pub const ALL: [Scheme; 4] = [
        Scheme::MadrlAspra,
        Scheme::Maql,
        Scheme::Sadrl,
        Scheme::NonSwiptMadrl,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Scheme::MadrlAspra => "madrl_aspra",
            Scheme::Maql => "maql",
            Scheme::Sadrl => "sadrl",
            Scheme::NonSwiptMadrl => "non_swipt_madrl",
        }
    }

    pub fn swipt(self) -> bool {
        self != Scheme::NonSwiptMadrl
    }
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Scheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Error> {
        Scheme::ALL
            .into_iter()
            .find(|x| x.name() == s.trim())
            .ok_or_else(|| Error::InvalidValue {
                key: "scheme".into(),
                message: format!(
                    "unknown scheme '{s}' (expected one of madrl_aspra, maql, sadrl, non_swipt_madrl)"
                ),
            })
    }
}

/// Exploration rate for 0-based episode `e`: linear from 1 down to the
/// final value over the annealing fraction of all episodes, then constant.
pub fn epsilon_schedule(e: usize, cfg: &ScenarioConfig) -> f64 {
    let end = cfg.epsilon_anneal_fraction * cfg.episodes as f64;
    let e = e as f64;
    if end <= 0.0 || e >= end {
        cfg.epsilon_final
    } else {
        1.0 - (1.0 - cfg.epsilon_final) * e / end
    }
}

/// Index of the largest value; ties go to the lowest index.
pub fn argmax<F: PartialOrd + Copy>(values: &[F]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate().skip(1) {
        if v > values[best] {
            best = i;
        }
    }
    best
}

/// Epsilon-greedy choice over `q_values`.
pub fn select_action<F: PartialOrd + Copy, R: Rng + ?Sized>(
    q_values: &[F],
    epsilon: f64,
    rng: &mut R,
) -> usize {
    let explore = rng.random::<f64>() < epsilon;
    if explore {
        rng.random_range(0..q_values.len())
    } else {
        argmax(q_values)
    }
}

/// Bootstrapped target `r + gamma * max next`, cut at terminal slots.
pub fn td_target(reward: f64, next_q_target: &[f64], terminal: bool, gamma: f64) -> f64 {
    if terminal {
        reward
    } else {
        let best = next_q_target.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        reward + gamma * best
    }
}
