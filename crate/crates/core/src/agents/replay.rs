use rand::Rng;

/// One stored transition.
#[derive(Debug, Clone, PartialEq)]
pub struct Experience<'a> {
    pub observation: &'a [f32],
    pub action: usize,
    pub reward: f64,
    pub next_observation: &'a [f32],
    pub terminal: bool,
}

/// Bounded FIFO of transitions with flat observation storage; the oldest
/// entry is overwritten once full.
#[derive(Debug, Clone)]
pub struct ReplayMemory {
    capacity: usize,
    obs_len: usize,
    observations: Vec<f32>,
    next_observations: Vec<f32>,
    actions: Vec<usize>,
    rewards: Vec<f64>,
    terminal: Vec<bool>,
    len: usize,
    head: usize,
}

impl ReplayMemory {
    pub fn new(capacity: usize, obs_len: usize) -> Self {
        ReplayMemory {
            capacity,
            obs_len,
            observations: Vec::new(),
            next_observations: Vec::new(),
            actions: Vec::new(),
            rewards: Vec::new(),
            terminal: Vec::new(),
            len: 0,
            head: 0,
        }
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn obs_len(&self) -> usize {
        self.obs_len
    }

    pub fn push(&mut self, obs: &[f64], action: usize, reward: f64, next: &[f64], terminal: bool) {
        assert_eq!(obs.len(), self.obs_len, "observation length");
        assert_eq!(next.len(), self.obs_len, "observation length");
        if self.capacity == 0 {
            return;
        }
        let obs = obs.iter().map(|&x| x as f32);
        let next = next.iter().map(|&x| x as f32);
        if self.len < self.capacity {
            self.observations.extend(obs);
            self.next_observations.extend(next);
            self.actions.push(action);
            self.rewards.push(reward);
            self.terminal.push(terminal);
            self.len += 1;
        } else {
            let range = self.head * self.obs_len..(self.head + 1) * self.obs_len;
            self.observations.splice(range.clone(), obs);
            self.next_observations.splice(range, next);
            self.actions[self.head] = action;
            self.rewards[self.head] = reward;
            self.terminal[self.head] = terminal;
        }
        self.head = (self.head + 1) % self.capacity;
    }

    /// Transition at storage slot `i`.
    pub fn get(&self, i: usize) -> Experience<'_> {
        let range = i * self.obs_len..(i + 1) * self.obs_len;
        Experience {
            observation: &self.observations[range.clone()],
            action: self.actions[i],
            reward: self.rewards[i],
            next_observation: &self.next_observations[range],
            terminal: self.terminal[i],
        }
    }

    /// Transitions from oldest to newest.
    pub fn iter(&self) -> impl Iterator<Item = Experience<'_>> {
        let start = if self.len < self.capacity { 0 } else { self.head };
        (0..self.len).map(move |i| self.get((start + i) % self.len))
    }

    /// Uniform sample with replacement.
    pub fn sample_indices<R: Rng + ?Sized>(&self, count: usize, rng: &mut R) -> Vec<usize> {
        (0..count).map(|_| rng.random_range(0..self.len)).collect()
    }
}
