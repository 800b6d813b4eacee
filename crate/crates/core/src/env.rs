//! Multi-agent environment: one agent per tolerable link, one step per slot.

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::channel::{build_large_scale, update_small_scale, ChannelState, LargeScale, Link};
use crate::error::{Error, Result};
use crate::metrics::{assemble_reward, ee_objective, evaluate_qos, EeBreakdown, QosReport};
use crate::phy::{compute_all_metrics, tmtcd_interference, Allocation, LinkMetrics, Network};
use crate::rng::{stream, Stream};
use crate::scenario::{generate_topology, validate_config, ScenarioConfig, Topology};
use crate::units::{dbm_to_watts, linear_to_db};

/// Gain normalization bounds in dB; mapped affinely onto [-1, 1].
pub const GAIN_DB_MIN: f64 = -160.0;
pub const GAIN_DB_MAX: f64 = -30.0;
/// Upper end of the interference scale: -30 dBm.
pub const INTERFERENCE_DB_MAX: f64 = -60.0;

pub fn normalize_gain(g: f64) -> f64 {
    2.0 * (linear_to_db(g) - GAIN_DB_MIN) / (GAIN_DB_MAX - GAIN_DB_MIN) - 1.0
}

pub fn denormalize_gain(x: f64) -> f64 {
    let db = (x + 1.0) / 2.0 * (GAIN_DB_MAX - GAIN_DB_MIN) + GAIN_DB_MIN;
    10f64.powf(db / 10.0)
}

/// Interference in W mapped to 0 at (or below) the noise floor and 1 at
/// -30 dBm; zero interference maps to 0.
pub fn normalize_interference(i: f64, noise_w: f64) -> f64 {
    if i <= 0.0 {
        return 0.0;
    }
    let floor = linear_to_db(noise_w);
    ((linear_to_db(i) - floor) / (INTERFERENCE_DB_MAX - floor)).max(0.0)
}

/// A decoded action: sub-band (0-based), power level and PS level (1-based).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AgentAction {
    pub index: usize,
    pub sub_band: usize,
    pub power_level: usize,
    pub ps_level: usize,
    pub power_w: f64,
    pub ps_ratio: f64,
}

/// Flat action indexing, sub-band major, then power level, then PS level.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ActionSpace {
    pub sub_bands: usize,
    pub power_levels: usize,
    pub ps_levels: usize,
    pub p_max_w: f64,
}

impl ActionSpace {
    /// Without SWIPT there is a single PS level with ratio 1.
    pub fn new(cfg: &ScenarioConfig, swipt: bool) -> Self {
        ActionSpace {
            sub_bands: cfg.num_sub_bands(),
            power_levels: cfg.power_levels,
            ps_levels: if swipt { cfg.ps_levels } else { 1 },
            p_max_w: dbm_to_watts(cfg.p_max_dbm),
        }
    }

    pub fn len(&self) -> usize {
        self.sub_bands * self.power_levels * self.ps_levels
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn decode(&self, a: usize) -> Result<AgentAction> {
        if a >= self.len() {
            return Err(Error::ActionOutOfRange {
                index: a,
                count: self.len(),
            });
        }
        let per_band = self.power_levels * self.ps_levels;
        let power_level = (a % per_band) / self.ps_levels + 1;
        let ps_level = a % self.ps_levels + 1;
        Ok(AgentAction {
            index: a,
            sub_band: a / per_band,
            power_level,
            ps_level,
            power_w: power_level as f64 * self.p_max_w / self.power_levels as f64,
            ps_ratio: ps_level as f64 / self.ps_levels as f64,
        })
    }

    /// Inverse of `decode`; `sub_band` is 0-based, levels 1-based.
    pub fn encode(&self, sub_band: usize, power_level: usize, ps_level: usize) -> usize {
        (sub_band * self.power_levels + power_level - 1) * self.ps_levels + ps_level - 1
    }
}

/// Offsets of the blocks inside an observation vector.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ObservationLayout {
    pub sub_bands: usize,
    pub target_gain: usize,
    pub bs_gain: usize,
    pub other_gateway_gain: usize,
    pub cmtcd_gain: usize,
    pub interference: usize,
    pub payload: usize,
    pub time: usize,
    pub qos_h: usize,
    pub qos_s: usize,
    pub episode: usize,
    pub epsilon: usize,
    pub len: usize,
}

impl ObservationLayout {
    pub fn new(cfg: &ScenarioConfig) -> Self {
        let k = cfg.num_sub_bands();
        let s = cfg.num_cmtcd();
        let target_gain = 0;
        let bs_gain = k;
        let other_gateway_gain = 2 * k;
        let cmtcd_gain = other_gateway_gain + (cfg.num_clusters - 1) * k;
        let interference = cmtcd_gain + s * k;
        let payload = interference + k;
        let time = payload + 1;
        let qos_h = time + 1;
        let qos_s = qos_h + cfg.num_hue;
        let episode = qos_s + s;
        ObservationLayout {
            sub_bands: k,
            target_gain,
            bs_gain,
            other_gateway_gain,
            cmtcd_gain,
            interference,
            payload,
            time,
            qos_h,
            qos_s,
            episode,
            epsilon: episode + 1,
            len: episode + 2,
        }
    }
}

/// Everything produced by one slot.
#[derive(Debug, Clone)]
pub struct StepOutcome {
    pub observations: Vec<Vec<f64>>,
    pub reward: f64,
    pub terminal: bool,
    pub actions: Vec<AgentAction>,
    pub allocation: Allocation,
    pub metrics: LinkMetrics,
    pub qos: QosReport,
    pub ee: EeBreakdown,
    /// Bits delivered by each tolerable link in this slot.
    pub delivered_bits: Vec<f64>,
}

/// Simulated network seen by the tolerable-link agents. The topology is
/// fixed for the lifetime of the instance; shadowing is redrawn at each
/// reset and small-scale fading at each slot.
#[derive(Debug, Clone)]
pub struct Env {
    cfg: ScenarioConfig,
    topo: Topology,
    net: Network,
    large: LargeScale,
    ch: ChannelState,
    actions: ActionSpace,
    layout: ObservationLayout,
    rng: ChaCha8Rng,
    payload: Vec<f64>,
    t: usize,
    interference: Vec<Vec<f64>>,
    qos_h: Vec<bool>,
    qos_s: Vec<bool>,
    episode_fraction: f64,
    epsilon: f64,
}

impl Env {
    /// Builds the topology from the topology stream of `seed` and draws all
    /// channel randomness from `channel_stream`.
    pub fn new(cfg: &ScenarioConfig, swipt: bool, seed: u64, channel_stream: Stream) -> Result<Self> {
        let violations = validate_config(cfg);
        if !violations.is_empty() {
            let text: Vec<String> = violations.iter().map(|v| v.to_string()).collect();
            return Err(Error::InvalidConfig(text.join("; ")));
        }
        let topo = generate_topology(cfg, &mut stream(seed, Stream::Topology));
        let mut rng = stream(seed, channel_stream);
        let large = build_large_scale(&topo, cfg, &mut rng);
        let ch = ChannelState::draw(&large, cfg.num_sub_bands(), &mut rng);
        let net = Network::new(cfg, &topo, swipt);
        let n = net.tmtcds;
        let k = net.sub_bands;
        let mut env = Env {
            cfg: cfg.clone(),
            actions: ActionSpace::new(cfg, swipt),
            layout: ObservationLayout::new(cfg),
            topo,
            net,
            large,
            ch,
            rng,
            payload: vec![cfg.payload_bits; n],
            t: 1,
            interference: vec![vec![0.0; k]; n],
            qos_h: vec![true; cfg.num_hue],
            qos_s: vec![true; cfg.num_cmtcd()],
            episode_fraction: 0.0,
            epsilon: 1.0,
        };
        env.baseline_qos();
        Ok(env)
    }

    pub fn config(&self) -> &ScenarioConfig {
        &self.cfg
    }

    pub fn topology(&self) -> &Topology {
        &self.topo
    }

    pub fn network(&self) -> &Network {
        &self.net
    }

    pub fn large_scale(&self) -> &LargeScale {
        &self.large
    }

    pub fn channel(&self) -> &ChannelState {
        &self.ch
    }

    pub fn action_space(&self) -> &ActionSpace {
        &self.actions
    }

    pub fn layout(&self) -> &ObservationLayout {
        &self.layout
    }

    pub fn num_agents(&self) -> usize {
        self.net.tmtcds
    }

    pub fn obs_len(&self) -> usize {
        self.layout.len
    }

    /// Current slot, 1-based; exceeds the time budget once the episode ends.
    pub fn slot(&self) -> usize {
        self.t
    }

    pub fn payload_remaining(&self) -> &[f64] {
        &self.payload
    }

    /// Starts a new episode and returns every agent's observation.
    /// `episode` is the training episode index used in the fingerprint.
    pub fn reset(&mut self, episode: usize, epsilon: f64) -> Vec<Vec<f64>> {
        self.large = build_large_scale(&self.topo, &self.cfg, &mut self.rng);
        self.ch = ChannelState::draw(&self.large, self.net.sub_bands, &mut self.rng);
        self.payload.iter_mut().for_each(|v| *v = self.cfg.payload_bits);
        self.t = 1;
        self.interference.iter_mut().for_each(|row| row.iter_mut().for_each(|x| *x = 0.0));
        self.episode_fraction = episode as f64 / self.cfg.episodes.max(1) as f64;
        self.epsilon = epsilon;
        self.baseline_qos();
        self.observations()
    }

    /// QoS flags of the network with no tolerable transmission.
    fn baseline_qos(&mut self) {
        let empty = Allocation::empty();
        let metrics = compute_all_metrics(&self.net, &empty, &self.ch);
        let report = evaluate_qos(
            &self.net,
            &empty,
            &self.large,
            &metrics,
            &[],
            self.cfg.outage_target,
            self.t,
            self.cfg.time_budget_slots,
        );
        self.qos_h = report.qos_h;
        self.qos_s = report.qos_s;
    }

    /// Sets the fingerprint without starting a new episode.
    pub fn set_fingerprint(&mut self, episode: usize, epsilon: f64) {
        self.episode_fraction = episode as f64 / self.cfg.episodes.max(1) as f64;
        self.epsilon = epsilon;
    }

    pub fn observations(&self) -> Vec<Vec<f64>> {
        (0..self.num_agents()).map(|n| self.observation_of(n)).collect()
    }

    pub fn observation_of(&self, n: usize) -> Vec<f64> {
        let k_count = self.net.sub_bands;
        let m = self.net.tmtcd_cluster[n];
        let mut obs = Vec::with_capacity(self.layout.len);
        let gains = |link: Link, obs: &mut Vec<f64>| {
            for k in 0..k_count {
                obs.push(normalize_gain(self.ch.gain(link, k)));
            }
        };
        gains(Link::GwTmtcd(m, n), &mut obs);
        gains(Link::BsTmtcd(n), &mut obs);
        for other in (0..self.net.clusters).filter(|&c| c != m) {
            gains(Link::GwTmtcd(other, n), &mut obs);
        }
        for s in 0..self.net.cmtcds {
            gains(Link::GwCmtcd(m, s), &mut obs);
        }
        obs.extend(
            self.interference[n]
                .iter()
                .map(|&i| normalize_interference(i, self.net.noise_w)),
        );
        obs.push(self.payload[n] / self.cfg.payload_bits);
        let budget = self.cfg.time_budget_slots as f64;
        obs.push(((budget + 1.0 - self.t as f64) / budget).max(0.0));
        obs.extend(self.qos_h.iter().map(|&q| q as u8 as f64));
        obs.extend(self.qos_s.iter().map(|&q| q as u8 as f64));
        obs.push(self.episode_fraction);
        obs.push(self.epsilon);
        debug_assert_eq!(obs.len(), self.layout.len);
        obs
    }

    /// Plays one slot with one flat action index per agent.
    pub fn step(&mut self, actions: &[usize]) -> Result<StepOutcome> {
        let n_agents = self.num_agents();
        if actions.len() != n_agents {
            return Err(Error::ActionCount {
                expected: n_agents,
                actual: actions.len(),
            });
        }
        let budget = self.cfg.time_budget_slots;
        if self.t > budget {
            return Err(Error::Domain("episode already finished; call reset".into()));
        }
        let decoded = actions
            .iter()
            .map(|&a| self.actions.decode(a))
            .collect::<Result<Vec<_>>>()?;
        let allocation = Allocation {
            sub_band: decoded.iter().map(|a| a.sub_band).collect(),
            power_w: decoded.iter().map(|a| a.power_w).collect(),
            ps_ratio: decoded.iter().map(|a| a.ps_ratio).collect(),
        };
        let metrics = compute_all_metrics(&self.net, &allocation, &self.ch);

        let mut delivered_bits = Vec::with_capacity(n_agents);
        for (v, c) in self.payload.iter_mut().zip(&metrics.capacity_tmtcd) {
            let bits = (c * self.cfg.slot_duration_s).min(*v);
            *v -= bits;
            if *v <= 0.0 {
                *v = 0.0;
            }
            delivered_bits.push(bits);
        }

        let qos = evaluate_qos(
            &self.net,
            &allocation,
            &self.large,
            &metrics,
            &self.payload,
            self.cfg.outage_target,
            self.t,
            budget,
        );
        let ee = ee_objective(&metrics, &allocation, &self.net)?;
        let reward = assemble_reward(&ee, &qos, self.cfg.reward_weight);

        for n in 0..n_agents {
            for k in 0..self.net.sub_bands {
                self.interference[n][k] = tmtcd_interference(&self.net, &allocation, &self.ch, n, k);
            }
        }
        self.qos_h.clone_from(&qos.qos_h);
        self.qos_s.clone_from(&qos.qos_s);

        update_small_scale(&mut self.ch, &self.large, &mut self.rng);
        self.t += 1;
        let terminal = self.t > budget;
        Ok(StepOutcome {
            observations: self.observations(),
            reward,
            terminal,
            actions: decoded,
            allocation,
            metrics,
            qos,
            ee,
            delivered_bits,
        })
    }

    /// Draws a uniformly random joint action.
    pub fn random_actions<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<usize> {
        (0..self.num_agents())
            .map(|_| rng.random_range(0..self.actions.len()))
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metrics::tolerable_reward;
    use proptest::prelude::*;
    use rand::SeedableRng;

    fn env() -> Env {
        Env::new(&ScenarioConfig::default(), true, 11, Stream::Environment).unwrap()
    }

    #[test]
    fn default_observation_length() {
        let e = env();
        assert_eq!(e.obs_len(), 32);
        assert_eq!(e.observation_of(0).len(), 32);
        assert_eq!(e.action_space().len(), 200);
        let l = e.layout();
        assert_eq!(
            (l.interference, l.payload, l.time, l.qos_h, l.qos_s, l.episode, l.epsilon),
            (20, 24, 25, 26, 28, 30, 31)
        );
    }

    #[test]
    fn decode_first_and_last() {
        let cfg = ScenarioConfig::default();
        let space = ActionSpace::new(&cfg, true);
        let p = dbm_to_watts(15.0);
        let a = space.decode(0).unwrap();
        assert_eq!((a.sub_band, a.power_level, a.ps_level), (0, 1, 1));
        assert!((a.power_w - p / 10.0).abs() < 1e-15 && (a.ps_ratio - 0.2).abs() < 1e-15);
        let a = space.decode(199).unwrap();
        assert_eq!((a.sub_band, a.power_level, a.ps_level), (3, 10, 5));
        assert_eq!((a.power_w, a.ps_ratio), (p, 1.0));
        assert!(matches!(space.decode(200), Err(Error::ActionOutOfRange { .. })));
    }

    #[test]
    fn decode_encode_round_trip() {
        let cfg = ScenarioConfig::default();
        for swipt in [true, false] {
            let space = ActionSpace::new(&cfg, swipt);
            for a in 0..space.len() {
                let d = space.decode(a).unwrap();
                assert_eq!(space.encode(d.sub_band, d.power_level, d.ps_level), a);
            }
        }
        let plain = ActionSpace::new(&cfg, false);
        assert_eq!(plain.len(), 40);
        assert!((0..40).all(|a| plain.decode(a).unwrap().ps_ratio == 1.0));
    }

    #[test]
    fn reset_observation_fields() {
        let mut e = env();
        let obs = e.reset(400, 0.3);
        let l = *e.layout();
        for o in &obs {
            assert_eq!(o[l.payload], 1.0);
            assert_eq!(o[l.time], 1.0);
            assert_eq!(o[l.episode], 400.0 / 8000.0);
            assert_eq!(o[l.epsilon], 0.3);
            assert!(o[l.interference..l.payload].iter().all(|&x| x == 0.0));
            assert!(o[l.qos_h..l.episode].iter().all(|&x| x == 0.0 || x == 1.0));
        }
    }

    #[test]
    fn reset_is_deterministic() {
        let mut a = env();
        let mut b = env();
        assert_eq!(a.reset(1, 1.0), b.reset(1, 1.0));
        assert_eq!(a.reset(2, 0.5), b.reset(2, 0.5));
    }

    #[test]
    fn gains_invert_exactly() {
        let mut e = env();
        let obs = e.reset(0, 1.0);
        let l = *e.layout();
        for k in 0..4 {
            let g = e.channel().gain(Link::GwTmtcd(0, 0), k);
            let back = denormalize_gain(obs[0][l.target_gain + k]);
            assert!((back / g - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn interference_normalization() {
        let noise = dbm_to_watts(-114.0);
        assert_eq!(normalize_interference(0.0, noise), 0.0);
        assert_eq!(normalize_interference(noise / 10.0, noise), 0.0);
        assert!((normalize_interference(noise, noise)).abs() < 1e-12);
        assert!((normalize_interference(1e-6, noise) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn step_reward_matches_external_recomputation() {
        let mut e = env();
        e.reset(0, 1.0);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..100 {
            let acts = e.random_actions(&mut rng);
            let t = e.slot();
            let out = e.step(&acts).unwrap();
            let cfg = e.config();
            let r_total: f64 = out
                .metrics
                .sinr_cmtcd
                .iter()
                .chain(&out.metrics.sinr_tmtcd)
                .map(|s| (1.0 + s).log2())
                .sum();
            let ec = out.allocation.power_w.iter().sum::<f64>()
                + 2.0 * dbm_to_watts(cfg.p_cmtcd_dbm)
                + dbm_to_watts(cfg.circuit_power_dbm)
                - out.metrics.harvested_cmtcd.iter().sum::<f64>()
                - out.metrics.harvested_tmtcd.iter().sum::<f64>();
            let u_n: f64 = e
                .payload_remaining()
                .iter()
                .map(|&v| tolerable_reward(v, t, 100))
                .sum();
            let u_s = out.qos.qos_s.iter().filter(|q| !**q).count() as f64;
            let u_h = out
                .metrics
                .sinr_hue
                .iter()
                .filter(|&&s| linear_to_db(s) < 7.0)
                .count() as f64;
            let expect = cfg.reward_weight * r_total / ec - u_n - u_s - u_h;
            assert!((out.reward - expect).abs() < 1e-9, "{} vs {}", out.reward, expect);
        }
    }

    #[test]
    fn episode_runs_exactly_budget_slots() {
        let mut e = env();
        e.reset(0, 1.0);
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let mut steps = 0;
        loop {
            let out = e.step(&e.random_actions(&mut rng)).unwrap();
            steps += 1;
            if out.terminal {
                break;
            }
        }
        assert_eq!(steps, 100);
        assert!(e.step(&[0, 0, 0, 0]).is_err());
    }

    #[test]
    fn delivered_payload_stops_penalty() {
        let cfg = ScenarioConfig {
            payload_bits: 1.0,
            ..Default::default()
        };
        let mut e = Env::new(&cfg, true, 3, Stream::Environment).unwrap();
        e.reset(0, 1.0);
        let best: Vec<usize> = (0..4).map(|n| e.action_space().encode(2 + n % 2, 10, 5)).collect();
        e.step(&best).unwrap();
        let out = e.step(&best).unwrap();
        if e.payload_remaining().iter().all(|&v| v == 0.0) {
            assert!(out.qos.u_n.iter().all(|&u| u == 0.0));
        }
        assert!(out.qos.u_n.iter().zip(e.payload_remaining()).all(|(&u, &v)| v > 0.0 || u == 0.0));
    }

    #[test]
    fn same_actions_same_outcome() {
        let mut a = env();
        let mut b = env();
        a.reset(0, 1.0);
        b.reset(0, 1.0);
        for i in 0..20 {
            let acts = vec![i % 200, (i * 7) % 200, (i * 13) % 200, 199 - i];
            let oa = a.step(&acts).unwrap();
            let ob = b.step(&acts).unwrap();
            assert_eq!(oa.reward.to_bits(), ob.reward.to_bits());
            assert_eq!(oa.observations, ob.observations);
        }
    }

    #[test]
    fn malformed_actions_rejected() {
        let mut e = env();
        e.reset(0, 1.0);
        assert!(matches!(e.step(&[0, 0, 0]), Err(Error::ActionCount { .. })));
        assert!(matches!(e.step(&[0, 0, 0, 500]), Err(Error::ActionOutOfRange { .. })));
    }

    #[test]
    fn interference_field_is_previous_measurement() {
        let mut e = env();
        e.reset(0, 1.0);
        let acts = vec![0, 50, 100, 150];
        let before = e.channel().clone();
        let out = e.step(&acts).unwrap();
        let l = *e.layout();
        for n in 0..4 {
            for k in 0..4 {
                let i = tmtcd_interference(e.network(), &out.allocation, &before, n, k);
                let x = out.observations[n][l.interference + k];
                assert!((x - normalize_interference(i, e.network().noise_w)).abs() < 1e-12);
            }
        }
    }

    proptest! {
        #[test]
        fn observation_length_constant(seed in 0u64..50, steps in 1usize..30) {
            let mut e = Env::new(&ScenarioConfig::default(), seed % 2 == 0, seed, Stream::Environment).unwrap();
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let obs = e.reset(0, 1.0);
            prop_assert!(obs.iter().all(|o| o.len() == 32));
            for _ in 0..steps {
                let out = e.step(&e.random_actions(&mut rng)).unwrap();
                prop_assert!(out.observations.iter().all(|o| o.len() == 32 && o.iter().all(|x| x.is_finite())));
            }
        }
    }
}
