//! Experiment configuration and random cell topology.

use std::fmt::Write as _;
use std::path::Path;

use rand::Rng;
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::error::{Error, Result};
use crate::units::{db_to_linear, dbm_to_watts};

/// Which transmitter the co-band "owner" interference term at a tolerable
/// receiver refers to.
///
/// `AsPrinted` charges an HUE-owned band with the gateway's critical-link
/// power over the receiver's own gateway channel, and a CMTCD-owned band with
/// the base-station power over the BS channel. `OwnerTransmitter` charges each
/// band with the transmitter that actually serves its owner: the BS for HUE
/// bands, the owning cluster's gateway at critical-link power for CMTCD bands.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OwnerInterference {
    AsPrinted,
    OwnerTransmitter,
}

/// Every physical and learning parameter of one experiment.
///
/// Field names double as keys in the `key = value` configuration files.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioConfig {
    pub cell_radius_m: f64,
    pub num_hue: usize,
    pub num_clusters: usize,
    pub cmtcd_per_cluster: usize,
    pub tmtcd_per_cluster: usize,
    pub cluster_radius_m: f64,
    pub total_bandwidth_hz: f64,
    pub noise_power_dbm: f64,
    pub circuit_power_dbm: f64,
    pub energy_conversion: f64,
    pub p_bs_dbm: f64,
    pub p_cmtcd_dbm: f64,
    pub p_max_dbm: f64,
    pub sinr_min_h2h_db: f64,
    pub sinr_min_cmtcd_db: f64,
    pub outage_target: f64,
    pub payload_bits: f64,
    pub time_budget_slots: usize,
    pub slot_duration_s: f64,
    pub power_levels: usize,
    pub ps_levels: usize,
    pub reward_weight: f64,
    pub sinr_cap_db: f64,
    pub cmtcd_ps_ratio: f64,
    pub payload_success_target: f64,
    pub episodes: usize,
    pub target_sync: usize,
    pub learning_rate: f64,
    pub rng_seed: u64,
    pub shadowing_std_db: f64,
    pub owner_interference: OwnerInterference,

    // Learning knobs without a published value.
    pub discount: f64,
    pub replay_capacity: usize,
    pub minibatch_size: usize,
    pub updates_per_episode: usize,
    pub hidden_layers: usize,
    pub rmsprop_decay: f64,
    pub rmsprop_epsilon: f64,
    pub epsilon_final: f64,
    pub epsilon_anneal_fraction: f64,
    pub maql_learning_rate: f64,
    pub test_episodes: usize,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        ScenarioConfig {
            cell_radius_m: 500.0,
            num_hue: 2,
            num_clusters: 2,
            cmtcd_per_cluster: 1,
            tmtcd_per_cluster: 2,
            cluster_radius_m: 30.0,
            total_bandwidth_hz: 4e6,
            noise_power_dbm: -114.0,
            circuit_power_dbm: 10.0,
            energy_conversion: 0.7,
            p_bs_dbm: 30.0,
            p_cmtcd_dbm: 23.0,
            p_max_dbm: 15.0,
            sinr_min_h2h_db: 7.0,
            sinr_min_cmtcd_db: 5.0,
            outage_target: 0.01,
            payload_bits: 3.0 * 1024.0 * 8.0,
            time_budget_slots: 100,
            slot_duration_s: 1e-3,
            power_levels: 10,
            ps_levels: 5,
            reward_weight: 1.0 / 50.0,
            sinr_cap_db: 30.0,
            cmtcd_ps_ratio: 0.9,
            payload_success_target: 0.95,
            episodes: 8000,
            target_sync: 4,
            learning_rate: 0.001,
            rng_seed: 1,
            shadowing_std_db: 8.0,
            owner_interference: OwnerInterference::AsPrinted,
            discount: 0.9,
            replay_capacity: 50_000,
            minibatch_size: 64,
            updates_per_episode: 10,
            hidden_layers: 3,
            rmsprop_decay: 0.9,
            rmsprop_epsilon: 1e-8,
            epsilon_final: 0.01,
            epsilon_anneal_fraction: 0.8,
            maql_learning_rate: 0.1,
            test_episodes: 100,
        }
    }
}

/// One violated configuration invariant.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Violation {
    pub field: &'static str,
    pub message: String,
}

impl std::fmt::Display for Violation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}: {}", self.field, self.message)
    }
}

impl ScenarioConfig {
    /// Total number of orthogonal sub-bands, one per HUE and per CMTCD.
    pub fn num_sub_bands(&self) -> usize {
        self.num_hue + self.num_cmtcd()
    }

    pub fn num_cmtcd(&self) -> usize {
        self.num_clusters * self.cmtcd_per_cluster
    }

    pub fn num_tmtcd(&self) -> usize {
        self.num_clusters * self.tmtcd_per_cluster
    }

    /// Bandwidth of a single sub-band in Hz.
    pub fn sub_band_hz(&self) -> f64 {
        self.total_bandwidth_hz / self.num_sub_bands() as f64
    }

    pub fn noise_w(&self) -> f64 {
        dbm_to_watts(self.noise_power_dbm)
    }

    pub fn sinr_cap(&self) -> f64 {
        db_to_linear(self.sinr_cap_db)
    }

    /// Parses a `key = value` configuration text on top of the defaults.
    pub fn from_kv_str(text: &str) -> Result<Self> {
        let base = ScenarioConfig::default();
        let pairs = parse_kv(text)?;
        base.with_overrides(pairs.iter().map(|(k, v, _)| (k.as_str(), v.as_str())))
    }

    pub fn from_file(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::file(path, e))?;
        Self::from_kv_str(&text)
    }

    /// Returns a copy with the given `key = value` overrides applied.
    pub fn with_overrides<'a, I>(&self, pairs: I) -> Result<Self>
    where
        I: IntoIterator<Item = (&'a str, &'a str)>,
    {
        let mut map = match serde_json::to_value(self).expect("config serializes") {
            Value::Object(m) => m,
            _ => unreachable!(),
        };
        for (key, raw) in pairs {
            if !map.contains_key(key) {
                return Err(Error::UnknownKey(key.to_owned()));
            }
            map.insert(key.to_owned(), scalar_value(raw));
        }
        serde_json::from_value(Value::Object(map)).map_err(|e| Error::InvalidValue {
            key: offending_key(&e.to_string()),
            message: e.to_string(),
        })
    }

    /// Sets a single key.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        *self = self.with_overrides([(key, value)])?;
        Ok(())
    }

    /// Serializes every field as `key = value`, sorted by key.
    pub fn to_kv_string(&self) -> String {
        let mut out = String::new();
        for (k, v) in self.as_map() {
            let _ = writeln!(out, "{k} = {}", render_value(&v));
        }
        out
    }

    /// Fields that differ from the defaults, as `key = value` lines.
    pub fn diff_from_default(&self) -> Vec<String> {
        let base = ScenarioConfig::default().as_map();
        self.as_map()
            .into_iter()
            .filter(|(k, v)| base.get(k) != Some(v))
            .map(|(k, v)| format!("{k} = {}", render_value(&v)))
            .collect()
    }

    fn as_map(&self) -> Map<String, Value> {
        match serde_json::to_value(self).expect("config serializes") {
            Value::Object(m) => m,
            _ => unreachable!(),
        }
    }
}

fn render_value(v: &Value) -> String {
    match v {
        Value::String(s) => s.clone(),
        other => other.to_string(),
    }
}

fn offending_key(msg: &str) -> String {
    // serde_json does not expose the field path; keep the message readable.
    msg.split('`').nth(1).unwrap_or("?").to_owned()
}

fn scalar_value(raw: &str) -> Value {
    if let Ok(i) = raw.parse::<i64>() {
        return Value::from(i);
    }
    if let Ok(x) = raw.parse::<f64>() {
        if let Some(n) = serde_json::Number::from_f64(x) {
            return Value::Number(n);
        }
    }
    match raw {
        "true" => Value::Bool(true),
        "false" => Value::Bool(false),
        _ => Value::String(raw.to_owned()),
    }
}

/// Splits `key = value` text into (key, value, line number) triples.
/// `#` starts a comment; blank lines are skipped.
pub fn parse_kv(text: &str) -> Result<Vec<(String, String, usize)>> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let Some((k, v)) = line.split_once('=') else {
            return Err(Error::Parse {
                line: i + 1,
                message: format!("expected `key = value`, found `{line}`"),
            });
        };
        let (k, v) = (k.trim(), v.trim());
        if k.is_empty() || v.is_empty() {
            return Err(Error::Parse {
                line: i + 1,
                message: "empty key or value".into(),
            });
        }
        out.push((k.to_owned(), v.to_owned(), i + 1));
    }
    Ok(out)
}

/// Lists every violated invariant; an empty list means the configuration is
/// usable.
pub fn validate_config(cfg: &ScenarioConfig) -> Vec<Violation> {
    let mut v = Vec::new();
    let mut check = |ok: bool, field: &'static str, message: &str| {
        if !ok {
            v.push(Violation {
                field,
                message: message.to_owned(),
            });
        }
    };
    let pos = |x: f64| x.is_finite() && x > 0.0;
    let prob = |x: f64| (0.0..=1.0).contains(&x);

    check(pos(cfg.cell_radius_m), "cell_radius_m", "must be > 0");
    check(pos(cfg.cluster_radius_m), "cluster_radius_m", "must be > 0");
    check(cfg.num_hue + cfg.num_cmtcd() >= 1, "num_hue", "at least one sub-band owner (HUE or CMTCD) is required");
    check(cfg.num_clusters >= 1, "num_clusters", "must be >= 1");
    check(pos(cfg.total_bandwidth_hz), "total_bandwidth_hz", "must be > 0");
    for (field, dbm) in [
        ("noise_power_dbm", cfg.noise_power_dbm),
        ("circuit_power_dbm", cfg.circuit_power_dbm),
        ("p_bs_dbm", cfg.p_bs_dbm),
        ("p_cmtcd_dbm", cfg.p_cmtcd_dbm),
        ("p_max_dbm", cfg.p_max_dbm),
        ("sinr_min_h2h_db", cfg.sinr_min_h2h_db),
        ("sinr_min_cmtcd_db", cfg.sinr_min_cmtcd_db),
        ("sinr_cap_db", cfg.sinr_cap_db),
    ] {
        check(dbm.is_finite(), field, "must be finite");
    }
    check(
        cfg.energy_conversion > 0.0 && cfg.energy_conversion <= 1.0,
        "energy_conversion",
        "energy conversion efficiency must satisfy 0 < theta <= 1",
    );
    check(prob(cfg.cmtcd_ps_ratio), "cmtcd_ps_ratio", "power-splitting ratio must lie in [0, 1]");
    check(
        cfg.outage_target > 0.0 && cfg.outage_target < 1.0,
        "outage_target",
        "must lie in (0, 1)",
    );
    check(prob(cfg.payload_success_target), "payload_success_target", "must lie in [0, 1]");
    check(pos(cfg.payload_bits), "payload_bits", "must be > 0");
    check(cfg.time_budget_slots >= 1, "time_budget_slots", "must be >= 1");
    check(pos(cfg.slot_duration_s), "slot_duration_s", "must be > 0");
    check(cfg.power_levels >= 1, "power_levels", "discretization level count must be >= 1");
    check(cfg.ps_levels >= 1, "ps_levels", "discretization level count must be >= 1");
    check(pos(cfg.reward_weight), "reward_weight", "must be > 0");
    check(cfg.episodes >= 1, "episodes", "must be >= 1");
    check(cfg.target_sync >= 1, "target_sync", "must be >= 1");
    check(pos(cfg.learning_rate), "learning_rate", "must be > 0");
    check(
        cfg.shadowing_std_db.is_finite() && cfg.shadowing_std_db >= 0.0,
        "shadowing_std_db",
        "must be >= 0",
    );
    check(prob(cfg.discount), "discount", "must lie in [0, 1]");
    check(cfg.minibatch_size >= 1, "minibatch_size", "must be >= 1");
    check(
        cfg.replay_capacity >= cfg.minibatch_size,
        "replay_capacity",
        "must hold at least one minibatch",
    );
    check(cfg.hidden_layers >= 1, "hidden_layers", "must be >= 1");
    check(
        (0.0..1.0).contains(&cfg.rmsprop_decay),
        "rmsprop_decay",
        "must lie in [0, 1)",
    );
    check(pos(cfg.rmsprop_epsilon), "rmsprop_epsilon", "must be > 0");
    check(prob(cfg.epsilon_final), "epsilon_final", "must lie in [0, 1]");
    check(
        cfg.epsilon_anneal_fraction > 0.0 && cfg.epsilon_anneal_fraction <= 1.0,
        "epsilon_anneal_fraction",
        "must lie in (0, 1]",
    );
    check(prob(cfg.maql_learning_rate), "maql_learning_rate", "must lie in [0, 1]");
    check(cfg.test_episodes >= 1, "test_episodes", "must be >= 1");
    v
}

/// Planar position in metres.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const ORIGIN: Point = Point { x: 0.0, y: 0.0 };

    pub fn distance(self, other: Point) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DeviceKind {
    Critical,
    Tolerable,
}

/// A machine-type device attached to a cluster gateway.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Device {
    pub cluster: usize,
    pub position: Point,
}

/// Pre-assigned owner of a sub-band.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BandOwner {
    Hue(usize),
    Cmtcd(usize),
}

/// Node placement and sub-band ownership for one cell.
#[derive(Debug, Clone, PartialEq)]
pub struct Topology {
    pub bs: Point,
    pub hues: Vec<Point>,
    pub gateways: Vec<Point>,
    /// Critical devices, ordered cluster-major.
    pub cmtcds: Vec<Device>,
    /// Tolerable devices, ordered cluster-major.
    pub tmtcds: Vec<Device>,
    pub band_owner: Vec<BandOwner>,
}

impl Topology {
    /// Every machine-type device with its kind, critical devices first.
    pub fn mtcds(&self) -> impl Iterator<Item = (DeviceKind, &Device)> {
        self.cmtcds
            .iter()
            .map(|d| (DeviceKind::Critical, d))
            .chain(self.tmtcds.iter().map(|d| (DeviceKind::Tolerable, d)))
    }

    /// The sub-band pre-assigned to CMTCD `s`.
    pub fn cmtcd_band(&self, s: usize) -> usize {
        self.hues.len() + s
    }

    /// The sub-band pre-assigned to HUE `h`.
    pub fn hue_band(&self, h: usize) -> usize {
        h
    }
}

/// Uniform point in a disc, square-root-radius method.
pub fn uniform_in_disc<R: Rng + ?Sized>(center: Point, radius: f64, rng: &mut R) -> Point {
    let r = radius * rng.random::<f64>().sqrt();
    let phi = std::f64::consts::TAU * rng.random::<f64>();
    Point {
        x: center.x + r * phi.cos(),
        y: center.y + r * phi.sin(),
    }
}

/// Draws a cell: BS at the origin, HUEs and gateways uniform in the cell,
/// devices uniform in their cluster disc.
///
/// Draw order is HUEs, gateways, critical devices, then tolerable devices
/// slot-by-slot across clusters, so growing `tmtcd_per_cluster` under a fixed
/// seed only appends devices and leaves every earlier node in place.
pub fn generate_topology<R: Rng + ?Sized>(cfg: &ScenarioConfig, rng: &mut R) -> Topology {
    let bs = Point::ORIGIN;
    let hues = (0..cfg.num_hue)
        .map(|_| uniform_in_disc(bs, cfg.cell_radius_m, rng))
        .collect();
    let gateways: Vec<Point> = (0..cfg.num_clusters)
        .map(|_| uniform_in_disc(bs, cfg.cell_radius_m, rng))
        .collect();

    let mut cmtcds = Vec::with_capacity(cfg.num_cmtcd());
    for (m, &gw) in gateways.iter().enumerate() {
        for _ in 0..cfg.cmtcd_per_cluster {
            cmtcds.push(Device {
                cluster: m,
                position: uniform_in_disc(gw, cfg.cluster_radius_m, rng),
            });
        }
    }

    let per = cfg.tmtcd_per_cluster;
    let mut slots = vec![None; cfg.num_tmtcd()];
    for j in 0..per {
        for (m, &gw) in gateways.iter().enumerate() {
            slots[m * per + j] = Some(Device {
                cluster: m,
                position: uniform_in_disc(gw, cfg.cluster_radius_m, rng),
            });
        }
    }
    let tmtcds = slots.into_iter().map(|d| d.expect("filled")).collect();

    let band_owner = (0..cfg.num_hue)
        .map(BandOwner::Hue)
        .chain((0..cfg.num_cmtcd()).map(BandOwner::Cmtcd))
        .collect();

    Topology {
        bs,
        hues,
        gateways,
        cmtcds,
        tmtcds,
        band_owner,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn defaults_are_valid() {
        assert_eq!(validate_config(&ScenarioConfig::default()), vec![]);
    }

    #[test]
    fn zero_conversion_efficiency_is_one_violation() {
        let cfg = ScenarioConfig {
            energy_conversion: 0.0,
            ..Default::default()
        };
        let v = validate_config(&cfg);
        assert_eq!(v.len(), 1);
        assert_eq!(v[0].field, "energy_conversion");
    }

    #[test]
    fn zero_ps_levels_is_one_violation() {
        let cfg = ScenarioConfig {
            ps_levels: 0,
            ..Default::default()
        };
        let v = validate_config(&cfg);
        assert_eq!(v.len(), 1);
        assert_eq!(v[0].field, "ps_levels");
    }

    #[test]
    fn derived_band_counts() {
        let cfg = ScenarioConfig::default();
        assert_eq!(cfg.num_sub_bands(), 4);
        assert_eq!(cfg.sub_band_hz(), 1e6);
        assert_eq!(cfg.payload_bits, 24576.0);
        assert!((cfg.time_budget_slots as f64 * cfg.slot_duration_s - 0.1).abs() < 1e-15);
        let cfg = ScenarioConfig {
            num_hue: 3,
            total_bandwidth_hz: 5e6,
            ..Default::default()
        };
        assert_eq!(cfg.sub_band_hz() * cfg.num_sub_bands() as f64, 5e6);
    }

    #[test]
    fn kv_round_trip_and_errors() {
        let text = "# comment\np_max_dbm = 20 # inline\n\ntmtcd_per_cluster=3\nowner_interference = owner_transmitter\n";
        let cfg = ScenarioConfig::from_kv_str(text).unwrap();
        assert_eq!(cfg.p_max_dbm, 20.0);
        assert_eq!(cfg.tmtcd_per_cluster, 3);
        assert_eq!(cfg.owner_interference, OwnerInterference::OwnerTransmitter);
        assert_eq!(ScenarioConfig::from_kv_str(&cfg.to_kv_string()).unwrap(), cfg);
        assert_eq!(cfg.diff_from_default().len(), 3);

        assert!(matches!(
            ScenarioConfig::from_kv_str("bogus_key = 1"),
            Err(Error::UnknownKey(k)) if k == "bogus_key"
        ));
        assert!(matches!(
            ScenarioConfig::from_kv_str("p_max_dbm 20"),
            Err(Error::Parse { line: 1, .. })
        ));
        assert!(ScenarioConfig::from_kv_str("power_levels = 2.5").is_err());
        assert!(ScenarioConfig::from_kv_str("power_levels = many").is_err());
    }

    #[test]
    fn topology_is_seeded_and_bounded() {
        let cfg = ScenarioConfig::default();
        let a = generate_topology(&cfg, &mut ChaCha8Rng::seed_from_u64(7));
        let b = generate_topology(&cfg, &mut ChaCha8Rng::seed_from_u64(7));
        assert_eq!(a, b);
        for p in a.hues.iter().chain(&a.gateways) {
            assert!(p.distance(a.bs) <= cfg.cell_radius_m);
        }
        for d in a.cmtcds.iter().chain(&a.tmtcds) {
            assert!(d.position.distance(a.gateways[d.cluster]) <= cfg.cluster_radius_m);
        }
        assert_eq!(a.mtcds().count(), 6);
        assert_eq!(a.tmtcds.iter().filter(|d| d.cluster == 1).count(), 2);
    }

    #[test]
    fn band_owner_is_a_bijection_in_index_order() {
        let cfg = ScenarioConfig {
            num_hue: 3,
            num_clusters: 3,
            cmtcd_per_cluster: 2,
            ..Default::default()
        };
        let t = generate_topology(&cfg, &mut ChaCha8Rng::seed_from_u64(1));
        assert_eq!(t.band_owner.len(), cfg.num_sub_bands());
        let mut hues = [0; 3];
        let mut cms = vec![0; 6];
        for (k, owner) in t.band_owner.iter().enumerate() {
            match *owner {
                BandOwner::Hue(h) => {
                    hues[h] += 1;
                    assert_eq!(t.hue_band(h), k);
                }
                BandOwner::Cmtcd(s) => {
                    cms[s] += 1;
                    assert_eq!(t.cmtcd_band(s), k);
                }
            }
        }
        assert!(hues.iter().chain(&cms).all(|&c| c == 1));
    }

    #[test]
    fn growing_tolerable_count_keeps_existing_nodes() {
        let small = ScenarioConfig {
            tmtcd_per_cluster: 1,
            ..Default::default()
        };
        let big = ScenarioConfig {
            tmtcd_per_cluster: 3,
            ..Default::default()
        };
        let a = generate_topology(&small, &mut ChaCha8Rng::seed_from_u64(3));
        let b = generate_topology(&big, &mut ChaCha8Rng::seed_from_u64(3));
        assert_eq!(a.hues, b.hues);
        assert_eq!(a.gateways, b.gateways);
        assert_eq!(a.cmtcds, b.cmtcds);
        assert_eq!(a.tmtcds[0], b.tmtcds[0]);
        assert_eq!(a.tmtcds[1], b.tmtcds[3]);
    }
}
