use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use crate::env::ObservationLayout;
use crate::error::{Error, Result};

/// Quantization levels per state feature.
pub const MAQL_BINS: u8 = 4;

/// (best target gain, mean interference, payload remaining, time remaining)
/// bins.
pub type StateKey = [u8; 4];

fn bin(unit: f64) -> u8 {
    let b = (unit * MAQL_BINS as f64).floor();
    b.clamp(0.0, (MAQL_BINS - 1) as f64) as u8
}

/// Coarse table key of an observation. Gains are read in their normalized
/// [-1, 1] scale, the other features in [0, 1].
pub fn maql_discretize(obs: &[f64], layout: &ObservationLayout) -> StateKey {
    let k = layout.sub_bands;
    let gains = &obs[layout.target_gain..layout.target_gain + k];
    let best = gains.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let interference = &obs[layout.interference..layout.interference + k];
    let mean_i = interference.iter().sum::<f64>() / k as f64;
    [
        bin((best + 1.0) / 2.0),
        bin(mean_i),
        bin(obs[layout.payload]),
        bin(obs[layout.time]),
    ]
}

/// Sparse Q-table; unseen keys read as all-zero rows.
#[derive(Debug, Clone, PartialEq)]
pub struct QTable {
    pub actions: usize,
    pub learning_rate: f64,
    pub discount: f64,
    pub values: BTreeMap<StateKey, Vec<f64>>,
}

impl QTable {
    pub fn new(actions: usize, learning_rate: f64, discount: f64) -> Self {
        QTable {
            actions,
            learning_rate,
            discount,
            values: BTreeMap::new(),
        }
    }

    pub fn row(&self, key: &StateKey) -> Vec<f64> {
        self.values
            .get(key)
            .cloned()
            .unwrap_or_else(|| vec![0.0; self.actions])
    }

    pub fn get(&self, key: &StateKey, a: usize) -> f64 {
        self.values.get(key).map_or(0.0, |r| r[a])
    }

    /// Tabular Q-learning update; returns the TD error before the update.
    pub fn update(&mut self, key: StateKey, a: usize, reward: f64, next: StateKey, terminal: bool) -> f64 {
        let future = if terminal {
            0.0
        } else {
            self.values
                .get(&next)
                .map_or(0.0, |r| r.iter().copied().fold(f64::NEG_INFINITY, f64::max))
        };
        let actions = self.actions;
        let q = self.values.entry(key).or_insert_with(|| vec![0.0; actions]);
        let delta = reward + self.discount * future - q[a];
        q[a] += self.learning_rate * delta;
        delta
    }

    /// Text format: header line, then one line per key with all values.
    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut out = format!(
            "qtable {} {:e} {:e}\n",
            self.actions, self.learning_rate, self.discount
        );
        for (key, row) in &self.values {
            let _ = write!(out, "{} {} {} {}", key[0], key[1], key[2], key[3]);
            for v in row {
                let _ = write!(out, " {v:e}");
            }
            out.push('\n');
        }
        let path = path.as_ref();
        std::fs::write(path, out).map_err(|e| Error::file(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::file(path, e))?;
        let bad = |line: usize, message: &str| Error::Parse {
            line,
            message: message.to_string(),
        };
        let mut lines = text.lines();
        let header: Vec<&str> = lines.next().unwrap_or("").split_whitespace().collect();
        if header.len() != 4 || header[0] != "qtable" {
            return Err(bad(1, "missing qtable header"));
        }
        let actions: usize = header[1].parse().map_err(|_| bad(1, "action count"))?;
        let lr: f64 = header[2].parse().map_err(|_| bad(1, "learning rate"))?;
        let discount: f64 = header[3].parse().map_err(|_| bad(1, "discount"))?;
        let mut table = QTable::new(actions, lr, discount);
        for (i, line) in lines.enumerate() {
            let fields: Vec<&str> = line.split_whitespace().collect();
            if fields.len() != 4 + actions {
                return Err(bad(i + 2, "wrong field count"));
            }
            let mut key = [0u8; 4];
            for (k, f) in key.iter_mut().zip(&fields[..4]) {
                *k = f.parse().map_err(|_| bad(i + 2, "key"))?;
            }
            let row = fields[4..]
                .iter()
                .map(|f| f.parse::<f64>().map_err(|_| bad(i + 2, "value")))
                .collect::<Result<Vec<_>>>()?;
            table.values.insert(key, row);
        }
        Ok(table)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenario::ScenarioConfig;

    fn layout() -> ObservationLayout {
        ObservationLayout::new(&ScenarioConfig::default())
    }

    #[test]
    fn full_payload_first_slot_top_bins() {
        let l = layout();
        let mut obs = vec![0.0; l.len];
        obs[l.payload] = 1.0;
        obs[l.time] = 1.0;
        let key = maql_discretize(&obs, &l);
        assert_eq!((key[2], key[3]), (3, 3));
    }

    #[test]
    fn sub_resolution_changes_keep_key() {
        let l = layout();
        let mut a = vec![0.1; l.len];
        a[l.payload] = 0.6;
        let mut b = a.clone();
        b[l.payload] = 0.61;
        b[l.target_gain] = 0.1001;
        assert_eq!(maql_discretize(&a, &l), maql_discretize(&b, &l));
    }

    #[test]
    fn key_space_is_bounded() {
        let l = layout();
        let mut keys = std::collections::BTreeSet::new();
        for i in 0..2000 {
            let v = (i as f64 * 0.618).fract() * 4.0 - 2.0;
            let obs: Vec<f64> = (0..l.len).map(|j| v * (j as f64 + 1.0).sin()).collect();
            keys.insert(maql_discretize(&obs, &l));
        }
        assert!(keys.len() <= 256);
        assert!(keys.iter().all(|k| k.iter().all(|&b| b < MAQL_BINS)));
    }

    #[test]
    fn zero_learning_rate_is_inert() {
        let mut t = QTable::new(3, 0.0, 0.9);
        t.update([0; 4], 1, 5.0, [1; 4], false);
        assert!(t.row(&[0; 4]).iter().all(|&v| v == 0.0));
    }

    #[test]
    fn unit_learning_rate_fresh_table() {
        let mut t = QTable::new(3, 1.0, 0.0);
        t.update([0; 4], 1, 1.0, [1; 4], false);
        assert_eq!(t.get(&[0; 4], 1), 1.0);
    }

    #[test]
    fn repeated_updates_reach_fixed_point() {
        let mut t = QTable::new(2, 0.1, 0.9);
        t.values.insert([1; 4], vec![2.0, 4.0]);
        for _ in 0..500 {
            t.update([0; 4], 0, 1.0, [1; 4], false);
        }
        assert!((t.get(&[0; 4], 0) - (1.0 + 0.9 * 4.0)).abs() < 1e-9);
    }

    #[test]
    fn save_load_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let mut t = QTable::new(3, 0.1, 0.9);
        t.update([0, 1, 2, 3], 2, 0.123456789, [3; 4], false);
        t.update([3, 3, 3, 3], 0, -1.0 / 3.0, [0; 4], true);
        let path = dir.path().join("t.qtable");
        t.save(&path).unwrap();
        assert_eq!(QTable::load(&path).unwrap(), t);
    }
}
