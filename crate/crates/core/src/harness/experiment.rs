use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use crate::agents::{convergence_episode, run_testing, run_training, EpisodeStats, Scheme};
use crate::error::{Error, Result};
use crate::scenario::{parse_kv, validate_config, ScenarioConfig};

use super::io::{save_policy, write_stats_csv, Manifest};

/// Environment variable holding the number of sweep workers.
pub const WORKERS_ENV: &str = "SWIPT_WORKERS";

/// Swept configuration variable.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Sweep {
    None,
    TmtcdPerCluster,
    PMaxDbm,
    /// Total tolerable links; split evenly over the clusters.
    TolerableLinkCount,
}

impl Sweep {
    pub fn name(self) -> &'static str {
        match self {
            Sweep::None => "none",
            Sweep::TmtcdPerCluster => "tmtcd_per_cluster",
            Sweep::PMaxDbm => "p_max_dbm",
            Sweep::TolerableLinkCount => "tolerable_link_count",
        }
    }

    /// Applies one sweep value to `cfg`.
    pub fn apply(self, cfg: &ScenarioConfig, value: f64) -> Result<ScenarioConfig> {
        let mut out = cfg.clone();
        let count = |v: f64| -> Result<usize> {
            if v < 0.0 || v.fract() != 0.0 {
                return Err(Error::InvalidValue {
                    key: self.name().into(),
                    message: format!("{v} is not a nonnegative integer"),
                });
            }
            Ok(v as usize)
        };
        match self {
            Sweep::None => {}
            Sweep::TmtcdPerCluster => out.tmtcd_per_cluster = count(value)?,
            Sweep::PMaxDbm => out.p_max_dbm = value,
            Sweep::TolerableLinkCount => {
                let total = count(value)?;
                if total % cfg.num_clusters != 0 {
                    return Err(Error::InvalidValue {
                        key: self.name().into(),
                        message: format!(
                            "{total} tolerable links cannot be split over {} clusters",
                            cfg.num_clusters
                        ),
                    });
                }
                out.tmtcd_per_cluster = total / cfg.num_clusters;
            }
        }
        Ok(out)
    }
}

impl fmt::Display for Sweep {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Sweep {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        [
            Sweep::None,
            Sweep::TmtcdPerCluster,
            Sweep::PMaxDbm,
            Sweep::TolerableLinkCount,
        ]
        .into_iter()
        .find(|x| x.name() == s.trim())
        .ok_or_else(|| Error::InvalidValue {
            key: "sweep".into(),
            message: format!("unknown sweep variable '{s}'"),
        })
    }
}

/// A scheme x sweep-value x seed matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentSpec {
    pub schemes: Vec<Scheme>,
    pub sweep: Sweep,
    pub values: Vec<f64>,
    pub seeds: Vec<u64>,
    pub output_dir: PathBuf,
    pub test_episodes: usize,
    pub config: ScenarioConfig,
}

fn list<T: FromStr>(key: &str, raw: &str) -> Result<Vec<T>> {
    raw.split(',')
        .map(|s| s.trim())
        .filter(|s| !s.is_empty())
        .map(|s| {
            s.parse().map_err(|_| Error::InvalidValue {
                key: key.into(),
                message: format!("cannot parse '{s}'"),
            })
        })
        .collect()
}

impl ExperimentSpec {
    /// Parses a spec text. Keys: `schemes`, `sweep`, `values`, `seeds`,
    /// `output_dir`, `test_episodes`, `config` (path of a base config,
    /// relative to `base_dir`); any other key overrides the configuration.
    pub fn parse(text: &str, base_dir: &Path) -> Result<Self> {
        let pairs = parse_kv(text)?;
        let mut schemes = vec![Scheme::MadrlAspra];
        let mut sweep = Sweep::None;
        let mut values = Vec::new();
        let mut seeds = vec![1];
        let mut output_dir = PathBuf::from("results");
        let mut test_episodes = None;
        let mut config_path = None;
        let mut overrides = Vec::new();
        for (key, value, _) in &pairs {
            match key.as_str() {
                "schemes" | "scheme" => schemes = list(key, value)?,
                "sweep" => sweep = value.parse()?,
                "values" => values = list(key, value)?,
                "seeds" => seeds = list(key, value)?,
                "output_dir" => output_dir = base_dir.join(value),
                "test_episodes" => test_episodes = Some(list::<usize>(key, value)?[0]),
                "config" => config_path = Some(base_dir.join(value)),
                _ => overrides.push((key.as_str(), value.as_str())),
            }
        }
        let base = match config_path {
            Some(p) => ScenarioConfig::from_file(p)?,
            None => ScenarioConfig::default(),
        };
        let config = base.with_overrides(overrides)?;
        let spec = ExperimentSpec {
            schemes,
            sweep,
            values,
            seeds,
            output_dir,
            test_episodes: test_episodes.unwrap_or(config.test_episodes),
            config,
        };
        spec.check()?;
        Ok(spec)
    }

    pub fn from_file(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::file(path, e))?;
        Self::parse(&text, path.parent().unwrap_or(Path::new(".")))
    }

    /// Rejects empty lists and sweep values that produce invalid configs.
    pub fn check(&self) -> Result<()> {
        if self.schemes.is_empty() || self.seeds.is_empty() {
            return Err(Error::InvalidConfig("schemes and seeds must be nonempty".into()));
        }
        if self.sweep != Sweep::None && self.values.is_empty() {
            return Err(Error::InvalidConfig(format!("sweep {} has no values", self.sweep)));
        }
        for &v in &self.sweep_values() {
            let cfg = self.sweep.apply(&self.config, v)?;
            let violations = validate_config(&cfg);
            if !violations.is_empty() {
                let text: Vec<String> = violations.iter().map(|v| v.to_string()).collect();
                return Err(Error::InvalidConfig(format!(
                    "{} = {v}: {}",
                    self.sweep,
                    text.join("; ")
                )));
            }
        }
        Ok(())
    }

    /// Sweep values, or a single placeholder when nothing is swept.
    pub fn sweep_values(&self) -> Vec<f64> {
        if self.sweep == Sweep::None {
            vec![0.0]
        } else {
            self.values.clone()
        }
    }

    /// Directory of one cell: `<out>[/<sweep>_<value>]/<scheme>/<seed>`.
    pub fn cell_dir(&self, value: f64, scheme: Scheme, seed: u64) -> PathBuf {
        let mut dir = self.output_dir.clone();
        if self.sweep != Sweep::None {
            dir.push(format!("{}_{}", self.sweep, super::io::fmt_num(value)));
        }
        dir.push(scheme.name());
        dir.push(seed.to_string());
        dir
    }
}

/// One row of the results table.
#[derive(Debug, Clone, PartialEq)]
pub struct ResultRow {
    pub scheme: Scheme,
    pub sweep: Sweep,
    pub sweep_value: f64,
    pub seed: u64,
    pub total_mtcds: usize,
    pub tolerable_links: usize,
    pub p_max_dbm: f64,
    /// Testing mean energy efficiency.
    pub aggregate_ee: f64,
    pub h2h_satisfaction: f64,
    pub cmtcd_outage: f64,
    pub payload_success: f64,
    pub convergence_episode: usize,
    pub mean_harvested_w: f64,
}

fn mean(stats: &[EpisodeStats], f: impl Fn(&EpisodeStats) -> f64) -> f64 {
    if stats.is_empty() {
        return f64::NAN;
    }
    stats.iter().map(f).sum::<f64>() / stats.len() as f64
}

/// Trains and tests one cell; writes its training log, testing log,
/// weights and manifest under `dir` when given.
pub fn run_cell(
    cfg: &ScenarioConfig,
    scheme: Scheme,
    seed: u64,
    test_episodes: usize,
    sweep: Sweep,
    sweep_value: f64,
    dir: Option<&Path>,
) -> Result<ResultRow> {
    let run = run_training(cfg, scheme, seed, None)?;
    let test = run_testing(&run.policy, cfg, scheme, seed, test_episodes, None)?;
    if let Some(dir) = dir {
        std::fs::create_dir_all(dir).map_err(|e| Error::file(dir, e))?;
        write_stats_csv(dir.join("training.csv"), &run.log, true)?;
        write_stats_csv(dir.join("testing.csv"), &test, false)?;
        save_policy(dir, &run.policy)?;
        Manifest::of(scheme, seed, &run.policy).write(dir, cfg)?;
    }
    let rewards: Vec<f64> = run.log.iter().map(|s| s.mean_reward).collect();
    Ok(ResultRow {
        scheme,
        sweep,
        sweep_value,
        seed,
        total_mtcds: cfg.num_cmtcd() + cfg.num_tmtcd(),
        tolerable_links: cfg.num_tmtcd(),
        p_max_dbm: cfg.p_max_dbm,
        aggregate_ee: mean(&test, |s| s.mean_eta),
        h2h_satisfaction: mean(&test, |s| s.h2h_satisfaction),
        cmtcd_outage: mean(&test, |s| s.cmtcd_outage),
        payload_success: mean(&test, |s| s.payload_success),
        convergence_episode: convergence_episode(&rewards),
        mean_harvested_w: mean(&test, |s| s.mean_harvested_w),
    })
}

/// Worker count from the environment, defaulting to the available cores.
pub fn worker_count() -> usize {
    std::env::var(WORKERS_ENV)
        .ok()
        .and_then(|v| v.parse().ok())
        .filter(|&n: &usize| n > 0)
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()))
}

/// Runs every cell of `spec` on `workers` threads and returns the rows
/// sorted by (sweep value, scheme, seed). With `write_cells`, each cell's
/// artifacts are written under its directory.
pub fn run_experiment(spec: &ExperimentSpec, workers: usize, write_cells: bool) -> Result<Vec<ResultRow>> {
    spec.check()?;
    let mut cells = Vec::new();
    for &value in &spec.sweep_values() {
        for &scheme in &spec.schemes {
            for &seed in &spec.seeds {
                cells.push((value, scheme, seed));
            }
        }
    }
    let next = AtomicUsize::new(0);
    let results: Mutex<Vec<Result<ResultRow>>> = Mutex::new(Vec::with_capacity(cells.len()));
    std::thread::scope(|scope| {
        for _ in 0..workers.clamp(1, cells.len().max(1)) {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::SeqCst);
                let Some(&(value, scheme, seed)) = cells.get(i) else {
                    break;
                };
                let row = spec.sweep.apply(&spec.config, value).and_then(|cfg| {
                    let dir = spec.cell_dir(value, scheme, seed);
                    run_cell(
                        &cfg,
                        scheme,
                        seed,
                        spec.test_episodes,
                        spec.sweep,
                        value,
                        write_cells.then_some(dir.as_path()),
                    )
                });
                results.lock().expect("no poisoned workers").push(row);
            });
        }
    });
    let mut rows = results
        .into_inner()
        .expect("no poisoned workers")
        .into_iter()
        .collect::<Result<Vec<_>>>()?;
    sort_rows(&mut rows);
    Ok(rows)
}

pub fn sort_rows(rows: &mut [ResultRow]) {
    rows.sort_by(|a, b| {
        a.sweep_value
            .total_cmp(&b.sweep_value)
            .then(a.scheme.cmp(&b.scheme))
            .then(a.seed.cmp(&b.seed))
    });
}
