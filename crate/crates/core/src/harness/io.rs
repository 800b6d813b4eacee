use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use crate::agents::{EpisodeStats, Policy, QTable, Scheme, TraceRow};
use crate::error::{Error, Result};
use crate::neural::Mlp;
use crate::scenario::{parse_kv, ScenarioConfig};

use super::experiment::{ResultRow, Sweep};

/// Number with 9 significant digits, trailing zeros removed; scientific
/// notation outside [1e-5, 1e9).
pub fn fmt_num(x: f64) -> String {
    if x.is_nan() {
        return "NaN".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if x == 0.0 {
        return "0".into();
    }
    let sci = format!("{x:.8e}");
    let (mantissa, exp) = sci.split_once('e').expect("exponent");
    let exp: i32 = exp.parse().expect("integer exponent");
    let trim = |s: String| -> String {
        if s.contains('.') {
            s.trim_end_matches('0').trim_end_matches('.').to_string()
        } else {
            s
        }
    };
    if (-5..9).contains(&exp) {
        let decimals = (8 - exp).max(0) as usize;
        trim(format!("{x:.decimals$}"))
    } else {
        format!("{}e{exp}", trim(mantissa.to_string()))
    }
}

fn csv_writer(path: &Path) -> Result<csv::Writer<std::fs::File>> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(parent).map_err(|e| Error::file(parent, e))?;
    }
    csv::Writer::from_path(path).map_err(|e| match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::file(path, io),
        other => Error::Domain(format!("{}: {other:?}", path.display())),
    })
}

/// Training log (`training = true`) or testing log CSV.
pub fn write_stats_csv(path: impl AsRef<Path>, stats: &[EpisodeStats], training: bool) -> Result<()> {
    let mut w = csv_writer(path.as_ref())?;
    if training {
        w.write_record(["episode", "mean_reward", "mean_eta", "mean_loss", "epsilon"])?;
        for s in stats {
            w.write_record([
                s.episode.to_string(),
                fmt_num(s.mean_reward),
                fmt_num(s.mean_eta),
                fmt_num(s.mean_loss),
                fmt_num(s.epsilon),
            ])?;
        }
    } else {
        w.write_record([
            "episode",
            "mean_reward",
            "mean_eta",
            "h2h_satisfaction",
            "cmtcd_outage",
            "payload_success",
            "mean_harvested_w",
        ])?;
        for s in stats {
            w.write_record([
                s.episode.to_string(),
                fmt_num(s.mean_reward),
                fmt_num(s.mean_eta),
                fmt_num(s.h2h_satisfaction),
                fmt_num(s.cmtcd_outage),
                fmt_num(s.payload_success),
                fmt_num(s.mean_harvested_w),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Reads (episode, mean_reward) pairs from a training or testing log.
pub fn read_reward_curve(path: impl AsRef<Path>) -> Result<Vec<(f64, f64)>> {
    let path = path.as_ref();
    let mut r = csv::Reader::from_path(path)?;
    let headers = r.headers()?.clone();
    let col = |name: &str| {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::Domain(format!("{}: missing column {name}", path.display())))
    };
    let (ep, rew) = (col("episode")?, col("mean_reward")?);
    let mut out = Vec::new();
    for rec in r.records() {
        let rec = rec?;
        let parse = |i: usize| {
            rec[i]
                .parse::<f64>()
                .map_err(|_| Error::Domain(format!("{}: bad number '{}'", path.display(), &rec[i])))
        };
        out.push((parse(ep)?, parse(rew)?));
    }
    Ok(out)
}

pub const RESULT_HEADER: [&str; 13] = [
    "scheme",
    "sweep",
    "sweep_value",
    "seed",
    "total_mtcds",
    "tolerable_links",
    "p_max_dbm",
    "aggregate_ee",
    "h2h_satisfaction",
    "cmtcd_outage",
    "payload_success",
    "convergence_episode",
    "mean_harvested_w",
];

pub fn write_results_csv(path: impl AsRef<Path>, rows: &[ResultRow]) -> Result<()> {
    let mut w = csv_writer(path.as_ref())?;
    w.write_record(RESULT_HEADER)?;
    for r in rows {
        w.write_record([
            r.scheme.name().to_string(),
            r.sweep.name().to_string(),
            fmt_num(r.sweep_value),
            r.seed.to_string(),
            r.total_mtcds.to_string(),
            r.tolerable_links.to_string(),
            fmt_num(r.p_max_dbm),
            fmt_num(r.aggregate_ee),
            fmt_num(r.h2h_satisfaction),
            fmt_num(r.cmtcd_outage),
            fmt_num(r.payload_success),
            r.convergence_episode.to_string(),
            fmt_num(r.mean_harvested_w),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_results_csv(path: impl AsRef<Path>) -> Result<Vec<ResultRow>> {
    let path = path.as_ref();
    let mut r = csv::Reader::from_path(path)?;
    let headers = r.headers()?.clone();
    if headers.iter().ne(RESULT_HEADER.iter().copied()) {
        return Err(Error::Domain(format!("{}: unexpected header", path.display())));
    }
    let mut rows = Vec::new();
    for (i, rec) in r.records().enumerate() {
        let rec = rec?;
        let bad = |field: &str| Error::Parse {
            line: i + 2,
            message: format!("bad {field}"),
        };
        let num = |j: usize| rec[j].parse::<f64>().map_err(|_| bad(RESULT_HEADER[j]));
        let int = |j: usize| rec[j].parse::<usize>().map_err(|_| bad(RESULT_HEADER[j]));
        rows.push(ResultRow {
            scheme: rec[0].parse()?,
            sweep: rec[1].parse::<Sweep>()?,
            sweep_value: num(2)?,
            seed: rec[3].parse().map_err(|_| bad("seed"))?,
            total_mtcds: int(4)?,
            tolerable_links: int(5)?,
            p_max_dbm: num(6)?,
            aggregate_ee: num(7)?,
            h2h_satisfaction: num(8)?,
            cmtcd_outage: num(9)?,
            payload_success: num(10)?,
            convergence_episode: int(11)?,
            mean_harvested_w: num(12)?,
        });
    }
    Ok(rows)
}

pub fn write_trace_csv(path: impl AsRef<Path>, rows: &[TraceRow]) -> Result<()> {
    let mut w = csv_writer(path.as_ref())?;
    w.write_record(["episode", "t", "agent", "o", "p_dBm", "rho", "SINR_dB", "C_bits", "EH_W", "R"])?;
    for r in rows {
        w.write_record([
            r.episode.to_string(),
            r.t.to_string(),
            r.agent.to_string(),
            r.sub_band.to_string(),
            fmt_num(r.p_dbm),
            fmt_num(r.rho),
            fmt_num(r.sinr_db),
            fmt_num(r.c_bits),
            fmt_num(r.eh_w),
            fmt_num(r.reward),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Description of a saved policy directory.
#[derive(Debug, Clone, PartialEq)]
pub struct Manifest {
    pub scheme: Scheme,
    pub seed: u64,
    pub agents: usize,
    pub shared: bool,
    pub tabular: bool,
}

impl Manifest {
    pub const FILE: &'static str = "manifest.txt";

    pub fn of(scheme: Scheme, seed: u64, policy: &Policy) -> Self {
        Manifest {
            scheme,
            seed,
            agents: policy.num_agents(),
            shared: matches!(policy, Policy::Shared { .. }),
            tabular: matches!(policy, Policy::Tabular(_)),
        }
    }

    /// Writes the manifest followed by the configuration differences from
    /// the defaults (as comments) and the full configuration to
    /// `config.txt`.
    pub fn write(&self, dir: &Path, cfg: &ScenarioConfig) -> Result<()> {
        let mut text = format!(
            "scheme = {}\nseed = {}\nagents = {}\nshared = {}\ntabular = {}\n",
            self.scheme, self.seed, self.agents, self.shared, self.tabular
        );
        let diff = cfg.diff_from_default();
        if !diff.is_empty() {
            text.push_str("# configuration differences from defaults:\n");
            for line in diff {
                let _ = writeln!(text, "#   {line}");
            }
        }
        let path = dir.join(Self::FILE);
        std::fs::write(&path, text).map_err(|e| Error::file(&path, e))?;
        let path = dir.join("config.txt");
        std::fs::write(&path, cfg.to_kv_string()).map_err(|e| Error::file(&path, e))
    }

    pub fn read(dir: &Path) -> Result<Self> {
        let path = dir.join(Self::FILE);
        let text = std::fs::read_to_string(&path).map_err(|e| Error::file(&path, e))?;
        let pairs = parse_kv(&text)?;
        let get = |key: &str| {
            pairs
                .iter()
                .find(|(k, _, _)| k == key)
                .map(|(_, v, _)| v.as_str())
                .ok_or_else(|| Error::Domain(format!("{}: missing {key}", path.display())))
        };
        let bad = |key: &str| Error::InvalidValue {
            key: key.into(),
            message: format!("in {}", path.display()),
        };
        Ok(Manifest {
            scheme: get("scheme")?.parse()?,
            seed: get("seed")?.parse().map_err(|_| bad("seed"))?,
            agents: get("agents")?.parse().map_err(|_| bad("agents"))?,
            shared: get("shared")?.parse().map_err(|_| bad("shared"))?,
            tabular: get("tabular")?.parse().map_err(|_| bad("tabular"))?,
        })
    }
}

fn agent_path(dir: &Path, i: usize, ext: &str) -> PathBuf {
    dir.join(format!("agent_{i}.{ext}"))
}

/// Writes `agent_<i>.weights` (or `.qtable`) files. A shared network is
/// written once as `agent_0.weights`.
pub fn save_policy(dir: &Path, policy: &Policy) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::file(dir, e))?;
    match policy {
        Policy::Independent(nets) => {
            for (i, net) in nets.iter().enumerate() {
                net.save(agent_path(dir, i, "weights"))?;
            }
        }
        Policy::Shared { net, .. } => net.save(agent_path(dir, 0, "weights"))?,
        Policy::Tabular(tables) => {
            for (i, t) in tables.iter().enumerate() {
                t.save(agent_path(dir, i, "qtable"))?;
            }
        }
    }
    Ok(())
}

pub fn load_policy(dir: &Path, manifest: &Manifest) -> Result<Policy> {
    if manifest.tabular {
        let tables = (0..manifest.agents)
            .map(|i| QTable::load(agent_path(dir, i, "qtable")))
            .collect::<Result<Vec<_>>>()?;
        Ok(Policy::Tabular(tables))
    } else if manifest.shared {
        Ok(Policy::Shared {
            net: Mlp::load(agent_path(dir, 0, "weights"))?,
            agents: manifest.agents,
        })
    } else {
        let nets = (0..manifest.agents)
            .map(|i| Mlp::load(agent_path(dir, i, "weights")))
            .collect::<Result<Vec<_>>>()?;
        Ok(Policy::Independent(nets))
    }
}
