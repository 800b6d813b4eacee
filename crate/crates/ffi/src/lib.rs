//! C interface to the simulator.
//!
//! Every fallible function returns a [`SwiptStatus`]; on failure a message
//! is kept per thread and can be read with [`swipt_last_error`]. Handles are
//! opaque and must be released with their `_free` function.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};

use swipt_core::agents::{convergence_episode, run_testing, run_training, Scheme};
use swipt_core::channel::path_loss_db;
use swipt_core::env::Env;
use swipt_core::metrics::lemma1_probability;
use swipt_core::rng::Stream;
use swipt_core::scenario::{validate_config, ScenarioConfig};
use swipt_core::Error;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SwiptStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    InvalidConfig = 3,
    Io = 4,
    BufferTooSmall = 5,
    Panic = 6,
}

/// Scenario configuration handle.
pub struct SwiptConfig(ScenarioConfig);

/// Environment handle.
pub struct SwiptEnv(Env);

/// Outcome of [`swipt_train_and_test`].
#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct SwiptSummary {
    pub mean_eta: f64,
    pub mean_reward: f64,
    pub h2h_satisfaction: f64,
    pub cmtcd_outage: f64,
    pub payload_success: f64,
    pub convergence_episode: usize,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: impl Into<String>) {
    let msg = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(msg).unwrap_or_default());
}

fn status_of(err: &Error) -> SwiptStatus {
    match err {
        Error::Io(_) | Error::File { .. } | Error::Csv(_) => SwiptStatus::Io,
        Error::InvalidConfig(_) | Error::UnknownKey(_) | Error::Parse { .. } => {
            SwiptStatus::InvalidConfig
        }
        _ => SwiptStatus::InvalidArgument,
    }
}

fn fail(status: SwiptStatus, msg: impl Into<String>) -> SwiptStatus {
    set_error(msg);
    status
}

fn guard(f: impl FnOnce() -> Result<(), SwiptStatus>) -> SwiptStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_error("");
            SwiptStatus::Ok
        }
        Ok(Err(status)) => status,
        Err(_) => fail(SwiptStatus::Panic, "internal panic"),
    }
}

fn check<T>(r: swipt_core::Result<T>) -> Result<T, SwiptStatus> {
    r.map_err(|e| fail(status_of(&e), e.to_string()))
}

fn non_null<T>(p: *const T, what: &str) -> Result<(), SwiptStatus> {
    if p.is_null() {
        Err(fail(SwiptStatus::NullPointer, format!("{what} is null")))
    } else {
        Ok(())
    }
}

unsafe fn str_arg<'a>(p: *const c_char, what: &str) -> Result<&'a str, SwiptStatus> {
    non_null(p, what)?;
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| fail(SwiptStatus::InvalidArgument, format!("{what} is not UTF-8")))
}

/// Message describing the last failure on this thread; empty after a
/// success. Valid until the next call on the same thread.
#[no_mangle]
pub extern "C" fn swipt_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn swipt_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Default scenario configuration.
///
/// # Safety
/// `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn swipt_config_default(out: *mut *mut SwiptConfig) -> SwiptStatus {
    guard(|| {
        non_null(out, "out")?;
        *out = Box::into_raw(Box::new(SwiptConfig(ScenarioConfig::default())));
        Ok(())
    })
}

/// Configuration read from a `key = value` file; unspecified keys keep
/// their defaults.
///
/// # Safety
/// `path` must be a NUL-terminated string and `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn swipt_config_from_file(
    path: *const c_char,
    out: *mut *mut SwiptConfig,
) -> SwiptStatus {
    guard(|| {
        non_null(out, "out")?;
        let path = str_arg(path, "path")?;
        let cfg = check(ScenarioConfig::from_file(path))?;
        *out = Box::into_raw(Box::new(SwiptConfig(cfg)));
        Ok(())
    })
}

/// Set one field by its configuration-file key.
///
/// # Safety
/// `cfg` must come from this library; `key` and `value` must be
/// NUL-terminated strings.
#[no_mangle]
pub unsafe extern "C" fn swipt_config_set(
    cfg: *mut SwiptConfig,
    key: *const c_char,
    value: *const c_char,
) -> SwiptStatus {
    guard(|| {
        non_null(cfg, "cfg")?;
        let key = str_arg(key, "key")?;
        let value = str_arg(value, "value")?;
        check((*cfg).0.set(key, value))
    })
}

/// Check every constraint; writes the number of violations to `count`
/// (may be null) and returns `SWIPT_STATUS_INVALID_CONFIG` listing them
/// when there are any.
///
/// # Safety
/// `cfg` must come from this library; `count` null or valid for writes.
#[no_mangle]
pub unsafe extern "C" fn swipt_config_validate(
    cfg: *const SwiptConfig,
    count: *mut usize,
) -> SwiptStatus {
    guard(|| {
        non_null(cfg, "cfg")?;
        let violations = validate_config(&(*cfg).0);
        if !count.is_null() {
            *count = violations.len();
        }
        if violations.is_empty() {
            return Ok(());
        }
        let msg: Vec<String> = violations.iter().map(|v| v.to_string()).collect();
        Err(fail(SwiptStatus::InvalidConfig, msg.join("; ")))
    })
}

/// # Safety
/// `cfg` must be null or come from this library and not be used again.
#[no_mangle]
pub unsafe extern "C" fn swipt_config_free(cfg: *mut SwiptConfig) {
    if !cfg.is_null() {
        drop(Box::from_raw(cfg));
    }
}

/// Environment over a fixed topology drawn from `seed`. `swipt` false
/// disables power splitting.
///
/// # Safety
/// `cfg` must come from this library and `out` be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn swipt_env_new(
    cfg: *const SwiptConfig,
    swipt: bool,
    seed: u64,
    out: *mut *mut SwiptEnv,
) -> SwiptStatus {
    guard(|| {
        non_null(cfg, "cfg")?;
        non_null(out, "out")?;
        let env = check(Env::new(&(*cfg).0, swipt, seed, Stream::Environment))?;
        *out = Box::into_raw(Box::new(SwiptEnv(env)));
        Ok(())
    })
}

/// # Safety
/// `env` must be null or come from this library and not be used again.
#[no_mangle]
pub unsafe extern "C" fn swipt_env_free(env: *mut SwiptEnv) {
    if !env.is_null() {
        drop(Box::from_raw(env));
    }
}

/// Number of learning agents (tolerable links); 0 for a null handle.
///
/// # Safety
/// `env` must be null or come from this library.
#[no_mangle]
pub unsafe extern "C" fn swipt_env_num_agents(env: *const SwiptEnv) -> usize {
    env.as_ref().map_or(0, |e| e.0.num_agents())
}

/// Length of one agent's observation; 0 for a null handle.
///
/// # Safety
/// `env` must be null or come from this library.
#[no_mangle]
pub unsafe extern "C" fn swipt_env_obs_len(env: *const SwiptEnv) -> usize {
    env.as_ref().map_or(0, |e| e.0.obs_len())
}

/// Size of each agent's discrete action set; 0 for a null handle.
///
/// # Safety
/// `env` must be null or come from this library.
#[no_mangle]
pub unsafe extern "C" fn swipt_env_action_count(env: *const SwiptEnv) -> usize {
    env.as_ref().map_or(0, |e| e.0.action_space().len())
}

unsafe fn write_observations(
    obs: &[Vec<f64>],
    out: *mut f64,
    capacity: usize,
) -> Result<(), SwiptStatus> {
    let needed: usize = obs.iter().map(Vec::len).sum();
    if needed == 0 {
        return Ok(());
    }
    non_null(out, "obs_out")?;
    if capacity < needed {
        return Err(fail(
            SwiptStatus::BufferTooSmall,
            format!("observation buffer holds {capacity} values, need {needed}"),
        ));
    }
    let dst = std::slice::from_raw_parts_mut(out, needed);
    for (chunk, o) in dst.chunks_mut(obs[0].len()).zip(obs) {
        chunk.copy_from_slice(o);
    }
    Ok(())
}

/// Start episode `episode` with exploration rate `epsilon` in the
/// fingerprint; writes `num_agents * obs_len` values, agent-major.
///
/// # Safety
/// `env` must come from this library; `obs_out` must hold `capacity`
/// doubles.
#[no_mangle]
pub unsafe extern "C" fn swipt_env_reset(
    env: *mut SwiptEnv,
    episode: usize,
    epsilon: f64,
    obs_out: *mut f64,
    capacity: usize,
) -> SwiptStatus {
    guard(|| {
        non_null(env, "env")?;
        let obs = (*env).0.reset(episode, epsilon);
        write_observations(&obs, obs_out, capacity)
    })
}

/// Apply one action per agent for the current slot. Writes the next
/// observations, the common reward, the slot's energy efficiency and
/// whether the episode ended. `reward`, `eta` and `terminal` may be null.
///
/// # Safety
/// `env` must come from this library; `actions` must hold `num_actions`
/// values and `obs_out` `capacity` doubles.
#[no_mangle]
pub unsafe extern "C" fn swipt_env_step(
    env: *mut SwiptEnv,
    actions: *const usize,
    num_actions: usize,
    obs_out: *mut f64,
    capacity: usize,
    reward: *mut f64,
    eta: *mut f64,
    terminal: *mut bool,
) -> SwiptStatus {
    guard(|| {
        non_null(env, "env")?;
        let actions = if num_actions == 0 {
            &[][..]
        } else {
            non_null(actions, "actions")?;
            std::slice::from_raw_parts(actions, num_actions)
        };
        let outcome = check((*env).0.step(actions))?;
        write_observations(&outcome.observations, obs_out, capacity)?;
        if !reward.is_null() {
            *reward = outcome.reward;
        }
        if !eta.is_null() {
            *eta = outcome.ee.eta;
        }
        if !terminal.is_null() {
            *terminal = outcome.terminal;
        }
        Ok(())
    })
}

/// Path loss in dB at `distance_km`.
///
/// # Safety
/// `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn swipt_path_loss_db(distance_km: f64, out: *mut f64) -> SwiptStatus {
    guard(|| {
        non_null(out, "out")?;
        *out = check(path_loss_db(distance_km))?;
        Ok(())
    })
}

/// `Pr{z1 <= z2 + ... + zn + c}` for independent exponentials with rate
/// `lambda1` for `z1` and `rates[i]` for the rest.
///
/// # Safety
/// `rates` must hold `n` values (may be null when `n` is 0); `out` must be
/// valid for writes.
#[no_mangle]
pub unsafe extern "C" fn swipt_lemma1_probability(
    lambda1: f64,
    rates: *const f64,
    n: usize,
    c: f64,
    out: *mut f64,
) -> SwiptStatus {
    guard(|| {
        non_null(out, "out")?;
        let rates = if n == 0 {
            &[][..]
        } else {
            non_null(rates, "rates")?;
            std::slice::from_raw_parts(rates, n)
        };
        if !(lambda1 > 0.0) || rates.iter().any(|&r| !(r > 0.0)) || !(c >= 0.0) {
            return Err(fail(
                SwiptStatus::InvalidArgument,
                "rates must be positive and the offset non-negative",
            ));
        }
        *out = lemma1_probability(lambda1, rates, c);
        Ok(())
    })
}

/// Train `scheme` (`madrl_aspra`, `maql`, `sadrl` or `non_swipt_madrl`)
/// for the configured number of episodes, then test it greedily for
/// `test_episodes` episodes.
///
/// # Safety
/// `cfg` must come from this library, `scheme` be NUL-terminated and `out`
/// valid for writes.
#[no_mangle]
pub unsafe extern "C" fn swipt_train_and_test(
    cfg: *const SwiptConfig,
    scheme: *const c_char,
    seed: u64,
    test_episodes: usize,
    out: *mut SwiptSummary,
) -> SwiptStatus {
    guard(|| {
        non_null(cfg, "cfg")?;
        non_null(out, "out")?;
        let cfg = &(*cfg).0;
        let scheme: Scheme = check(str_arg(scheme, "scheme")?.parse())?;
        let run = check(run_training(cfg, scheme, seed, None))?;
        let stats = check(run_testing(&run.policy, cfg, scheme, seed, test_episodes, None))?;
        let n = stats.len().max(1) as f64;
        let mean = |f: fn(&swipt_core::agents::EpisodeStats) -> f64| {
            stats.iter().map(f).sum::<f64>() / n
        };
        let rewards: Vec<f64> = run.log.iter().map(|s| s.mean_reward).collect();
        *out = SwiptSummary {
            mean_eta: mean(|s| s.mean_eta),
            mean_reward: mean(|s| s.mean_reward),
            h2h_satisfaction: mean(|s| s.h2h_satisfaction),
            cmtcd_outage: mean(|s| s.cmtcd_outage),
            payload_success: mean(|s| s.payload_success),
            convergence_episode: convergence_episode(&rewards),
        };
        Ok(())
    })
}
