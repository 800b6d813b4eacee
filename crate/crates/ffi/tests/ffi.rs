use std::ffi::{CStr, CString};
use std::io::Write;
use std::path::Path;
use std::process::Command;
use std::ptr;

use swipt_ffi::*;

fn last_error() -> String {
    unsafe { CStr::from_ptr(swipt_last_error()) }.to_string_lossy().into_owned()
}

fn default_config() -> *mut SwiptConfig {
    let mut cfg = ptr::null_mut();
    assert_eq!(unsafe { swipt_config_default(&mut cfg) }, SwiptStatus::Ok);
    assert!(!cfg.is_null());
    cfg
}

fn set(cfg: *mut SwiptConfig, key: &str, value: &str) -> SwiptStatus {
    let k = CString::new(key).unwrap();
    let v = CString::new(value).unwrap();
    unsafe { swipt_config_set(cfg, k.as_ptr(), v.as_ptr()) }
}

#[test]
fn version_matches_crate() {
    let v = unsafe { CStr::from_ptr(swipt_version()) };
    assert_eq!(v.to_str().unwrap(), env!("CARGO_PKG_VERSION"));
}

#[test]
fn null_arguments_are_reported() {
    assert_eq!(unsafe { swipt_config_default(ptr::null_mut()) }, SwiptStatus::NullPointer);
    assert!(last_error().contains("null"));
    let mut n = 0;
    assert_eq!(
        unsafe { swipt_config_validate(ptr::null(), &mut n) },
        SwiptStatus::NullPointer
    );
    unsafe {
        swipt_config_free(ptr::null_mut());
        swipt_env_free(ptr::null_mut());
        assert_eq!(swipt_env_num_agents(ptr::null()), 0);
    }
}

#[test]
fn config_set_and_validate() {
    let cfg = default_config();
    let mut n = usize::MAX;
    assert_eq!(unsafe { swipt_config_validate(cfg, &mut n) }, SwiptStatus::Ok);
    assert_eq!(n, 0);
    assert_eq!(last_error(), "");

    assert_eq!(set(cfg, "no_such_key", "1"), SwiptStatus::InvalidConfig);
    assert!(last_error().contains("no_such_key"));
    assert_eq!(set(cfg, "p_max_dbm", "abc"), SwiptStatus::InvalidArgument);

    assert_eq!(set(cfg, "discount", "1.5"), SwiptStatus::Ok);
    assert_eq!(unsafe { swipt_config_validate(cfg, &mut n) }, SwiptStatus::InvalidConfig);
    assert!(n >= 1);
    assert!(last_error().contains("discount"));
    unsafe { swipt_config_free(cfg) };
}

#[test]
fn config_from_missing_file_is_io() {
    let path = CString::new("/nonexistent/swipt.cfg").unwrap();
    let mut cfg = ptr::null_mut();
    assert_eq!(
        unsafe { swipt_config_from_file(path.as_ptr(), &mut cfg) },
        SwiptStatus::Io
    );
    assert!(cfg.is_null());
}

#[test]
fn config_from_file_reads_overrides() {
    let mut f = tempfile::NamedTempFile::new().unwrap();
    writeln!(f, "tmtcd_per_cluster = 3").unwrap();
    let path = CString::new(f.path().to_str().unwrap()).unwrap();
    let mut cfg = ptr::null_mut();
    assert_eq!(unsafe { swipt_config_from_file(path.as_ptr(), &mut cfg) }, SwiptStatus::Ok);
    let mut env = ptr::null_mut();
    assert_eq!(unsafe { swipt_env_new(cfg, true, 1, &mut env) }, SwiptStatus::Ok);
    assert_eq!(unsafe { swipt_env_num_agents(env) }, 6);
    unsafe {
        swipt_env_free(env);
        swipt_config_free(cfg);
    }
}

#[test]
fn env_episode_runs_to_terminal() {
    let cfg = default_config();
    let mut env = ptr::null_mut();
    assert_eq!(unsafe { swipt_env_new(cfg, true, 7, &mut env) }, SwiptStatus::Ok);
    let (n, len, actions) = unsafe {
        (swipt_env_num_agents(env), swipt_env_obs_len(env), swipt_env_action_count(env))
    };
    assert_eq!(n, 4);
    assert!(len > 0 && actions > 0);

    let mut obs = vec![f64::NAN; n * len];
    assert_eq!(
        unsafe { swipt_env_reset(env, 0, 1.0, obs.as_mut_ptr(), obs.len() - 1) },
        SwiptStatus::BufferTooSmall
    );
    assert_eq!(
        unsafe { swipt_env_reset(env, 0, 1.0, obs.as_mut_ptr(), obs.len()) },
        SwiptStatus::Ok
    );
    assert!(obs.iter().all(|x| x.is_finite()));

    let bad = vec![actions; n];
    let status = unsafe {
        swipt_env_step(env, bad.as_ptr(), n, obs.as_mut_ptr(), obs.len(), ptr::null_mut(), ptr::null_mut(), ptr::null_mut())
    };
    assert_eq!(status, SwiptStatus::InvalidArgument);
    let status = unsafe {
        swipt_env_step(env, bad.as_ptr(), n - 1, obs.as_mut_ptr(), obs.len(), ptr::null_mut(), ptr::null_mut(), ptr::null_mut())
    };
    assert_eq!(status, SwiptStatus::InvalidArgument);

    let mut steps = 0;
    loop {
        let acts: Vec<usize> = (0..n).map(|i| (i * 7 + steps) % actions).collect();
        let (mut reward, mut eta, mut terminal) = (f64::NAN, f64::NAN, false);
        let status = unsafe {
            swipt_env_step(env, acts.as_ptr(), n, obs.as_mut_ptr(), obs.len(), &mut reward, &mut eta, &mut terminal)
        };
        assert_eq!(status, SwiptStatus::Ok, "{}", last_error());
        assert!(reward.is_finite() && eta > 0.0);
        steps += 1;
        if terminal {
            break;
        }
        assert!(steps < 10_000);
    }
    assert_eq!(steps, 100);
    unsafe {
        swipt_env_free(env);
        swipt_config_free(cfg);
    }
}

#[test]
fn invalid_config_rejected_by_env_new() {
    let cfg = default_config();
    assert_eq!(set(cfg, "discount", "1.5"), SwiptStatus::Ok);
    let mut env = ptr::null_mut();
    let status = unsafe { swipt_env_new(cfg, true, 1, &mut env) };
    assert_eq!(status, SwiptStatus::InvalidConfig);
    assert!(env.is_null());
    unsafe { swipt_config_free(cfg) };
}

#[test]
fn math_helpers() {
    let mut pl = 0.0;
    assert_eq!(unsafe { swipt_path_loss_db(0.1, &mut pl) }, SwiptStatus::Ok);
    assert!((pl - (-128.0 - 37.6 * 0.1f64.log10())).abs() < 1e-9);
    assert_eq!(unsafe { swipt_path_loss_db(-1.0, &mut pl) }, SwiptStatus::InvalidArgument);

    let mut p = 0.0;
    assert_eq!(
        unsafe { swipt_lemma1_probability(2.0, ptr::null(), 0, 0.5, &mut p) },
        SwiptStatus::Ok
    );
    assert!((p - (1.0 - (-1.0f64).exp())).abs() < 1e-12);
    let rates = [1.0];
    assert_eq!(
        unsafe { swipt_lemma1_probability(1.0, rates.as_ptr(), 1, 0.0, &mut p) },
        SwiptStatus::Ok
    );
    assert!((p - 0.5).abs() < 1e-12);
    assert_eq!(
        unsafe { swipt_lemma1_probability(0.0, rates.as_ptr(), 1, 0.0, &mut p) },
        SwiptStatus::InvalidArgument
    );
}

#[test]
fn train_and_test_small_run() {
    let cfg = default_config();
    assert_eq!(set(cfg, "episodes", "4"), SwiptStatus::Ok);
    let scheme = CString::new("maql").unwrap();
    let mut summary = SwiptSummary::default();
    assert_eq!(
        unsafe { swipt_train_and_test(cfg, scheme.as_ptr(), 3, 2, &mut summary) },
        SwiptStatus::Ok,
        "{}",
        last_error()
    );
    assert!(summary.mean_eta > 0.0);
    assert!((0.0..=1.0).contains(&summary.h2h_satisfaction));
    assert!(summary.convergence_episode < 4);

    let unknown = CString::new("dqn").unwrap();
    assert_eq!(
        unsafe { swipt_train_and_test(cfg, unknown.as_ptr(), 3, 2, &mut summary) },
        SwiptStatus::InvalidArgument
    );
    assert!(last_error().contains("unknown scheme"));
    unsafe { swipt_config_free(cfg) };
}

#[test]
fn header_compiles_and_links_from_c() {
    let Ok(cc) = Command::new("cc").arg("--version").output() else {
        eprintln!("no C compiler; skipping");
        return;
    };
    assert!(cc.status.success());
    let crate_dir = Path::new(env!("CARGO_MANIFEST_DIR"));
    let header = crate_dir.join("include/swipt.h");
    assert!(header.exists());

    let dir = tempfile::tempdir().unwrap();
    let src = dir.path().join("probe.c");
    std::fs::write(
        &src,
        r#"#include "swipt.h"
#include <stdio.h>
int main(void) {
    SwiptConfig *cfg = NULL;
    SwiptEnv *env = NULL;
    if (swipt_config_default(&cfg) != SWIPT_STATUS_OK) return 1;
    if (swipt_env_new(cfg, true, 1, &env) != SWIPT_STATUS_OK) return 2;
    size_t n = swipt_env_num_agents(env), len = swipt_env_obs_len(env);
    double obs[4096];
    if (n * len > 4096) return 3;
    if (swipt_env_reset(env, 0, 1.0, obs, 4096) != SWIPT_STATUS_OK) return 4;
    size_t actions[64] = {0};
    double reward, eta;
    bool done;
    if (swipt_env_step(env, actions, n, obs, 4096, &reward, &eta, &done) != SWIPT_STATUS_OK) return 5;
    printf("%zu %zu %s\n", n, len, swipt_version());
    swipt_env_free(env);
    swipt_config_free(cfg);
    return 0;
}
"#,
    )
    .unwrap();
    let obj = dir.path().join("probe.o");
    let status = Command::new("cc")
        .arg("-std=c99")
        .arg("-Wall")
        .arg("-Werror")
        .arg("-c")
        .arg(&src)
        .arg("-I")
        .arg(crate_dir.join("include"))
        .arg("-o")
        .arg(&obj)
        .status()
        .unwrap();
    assert!(status.success(), "header does not compile as C99");

    // Link against the static library built next to this test binary.
    let deps = std::env::current_exe().unwrap().parent().unwrap().to_path_buf();
    let lib = deps.parent().unwrap().join("libswipt_ffi.a");
    if !lib.exists() {
        eprintln!("{} not built; skipping link step", lib.display());
        return;
    }
    let exe = dir.path().join("probe");
    let status = Command::new("cc")
        .arg(&obj)
        .arg(&lib)
        .args(["-lpthread", "-ldl", "-lm", "-o"])
        .arg(&exe)
        .status()
        .unwrap();
    assert!(status.success(), "link failed");
    let out = Command::new(&exe).output().unwrap();
    assert!(out.status.success(), "probe exited with {:?}", out.status);
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.starts_with("4 "), "{text}");
}
