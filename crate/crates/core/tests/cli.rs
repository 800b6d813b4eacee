use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn swipt(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_swipt"))
        .current_dir(dir)
        .env("SWIPT_WORKERS", "2")
        .args(args)
        .output()
        .expect("spawn swipt")
}

fn text(o: &Output) -> String {
    format!("{}{}", String::from_utf8_lossy(&o.stdout), String::from_utf8_lossy(&o.stderr))
}

fn configs() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

fn small_run_dir() -> tempfile::TempDir {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("run.cfg"), "episodes = 8\ntest_episodes = 2\n").unwrap();
    dir
}

#[test]
fn validate_accepts_shipped_configs() {
    let dir = tempfile::tempdir().unwrap();
    for name in ["default.cfg", "desk.cfg"] {
        let path = configs().join(name);
        let out = swipt(dir.path(), &["validate", path.to_str().unwrap()]);
        assert!(out.status.success(), "{}", text(&out));
        assert!(text(&out).contains("valid"));
    }
}

#[test]
fn validate_lists_every_violation() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("bad.cfg"), "discount = 1.5\nminibatch_size = 0\n").unwrap();
    let out = swipt(dir.path(), &["validate", "bad.cfg"]);
    assert_eq!(out.status.code(), Some(1));
    let t = text(&out);
    assert!(t.contains("discount") && t.contains("minibatch_size"), "{t}");
}

#[test]
fn train_rejects_invalid_config() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("bad.cfg"), "discount = 1.5\n").unwrap();
    let out = swipt(dir.path(), &["train", "bad.cfg"]);
    assert!(!out.status.success());
    assert!(text(&out).contains("discount"));
}

#[test]
fn usage_errors_exit_nonzero() {
    let dir = tempfile::tempdir().unwrap();
    for args in [
        &["train"][..],
        &["train", "x.cfg", "--no-such-flag"],
        &["frobnicate"],
        &["train", "x.cfg", "--scheme", "dqn"],
        &[],
    ] {
        let out = swipt(dir.path(), args);
        assert!(!out.status.success(), "{args:?} succeeded");
        assert!(!out.stderr.is_empty(), "{args:?} printed nothing");
    }
    let out = swipt(dir.path(), &["validate", "missing.cfg"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(text(&out).contains("missing.cfg"));
}

#[test]
fn help_documents_every_flag() {
    let dir = tempfile::tempdir().unwrap();
    let top = text(&swipt(dir.path(), &["--help"]));
    for cmd in ["validate", "train", "test", "sweep", "plot", "oracle"] {
        assert!(top.contains(cmd), "top-level help lacks {cmd}");
    }
    let expect: &[(&str, &[&str])] = &[
        ("train", &["--scheme", "--seed", "--out"]),
        ("test", &["--weights", "--episodes", "--trace"]),
        ("plot", &["--out"]),
        ("oracle", &["--cases", "--samples", "--configs", "--config-samples", "--seed"]),
        ("sweep", &["SWIPT_WORKERS"]),
    ];
    for (cmd, flags) in expect {
        let out = swipt(dir.path(), &[cmd, "--help"]);
        assert!(out.status.success());
        let t = text(&out);
        for flag in *flags {
            assert!(t.contains(flag), "{cmd} --help lacks {flag}");
        }
    }
}

#[test]
fn train_then_test_writes_logs_and_trace() {
    let dir = small_run_dir();
    let p = dir.path();
    let out = swipt(p, &["train", "run.cfg", "--scheme", "sadrl", "--seed", "4", "--out", "runs"]);
    assert!(out.status.success(), "{}", text(&out));
    let run = p.join("runs/sadrl/4");
    for f in ["training.csv", "manifest.txt", "config.txt", "agent_0.weights"] {
        assert!(run.join(f).exists(), "missing {f}");
    }
    let training = std::fs::read_to_string(run.join("training.csv")).unwrap();
    assert!(training.starts_with("episode,mean_reward,mean_eta,mean_loss,epsilon"));
    assert_eq!(training.lines().count(), 1 + 8);

    let out = swipt(p, &["test", "run.cfg", "--weights", "runs/sadrl/4", "--trace", "trace.csv"]);
    assert!(out.status.success(), "{}", text(&out));
    let testing = std::fs::read_to_string(run.join("testing.csv")).unwrap();
    assert_eq!(testing.lines().count(), 1 + 2);
    let trace = std::fs::read_to_string(p.join("trace.csv")).unwrap();
    // 2 episodes x 100 slots x 4 agents.
    assert_eq!(trace.lines().count(), 1 + 2 * 100 * 4);
    assert!(text(&out).contains("testing: episodes 2"));
}

#[test]
fn test_requires_weights() {
    let dir = small_run_dir();
    let out = swipt(dir.path(), &["test", "run.cfg"]);
    assert!(!out.status.success());
    let out = swipt(dir.path(), &["test", "run.cfg", "--weights", "nowhere"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn sweep_and_plot_round_trip() {
    let dir = small_run_dir();
    let p = dir.path();
    std::fs::write(
        p.join("s.sweep"),
        "config = run.cfg\nschemes = madrl_aspra, maql\nsweep = tolerable_link_count\nvalues = 2, 4\nseeds = 1\noutput_dir = out\n",
    )
    .unwrap();
    let out = swipt(p, &["sweep", "s.sweep"]);
    assert!(out.status.success(), "{}", text(&out));
    let results = p.join("out/results.csv");
    let table = std::fs::read_to_string(&results).unwrap();
    assert_eq!(table.lines().count(), 1 + 4);
    assert!(p.join("out/run_header.txt").exists());
    assert!(p.join("out/tolerable_link_count_4/maql/1/training.csv").exists());
    let figures: Vec<PathBuf> = ["fig5_h2h_satisfaction.svg", "fig6_cmtcd_outage.svg", "fig7_payload_success.svg"]
        .iter()
        .map(|f| p.join("out").join(f))
        .collect();
    let before: Vec<Vec<u8>> = figures.iter().map(|f| std::fs::read(f).unwrap()).collect();

    let out = swipt(p, &["plot", "out/results.csv", "--out", "replot"]);
    assert!(out.status.success(), "{}", text(&out));
    for (f, old) in figures.iter().zip(&before) {
        let new = std::fs::read(p.join("replot").join(f.file_name().unwrap())).unwrap();
        assert_eq!(&new, old, "{} differs after re-plotting", f.display());
    }
    let svg = String::from_utf8(before[0].clone()).unwrap();
    assert!(svg.starts_with("<svg") && svg.contains("madrl_aspra") && svg.contains("maql"));
}

#[test]
fn plot_rejects_empty_table() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("r.csv"), "").unwrap();
    let out = swipt(dir.path(), &["plot", "r.csv"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn oracle_passes_at_small_size() {
    let dir = tempfile::tempdir().unwrap();
    let out = swipt(
        dir.path(),
        &["oracle", "--cases", "10", "--samples", "100000", "--configs", "100", "--config-samples", "5000"],
    );
    assert!(out.status.success(), "{}", text(&out));
    let t = text(&out);
    assert!(t.contains("bound below exact 0"));
    assert!(t.contains("all comparisons within tolerance"));
}
