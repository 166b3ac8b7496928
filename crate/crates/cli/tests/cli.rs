use std::path::{Path, PathBuf};
use std::process::{Command, Output};
use std::sync::OnceLock;

use tempfile::TempDir;

const SMALL: &str = r#"
seed = 3
[simulator]
recording_duration = 6.0
n_windows = 16

[train]
epochs = 1

[train.model]
channels = 8
blocks = 1
feature_dim = 16
head_channels = 8
head_blocks = 1
"#;

fn wdsel(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_wdsel")).args(args).output().expect("binary runs")
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

fn ok(args: &[&str]) -> String {
    let out = wdsel(args);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

/// Exit code and the single stderr line of a failing run.
fn fails(args: &[&str]) -> (i32, String) {
    let out = wdsel(args);
    assert!(!out.status.success(), "{args:?} unexpectedly succeeded");
    let err = String::from_utf8(out.stderr).unwrap();
    assert_eq!(err.trim_end().lines().count(), 1, "{err}");
    (out.status.code().unwrap(), err)
}

struct Fixture {
    _dir: TempDir,
    root: PathBuf,
}

impl Fixture {
    fn data(&self) -> PathBuf {
        self.root.join("data")
    }
    fn model(&self) -> PathBuf {
        self.root.join("model")
    }
}

/// One simulated dataset and trained model shared by the tests.
fn fixture() -> &'static Fixture {
    static F: OnceLock<Fixture> = OnceLock::new();
    F.get_or_init(|| {
        let dir = tempfile::tempdir().unwrap();
        let root = dir.path().to_path_buf();
        let cfg = root.join("small.toml");
        std::fs::write(&cfg, SMALL).unwrap();
        ok(&["simulate", "--config", p(&cfg), "--out", p(&root.join("data"))]);
        ok(&["train", "--data", p(&root.join("data")), "--out", p(&root.join("model"))]);
        Fixture { _dir: dir, root }
    })
}

fn read_rows(path: &Path) -> Vec<Vec<f64>> {
    std::fs::read_to_string(path)
        .unwrap()
        .lines()
        .skip(1)
        .map(|l| l.split(',').map(|v| v.parse().unwrap()).collect())
        .collect()
}

#[test]
fn pipeline_outputs_are_reproducible() {
    let f = fixture();
    for dir in [f.data(), f.model()] {
        assert!(dir.join("config.toml").exists());
    }
    assert!(f.model().join("checkpoint.bin").exists());
    assert!(f.model().join("train_report.csv").exists());
    let (a, b) = (f.root.join("eval-a"), f.root.join("eval-b"));
    ok(&["evaluate", "--model", p(&f.model()), "--data", p(&f.data()), "--out", p(&a)]);
    ok(&["evaluate", "--model", p(&f.model()), "--data", p(&f.data()), "--out", p(&b)]);
    for name in ["static.csv", "dynamic.csv", "selection.csv", "ablation.csv", "windows.csv", "report.json", "config.toml"] {
        let (x, y) = (std::fs::read(a.join(name)).unwrap(), std::fs::read(b.join(name)).unwrap());
        assert_eq!(x, y, "{name} differs between identical runs");
    }

    let again = f.root.join("data-again");
    ok(&["simulate", "--config", p(&f.data().join("config.toml")), "--out", p(&again)]);
    for name in ["labels.csv", "windows.csv", "recordings/rec-0002/signals.csv"] {
        assert_eq!(std::fs::read(f.data().join(name)).unwrap(), std::fs::read(again.join(name)).unwrap(), "{name}");
    }
}

#[test]
fn allan_recovers_injected_white_noise() {
    let f = fixture();
    let out = ok(&["allan", "--input", p(&f.data().join("static.csv")), "--json"]);
    let report: serde_json::Value = serde_json::from_str(&out).unwrap();
    let rows = report.as_array().unwrap();
    assert_eq!(rows.len(), 6);
    for row in rows {
        let injected = if row["channel"].as_str().unwrap().starts_with('a') { 0.02 } else { 0.005 };
        let rw = row["rw"].as_f64().unwrap();
        assert!((rw / injected - 1.0).abs() < 0.10, "{}: {rw} vs {injected}", row["channel"]);
    }
    let text = ok(&["allan", "--input", p(&f.data().join("static.csv"))]);
    assert!(text.starts_with("channel,qn,rw,bi,"));
}

#[test]
fn enhancing_a_clean_signal_changes_it_little() {
    let f = fixture();
    let clean = f.data().join("recordings/rec-0001/clean.csv");
    let model = f.model();
    for soft in [false, true] {
        let out = f.root.join(format!("clean-enhanced-{soft}.csv"));
        let mut args = vec!["enhance", "--model", p(&model), "--input", p(&clean), "--out", p(&out)];
        if soft {
            args.push("--soft");
        }
        ok(&args);
        let (x, y) = (read_rows(&clean), read_rows(&out));
        assert_eq!(x.len(), y.len());
        let diff: f64 = x.iter().zip(&y).flat_map(|(a, b)| a[1..].iter().zip(&b[1..]).map(|(u, v)| (u - v).powi(2))).sum();
        let norm: f64 = x.iter().flat_map(|a| a[1..].iter().map(|u| u * u)).sum();
        assert!((diff / norm).sqrt() < 0.01, "relative change {}", (diff / norm).sqrt());
    }
}

#[test]
fn per_window_commands() {
    let f = fixture();
    let signals = f.data().join("recordings/rec-0000/signals.csv");
    let sel = ok(&["select", "--model", p(&f.model()), "--input", p(&signals)]);
    let lines: Vec<&str> = sel.lines().collect();
    assert_eq!(lines[0], "window,start,wavelet");
    assert_eq!(lines.len(), 1 + 3);

    let traj = f.root.join("traj.csv");
    let truth = f.data().join("recordings/rec-0000/truth.csv");
    let clean = f.data().join("recordings/rec-0000/clean.csv");
    ok(&["reconstruct", "--input", p(&clean), "--truth", p(&truth), "--out", p(&traj)]);
    let (r, t) = (read_rows(&traj), read_rows(&truth));
    assert_eq!(r.len(), t.len());
    let end = r.len() - 1;
    let err: f64 = (1..4).map(|i| (r[end][i] - t[end][i]).powi(2)).sum::<f64>().sqrt();
    assert!(err < 0.05, "{err}");

    let feats = f.root.join("features.csv");
    ok(&["features", "--model", p(&f.model()), "--data", p(&f.data()), "--out", p(&feats), "--split", "all"]);
    let text = std::fs::read_to_string(&feats).unwrap();
    assert!(text.starts_with("window_id,selected,oracle,h0,"));
    assert_eq!(text.lines().count(), 17);

    let bank = f.root.join("bank.csv");
    ok(&["export-bank", "--bank-size", "5", "--out", p(&bank)]);
    assert!(std::fs::read_to_string(&bank).unwrap().starts_with("wavelet,index,vanishing_moments,filter,k,value\n"));
}

#[test]
fn failures_have_distinct_codes() {
    let f = fixture();
    let dir = tempfile::tempdir().unwrap();

    let (code, err) = fails(&["allan", "--input", p(&dir.path().join("missing.csv"))]);
    assert_eq!((code, err.starts_with("error[missing-file]")), (4, true), "{err}");

    let (code, err) = fails(&["frobnicate"]);
    assert_eq!((code, err.starts_with("error[usage]")), (2, true), "{err}");

    let bad = dir.path().join("bad.toml");
    std::fs::write(&bad, "[train]\nepoch = 3\n").unwrap();
    let (code, err) = fails(&["simulate", "--config", p(&bad), "--out", p(&dir.path().join("d"))]);
    assert_eq!((code, err.starts_with("error[config]")), (3, true), "{err}");

    let ck = std::fs::read(f.model().join("checkpoint.bin")).unwrap();
    let input = f.data().join("recordings/rec-0000/signals.csv");
    let truncated = dir.path().join("truncated.bin");
    std::fs::write(&truncated, &ck[..ck.len() / 2]).unwrap();
    let (code, err) = fails(&["select", "--model", p(&truncated), "--input", p(&input)]);
    assert_eq!((code, err.starts_with("error[corrupt-checkpoint]")), (6, true), "{err}");

    let mut future = ck.clone();
    future[8..12].copy_from_slice(&2u32.to_le_bytes());
    let versioned = dir.path().join("v2.bin");
    std::fs::write(&versioned, future).unwrap();
    let (code, err) = fails(&["select", "--model", p(&versioned), "--input", p(&input)]);
    assert_eq!((code, err.starts_with("error[version-mismatch]")), (7, true), "{err}");

    let five = dir.path().join("five.toml");
    let cfg = std::fs::read_to_string(f.model().join("config.toml")).unwrap().replace("bank_size = 16", "bank_size = 5");
    std::fs::write(&five, cfg).unwrap();
    let (code, err) = fails(&["evaluate", "--model", p(&f.model()), "--data", p(&f.data()), "--config", p(&five), "--out", p(&dir.path().join("e"))]);
    assert_eq!((code, err.starts_with("error[architecture-mismatch]")), (8, true), "{err}");

    let out = Command::new(env!("CARGO_BIN_EXE_wdsel"))
        .args(["export-bank", "--out", p(&dir.path().join("b.csv"))])
        .env("WDSEL_THREADS", "many")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(3));
}
