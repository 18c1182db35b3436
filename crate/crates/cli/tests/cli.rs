use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use dcscn::dcscn::{load_model, param_count};

const SMALL: &str = r#"{
    "data.synthetic_per_class": 8,
    "data.synthetic_size": 32,
    "data.resize": 32,
    "build.max_layers": 2,
    "build.max_candidates": 10,
    "build.max_kernels_per_layer": 3,
    "build.retry_rounds": 2,
    "build.contraction_scale": 0.01,
    "ddpg.episodes": 3,
    "ddpg.hidden": 8,
    "ddpg.batch_size": 2,
    "cam.max_images": 5
}"#;

fn dcscn(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_dcscn"))
        .args(args)
        .env("RUST_LOG", "error")
        .output()
        .expect("binary runs")
}

fn setup(config: &str) -> (tempfile::TempDir, PathBuf) {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("config.json");
    fs::write(&path, config).unwrap();
    (dir, path)
}

fn run_ok(cmd: &str, cfg: &Path, out: &Path, extra: &[&str]) -> String {
    let mut args = vec![cmd, "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()];
    args.extend_from_slice(extra);
    let o = dcscn(&args);
    assert!(
        o.status.success(),
        "{cmd} failed: {}",
        String::from_utf8_lossy(&o.stderr)
    );
    String::from_utf8(o.stdout).unwrap()
}

fn csv_column(path: &Path, name: &str) -> Vec<f64> {
    let text = fs::read_to_string(path).unwrap();
    let mut lines = text.lines();
    let header: Vec<&str> = lines.next().unwrap().split(',').collect();
    let idx = header.iter().position(|h| *h == name).expect("column present");
    lines
        .map(|l| l.split(',').nth(idx).unwrap().parse().unwrap())
        .collect()
}

fn count_pngs(dir: &Path) -> usize {
    fs::read_dir(dir)
        .unwrap()
        .filter(|e| e.as_ref().unwrap().path().extension().is_some_and(|x| x == "png"))
        .count()
}

#[test]
fn synth_writes_reproducible_folder() {
    let (dir, cfg) = setup(SMALL);
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    let stdout = run_ok("synth", &cfg, &a, &["--seed", "3"]);
    run_ok("synth", &cfg, &b, &["--seed", "3"]);
    assert!(stdout.contains(": 8"));
    let mut classes = 0;
    for entry in fs::read_dir(a.join("data")).unwrap() {
        let path = entry.unwrap().path();
        let name = path.file_name().unwrap().to_str().unwrap().to_string();
        if name.ends_with("_mask") {
            continue;
        }
        classes += 1;
        assert_eq!(count_pngs(&path), 8);
        assert_eq!(count_pngs(&a.join("data").join(format!("{name}_mask"))), 8);
        for f in fs::read_dir(&path).unwrap() {
            let f = f.unwrap().path();
            let other = b.join("data").join(&name).join(f.file_name().unwrap());
            assert_eq!(fs::read(&f).unwrap(), fs::read(other).unwrap());
        }
    }
    assert_eq!(classes, 4);
}

#[test]
fn full_pipeline() {
    let (dir, cfg) = setup(SMALL);
    let out = dir.path().join("run");
    run_ok("train", &cfg, &out, &[]);
    let rmse = csv_column(&out.join("trace.csv"), "rmse");
    assert!(!rmse.is_empty());
    assert!(rmse.windows(2).all(|w| w[1] <= w[0] + 1e-9));
    assert!(csv_column(&out.join("trace.csv"), "sigma_sum").iter().all(|&s| s > 0.0));
    assert!(out.join("trace_timing.csv").exists());

    let model = load_model(&out.join("model.json")).unwrap();
    run_ok("eval", &cfg, &out, &[]);
    let eval = out.join("eval.csv");
    let first = fs::read(&eval).unwrap();
    assert!(csv_column(&eval, "accuracy").iter().all(|a| (0.0..=1.0).contains(a)));
    assert!(csv_column(&eval, "pa_mb").iter().all(|&p| p == param_count(&model).megabytes));
    run_ok("eval", &cfg, &out, &[]);
    assert_eq!(fs::read(&eval).unwrap(), first);

    let stdout = run_ok("explain", &cfg, &out, &["--layer", "1", "--theta", "0.4"]);
    assert!(stdout.contains("dataset IoU"));
    assert_eq!(count_pngs(&out.join("heatmaps")), 5);
    assert!(csv_column(&out.join("iou.csv"), "iou").iter().all(|v| (0.0..=1.0).contains(v)));
    let bad = dcscn(&[
        "explain",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
        "--layer",
        "9",
    ]);
    assert_eq!(bad.status.code(), Some(1));

    run_ok("prune", &cfg, &out, &[]);
    assert_eq!(csv_column(&out.join("reward_curve.csv"), "reward").len(), 3);
    let pruned = load_model(&out.join("pruned_model.json")).unwrap();
    assert!(param_count(&pruned).raw <= param_count(&model).raw);
    let curve = fs::read(out.join("reward_curve.csv")).unwrap();
    run_ok("prune", &cfg, &out, &[]);
    assert_eq!(fs::read(out.join("reward_curve.csv")).unwrap(), curve);
}

#[test]
fn train_is_byte_reproducible() {
    let (dir, cfg) = setup(SMALL);
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    run_ok("train", &cfg, &a, &["--seed", "11"]);
    run_ok("train", &cfg, &b, &["--seed", "11"]);
    for f in ["model.json", "trace.csv"] {
        assert!(fs::read(a.join(f)).unwrap() == fs::read(b.join(f)).unwrap(), "{f} differs");
    }
}

#[test]
fn validation_errors_exit_with_1() {
    for bad in [
        r#"{"build.unknown": 1}"#,
        r#"{"build.kernel_size": 4}"#,
        r#"{"build.xi_range": [-1.0, 2.0]}"#,
        r#"{"cam.theta": 0.0}"#,
        "not json",
    ] {
        let (dir, cfg) = setup(bad);
        let o = dcscn(&["train", "--config", cfg.to_str().unwrap(), "--out", dir.path().to_str().unwrap()]);
        assert_eq!(o.status.code(), Some(1), "{bad}");
    }
    assert_eq!(dcscn(&["train", "--bogus"]).status.code(), Some(1));
    assert_eq!(dcscn(&["--help"]).status.code(), Some(0));
}

#[test]
fn runtime_errors_exit_with_2() {
    let (dir, cfg) = setup(SMALL);
    let o = dcscn(&[
        "eval",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        dir.path().to_str().unwrap(),
        "--model",
        dir.path().join("missing.json").to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(2));
}
