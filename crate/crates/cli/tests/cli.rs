use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use nframe::image_ops::synth::natural_scene;
use nframe::runtime::{build_fixture, FixtureSpec};
use serde_json::Value;

fn nframe(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_nframe")).args(args).output().unwrap()
}

fn nframe_env(args: &[&str], key: &str, value: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_nframe")).args(args).env(key, value).output().unwrap()
}

fn first_json_line(out: &Output) -> Value {
    let text = String::from_utf8_lossy(&out.stdout);
    serde_json::from_str(text.lines().next().expect("stdout line")).unwrap()
}

fn error_json(out: &Output) -> Value {
    let text = String::from_utf8_lossy(&out.stderr);
    serde_json::from_str(text.lines().last().expect("stderr line")).unwrap()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

struct Workspace {
    dir: tempfile::TempDir,
}

impl Workspace {
    /// A fixture bundle at `fx/` and `n` images at `imgs/`.
    fn new(n: u64) -> Self {
        let dir = tempfile::tempdir().unwrap();
        build_fixture(&FixtureSpec::cnn(0)).unwrap().write(&dir.path().join("fx")).unwrap();
        std::fs::create_dir_all(dir.path().join("imgs")).unwrap();
        for i in 0..n {
            natural_scene(72, 90, 500 + i)
                .unwrap()
                .save(&dir.path().join(format!("imgs/im{i}.png")))
                .unwrap();
        }
        Self { dir }
    }

    fn path(&self, rel: &str) -> PathBuf {
        self.dir.path().join(rel)
    }
}

#[test]
fn probe_writes_results_summary_and_chart() {
    let ws = Workspace::new(3);
    std::fs::write(ws.path("imgs/broken.png"), b"not a png").unwrap();
    let out = nframe(&[
        "probe", "--model", s(&ws.path("fx")), "--images", s(&ws.path("imgs")), "--frame", "augmentation,noise",
        "--seed", "0", "--out", s(&ws.path("run")), "--plot",
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(first_json_line(&out)["rows"], 24);
    let csv = std::fs::read_to_string(ws.path("run/results.csv")).unwrap();
    assert_eq!(csv.lines().count(), 1 + 2 * 3 * 4);
    assert!(csv.starts_with("model,image,frame,layer_index,layer_name,stable_rank\n"));
    let summary: Value = serde_json::from_slice(&std::fs::read(ws.path("run/summary.json")).unwrap()).unwrap();
    let layer = &summary["frames"][1]["layers"][2];
    for key in ["mean", "ci_low", "ci_high", "n"] {
        assert!(layer.get(key).is_some(), "{key}");
    }
    assert_eq!(summary["unreadable"][0]["image"], "broken");
    let svg = std::fs::read_to_string(ws.path("run/curve.svg")).unwrap();
    assert_eq!(svg.matches("<polyline").count(), 2);
    for name in ["input", "conv1.relu", "pool1", "dense"] {
        assert!(svg.contains(&format!(">{name}</text>")), "{name}");
    }
}

#[test]
fn config_file_supplies_run_settings() {
    let ws = Workspace::new(2);
    let cfg = format!(
        "model = [{:?}]\nimages = {:?}\nframes = [\"noise\"]\nseed = 4\nout = {:?}\n[frame]\nnoise_k = 5\n",
        s(&ws.path("fx")),
        s(&ws.path("imgs")),
        s(&ws.path("cfg-run"))
    );
    std::fs::write(ws.path("run.toml"), cfg).unwrap();
    let out = nframe(&["--config", s(&ws.path("run.toml")), "probe"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let summary: Value = serde_json::from_slice(&std::fs::read(ws.path("cfg-run/summary.json")).unwrap()).unwrap();
    assert_eq!(summary["frames"][0]["k"], 5);
    assert_eq!(summary["seed"], 4);
}

#[test]
fn external_frames_are_ingested_from_disk() {
    let ws = Workspace::new(2);
    for i in 0..2u64 {
        let dir = ws.path(&format!("perts/im{i}"));
        std::fs::create_dir_all(&dir).unwrap();
        for j in 0..4u64 {
            natural_scene(72, 90, 900 + 10 * i + j).unwrap().save(&dir.join(format!("pert_{j}.png"))).unwrap();
        }
    }
    let out = nframe(&[
        "probe", "--model", s(&ws.path("fx")), "--images", s(&ws.path("imgs")), "--frame", "external",
        "--frame-dir", s(&ws.path("perts")), "--out", s(&ws.path("ext")),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let summary: Value = serde_json::from_slice(&std::fs::read(ws.path("ext/summary.json")).unwrap()).unwrap();
    assert_eq!(summary["frames"][0]["k"], 4);
    assert_eq!(summary["frames"][0]["frame"], "external");
}

#[test]
fn cka_of_a_model_with_itself() {
    let ws = Workspace::new(2);
    let fx = ws.path("fx");
    let out = nframe(&[
        "cka", "--model", s(&fx), "--model", s(&fx), "--images", s(&ws.path("imgs")), "--out", s(&ws.path("cka")),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = std::fs::read_to_string(ws.path("cka/cka.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("model_a,model_b,tap_a,tap_b,cka,n_images"));
    let rows: Vec<Vec<&str>> = lines.map(|l| l.split(',').collect()).collect();
    assert_eq!(rows.len(), 16);
    for r in rows.iter().filter(|r| r[2] == r[3]) {
        assert!((r[4].parse::<f64>().unwrap() - 1.0).abs() <= 1e-9);
        assert_eq!(r[5], "2");
    }
    let svg = std::fs::read_to_string(ws.path("cka/cka.svg")).unwrap();
    assert_eq!(svg.matches(r#"class="cell""#).count(), 16);
}

#[test]
fn checkpoint_series_and_sweep() {
    let ws = Workspace::new(2);
    build_fixture(&FixtureSpec {
        weight_scale: 0.0,
        name: Some("step-0".into()),
        ..FixtureSpec::cnn(0)
    })
    .unwrap()
    .write(&ws.path("zero"))
    .unwrap();
    let out = nframe(&[
        "series", "--model", s(&ws.path("zero")), "--model", s(&ws.path("fx")), "--images", s(&ws.path("imgs")),
        "--out", s(&ws.path("series")), "--plot",
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(first_json_line(&out)["degenerate"], serde_json::json!(["step-0"]));
    let csv = std::fs::read_to_string(ws.path("series/series.csv")).unwrap();
    assert_eq!(csv.lines().count(), 1 + 2 * 4);
    assert!(ws.path("series/series.svg").exists());

    let out = nframe(&[
        "sweep-k", "--model", s(&ws.path("fx")), "--images", s(&ws.path("imgs")), "--k", "3,19", "--seed", "1",
        "--out", s(&ws.path("sweep")),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = std::fs::read_to_string(ws.path("sweep/sweep.csv")).unwrap();
    assert_eq!(csv.lines().count(), 1 + 2 * 4);
    let bad = nframe(&[
        "sweep-k", "--model", s(&ws.path("fx")), "--images", s(&ws.path("imgs")), "--k", "1,5", "--out",
        s(&ws.path("bad")),
    ]);
    assert_eq!(bad.status.code(), Some(2));
    assert_eq!(error_json(&bad)["error"]["kind"], "config");
}

#[test]
fn correlation_needs_accuracies() {
    let ws = Workspace::new(2);
    let mut models = Vec::new();
    for (i, acc) in [0.5, 0.6, 0.7].iter().enumerate() {
        let dir = ws.path(&format!("m{i}"));
        build_fixture(&FixtureSpec {
            top1_accuracy: Some(*acc),
            ..FixtureSpec::cnn(i as u64)
        })
        .unwrap()
        .write(&dir)
        .unwrap();
        models.push(dir);
    }
    let mut args = vec!["correlate".to_string()];
    for m in &models {
        args.extend(["--model".to_string(), s(m).to_string()]);
    }
    args.extend(["--images", s(&ws.path("imgs")), "--out", s(&ws.path("corr"))].map(String::from));
    let argv: Vec<&str> = args.iter().map(String::as_str).collect();
    let out = nframe(&argv);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let r: Value = serde_json::from_slice(&std::fs::read(ws.path("corr/correlation.json")).unwrap()).unwrap();
    assert_eq!(r["taps"].as_array().unwrap().len(), 4);
    assert_eq!(r["taps"][1]["n_models"], 3);

    // The plain fixture has no accuracy, leaving two usable models.
    let fx = ws.path("fx");
    let short: Vec<&str> = [&argv[..3], &["--model", s(&fx)], &argv[5..]].concat();
    let out = nframe(&short);
    assert!(!out.status.success());
    assert_eq!(error_json(&out)["error"]["kind"], "invalid_input");
}

#[test]
fn idim_reads_through_the_activation_cache() {
    let ws = Workspace::new(120);
    let cache = ws.path("cache");
    let (fx, imgs) = (ws.path("fx"), ws.path("imgs"));
    let args = ["idim", "--model", s(&fx), "--images", s(&imgs), "--tap", "3"];
    let first = nframe_env(&args, "NFRAME_CACHE", &cache);
    assert!(first.status.success(), "{}", String::from_utf8_lossy(&first.stderr));
    let entries: Vec<_> = std::fs::read_dir(&cache).unwrap().collect();
    assert_eq!(entries.len(), 2);
    let second = nframe_env(&args, "NFRAME_CACHE", &cache);
    assert_eq!(first.stdout, second.stdout);
    let est = &first_json_line(&first)["estimates"];
    assert_eq!(est[0]["estimator"], "twonn");
    assert!(est[0]["value"].as_f64().unwrap() > 0.0);
    assert_eq!(est[1]["points"], 120);
}

#[test]
fn synthetic_commands() {
    let out = nframe(&["rank3", "--synthetic", "--centers", "7"]);
    assert!(out.status.success());
    assert!(first_json_line(&out)["sigma4_over_sigma1"].as_f64().unwrap() < 0.1);

    let out = nframe(&["mp-check", "--n", "128", "--trials", "10", "--seed", "1"]);
    assert!(out.status.success());
    let v = first_json_line(&out);
    assert!((v["residual_coefficient"].as_f64().unwrap() - 0.36849).abs() < 5e-4);
    assert!(v["mc_residual"].as_f64().unwrap() > 0.3);

    let out = nframe(&["idim", "--synthetic", "line", "--points", "1000", "--estimator", "twonn"]);
    let v = first_json_line(&out);
    assert!((v["estimates"][0]["value"].as_f64().unwrap() - 1.0).abs() < 0.1);
}

#[test]
fn fixture_command_writes_a_loadable_bundle() {
    let dir = tempfile::tempdir().unwrap();
    let out = nframe(&["fixture", "--out", s(&dir.path().join("fx")), "--seed", "3"]);
    assert!(out.status.success());
    assert_eq!(first_json_line(&out)["taps"], 3);
    assert!(nframe::runtime::load_bundle_dir(&dir.path().join("fx")).is_ok());
}

#[test]
fn failures_are_reported_as_json() {
    let ws = Workspace::new(2);
    let missing = nframe(&["probe", "--model", s(&ws.path("nope")), "--images", s(&ws.path("imgs")), "--out", s(&ws.path("x"))]);
    assert_eq!(missing.status.code(), Some(1));
    assert_eq!(error_json(&missing)["error"]["kind"], "io");

    let unseeded = nframe(&[
        "probe", "--model", s(&ws.path("fx")), "--images", s(&ws.path("imgs")), "--frame", "noise", "--out",
        s(&ws.path("x")),
    ]);
    assert_eq!(unseeded.status.code(), Some(2));
    assert_eq!(error_json(&unseeded)["error"]["kind"], "config");

    std::fs::write(ws.path("fx/manifest.json"), b"{\"name\": 3}").unwrap();
    let bad_manifest = nframe(&["probe", "--model", s(&ws.path("fx")), "--images", s(&ws.path("imgs")), "--out", s(&ws.path("x"))]);
    assert_eq!(error_json(&bad_manifest)["error"]["kind"], "manifest");

    let usage = nframe(&["frobnicate"]);
    assert_eq!(usage.status.code(), Some(2));
    assert_eq!(error_json(&usage)["error"]["kind"], "usage");
    assert!(!ws.path("x").join("results.csv").exists());
}
