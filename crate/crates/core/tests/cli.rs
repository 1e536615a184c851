//! Runs the `molpack` binary end to end.

use std::path::Path;
use std::process::{Command, Output};

use molpack::moldata::{format_xyz, synthetic_dataset};

fn molpack(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_molpack"))
        .args(args)
        .current_dir(dir)
        .output()
        .expect("binary runs")
}

fn stdout_json(out: &Output) -> serde_json::Value {
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).expect("summary is JSON")
}

fn dataset(dir: &Path) -> String {
    let path = dir.join("mols.xyz");
    std::fs::write(&path, format_xyz(&synthetic_dataset(5, &[3, 6, 9, 12, 12, 15, 18, 18, 21, 24, 27, 29]))).unwrap();
    path.display().to_string()
}

#[test]
fn empty_dataset_fails_with_json_error() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("empty.xyz"), "").unwrap();
    let out = molpack(&["--dataset", "empty.xyz", "stats"], dir.path());
    assert_eq!(out.status.code(), Some(1));
    let err: serde_json::Value = serde_json::from_slice(&out.stderr).unwrap();
    assert_eq!(err["error"], "no_molecules");
    assert!(err["message"].as_str().unwrap().contains("no molecules parsed"));
}

#[test]
fn unknown_config_key_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("run.toml"), "rcut = 4.0\n").unwrap();
    let out = molpack(&["--config", "run.toml", "plan", "gather", "8", "8", "8"], dir.path());
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("\"config\""));
}

#[test]
fn plan_reports_spot_cost_on_one_tile() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("one.toml"), "num_tiles = 1\n").unwrap();
    let out = molpack(&["--profile", "one.toml", "--out", "o", "plan", "scatter", "1024", "1024", "64"], dir.path());
    let v = stdout_json(&out);
    assert_eq!(v["report"]["cost"]["total"], 99392.0);
    let written: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("o/plan.json")).unwrap()).unwrap();
    assert_eq!(written["plan"], serde_json::json!({"P_I": 1, "P_M": 1, "P_N": 1}));
    assert_eq!(written["header"]["tool"], "molpack");
}

#[test]
fn plan_verify_checks_every_small_plan() {
    let dir = tempfile::tempdir().unwrap();
    let out = molpack(&["--seed", "4", "plan", "gather", "300", "50", "16", "--verify"], dir.path());
    assert!(String::from_utf8_lossy(&out.stderr).contains("all plans equivalent"));
    let v = stdout_json(&out);
    assert!(v["verified_plans"].as_u64().unwrap() >= 60);
}

#[test]
fn stats_pack_forward_pipeline_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let data = dataset(dir.path());
    let run = |out: &str| {
        for cmd in ["stats", "pack", "forward"] {
            let o = molpack(&["--dataset", &data, "--seed", "3", "--s-max", "29,40", "--workers", "3", "--out", out, cmd], dir.path());
            stdout_json(&o);
        }
    };
    run("a");
    run("b");
    for file in [
        "node_histogram.csv",
        "edge_histogram.csv",
        "sparsity.csv",
        "packing_sweep.csv",
        "pack_manifest.json",
        "predictions.csv",
        "forward_report.json",
    ] {
        // Reports list their own output paths; everything else must match.
        let read = |run: &str| {
            let text = std::fs::read_to_string(dir.path().join(run).join(file)).unwrap();
            if file.ends_with(".json") {
                let mut v: serde_json::Value = serde_json::from_str(&text).unwrap();
                v.as_object_mut().unwrap().remove("files");
                v.to_string()
            } else {
                text
            }
        };
        assert_eq!(read("a"), read("b"), "{file} differs between runs");
    }
    let sweep = std::fs::read_to_string(dir.path().join("a/packing_sweep.csv")).unwrap();
    assert!(sweep.starts_with("# molpack "));
    assert_eq!(sweep.lines().nth(1), Some("s_m,naive_padding_fraction,lpfhp_padding_fraction"));
    let preds = std::fs::read_to_string(dir.path().join("a/predictions.csv")).unwrap();
    assert_eq!(preds.lines().count(), 2 + 12);
}

#[test]
fn worker_count_does_not_change_predictions() {
    let dir = tempfile::tempdir().unwrap();
    let data = dataset(dir.path());
    for (out, workers) in [("w1", "1"), ("w4", "4")] {
        stdout_json(&molpack(&["--dataset", &data, "--seed", "1", "--workers", workers, "--out", out, "forward"], dir.path()));
    }
    let body = |p: &str| {
        let text = std::fs::read_to_string(dir.path().join(p).join("predictions.csv")).unwrap();
        text.lines().skip(1).map(String::from).collect::<Vec<_>>()
    };
    assert_eq!(body("w1"), body("w4"));
}

#[test]
fn forward_with_f64_precision_and_saved_weights() {
    let dir = tempfile::tempdir().unwrap();
    let data = dataset(dir.path());
    let params = molpack::kernels::ModelParams::init(molpack::kernels::ModelConfig {
        hidden: 24,
        n_blocks: 2,
        ..Default::default()
    })
    .unwrap();
    params.save(dir.path().join("w")).unwrap();
    std::fs::write(dir.path().join("run.toml"), "precision = \"f64\"\nweights = \"w\"\n").unwrap();
    let v = stdout_json(&molpack(&["--config", "run.toml", "--dataset", &data, "forward"], dir.path()));
    assert_eq!(v["precision"], "f64");
    assert!(v["max_relative_deviation"].as_f64().unwrap() < 1e-10);
}

#[test]
fn pack_rejects_capacity_below_largest_graph() {
    let dir = tempfile::tempdir().unwrap();
    let data = dataset(dir.path());
    let out = molpack(&["--dataset", &data, "--s-max", "20", "pack"], dir.path());
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("\"capacity\""));
}

#[test]
fn bench_reports_subquadratic_growth() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("b.toml"), "[bench]\nbase = 20000\nsteps = 4\nrepeats = 3\n").unwrap();
    let v = stdout_json(&molpack(&["--config", "b.toml", "--seed", "2", "bench"], dir.path()));
    assert!(v["growth_exponent"].as_f64().unwrap() < 1.3);
    assert!(dir.path().join("out/bench.csv").exists());
}
