mod common;

use std::fs;
use std::path::Path;
use std::process::Command;

use common::{cli, s, write_config, FAST};
use pavecast::checkpoint::Checkpoint;
use pavecast::csvio::read_windows;
use pavecast::pipeline::INCOMPLETE;
use pavecast::report;
use pavecast::Error;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_pavecast"))
}

fn read_predictions(path: &Path) -> Vec<(String, u32, f64)> {
    let mut rdr = csv::Reader::from_path(path).unwrap();
    rdr.records()
        .map(|r| {
            let r = r.unwrap();
            (r[0].to_string(), r[1].parse().unwrap(), r[2].parse().unwrap())
        })
        .collect()
}

#[test]
fn reproduce_with_two_models_on_skid() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), FAST);
    let out = dir.path().join("run");
    let (r, stdout) = cli(&["reproduce", "--config", s(&cfg), "--task", "skid", "--models", "linear,transformer", "--out", s(&out)]);
    r.unwrap();
    assert!(stdout.contains("Prediction results for Skid Number."));
    let rows = report::read_csv(&out.join("report_skid.csv")).unwrap();
    let mut names: Vec<_> = rows.iter().map(|r| r.model.as_str()).collect();
    names.sort();
    assert_eq!(names, ["Linear Regression", "Transformer"]);
    assert!(rows.windows(2).all(|w| w[0].metrics.r2 >= w[1].metrics.r2));
    assert!(!out.join("report_macrotexture.csv").exists());
    assert!(out.join("report_skid.svg").exists());
    assert!(!out.join(INCOMPLETE).exists());
    let manifest: serde_json::Value = serde_json::from_str(&fs::read_to_string(out.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["tasks"].as_array().unwrap().len(), 1);
    assert_eq!(manifest["config"]["seed"], 11);
}

#[test]
fn every_checkpoint_reproduces_logged_predictions() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), FAST);
    let out = dir.path().join("run");
    let (r, _) = cli(&["train", "--config", s(&cfg), "--task", "macrotexture", "--out", s(&out)]);
    r.unwrap();
    assert!(!out.join("report_macrotexture.csv").exists());
    let task = out.join("macrotexture");
    let windows = task.join("windows_train.csv");
    for entry in fs::read_dir(task.join("checkpoints")).unwrap() {
        let ckpt_path = entry.unwrap().path();
        let key = ckpt_path.file_stem().unwrap().to_str().unwrap().to_string();
        let ckpt = Checkpoint::load(&ckpt_path).unwrap();
        assert_eq!(ckpt.kind.key(), key);
        let reloaded = Checkpoint::from_json(&ckpt.to_json().unwrap()).unwrap();
        assert_eq!(reloaded, ckpt);

        let pred_out = dir.path().join(format!("{key}.csv"));
        let (r, _) = cli(&["predict", "--checkpoint", s(&ckpt_path), "--windows", s(&windows), "--out", s(&pred_out)]);
        r.unwrap();
        let logged = read_predictions(&task.join("predictions").join(format!("{key}.csv")));
        let fresh = read_predictions(&pred_out);
        assert_eq!(logged.len(), fresh.len());
        for (a, b) in logged.iter().zip(&fresh) {
            assert_eq!((&a.0, a.1), (&b.0, b.1));
            assert!((a.2 - b.2).abs() <= 1e-12 * a.2.abs().max(1.0), "{key}: {} vs {}", a.2, b.2);
        }

        let log = fs::read_to_string(task.join("logs").join(format!("{key}.jsonl"))).unwrap();
        let first: serde_json::Value = serde_json::from_str(log.lines().next().unwrap()).unwrap();
        assert_eq!(first["model"], key.as_str());
        assert_eq!(first["task"], "macrotexture");
    }
}

#[test]
fn predict_on_empty_windows_writes_header_only() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), FAST);
    let out = dir.path().join("run");
    cli(&["train", "--config", s(&cfg), "--task", "skid", "--models", "knn", "--out", s(&out)]).0.unwrap();
    let windows = out.join("skid/windows_test.csv");
    let header = fs::read_to_string(&windows).unwrap().lines().next().unwrap().to_string();
    let empty = dir.path().join("empty.csv");
    fs::write(&empty, format!("{header}\n")).unwrap();
    let (r, stdout) = cli(&["predict", "--checkpoint", s(&out.join("skid/checkpoints/knn.json")), "--windows", s(&empty)]);
    r.unwrap();
    assert_eq!(stdout, "section_id,target_month,prediction\n");
}

#[test]
fn mismatched_window_length_is_a_compatibility_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), FAST);
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    cli(&["train", "--config", s(&cfg), "--task", "skid", "--models", "linear", "--out", s(&a)]).0.unwrap();
    cli(&["train", "--config", s(&cfg), "--task", "skid", "--models", "linear", "--window-length", "3", "--out", s(&b)])
        .0
        .unwrap();
    let (header, _) = read_windows(&b.join("skid/windows_test.csv")).unwrap();
    assert_eq!(header.length, 3);
    let (r, _) = cli(&[
        "predict",
        "--checkpoint",
        s(&a.join("skid/checkpoints/linear.json")),
        "--windows",
        s(&b.join("skid/windows_test.csv")),
    ]);
    let err = r.unwrap_err();
    assert!(matches!(err, Error::Compatibility(_)), "{err}");
    assert!(err.to_string().contains("L=4") && err.to_string().contains("L=3"), "{err}");
    assert_eq!(err.exit_code(), 2);
}

#[test]
fn evaluate_and_compare_agree_with_the_run_report() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), FAST);
    let out = dir.path().join("run");
    cli(&["reproduce", "--config", s(&cfg), "--task", "skid", "--models", "ridge,tree", "--out", s(&out)]).0.unwrap();
    let run_rows = report::read_csv(&out.join("report_skid.csv")).unwrap();
    let ckpts = out.join("skid/checkpoints");
    let windows = out.join("skid/windows_test.csv");
    let list = format!("{},{}", s(&ckpts.join("ridge.json")), s(&ckpts.join("tree.json")));
    let cmp = dir.path().join("cmp");
    cli(&["compare", "--checkpoints", &list, "--windows", s(&windows), "--out", s(&cmp)]).0.unwrap();
    let cmp_rows = report::read_csv(&cmp.join("report_skid.csv")).unwrap();
    assert_eq!(run_rows, cmp_rows);

    let eval = dir.path().join("eval");
    let (r, stdout) = cli(&["evaluate", "--checkpoint", s(&ckpts.join("tree.json")), "--windows", s(&windows), "--out", s(&eval)]);
    r.unwrap();
    assert!(stdout.contains("Decision Tree"));
    let rows = report::read_csv(&eval.with_extension("csv")).unwrap();
    assert_eq!(rows.len(), 1);
    assert_eq!(Some(&rows[0]), run_rows.iter().find(|r| r.model == "Decision Tree"));
}

#[test]
fn repeated_runs_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), FAST);
    let mut runs = Vec::new();
    for name in ["one", "two"] {
        let out = dir.path().join(name);
        cli(&["reproduce", "--config", s(&cfg), "--out", s(&out)]).0.unwrap();
        runs.push(out);
    }
    let mut compared = 0;
    for task in ["skid", "macrotexture"] {
        for f in [format!("report_{task}.csv"), format!("report_{task}.txt"), format!("report_{task}.svg")] {
            assert_eq!(fs::read(runs[0].join(&f)).unwrap(), fs::read(runs[1].join(&f)).unwrap(), "{f}");
            compared += 1;
        }
        for entry in fs::read_dir(runs[0].join(task).join("checkpoints")).unwrap() {
            let name = entry.unwrap().file_name();
            let rel = Path::new(task).join("checkpoints").join(name);
            assert_eq!(fs::read(runs[0].join(&rel)).unwrap(), fs::read(runs[1].join(&rel)).unwrap(), "{rel:?}");
            compared += 1;
        }
    }
    assert_eq!(compared, 24);
    assert_eq!(fs::read(runs[0].join("manifest.json")).unwrap(), fs::read(runs[1].join("manifest.json")).unwrap());
}

#[test]
fn flags_override_the_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), &format!("{FAST}\n"));
    let out = dir.path().join("run");
    cli(&[
        "train", "--config", s(&cfg), "--seed", "5", "--split-ratio", "0.5", "--task", "skid", "--models", "linear", "--out", s(&out),
    ])
    .0
    .unwrap();
    let manifest: serde_json::Value = serde_json::from_str(&fs::read_to_string(out.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["config"]["seed"], 5);
    assert_eq!(manifest["config"]["split_ratio"], 0.5);
    assert_eq!(manifest["config"]["synthetic_sections"], 60);
    assert_eq!(manifest["tasks"][0]["train"], 30);
}

#[test]
fn failed_run_leaves_incomplete_marker() {
    let dir = tempfile::tempdir().unwrap();
    let records = dir.path().join("bad.csv");
    fs::write(&records, "section_id,month\nS1,0\n").unwrap();
    let out = dir.path().join("run");
    let (r, _) = cli(&["train", "--data", s(&records), "--out", s(&out)]);
    let err = r.unwrap_err();
    assert_eq!(err.exit_code(), 1, "{err}");
    assert!(out.join(INCOMPLETE).exists());
}

#[test]
fn binary_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("d.csv");
    let ok = bin().args(["generate", "--synthetic", "5", "--seed", "2", "--out", s(&data)]).output().unwrap().status;
    assert_eq!(ok.code(), Some(0));
    let ok = bin().args(["validate", "--data", s(&data)]).output().unwrap();
    assert_eq!(ok.status.code(), Some(0));

    let text = fs::read_to_string(&data).unwrap();
    let mut lines: Vec<String> = text.lines().map(String::from).collect();
    let mut cells: Vec<&str> = lines[1].split(',').collect();
    cells[3] = "2";
    lines[1] = cells.join(",");
    fs::write(&data, lines.join("\n") + "\n").unwrap();
    let bad = bin().args(["validate", "--data", s(&data)]).output().unwrap();
    assert_eq!(bad.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&bad.stderr).contains("drum out of {0,1}"));

    let missing = bin().args(["validate", "--data", s(&dir.path().join("nope.csv"))]).output().unwrap();
    assert_eq!(missing.status.code(), Some(2));

    let cfg = write_config(dir.path(), "sead = 1\n");
    let unknown = bin().args(["train", "--config", s(&cfg)]).output().unwrap();
    assert_eq!(unknown.status.code(), Some(2));

    let usage = bin().args(["train", "--window-length", "many"]).output().unwrap();
    assert_eq!(usage.status.code(), Some(2));
}
