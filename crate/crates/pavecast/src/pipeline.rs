//! End-to-end run: data, windows, split, scaling, training, reports.
//!
//! Output layout under `cfg.out`:
//!
//! ```text
//! manifest.json
//! data.csv                      synthetic runs only
//! report_<task>.{csv,txt,svg}
//! <task>/windows_{train,test}.csv
//! <task>/checkpoints/<model>.json
//! <task>/predictions/<model>.csv  training-window predictions at save time
//! <task>/logs/<model>.jsonl
//! ```
//!
//! An `INCOMPLETE` file sits in the output directory while the run is in
//! progress and stays there, holding the error, if it fails.

use std::fs;
use std::path::{Path, PathBuf};
use std::thread;

use pavecast_core::baselines::{BaselineModel, DesignMatrix, FitConfig, FittedBaseline, ModelKind};
use pavecast_core::records::validate;
use pavecast_core::seed::derive_seed;
use pavecast_core::sequence::{build_series, make_all_windows, split_indices, SectionSeries, Task, WindowSample};
use pavecast_core::transformer::{holdout, train, TrainingLog};
use pavecast_core::{compare, EvaluationReport, Forecaster, RecordSet, Scaler, SyntheticConfig};
use serde::Serialize;
use serde_json::json;
use sha2::{Digest, Sha256};

use crate::checkpoint::{Checkpoint, SavedModel};
use crate::config::RunConfig;
use crate::csvio::{load_records, save_records, save_windows};
use crate::error::{Error, Result};
use crate::report;

pub const INCOMPLETE: &str = "INCOMPLETE";

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DataInfo {
    pub source: String,
    pub records: usize,
    pub sections: usize,
    pub digest: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TaskInfo {
    pub task: Task,
    pub windows: usize,
    pub train: usize,
    pub test: usize,
    /// Digest of every sample's `(section_id, target_month)` and side.
    pub split_digest: String,
    pub models: Vec<ModelKind>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Manifest {
    pub format: &'static str,
    pub version: u32,
    /// Digest of the config digest and the data digest.
    pub run_digest: String,
    pub config_digest: String,
    pub config: RunConfig,
    pub data: DataInfo,
    pub tasks: Vec<TaskInfo>,
}

#[derive(Debug, Clone)]
pub struct RunSummary {
    pub out: PathBuf,
    pub manifest: Manifest,
    pub reports: Vec<EvaluationReport>,
}

/// Everything derived from one task's windows before training.
struct Prepared {
    task: Task,
    train_raw: Vec<WindowSample>,
    test_raw: Vec<WindowSample>,
    train: Vec<WindowSample>,
    test: Vec<WindowSample>,
    design: DesignMatrix,
    scaler: Scaler,
    info: TaskInfo,
}

struct Trained {
    model: SavedModel,
    log: Vec<serde_json::Value>,
}

/// Full run including evaluation reports.
pub fn run_pipeline(cfg: &RunConfig) -> Result<RunSummary> {
    run(cfg, true)
}

/// Trains and writes checkpoints, logs and windows, without reports.
pub fn run_training(cfg: &RunConfig) -> Result<RunSummary> {
    run(cfg, false)
}

fn write(path: &Path, contents: impl AsRef<[u8]>) -> Result<()> {
    fs::write(path, contents).map_err(|e| Error::io(path, e))
}

fn create_dir(path: &Path) -> Result<()> {
    fs::create_dir_all(path).map_err(|e| Error::io(path, e))
}

fn run(cfg: &RunConfig, evaluate: bool) -> Result<RunSummary> {
    cfg.validate()?;
    create_dir(&cfg.out)?;
    let marker = cfg.out.join(INCOMPLETE);
    write(&marker, "run in progress\n")?;
    match execute(cfg, evaluate) {
        Ok(summary) => {
            fs::remove_file(&marker).map_err(|e| Error::io(&marker, e))?;
            Ok(summary)
        }
        Err(e) => {
            let _ = fs::write(&marker, format!("run failed: {e}\n"));
            Err(e)
        }
    }
}

pub fn load_data(cfg: &RunConfig) -> Result<(RecordSet, String)> {
    match &cfg.data {
        Some(path) => Ok((load_records(path, &cfg.ranges)?, path.display().to_string())),
        None => {
            let rs = pavecast_core::generate_synthetic(&SyntheticConfig::with_sections(cfg.synthetic_sections), cfg.seed)?;
            let report = validate(&rs, &cfg.ranges);
            if !report.is_empty() {
                return Err(Error::Validation { report });
            }
            Ok((rs, format!("synthetic:{}", cfg.synthetic_sections)))
        }
    }
}

fn split_digest(samples: &[WindowSample], train: &[usize]) -> String {
    let mut side = vec!["test"; samples.len()];
    for &i in train {
        side[i] = "train";
    }
    let mut text = String::new();
    for (s, side) in samples.iter().zip(side) {
        text.push_str(&format!("{},{},{side}\n", s.section_id, s.target_month));
    }
    sha256_hex(text.as_bytes())
}

fn prepare(cfg: &RunConfig, series: &[SectionSeries], task: Task) -> Result<Prepared> {
    let spec = cfg.window_spec(task);
    let samples = make_all_windows(series, &spec).map_err(|e| Error::from(e).at_stage(format!("windows {task}")))?;
    let idx = split_indices(&samples, cfg.split_ratio, cfg.split_mode, cfg.seed)
        .map_err(|e| Error::from(e).at_stage(format!("split {task}")))?;
    let train_raw: Vec<WindowSample> = idx.train.iter().map(|&i| samples[i].clone()).collect();
    let test_raw: Vec<WindowSample> = idx.test.iter().map(|&i| samples[i].clone()).collect();
    let scale = |e| Error::from(e).at_stage(format!("scale {task}"));
    let scaler = Scaler::fit(&train_raw, &spec.layout().binary_mask()).map_err(scale)?;
    let train = scaler.apply(&train_raw).map_err(scale)?;
    let test = scaler.apply(&test_raw).map_err(scale)?;
    let design = DesignMatrix::from_samples(&train).map_err(|source| Error::Baseline {
        kind: format!("design {task}"),
        source,
    })?;
    let info = TaskInfo {
        task,
        windows: samples.len(),
        train: train.len(),
        test: test.len(),
        split_digest: split_digest(&samples, &idx.train),
        models: cfg.models.clone(),
    };
    Ok(Prepared {
        task,
        train_raw,
        test_raw,
        train,
        test,
        design,
        scaler,
        info,
    })
}

fn transformer_log(log: &TrainingLog) -> Vec<serde_json::Value> {
    let mut lines: Vec<serde_json::Value> = log
        .epochs
        .iter()
        .map(|e| json!({"epoch": e.epoch, "train_mse": e.train_mse, "validation_mse": e.validation_mse}))
        .collect();
    lines.push(json!({"best_epoch": log.best_epoch, "stopped_early": log.stopped_early, "epochs": log.epochs.len()}));
    lines
}

fn baseline_log(fitted: &FittedBaseline, design: &DesignMatrix) -> Vec<serde_json::Value> {
    let mut lines = vec![json!({"rows": design.n(), "columns": fitted.columns.len(), "available_columns": design.p()})];
    match &fitted.model {
        BaselineModel::Boosted(m) => {
            lines.extend(m.train_mse.iter().enumerate().map(|(i, v)| json!({"round": i + 1, "train_mse": v})));
        }
        BaselineModel::Mlp(m) => {
            lines.extend(m.epoch_mse.iter().enumerate().map(|(i, v)| json!({"epoch": i + 1, "train_mse": v})));
        }
        BaselineModel::Forest(f) => lines.push(json!({"trees": f.trees.len()})),
        BaselineModel::Tree(t) => lines.push(json!({"depth": t.depth(), "leaves": t.leaves()})),
        _ => {}
    }
    lines
}

/// Per-model seed: `derive_seed(master, "model/<key>")`.
pub fn model_seed(master: u64, kind: ModelKind) -> u64 {
    derive_seed(master, &format!("model/{}", kind.key()))
}

fn fit_one(cfg: &RunConfig, p: &Prepared, kind: ModelKind) -> Result<Trained> {
    let seed = model_seed(cfg.seed, kind);
    match kind {
        ModelKind::Transformer => {
            let (tr, va) = holdout(&p.train, cfg.transformer.validation_fraction, seed)?;
            let tc = cfg.transformer.config(cfg.window_spec(p.task).layout().width(), cfg.window_length, seed);
            let (model, log) = train(&tr, &va, &tc)?;
            Ok(Trained {
                model: SavedModel::Transformer(model),
                log: transformer_log(&log),
            })
        }
        _ => {
            let fit_cfg = FitConfig {
                seed,
                ..cfg.baselines.clone()
            };
            let fitted = FittedBaseline::fit(kind, &p.design, &fit_cfg).map_err(|source| Error::Baseline {
                kind: kind.key().into(),
                source,
            })?;
            let log = baseline_log(&fitted, &p.design);
            Ok(Trained {
                model: SavedModel::Baseline(fitted),
                log,
            })
        }
    }
}

fn write_jsonl(path: &Path, task: Task, kind: ModelKind, lines: &[serde_json::Value]) -> Result<()> {
    let mut text = String::new();
    for line in lines {
        let mut obj = line.clone();
        obj["task"] = json!(task);
        obj["model"] = json!(kind.key());
        text.push_str(&obj.to_string());
        text.push('\n');
    }
    write(path, text)
}

fn write_predictions(path: &Path, samples: &[WindowSample], predictions: &[f64]) -> Result<()> {
    let mut text = String::from("section_id,target_month,prediction\n");
    for (s, p) in samples.iter().zip(predictions) {
        text.push_str(&format!("{},{},{p}\n", s.section_id, s.target_month));
    }
    write(path, text)
}

fn execute(cfg: &RunConfig, evaluate: bool) -> Result<RunSummary> {
    let (rs, source) = load_data(cfg).map_err(|e| e.at_stage("load data"))?;
    let data_json = serde_json::to_vec(&rs.records).map_err(|e| Error::Format(e.to_string()))?;
    let series = build_series(&rs);
    if cfg.data.is_none() {
        save_records(&cfg.out.join("data.csv"), &rs)?;
    }

    let prepared = cfg
        .tasks
        .iter()
        .map(|&task| prepare(cfg, &series, task))
        .collect::<Result<Vec<_>>>()?;

    // Every (task, model) pair trains independently; results are joined in
    // configuration order.
    let trained: Vec<Vec<Result<Trained>>> = thread::scope(|scope| {
        let handles: Vec<Vec<_>> = prepared
            .iter()
            .map(|p| {
                cfg.models
                    .iter()
                    .map(|&kind| scope.spawn(move || fit_one(cfg, p, kind)))
                    .collect()
            })
            .collect();
        handles
            .into_iter()
            .map(|hs| hs.into_iter().map(|h| h.join().expect("training thread panicked")).collect())
            .collect()
    });

    let mut reports = Vec::new();
    for (p, results) in prepared.iter().zip(trained) {
        let task_dir = cfg.out.join(p.task.name());
        for sub in ["checkpoints", "predictions", "logs"] {
            create_dir(&task_dir.join(sub))?;
        }
        let spec = cfg.window_spec(p.task);
        let layout = spec.layout();
        save_windows(&task_dir.join("windows_train.csv"), &p.train_raw, &layout, spec.length)?;
        save_windows(&task_dir.join("windows_test.csv"), &p.test_raw, &layout, spec.length)?;

        let mut checkpoints = Vec::with_capacity(cfg.models.len());
        for (&kind, result) in cfg.models.iter().zip(results) {
            let stage = format!("train {}/{}", p.task, kind.key());
            let trained = result.map_err(|e| e.at_stage(stage))?;
            let ckpt = Checkpoint::new(kind, spec.clone(), p.scaler.clone(), trained.model);
            ckpt.save(&task_dir.join("checkpoints").join(format!("{}.json", kind.key())))?;
            let raw: Vec<_> = p.train_raw.iter().map(|s| s.window.clone()).collect();
            let logged = ckpt.predict(&raw)?;
            write_predictions(
                &task_dir.join("predictions").join(format!("{}.csv", kind.key())),
                &p.train_raw,
                &logged,
            )?;
            write_jsonl(&task_dir.join("logs").join(format!("{}.jsonl", kind.key())), p.task, kind, &trained.log)?;
            checkpoints.push(ckpt);
        }

        if evaluate {
            let forecasters: Vec<&dyn Forecaster> = checkpoints.iter().map(|c| c.forecaster()).collect();
            let split = format!("{} {}", cfg.split_mode, cfg.split_ratio);
            let report = compare(&forecasters, &p.test, p.task, &split, cfg.seed)
                .map_err(|e| Error::from(e).at_stage(format!("evaluate {}", p.task)))?;
            report::write_all(&cfg.out, &format!("report_{}", p.task.name()), &report, cfg.svg)?;
            reports.push(report);
        }
    }

    let config_digest = sha256_hex(cfg.to_toml().as_bytes());
    let data_digest = sha256_hex(&data_json);
    let manifest = Manifest {
        format: "pavecast-manifest",
        version: 1,
        run_digest: sha256_hex(format!("{config_digest}{data_digest}").as_bytes()),
        config_digest,
        config: cfg.clone(),
        data: DataInfo {
            source,
            records: rs.len(),
            sections: series.len(),
            digest: data_digest,
        },
        tasks: prepared.into_iter().map(|p| p.info).collect(),
    };
    let text = serde_json::to_string_pretty(&manifest).map_err(|e| Error::Format(e.to_string()))?;
    write(&cfg.out.join("manifest.json"), text + "\n")?;
    Ok(RunSummary {
        out: cfg.out.clone(),
        manifest,
        reports,
    })
}
