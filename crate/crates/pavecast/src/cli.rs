//! Command-line front end.

use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use pavecast_core::records::validate;
use pavecast_core::sequence::{SplitMode, TargetHistory};
use pavecast_core::{compare, compute_metrics, generate_synthetic, EvaluationReport, Forecaster, SyntheticConfig};

use crate::checkpoint::Checkpoint;
use crate::config::{parse_models, parse_tasks, RunConfig};
use crate::csvio::{read_records, read_windows, save_records};
use crate::error::{Error, Result};
use crate::pipeline::{run_pipeline, run_training, RunSummary};
use crate::report;

#[derive(Debug, Parser)]
#[command(name = "pavecast", version, about = "Forecast pavement skid number and macrotexture after micro-milling")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Write a synthetic inspection-record CSV.
    Generate {
        #[arg(long, default_value_t = 500)]
        synthetic: usize,
        #[arg(long, default_value_t = 7)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Check a records CSV and list every violation.
    Validate {
        #[arg(long)]
        data: PathBuf,
        /// TOML file whose `[ranges]` table overrides the default ranges.
        #[arg(long)]
        config: Option<PathBuf>,
    },
    /// Train the selected models and write checkpoints, logs and windows.
    Train(RunFlags),
    /// Score one checkpoint on a window CSV.
    Evaluate {
        #[arg(long)]
        checkpoint: PathBuf,
        #[arg(long)]
        windows: PathBuf,
        /// Write `<out>.csv` and `<out>.txt`.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Rank several checkpoints on one window CSV.
    Compare {
        #[arg(long, value_delimiter = ',', num_args = 1.., required = true)]
        checkpoints: Vec<PathBuf>,
        #[arg(long)]
        windows: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        svg: bool,
    },
    /// Predict every window of a CSV with a checkpoint.
    Predict {
        #[arg(long)]
        checkpoint: PathBuf,
        #[arg(long)]
        windows: PathBuf,
        /// Output CSV; standard output when absent.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Full benchmark: every model on both targets with reports.
    Reproduce(RunFlags),
}

#[derive(Debug, Clone, Default, Args)]
pub struct RunFlags {
    /// TOML run configuration; flags override it.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long, conflicts_with = "synthetic")]
    pub data: Option<PathBuf>,
    /// Number of synthetic sections.
    #[arg(long)]
    pub synthetic: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub window_length: Option<usize>,
    #[arg(long)]
    pub split_ratio: Option<f64>,
    #[arg(long)]
    pub split_mode: Option<SplitMode>,
    /// skid, macrotexture or all.
    #[arg(long, value_delimiter = ',')]
    pub task: Option<Vec<String>>,
    /// Comma list of model keys, or all.
    #[arg(long, value_delimiter = ',')]
    pub models: Option<Vec<String>>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Whether window rows carry the forecast target's own past values.
    #[arg(long)]
    pub target_history: Option<TargetHistory>,
    #[arg(long)]
    pub allow_padding: bool,
    #[arg(long)]
    pub no_svg: bool,
}

impl RunFlags {
    /// Defaults, then the config file, then flags.
    pub fn resolve(&self, default_out: &str) -> Result<RunConfig> {
        let mut base = RunConfig {
            out: PathBuf::from(default_out),
            ..RunConfig::default()
        };
        if let Some(path) = &self.config {
            base = base.overlay_file(path)?;
        }
        if let Some(p) = &self.data {
            base.data = Some(p.clone());
        }
        if let Some(n) = self.synthetic {
            base.data = None;
            base.synthetic_sections = n;
        }
        if let Some(s) = self.seed {
            base.seed = s;
        }
        if let Some(l) = self.window_length {
            base.window_length = l;
        }
        if let Some(r) = self.split_ratio {
            base.split_ratio = r;
        }
        if let Some(m) = self.split_mode {
            base.split_mode = m;
        }
        if let Some(t) = &self.task {
            base.tasks = parse_tasks(t)?;
        }
        if let Some(m) = &self.models {
            base.models = parse_models(m)?;
        }
        if let Some(o) = &self.out {
            base.out = o.clone();
        }
        if let Some(h) = self.target_history {
            base.target_history = h;
        }
        if self.allow_padding {
            base.allow_padding = true;
        }
        if self.no_svg {
            base.svg = false;
        }
        base.validate()?;
        Ok(base)
    }
}

fn summarize(summary: &RunSummary, out: &mut dyn std::io::Write) -> std::io::Result<()> {
    for report in &summary.reports {
        writeln!(out, "{}", report::render_text(report))?;
    }
    for t in &summary.manifest.tasks {
        writeln!(
            out,
            "{}: {} windows ({} train / {} test), split {}",
            t.task,
            t.windows,
            t.train,
            t.test,
            &t.split_digest[..12]
        )?;
    }
    writeln!(out, "outputs in {}", summary.out.display())
}

fn load_scored_windows(path: &Path, ckpt: &Checkpoint) -> Result<(Vec<pavecast_core::Matrix>, Vec<f64>)> {
    let (header, samples) = read_windows(path)?;
    ckpt.check_header(&header)?;
    if !header.has_target {
        return Err(Error::Compatibility(format!("{}: no target column to score against", path.display())));
    }
    Ok((
        samples.iter().map(|s| s.window.clone()).collect(),
        samples.iter().map(|s| s.target).collect(),
    ))
}

struct Scored<'a> {
    ckpt: &'a Checkpoint,
    raw: &'a [pavecast_core::Matrix],
}

impl Forecaster for Scored<'_> {
    fn name(&self) -> &str {
        self.ckpt.name()
    }

    fn predict(&self, _: &[pavecast_core::Matrix]) -> std::result::Result<Vec<f64>, pavecast_core::TensorError> {
        self.ckpt
            .predict(self.raw)
            .map_err(|_| pavecast_core::TensorError::Invalid("checkpoint prediction failed"))
    }
}

/// Writes predictions for every window in `windows`, preserving order.
pub fn predict_cmd(checkpoint: &Path, windows: &Path, out: &mut dyn std::io::Write) -> Result<usize> {
    let ckpt = Checkpoint::load(checkpoint)?;
    let (header, samples) = read_windows(windows)?;
    ckpt.check_header(&header)?;
    let raw: Vec<_> = samples.iter().map(|s| s.window.clone()).collect();
    let predictions = ckpt.predict(&raw)?;
    let io = |e| Error::io("<output>", e);
    writeln!(out, "section_id,target_month,prediction").map_err(io)?;
    for (s, p) in samples.iter().zip(&predictions) {
        writeln!(out, "{},{},{p}", s.section_id, s.target_month).map_err(io)?;
    }
    Ok(predictions.len())
}

fn compare_checkpoints(paths: &[PathBuf], windows: &Path, seed: u64) -> Result<EvaluationReport> {
    let ckpts = paths.iter().map(|p| Checkpoint::load(p)).collect::<Result<Vec<_>>>()?;
    let first = &ckpts[0];
    for c in &ckpts[1..] {
        if c.task != first.task || c.window != first.window {
            return Err(Error::Compatibility(format!(
                "checkpoints disagree: {} ({}, L={}) vs {} ({}, L={})",
                first.kind, first.task, first.window.length, c.kind, c.task, c.window.length
            )));
        }
    }
    let (raw, targets) = load_scored_windows(windows, first)?;
    let scored: Vec<Scored> = ckpts.iter().map(|ckpt| Scored { ckpt, raw: &raw }).collect();
    let forecasters: Vec<&dyn Forecaster> = scored.iter().map(|s| s as &dyn Forecaster).collect();
    let samples: Vec<pavecast_core::WindowSample> = raw
        .iter()
        .zip(&targets)
        .map(|(w, &t)| pavecast_core::WindowSample {
            section_id: String::new(),
            window: w.clone(),
            target_month: 0,
            target: t,
            padded: false,
        })
        .collect();
    let split = format!("windows {}", windows.file_name().map(|n| n.to_string_lossy()).unwrap_or_default());
    Ok(compare(&forecasters, &samples, first.task, &split, seed)?)
}

/// Runs one command, writing human-readable output to `out`.
pub fn run(cli: Cli, out: &mut dyn std::io::Write) -> Result<()> {
    let io = |e| Error::io("<output>", e);
    match cli.command {
        Command::Generate { synthetic, seed, out: path } => {
            let rs = generate_synthetic(&SyntheticConfig::with_sections(synthetic), seed)?;
            save_records(&path, &rs)?;
            writeln!(out, "wrote {} records for {synthetic} sections to {}", rs.len(), path.display()).map_err(io)?;
        }
        Command::Validate { data, config } => {
            let ranges = match config {
                Some(p) => RunConfig::default().overlay_file(&p)?.ranges,
                None => RunConfig::default().ranges,
            };
            let (rs, _) = read_records(&data)?;
            let report = validate(&rs, &ranges);
            if !report.is_empty() {
                return Err(Error::Validation { report });
            }
            writeln!(out, "{}: {} records, no violations", data.display(), rs.len()).map_err(io)?;
        }
        Command::Train(flags) => {
            let cfg = flags.resolve("pavecast-train")?;
            let summary = run_training(&cfg)?;
            summarize(&summary, out).map_err(io)?;
        }
        Command::Reproduce(flags) => {
            let cfg = flags.resolve("pavecast-reproduce")?;
            let summary = run_pipeline(&cfg)?;
            summarize(&summary, out).map_err(io)?;
        }
        Command::Evaluate {
            checkpoint,
            windows,
            out: path,
        } => {
            let ckpt = Checkpoint::load(&checkpoint)?;
            let (raw, targets) = load_scored_windows(&windows, &ckpt)?;
            let predictions = ckpt.predict(&raw)?;
            let metrics = compute_metrics(&targets, &predictions)?;
            let report = EvaluationReport::new(
                ckpt.task,
                vec![pavecast_core::metrics::ReportRow {
                    model: ckpt.name().into(),
                    metrics,
                }],
                format!("windows {}", windows.display()),
                0,
            );
            if let Some(p) = path {
                report::write_csv(&p.with_extension("csv"), &report)?;
                let txt = p.with_extension("txt");
                fs::write(&txt, report::render_text(&report)).map_err(|e| Error::io(&txt, e))?;
            }
            write!(out, "{}", report::render_text(&report)).map_err(io)?;
        }
        Command::Compare {
            checkpoints,
            windows,
            out: dir,
            seed,
            svg,
        } => {
            let report = compare_checkpoints(&checkpoints, &windows, seed)?;
            fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
            report::write_all(&dir, &format!("report_{}", report.target.name()), &report, svg)?;
            write!(out, "{}", report::render_text(&report)).map_err(io)?;
        }
        Command::Predict {
            checkpoint,
            windows,
            out: path,
        } => match path {
            Some(p) => {
                let mut file = fs::File::create(&p).map_err(|e| Error::io(&p, e))?;
                predict_cmd(&checkpoint, &windows, &mut file)?;
                file.flush().map_err(|e| Error::io(&p, e))?;
            }
            None => {
                predict_cmd(&checkpoint, &windows, out)?;
            }
        },
    }
    Ok(())
}
