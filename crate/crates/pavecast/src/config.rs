//! Run configuration: defaults, then a TOML file, then command-line flags.

use std::fs;
use std::path::{Path, PathBuf};

use pavecast_core::baselines::{FitConfig, ModelKind};
use pavecast_core::sequence::{SplitMode, Task, TargetHistory, WindowSpec};
use pavecast_core::transformer::TransformerConfig;
use pavecast_core::RangeTable;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Transformer hyperparameters other than the data-dependent `d_x`, `L`
/// and seed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TransformerSettings {
    pub d_model: usize,
    pub heads: usize,
    pub d_k: usize,
    pub layers: usize,
    pub d_ff: usize,
    pub learning_rate: f64,
    pub max_epochs: usize,
    pub patience: usize,
    pub batch_size: usize,
    /// Share of training sections held out for early stopping.
    pub validation_fraction: f64,
}

impl Default for TransformerSettings {
    fn default() -> Self {
        let c = TransformerConfig::new(1, 1);
        TransformerSettings {
            d_model: c.d_model,
            heads: c.heads,
            d_k: c.d_k,
            layers: c.layers,
            d_ff: c.d_ff,
            learning_rate: c.learning_rate,
            max_epochs: c.max_epochs,
            patience: c.patience,
            batch_size: c.batch_size,
            validation_fraction: 0.15,
        }
    }
}

impl TransformerSettings {
    pub fn config(&self, d_x: usize, window_length: usize, seed: u64) -> TransformerConfig {
        TransformerConfig {
            d_x,
            d_model: self.d_model,
            heads: self.heads,
            d_k: self.d_k,
            layers: self.layers,
            d_ff: self.d_ff,
            window_length,
            learning_rate: self.learning_rate,
            max_epochs: self.max_epochs,
            patience: self.patience,
            batch_size: self.batch_size,
            seed,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    /// Records CSV; when absent a synthetic corpus is generated.
    pub data: Option<PathBuf>,
    pub synthetic_sections: usize,
    pub seed: u64,
    pub tasks: Vec<Task>,
    pub window_length: usize,
    pub allow_padding: bool,
    pub target_history: TargetHistory,
    pub split_ratio: f64,
    pub split_mode: SplitMode,
    pub models: Vec<ModelKind>,
    pub svg: bool,
    pub transformer: TransformerSettings,
    pub baselines: FitConfig,
    pub ranges: RangeTable,
    /// Output directory. Not part of the run identity.
    #[serde(skip)]
    pub out: PathBuf,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            data: None,
            synthetic_sections: 500,
            seed: 7,
            tasks: Task::ALL.to_vec(),
            window_length: 4,
            allow_padding: false,
            target_history: TargetHistory::Excluded,
            split_ratio: 0.8,
            split_mode: SplitMode::Sections,
            models: ModelKind::ALL.to_vec(),
            svg: true,
            transformer: TransformerSettings::default(),
            baselines: FitConfig::default(),
            ranges: RangeTable::default(),
            out: PathBuf::from("pavecast-run"),
        }
    }
}

fn merge(base: &mut toml::Value, over: toml::Value) {
    match (base, over) {
        (toml::Value::Table(b), toml::Value::Table(o)) => {
            for (k, v) in o {
                match b.get_mut(&k) {
                    Some(slot) => merge(slot, v),
                    None => {
                        b.insert(k, v);
                    }
                }
            }
        }
        (slot, v) => *slot = v,
    }
}

impl RunConfig {
    /// `self` with every key of `text` (TOML) laid over it. Unknown keys are
    /// an error.
    pub fn overlay_toml(&self, text: &str) -> Result<RunConfig> {
        let over: toml::Table = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        let mut base = toml::Value::try_from(self).map_err(|e| Error::Config(e.to_string()))?;
        merge(&mut base, toml::Value::Table(over));
        let mut cfg: RunConfig = base.try_into().map_err(|e: toml::de::Error| Error::Config(e.to_string()))?;
        cfg.out = self.out.clone();
        Ok(cfg)
    }

    pub fn overlay_file(&self, path: &Path) -> Result<RunConfig> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        self.overlay_toml(&text)
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())))
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("run config serialises")
    }

    pub fn window_spec(&self, task: Task) -> WindowSpec {
        WindowSpec {
            length: self.window_length,
            task,
            history: self.target_history,
            allow_padding: self.allow_padding,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::Config(m.into()));
        if self.window_length == 0 {
            return bad("window_length must be at least 1");
        }
        if !(self.split_ratio > 0.0 && self.split_ratio < 1.0) {
            return bad("split_ratio must lie in (0, 1)");
        }
        if self.tasks.is_empty() {
            return bad("at least one task is required");
        }
        if self.models.is_empty() {
            return bad("at least one model is required");
        }
        if self.data.is_none() && self.synthetic_sections == 0 {
            return bad("synthetic_sections must be at least 1");
        }
        let f = self.transformer.validation_fraction;
        if !(f > 0.0 && f < 1.0) {
            return bad("transformer.validation_fraction must lie in (0, 1)");
        }
        let mut seen = Vec::new();
        for m in &self.models {
            if seen.contains(m) {
                return Err(Error::Config(format!("model `{m}` listed twice")));
            }
            seen.push(*m);
        }
        self.baselines
            .validate()
            .map_err(|e| Error::Config(format!("baselines: {e}")))?;
        self.transformer
            .config(1, self.window_length, 0)
            .validate()
            .map_err(|e| Error::Config(e.to_string()))?;
        Ok(())
    }
}

/// Parses a comma list of tasks; `all` selects both.
pub fn parse_tasks(items: &[String]) -> Result<Vec<Task>> {
    let mut out = Vec::new();
    for item in items {
        if item == "all" || item == "both" {
            return Ok(Task::ALL.to_vec());
        }
        let t: Task = item.parse().map_err(Error::Config)?;
        if !out.contains(&t) {
            out.push(t);
        }
    }
    Ok(out)
}

/// Parses a comma list of models; `all` selects every kind.
pub fn parse_models(items: &[String]) -> Result<Vec<ModelKind>> {
    let mut out = Vec::new();
    for item in items {
        if item == "all" {
            return Ok(ModelKind::ALL.to_vec());
        }
        let m: ModelKind = item.parse().map_err(Error::Config)?;
        if !out.contains(&m) {
            out.push(m);
        }
    }
    Ok(out)
}
