//! JSON checkpoint container shared by every model kind.

use std::fs;
use std::path::Path;

use pavecast_core::baselines::{FittedBaseline, ModelKind};
use pavecast_core::sequence::{FeatureLayout, Task, WindowSpec};
use pavecast_core::transformer::TrainedTransformer;
use pavecast_core::{Forecaster, Matrix, Scaler};
use serde::{Deserialize, Serialize};

use crate::csvio::WindowHeader;
use crate::error::{Error, Result};

pub const FORMAT: &str = "pavecast-checkpoint";
pub const VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum SavedModel {
    Transformer(TrainedTransformer),
    Baseline(FittedBaseline),
}

impl SavedModel {
    pub fn forecaster(&self) -> &dyn Forecaster {
        match self {
            SavedModel::Transformer(m) => m,
            SavedModel::Baseline(m) => m,
        }
    }
}

/// A fitted model plus everything needed to score raw windows: the window
/// spec, the feature layout and the training-set scaler.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub format: String,
    pub version: u32,
    pub kind: ModelKind,
    pub task: Task,
    pub window: WindowSpec,
    pub layout: FeatureLayout,
    pub scaler: Scaler,
    pub model: SavedModel,
}

impl Checkpoint {
    pub fn new(kind: ModelKind, window: WindowSpec, scaler: Scaler, model: SavedModel) -> Self {
        Checkpoint {
            format: FORMAT.into(),
            version: VERSION,
            kind,
            task: window.task,
            layout: window.layout(),
            window,
            scaler,
            model,
        }
    }

    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string_pretty(self).map_err(|e| Error::Format(e.to_string()))
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let c: Checkpoint = serde_json::from_str(text).map_err(|e| Error::Format(format!("checkpoint: {e}")))?;
        if c.format != FORMAT || c.version != VERSION {
            return Err(Error::Format(format!(
                "checkpoint: unsupported format {} v{}",
                c.format, c.version
            )));
        }
        Ok(c)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_json()? + "\n").map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text).map_err(|e| e.at_stage(path.display().to_string()))
    }

    pub fn name(&self) -> &str {
        self.model.forecaster().name()
    }

    /// The bare model; it expects scaled windows.
    pub fn forecaster(&self) -> &dyn Forecaster {
        self.model.forecaster()
    }

    /// Errors unless windows declared by `header` fit this checkpoint.
    pub fn check_header(&self, header: &WindowHeader) -> Result<()> {
        if header.length != self.window.length {
            return Err(Error::Compatibility(format!(
                "window length: checkpoint expects L={}, windows have L={}",
                self.window.length, header.length
            )));
        }
        if header.features != self.layout.features {
            let names = |fs: &[pavecast_core::sequence::Feature]| fs.iter().map(|f| f.name()).collect::<Vec<_>>().join(",");
            return Err(Error::Compatibility(format!(
                "features: checkpoint expects d_x={} [{}], windows have d_x={} [{}]",
                self.layout.width(),
                names(&self.layout.features),
                header.features.len(),
                names(&header.features)
            )));
        }
        Ok(())
    }

    /// Scales raw windows with the stored scaler, then predicts.
    pub fn predict(&self, raw: &[Matrix]) -> Result<Vec<f64>> {
        for w in raw {
            if w.rows() != self.window.length || w.cols() != self.layout.width() {
                return Err(Error::Compatibility(format!(
                    "window shape: checkpoint expects {}x{}, found {}x{}",
                    self.window.length,
                    self.layout.width(),
                    w.rows(),
                    w.cols()
                )));
            }
        }
        let scaled = raw.iter().map(|w| self.scaler.transform(w)).collect::<Result<Vec<_>, _>>()?;
        self.model
            .forecaster()
            .predict(&scaled)
            .map_err(|e| Error::Tensor(e).at_stage(format!("predict {}", self.kind)))
    }
}
