use alloc::vec::Vec;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::model::{mse_loss, tape_forward, TrainedTransformer};
use super::params::ParamSet;
use super::{TransformerConfig, TransformerError};
use crate::optim::Adam;
use crate::seed;
use crate::sequence::{split, SequenceError, SplitMode, WindowSample};
use crate::tensor::{Matrix, Tape};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    /// 1-based.
    pub epoch: usize,
    /// Sample-weighted mean of the minibatch losses seen during the epoch.
    pub train_mse: f64,
    /// Validation MSE after the epoch's updates.
    pub validation_mse: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainingLog {
    pub epochs: Vec<EpochRecord>,
    /// Epoch whose parameters were returned; 0 when no epoch ran.
    pub best_epoch: usize,
    pub stopped_early: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StopDecision {
    Improved,
    Continue,
    Stop,
}

/// Patience counter over strictly improving validation losses.
#[derive(Debug, Clone)]
pub struct EarlyStopping {
    patience: usize,
    best: f64,
    best_epoch: usize,
    stale: usize,
}

impl EarlyStopping {
    pub fn new(patience: usize) -> Self {
        EarlyStopping {
            patience,
            best: f64::INFINITY,
            best_epoch: 0,
            stale: 0,
        }
    }

    pub fn observe(&mut self, epoch: usize, loss: f64) -> StopDecision {
        if loss < self.best {
            self.best = loss;
            self.best_epoch = epoch;
            self.stale = 0;
            StopDecision::Improved
        } else {
            self.stale += 1;
            if self.stale >= self.patience {
                StopDecision::Stop
            } else {
                StopDecision::Continue
            }
        }
    }

    pub fn best_epoch(&self) -> usize {
        self.best_epoch
    }

    pub fn best(&self) -> f64 {
        self.best
    }
}

/// Drives `epoch_fn` (returning train and validation loss) for up to
/// `max_epochs` epochs with early stopping, and returns the state snapshot
/// from the best validation epoch.
pub fn run_epochs<P: Clone, E>(
    max_epochs: usize,
    patience: usize,
    state: &mut P,
    mut epoch_fn: impl FnMut(usize, &mut P) -> Result<(f64, f64), E>,
) -> Result<(P, TrainingLog), E> {
    let mut stopper = EarlyStopping::new(patience);
    let mut best = state.clone();
    let mut log = TrainingLog {
        epochs: Vec::new(),
        best_epoch: 0,
        stopped_early: false,
    };
    for epoch in 1..=max_epochs {
        let (train_mse, validation_mse) = epoch_fn(epoch, state)?;
        log.epochs.push(EpochRecord {
            epoch,
            train_mse,
            validation_mse,
        });
        match stopper.observe(epoch, validation_mse) {
            StopDecision::Improved => best = state.clone(),
            StopDecision::Continue => {}
            StopDecision::Stop => {
                log.stopped_early = true;
                break;
            }
        }
    }
    log.best_epoch = stopper.best_epoch();
    Ok((best, log))
}

/// Section-grouped holdout of roughly `fraction` of `samples` for early
/// stopping.
pub fn holdout(
    samples: &[WindowSample],
    fraction: f64,
    seed: u64,
) -> Result<(Vec<WindowSample>, Vec<WindowSample>), SequenceError> {
    split(samples, 1.0 - fraction, SplitMode::Sections, seed::derive_seed(seed, "validation"))
}

/// Minibatch Adam on the MSE with early stopping on `validation`.
pub fn train(
    train: &[WindowSample],
    validation: &[WindowSample],
    config: &TransformerConfig,
) -> Result<(TrainedTransformer, TrainingLog), TransformerError> {
    config.validate()?;
    if train.is_empty() {
        return Err(TransformerError::EmptyData("training"));
    }
    if validation.is_empty() {
        return Err(TransformerError::EmptyData("validation"));
    }
    let mean_target = train.iter().map(|s| s.target).sum::<f64>() / train.len() as f64;
    let mut params = ParamSet::init(config, &mut seed::stream(config.seed, "transformer/init"), mean_target);
    let mut adam = Adam::new(config.learning_rate, params.tensors());
    let mut shuffle = seed::stream(config.seed, "transformer/shuffle");
    let val_windows: Vec<Matrix> = validation.iter().map(|s| s.window.clone()).collect();
    let val_targets: Vec<f64> = validation.iter().map(|s| s.target).collect();
    let mut order: Vec<usize> = (0..train.len()).collect();

    let diverged = |epoch: usize, e: TransformerError| match e {
        TransformerError::NonFinite { .. } => TransformerError::Divergence { epoch },
        other => other,
    };

    let (params, log) = run_epochs(config.max_epochs, config.patience, &mut params, |epoch, params| {
        order.shuffle(&mut shuffle);
        let mut total = 0.0;
        for batch in order.chunks(config.batch_size) {
            let windows: Vec<&Matrix> = batch.iter().map(|&i| &train[i].window).collect();
            let targets: Vec<f64> = batch.iter().map(|&i| train[i].target).collect();
            let mut tape = Tape::new();
            let vars = params.map(|m| tape.leaf(m.clone()));
            let y_hat = tape_forward(&mut tape, &vars, &windows, config).map_err(|e| diverged(epoch, e))?;
            let loss = tape.mse(y_hat, &targets)?;
            let value = tape.value(loss)[(0, 0)];
            if !value.is_finite() {
                return Err(TransformerError::Divergence { epoch });
            }
            total += value * batch.len() as f64;
            let grads = tape.backward(loss)?;
            let grads: Vec<Matrix> = vars
                .tensors()
                .into_iter()
                .zip(params.tensors())
                .map(|(&v, p)| grads.get_or_zeros(v, p))
                .collect();
            adam.step(params.tensors_mut(), &grads);
        }
        if !params.is_finite() {
            return Err(TransformerError::Divergence { epoch });
        }
        let validation_mse =
            mse_loss(&val_windows, &val_targets, params, config).map_err(|e| diverged(epoch, e))?;
        if !validation_mse.is_finite() {
            return Err(TransformerError::Divergence { epoch });
        }
        Ok((total / train.len() as f64, validation_mse))
    })?;
    Ok((
        TrainedTransformer {
            config: config.clone(),
            params,
        },
        log,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn patience_one_stops_after_first_worse_epoch() {
        let losses = [1.0, 2.0, 3.0, 4.0];
        let mut state = 0usize;
        let (best, log) = run_epochs::<usize, ()>(10, 1, &mut state, |epoch, s| {
            *s = epoch;
            Ok((0.0, losses[epoch - 1]))
        })
        .unwrap();
        assert_eq!(log.epochs.len(), 2);
        assert!(log.stopped_early);
        assert_eq!(log.best_epoch, 1);
        assert_eq!(best, 1);
    }

    #[test]
    fn ties_do_not_count_as_improvement() {
        let mut es = EarlyStopping::new(2);
        assert_eq!(es.observe(1, 1.0), StopDecision::Improved);
        assert_eq!(es.observe(2, 1.0), StopDecision::Continue);
        assert_eq!(es.observe(3, 1.0), StopDecision::Stop);
        assert_eq!(es.best_epoch(), 1);
    }

    #[test]
    fn runs_to_max_epochs_without_stall() {
        let mut state = 0usize;
        let (best, log) = run_epochs::<usize, ()>(5, 2, &mut state, |epoch, s| {
            *s = epoch;
            Ok((0.0, 10.0 - epoch as f64))
        })
        .unwrap();
        assert_eq!(log.epochs.len(), 5);
        assert!(!log.stopped_early);
        assert_eq!(best, 5);
    }
}
