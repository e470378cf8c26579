//! Minibatch SGD with momentum, validation-based early stopping, and a
//! per-epoch log. All randomness (initialisation, shuffling, dropout) is
//! derived from the single seed in [`TrainConfig`], so a run is exactly
//! reproducible.

use alloc::vec;
use alloc::vec::Vec;
use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::{
    batch_gradient_indexed, dataset_mse, update_running_stats, HynnArchitecture, HynnParams,
    NnError, TrainSample,
};
use crate::rng;

/// Seed-stream tags so initialisation, shuffling and dropout never collide.
const TAG_INIT: u64 = 0x01;
const TAG_SHUFFLE: u64 = 0x02;
const TAG_DROPOUT: u64 = 0x03;

/// Optimiser settings. `patience` is the number of consecutive epochs the
/// validation error may fail to improve before training stops; the returned
/// parameters are always the best-validation snapshot.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub momentum: f64,
    pub batch_size: usize,
    pub max_epochs: usize,
    pub patience: usize,
    pub seed: u64,
}

impl TrainConfig {
    fn validate(&self) -> Result<(), NnError> {
        if !(self.learning_rate.is_finite() && self.learning_rate > 0.0) {
            return Err(NnError::BadTrainConfig { what: "learning rate must be positive" });
        }
        if !(0.0..1.0).contains(&self.momentum) || !self.momentum.is_finite() {
            return Err(NnError::BadTrainConfig { what: "momentum must lie in [0, 1)" });
        }
        if self.batch_size == 0 {
            return Err(NnError::BadTrainConfig { what: "batch size must be positive" });
        }
        if self.max_epochs == 0 {
            return Err(NnError::BadTrainConfig { what: "max epochs must be positive" });
        }
        if self.patience == 0 {
            return Err(NnError::BadTrainConfig { what: "patience must be positive" });
        }
        Ok(())
    }
}

/// Errors per epoch, in mm^2. `train_mse` is the sample-weighted mean of the
/// training-mode batch losses; `val_mse` is the inference-mode error on the
/// validation split after the epoch's updates.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    pub train_mse: f64,
    pub val_mse: f64,
    /// Best validation error seen up to and including this epoch.
    pub best_val_mse: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainLog {
    pub records: Vec<EpochRecord>,
    /// Epoch whose parameters were returned.
    pub best_epoch: usize,
}

impl TrainLog {
    pub fn best(&self) -> &EpochRecord {
        &self.records[self.best_epoch]
    }
}

/// Strict-improvement early stopping with a consecutive-failure budget.
struct EarlyStopper {
    patience: usize,
    best: f64,
    bad_epochs: usize,
}

enum StopDecision {
    Improved,
    Continue,
    Stop,
}

impl EarlyStopper {
    fn new(patience: usize) -> Self {
        Self { patience, best: f64::INFINITY, bad_epochs: 0 }
    }

    fn observe(&mut self, val: f64) -> StopDecision {
        if val < self.best {
            self.best = val;
            self.bad_epochs = 0;
            StopDecision::Improved
        } else {
            self.bad_epochs += 1;
            if self.bad_epochs >= self.patience {
                StopDecision::Stop
            } else {
                StopDecision::Continue
            }
        }
    }
}

/// Train one scalar regressor from scratch. The output bias starts at the
/// mean training target so the first epochs fit residuals rather than the
/// raw coordinate scale. Returns the best-validation parameters and the
/// epoch log.
pub fn train(
    arch: HynnArchitecture,
    train_set: &[TrainSample],
    val_set: &[TrainSample],
    config: &TrainConfig,
) -> Result<(HynnParams, TrainLog), NnError> {
    config.validate()?;
    if train_set.is_empty() || val_set.is_empty() {
        return Err(NnError::EmptyBatch);
    }

    let mut params = HynnParams::init(arch, rng::mix_seed(config.seed, &[TAG_INIT]))?;
    let target_mean =
        train_set.iter().map(|s| s.target_mm).sum::<f64>() / train_set.len() as f64;
    params.set_output_bias(target_mean);

    let n = train_set.len();
    let mut velocity = vec![0.0f64; params.values().len()];
    let mut indices: Vec<usize> = (0..n).collect();
    let mut stopper = EarlyStopper::new(config.patience);
    let mut best_params = params.clone();
    let mut best_epoch = 0usize;
    let mut records = Vec::new();

    for epoch in 0..config.max_epochs {
        let mut shuffle_rng = rng::stream(config.seed, &[TAG_SHUFFLE, epoch as u64]);
        indices.shuffle(&mut shuffle_rng);

        let mut loss_sum = 0.0;
        for (batch_idx, chunk) in indices.chunks(config.batch_size).enumerate() {
            let dropout_seed =
                rng::mix_seed(config.seed, &[TAG_DROPOUT, epoch as u64, batch_idx as u64]);
            let (loss, grads, stats) =
                match batch_gradient_indexed(&params, train_set, chunk, dropout_seed) {
                    Ok(out) => out,
                    Err(NnError::NonFiniteActivation { .. }) | Err(NnError::NonFiniteGradient) => {
                        return Err(NnError::Diverged { epoch });
                    }
                    Err(e) => return Err(e),
                };
            loss_sum += loss * chunk.len() as f64;
            for ((v, g), p) in
                velocity.iter_mut().zip(&grads).zip(params.values_mut().iter_mut())
            {
                *v = config.momentum * *v - config.learning_rate * g;
                *p += *v;
            }
            update_running_stats(&mut params, &stats);
        }
        let train_mse = loss_sum / n as f64;

        let val_mse = match dataset_mse(&params, val_set) {
            Ok(v) => v,
            Err(NnError::NonFiniteActivation { .. }) => {
                return Err(NnError::Diverged { epoch });
            }
            Err(e) => return Err(e),
        };

        let decision = stopper.observe(val_mse);
        if matches!(decision, StopDecision::Improved) {
            best_params = params.clone();
            best_epoch = epoch;
        }
        records.push(EpochRecord { epoch, train_mse, val_mse, best_val_mse: stopper.best });
        if matches!(decision, StopDecision::Stop) {
            break;
        }
    }

    Ok((best_params, TrainLog { records, best_epoch }))
}
