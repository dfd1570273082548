//! Mini-batch Adam training with best-validation checkpoint selection.

use std::time::Instant;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::Con1dResNet;
use crate::adam::{adam_step, AdamConfig, AdamState};
use crate::error::{NnError, Result};
use crate::layer::{Layer, Mode};
use crate::loss::mse_loss;
use crate::rng::{dropout_stream, shuffle_stream};
use crate::tensor::Batch;
use hsreg_core::SpectraTable;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub adam: AdamConfig,
    pub seed: u64,
    /// Return the weights of the epoch with the lowest validation MSE
    /// rather than the last epoch's.
    pub select_best: bool,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            epochs: 50,
            batch_size: 16,
            adam: AdamConfig {
                lr: 1e-2,
                ..AdamConfig::default()
            },
            seed: 42,
            select_best: true,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self, n_train: usize) -> Result<()> {
        if self.epochs == 0 {
            return Err(NnError::Config("epochs must be at least 1".into()));
        }
        if self.batch_size < 2 {
            return Err(NnError::Config(format!(
                "batch size must be at least 2 for batch normalization, got {}",
                self.batch_size
            )));
        }
        if self.batch_size > n_train {
            return Err(NnError::Config(format!(
                "batch size {} exceeds the {n_train} training samples",
                self.batch_size
            )));
        }
        if !(self.adam.lr > 0.0 && self.adam.lr.is_finite()) {
            return Err(NnError::Config(format!("learning rate must be positive, got {}", self.adam.lr)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    /// 1-based.
    pub epoch: usize,
    /// Sample-weighted mean of the training-mode mini-batch losses.
    pub train_mse: f64,
    pub val_mse: f64,
    pub seconds: f64,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct TrainHistory {
    pub records: Vec<EpochRecord>,
    /// Epoch whose weights were returned.
    pub best_epoch: usize,
}

impl TrainHistory {
    pub fn initial_loss(&self) -> Option<f64> {
        self.records.first().map(|r| r.train_mse)
    }

    pub fn min_val_mse(&self) -> Option<f64> {
        self.records.iter().map(|r| r.val_mse).min_by(f64::total_cmp)
    }

    /// `epoch,train_mse,val_mse,seconds`; without timing the seconds column
    /// is written as 0 so the file is reproducible.
    pub fn to_csv(&self, timing: bool) -> String {
        let mut s = String::from("epoch,train_mse,val_mse,seconds\n");
        for r in &self.records {
            let secs = if timing { r.seconds } else { 0.0 };
            s.push_str(&format!("{},{:?},{:?},{:?}\n", r.epoch, r.train_mse, r.val_mse, secs));
        }
        s
    }
}

/// Splits a shuffled order into batches; a trailing batch of one sample is
/// merged into its predecessor since batch statistics need two.
fn batches(order: &[usize], size: usize) -> Vec<&[usize]> {
    let mut out: Vec<&[usize]> = order.chunks(size).collect();
    if out.len() > 1 && out.last().map(|b| b.len()) == Some(1) {
        out.pop();
        let n = out.len();
        let start = (n - 1) * size;
        out[n - 1] = &order[start..];
    }
    out
}

pub fn train(model: Con1dResNet, train: &SpectraTable, val: &SpectraTable, cfg: &TrainConfig) -> Result<(Con1dResNet, TrainHistory)> {
    if train.bands() != val.bands() {
        return Err(NnError::Shape("training and validation sets use different wavelength grids".into()));
    }
    train_rows(model, train.rows(), train.targets(), val.rows(), val.targets(), cfg)
}

pub fn train_rows(
    mut model: Con1dResNet,
    x_train: &[Vec<f64>],
    y_train: &[f64],
    x_val: &[Vec<f64>],
    y_val: &[f64],
    cfg: &TrainConfig,
) -> Result<(Con1dResNet, TrainHistory)> {
    if x_train.len() != y_train.len() || x_val.len() != y_val.len() {
        return Err(NnError::Shape("row and target counts differ".into()));
    }
    if x_val.is_empty() {
        return Err(NnError::Shape("validation set is empty".into()));
    }
    cfg.validate(x_train.len())?;
    let bands = model.config().input_bands;
    if let Some(r) = x_train.iter().chain(x_val).find(|r| r.len() != bands) {
        return Err(NnError::Shape(format!("model expects {bands} bands, got {}", r.len())));
    }

    let mut adam = AdamState::new(cfg.adam, &model.params());
    let mut history = TrainHistory::default();
    let mut best: Option<(f64, crate::checkpoint::Checkpoint)> = None;
    let mut order: Vec<usize> = (0..x_train.len()).collect();

    for epoch in 1..=cfg.epochs {
        let start = Instant::now();
        order.sort_unstable();
        order.shuffle(&mut shuffle_stream(cfg.seed, epoch));
        let mut drop_rng = dropout_stream(cfg.seed, epoch);
        let mut total = 0.0;
        for idx in batches(&order, cfg.batch_size) {
            let rows: Vec<Vec<f64>> = idx.iter().map(|&i| x_train[i].clone()).collect();
            let y: Vec<f64> = idx.iter().map(|&i| y_train[i]).collect();
            let x = Batch::from_rows(&rows)?;
            for p in model.params_mut() {
                p.zero_grad();
            }
            let out = model.forward(&x, Mode::Train, &mut drop_rng)?;
            let (loss, g) = mse_loss(&out.data, &y)?;
            if !loss.is_finite() {
                return Err(NnError::Divergence { epoch });
            }
            model.backward(&Batch { data: g, ..out })?;
            adam_step(&mut model.params_mut(), &mut adam)?;
            total += loss * idx.len() as f64;
        }
        let train_mse = total / x_train.len() as f64;
        let val_mse = hsreg_core::mse(&model.predict_rows(x_val)?, y_val)?;
        if !val_mse.is_finite() {
            return Err(NnError::Divergence { epoch });
        }
        log::debug!("epoch {epoch}: train {train_mse:.6} val {val_mse:.6}");
        history.records.push(EpochRecord {
            epoch,
            train_mse,
            val_mse,
            seconds: start.elapsed().as_secs_f64(),
        });
        if cfg.select_best && best.as_ref().is_none_or(|(b, _)| val_mse < *b) {
            best = Some((val_mse, model.checkpoint()));
            history.best_epoch = epoch;
        }
    }
    match best {
        Some((_, ckpt)) => model.restore(&ckpt)?,
        None => history.best_epoch = cfg.epochs,
    }
    Ok((model, history))
}
