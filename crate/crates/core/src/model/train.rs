//! Minibatch SGD for the autoencoder-style objectives.

use serde::{Deserialize, Serialize};

use super::Autoencoder;
use crate::datagen::Split;
use crate::math::{Matrix, Rng};
use crate::{Error, Result};

/// Input corruption applied during training; targets stay clean.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Noise {
    None,
    Gaussian { std: f64 },
    /// Each input value is zeroed with probability `p`.
    Mask { p: f64 },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub minibatch_size: usize,
    pub epochs: usize,
    #[serde(default = "default_noise")]
    pub noise: Noise,
    #[serde(default = "default_init_std")]
    pub weight_init_std: f64,
    #[serde(default)]
    pub seed: u64,
    /// Stop after this many epochs without validation improvement and keep
    /// the best parameters. `None` trains for all epochs.
    #[serde(default)]
    pub patience: Option<usize>,
}

fn default_noise() -> Noise {
    Noise::None
}

fn default_init_std() -> f64 {
    0.01
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            learning_rate: 0.01,
            minibatch_size: 100,
            epochs: 20,
            noise: Noise::None,
            weight_init_std: default_init_std(),
            seed: 0,
            patience: None,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate >= 0.0) || !self.learning_rate.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "learning_rate {} must be finite and >= 0",
                self.learning_rate
            )));
        }
        if self.minibatch_size == 0 {
            return Err(Error::InvalidArgument("minibatch_size must be >= 1".into()));
        }
        match self.noise {
            Noise::Gaussian { std } if !(std >= 0.0) => Err(Error::InvalidArgument(format!(
                "noise std {std} < 0"
            ))),
            Noise::Mask { p } if !(0.0..1.0).contains(&p) => Err(Error::InvalidArgument(
                format!("mask probability {p} outside [0, 1)"),
            )),
            _ => Ok(()),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpochStats {
    pub epoch: usize,
    pub train_loss: f64,
    pub valid_loss: Option<f64>,
}

#[derive(Clone, Debug)]
pub struct TrainOutcome<M> {
    pub model: M,
    pub curve: Vec<EpochStats>,
    /// Epoch whose parameters were returned (1-based; 0 = initial model).
    pub best_epoch: usize,
}

fn corrupt(clean: &Matrix, noise: Noise, rng: &mut Rng) -> Matrix {
    match noise {
        Noise::None => clean.clone(),
        Noise::Gaussian { std } => clean.map(|v| v + rng.gaussian(0.0, std)),
        Noise::Mask { p } => clean.map(|v| if rng.bernoulli(p) { 0.0 } else { v }),
    }
}

/// Mean loss over a split without noise, evaluated in chunks.
pub fn evaluate_loss<M: Autoencoder>(model: &M, split: &Split, chunk: usize) -> Result<f64> {
    if split.is_empty() {
        return Err(Error::InvalidArgument("empty split".into()));
    }
    let chunk = chunk.max(1);
    let mut total = 0.0;
    let mut start = 0;
    while start < split.len() {
        let idx: Vec<usize> = (start..(start + chunk).min(split.len())).collect();
        let x = split.x.select_rows(&idx);
        let y = split.y.select_rows(&idx);
        total += model.loss(&x, &y, &x, &y)? * idx.len() as f64;
        start += chunk;
    }
    Ok(total / split.len() as f64)
}

pub fn train<M: Autoencoder>(
    model: M,
    train: &Split,
    valid: Option<&Split>,
    cfg: &TrainConfig,
) -> Result<TrainOutcome<M>> {
    train_with_observer(model, train, valid, cfg, |_| {})
}

/// SGD over shuffled minibatches, calling `observer` after every epoch.
pub fn train_with_observer<M: Autoencoder>(
    mut model: M,
    train: &Split,
    valid: Option<&Split>,
    cfg: &TrainConfig,
    mut observer: impl FnMut(&EpochStats),
) -> Result<TrainOutcome<M>> {
    cfg.validate()?;
    if train.is_empty() {
        return Err(Error::InvalidArgument("training split is empty".into()));
    }
    let base = Rng::new(cfg.seed);
    let mut curve = Vec::with_capacity(cfg.epochs);
    let mut best: Option<(f64, usize, M)> = None;
    let mut order: Vec<usize> = (0..train.len()).collect();

    for epoch in 1..=cfg.epochs {
        let mut rng = base.substream(10, epoch as u64);
        rng.shuffle(&mut order);
        let mut sum = 0.0;
        for (batch_no, idx) in order.chunks(cfg.minibatch_size).enumerate() {
            let xc = train.x.select_rows(idx);
            let yc = train.y.select_rows(idx);
            let xn = corrupt(&xc, cfg.noise, &mut rng);
            let yn = corrupt(&yc, cfg.noise, &mut rng);
            let (loss, grad) = model.loss_and_grad(&xn, &yn, &xc, &yc)?;
            if !loss.is_finite() {
                return Err(Error::Divergence {
                    epoch,
                    batch: batch_no,
                    loss,
                });
            }
            sum += loss * idx.len() as f64;
            model.sgd_step(&grad, cfg.learning_rate);
        }
        let train_loss = sum / train.len() as f64;
        let valid_loss = match valid {
            Some(v) => {
                let l = evaluate_loss(&model, v, 1000)?;
                if !l.is_finite() {
                    return Err(Error::Divergence {
                        epoch,
                        batch: usize::MAX,
                        loss: l,
                    });
                }
                Some(l)
            }
            None => None,
        };
        let stats = EpochStats {
            epoch,
            train_loss,
            valid_loss,
        };
        observer(&stats);
        curve.push(stats);

        if let (Some(patience), Some(vl)) = (cfg.patience, valid_loss) {
            let improved = best.as_ref().is_none_or(|(b, _, _)| vl < *b);
            if improved {
                best = Some((vl, epoch, model.clone()));
            } else if epoch - best.as_ref().map_or(0, |b| b.1) >= patience {
                break;
            }
        }
    }
    match best {
        Some((_, epoch, m)) => Ok(TrainOutcome {
            model: m,
            curve,
            best_epoch: epoch,
        }),
        None => {
            let last = curve.last().map_or(0, |s| s.epoch);
            Ok(TrainOutcome {
                model,
                curve,
                best_epoch: last,
            })
        }
    }
}
