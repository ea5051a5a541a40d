//! End-to-end optimization: weighted likelihood objective, RMSprop updates,
//! per-record stochastic training with early stopping on validation loss.

use std::time::Instant;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::{Dataset, Record};
use crate::linalg::l2_norm_sq;
use crate::model::{forward, gradients, AttentionConfig, ForwardTrace, ModelParams, ModelSizes};
use crate::{Error, Result};

/// Probabilities are floored at 1e-12 before the log; hitting the floor is
/// counted as a numeric event.
pub const PROB_FLOOR: f64 = 1e-12;
/// ln(1e-12), the matching floor on log-probabilities.
pub const LOG_PROB_FLOOR: f64 = -27.631021115928547;

/// Gaussian time penalty spread and the relative weight of the time term.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LossConfig {
    pub sigma: f64,
    pub time_weight: f64,
}

impl Default for LossConfig {
    fn default() -> Self {
        LossConfig { sigma: 1.0, time_weight: 1.0 }
    }
}

impl LossConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.sigma > 0.0) {
            return Err(Error::Config(format!("sigma must be positive, got {}", self.sigma)));
        }
        if self.time_weight < 0.0 {
            return Err(Error::Config("time_loss_weight must be nonnegative".into()));
        }
        Ok(())
    }
}

/// A sequence loss split into its class and time terms.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct LossBreakdown {
    pub total: f64,
    pub class_term: f64,
    pub time_term: f64,
    /// Steps whose target probability hit the 1e-12 floor.
    pub clamped_steps: usize,
    pub steps: usize,
}

/// Class weights `b_z = N_total / (Z * max(N_z, 1))`: inverse frequency,
/// floored so empty classes stay finite. Returns weights and raw counts.
pub fn class_weights(train_records: &[&Record], num_dims: usize) -> (Vec<f64>, Vec<usize>) {
    let mut counts = vec![0usize; num_dims];
    for rec in train_records {
        for ev in &rec.sequence.events {
            counts[ev.dim] += 1;
        }
    }
    let total: usize = counts.iter().sum();
    let weights = counts
        .iter()
        .map(|&c| total as f64 / (num_dims as f64 * c.max(1) as f64))
        .collect();
    (weights, counts)
}

/// Negated log-likelihood of one record under its forward trace:
/// weighted cross-entropy on the next dimension plus a Gaussian penalty on
/// the predicted inter-event gap.
pub fn sequence_loss(
    trace: &ForwardTrace,
    record: &Record,
    class_weights: &[f64],
    cfg: &LossConfig,
) -> LossBreakdown {
    let mut out = LossBreakdown::default();
    let norm_const = 0.5 * (2.0 * std::f64::consts::PI * cfg.sigma * cfg.sigma).ln();
    for (j, step) in trace.steps.iter().enumerate() {
        let target = record.sequence.events[j + 1];
        let true_gap = target.time - record.sequence.events[j].time;

        let max_logit = step.logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let lse =
            max_logit + step.logits.iter().map(|l| (l - max_logit).exp()).sum::<f64>().ln();
        let mut log_prob = step.logits[target.dim] - lse;
        if log_prob < LOG_PROB_FLOOR {
            log_prob = LOG_PROB_FLOOR;
            out.clamped_steps += 1;
        }
        out.class_term += -class_weights[target.dim] * log_prob;

        let diff = true_gap - step.pred_gap_raw;
        let log_f = -norm_const - diff * diff / (2.0 * cfg.sigma * cfg.sigma);
        out.time_term += -cfg.time_weight * log_f;
        out.steps += 1;
    }
    out.total = out.class_term + out.time_term;
    out
}

/// Convenience: forward plus loss for one record.
pub fn record_loss(
    record: &Record,
    params: &ModelParams,
    attention: &AttentionConfig,
    class_weights: &[f64],
    cfg: &LossConfig,
) -> Result<LossBreakdown> {
    let trace = forward(record, params, attention)?;
    Ok(sequence_loss(&trace, record, class_weights, cfg))
}

/// RMSprop state: running mean of squared gradients per parameter.
#[derive(Clone, Debug)]
pub struct RmsPropState {
    pub mean_sq: Vec<f64>,
    pub lr: f64,
    pub decay: f64,
    pub eps: f64,
}

impl RmsPropState {
    pub fn new(num_params: usize, lr: f64, decay: f64, eps: f64) -> Self {
        RmsPropState { mean_sq: vec![0.0; num_params], lr, decay, eps }
    }
}

/// One RMSprop update, elementwise over the parameter/gradient tensor pairs:
/// `s <- decay * s + (1 - decay) * g^2; theta <- theta - lr * g / (sqrt(s) + eps)`.
pub fn rmsprop_step(params: &mut ModelParams, grads: &ModelParams, state: &mut RmsPropState) {
    let mut offset = 0;
    let grad_slices = grads.tensor_slices();
    for (p_slice, g_slice) in params.tensor_slices_mut().into_iter().zip(grad_slices) {
        for (p, g) in p_slice.iter_mut().zip(g_slice) {
            let s = &mut state.mean_sq[offset];
            *s = state.decay * *s + (1.0 - state.decay) * g * g;
            *p -= state.lr * g / (s.sqrt() + state.eps);
            offset += 1;
        }
    }
    debug_assert_eq!(offset, state.mean_sq.len());
}

/// Scales the gradient in place so its global L2 norm is at most `clip`.
pub fn clip_global_norm(grads: &mut ModelParams, clip: f64) -> f64 {
    let norm_sq: f64 = grads.tensor_slices().iter().map(|s| l2_norm_sq(s)).sum();
    let norm = norm_sq.sqrt();
    if clip > 0.0 && norm > clip {
        let scale = clip / norm;
        for slice in grads.tensor_slices_mut() {
            for v in slice {
                *v *= scale;
            }
        }
    }
    norm
}

/// Early stopping on validation loss: stop once `patience` epochs pass
/// without strict improvement.
#[derive(Clone, Debug)]
pub struct EarlyStopper {
    patience: usize,
    best: f64,
    pub best_epoch: usize,
    since_best: usize,
}

impl EarlyStopper {
    pub fn new(patience: usize) -> Self {
        EarlyStopper { patience, best: f64::INFINITY, best_epoch: 0, since_best: 0 }
    }

    /// Records one epoch's validation loss; returns (improved, stop).
    pub fn observe(&mut self, epoch: usize, val_loss: f64) -> (bool, bool) {
        if val_loss < self.best {
            self.best = val_loss;
            self.best_epoch = epoch;
            self.since_best = 0;
            (true, false)
        } else {
            self.since_best += 1;
            (false, self.since_best >= self.patience)
        }
    }
}

/// Everything `train` needs: optimization hyperparameters, architecture
/// sizes, and the attention/loss configs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub max_epochs: usize,
    pub patience: usize,
    pub lr: f64,
    pub rms_decay: f64,
    pub rms_eps: f64,
    pub clip_norm: f64,
    pub seed: u64,
    pub attention: AttentionConfig,
    pub loss: LossConfig,
    pub embed_dim: usize,
    pub hidden_event: usize,
    pub hidden_series: usize,
    pub hidden_fuse: usize,
    /// false trains the event-only variant even when series data exists.
    pub use_series: bool,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            max_epochs: 50,
            patience: 10,
            lr: 1e-3,
            rms_decay: 0.9,
            rms_eps: 1e-8,
            clip_norm: 5.0,
            seed: 0,
            attention: AttentionConfig::default(),
            loss: LossConfig::default(),
            embed_dim: 16,
            hidden_event: 32,
            hidden_series: 32,
            hidden_fuse: 32,
            use_series: true,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.max_epochs < 1 {
            return Err(Error::Config("max_epochs must be at least 1".into()));
        }
        if self.patience < 1 {
            return Err(Error::Config("patience must be at least 1".into()));
        }
        if !(self.lr > 0.0) || !(0.0..1.0).contains(&self.rms_decay) || !(self.rms_eps > 0.0) {
            return Err(Error::Config("bad RMSprop hyperparameters".into()));
        }
        self.attention.validate()?;
        self.loss.validate()
    }

    pub fn sizes(&self, num_dims: usize, feature_width: usize) -> ModelSizes {
        ModelSizes {
            num_dims,
            feature_width,
            embed_dim: self.embed_dim,
            hidden_event: self.hidden_event,
            hidden_series: self.hidden_series,
            hidden_fuse: self.hidden_fuse,
        }
    }
}

/// One row of the training log.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EpochStats {
    pub epoch: usize,
    pub train_loss: f64,
    pub val_loss: f64,
    pub seconds: f64,
}

/// Result of a training run: the best-validation parameters and the log.
#[derive(Clone, Debug)]
pub struct TrainOutcome {
    pub params: ModelParams,
    pub log: Vec<EpochStats>,
    pub class_weights: Vec<f64>,
    pub class_counts: Vec<usize>,
    pub best_epoch: usize,
    pub stopped_early: bool,
}

/// Trains from a fresh initialization.
pub fn train(dataset: &Dataset, cfg: &TrainConfig) -> Result<TrainOutcome> {
    train_from(dataset, cfg, None)
}

/// Trains, optionally resuming from existing parameters at a given epoch
/// offset (the log continues counting from there).
pub fn train_from(
    dataset: &Dataset,
    cfg: &TrainConfig,
    resume: Option<(ModelParams, usize)>,
) -> Result<TrainOutcome> {
    cfg.validate()?;
    let train_records = dataset.train();
    let val_records = dataset.validation();
    if train_records.is_empty() || val_records.is_empty() {
        return Err(Error::Data("training needs nonempty train and validation splits".into()));
    }

    let (weights, counts) = class_weights(&train_records, dataset.num_dims);
    let feature_width = dataset.feature_width();
    let use_series = cfg.use_series && feature_width > 0;
    let (mut params, epoch_offset) = match resume {
        Some((p, offset)) => {
            p.validate()?;
            (p, offset)
        }
        None => {
            let mut fresh =
                ModelParams::init(cfg.sizes(dataset.num_dims, feature_width), use_series, cfg.seed);
            fresh.input_gap_scale = inverse_mean_gap(&train_records);
            (fresh, 0)
        }
    };

    let mut opt = RmsPropState::new(params.num_params(), cfg.lr, cfg.rms_decay, cfg.rms_eps);
    let mut order: Vec<usize> = (0..train_records.len()).collect();
    let mut shuffle_rng = ChaCha12Rng::seed_from_u64(cfg.seed ^ 0x5eed_5eed_5eed_5eed);
    let mut stopper = EarlyStopper::new(cfg.patience);
    let mut best_params = params.clone();
    let mut log = Vec::new();
    let mut stopped_early = false;

    for epoch_idx in 0..cfg.max_epochs {
        let epoch = epoch_offset + epoch_idx + 1;
        let started = Instant::now();
        order.shuffle(&mut shuffle_rng);

        let mut train_loss_total = 0.0;
        let mut train_steps = 0usize;
        for &rec_idx in &order {
            let record = train_records[rec_idx];
            if record.sequence.len() < 2 {
                continue;
            }
            let trace = forward(record, &params, &cfg.attention)?;
            let (mut grads, breakdown) =
                gradients(&trace, record, &weights, &cfg.loss, &params);
            if !breakdown.total.is_finite() {
                return Err(Error::Numeric(format!(
                    "non-finite loss on record {} at epoch {epoch} (class {}, time {})",
                    record.id, breakdown.class_term, breakdown.time_term
                )));
            }
            train_loss_total += breakdown.total;
            train_steps += breakdown.steps;
            clip_global_norm(&mut grads, cfg.clip_norm);
            rmsprop_step(&mut params, &grads, &mut opt);
        }

        let val = mean_loss(&val_records, &params, cfg, &weights)?;
        let train_loss =
            if train_steps > 0 { train_loss_total / train_steps as f64 } else { 0.0 };
        log.push(EpochStats {
            epoch,
            train_loss,
            val_loss: val,
            seconds: started.elapsed().as_secs_f64(),
        });

        let (improved, stop) = stopper.observe(epoch, val);
        if improved {
            best_params = params.clone();
        }
        if stop {
            stopped_early = true;
            break;
        }
    }

    Ok(TrainOutcome {
        params: best_params,
        log,
        class_weights: weights,
        class_counts: counts,
        best_epoch: stopper.best_epoch,
        stopped_early,
    })
}

/// Inverse mean inter-event gap of the records, the gap normalization the
/// event LSTM input uses. 1.0 when no gaps exist.
fn inverse_mean_gap(records: &[&Record]) -> f64 {
    let mut total = 0.0;
    let mut n = 0usize;
    for rec in records {
        let ev = &rec.sequence.events;
        for j in 1..ev.len() {
            total += ev[j].time - ev[j - 1].time;
            n += 1;
        }
    }
    if n == 0 || total <= 0.0 {
        1.0
    } else {
        n as f64 / total
    }
}

/// Mean per-step loss over a record set (parallel, reduced in index order).
pub fn mean_loss(
    records: &[&Record],
    params: &ModelParams,
    cfg: &TrainConfig,
    weights: &[f64],
) -> Result<f64> {
    let losses: Vec<LossBreakdown> = records
        .par_iter()
        .filter(|r| r.sequence.len() >= 2)
        .map(|r| record_loss(r, params, &cfg.attention, weights, &cfg.loss))
        .collect::<Result<_>>()?;
    let steps: usize = losses.iter().map(|l| l.steps).sum();
    if steps == 0 {
        return Err(Error::Data("no scoreable steps in record set".into()));
    }
    Ok(losses.iter().map(|l| l.total).sum::<f64>() / steps as f64)
}
