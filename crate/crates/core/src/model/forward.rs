//! Forward pass: from a record to per-step predictions with every
//! intermediate cached for exact backpropagation.

use crate::data::{align_series_to_time, Record};
use crate::linalg::{dot, Mat};
use crate::{Error, Result};

use super::lstm::{lstm_run, LstmStep};
use super::{embed, sigmoid, AttentionConfig, ModelParams};

/// Everything computed at one prediction step `j` (0-based: the step that
/// predicts event `j + 1` after consuming events `0..=j`).
#[derive(Clone, Debug)]
pub struct PredictionStepTrace {
    /// Series sample feeding the synergic layer; None for event-only runs.
    pub aligned_sample: Option<usize>,
    /// First event index inside the attention window.
    pub window_start: usize,
    /// Z x window: raw `tanh(h_i . v_z)`, signed, before thresholding.
    pub tanh_scores: Mat,
    /// Z x window: thresholded attention weights in [0, 1).
    pub attn_weights: Mat,
    /// Z x hidden_event: additive context per target dimension.
    pub contexts: Mat,
    /// Z x hidden_fuse: sigmoid fusion of [series state, context].
    pub fused: Mat,
    /// Per-dimension scores feeding the softmax.
    pub logits: Vec<f64>,
    /// Next-dimension distribution u_{j+1}.
    pub probs: Vec<f64>,
    /// Argmax of `probs`, ties toward the lower index.
    pub pred_dim: usize,
    /// Raw time-head output: the predicted inter-event gap, unclamped.
    pub pred_gap_raw: f64,
}

/// Full forward cache: LSTM step states for both channels plus every
/// prediction step.
#[derive(Clone, Debug)]
pub struct ForwardTrace {
    pub event_steps: Vec<LstmStep>,
    pub series_steps: Vec<LstmStep>,
    pub steps: Vec<PredictionStepTrace>,
}

/// Runs the model over `record`, producing one prediction step for each
/// known target: step `j` consumes events `0..=j` and predicts event `j+1`,
/// for `j` in `0..len-1`. A one-event record yields an empty trace.
pub fn forward(
    record: &Record,
    params: &ModelParams,
    config: &AttentionConfig,
) -> Result<ForwardTrace> {
    let n = record.sequence.len();
    if n == 0 {
        return Err(Error::Data("forward needs at least one event".into()));
    }
    run_steps(record, params, config, n - 1)
}

/// The model's answer for the next, unseen event.
#[derive(Clone, Debug)]
pub struct NextPrediction {
    pub dim: usize,
    /// Predicted inter-event gap, clamped at zero.
    pub gap: f64,
    /// All dimensions ordered by descending probability.
    pub ranked_dims: Vec<usize>,
    pub probs: Vec<f64>,
}

/// Predicts the event following the whole prefix: consumes every event of
/// `record` and reads out the final prediction step.
pub fn predict_next(
    record: &Record,
    params: &ModelParams,
    config: &AttentionConfig,
) -> Result<NextPrediction> {
    let n = record.sequence.len();
    if n == 0 {
        return Err(Error::Data("predict_next needs at least one event".into()));
    }
    let trace = run_steps(record, params, config, n)?;
    let step = trace.steps.last().expect("run_steps emitted no steps");
    Ok(NextPrediction {
        dim: step.pred_dim,
        gap: step.pred_gap_raw.max(0.0),
        ranked_dims: crate::predictor::rank_by_score(&step.probs),
        probs: step.probs.clone(),
    })
}

/// Shared forward machinery: consumes `consume` events and emits a
/// prediction step after each one.
fn run_steps(
    record: &Record,
    params: &ModelParams,
    config: &AttentionConfig,
    consume: usize,
) -> Result<ForwardTrace> {
    params.validate()?;
    config.validate_relaxed()?;
    let sizes = params.sizes;
    let z = sizes.num_dims;
    let seq = &record.sequence;
    if seq.num_dims != z {
        return Err(Error::Shape(format!(
            "record has Z={}, model expects Z={z}",
            seq.num_dims
        )));
    }
    debug_assert!(consume <= seq.len());

    // Event channel: inputs are [embedding; inter-event gap].
    let mut inputs = Vec::with_capacity(consume);
    for i in 0..consume {
        let ev = seq.events[i];
        let mut x = embed(ev.dim, &params.embed)?;
        let gap = if i == 0 { 0.0 } else { ev.time - seq.events[i - 1].time };
        x.push(gap * params.input_gap_scale);
        inputs.push(x);
    }
    let event_steps = lstm_run(&params.event_lstm, &inputs)?;

    // Series channel: run up to the last sample any step needs.
    let series = match (&params.series_lstm, &record.series) {
        (Some(lstm), Some(series)) => {
            if series.num_features() != sizes.feature_width {
                return Err(Error::Shape(format!(
                    "record series has {} features, model expects {}",
                    series.num_features(),
                    sizes.feature_width
                )));
            }
            Some((lstm, series))
        }
        _ => None,
    };
    let mut aligned = vec![None; consume];
    let mut series_steps = Vec::new();
    if let Some((lstm, series)) = series {
        let mut max_sample = 0usize;
        for j in 0..consume {
            let k = align_series_to_time(series, seq.events[j].time)?;
            aligned[j] = Some(k);
            max_sample = max_sample.max(k);
        }
        let rows: Vec<Vec<f64>> =
            (0..=max_sample).map(|k| series.samples.row(k).to_vec()).collect();
        series_steps = lstm_run(lstm, &rows)?;
    }

    let zero_series_state = vec![0.0; sizes.hidden_series];
    let mut steps = Vec::with_capacity(consume);
    for j in 0..consume {
        let series_state: &[f64] = match aligned[j] {
            Some(k) => &series_steps[k].hidden,
            None => &zero_series_state,
        };
        let window = config.window.unwrap_or(usize::MAX);
        let window_start = (j + 1).saturating_sub(window);
        let win_len = j + 1 - window_start;

        let mut tanh_scores = Mat::zeros(z, win_len);
        let mut attn_weights = Mat::zeros(z, win_len);
        let mut contexts = Mat::zeros(z, sizes.hidden_event);
        for target in 0..z {
            let feature = params.attn_features.row(target);
            for (wi, i) in (window_start..=j).enumerate() {
                let hidden = &event_steps[i].hidden;
                let raw = dot(hidden, feature).tanh();
                tanh_scores.set(target, wi, raw);
                // Same rule as `attention_score`; the signed tanh is kept
                // for the backward pass.
                let alpha = if raw.abs() < config.epsilon { 0.0 } else { raw.abs() };
                attn_weights.set(target, wi, alpha);
                if alpha != 0.0 {
                    crate::linalg::add_scaled(contexts.row_mut(target), alpha, hidden);
                }
            }
        }

        let mut fused = Mat::zeros(z, sizes.hidden_fuse);
        let mut cat = vec![0.0; sizes.hidden_series + sizes.hidden_event];
        for target in 0..z {
            cat[..sizes.hidden_series].copy_from_slice(series_state);
            cat[sizes.hidden_series..].copy_from_slice(contexts.row(target));
            let mut pre = params.fuse_b.clone();
            params.fuse_w.matvec_add(&cat, &mut pre);
            for (out, p) in fused.row_mut(target).iter_mut().zip(&pre) {
                *out = sigmoid(*p);
            }
        }

        let logits: Vec<f64> = (0..z).map(|t| dot(&params.dim_head, fused.row(t))).collect();
        let probs = softmax(&logits);
        debug_assert!((probs.iter().sum::<f64>() - 1.0).abs() < 1e-9);
        let pred_dim = argmax(&probs);
        let pred_gap_raw = dot(&params.time_head, fused.row(pred_dim)) + params.time_bias;

        steps.push(PredictionStepTrace {
            aligned_sample: aligned[j],
            window_start,
            tanh_scores,
            attn_weights,
            contexts,
            fused,
            logits,
            probs,
            pred_dim,
            pred_gap_raw,
        });
    }

    Ok(ForwardTrace { event_steps, series_steps, steps })
}

pub(crate) fn softmax(logits: &[f64]) -> Vec<f64> {
    let max = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = logits.iter().map(|l| (l - max).exp()).collect();
    let total: f64 = exps.iter().sum();
    exps.iter().map(|e| e / total).collect()
}

/// Argmax with ties broken toward the lowest index.
pub(crate) fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, v) in values.iter().enumerate().skip(1) {
        if *v > values[best] {
            best = i;
        }
    }
    best
}

impl AttentionConfig {
    /// Forward accepts epsilon == 1 ("threshold everything"), which the
    /// stricter config validation rejects for persisted configs.
    fn validate_relaxed(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.epsilon) {
            return Err(Error::Config(format!(
                "attention epsilon must lie in [0, 1], got {}",
                self.epsilon
            )));
        }
        if self.window == Some(0) {
            return Err(Error::Config("attention window must be positive".into()));
        }
        Ok(())
    }
}
