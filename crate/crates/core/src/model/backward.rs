//! Exact backpropagation through the full model for the weighted
//! likelihood objective.
//!
//! The per-step loss (negated log-likelihood, minimized) is
//!
//! ```text
//! L_j = -b[z*] * log u_{j+1}[z*]  -  tw * log f(gap_true)
//! log f(g) = -0.5 * log(2 pi sigma^2) - (g - gap_pred)^2 / (2 sigma^2)
//! ```
//!
//! with `z*` the true next dimension, `b` the class weights, `tw` the time
//! term weight, and `gap_pred` the raw time-head output. Gradients flow
//! through the synergic layer, the attention scores and contexts, and both
//! LSTMs back to every parameter tensor, including the embedding.

use crate::data::Record;
use crate::linalg::{add_scaled, dot};
use crate::train::{LossBreakdown, LossConfig, LOG_PROB_FLOOR};

use super::forward::ForwardTrace;
use super::lstm::lstm_run_backward;
use super::ModelParams;

/// Gradients of the sequence loss with respect to every parameter, plus the
/// loss value itself (identical to `train::sequence_loss` on the same trace).
pub fn gradients(
    trace: &ForwardTrace,
    record: &Record,
    class_weights: &[f64],
    loss_cfg: &LossConfig,
    params: &ModelParams,
) -> (ModelParams, LossBreakdown) {
    let sizes = params.sizes;
    let z = sizes.num_dims;
    let hs = sizes.hidden_series;
    let he = sizes.hidden_event;
    let mut grads = params.zeros_like();
    let mut breakdown = LossBreakdown::default();

    let mut d_hidden_event = vec![vec![0.0; he]; trace.event_steps.len()];
    let mut d_hidden_series = vec![vec![0.0; hs]; trace.series_steps.len()];

    let inv_var = 1.0 / (loss_cfg.sigma * loss_cfg.sigma);
    let mut cat_grad = vec![0.0; hs + he];

    for (j, step) in trace.steps.iter().enumerate() {
        let target = record.sequence.events[j + 1];
        let true_gap = target.time - record.sequence.events[j].time;
        let weight = class_weights[target.dim];

        // Class term via a stable log-sum-exp; the floor mirrors the loss.
        let max_logit = step.logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let lse = max_logit
            + step.logits.iter().map(|l| (l - max_logit).exp()).sum::<f64>().ln();
        let mut log_prob = step.logits[target.dim] - lse;
        let clamped = log_prob < LOG_PROB_FLOOR;
        if clamped {
            log_prob = LOG_PROB_FLOOR;
            breakdown.clamped_steps += 1;
        }
        breakdown.class_term += -weight * log_prob;

        // Time term on raw (unclamped) gap prediction.
        let diff = true_gap - step.pred_gap_raw;
        let log_f = -0.5 * (2.0 * std::f64::consts::PI * loss_cfg.sigma * loss_cfg.sigma).ln()
            - diff * diff * 0.5 * inv_var;
        breakdown.time_term += -loss_cfg.time_weight * log_f;
        breakdown.steps += 1;

        // d loss / d logit_z = b * (u_z - 1{z = target}); zero when the step
        // was clamped (the loss is flat there).
        let mut d_logits = vec![0.0; z];
        if !clamped {
            for t in 0..z {
                d_logits[t] = weight * (step.probs[t] - if t == target.dim { 1.0 } else { 0.0 });
            }
        }
        let d_gap = loss_cfg.time_weight * (step.pred_gap_raw - true_gap) * inv_var;

        // Heads.
        for t in 0..z {
            if d_logits[t] != 0.0 {
                add_scaled(&mut grads.dim_head, d_logits[t], step.fused.row(t));
            }
        }
        add_scaled(&mut grads.time_head, d_gap, step.fused.row(step.pred_dim));
        grads.time_bias += d_gap;

        // Synergic layer, one fused representation per target dimension.
        let series_state: Option<&[f64]> =
            step.aligned_sample.map(|k| trace.series_steps[k].hidden.as_slice());
        for t in 0..z {
            let mut d_fused = vec![0.0; sizes.hidden_fuse];
            if d_logits[t] != 0.0 {
                add_scaled(&mut d_fused, d_logits[t], &params.dim_head);
            }
            if t == step.pred_dim && d_gap != 0.0 {
                add_scaled(&mut d_fused, d_gap, &params.time_head);
            }
            if d_fused.iter().all(|v| *v == 0.0) {
                continue;
            }
            // Through the sigmoid: d pre = d fused * s * (1 - s).
            let fused_row = step.fused.row(t);
            let mut d_pre = d_fused;
            for (dp, s) in d_pre.iter_mut().zip(fused_row) {
                *dp *= s * (1.0 - s);
            }

            for v in cat_grad.iter_mut() {
                *v = 0.0;
            }
            params.fuse_w.tr_matvec_add(&d_pre, &mut cat_grad);

            // Parameter gradients need the concatenated input.
            let mut cat = vec![0.0; hs + he];
            if let Some(state) = series_state {
                cat[..hs].copy_from_slice(state);
            }
            cat[hs..].copy_from_slice(step.contexts.row(t));
            grads.fuse_w.add_outer(&d_pre, &cat);
            add_scaled(&mut grads.fuse_b, 1.0, &d_pre);

            if let Some(k) = step.aligned_sample {
                add_scaled(&mut d_hidden_series[k], 1.0, &cat_grad[..hs]);
            }
            let d_context = &cat_grad[hs..];

            // Attention: context = sum_i alpha_i h_i with
            // alpha = |tanh(h_i . v_t)| thresholded at epsilon.
            for (wi, i) in (step.window_start..=j).enumerate() {
                let alpha = step.attn_weights.get(t, wi);
                let hidden = &trace.event_steps[i].hidden;
                if alpha != 0.0 {
                    add_scaled(&mut d_hidden_event[i], alpha, d_context);
                    let tanh_dot = step.tanh_scores.get(t, wi);
                    let d_alpha = dot(d_context, hidden);
                    let d_dot = d_alpha * tanh_dot.signum() * (1.0 - tanh_dot * tanh_dot);
                    add_scaled(grads.attn_features.row_mut(t), d_dot, hidden);
                    add_scaled(&mut d_hidden_event[i], d_dot, params.attn_features.row(t));
                }
            }
        }
    }

    breakdown.total = breakdown.class_term + breakdown.time_term;

    // Event channel BPTT; input gradients feed the embedding columns.
    let d_inputs = lstm_run_backward(
        &params.event_lstm,
        &trace.event_steps,
        &d_hidden_event,
        &mut grads.event_lstm,
    );
    for (i, dx) in d_inputs.iter().enumerate() {
        let dim = record.sequence.events[i].dim;
        for (r, dv) in dx[..sizes.embed_dim].iter().enumerate() {
            grads.embed.add(r, dim, *dv);
        }
        // The trailing input component is the observed gap: data, not a
        // parameter, so its gradient is dropped.
    }

    // Series channel BPTT; inputs are data, gradients end at the parameters.
    if let (Some(series_lstm), Some(series_grads)) =
        (&params.series_lstm, grads.series_lstm.as_mut())
    {
        if !trace.series_steps.is_empty() {
            lstm_run_backward(series_lstm, &trace.series_steps, &d_hidden_series, series_grads);
        }
    }

    (grads, breakdown)
}
