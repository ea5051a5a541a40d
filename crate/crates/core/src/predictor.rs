//! Common interface for next-event predictors.
//!
//! Every model — the neural point process and each classical baseline — sits
//! behind [`Predictor`], so the evaluation harness, the comparison table, and
//! the CLI treat them interchangeably. Concrete baselines register
//! themselves by name in [`crate::baselines::registry`].

use rayon::prelude::*;

use crate::data::Record;
use crate::linalg::Mat;

/// One model output for one prediction step.
#[derive(Clone, Debug, PartialEq)]
pub struct Prediction {
    /// Dimensions ordered from most to least likely; empty when the model
    /// does not predict dimensions (pure timing models).
    pub ranked_dims: Vec<usize>,
    /// Predicted inter-event gap; None when the model does not predict time.
    pub gap: Option<f64>,
}

/// A fitted model that predicts the next event from a growing prefix.
pub trait Predictor: Send + Sync {
    fn name(&self) -> &str;

    fn predicts_dims(&self) -> bool;

    fn predicts_gaps(&self) -> bool;

    /// Predictions for every step of `record`: entry `j` predicts event
    /// `j + 1` from the prefix `events[0..=j]`, for `j` in `0..len-1`.
    fn predict_sequence(&self, record: &Record) -> Vec<Prediction>;

    /// The model's infectivity estimate, when it has one.
    fn infectivity(&self) -> Option<Mat> {
        None
    }

    /// Fitted model as JSON with named fields.
    fn to_json(&self) -> crate::Result<serde_json::Value> {
        Ok(serde_json::json!({ "model": self.name() }))
    }
}

/// One evaluation step: the truth and what the model said.
#[derive(Clone, Debug)]
pub struct PredictionStep {
    pub true_dim: usize,
    pub ranked_dims: Vec<usize>,
    pub true_gap: f64,
    pub pred_gap: Option<f64>,
}

/// All evaluation steps pooled over a record set, in deterministic order.
#[derive(Clone, Debug, Default)]
pub struct PredictionSet {
    pub steps: Vec<PredictionStep>,
}

/// Runs a predictor over every record and pools the per-step outcomes.
/// Records shorter than two events contribute nothing. Parallel over
/// records; output order is independent of thread count.
pub fn collect_predictions(predictor: &dyn Predictor, records: &[&Record]) -> PredictionSet {
    let per_record: Vec<Vec<PredictionStep>> = records
        .par_iter()
        .map(|record| {
            let n = record.sequence.len();
            if n < 2 {
                return Vec::new();
            }
            let preds = predictor.predict_sequence(record);
            debug_assert_eq!(preds.len(), n - 1);
            preds
                .into_iter()
                .enumerate()
                .map(|(j, p)| {
                    let target = record.sequence.events[j + 1];
                    let prev_time = record.sequence.events[j].time;
                    PredictionStep {
                        true_dim: target.dim,
                        ranked_dims: p.ranked_dims,
                        true_gap: target.time - prev_time,
                        pred_gap: p.gap,
                    }
                })
                .collect()
        })
        .collect();
    PredictionSet { steps: per_record.into_iter().flatten().collect() }
}

/// Utility shared by ranking models: dimension indices sorted by descending
/// score, ties broken toward the lower index.
pub fn rank_by_score(scores: &[f64]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..scores.len()).collect();
    idx.sort_by(|&a, &b| {
        scores[b].partial_cmp(&scores[a]).unwrap_or(std::cmp::Ordering::Equal).then(a.cmp(&b))
    });
    idx
}
