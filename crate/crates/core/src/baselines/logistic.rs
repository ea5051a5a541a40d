//! Logistic baseline: softmax regression for the next dimension and ridge
//! least squares for the next gap.
//!
//! Features at step j concatenate the most recent series sub-window samples
//! at the current event time, a one-hot of the current dimension, and the
//! last inter-event gap — the same information the neural model sees in a
//! fixed-window form.

use serde::{Deserialize, Serialize};

use crate::data::{align_series_to_time, Dataset, Record};
use crate::linalg::{dot, solve, Mat};
use crate::predictor::{rank_by_score, Prediction, Predictor};
use crate::{Error, Result};

use super::BaselineConfig;

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct LogisticModel {
    pub num_dims: usize,
    pub feature_width: usize,
    pub window: usize,
    /// Softmax weights, Z x D.
    pub class_w: Mat,
    pub class_b: Vec<f64>,
    /// Ridge regression coefficients on [features; 1].
    pub gap_coef: Vec<f64>,
}

impl LogisticModel {
    pub fn feature_dim(num_dims: usize, feature_width: usize, window: usize) -> usize {
        window * feature_width + num_dims + 1
    }

    /// Feature vector for the step that predicts event j+1.
    pub fn features(&self, record: &Record, j: usize) -> Vec<f64> {
        build_features(record, j, self.num_dims, self.feature_width, self.window)
    }

    pub fn fit(train: &[&Record], num_dims: usize, cfg: &BaselineConfig) -> Result<Self> {
        let feature_width = train
            .iter()
            .find_map(|r| r.series.as_ref().map(|s| s.num_features()))
            .ok_or_else(|| Error::Data("logistic baseline needs series data".into()))?;
        let window = cfg.logistic_window.max(1);
        let dim = Self::feature_dim(num_dims, feature_width, window);

        let mut xs: Vec<Vec<f64>> = Vec::new();
        let mut dims: Vec<usize> = Vec::new();
        let mut gaps: Vec<f64> = Vec::new();
        for rec in train {
            let events = &rec.sequence.events;
            for j in 0..events.len().saturating_sub(1) {
                xs.push(build_features(rec, j, num_dims, feature_width, window));
                dims.push(events[j + 1].dim);
                gaps.push(events[j + 1].time - events[j].time);
            }
        }
        if xs.is_empty() {
            return Err(Error::Data("logistic fit needs at least one step".into()));
        }

        let (class_w, class_b) =
            fit_softmax(&xs, &dims, num_dims, dim, cfg.logistic_iters, cfg.logistic_lr);
        let gap_coef = fit_ridge(&xs, &gaps, dim)?;

        Ok(LogisticModel { num_dims, feature_width, window, class_w, class_b, gap_coef })
    }

    fn scores(&self, features: &[f64]) -> Vec<f64> {
        let mut s = self.class_b.clone();
        self.class_w.matvec_add(features, &mut s);
        s
    }

    pub fn predict(&self, features: &[f64]) -> (Vec<usize>, f64) {
        let ranked = rank_by_score(&self.scores(features));
        let mut ext = features.to_vec();
        ext.push(1.0);
        let gap = dot(&self.gap_coef, &ext).max(0.0);
        (ranked, gap)
    }
}

fn build_features(
    record: &Record,
    j: usize,
    num_dims: usize,
    feature_width: usize,
    window: usize,
) -> Vec<f64> {
    let mut x = Vec::with_capacity(window * feature_width + num_dims + 1);
    let events = &record.sequence.events;
    match &record.series {
        Some(series) if feature_width > 0 => {
            let k = align_series_to_time(series, events[j].time).unwrap_or(0);
            for back in (0..window).rev() {
                if back > k {
                    x.extend(std::iter::repeat(0.0).take(feature_width));
                } else {
                    x.extend_from_slice(series.samples.row(k - back));
                }
            }
        }
        _ => x.extend(std::iter::repeat(0.0).take(window * feature_width)),
    }
    for d in 0..num_dims {
        x.push(if events[j].dim == d { 1.0 } else { 0.0 });
    }
    x.push(if j > 0 { events[j].time - events[j - 1].time } else { 0.0 });
    x
}

/// Full-batch RMSprop on the mean cross-entropy. Deterministic: zero
/// initialization and a fixed iteration budget.
fn fit_softmax(
    xs: &[Vec<f64>],
    targets: &[usize],
    num_dims: usize,
    dim: usize,
    iters: usize,
    lr: f64,
) -> (Mat, Vec<f64>) {
    let n = xs.len() as f64;
    let mut w = Mat::zeros(num_dims, dim);
    let mut b = vec![0.0; num_dims];
    let mut ms_w = Mat::zeros(num_dims, dim);
    let mut ms_b = vec![0.0; num_dims];
    let (decay, eps) = (0.9, 1e-8);
    for _ in 0..iters {
        let mut gw = Mat::zeros(num_dims, dim);
        let mut gb = vec![0.0; num_dims];
        for (x, &target) in xs.iter().zip(targets) {
            let mut scores = b.clone();
            w.matvec_add(x, &mut scores);
            let max = scores.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let exps: Vec<f64> = scores.iter().map(|s| (s - max).exp()).collect();
            let total: f64 = exps.iter().sum();
            for c in 0..num_dims {
                let p = exps[c] / total;
                let delta = (p - if c == target { 1.0 } else { 0.0 }) / n;
                gb[c] += delta;
                crate::linalg::add_scaled(gw.row_mut(c), delta, x);
            }
        }
        for idx in 0..num_dims * dim {
            let g = gw.data()[idx];
            let s = &mut ms_w.data_mut()[idx];
            *s = decay * *s + (1.0 - decay) * g * g;
            w.data_mut()[idx] -= lr * g / (s.sqrt() + eps);
        }
        for c in 0..num_dims {
            let g = gb[c];
            ms_b[c] = decay * ms_b[c] + (1.0 - decay) * g * g;
            b[c] -= lr * g / (ms_b[c].sqrt() + eps);
        }
    }
    (w, b)
}

/// Normal equations with a small ridge on [x; 1].
fn fit_ridge(xs: &[Vec<f64>], ys: &[f64], dim: usize) -> Result<Vec<f64>> {
    let d = dim + 1;
    let mut gram = Mat::zeros(d, d);
    let mut rhs = vec![0.0; d];
    let mut ext = vec![0.0; d];
    for (x, &y) in xs.iter().zip(ys) {
        ext[..dim].copy_from_slice(x);
        ext[dim] = 1.0;
        gram.add_outer(&ext, &ext);
        crate::linalg::add_scaled(&mut rhs, y, &ext);
    }
    for i in 0..d {
        gram.add(i, i, 1e-6);
    }
    solve(&gram, &rhs)
}

impl Predictor for LogisticModel {
    fn name(&self) -> &str {
        "logistic"
    }

    fn predicts_dims(&self) -> bool {
        true
    }

    fn predicts_gaps(&self) -> bool {
        true
    }

    fn predict_sequence(&self, record: &Record) -> Vec<Prediction> {
        let n = record.sequence.len();
        (0..n.saturating_sub(1))
            .map(|j| {
                let x = self.features(record, j);
                let (ranked, gap) = self.predict(&x);
                Prediction { ranked_dims: ranked, gap: Some(gap) }
            })
            .collect()
    }

    fn to_json(&self) -> Result<serde_json::Value> {
        serde_json::to_value(self).map_err(|e| Error::Data(e.to_string()))
    }
}

pub(super) fn fit_boxed(dataset: &Dataset, cfg: &BaselineConfig) -> Result<Box<dyn Predictor>> {
    Ok(Box::new(LogisticModel::fit(&dataset.train(), dataset.num_dims, cfg)?))
}
