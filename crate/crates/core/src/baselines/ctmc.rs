//! Continuous-time Markov chain baseline.
//!
//! Transition rates `q[i][j] = count(i -> j) / sojourn(i)` estimated from
//! consecutive event pairs (self-transitions included, since event streams
//! revisit dimensions). The next dimension is the expected race winner
//! `argmax_j q[current][j]` and the predicted gap is `1 / sum_j q[current][j]`,
//! the expected minimum of the competing exponential clocks.

use serde::{Deserialize, Serialize};

use crate::data::{Dataset, Record};
use crate::linalg::Mat;
use crate::predictor::{rank_by_score, Prediction, Predictor};
use crate::{Error, Result};

use super::BaselineConfig;

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CtmcModel {
    pub num_dims: usize,
    /// Raw transition rates; rows of never-visited dimensions hold the mean
    /// of the observed rows.
    pub rates: Mat,
    /// Dimensions whose row was backfilled with the global mean rates.
    pub backfilled: Vec<usize>,
}

impl CtmcModel {
    pub fn fit(train: &[&Record], num_dims: usize) -> Result<Self> {
        let mut counts = Mat::zeros(num_dims, num_dims);
        let mut sojourn = vec![0.0_f64; num_dims];
        for rec in train {
            let events = &rec.sequence.events;
            for j in 0..events.len().saturating_sub(1) {
                let from = events[j].dim;
                let to = events[j + 1].dim;
                counts.add(from, to, 1.0);
                sojourn[from] += events[j + 1].time - events[j].time;
            }
        }
        if sojourn.iter().all(|s| *s <= 0.0) {
            return Err(Error::Data("ctmc fit found no positive sojourn time".into()));
        }
        let mut rates = Mat::zeros(num_dims, num_dims);
        let mut observed = Vec::new();
        let mut backfilled = Vec::new();
        for i in 0..num_dims {
            if sojourn[i] > 0.0 {
                for j in 0..num_dims {
                    rates.set(i, j, counts.get(i, j) / sojourn[i]);
                }
                observed.push(i);
            } else {
                backfilled.push(i);
            }
        }
        // Unobserved states borrow the mean rates of the observed ones.
        if !backfilled.is_empty() {
            let mut mean = vec![0.0; num_dims];
            for &i in &observed {
                for j in 0..num_dims {
                    mean[j] += rates.get(i, j) / observed.len() as f64;
                }
            }
            for &i in &backfilled {
                for j in 0..num_dims {
                    rates.set(i, j, mean[j]);
                }
            }
        }
        Ok(CtmcModel { num_dims, rates, backfilled })
    }

    /// Dimensions ranked by transition rate out of `current`, plus the
    /// expected winner of the exponential race (1 / total rate).
    pub fn ranked_prediction(&self, current: usize) -> (Vec<usize>, f64) {
        let row = self.rates.row(current);
        let ranked = rank_by_score(row);
        let total: f64 = row.iter().sum();
        let gap = if total > 0.0 { 1.0 / total } else { f64::INFINITY };
        (ranked, gap)
    }

    pub fn predict(&self, current: usize) -> (usize, f64) {
        let (ranked, gap) = self.ranked_prediction(current);
        (ranked[0], gap)
    }
}

impl Predictor for CtmcModel {
    fn name(&self) -> &str {
        "ctmc"
    }

    fn predicts_dims(&self) -> bool {
        true
    }

    fn predicts_gaps(&self) -> bool {
        true
    }

    fn predict_sequence(&self, record: &Record) -> Vec<Prediction> {
        let events = &record.sequence.events;
        (0..events.len().saturating_sub(1))
            .map(|j| {
                let (ranked_dims, gap) = self.ranked_prediction(events[j].dim);
                Prediction { ranked_dims, gap: Some(gap) }
            })
            .collect()
    }

    fn to_json(&self) -> Result<serde_json::Value> {
        serde_json::to_value(self).map_err(|e| Error::Data(e.to_string()))
    }
}

pub(super) fn fit_boxed(dataset: &Dataset, _cfg: &BaselineConfig) -> Result<Box<dyn Predictor>> {
    Ok(Box::new(CtmcModel::fit(&dataset.train(), dataset.num_dims)?))
}
