//! Homogeneous Poisson baseline: constant intensity, history ignored.

use serde::{Deserialize, Serialize};

use crate::data::{Dataset, Record};
use crate::predictor::{Prediction, Predictor};
use crate::{Error, Result};

use super::BaselineConfig;

/// Total-rate Poisson model: the predicted inter-event gap is the inverse of
/// the pooled event rate. A pure timing model — no dimension predictions.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PoissonModel {
    pub rate: f64,
    pub mean_gap: f64,
}

impl PoissonModel {
    pub fn fit(train: &[&Record]) -> Result<Self> {
        let events: usize = train.iter().map(|r| r.sequence.len()).sum();
        let time: f64 = train.iter().map(|r| r.observation_end()).sum();
        if events == 0 {
            return Err(Error::Data("poisson fit needs at least one event".into()));
        }
        if !(time > 0.0) {
            return Err(Error::Data("poisson fit has zero observed time".into()));
        }
        let rate = events as f64 / time;
        Ok(PoissonModel { rate, mean_gap: 1.0 / rate })
    }
}

impl Predictor for PoissonModel {
    fn name(&self) -> &str {
        "poisson"
    }

    fn predicts_dims(&self) -> bool {
        false
    }

    fn predicts_gaps(&self) -> bool {
        true
    }

    fn predict_sequence(&self, record: &Record) -> Vec<Prediction> {
        let steps = record.sequence.len().saturating_sub(1);
        vec![Prediction { ranked_dims: Vec::new(), gap: Some(self.mean_gap) }; steps]
    }

    fn to_json(&self) -> Result<serde_json::Value> {
        serde_json::to_value(self).map_err(|e| Error::Data(e.to_string()))
    }
}

pub(super) fn fit_boxed(dataset: &Dataset, _cfg: &BaselineConfig) -> Result<Box<dyn Predictor>> {
    Ok(Box::new(PoissonModel::fit(&dataset.train())?))
}
