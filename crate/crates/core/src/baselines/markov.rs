//! Markov-chain baseline over event dimensions.
//!
//! Pure order information: a length-k context of recent dimensions indexes a
//! next-dimension distribution with add-one smoothing. The order is chosen
//! by next-dimension accuracy on the validation split. A timing-free model.

use std::collections::HashMap;

use crate::data::{Dataset, Record};
use crate::predictor::{rank_by_score, Prediction, Predictor};
use crate::{Error, Result};

use super::BaselineConfig;

#[derive(Clone, Debug)]
pub struct MarkovModel {
    pub order: usize,
    pub num_dims: usize,
    /// Raw transition counts per observed context.
    pub table: HashMap<Vec<usize>, Vec<u64>>,
    /// Marginal next-dimension counts, the fallback for unseen contexts.
    pub marginal: Vec<u64>,
    /// Validation accuracy per candidate order, for the record.
    pub order_scores: Vec<(usize, f64)>,
}

fn count_tables(records: &[&Record], order: usize, num_dims: usize) -> (HashMap<Vec<usize>, Vec<u64>>, Vec<u64>) {
    let mut table: HashMap<Vec<usize>, Vec<u64>> = HashMap::new();
    let mut marginal = vec![0u64; num_dims];
    for rec in records {
        let dims: Vec<usize> = rec.sequence.events.iter().map(|e| e.dim).collect();
        for j in 0..dims.len().saturating_sub(1) {
            let next = dims[j + 1];
            marginal[next] += 1;
            if j + 1 >= order {
                let context = dims[j + 1 - order..=j].to_vec();
                table.entry(context).or_insert_with(|| vec![0; num_dims])[next] += 1;
            }
        }
    }
    (table, marginal)
}

impl MarkovModel {
    /// Fits orders 1..=max_order on the train split and keeps the one with
    /// the best validation accuracy (ties favor the smaller order).
    pub fn fit(
        train: &[&Record],
        max_order: usize,
        validation: &[&Record],
        num_dims: usize,
    ) -> Result<Self> {
        if validation.is_empty() {
            return Err(Error::Data("markov order selection needs a validation split".into()));
        }
        if max_order == 0 {
            return Err(Error::Config("markov max_order must be at least 1".into()));
        }
        let mut best: Option<MarkovModel> = None;
        let mut best_acc = f64::NEG_INFINITY;
        let mut order_scores = Vec::new();
        for order in 1..=max_order {
            let (table, marginal) = count_tables(train, order, num_dims);
            let candidate =
                MarkovModel { order, num_dims, table, marginal, order_scores: Vec::new() };
            let mut hits = 0usize;
            let mut total = 0usize;
            for rec in validation {
                let dims: Vec<usize> = rec.sequence.events.iter().map(|e| e.dim).collect();
                for j in 0..dims.len().saturating_sub(1) {
                    total += 1;
                    if candidate.predict_dim(&dims[..=j]) == dims[j + 1] {
                        hits += 1;
                    }
                }
            }
            let acc = if total > 0 { hits as f64 / total as f64 } else { 0.0 };
            order_scores.push((order, acc));
            if acc > best_acc {
                best_acc = acc;
                best = Some(candidate);
            }
        }
        let mut model = best.expect("at least one order evaluated");
        model.order_scores = order_scores;
        Ok(model)
    }

    /// Smoothed next-dimension distribution for a dimension prefix.
    pub fn distribution(&self, prefix: &[usize]) -> Vec<f64> {
        let counts: Option<&Vec<u64>> = if prefix.len() >= self.order {
            self.table.get(&prefix[prefix.len() - self.order..])
        } else {
            None
        };
        let counts = counts.unwrap_or(&self.marginal);
        let total: u64 = counts.iter().sum();
        counts
            .iter()
            .map(|&c| (c + 1) as f64 / (total + self.num_dims as u64) as f64)
            .collect()
    }

    pub fn predict_dim(&self, prefix: &[usize]) -> usize {
        let dist = self.distribution(prefix);
        rank_by_score(&dist)[0]
    }
}

impl Predictor for MarkovModel {
    fn name(&self) -> &str {
        "markov"
    }

    fn predicts_dims(&self) -> bool {
        true
    }

    fn predicts_gaps(&self) -> bool {
        false
    }

    fn predict_sequence(&self, record: &Record) -> Vec<Prediction> {
        let dims: Vec<usize> = record.sequence.events.iter().map(|e| e.dim).collect();
        (0..dims.len().saturating_sub(1))
            .map(|j| Prediction {
                ranked_dims: rank_by_score(&self.distribution(&dims[..=j])),
                gap: None,
            })
            .collect()
    }

    fn to_json(&self) -> Result<serde_json::Value> {
        let table: Vec<serde_json::Value> = {
            let mut entries: Vec<(&Vec<usize>, &Vec<u64>)> = self.table.iter().collect();
            entries.sort();
            entries
                .into_iter()
                .map(|(ctx, counts)| serde_json::json!({ "context": ctx, "counts": counts }))
                .collect()
        };
        Ok(serde_json::json!({
            "model": "markov",
            "order": self.order,
            "num_dims": self.num_dims,
            "marginal": self.marginal,
            "table": table,
            "order_scores": self.order_scores,
        }))
    }
}

pub(super) fn fit_boxed(dataset: &Dataset, cfg: &BaselineConfig) -> Result<Box<dyn Predictor>> {
    Ok(Box::new(MarkovModel::fit(
        &dataset.train(),
        cfg.markov_max_order,
        &dataset.validation(),
        dataset.num_dims,
    )?))
}
