//! Classical comparison models behind a name-keyed strategy registry.
//!
//! Each baseline implements [`Predictor`] and is produced by a
//! [`BaselineBuilder`] registered in [`registry`]. Callers select models at
//! runtime by name ("poisson", "self_correcting", "markov", "ctmc",
//! "hawkes", "logistic"), fit them on a dataset, and evaluate them through
//! the shared prediction harness — the same path the neural model uses.

mod ctmc;
mod hawkes_mle;
mod logistic;
mod markov;
mod poisson;
mod self_correcting;

pub use ctmc::CtmcModel;
pub use hawkes_mle::{hawkes_log_likelihood, hawkes_log_likelihood_grad, HawkesMleModel};
pub use logistic::LogisticModel;
pub use markov::MarkovModel;
pub use poisson::PoissonModel;
pub use self_correcting::SelfCorrectingModel;

use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::predictor::Predictor;
use crate::Result;

/// Hyperparameters shared by the baseline fits.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BaselineConfig {
    /// Largest Markov order tried during validation selection.
    pub markov_max_order: usize,
    /// Fixed Hawkes decay; None selects from a data-driven grid on the
    /// validation split.
    pub hawkes_w: Option<f64>,
    /// L1 strength on the Hawkes infectivity matrix (0 disables).
    pub hawkes_l1: f64,
    /// Ascent iteration budget for the Hawkes MLE.
    pub hawkes_max_iters: usize,
    /// Thinning rollouts averaged for the Hawkes gap prediction.
    pub hawkes_rollouts: usize,
    /// Sub-window count of series samples in the logistic features.
    pub logistic_window: usize,
    /// Full-batch optimizer iterations for the logistic classifier.
    pub logistic_iters: usize,
    pub logistic_lr: f64,
    pub seed: u64,
}

impl Default for BaselineConfig {
    fn default() -> Self {
        BaselineConfig {
            markov_max_order: 3,
            hawkes_w: None,
            hawkes_l1: 0.0,
            hawkes_max_iters: 200,
            hawkes_rollouts: 100,
            logistic_window: 3,
            logistic_iters: 400,
            logistic_lr: 0.05,
            seed: 0,
        }
    }
}

/// Fits one baseline family by name.
pub trait BaselineBuilder: Send + Sync {
    fn name(&self) -> &'static str;
    fn fit(&self, dataset: &Dataset, cfg: &BaselineConfig) -> Result<Box<dyn Predictor>>;
}

struct Builder {
    name: &'static str,
    fit: fn(&Dataset, &BaselineConfig) -> Result<Box<dyn Predictor>>,
}

impl BaselineBuilder for Builder {
    fn name(&self) -> &'static str {
        self.name
    }

    fn fit(&self, dataset: &Dataset, cfg: &BaselineConfig) -> Result<Box<dyn Predictor>> {
        (self.fit)(dataset, cfg)
    }
}

/// All registered baselines, in the order they appear in comparison tables.
pub fn registry() -> Vec<Box<dyn BaselineBuilder>> {
    vec![
        Box::new(Builder { name: "poisson", fit: poisson::fit_boxed }),
        Box::new(Builder { name: "self_correcting", fit: self_correcting::fit_boxed }),
        Box::new(Builder { name: "markov", fit: markov::fit_boxed }),
        Box::new(Builder { name: "ctmc", fit: ctmc::fit_boxed }),
        Box::new(Builder { name: "hawkes", fit: hawkes_mle::fit_boxed }),
        Box::new(Builder { name: "logistic", fit: logistic::fit_boxed }),
    ]
}

/// Looks a builder up by its registered name.
pub fn builder(name: &str) -> Option<Box<dyn BaselineBuilder>> {
    registry().into_iter().find(|b| b.name() == name)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn registry_names_are_unique_and_resolvable() {
        let names: Vec<&str> = registry().iter().map(|b| b.name()).collect();
        assert_eq!(names.len(), 6);
        for name in &names {
            assert!(builder(name).is_some());
            assert_eq!(names.iter().filter(|n| n == &name).count(), 1);
        }
        assert!(builder("nope").is_none());
    }
}
