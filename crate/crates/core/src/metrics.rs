//! Evaluation metrics: classification quality, time error, and
//! infectivity-recovery scores.
//!
//! Rank correlation uses Kendall tau-b (tie-corrected), averaged over matrix
//! rows; relative error skips zero ground-truth entries and can normalize
//! both matrices by their own maximum to compare estimates living on
//! different scales.

use crate::linalg::Mat;
use crate::predictor::PredictionSet;
use crate::{Error, Result};

/// Z x Z confusion counts: `counts[true][pred]`. Steps without a dimension
/// prediction are skipped.
pub fn confusion_matrix(set: &PredictionSet, num_dims: usize) -> Vec<Vec<usize>> {
    let mut counts = vec![vec![0usize; num_dims]; num_dims];
    for step in &set.steps {
        if let Some(&pred) = step.ranked_dims.first() {
            counts[step.true_dim][pred] += 1;
        }
    }
    counts
}

/// Per-class precision/recall/F1 plus macro averages over classes with at
/// least one true instance. Zero denominators yield 0.
#[derive(Clone, Debug)]
pub struct ClassificationReport {
    pub precision: Vec<f64>,
    pub recall: Vec<f64>,
    pub f1: Vec<f64>,
    pub support: Vec<usize>,
    pub macro_precision: f64,
    pub macro_recall: f64,
    pub macro_f1: f64,
}

pub fn precision_recall_f1(confusion: &[Vec<usize>]) -> ClassificationReport {
    let z = confusion.len();
    let mut precision = vec![0.0; z];
    let mut recall = vec![0.0; z];
    let mut f1 = vec![0.0; z];
    let mut support = vec![0usize; z];
    for c in 0..z {
        let tp = confusion[c][c];
        let true_total: usize = confusion[c].iter().sum();
        let pred_total: usize = (0..z).map(|r| confusion[r][c]).sum();
        support[c] = true_total;
        precision[c] = if pred_total > 0 { tp as f64 / pred_total as f64 } else { 0.0 };
        recall[c] = if true_total > 0 { tp as f64 / true_total as f64 } else { 0.0 };
        let denom = precision[c] + recall[c];
        f1[c] = if denom > 0.0 { 2.0 * precision[c] * recall[c] / denom } else { 0.0 };
    }
    let seen: Vec<usize> = (0..z).filter(|&c| support[c] > 0).collect();
    let avg = |v: &[f64]| {
        if seen.is_empty() {
            0.0
        } else {
            seen.iter().map(|&c| v[c]).sum::<f64>() / seen.len() as f64
        }
    };
    ClassificationReport {
        macro_precision: avg(&precision),
        macro_recall: avg(&recall),
        macro_f1: avg(&f1),
        precision,
        recall,
        f1,
        support,
    }
}

/// Mean absolute error between true and predicted inter-event gaps, over
/// steps where the model produced a gap. Returns None when no step did.
pub fn mae(set: &PredictionSet) -> Option<f64> {
    let mut total = 0.0;
    let mut n = 0usize;
    for step in &set.steps {
        if let Some(pred) = step.pred_gap {
            total += (step.true_gap - pred).abs();
            n += 1;
        }
    }
    if n == 0 {
        None
    } else {
        Some(total / n as f64)
    }
}

/// Fraction of steps whose true dimension appears among the first `k`
/// entries of the ranked prediction. Returns None when nothing was ranked.
pub fn accuracy_at_k(set: &PredictionSet, k: usize) -> Option<f64> {
    let mut hits = 0usize;
    let mut n = 0usize;
    for step in &set.steps {
        if step.ranked_dims.is_empty() {
            continue;
        }
        n += 1;
        if step.ranked_dims.iter().take(k).any(|&d| d == step.true_dim) {
            hits += 1;
        }
    }
    if n == 0 {
        None
    } else {
        Some(hits as f64 / n as f64)
    }
}

/// Kendall rank correlation, tau-b (tie-corrected):
///
/// ```text
/// tau_b = (C - D) / sqrt((n0 - Tx) * (n0 - Ty)),   n0 = n (n - 1) / 2
/// ```
///
/// with `Tx`, `Ty` the tied-pair counts within each argument. Returns 0 when
/// either vector is constant.
pub fn kendall_tau(x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() {
        return Err(Error::Shape(format!(
            "kendall_tau arguments differ in length: {} vs {}",
            x.len(),
            y.len()
        )));
    }
    let n = x.len();
    if n < 2 {
        return Err(Error::Data("kendall_tau needs at least 2 observations".into()));
    }
    let mut concordant = 0i64;
    let mut discordant = 0i64;
    let mut tied_x = 0i64;
    let mut tied_y = 0i64;
    for i in 0..n {
        for j in i + 1..n {
            let dx = x[i] - x[j];
            let dy = y[i] - y[j];
            if dx == 0.0 && dy == 0.0 {
                tied_x += 1;
                tied_y += 1;
            } else if dx == 0.0 {
                tied_x += 1;
            } else if dy == 0.0 {
                tied_y += 1;
            } else if dx * dy > 0.0 {
                concordant += 1;
            } else {
                discordant += 1;
            }
        }
    }
    let n0 = (n * (n - 1) / 2) as i64;
    let denom = ((n0 - tied_x) as f64 * (n0 - tied_y) as f64).sqrt();
    if denom == 0.0 {
        return Ok(0.0);
    }
    Ok((concordant - discordant) as f64 / denom)
}

/// Row-averaged Kendall correlation between two matrices of equal shape.
/// Rows where either side is constant contribute 0.
pub fn rank_corr(a_true: &Mat, a_est: &Mat) -> Result<f64> {
    if a_true.rows() != a_est.rows() || a_true.cols() != a_est.cols() {
        return Err(Error::Shape(format!(
            "rank_corr shapes differ: {}x{} vs {}x{}",
            a_true.rows(),
            a_true.cols(),
            a_est.rows(),
            a_est.cols()
        )));
    }
    if a_true.cols() < 2 {
        return Err(Error::Data("rank_corr needs at least 2 columns".into()));
    }
    let mut total = 0.0;
    for r in 0..a_true.rows() {
        total += kendall_tau(a_true.row(r), a_est.row(r))?;
    }
    Ok(total / a_true.rows() as f64)
}

/// Mean of `|est - true| / true` over entries with positive ground truth.
/// With `normalize`, both matrices are first divided by their own maximum
/// entry, calibrating estimates that live on a different scale.
pub fn rel_err(a_true: &Mat, a_est: &Mat, normalize: bool) -> Result<f64> {
    if a_true.rows() != a_est.rows() || a_true.cols() != a_est.cols() {
        return Err(Error::Shape("rel_err shapes differ".into()));
    }
    let (t_scale, e_scale) = if normalize {
        let ts = a_true.max_abs();
        let es = a_est.max_abs();
        (if ts > 0.0 { ts } else { 1.0 }, if es > 0.0 { es } else { 1.0 })
    } else {
        (1.0, 1.0)
    };
    let mut total = 0.0;
    let mut n = 0usize;
    for (t, e) in a_true.data().iter().zip(a_est.data()) {
        if *t > 0.0 {
            total += (e / e_scale - t / t_scale).abs() / (t / t_scale);
            n += 1;
        }
    }
    if n == 0 {
        return Err(Error::Data("no positive ground-truth entries".into()));
    }
    Ok(total / n as f64)
}
