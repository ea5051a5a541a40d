//! Self-correcting process baseline.
//!
//! Intensity `lambda(t) = exp(mu * t - alpha * N(t-))`: the rate climbs
//! steadily and every event knocks it down by the factor `exp(-alpha)`. Both
//! parameters are fitted by alternating golden-section search over a
//! log-spaced domain; the predicted gap is the expected waiting time,
//! integrated numerically from the current state.

use serde::{Deserialize, Serialize};

use crate::data::{Dataset, Record};
use crate::predictor::{Prediction, Predictor};
use crate::{Error, Result};

use super::BaselineConfig;

const LOG_BOUND_LO: f64 = -4.0; // parameters searched in [1e-4, 1e2]
const LOG_BOUND_HI: f64 = 2.0;

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SelfCorrectingModel {
    pub mu: f64,
    pub alpha: f64,
    pub log_likelihood: f64,
    /// Set when the search budget ran out before the sweep settled.
    pub converged: bool,
}

/// ln(e^x - 1), stable for large x.
fn ln_expm1(x: f64) -> f64 {
    if x > 30.0 {
        x
    } else {
        x.exp_m1().ln()
    }
}

/// Pooled log-likelihood of `(mu, alpha)` over records, each observed on
/// `[0, observation_end]`:
/// `sum_i log lambda(t_i) - integral_0^T lambda`.
pub fn sc_log_likelihood(mu: f64, alpha: f64, records: &[&Record]) -> f64 {
    let mut ll = 0.0;
    for rec in records {
        let horizon = rec.observation_end();
        let mut prev_t = 0.0;
        for (i, ev) in rec.sequence.events.iter().enumerate() {
            let count_before = i as f64;
            ll += mu * ev.time - alpha * count_before;
            // Segment integral of exp(mu t - alpha * i) over [prev_t, t_i].
            ll -= segment_integral(mu, alpha, count_before, prev_t, ev.time);
            prev_t = ev.time;
        }
        let n = rec.sequence.len() as f64;
        ll -= segment_integral(mu, alpha, n, prev_t, horizon);
    }
    ll
}

fn segment_integral(mu: f64, alpha: f64, count: f64, from: f64, to: f64) -> f64 {
    if to <= from {
        return 0.0;
    }
    // exp(-alpha * count) * (exp(mu * to) - exp(mu * from)) / mu, in log
    // space so large exponents saturate to +inf instead of producing NaN.
    let log_value = -alpha * count + mu * from + ln_expm1(mu * (to - from)) - mu.ln();
    log_value.exp()
}

fn golden_section_min(mut lo: f64, mut hi: f64, f: &dyn Fn(f64) -> f64) -> f64 {
    const INV_PHI: f64 = 0.618_033_988_749_894_9;
    let mut c = hi - INV_PHI * (hi - lo);
    let mut d = lo + INV_PHI * (hi - lo);
    let mut fc = f(c);
    let mut fd = f(d);
    for _ in 0..80 {
        if fc < fd {
            hi = d;
            d = c;
            fd = fc;
            c = hi - INV_PHI * (hi - lo);
            fc = f(c);
        } else {
            lo = c;
            c = d;
            fc = fd;
            d = lo + INV_PHI * (hi - lo);
            fd = f(d);
        }
    }
    0.5 * (lo + hi)
}

impl SelfCorrectingModel {
    /// Maximizes the pooled log-likelihood by coordinate sweeps of
    /// golden-section search in log10 space.
    pub fn fit(train: &[&Record]) -> Result<Self> {
        let events: usize = train.iter().map(|r| r.sequence.len()).sum();
        if events == 0 {
            return Err(Error::Data("self-correcting fit needs events".into()));
        }
        let neg_ll = |log_mu: f64, log_alpha: f64| -> f64 {
            -sc_log_likelihood(10f64.powf(log_mu), 10f64.powf(log_alpha), train)
        };
        let mut log_mu = -1.0;
        let mut log_alpha = -1.0;
        let mut best = neg_ll(log_mu, log_alpha);
        let mut converged = false;
        for _ in 0..6 {
            log_mu = golden_section_min(LOG_BOUND_LO, LOG_BOUND_HI, &|m| neg_ll(m, log_alpha));
            log_alpha = golden_section_min(LOG_BOUND_LO, LOG_BOUND_HI, &|a| neg_ll(log_mu, a));
            let now = neg_ll(log_mu, log_alpha);
            if (best - now).abs() <= 1e-9 * best.abs().max(1.0) {
                converged = true;
                best = now;
                break;
            }
            best = now;
        }
        Ok(SelfCorrectingModel {
            mu: 10f64.powf(log_mu),
            alpha: 10f64.powf(log_alpha),
            log_likelihood: -best,
            converged,
        })
    }

    /// Expected waiting time from state (t = current time, n = events so
    /// far): the integral of the survival function, by adaptive Simpson.
    pub fn expected_gap(&self, current_time: f64, events_so_far: usize) -> f64 {
        let survival = |u: f64| -> f64 {
            if u <= 0.0 {
                return 1.0;
            }
            // Integrated intensity over (t, t+u] with no further events:
            // exp(mu t - alpha n) * expm1(mu u) / mu, evaluated in log space.
            let log_compensator = self.mu * current_time - self.alpha * events_so_far as f64
                + ln_expm1(self.mu * u)
                - self.mu.ln();
            if log_compensator > 700.0 {
                0.0
            } else {
                (-log_compensator.exp()).exp()
            }
        };
        // Bracket the integrable mass, then integrate.
        let mut upper = 1.0;
        while survival(upper) > 1e-12 && upper < 1e9 {
            upper *= 2.0;
        }
        adaptive_simpson(&survival, 0.0, upper, 1e-6)
    }
}

/// Adaptive Simpson quadrature with absolute tolerance `tol`.
fn adaptive_simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    fn simpson(f: &dyn Fn(f64) -> f64, a: f64, fa: f64, b: f64, fb: f64) -> (f64, f64, f64) {
        let m = 0.5 * (a + b);
        let fm = f(m);
        ((b - a) / 6.0 * (fa + 4.0 * fm + fb), m, fm)
    }
    fn recurse(
        f: &dyn Fn(f64) -> f64,
        a: f64,
        fa: f64,
        b: f64,
        fb: f64,
        whole: f64,
        m: f64,
        fm: f64,
        tol: f64,
        depth: u32,
    ) -> f64 {
        let (left, lm, flm) = simpson(f, a, fa, m, fm);
        let (right, rm, frm) = simpson(f, m, fm, b, fb);
        let delta = left + right - whole;
        if depth >= 40 || delta.abs() <= 15.0 * tol {
            left + right + delta / 15.0
        } else {
            recurse(f, a, fa, m, fm, left, lm, flm, tol / 2.0, depth + 1)
                + recurse(f, m, fm, b, fb, right, rm, frm, tol / 2.0, depth + 1)
        }
    }
    let fa = f(a);
    let fb = f(b);
    let (whole, m, fm) = simpson(f, a, fa, b, fb);
    recurse(f, a, fa, b, fb, whole, m, fm, tol, 0)
}

impl Predictor for SelfCorrectingModel {
    fn name(&self) -> &str {
        "self_correcting"
    }

    fn predicts_dims(&self) -> bool {
        false
    }

    fn predicts_gaps(&self) -> bool {
        true
    }

    fn predict_sequence(&self, record: &Record) -> Vec<Prediction> {
        let n = record.sequence.len();
        (0..n.saturating_sub(1))
            .map(|j| Prediction {
                ranked_dims: Vec::new(),
                gap: Some(self.expected_gap(record.sequence.events[j].time, j + 1)),
            })
            .collect()
    }

    fn to_json(&self) -> Result<serde_json::Value> {
        serde_json::to_value(self).map_err(|e| Error::Data(e.to_string()))
    }
}

pub(super) fn fit_boxed(dataset: &Dataset, _cfg: &BaselineConfig) -> Result<Box<dyn Predictor>> {
    Ok(Box::new(SelfCorrectingModel::fit(&dataset.train())?))
}
