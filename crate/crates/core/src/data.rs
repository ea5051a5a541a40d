//! Canonical data model: event sequences, aligned time series, records, and
//! dataset splits.
//!
//! An event is a `(dimension, timestamp)` mark; a record pairs one event
//! sequence with an optional evenly sampled feature series covering the same
//! span. All types are immutable after construction and all operations here
//! are pure functions.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use serde::{Deserialize, Serialize};

use crate::linalg::Mat;
use crate::{Error, Result};

/// A single event: which dimension fired and when.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Event {
    pub dim: usize,
    pub time: f64,
}

/// Ordered events of one cascade/entity, over `num_dims` event dimensions.
#[derive(Clone, Debug, PartialEq)]
pub struct EventSequence {
    pub events: Vec<Event>,
    pub num_dims: usize,
}

impl EventSequence {
    pub fn new(events: Vec<Event>, num_dims: usize) -> Self {
        EventSequence { events, num_dims }
    }

    pub fn len(&self) -> usize {
        self.events.len()
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }

    pub fn last_time(&self) -> Option<f64> {
        self.events.last().map(|e| e.time)
    }
}

/// Evenly sampled feature vectors: sample `k` sits at `start_time + k * step`.
#[derive(Clone, Debug, PartialEq)]
pub struct TimeSeries {
    pub start_time: f64,
    pub step: f64,
    /// T x F matrix: one row per sample.
    pub samples: Mat,
}

impl TimeSeries {
    pub fn num_samples(&self) -> usize {
        self.samples.rows()
    }

    pub fn num_features(&self) -> usize {
        self.samples.cols()
    }

    pub fn end_time(&self) -> f64 {
        self.start_time + (self.num_samples().saturating_sub(1)) as f64 * self.step
    }
}

/// One modeling unit: an id, its event sequence, and an optional time series.
///
/// A missing series selects event-only modeling downstream.
#[derive(Clone, Debug, PartialEq)]
pub struct Record {
    pub id: String,
    pub sequence: EventSequence,
    pub series: Option<TimeSeries>,
}

impl Record {
    /// End of the observation window: the series coverage end when a series
    /// is present, otherwise the last event time. Rate-based baselines need
    /// this to normalize counts by observed time.
    pub fn observation_end(&self) -> f64 {
        let last_event = self.sequence.last_time().unwrap_or(0.0);
        match &self.series {
            Some(s) => s.end_time().max(last_event),
            None => last_event,
        }
    }
}

/// Which partition a record belongs to.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Split {
    Train,
    Val,
    Test,
}

/// A set of records sharing one dimension count and feature width, each
/// assigned to exactly one split.
#[derive(Clone, Debug)]
pub struct Dataset {
    pub records: Vec<Record>,
    pub num_dims: usize,
    pub split: Vec<Split>,
}

impl Dataset {
    /// Validates shared shape invariants: uniform `Z`, uniform feature width,
    /// and a split assignment covering every record.
    pub fn new(records: Vec<Record>, num_dims: usize, split: Vec<Split>) -> Result<Self> {
        if split.len() != records.len() {
            return Err(Error::Data(format!(
                "split assignment covers {} records, dataset has {}",
                split.len(),
                records.len()
            )));
        }
        let mut width: Option<usize> = None;
        for rec in &records {
            if rec.sequence.num_dims != num_dims {
                return Err(Error::Data(format!(
                    "record {} has Z={}, dataset has Z={}",
                    rec.id, rec.sequence.num_dims, num_dims
                )));
            }
            if let Some(series) = &rec.series {
                let f = series.num_features();
                match width {
                    None => width = Some(f),
                    Some(w) if w != f => {
                        return Err(Error::Data(format!(
                            "record {} has feature width {f}, expected {w}",
                            rec.id
                        )))
                    }
                    _ => {}
                }
            }
        }
        Ok(Dataset { records, num_dims, split })
    }

    /// Feature width shared by all series-bearing records; 0 when no record
    /// carries a series.
    pub fn feature_width(&self) -> usize {
        self.records
            .iter()
            .find_map(|r| r.series.as_ref().map(|s| s.num_features()))
            .unwrap_or(0)
    }

    pub fn split_records(&self, which: Split) -> Vec<&Record> {
        self.records
            .iter()
            .zip(&self.split)
            .filter(|(_, s)| **s == which)
            .map(|(r, _)| r)
            .collect()
    }

    pub fn train(&self) -> Vec<&Record> {
        self.split_records(Split::Train)
    }

    pub fn validation(&self) -> Vec<&Record> {
        self.split_records(Split::Val)
    }

    pub fn test(&self) -> Vec<&Record> {
        self.split_records(Split::Test)
    }

    pub fn split_sizes(&self) -> (usize, usize, usize) {
        let mut sizes = (0, 0, 0);
        for s in &self.split {
            match s {
                Split::Train => sizes.0 += 1,
                Split::Val => sizes.1 += 1,
                Split::Test => sizes.2 += 1,
            }
        }
        sizes
    }
}

/// Checks every type invariant of a record and reports violations as text.
///
/// Validation never aborts: a well-formed record yields an empty list.
pub fn validate_record(record: &Record) -> Vec<String> {
    let mut violations = Vec::new();
    let seq = &record.sequence;
    if seq.is_empty() {
        violations.push("sequence: length >= 1".to_string());
    }
    let z = seq.num_dims;
    for (i, ev) in seq.events.iter().enumerate() {
        if ev.dim >= z {
            violations.push(format!("events[{i}].dim: dim < Z (got {} with Z={z})", ev.dim));
        }
        if !ev.time.is_finite() || ev.time < 0.0 {
            violations.push(format!(
                "events[{i}].time: time >= 0 and finite (got {})",
                ev.time
            ));
        }
        if i > 0 && ev.time < seq.events[i - 1].time {
            violations.push(format!(
                "events[{i}].time: timestamps nondecreasing ({} after {})",
                ev.time,
                seq.events[i - 1].time
            ));
        }
    }
    if let Some(series) = &record.series {
        if series.step <= 0.0 || !series.step.is_finite() {
            violations.push(format!("series.step: step > 0 (got {})", series.step));
        }
        if series.num_samples() < 1 {
            violations.push("series.samples: T >= 1".to_string());
        }
        if series.samples.data().iter().any(|v| !v.is_finite()) {
            violations.push("series.samples: all entries finite".to_string());
        }
        if !series.start_time.is_finite() {
            violations.push("series.start_time: finite".to_string());
        }
        if let (Some(first), Some(last)) = (seq.events.first(), seq.events.last()) {
            if series.start_time > first.time {
                violations.push(format!(
                    "series.start_time: start_time <= first event time ({} > {})",
                    series.start_time, first.time
                ));
            }
            if series.end_time() < last.time {
                violations.push(format!(
                    "series coverage: start_time + (T-1)*step >= last event time ({} < {})",
                    series.end_time(),
                    last.time
                ));
            }
        }
    }
    violations
}

/// Index of the last sample at or before `t` (zero-order hold), clamped to
/// the final sample.
pub fn align_series_to_time(series: &TimeSeries, t: f64) -> Result<usize> {
    if t < series.start_time {
        return Err(Error::Data(format!(
            "event precedes series coverage: t={} < start_time={}",
            t, series.start_time
        )));
    }
    let last = series.num_samples() - 1;
    let mut k = ((t - series.start_time) / series.step).floor() as usize;
    k = k.min(last);
    // Fix up float rounding so the result satisfies the definition exactly:
    // largest k with start_time + k*step <= t.
    while k < last && series.start_time + (k + 1) as f64 * series.step <= t {
        k += 1;
    }
    while k > 0 && series.start_time + k as f64 * series.step > t {
        k -= 1;
    }
    Ok(k)
}

/// Randomly partitions records into train/validation/test by the given
/// ratios, deterministic in `seed`.
///
/// Partition sizes are floor-then-distribute-remainder: each split gets
/// `floor(ratio * n)` and leftover records go to the splits with the largest
/// fractional remainders (ties favor train, then validation).
pub fn split_dataset(records: Vec<Record>, ratios: (f64, f64, f64), seed: u64) -> Result<Dataset> {
    let (rt, rv, re) = ratios;
    if rt <= 0.0 || rv <= 0.0 || re <= 0.0 {
        return Err(Error::Config("split ratios must be positive".into()));
    }
    if (rt + rv + re - 1.0).abs() > 1e-9 {
        return Err(Error::Config(format!(
            "split ratios must sum to 1, got {}",
            rt + rv + re
        )));
    }
    let n = records.len();
    if n < 3 {
        return Err(Error::Data(format!("need at least 3 records to split, got {n}")));
    }
    let num_dims = records[0].sequence.num_dims;

    let raw = [rt * n as f64, rv * n as f64, re * n as f64];
    let mut sizes = [raw[0].floor() as usize, raw[1].floor() as usize, raw[2].floor() as usize];
    let mut rem: Vec<(usize, f64)> =
        raw.iter().enumerate().map(|(i, r)| (i, r - r.floor())).collect();
    rem.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap().then(a.0.cmp(&b.0)));
    let mut leftover = n - sizes.iter().sum::<usize>();
    for (idx, _) in rem {
        if leftover == 0 {
            break;
        }
        sizes[idx] += 1;
        leftover -= 1;
    }

    let mut order: Vec<usize> = (0..n).collect();
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    order.shuffle(&mut rng);

    let mut split = vec![Split::Test; n];
    for (pos, &rec_idx) in order.iter().enumerate() {
        split[rec_idx] = if pos < sizes[0] {
            Split::Train
        } else if pos < sizes[0] + sizes[1] {
            Split::Val
        } else {
            Split::Test
        };
    }
    Dataset::new(records, num_dims, split)
}
