//! Property tests over randomized records: serialization round trips,
//! cross-module acceptance of valid records, and metric invariants.

use proptest::prelude::*;

use atrpp::data::{validate_record, Event, EventSequence, Record, TimeSeries};
use atrpp::io;
use atrpp::linalg::Mat;
use atrpp::metrics::kendall_tau;
use atrpp::model::{forward, AttentionConfig, ModelParams, ModelSizes};
use atrpp::train::{class_weights, record_loss, LossConfig};

fn arb_record(z: usize, with_series: bool) -> impl Strategy<Value = Record> {
    let events = prop::collection::vec((0..z, 0.0_f64..5.0), 2..12);
    (events, "[a-z]{1,8}").prop_map(move |(raw, id)| {
        let mut t = 0.0;
        let events: Vec<Event> = raw
            .into_iter()
            .map(|(dim, gap)| {
                t += gap;
                Event { dim, time: t }
            })
            .collect();
        let series = with_series.then(|| {
            let last = events.last().unwrap().time;
            let samples_n = (last.ceil() as usize) + 2;
            let mut samples = Mat::zeros(samples_n, 2);
            for k in 0..samples_n {
                samples.set(k, 0, (k as f64 * 0.37).sin());
                samples.set(k, 1, 0.01 * k as f64);
            }
            TimeSeries { start_time: 0.0, step: 1.0, samples }
        });
        Record { id, sequence: EventSequence::new(events, z), series }
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    /// Write-then-read reproduces records bit-exactly, timestamps included.
    #[test]
    fn files_round_trip_bit_exactly(records in prop::collection::vec(arb_record(4, true), 1..5)) {
        let dir = tempfile::tempdir().unwrap();
        let ev = dir.path().join("events.jsonl");
        let se = dir.path().join("series.csv");
        // Ids must be unique for the series join.
        let records: Vec<Record> = records
            .into_iter()
            .enumerate()
            .map(|(i, mut r)| {
                r.id = format!("{}_{i}", r.id);
                r
            })
            .collect();
        io::write_events_jsonl(&records, &ev).unwrap();
        io::write_series_csv(&records, &se).unwrap();
        let loaded = io::load_records(&ev, Some(se.as_path())).unwrap();
        prop_assert_eq!(loaded, records);
    }

    /// Any record passing validation is accepted by the model stack without
    /// a precondition failure, and its softmax outputs stay normalized.
    #[test]
    fn valid_records_flow_through_model(record in arb_record(4, true), with_series in any::<bool>()) {
        prop_assert!(validate_record(&record).is_empty());
        let sizes = ModelSizes {
            num_dims: 4,
            feature_width: 2,
            embed_dim: 3,
            hidden_event: 5,
            hidden_series: 4,
            hidden_fuse: 4,
        };
        let params = ModelParams::init(sizes, with_series, 11);
        let cfg = AttentionConfig { epsilon: 0.01, window: Some(3) };
        let trace = forward(&record, &params, &cfg).unwrap();
        prop_assert_eq!(trace.steps.len(), record.sequence.len() - 1);
        for step in &trace.steps {
            let total: f64 = step.probs.iter().sum();
            prop_assert!((total - 1.0).abs() < 1e-9);
            prop_assert!(step.attn_weights.data().iter().all(|w| (0.0..1.0).contains(w)));
        }
        let (weights, _) = class_weights(&[&record], 4);
        let loss = record_loss(&record, &params, &cfg, &weights, &LossConfig::default()).unwrap();
        prop_assert!(loss.total.is_finite());
    }

    /// Kendall tau is symmetric and invariant under strictly increasing
    /// transforms of either argument.
    #[test]
    fn kendall_symmetry_and_monotone_invariance(
        pairs in prop::collection::vec((-50i32..50, -50i32..50), 2..20)
    ) {
        let x: Vec<f64> = pairs.iter().map(|(a, _)| *a as f64).collect();
        let y: Vec<f64> = pairs.iter().map(|(_, b)| *b as f64).collect();
        let t_xy = kendall_tau(&x, &y).unwrap();
        let t_yx = kendall_tau(&y, &x).unwrap();
        prop_assert!((t_xy - t_yx).abs() < 1e-12);
        let x_mono: Vec<f64> = x.iter().map(|v| (v * 0.1).exp() + 3.0 * v).collect();
        let t_mono = kendall_tau(&x_mono, &y).unwrap();
        prop_assert!((t_xy - t_mono).abs() < 1e-12);
    }
}
