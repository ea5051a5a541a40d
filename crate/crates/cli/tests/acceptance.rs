//! Acceptance suite: one test per criterion, each printing a PASS line with
//! the measured values (run with `--nocapture` to see them).
//!
//! Criteria 5, 6, and 8 share one synthetic study (data generation, model
//! training, baseline fits) built once in a shared fixture.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;
use std::process::Command;
use std::sync::OnceLock;
use std::time::Instant;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;

use atrpp::baselines::{BaselineConfig, HawkesMleModel, MarkovModel, PoissonModel};
use atrpp::data::{Dataset, Event, EventSequence, Record, TimeSeries};
use atrpp::hawkes::{compensator_increments, generate_synthetic, simulate, HawkesParams, SyntheticConfig};
use atrpp::linalg::{solve, Mat};
use atrpp::metrics::{accuracy_at_k, kendall_tau, mae, rank_corr, rel_err};
use atrpp::model::{extract_infectivity, forward, gradients, AttentionConfig, ModelParams, ModelSizes, NeuralPredictor};
use atrpp::predictor::{collect_predictions, PredictionSet, PredictionStep};
use atrpp::train::{sequence_loss, train, LossConfig, TrainConfig};

// ---------------------------------------------------------------------------
// Criterion 1: gradient master check.

fn random_record(z: usize, n: usize, f: usize, with_series: bool, rng: &mut impl Rng) -> Record {
    let mut t = 0.0;
    let events: Vec<Event> = (0..n)
        .map(|_| {
            t += rng.random_range(0.05..1.0);
            Event { dim: rng.random_range(0..z), time: t }
        })
        .collect();
    let series = with_series.then(|| {
        let samples_n = 2 + (t.ceil() as usize);
        let mut samples = Mat::zeros(samples_n, f);
        for k in 0..samples_n {
            for c in 0..f {
                samples.set(k, c, rng.random_range(-1.0..1.0));
            }
        }
        TimeSeries { start_time: 0.0, step: 1.0, samples }
    });
    Record { id: "fd".into(), sequence: EventSequence::new(events, z), series }
}

#[test]
fn criterion_01_gradient_master_check() {
    let started = Instant::now();
    let mut checked = 0usize;
    for seed in 0..20u64 {
        let mut rng = ChaCha12Rng::seed_from_u64(1000 + seed);
        let z = rng.random_range(3..=6);
        let f = rng.random_range(2..=4);
        let with_series = rng.random_range(0..2) == 1;
        let n = rng.random_range(3..=8);
        let sizes = ModelSizes {
            num_dims: z,
            feature_width: f,
            embed_dim: rng.random_range(2..=4),
            hidden_event: rng.random_range(4..=8),
            hidden_series: rng.random_range(3..=6),
            hidden_fuse: rng.random_range(3..=6),
        };
        let mut params = ModelParams::init(sizes, with_series, seed + 1);
        // Spread the weights so attention scores straddle the threshold.
        for s in params.tensor_slices_mut() {
            for v in s {
                *v *= 3.0;
            }
        }
        let record = random_record(z, n, f, with_series, &mut rng);
        let attn = AttentionConfig {
            epsilon: 0.01,
            window: if rng.random_range(0..2) == 1 { Some(2) } else { None },
        };
        let loss_cfg = LossConfig { sigma: rng.random_range(0.6..1.5), time_weight: 1.0 };
        let weights: Vec<f64> = (0..z).map(|_| rng.random_range(0.5..2.0)).collect();

        let trace = forward(&record, &params, &attn).unwrap();
        let (grads, _) = gradients(&trace, &record, &weights, &loss_cfg, &params);

        let flat = params.to_flat();
        let grad_flat = grads.to_flat();
        let mut scratch = params.clone();
        let eps = 1e-5;
        for idx in 0..flat.len() {
            let mut up = flat.clone();
            up[idx] += eps;
            scratch.set_from_flat(&up);
            let plus = {
                let t = forward(&record, &scratch, &attn).unwrap();
                sequence_loss(&t, &record, &weights, &loss_cfg).total
            };
            let mut down = flat.clone();
            down[idx] -= eps;
            scratch.set_from_flat(&down);
            let minus = {
                let t = forward(&record, &scratch, &attn).unwrap();
                sequence_loss(&t, &record, &weights, &loss_cfg).total
            };
            let fd = (plus - minus) / (2.0 * eps);
            let analytic = grad_flat[idx];
            let err = (analytic - fd).abs();
            let rel = err / analytic.abs().max(fd.abs()).max(1e-12);
            assert!(
                rel < 1e-4 || err < 1e-7,
                "model seed {seed} param {idx}: analytic {analytic} vs fd {fd}"
            );
            checked += 1;
        }
    }
    let secs = started.elapsed().as_secs_f64();
    assert!(secs < 120.0, "gradient master check took {secs:.1}s (budget 120s)");
    println!("[PASS] criterion 1: gradient master check — {checked} parameter gradients across 20 models in {secs:.1}s");
}

// ---------------------------------------------------------------------------
// Criterion 2: simulator Poisson oracle.

#[test]
fn criterion_02_simulator_poisson_oracle() {
    let started = Instant::now();
    let z = 2;
    let params = HawkesParams { mu: vec![0.1; z], a: Mat::zeros(z, z), w: 1.0 };
    let horizon = 1000.0;
    let replicates = 200;
    let mut counts = vec![Vec::with_capacity(replicates); z];
    for seed in 0..replicates as u64 {
        let seq = simulate(&params, horizon, 42_000 + seed).unwrap();
        for d in 0..z {
            counts[d].push(seq.events.iter().filter(|e| e.dim == d).count() as f64);
        }
    }
    for d in 0..z {
        let n = counts[d].len() as f64;
        let mean = counts[d].iter().sum::<f64>() / n;
        let var = counts[d].iter().map(|c| (c - mean) * (c - mean)).sum::<f64>() / (n - 1.0);
        let se = (var / n).sqrt();
        assert!(
            (mean - 100.0).abs() <= 3.0 * se,
            "dim {d}: mean count {mean:.2} outside 100 +- 3*{se:.3}"
        );
        println!("[PASS] criterion 2: Poisson oracle dim {d} — mean {mean:.2} vs 100 (se {se:.3})");
    }
    let secs = started.elapsed().as_secs_f64();
    assert!(secs < 60.0, "Poisson oracle took {secs:.1}s (budget 60s)");
}

// ---------------------------------------------------------------------------
// Criterion 3: simulator Hawkes oracle (branching stationary rate).

#[test]
fn criterion_03_simulator_hawkes_oracle() {
    let started = Instant::now();
    let params = HawkesParams {
        mu: vec![0.3, 0.2, 0.4],
        a: Mat::from_vec(3, 3, vec![0.8, 0.4, 0.0, 0.0, 0.8, 0.4, 0.4, 0.0, 0.8]),
        w: 2.0,
    };
    let b = params.branching_matrix();
    let z = 3;
    let mut system = Mat::zeros(z, z);
    for i in 0..z {
        for j in 0..z {
            let eye = if i == j { 1.0 } else { 0.0 };
            system.set(i, j, eye - b.get(j, i));
        }
    }
    let rates = solve(&system, &params.mu).unwrap();
    let horizon = 500.0;
    let expected = horizon * rates.iter().sum::<f64>();

    let cascades = 500;
    let total: f64 = (0..cascades as u64)
        .map(|seed| simulate(&params, horizon, 90_000 + seed).unwrap().len() as f64)
        .sum();
    let mean = total / cascades as f64;
    let rel = (mean - expected).abs() / expected;
    let secs = started.elapsed().as_secs_f64();
    assert!(rel < 0.10, "mean count {mean:.1} vs branching prediction {expected:.1} (rel {rel:.4})");
    assert!(secs < 120.0, "Hawkes oracle took {secs:.1}s (budget 120s)");
    println!(
        "[PASS] criterion 3: Hawkes oracle — mean count {mean:.1} vs {expected:.1} (rel {:.2}%) in {secs:.1}s",
        rel * 100.0
    );
}

// ---------------------------------------------------------------------------
// Criterion 4: time-rescaling KS test.

#[test]
fn criterion_04_time_rescaling_ks() {
    let params = HawkesParams {
        mu: vec![0.3, 0.2, 0.4],
        a: Mat::from_vec(3, 3, vec![0.8, 0.4, 0.0, 0.0, 0.8, 0.4, 0.4, 0.0, 0.8]),
        w: 2.0,
    };
    let mut increments = Vec::new();
    for seed in 0..100u64 {
        let seq = simulate(&params, 60.0, 77_000 + seed).unwrap();
        increments.extend(compensator_increments(&params, &seq));
    }
    assert!(increments.len() >= 5000, "only {} pooled increments", increments.len());
    increments.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = increments.len() as f64;
    let mut d = 0.0_f64;
    for (i, x) in increments.iter().enumerate() {
        let cdf = 1.0 - (-x).exp();
        d = d.max((cdf - i as f64 / n).abs()).max(((i + 1) as f64 / n - cdf).abs());
    }
    let critical = 1.6276 / n.sqrt();
    assert!(d < critical, "KS statistic {d:.5} >= 1% critical value {critical:.5}");
    println!(
        "[PASS] criterion 4: time-rescaling — KS {d:.5} < {critical:.5} on {} increments",
        increments.len()
    );
}

// ---------------------------------------------------------------------------
// Shared fixture for criteria 5, 6, 8: the scaled-down synthetic study.

struct Study {
    dataset: Dataset,
    model: ModelParams,
    attention: AttentionConfig,
    atrpp_rank_corr: f64,
    null_mean: f64,
    null_std: f64,
    hawkes_rank_corr: f64,
    atrpp_accuracy: f64,
    markov_accuracy: f64,
    atrpp_mae: f64,
    poisson_mae: f64,
}

fn study() -> &'static Study {
    static STUDY: OnceLock<Study> = OnceLock::new();
    STUDY.get_or_init(build_study)
}

fn permuted_null(truth: &Mat, est: &Mat, n_perms: usize, seed: u64) -> (f64, f64) {
    let z = truth.rows();
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let mut values = Vec::with_capacity(n_perms);
    for _ in 0..n_perms {
        let mut perm: Vec<usize> = (0..z).collect();
        perm.shuffle(&mut rng);
        let mut permuted = Mat::zeros(z, z);
        for i in 0..z {
            for j in 0..z {
                permuted.set(i, j, est.get(perm[i], perm[j]));
            }
        }
        values.push(rank_corr(truth, &permuted).unwrap());
    }
    let mean = values.iter().sum::<f64>() / values.len() as f64;
    let var =
        values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (values.len() - 1) as f64;
    (mean, var.sqrt())
}

fn build_study() -> Study {
    let started = Instant::now();
    // Scaled-down synthetic protocol: Z = 10, 500/100/100 cascades, w = 0.01.
    // Background intensities are held constant so class frequencies stay
    // near uniform; with the inverse-frequency class weights of the loss,
    // the accuracy-optimal predictor then coincides with the
    // likelihood-optimal one.
    let synth = SyntheticConfig {
        num_dims: 10,
        mu_range: (0.005, 0.005),
        a_range: (0.0, 0.1),
        zero_fraction: 0.5,
        w: 0.01,
        horizon: 200.0,
        num_cascades: 700,
        noise_scale: 0.001,
        gaussian_noise: false,
        series_step: 0.0,
        train_val_test: (5.0 / 7.0, 1.0 / 7.0, 1.0 / 7.0),
        seed: 555,
    };
    let output = generate_synthetic(&synth).unwrap();
    let dataset = output.dataset;
    assert_eq!(dataset.split_sizes(), (500, 100, 100));

    // Patience spans the whole budget: the validation loss sits on a long
    // plateau before the dimension structure starts to separate, and early
    // stopping inside the plateau would return the uniform solution.
    let train_cfg = TrainConfig {
        max_epochs: 300,
        patience: 300,
        lr: 3e-3,
        seed: 99,
        attention: AttentionConfig { epsilon: 0.01, window: Some(2) },
        loss: LossConfig { sigma: 10.0, time_weight: 1.0 },
        embed_dim: 8,
        hidden_event: 8,
        hidden_series: 8,
        hidden_fuse: 8,
        ..Default::default()
    };
    let outcome = train(&dataset, &train_cfg).unwrap();

    let test = dataset.test();
    let est = extract_infectivity(&outcome.params, &train_cfg.attention, &test).unwrap();
    let atrpp_rank_corr = rank_corr(&output.ground_truth.a, &est.matrix).unwrap();
    let (null_mean, null_std) = permuted_null(&output.ground_truth.a, &est.matrix, 100, 7);

    let baseline_cfg = BaselineConfig {
        hawkes_w: Some(0.01),
        hawkes_max_iters: 300,
        hawkes_rollouts: 20,
        ..Default::default()
    };
    let hawkes =
        HawkesMleModel::fit_with_grid(&dataset.train(), &dataset.validation(), 10, Some(0.01), &baseline_cfg)
            .unwrap();
    let hawkes_rank_corr = rank_corr(&output.ground_truth.a, &hawkes.infectivity_mat()).unwrap();

    let neural =
        NeuralPredictor { params: outcome.params.clone(), attention: train_cfg.attention.clone() };
    let atrpp_set = collect_predictions(&neural, &test);
    let markov = MarkovModel::fit(&dataset.train(), 3, &dataset.validation(), 10).unwrap();
    let markov_set = collect_predictions(&markov, &test);
    let poisson = PoissonModel::fit(&dataset.train()).unwrap();
    let poisson_set = collect_predictions(&poisson, &test);

    println!(
        "[INFO] study built in {:.1}s (train epochs {}, best {})",
        started.elapsed().as_secs_f64(),
        outcome.log.len(),
        outcome.best_epoch
    );
    Study {
        model: outcome.params,
        attention: train_cfg.attention.clone(),
        atrpp_rank_corr,
        null_mean,
        null_std,
        hawkes_rank_corr,
        atrpp_accuracy: accuracy_at_k(&atrpp_set, 1).unwrap(),
        markov_accuracy: accuracy_at_k(&markov_set, 1).unwrap(),
        atrpp_mae: mae(&atrpp_set).unwrap(),
        poisson_mae: mae(&poisson_set).unwrap(),
        dataset,
    }
}

#[test]
fn criterion_05_structure_recovery() {
    let s = study();
    let z_score = (s.atrpp_rank_corr - s.null_mean) / s.null_std;
    let clause_level = s.atrpp_rank_corr >= 0.2;
    let clause_null = z_score >= 5.0;
    let clause_hawkes = s.hawkes_rank_corr >= 0.5;
    let mark = |ok: bool| if ok { "[PASS]" } else { "[FAIL]" };
    println!(
        "{} criterion 5a: ATRPP RankCorr {:.4} (bar 0.2)",
        mark(clause_level),
        s.atrpp_rank_corr
    );
    println!(
        "{} criterion 5b: ATRPP RankCorr {z_score:.2} null sds above permuted mean {:.4} (sd {:.4}, bar 5.0)",
        mark(clause_null),
        s.null_mean,
        s.null_std
    );
    println!(
        "{} criterion 5c: Hawkes MLE RankCorr {:.4} (bar 0.5)",
        mark(clause_hawkes),
        s.hawkes_rank_corr
    );
    assert!(clause_hawkes, "Hawkes MLE RankCorr {:.4} below 0.5", s.hawkes_rank_corr);
    // Known limitation, kept red on purpose: the shared score vector makes
    // per-dimension |tanh| attention the only class-discriminative pathway,
    // and at this data scale training drives those weights toward
    // saturation plus per-target offsets. The averaged attention matrix
    // then ranks sources far more weakly than the model's own predictions
    // (criterion 6) would suggest.
    assert!(
        clause_level && clause_null,
        "attention-based recovery below the bar: RankCorr {:.4} (bar 0.2), {z_score:.2} null sds (bar 5.0)",
        s.atrpp_rank_corr
    );
}

#[test]
fn criterion_06_predictive_ordering() {
    let s = study();
    assert!(
        s.atrpp_accuracy >= s.markov_accuracy,
        "ATRPP accuracy {:.4} below Markov {:.4}",
        s.atrpp_accuracy,
        s.markov_accuracy
    );
    assert!(
        s.atrpp_mae <= s.poisson_mae,
        "ATRPP MAE {:.4} above Poisson {:.4}",
        s.atrpp_mae,
        s.poisson_mae
    );
    println!(
        "[PASS] criterion 6: predictive ordering — accuracy {:.4} >= Markov {:.4}; MAE {:.4} <= Poisson {:.4}",
        s.atrpp_accuracy, s.markov_accuracy, s.atrpp_mae, s.poisson_mae
    );
}

// ---------------------------------------------------------------------------
// Criterion 7: metric oracles.

fn permutations(values: &[f64]) -> Vec<Vec<f64>> {
    if values.len() <= 1 {
        return vec![values.to_vec()];
    }
    let mut out = Vec::new();
    for i in 0..values.len() {
        let mut rest = values.to_vec();
        let head = rest.remove(i);
        for mut tail in permutations(&rest) {
            tail.insert(0, head);
            out.push(tail);
        }
    }
    out
}

/// Independent tau-b route: classify every pair, then combine as
/// `(c - d) / sqrt((c + d + ty_only) * (c + d + tx_only))`.
fn brute_force_tau(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len();
    let (mut c, mut d, mut tx_only, mut ty_only) = (0i64, 0i64, 0i64, 0i64);
    for i in 0..n {
        for j in i + 1..n {
            let dx = x[i] - x[j];
            let dy = y[i] - y[j];
            if dx == 0.0 && dy == 0.0 {
            } else if dx == 0.0 {
                tx_only += 1;
            } else if dy == 0.0 {
                ty_only += 1;
            } else if (dx > 0.0) == (dy > 0.0) {
                c += 1;
            } else {
                d += 1;
            }
        }
    }
    let denom = (((c + d + ty_only) as f64) * ((c + d + tx_only) as f64)).sqrt();
    if denom == 0.0 {
        0.0
    } else {
        (c - d) as f64 / denom
    }
}

#[test]
fn criterion_07_metric_oracles() {
    // Kendall tau over all 24 permutations of 4 elements, against the
    // pair-counting oracle, exactly.
    let base = [1.0, 2.0, 3.0, 4.0];
    let perms = permutations(&base);
    assert_eq!(perms.len(), 24);
    for p in &perms {
        let fast = kendall_tau(&base, p).unwrap();
        let brute = brute_force_tau(&base, p);
        assert_eq!(fast, brute, "perm {p:?}");
    }

    // accuracy@k monotone in k over random prediction sets.
    let mut rng = ChaCha12Rng::seed_from_u64(5);
    for _ in 0..50 {
        let z = rng.random_range(2..8);
        let steps: Vec<PredictionStep> = (0..rng.random_range(1..40))
            .map(|_| {
                let mut ranked: Vec<usize> = (0..z).collect();
                ranked.shuffle(&mut rng);
                PredictionStep {
                    true_dim: rng.random_range(0..z),
                    ranked_dims: ranked,
                    true_gap: 1.0,
                    pred_gap: None,
                }
            })
            .collect();
        let set = PredictionSet { steps };
        let mut prev = 0.0;
        for k in 1..=z {
            let acc = accuracy_at_k(&set, k).unwrap();
            assert!(acc >= prev, "accuracy@k decreased at k={k}");
            prev = acc;
        }
        assert_eq!(prev, 1.0);
    }

    // RelErr hand cases.
    let truth = Mat::from_vec(2, 2, vec![1.0, 0.0, 0.0, 1.0]);
    let est = Mat::from_vec(2, 2, vec![1.1, 0.0, 0.0, 0.9]);
    assert!((rel_err(&truth, &est, false).unwrap() - 0.1).abs() < 1e-12);
    assert_eq!(rel_err(&truth, &truth, false).unwrap(), 0.0);
    let mut scaled = truth.clone();
    scaled.scale(10.0);
    assert!(rel_err(&truth, &scaled, true).unwrap().abs() < 1e-12);

    println!("[PASS] criterion 7: metric oracles — 24 tau permutations exact, accuracy@k monotone, RelErr hand cases");
}

// ---------------------------------------------------------------------------
// Criterion 8: attention sparsity monotonicity on the trained model.

#[test]
fn criterion_08_attention_sparsity_monotonicity() {
    let s = study();
    let records = s.dataset.test();
    let probe: Vec<&Record> = records.into_iter().take(10).collect();
    let mut prev_weights: Option<Vec<f64>> = None;
    let mut prev_zeros = 0usize;
    for epsilon in [0.0, 0.01, 0.1, 0.5] {
        let cfg = AttentionConfig { epsilon, window: s.attention.window };
        let mut weights = Vec::new();
        for rec in &probe {
            let trace = forward(rec, &s.model, &cfg).unwrap();
            for step in &trace.steps {
                weights.extend_from_slice(step.attn_weights.data());
            }
        }
        let zeros = weights.iter().filter(|w| **w == 0.0).count();
        assert!(
            zeros >= prev_zeros,
            "zero count decreased from {prev_zeros} to {zeros} at epsilon {epsilon}"
        );
        if let Some(prev) = &prev_weights {
            assert_eq!(prev.len(), weights.len());
            for (now, before) in weights.iter().zip(prev) {
                assert!(now <= before, "weight rose from {before} to {now} at epsilon {epsilon}");
            }
        }
        prev_zeros = zeros;
        prev_weights = Some(weights);
    }
    println!("[PASS] criterion 8: attention sparsity monotone over epsilon sweep (final zero count {prev_zeros})");
}

// ---------------------------------------------------------------------------
// Criterion 9: reproducibility through CLI manifests.

#[test]
fn criterion_09_manifest_reproducibility() {
    let tmp = tempfile::tempdir().unwrap();
    let data_dir = tmp.path().join("data");
    let out_dir = tmp.path().join("out");
    let config_path = tmp.path().join("repro.ini");
    fs::write(
        &config_path,
        format!(
            "[run]\nseed = 31\n[data]\ndir = {}\n\
             [synthetic]\nz = 4\nmu_min = 0.02\nmu_max = 0.08\na_min = 0.0\na_max = 0.3\n\
             zero_fraction = 0.5\nw = 0.5\nhorizon = 50\ncascades = 40\n\
             ratio_train = 0.5\nratio_val = 0.25\nratio_test = 0.25\n\
             [model]\nembed_dim = 3\nhidden_event = 6\nhidden_series = 4\nhidden_fuse = 5\n\
             [loss]\nsigma = 3.0\n[train]\nmax_epochs = 3\npatience = 3\nlr = 0.005\n\
             [eval]\nk_list = 1,2\n",
            data_dir.display()
        ),
    )
    .unwrap();

    let bin = env!("CARGO_BIN_EXE_atrpp");
    let run = |args: &[&str]| {
        let out = Command::new(bin).args(args).output().unwrap();
        assert!(
            out.status.success(),
            "atrpp {args:?}: {}",
            String::from_utf8_lossy(&out.stderr)
        );
    };
    let config = config_path.to_str().unwrap();
    let out = out_dir.to_str().unwrap();
    run(&["simulate", "--config", config, "--out", out]);
    run(&["train", "--config", config, "--out", out]);
    run(&["eval", "--config", config, "--out", out]);

    let watched = [
        data_dir.join("train.jsonl"),
        data_dir.join("val.jsonl"),
        data_dir.join("test.jsonl"),
        data_dir.join("series_train.csv"),
        data_dir.join("mu.csv"),
        data_dir.join("A.csv"),
        out_dir.join("model.json"),
        out_dir.join("metrics.json"),
        out_dir.join("metrics.csv"),
        out_dir.join("confusion.csv"),
    ];
    let before: BTreeMap<&Path, Vec<u8>> =
        watched.iter().map(|p| (p.as_path(), fs::read(p).unwrap())).collect();

    for (cmd, manifest) in
        [("simulate", "manifest_simulate.json"), ("train", "manifest_train.json"), ("eval", "manifest_eval.json")]
    {
        let path = out_dir.join(manifest);
        run(&[cmd, "--config", path.to_str().unwrap(), "--out", out]);
    }

    for (path, old) in &before {
        let new = fs::read(path).unwrap();
        assert_eq!(&new, old, "{} not bit-identical after manifest rerun", path.display());
    }
    println!("[PASS] criterion 9: simulate/train/eval reruns from manifests are bit-identical ({} files)", watched.len());
}

// ---------------------------------------------------------------------------
// Criterion 10: baseline table dash pattern.

#[test]
fn criterion_10_baseline_table_dash_pattern() {
    let s = study();
    // Reuse the study's fitted context: fit the remaining baselines on a
    // small slice for speed — the dash pattern is structural, not metric.
    let cfg = BaselineConfig {
        hawkes_w: Some(0.01),
        hawkes_max_iters: 30,
        hawkes_rollouts: 5,
        logistic_iters: 50,
        ..Default::default()
    };
    let test = s.dataset.test();
    let probe: Vec<&Record> = test.into_iter().take(20).collect();
    for builder in atrpp::baselines::registry() {
        let model = builder.fit(&s.dataset, &cfg).unwrap();
        let set = collect_predictions(model.as_ref(), &probe);
        let has_dims = set.steps.iter().any(|st| !st.ranked_dims.is_empty());
        let has_gaps = set.steps.iter().any(|st| st.pred_gap.is_some());
        match builder.name() {
            "poisson" | "self_correcting" => {
                assert!(!has_dims, "{} must not rank dimensions", builder.name());
                assert!(has_gaps, "{} must predict gaps", builder.name());
                assert!(!model.predicts_dims() && model.predicts_gaps());
            }
            "markov" => {
                assert!(has_dims && !has_gaps, "markov must rank dims only");
                assert!(model.predicts_dims() && !model.predicts_gaps());
            }
            other => {
                assert!(has_dims && has_gaps, "{other} must predict both");
            }
        }
        assert_eq!(mae(&set).is_none(), builder.name() == "markov");
        let acc = accuracy_at_k(&set, 1);
        assert_eq!(acc.is_none(), matches!(builder.name(), "poisson" | "self_correcting"));
    }
    println!("[PASS] criterion 10: baseline table dash pattern — timing-only and dimension-only models leave the other family empty");
}
