//! The five experiment commands. Every command resolves its full config,
//! executes, and writes a JSON manifest alongside its outputs so the run can
//! be reproduced bit-exactly from the manifest alone.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use atrpp::baselines;
use atrpp::checkpoint::Checkpoint;
use atrpp::data::{Dataset, Record, Split};
use atrpp::io;
use atrpp::linalg::Mat;
use atrpp::metrics;
use atrpp::model::{extract_infectivity, NeuralPredictor};
use atrpp::predictor::{collect_predictions, Predictor};
use atrpp::train::{train_from, EpochStats};
use atrpp::{Error, Result};

use crate::config::RunConfig;
use crate::report;

pub const EVENT_FILES: [(&str, Split); 3] = [
    ("train.jsonl", Split::Train),
    ("val.jsonl", Split::Val),
    ("test.jsonl", Split::Test),
];
pub const SERIES_FILES: [&str; 3] = ["series_train.csv", "series_val.csv", "series_test.csv"];

/// A command manifest: the resolved config plus command-specific facts.
#[derive(Serialize, Deserialize)]
pub struct Manifest {
    pub command: String,
    pub seed: u64,
    pub out_dir: String,
    pub config: RunConfig,
    pub extra: BTreeMap<String, serde_json::Value>,
}

fn write_manifest(
    command: &str,
    seed: u64,
    out_dir: &Path,
    config: &RunConfig,
    extra: BTreeMap<String, serde_json::Value>,
) -> Result<()> {
    let manifest = Manifest {
        command: command.to_string(),
        seed,
        out_dir: out_dir.display().to_string(),
        config: config.clone(),
        extra,
    };
    let path = out_dir.join(format!("manifest_{command}.json"));
    let text = serde_json::to_string_pretty(&manifest)
        .map_err(|e| Error::Data(format!("serialize manifest: {e}")))?;
    fs::write(path, text + "\n")?;
    Ok(())
}

fn ensure_dir(path: &Path) -> Result<()> {
    fs::create_dir_all(path)?;
    Ok(())
}

/// Generates the synthetic study: per-split event and series files, the
/// ground-truth parameters, and the manifest.
pub fn cmd_simulate(config: &RunConfig, seed: u64, out_dir: &Path) -> Result<()> {
    let data_dir = PathBuf::from(&config.data.dir);
    ensure_dir(&data_dir)?;
    ensure_dir(out_dir)?;

    let synth = config.synthetic.to_config(seed);
    let output = atrpp::hawkes::generate_synthetic(&synth)?;
    let dataset = &output.dataset;

    for (idx, (file, split)) in EVENT_FILES.iter().enumerate() {
        let records: Vec<Record> =
            dataset.split_records(*split).into_iter().cloned().collect();
        io::write_events_jsonl(&records, &data_dir.join(file))?;
        io::write_series_csv(&records, &data_dir.join(SERIES_FILES[idx]))?;
    }
    io::write_vector_csv(&output.ground_truth.mu, &data_dir.join("mu.csv"))?;
    io::write_matrix_csv(&output.ground_truth.a, &data_dir.join("A.csv"))?;

    let (n_train, n_val, n_test) = dataset.split_sizes();
    let mut extra = BTreeMap::new();
    extra.insert("spectral_factor".into(), output.spectral_factor.into());
    extra.insert(
        "branching_radius".into(),
        output.ground_truth.branching_radius().into(),
    );
    extra.insert("z".into(), synth.num_dims.into());
    extra.insert("w".into(), synth.w.into());
    extra.insert("cascades".into(), synth.num_cascades.into());
    extra.insert("split_sizes".into(), serde_json::json!([n_train, n_val, n_test]));
    extra.insert("data_dir".into(), config.data.dir.clone().into());
    write_manifest("simulate", seed, out_dir, config, extra)?;
    println!(
        "simulate: {} cascades (Z={}) -> {} [{n_train}/{n_val}/{n_test}]",
        synth.num_cascades,
        synth.num_dims,
        data_dir.display()
    );
    Ok(())
}

/// Loads the per-split dataset files written by `cmd_simulate` (or shaped
/// like them).
pub fn load_dataset(data_dir: &Path) -> Result<Dataset> {
    let mut records = Vec::new();
    let mut split = Vec::new();
    for (idx, (file, which)) in EVENT_FILES.iter().enumerate() {
        let events_path = data_dir.join(file);
        if !events_path.exists() {
            return Err(Error::Data(format!("missing dataset file {}", events_path.display())));
        }
        let series_path = data_dir.join(SERIES_FILES[idx]);
        let part = io::load_records(
            &events_path,
            if series_path.exists() { Some(series_path.as_path()) } else { None },
        )?;
        for rec in part {
            records.push(rec);
            split.push(*which);
        }
    }
    if records.is_empty() {
        return Err(Error::Data("dataset is empty".into()));
    }
    let num_dims = records[0].sequence.num_dims;
    Dataset::new(records, num_dims, split)
}

fn resolve_against(base: &Path, path: &str) -> PathBuf {
    let p = PathBuf::from(path);
    if p.is_absolute() || p.exists() {
        p
    } else {
        base.join(p)
    }
}

/// Trains the model and writes the checkpoint, the training log, and the
/// manifest.
pub fn cmd_train(config: &RunConfig, seed: u64, out_dir: &Path) -> Result<()> {
    ensure_dir(out_dir)?;
    let dataset = load_dataset(Path::new(&config.data.dir))?;
    let train_cfg = config.train_config(seed);

    let resume = if config.train.resume.is_empty() {
        None
    } else {
        let path = resolve_against(out_dir, &config.train.resume);
        let ckpt = Checkpoint::load(&path)?;
        Some((ckpt.params, ckpt.trained_epochs))
    };

    let outcome = train_from(&dataset, &train_cfg, resume)?;
    let epochs_run = outcome.log.last().map(|e| e.epoch).unwrap_or(0);

    let checkpoint = Checkpoint::new(
        outcome.params.clone(),
        train_cfg.attention.clone(),
        epochs_run,
    );
    let ckpt_path = out_dir.join(&config.eval.checkpoint);
    checkpoint.save(&ckpt_path)?;
    write_train_log(&outcome.log, &out_dir.join("train_log.csv"))?;

    let mut extra = BTreeMap::new();
    extra.insert("variant".into(), checkpoint.variant.clone().into());
    extra.insert("best_epoch".into(), outcome.best_epoch.into());
    extra.insert("epochs_run".into(), epochs_run.into());
    extra.insert("stopped_early".into(), outcome.stopped_early.into());
    extra.insert("param_count".into(), outcome.params.num_params().into());
    extra.insert("class_counts".into(), serde_json::json!(outcome.class_counts));
    extra.insert("class_weights".into(), serde_json::json!(outcome.class_weights));
    extra.insert("checkpoint".into(), config.eval.checkpoint.clone().into());
    write_manifest("train", seed, out_dir, config, extra)?;
    println!(
        "train: variant={} epochs={} best={} -> {}",
        checkpoint.variant,
        epochs_run,
        outcome.best_epoch,
        ckpt_path.display()
    );
    Ok(())
}

fn write_train_log(log: &[EpochStats], path: &Path) -> Result<()> {
    let mut text = String::from("epoch,train_loss,val_loss,seconds\n");
    for row in log {
        text.push_str(&format!(
            "{},{},{},{:.3}\n",
            row.epoch, row.train_loss, row.val_loss, row.seconds
        ));
    }
    fs::write(path, text)?;
    Ok(())
}

fn ground_truth_matrix(config: &RunConfig) -> Option<Mat> {
    let path = Path::new(&config.data.dir).join("A.csv");
    path.exists().then(|| io::read_matrix_csv(&path)).transpose().ok().flatten()
}

/// Loads the checkpoint and verifies it against the dataset schema.
fn load_checkpoint_for(config: &RunConfig, out_dir: &Path, dataset: &Dataset) -> Result<Checkpoint> {
    let path = resolve_against(out_dir, &config.eval.checkpoint);
    let ckpt = Checkpoint::load(&path)?;
    if ckpt.num_dims != dataset.num_dims {
        return Err(Error::Shape(format!(
            "checkpoint has Z={}, dataset has Z={}",
            ckpt.num_dims, dataset.num_dims
        )));
    }
    if ckpt.params.uses_series() && ckpt.feature_width != dataset.feature_width() {
        return Err(Error::Shape(format!(
            "checkpoint expects {} series features, dataset has {}",
            ckpt.feature_width,
            dataset.feature_width()
        )));
    }
    Ok(ckpt)
}

/// Evaluates the trained model on the test split: classification metrics,
/// MAE, accuracy@k, and (when ground truth exists) infectivity recovery.
pub fn cmd_eval(config: &RunConfig, seed: u64, out_dir: &Path) -> Result<()> {
    ensure_dir(out_dir)?;
    let dataset = load_dataset(Path::new(&config.data.dir))?;
    let ckpt = load_checkpoint_for(config, out_dir, &dataset)?;
    let predictor = NeuralPredictor {
        params: ckpt.params.clone(),
        attention: ckpt.attention.clone(),
    };
    let test = dataset.test();
    let set = collect_predictions(&predictor, &test);

    let (rank_corr, rel_err) = match ground_truth_matrix(config) {
        Some(truth) => {
            let est = extract_infectivity(&ckpt.params, &ckpt.attention, &test)?;
            (
                Some(metrics::rank_corr(&truth, &est.matrix)?),
                Some(metrics::rel_err(&truth, &est.matrix, config.eval.normalize)?),
            )
        }
        None => (None, None),
    };

    let row = report::metrics_row(
        predictor.name(),
        &set,
        dataset.num_dims,
        &config.eval.k_list,
        rank_corr,
        rel_err,
    );
    report::write_metrics_json(&row, &out_dir.join("metrics.json"))?;
    report::write_metrics_csv(&row, &out_dir.join("metrics.csv"))?;
    let confusion = metrics::confusion_matrix(&set, dataset.num_dims);
    report::write_confusion_csv(&confusion, &out_dir.join("confusion.csv"))?;
    report::write_per_class_csv(
        &metrics::precision_recall_f1(&confusion),
        &out_dir.join("per_class.csv"),
    )?;

    let mut extra = BTreeMap::new();
    extra.insert("variant".into(), ckpt.variant.clone().into());
    extra.insert("test_records".into(), test.len().into());
    extra.insert("steps".into(), set.steps.len().into());
    extra.insert("has_ground_truth".into(), rank_corr.is_some().into());
    write_manifest("eval", seed, out_dir, config, extra)?;
    println!("eval: {} steps over {} test records -> {}", set.steps.len(), test.len(), out_dir.display());
    Ok(())
}

/// Fits every enabled baseline, evaluates each on the same test split, and
/// writes one comparison table. Per-model failures land in the table's
/// error column without aborting the rest.
pub fn cmd_baselines(config: &RunConfig, seed: u64, out_dir: &Path) -> Result<()> {
    ensure_dir(out_dir)?;
    let models_dir = out_dir.join("models");
    ensure_dir(&models_dir)?;
    let dataset = load_dataset(Path::new(&config.data.dir))?;
    let test = dataset.test();
    let truth = ground_truth_matrix(config);
    let baseline_cfg = config.baselines.to_config(seed);

    let mut rows = Vec::new();
    for name in &config.baselines.enabled {
        let Some(builder) = baselines::builder(name) else {
            rows.push(report::MetricsRow {
                model: name.clone(),
                steps: 0,
                values: empty_values(&config.eval.k_list),
                error: Some("unknown baseline".into()),
            });
            continue;
        };
        match builder.fit(&dataset, &baseline_cfg) {
            Ok(model) => {
                let set = collect_predictions(model.as_ref(), &test);
                let (rc, re) = match (&truth, model.infectivity()) {
                    (Some(t), Some(est)) => (
                        Some(metrics::rank_corr(t, &est)?),
                        Some(metrics::rel_err(t, &est, config.eval.normalize)?),
                    ),
                    _ => (None, None),
                };
                rows.push(report::metrics_row(
                    name,
                    &set,
                    dataset.num_dims,
                    &config.eval.k_list,
                    rc,
                    re,
                ));
                let json = model.to_json()?;
                fs::write(
                    models_dir.join(format!("{name}.json")),
                    serde_json::to_string_pretty(&json)
                        .map_err(|e| Error::Data(e.to_string()))?
                        + "\n",
                )?;
            }
            Err(err) => rows.push(report::MetricsRow {
                model: name.clone(),
                steps: 0,
                values: empty_values(&config.eval.k_list),
                error: Some(err.to_string()),
            }),
        }
    }

    // The trained model joins the table when its checkpoint is available.
    if config.baselines.include_model {
        if let Ok(ckpt) = load_checkpoint_for(config, out_dir, &dataset) {
            let predictor = NeuralPredictor {
                params: ckpt.params.clone(),
                attention: ckpt.attention.clone(),
            };
            let set = collect_predictions(&predictor, &test);
            let (rc, re) = match &truth {
                Some(t) => {
                    let est = extract_infectivity(&ckpt.params, &ckpt.attention, &test)?;
                    (
                        Some(metrics::rank_corr(t, &est.matrix)?),
                        Some(metrics::rel_err(t, &est.matrix, config.eval.normalize)?),
                    )
                }
                None => (None, None),
            };
            rows.push(report::metrics_row(
                predictor.name(),
                &set,
                dataset.num_dims,
                &config.eval.k_list,
                rc,
                re,
            ));
        }
    }

    report::write_table_csv(&rows, &out_dir.join("baselines.csv"))?;

    let mut extra = BTreeMap::new();
    extra.insert(
        "models".into(),
        serde_json::json!(rows.iter().map(|r| r.model.clone()).collect::<Vec<_>>()),
    );
    extra.insert(
        "failures".into(),
        serde_json::json!(rows
            .iter()
            .filter(|r| r.error.is_some())
            .map(|r| r.model.clone())
            .collect::<Vec<_>>()),
    );
    write_manifest("baselines", seed, out_dir, config, extra)?;
    println!("baselines: {} rows -> {}", rows.len(), out_dir.join("baselines.csv").display());
    Ok(())
}

fn empty_values(k_list: &[usize]) -> Vec<(String, Option<f64>)> {
    let mut values: Vec<(String, Option<f64>)> = vec![
        ("accuracy".into(), None),
        ("macro_precision".into(), None),
        ("macro_recall".into(), None),
        ("macro_f1".into(), None),
    ];
    for &k in k_list {
        values.push((format!("accuracy_at_{k}"), None));
    }
    values.push(("mae".into(), None));
    values.push(("rank_corr".into(), None));
    values.push(("rel_err".into(), None));
    values
}

/// Extracts the trained model's infectivity estimate over the test split and
/// writes it as CSV plus a DOT digraph.
pub fn cmd_infectivity(config: &RunConfig, seed: u64, out_dir: &Path) -> Result<()> {
    ensure_dir(out_dir)?;
    let dataset = load_dataset(Path::new(&config.data.dir))?;
    let ckpt = load_checkpoint_for(config, out_dir, &dataset)?;
    let test = dataset.test();
    let est = extract_infectivity(&ckpt.params, &ckpt.attention, &test)?;

    io::write_matrix_csv(&est.matrix, &out_dir.join("infectivity.csv"))?;
    io::write_matrix_csv(&est.counts, &out_dir.join("infectivity_counts.csv"))?;
    report::write_dot(&est.matrix, config.infectivity.edge_floor, &out_dir.join("infectivity.dot"))?;

    let mut extra = BTreeMap::new();
    extra.insert("records".into(), est.records_used.into());
    extra.insert("epsilon".into(), est.epsilon.into());
    extra.insert("edge_floor".into(), config.infectivity.edge_floor.into());
    extra.insert(
        "edges".into(),
        est.matrix
            .data()
            .iter()
            .filter(|v| **v >= config.infectivity.edge_floor && **v > 0.0)
            .count()
            .into(),
    );
    write_manifest("infectivity", seed, out_dir, config, extra)?;
    println!("infectivity: {}x{} estimate -> {}", dataset.num_dims, dataset.num_dims, out_dir.display());
    Ok(())
}
