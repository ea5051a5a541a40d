//! Output writers: flat metric reports (JSON + CSV), comparison tables,
//! confusion matrices, and DOT graphs of infectivity estimates.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use atrpp::linalg::Mat;
use atrpp::metrics::{accuracy_at_k, confusion_matrix, mae, precision_recall_f1};
use atrpp::predictor::PredictionSet;
use atrpp::{Error, Result};

/// One evaluated model: metric values in a fixed column order, with `None`
/// rendering as an empty cell (timing-only and dimension-only models leave
/// the other family blank).
#[derive(Clone, Debug)]
pub struct MetricsRow {
    pub model: String,
    pub steps: usize,
    pub values: Vec<(String, Option<f64>)>,
    pub error: Option<String>,
}

/// Computes the standard metric set for one prediction pool.
pub fn metrics_row(
    model: &str,
    set: &PredictionSet,
    num_dims: usize,
    k_list: &[usize],
    rank_corr: Option<f64>,
    rel_err: Option<f64>,
) -> MetricsRow {
    let mut values: Vec<(String, Option<f64>)> = Vec::new();
    let ranked_any = set.steps.iter().any(|s| !s.ranked_dims.is_empty());
    if ranked_any {
        let conf = confusion_matrix(set, num_dims);
        let report = precision_recall_f1(&conf);
        values.push(("accuracy".into(), accuracy_at_k(set, 1)));
        values.push(("macro_precision".into(), Some(report.macro_precision)));
        values.push(("macro_recall".into(), Some(report.macro_recall)));
        values.push(("macro_f1".into(), Some(report.macro_f1)));
        for &k in k_list {
            values.push((format!("accuracy_at_{k}"), accuracy_at_k(set, k)));
        }
    } else {
        values.push(("accuracy".into(), None));
        values.push(("macro_precision".into(), None));
        values.push(("macro_recall".into(), None));
        values.push(("macro_f1".into(), None));
        for &k in k_list {
            values.push((format!("accuracy_at_{k}"), None));
        }
    }
    values.push(("mae".into(), mae(set)));
    values.push(("rank_corr".into(), rank_corr));
    values.push(("rel_err".into(), rel_err));
    MetricsRow { model: model.to_string(), steps: set.steps.len(), values, error: None }
}

/// Flat JSON object of one row (sorted keys, deterministic bytes).
pub fn write_metrics_json(row: &MetricsRow, path: &Path) -> Result<()> {
    let mut map = serde_json::Map::new();
    map.insert("model".into(), serde_json::Value::String(row.model.clone()));
    map.insert("steps".into(), serde_json::Value::from(row.steps as u64));
    for (name, value) in &row.values {
        let v = match value {
            Some(x) => serde_json::Value::from(*x),
            None => serde_json::Value::Null,
        };
        map.insert(name.clone(), v);
    }
    let mut out = BufWriter::new(File::create(path)?);
    serde_json::to_writer_pretty(&mut out, &serde_json::Value::Object(map))
        .map_err(|e| Error::Data(format!("write metrics json: {e}")))?;
    writeln!(out)?;
    Ok(())
}

fn cell(value: &Option<f64>) -> String {
    match value {
        Some(x) => format!("{x}"),
        None => String::new(),
    }
}

/// Single-row CSV of one metric set.
pub fn write_metrics_csv(row: &MetricsRow, path: &Path) -> Result<()> {
    let mut out = BufWriter::new(File::create(path)?);
    let header: Vec<&str> = std::iter::once("model")
        .chain(std::iter::once("steps"))
        .chain(row.values.iter().map(|(n, _)| n.as_str()))
        .collect();
    writeln!(out, "{}", header.join(","))?;
    let mut fields = vec![row.model.clone(), row.steps.to_string()];
    fields.extend(row.values.iter().map(|(_, v)| cell(v)));
    writeln!(out, "{}", fields.join(","))?;
    out.flush()?;
    Ok(())
}

/// Comparison table: one CSV row per model, shared column set, empty cells
/// where a model does not produce a metric.
pub fn write_table_csv(rows: &[MetricsRow], path: &Path) -> Result<()> {
    let mut out = BufWriter::new(File::create(path)?);
    let columns: Vec<String> = match rows.first() {
        Some(first) => first.values.iter().map(|(n, _)| n.clone()).collect(),
        None => Vec::new(),
    };
    writeln!(out, "model,steps,{},error", columns.join(","))?;
    for row in rows {
        let mut fields = vec![row.model.clone(), row.steps.to_string()];
        for col in &columns {
            let v = row.values.iter().find(|(n, _)| n == col).and_then(|(_, v)| *v);
            fields.push(cell(&v));
        }
        fields.push(row.error.clone().unwrap_or_default());
        writeln!(out, "{}", fields.join(","))?;
    }
    out.flush()?;
    Ok(())
}

pub fn write_confusion_csv(confusion: &[Vec<usize>], path: &Path) -> Result<()> {
    let mut out = BufWriter::new(File::create(path)?);
    for row in confusion {
        let cells: Vec<String> = row.iter().map(|c| c.to_string()).collect();
        writeln!(out, "{}", cells.join(","))?;
    }
    out.flush()?;
    Ok(())
}

pub fn write_per_class_csv(
    report: &atrpp::metrics::ClassificationReport,
    path: &Path,
) -> Result<()> {
    let mut out = BufWriter::new(File::create(path)?);
    writeln!(out, "class,precision,recall,f1,support")?;
    for c in 0..report.precision.len() {
        writeln!(
            out,
            "{c},{},{},{},{}",
            report.precision[c], report.recall[c], report.f1[c], report.support[c]
        )?;
    }
    out.flush()?;
    Ok(())
}

/// DOT digraph of an infectivity matrix. Every dimension becomes a node;
/// entries at or above `floor` become directed edges whose `weight`
/// attribute carries the strength and whose pen width scales with it.
pub fn write_dot(matrix: &Mat, floor: f64, path: &Path) -> Result<()> {
    let mut out = BufWriter::new(File::create(path)?);
    writeln!(out, "digraph infectivity {{")?;
    writeln!(out, "  rankdir=LR;")?;
    for d in 0..matrix.rows() {
        writeln!(out, "  d{d};")?;
    }
    let max = matrix.max_abs();
    for i in 0..matrix.rows() {
        for j in 0..matrix.cols() {
            let strength = matrix.get(i, j);
            if strength >= floor && strength > 0.0 {
                let width = 0.5 + 4.0 * strength / max.max(f64::MIN_POSITIVE);
                writeln!(
                    out,
                    "  d{i} -> d{j} [weight={strength}, penwidth={width:.3}];"
                )?;
            }
        }
    }
    writeln!(out, "}}")?;
    out.flush()?;
    Ok(())
}
