//! File formats for records and ground-truth parameters.
//!
//! - Events: JSONL, one record per line:
//!   `{"id": str, "Z": int, "events": [{"dim": int, "time": float}, ...]}`
//! - Series: CSV with header `id,start_time,step,f0,f1,...`, one row per
//!   sample, rows grouped by id with samples in order.
//! - Matrices/vectors: plain CSV of numbers.
//!
//! All floats are serialized in shortest round-trippable decimal form, so a
//! write-then-read cycle reproduces values bit-exactly.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::data::{Event, EventSequence, Record, TimeSeries};
use crate::linalg::Mat;
use crate::{Error, Result};

/// Supported record file formats.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Format {
    EventJsonl,
    SeriesCsv,
}

#[derive(Serialize, Deserialize)]
struct EventLine {
    id: String,
    #[serde(rename = "Z")]
    z: usize,
    events: Vec<Event>,
}

/// Writes event sequences as JSONL. Series data, if any, is not included;
/// see [`write_series_csv`].
pub fn write_events_jsonl(records: &[Record], path: &Path) -> Result<()> {
    let mut out = BufWriter::new(File::create(path)?);
    for rec in records {
        let line = EventLine {
            id: rec.id.clone(),
            z: rec.sequence.num_dims,
            events: rec.sequence.events.clone(),
        };
        let json = serde_json::to_string(&line)
            .map_err(|e| Error::Data(format!("serialize record {}: {e}", rec.id)))?;
        writeln!(out, "{json}")?;
    }
    out.flush()?;
    Ok(())
}

/// Reads event-only records from JSONL. Malformed input reports the 1-based
/// line number.
pub fn read_events_jsonl(path: &Path) -> Result<Vec<Record>> {
    let reader = BufReader::new(File::open(path)?);
    let mut records = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let parsed: EventLine = serde_json::from_str(&line).map_err(|e| Error::Parse {
            line: idx + 1,
            msg: e.to_string(),
        })?;
        for ev in &parsed.events {
            if ev.dim >= parsed.z {
                return Err(Error::Parse {
                    line: idx + 1,
                    msg: format!("dim {} out of range for Z={}", ev.dim, parsed.z),
                });
            }
        }
        records.push(Record {
            id: parsed.id,
            sequence: EventSequence::new(parsed.events, parsed.z),
            series: None,
        });
    }
    Ok(records)
}

/// Writes the series of every series-bearing record, grouped by id.
pub fn write_series_csv(records: &[Record], path: &Path) -> Result<()> {
    let width = records
        .iter()
        .find_map(|r| r.series.as_ref().map(|s| s.num_features()));
    let Some(width) = width else {
        // No series anywhere: emit just a minimal header so the file is
        // well-formed and readable back as "no series".
        let mut out = BufWriter::new(File::create(path)?);
        writeln!(out, "id,start_time,step")?;
        out.flush()?;
        return Ok(());
    };
    let mut out = BufWriter::new(File::create(path)?);
    let header: Vec<String> = (0..width).map(|i| format!("f{i}")).collect();
    writeln!(out, "id,start_time,step,{}", header.join(","))?;
    for rec in records {
        let Some(series) = &rec.series else { continue };
        if rec.id.contains(',') || rec.id.contains('\n') {
            return Err(Error::Data(format!("record id {:?} not CSV-safe", rec.id)));
        }
        for k in 0..series.num_samples() {
            let row: Vec<String> = series.samples.row(k).iter().map(|v| format!("{v}")).collect();
            writeln!(out, "{},{},{},{}", rec.id, series.start_time, series.step, row.join(","))?;
        }
    }
    out.flush()?;
    Ok(())
}

/// Reads a series CSV and returns `(id, series)` groups in file order.
pub fn read_series_csv(path: &Path) -> Result<Vec<(String, TimeSeries)>> {
    let reader = BufReader::new(File::open(path)?);
    let mut lines = reader.lines().enumerate();
    let header = match lines.next() {
        Some((_, line)) => line?,
        None => return Err(Error::Parse { line: 1, msg: "empty series file".into() }),
    };
    let cols: Vec<&str> = header.trim_end().split(',').collect();
    if cols.len() < 3 || cols[0] != "id" || cols[1] != "start_time" || cols[2] != "step" {
        return Err(Error::Parse {
            line: 1,
            msg: format!("bad series header: {header:?}"),
        });
    }
    let width = cols.len() - 3;

    struct Group {
        id: String,
        start: f64,
        step: f64,
        rows: Vec<f64>,
    }
    let mut groups: Vec<Group> = Vec::new();
    for (idx, line) in lines {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let lineno = idx + 1;
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 3 + width {
            return Err(Error::Parse {
                line: lineno,
                msg: format!("expected {} fields, got {}", 3 + width, fields.len()),
            });
        }
        let parse = |s: &str, what: &str| -> Result<f64> {
            s.parse::<f64>().map_err(|_| Error::Parse {
                line: lineno,
                msg: format!("bad {what}: {s:?}"),
            })
        };
        let start = parse(fields[1], "start_time")?;
        let step = parse(fields[2], "step")?;
        let mut row = Vec::with_capacity(width);
        for f in &fields[3..] {
            row.push(parse(f, "feature value")?);
        }
        match groups.last_mut() {
            Some(g) if g.id == fields[0] => {
                if g.start != start || g.step != step {
                    return Err(Error::Parse {
                        line: lineno,
                        msg: format!("start_time/step changed within group {}", fields[0]),
                    });
                }
                g.rows.extend(row);
            }
            _ => groups.push(Group {
                id: fields[0].to_string(),
                start,
                step,
                rows: row,
            }),
        }
    }
    Ok(groups
        .into_iter()
        .map(|g| {
            let t = g.rows.len() / width.max(1);
            (
                g.id,
                TimeSeries {
                    start_time: g.start,
                    step: g.step,
                    samples: Mat::from_vec(t, width, g.rows),
                },
            )
        })
        .collect())
}

/// Attaches series read from a CSV to records by id. Records without a
/// matching series stay event-only; series with no matching record are an
/// error.
pub fn attach_series(records: &mut [Record], series: Vec<(String, TimeSeries)>) -> Result<()> {
    for (id, s) in series {
        match records.iter_mut().find(|r| r.id == id) {
            Some(rec) => rec.series = Some(s),
            None => {
                return Err(Error::Data(format!("series for unknown record id {id:?}")));
            }
        }
    }
    Ok(())
}

/// Reads records in the given format. For `SeriesCsv` the result has empty
/// event sequences and is meant to be merged via [`attach_series`].
pub fn read_records(path: &Path, format: Format) -> Result<Vec<Record>> {
    match format {
        Format::EventJsonl => read_events_jsonl(path),
        Format::SeriesCsv => Ok(read_series_csv(path)?
            .into_iter()
            .map(|(id, series)| Record {
                id,
                sequence: EventSequence::new(Vec::new(), 0),
                series: Some(series),
            })
            .collect()),
    }
}

/// Writes records in the given format.
pub fn write_records(records: &[Record], path: &Path, format: Format) -> Result<()> {
    match format {
        Format::EventJsonl => write_events_jsonl(records, path),
        Format::SeriesCsv => write_series_csv(records, path),
    }
}

/// Loads a full dataset part: events plus (optionally) their series.
pub fn load_records(events_path: &Path, series_path: Option<&Path>) -> Result<Vec<Record>> {
    let mut records = read_events_jsonl(events_path)?;
    if let Some(sp) = series_path {
        if sp.exists() {
            let series = read_series_csv(sp)?;
            attach_series(&mut records, series)?;
        }
    }
    Ok(records)
}

pub fn write_matrix_csv(m: &Mat, path: &Path) -> Result<()> {
    let mut out = BufWriter::new(File::create(path)?);
    for r in 0..m.rows() {
        let row: Vec<String> = m.row(r).iter().map(|v| format!("{v}")).collect();
        writeln!(out, "{}", row.join(","))?;
    }
    out.flush()?;
    Ok(())
}

pub fn read_matrix_csv(path: &Path) -> Result<Mat> {
    let reader = BufReader::new(File::open(path)?);
    let mut data = Vec::new();
    let mut cols = None;
    let mut rows = 0;
    for (idx, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let vals: Vec<f64> = line
            .split(',')
            .map(|s| {
                s.trim().parse::<f64>().map_err(|_| Error::Parse {
                    line: idx + 1,
                    msg: format!("bad number: {s:?}"),
                })
            })
            .collect::<Result<_>>()?;
        match cols {
            None => cols = Some(vals.len()),
            Some(c) if c != vals.len() => {
                return Err(Error::Parse {
                    line: idx + 1,
                    msg: format!("ragged row: {} cols, expected {c}", vals.len()),
                })
            }
            _ => {}
        }
        data.extend(vals);
        rows += 1;
    }
    let cols = cols.ok_or_else(|| Error::Parse { line: 1, msg: "empty matrix file".into() })?;
    Ok(Mat::from_vec(rows, cols, data))
}

pub fn write_vector_csv(v: &[f64], path: &Path) -> Result<()> {
    let mut out = BufWriter::new(File::create(path)?);
    for x in v {
        writeln!(out, "{x}")?;
    }
    out.flush()?;
    Ok(())
}

pub fn read_vector_csv(path: &Path) -> Result<Vec<f64>> {
    let m = read_matrix_csv(path)?;
    if m.cols() != 1 {
        return Err(Error::Data(format!("expected a single-column vector, got {} cols", m.cols())));
    }
    Ok(m.data().to_vec())
}
