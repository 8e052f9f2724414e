//! CSV input/output and run manifests.
//!
//! Every file is plain CSV with a header row. Numbers are written with 17
//! significant digits so that reading a file back reproduces each `f64`
//! exactly.

use std::fs::File;
use std::io::{BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::detector::{AnomalyScores, DetectorConfig, GridCell};
use crate::error::{Error, Result};
use crate::fcm::WeightVector;
use crate::series::MultiSeries;

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> Error + '_ {
    move |source| Error::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn csv_err(path: &Path, e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(source) => Error::Io {
            path: path.to_path_buf(),
            source,
        },
        other => Error::Parse {
            row: 0,
            column: 0,
            message: format!("{other:?}"),
        },
    }
}

/// Renders a float with 17 significant digits.
pub fn format_f64(x: f64) -> String {
    format!("{x:.16e}")
}

/// Reads a series: a header of variable names, then one row per timestamp.
pub fn parse_csv(path: &Path) -> Result<MultiSeries> {
    let file = File::open(path).map_err(io_err(path))?;
    parse_csv_reader(file).map_err(|e| match e {
        Error::Parse {
            row: 0,
            column: 0,
            message,
        } => Error::Parse {
            row: 0,
            column: 0,
            message: format!("{}: {message}", path.display()),
        },
        other => other,
    })
}

/// Rows and columns in errors are 1-based; the header is row 1.
pub fn parse_csv_reader<R: Read>(reader: R) -> Result<MultiSeries> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let mut records = rdr.records();
    let header = match records.next() {
        None => {
            return Err(Error::Parse {
                row: 1,
                column: 1,
                message: "empty file".into(),
            })
        }
        Some(h) => h.map_err(|e| Error::Parse {
            row: 1,
            column: 1,
            message: e.to_string(),
        })?,
    };
    let names: Vec<String> = header.iter().map(str::to_string).collect();
    if names.iter().all(String::is_empty) {
        return Err(Error::Parse {
            row: 1,
            column: 1,
            message: "missing header".into(),
        });
    }
    let mut rows = Vec::new();
    for (k, rec) in records.enumerate() {
        let row_no = k + 2;
        let rec = rec.map_err(|e| Error::Parse {
            row: row_no,
            column: 1,
            message: e.to_string(),
        })?;
        if rec.len() != names.len() {
            return Err(Error::Parse {
                row: row_no,
                column: rec.len().min(names.len()) + 1,
                message: format!("expected {} fields, found {}", names.len(), rec.len()),
            });
        }
        let row = rec
            .iter()
            .enumerate()
            .map(|(c, cell)| {
                cell.parse::<f64>()
                    .ok()
                    .filter(|x| x.is_finite())
                    .ok_or_else(|| Error::Parse {
                        row: row_no,
                        column: c + 1,
                        message: format!("not a finite number: {cell:?}"),
                    })
            })
            .collect::<Result<Vec<f64>>>()?;
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(Error::Parse {
            row: 2,
            column: 1,
            message: "no data rows".into(),
        });
    }
    MultiSeries::from_rows(names, &rows)
}

fn write_table<I>(path: &Path, header: &[&str], rows: I) -> Result<()>
where
    I: IntoIterator<Item = Vec<String>>,
{
    let file = File::create(path).map_err(io_err(path))?;
    let mut wtr = csv::Writer::from_writer(BufWriter::new(file));
    wtr.write_record(header).map_err(|e| csv_err(path, e))?;
    for row in rows {
        wtr.write_record(&row).map_err(|e| csv_err(path, e))?;
    }
    wtr.flush().map_err(io_err(path))?;
    Ok(())
}

/// Writes a series in the form [`parse_csv`] reads.
pub fn write_series(series: &MultiSeries, path: &Path) -> Result<()> {
    let header: Vec<&str> = series.names().iter().map(String::as_str).collect();
    write_table(
        path,
        &header,
        series
            .rows()
            .map(|r| r.iter().map(|&x| format_f64(x)).collect()),
    )
}

/// `t,point_score`
pub fn write_point_scores(scores: &AnomalyScores, path: &Path) -> Result<()> {
    write_table(
        path,
        &["t", "point_score"],
        scores
            .per_point
            .iter()
            .enumerate()
            .map(|(t, &s)| vec![t.to_string(), format_f64(s)]),
    )
}

/// `start_index,score`
pub fn write_subsequence_scores(scores: &AnomalyScores, path: &Path) -> Result<()> {
    write_indexed_scores(&scores.starts, &scores.per_subsequence, path)
}

pub fn write_indexed_scores(starts: &[usize], scores: &[f64], path: &Path) -> Result<()> {
    write_table(
        path,
        &["start_index", "score"],
        starts
            .iter()
            .zip(scores)
            .map(|(s, &x)| vec![s.to_string(), format_f64(x)]),
    )
}

/// `t,label` with labels 0/1.
pub fn write_labels(labels: &[bool], path: &Path) -> Result<()> {
    write_table(
        path,
        &["t", "label"],
        labels
            .iter()
            .enumerate()
            .map(|(t, &l)| vec![t.to_string(), u8::from(l).to_string()]),
    )
}

/// `clusters,window,confidence_index`
pub fn write_grid(grid: &[GridCell], path: &Path) -> Result<()> {
    write_table(
        path,
        &["clusters", "window", "confidence_index"],
        grid.iter().map(|c| {
            vec![
                c.clusters.to_string(),
                c.window.to_string(),
                format_f64(c.confidence_index),
            ]
        }),
    )
}

/// Reads a two-column `index,value` table, checking the header and that
/// indices are consecutive from 0 when `consecutive` is set.
fn read_pairs(path: &Path, header: [&str; 2], consecutive: bool) -> Result<Vec<(usize, String)>> {
    let file = File::open(path).map_err(io_err(path))?;
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(file);
    let found = rdr.headers().map_err(|e| csv_err(path, e))?.clone();
    if found.iter().collect::<Vec<_>>() != header {
        return Err(Error::Parse {
            row: 1,
            column: 1,
            message: format!("expected header {}, found {:?}", header.join(","), found),
        });
    }
    let mut out = Vec::new();
    for (k, rec) in rdr.records().enumerate() {
        let row = k + 2;
        let rec = rec.map_err(|e| Error::Parse {
            row,
            column: 1,
            message: e.to_string(),
        })?;
        if rec.len() != 2 {
            return Err(Error::Parse {
                row,
                column: rec.len().min(2) + 1,
                message: format!("expected 2 fields, found {}", rec.len()),
            });
        }
        let idx: usize = rec[0].parse().map_err(|_| Error::Parse {
            row,
            column: 1,
            message: format!("not an index: {:?}", &rec[0]),
        })?;
        if consecutive && idx != k {
            return Err(Error::Parse {
                row,
                column: 1,
                message: format!("expected index {k}, found {idx}"),
            });
        }
        out.push((idx, rec[1].to_string()));
    }
    Ok(out)
}

fn parse_value(cell: &str, row: usize) -> Result<f64> {
    cell.parse::<f64>().map_err(|_| Error::Parse {
        row,
        column: 2,
        message: format!("not a number: {cell:?}"),
    })
}

pub fn read_point_scores(path: &Path) -> Result<Vec<f64>> {
    read_pairs(path, ["t", "point_score"], true)?
        .into_iter()
        .enumerate()
        .map(|(k, (_, v))| parse_value(&v, k + 2))
        .collect()
}

pub fn read_subsequence_scores(path: &Path) -> Result<(Vec<usize>, Vec<f64>)> {
    let pairs = read_pairs(path, ["start_index", "score"], false)?;
    let mut starts = Vec::with_capacity(pairs.len());
    let mut scores = Vec::with_capacity(pairs.len());
    for (k, (s, v)) in pairs.into_iter().enumerate() {
        starts.push(s);
        scores.push(parse_value(&v, k + 2)?);
    }
    Ok((starts, scores))
}

pub fn read_labels(path: &Path) -> Result<Vec<bool>> {
    read_pairs(path, ["t", "label"], true)?
        .into_iter()
        .enumerate()
        .map(|(k, (_, v))| match v.as_str() {
            "0" => Ok(false),
            "1" => Ok(true),
            other => Err(Error::Parse {
                row: k + 2,
                column: 2,
                message: format!("label must be 0 or 1, found {other:?}"),
            }),
        })
        .collect()
}

/// SHA-256 of a file's bytes, hex encoded.
pub fn file_digest(path: &Path) -> Result<String> {
    let bytes = std::fs::read(path).map_err(io_err(path))?;
    Ok(hex::encode(Sha256::digest(&bytes)))
}

/// Everything needed to reproduce a run, written next to its outputs.
#[derive(Debug, Clone, Serialize)]
pub struct RunManifest {
    pub toolkit_version: String,
    pub command: String,
    pub input: PathBuf,
    pub input_sha256: String,
    pub config: DetectorConfig,
    pub weights_used: Option<WeightVector>,
    pub outputs: Vec<PathBuf>,
    pub duration_seconds: f64,
}

impl RunManifest {
    pub fn write(&self, path: &Path) -> Result<()> {
        let file = File::create(path).map_err(io_err(path))?;
        let mut w = BufWriter::new(file);
        serde_json::to_writer_pretty(&mut w, self).map_err(|e| Error::Io {
            path: path.to_path_buf(),
            source: e.into(),
        })?;
        writeln!(w).map_err(io_err(path))?;
        w.flush().map_err(io_err(path))
    }
}
