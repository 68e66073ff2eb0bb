//! CSV files written by a run: fold results, validity, baselines and
//! dataset shapes.
//!
//! Floats are written in Rust's shortest round-trip form, so reading a
//! results file reproduces the exact `f64` values that were written.

use std::io::{Read, Write};
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::Serialize;

use super::summary::ValiditySummary;
use super::{BaselineRecord, DatasetInfo, FoldResult, NcfId};
use crate::error::{Error, Result};
use crate::metrics::MetricRecord;

pub const RESULTS_HEADER: [&str; 12] = [
    "dataset",
    "classifier",
    "ncf",
    "epsilon",
    "repeat",
    "fold",
    "n_test",
    "err",
    "oneC",
    "avgC",
    "e_oneC",
    "n_singletons",
];

fn csv_error(e: csv::Error) -> Error {
    let line = e.position().map_or(0, |p| p.line() as usize);
    Error::MalformedResults {
        line,
        message: e.to_string(),
    }
}

fn io_error(path: &Path) -> impl FnOnce(std::io::Error) -> Error + '_ {
    move |source| Error::Io {
        path: path.to_path_buf(),
        source,
    }
}

/// One row per fold result; `e_oneC` is empty when undefined.
pub fn write_results<W: Write>(writer: W, results: &[FoldResult]) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(RESULTS_HEADER).map_err(csv_error)?;
    for r in results {
        let m = &r.metrics;
        w.write_record([
            r.dataset.clone(),
            r.classifier.clone(),
            r.ncf.to_string(),
            r.epsilon.to_string(),
            r.repeat.to_string(),
            r.fold.to_string(),
            r.n_test.to_string(),
            m.err.to_string(),
            m.one_c.to_string(),
            m.avg_c.to_string(),
            m.e_one_c.map(|e| e.to_string()).unwrap_or_default(),
            m.n_singletons.to_string(),
        ])
        .map_err(csv_error)?;
    }
    w.flush().map_err(|e| Error::MalformedResults {
        line: 0,
        message: e.to_string(),
    })
}

/// Parses a results file, reporting the line of the first malformed row.
pub fn read_results<R: Read>(reader: R) -> Result<Vec<FoldResult>> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(reader);
    let header = rdr.headers().map_err(csv_error)?.clone();
    if header.iter().ne(RESULTS_HEADER.iter().copied()) {
        return Err(Error::MalformedResults {
            line: 1,
            message: format!("unexpected header, expected {}", RESULTS_HEADER.join(",")),
        });
    }
    let mut out = Vec::new();
    for record in rdr.records() {
        let record = record.map_err(csv_error)?;
        let line = record.position().map_or(0, |p| p.line() as usize);
        let bad = |field: &str, value: &str| Error::MalformedResults {
            line,
            message: format!("invalid {field} '{value}'"),
        };
        let get = |i: usize| record.get(i).unwrap_or_default();
        let float = |i: usize| get(i).parse::<f64>().map_err(|_| bad(RESULTS_HEADER[i], get(i)));
        let int = |i: usize| get(i).parse::<usize>().map_err(|_| bad(RESULTS_HEADER[i], get(i)));
        let e_one_c = match get(10) {
            "" => None,
            _ => Some(float(10)?),
        };
        out.push(FoldResult {
            dataset: get(0).to_string(),
            classifier: get(1).to_string(),
            ncf: get(2).parse::<NcfId>().map_err(|_| bad("ncf", get(2)))?,
            epsilon: float(3)?,
            repeat: int(4)?,
            fold: int(5)?,
            n_test: int(6)?,
            metrics: MetricRecord {
                err: float(7)?,
                one_c: float(8)?,
                avg_c: float(9)?,
                e_one_c,
                n_singletons: int(11)?,
            },
        });
    }
    Ok(out)
}

/// Raw (unrounded) validity table.
pub fn write_validity<W: Write>(writer: W, summary: &ValiditySummary) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["dataset", "ncf", "epsilon", "mean_err"]).map_err(csv_error)?;
    for r in &summary.rows {
        w.write_record([
            r.dataset.clone(),
            r.ncf.to_string(),
            r.epsilon.to_string(),
            r.mean_err.to_string(),
        ])
        .map_err(csv_error)?;
    }
    w.flush().map_err(|e| Error::MalformedResults {
        line: 0,
        message: e.to_string(),
    })
}

fn write_rows<W: Write, T: Serialize>(writer: W, rows: &[T]) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    for r in rows {
        w.serialize(r).map_err(csv_error)?;
    }
    w.flush().map_err(|e| Error::MalformedResults {
        line: 0,
        message: e.to_string(),
    })
}

fn read_rows<T: DeserializeOwned>(path: &Path) -> Result<Vec<T>> {
    let file = std::fs::File::open(path).map_err(io_error(path))?;
    csv::Reader::from_reader(file)
        .deserialize()
        .collect::<std::result::Result<Vec<T>, _>>()
        .map_err(csv_error)
}

pub fn write_baselines<W: Write>(writer: W, rows: &[BaselineRecord]) -> Result<()> {
    write_rows(writer, rows)
}

pub fn read_baselines(path: &Path) -> Result<Vec<BaselineRecord>> {
    read_rows(path)
}

pub fn write_dataset_infos<W: Write>(writer: W, rows: &[DatasetInfo]) -> Result<()> {
    write_rows(writer, rows)
}

pub fn read_dataset_infos(path: &Path) -> Result<Vec<DatasetInfo>> {
    read_rows(path)
}
