//! Flat-file outputs. Every table is written in a fixed row order so that
//! identical inputs give byte-identical files.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::Serialize;

use super::experiment::{ExperimentRecord, SampleComplexityRow, ZeroErrorRow};
use crate::cotinfo::csv_error;
use crate::error::Result;

fn create(dir: &Path, name: &str) -> Result<(PathBuf, BufWriter<File>)> {
    fs::create_dir_all(dir)?;
    let path = dir.join(name);
    let f = File::create(&path)?;
    Ok((path, BufWriter::new(f)))
}

/// Writes serializable rows with a header line.
pub fn write_rows<T: Serialize>(dir: &Path, name: &str, rows: &[T]) -> Result<PathBuf> {
    let (path, w) = create(dir, name)?;
    let mut wr = csv::Writer::from_writer(w);
    for r in rows {
        wr.serialize(r).map_err(csv_error)?;
    }
    wr.flush()?;
    Ok(path)
}

#[derive(Serialize)]
struct LearningRow<'a> {
    rule: &'a str,
    m: u64,
    trial: u64,
    risk: f64,
    set_size: u64,
}

/// `learning.csv`: `rule,m,trial,risk,set_size`.
pub fn write_learning(dir: &Path, records: &[ExperimentRecord]) -> Result<PathBuf> {
    let rows: Vec<LearningRow> = records
        .iter()
        .map(|r| LearningRow {
            rule: &r.rule,
            m: r.m,
            trial: r.trial,
            risk: r.risk,
            set_size: r.set_size,
        })
        .collect();
    write_rows(dir, "learning.csv", &rows)
}

#[derive(Serialize)]
struct ComplexityRow<'a> {
    rule: &'a str,
    epsilon: f64,
    m_required: String,
}

/// `sample_complexity.csv`: `rule,epsilon,m_required`, with "not reached"
/// where the grid never attains `ε`.
pub fn write_sample_complexity(dir: &Path, rows: &[SampleComplexityRow]) -> Result<PathBuf> {
    let rows: Vec<ComplexityRow> = rows
        .iter()
        .map(|r| ComplexityRow {
            rule: &r.rule,
            epsilon: r.epsilon,
            m_required: r
                .m_required
                .map_or_else(|| "not reached".to_string(), |m| m.to_string()),
        })
        .collect();
    write_rows(dir, "sample_complexity.csv", &rows)
}

pub fn write_zero_error(dir: &Path, rows: &[ZeroErrorRow]) -> Result<PathBuf> {
    write_rows(dir, "zero_error.csv", rows)
}

/// Pretty JSON with a trailing newline.
pub fn write_json<T: Serialize>(dir: &Path, name: &str, value: &T) -> Result<PathBuf> {
    let (path, mut w) = create(dir, name)?;
    serde_json::to_writer_pretty(&mut w, value)?;
    w.write_all(b"\n")?;
    w.flush()?;
    Ok(path)
}

/// Runs `f` with a writer on `dir/name`.
pub fn with_file(dir: &Path, name: &str, f: impl FnOnce(&mut BufWriter<File>) -> Result<()>) -> Result<PathBuf> {
    let (path, mut w) = create(dir, name)?;
    f(&mut w)?;
    w.flush()?;
    Ok(path)
}
