//! On-disk formats: row CSV, verdict CSV, raw slabs and the manifest.
//!
//! Column names are part of the public interface; bump [`CSV_SCHEMA_VERSION`]
//! when they change.

use std::collections::BTreeSet;
use std::fs;
use std::path::Path;

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::error::{LabError, Result};
use crate::exponents::{ExponentBook, HolderBranch};
use crate::grid::SpaceTimeField;
use crate::lab::{ExperimentRecord, RunStatus};

pub const CSV_SCHEMA_VERSION: u32 = 1;
pub const MANIFEST_SCHEMA_VERSION: u32 = 1;

/// Leading columns of every row file.
pub const ROW_PREFIX: [&str; 6] = ["config_hash", "experiment", "run_name", "rung", "seed", "status"];
/// Exponent columns repeated on every row.
pub const BOOK_COLUMNS: [&str; 11] = [
    "d",
    "gamma",
    "q",
    "gamma_conj",
    "q_crit_sub",
    "q_crit_super",
    "p_dual",
    "alpha_pred",
    "holder_branch",
    "r_max_monotone",
    "r_max_focusing",
];
pub const VERDICT_COLUMNS: [&str; 8] =
    ["config_hash", "experiment", "run_name", "name", "asserted", "passed", "measured", "tolerance"];

/// 17 significant digits; round-trips every finite `f64`.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

fn book_cells(book: Option<&ExponentBook>) -> Vec<String> {
    let Some(b) = book else {
        return vec![String::new(); BOOK_COLUMNS.len()];
    };
    let branch = match b.holder_branch {
        HolderBranch::Formula => "formula",
        HolderBranch::Free => "free",
        HolderBranch::None => "none",
    };
    vec![
        b.d.to_string(),
        fmt_f64(b.gamma),
        fmt_f64(b.q),
        fmt_f64(b.gamma_conj),
        fmt_f64(b.q_crit_sub),
        fmt_f64(b.q_crit_super),
        fmt_f64(b.p_dual),
        b.alpha_pred.map(fmt_f64).unwrap_or_default(),
        branch.to_string(),
        fmt_f64(b.r_max_monotone),
        fmt_f64(b.r_max_focusing),
    ]
}

fn status_name(s: RunStatus) -> &'static str {
    match s {
        RunStatus::Ok => "ok",
        RunStatus::BlowUp => "blow_up",
        RunStatus::Failed => "failed",
    }
}

/// Header of the row file: fixed columns, then row parameters, then row
/// values, each sorted. Keys that collide with an earlier column get a
/// `param_` or `value_` prefix.
pub fn row_columns(rec: &ExperimentRecord) -> (Vec<String>, Vec<String>, Vec<String>) {
    let mut taken: BTreeSet<String> = ROW_PREFIX.iter().chain(BOOK_COLUMNS.iter()).map(|s| s.to_string()).collect();
    taken.insert("message".into());
    let params: BTreeSet<&String> = rec.rows.iter().flat_map(|r| r.params.keys()).collect();
    let values: BTreeSet<&String> = rec.rows.iter().flat_map(|r| r.values.keys()).collect();
    let mut header: Vec<String> = ROW_PREFIX.iter().chain(BOOK_COLUMNS.iter()).map(|s| s.to_string()).collect();
    let mut pnames = Vec::new();
    for k in &params {
        let name = if taken.contains(*k) { format!("param_{k}") } else { (*k).clone() };
        taken.insert(name.clone());
        pnames.push((*k).clone());
        header.push(name);
    }
    let mut vnames = Vec::new();
    for k in &values {
        let name = if taken.contains(*k) { format!("value_{k}") } else { (*k).clone() };
        taken.insert(name.clone());
        vnames.push((*k).clone());
        header.push(name);
    }
    header.push("message".into());
    (header, pnames, vnames)
}

fn csv_err(e: csv::Error) -> LabError {
    LabError::Io(std::io::Error::other(e.to_string()))
}

/// One row per solve. Rows are written in record order, which never depends
/// on thread scheduling.
pub fn rows_csv(rec: &ExperimentRecord, hash: &str, run_name: &str, book: Option<&ExponentBook>) -> Result<Vec<u8>> {
    let (header, pnames, vnames) = row_columns(rec);
    let book = rec.book.as_ref().or(book);
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::CRLF).from_writer(Vec::new());
    w.write_record(&header).map_err(csv_err)?;
    let bcells = book_cells(book);
    for row in &rec.rows {
        let mut cells = vec![
            hash.to_string(),
            rec.id.clone(),
            run_name.to_string(),
            row.rung.to_string(),
            row.seed.to_string(),
            status_name(row.status).to_string(),
        ];
        cells.extend(bcells.iter().cloned());
        for k in &pnames {
            cells.push(row.params.get(k).map(|v| fmt_f64(*v)).unwrap_or_default());
        }
        for k in &vnames {
            cells.push(row.values.get(k).map(|v| fmt_f64(*v)).unwrap_or_default());
        }
        cells.push(row.message.clone());
        w.write_record(&cells).map_err(csv_err)?;
    }
    w.into_inner().map_err(|e| LabError::Io(std::io::Error::other(e.to_string())))
}

pub fn verdicts_csv(rec: &ExperimentRecord, hash: &str, run_name: &str) -> Result<Vec<u8>> {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::CRLF).from_writer(Vec::new());
    w.write_record(VERDICT_COLUMNS).map_err(csv_err)?;
    for v in &rec.verdicts {
        w.write_record([
            hash.to_string(),
            rec.id.clone(),
            run_name.to_string(),
            v.name.clone(),
            v.asserted.to_string(),
            v.passed.to_string(),
            fmt_f64(v.measured),
            fmt_f64(v.tolerance),
        ])
        .map_err(csv_err)?;
    }
    w.into_inner().map_err(|e| LabError::Io(std::io::Error::other(e.to_string())))
}

/// Sidecar describing a raw slab.
#[derive(Debug, Clone, PartialEq, Serialize, serde::Deserialize)]
pub struct SlabHeader {
    pub name: String,
    pub dtype: String,
    /// `[nt + 1, n, …, n]`, last axis fastest.
    pub shape: Vec<usize>,
    pub d: usize,
    pub n: usize,
    pub t_final: f64,
    pub config_hash: String,
}

pub fn slab_bytes(field: &SpaceTimeField) -> Vec<u8> {
    let mut out = Vec::with_capacity(8 * field.slices.len() * field.grid.points());
    for s in &field.slices {
        for v in &s.values {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    out
}

pub fn slab_header(name: &str, field: &SpaceTimeField, hash: &str) -> SlabHeader {
    let g = field.grid;
    let mut shape = vec![field.slices.len()];
    shape.extend(std::iter::repeat_n(g.n, g.d));
    SlabHeader {
        name: name.into(),
        dtype: "f64le".into(),
        shape,
        d: g.d,
        n: g.n,
        t_final: g.t_final,
        config_hash: hash.into(),
    }
}

/// Reads a slab back; the inverse of [`slab_bytes`].
pub fn read_slab(bin: &Path) -> Result<Vec<f64>> {
    let bytes = fs::read(bin)?;
    if bytes.len() % 8 != 0 {
        return Err(LabError::Config(format!("{}: length {} is not a multiple of 8", bin.display(), bytes.len())));
    }
    Ok(bytes.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes"))).collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, serde::Deserialize)]
pub struct Artifact {
    pub path: String,
    pub sha256: String,
    pub bytes: usize,
}

/// Writes `bytes` under `dir` and returns its manifest entry.
pub fn write_artifact(dir: &Path, name: &str, bytes: &[u8]) -> Result<Artifact> {
    fs::write(dir.join(name), bytes)?;
    Ok(Artifact { path: name.into(), sha256: hex::encode(Sha256::digest(bytes)), bytes: bytes.len() })
}
