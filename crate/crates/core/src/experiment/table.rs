//! Result tables, CSV emission and run manifests.
//!
//! Numbers are written with 17 significant digits in scientific notation,
//! which round-trips every f64 exactly. Non-finite cells are spelled `NaN`,
//! `inf` and `-inf`. The last column, `reason`, explains NaN rows.

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

pub const REASON_COLUMN: &str = "reason";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub experiment: String,
    /// SHA-256 of the canonical config JSON, hex.
    pub config_hash: String,
    pub code_version: String,
    pub seed: u64,
    pub rows: usize,
    pub columns: Vec<String>,
    pub wall_time_seconds: f64,
    pub config: serde_json::Value,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ResultTable {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<f64>>,
    /// One entry per row; empty when the row is fully evaluated.
    pub reasons: Vec<String>,
}

#[derive(Debug, thiserror::Error)]
pub enum TableError {
    #[error("row {row} has {got} cells, expected {expected}")]
    Ragged { row: usize, got: usize, expected: usize },
    #[error("bad number {text:?} at row {row}, column {column}")]
    BadNumber { row: usize, column: usize, text: String },
    #[error("missing `{REASON_COLUMN}` column")]
    MissingReason,
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub fn config_hash(canonical_json: &str) -> String {
    Sha256::digest(canonical_json.as_bytes()).iter().map(|b| format!("{b:02x}")).collect()
}

/// Every NaN is stored as the canonical quiet NaN so bitwise comparisons and
/// re-ingest agree.
fn canonical(x: f64) -> f64 {
    if x.is_nan() {
        f64::NAN
    } else {
        x
    }
}

pub fn format_number(x: f64) -> String {
    if x.is_nan() {
        "NaN".into()
    } else if x.is_infinite() {
        if x > 0.0 { "inf".into() } else { "-inf".into() }
    } else {
        format!("{x:.16e}")
    }
}

impl ResultTable {
    pub fn new(columns: Vec<String>) -> Self {
        Self { columns, rows: Vec::new(), reasons: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<f64>, reason: impl Into<String>) -> Result<(), TableError> {
        if row.len() != self.columns.len() {
            return Err(TableError::Ragged { row: self.rows.len(), got: row.len(), expected: self.columns.len() });
        }
        self.rows.push(row.into_iter().map(canonical).collect());
        self.reasons.push(reason.into());
        Ok(())
    }

    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let i = self.columns.iter().position(|c| c == name)?;
        Some(self.rows.iter().map(|r| r[i]).collect())
    }

    pub fn to_csv_bytes(&self) -> Result<Vec<u8>, TableError> {
        let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
        w.write_record(self.columns.iter().map(String::as_str).chain([REASON_COLUMN]))?;
        for (row, reason) in self.rows.iter().zip(&self.reasons) {
            w.write_record(row.iter().map(|&x| format_number(x)).chain([reason.clone()]))?;
        }
        w.into_inner().map_err(|e| TableError::Io(e.into_error()))
    }

    pub fn from_csv_bytes(bytes: &[u8]) -> Result<Self, TableError> {
        let mut r = csv::ReaderBuilder::new().has_headers(true).from_reader(bytes);
        let mut header: Vec<String> = r.headers()?.iter().map(str::to_string).collect();
        if header.pop().as_deref() != Some(REASON_COLUMN) {
            return Err(TableError::MissingReason);
        }
        let mut table = Self::new(header);
        for (i, record) in r.records().enumerate() {
            let record = record?;
            let n = table.columns.len();
            if record.len() != n + 1 {
                return Err(TableError::Ragged { row: i, got: record.len(), expected: n + 1 });
            }
            let row = record
                .iter()
                .take(n)
                .enumerate()
                .map(|(j, text)| {
                    text.parse::<f64>().map_err(|_| TableError::BadNumber { row: i, column: j, text: text.into() })
                })
                .collect::<Result<Vec<_>, _>>()?;
            table.push(row, &record[n])?;
        }
        Ok(table)
    }
}

/// Writes `<dir>/<stem>-<hash12>.csv` and its `.manifest.json` sibling,
/// returning the CSV path.
pub fn emit_csv(table: &ResultTable, manifest: &RunManifest, dir: &Path, stem: &str) -> Result<PathBuf, TableError> {
    fs::create_dir_all(dir)?;
    let base = format!("{stem}-{}", &manifest.config_hash[..12]);
    let csv_path = dir.join(format!("{base}.csv"));
    fs::File::create(&csv_path)?.write_all(&table.to_csv_bytes()?)?;
    let mut json = serde_json::to_vec_pretty(manifest)?;
    json.push(b'\n');
    fs::write(dir.join(format!("{base}.manifest.json")), json)?;
    Ok(csv_path)
}

pub fn read_csv(path: &Path) -> Result<ResultTable, TableError> {
    ResultTable::from_csv_bytes(&fs::read(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn cols(names: &[&str]) -> Vec<String> {
        names.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn empty_table_is_header_only() {
        let t = ResultTable::new(cols(&["a", "b"]));
        assert_eq!(t.to_csv_bytes().unwrap(), b"a,b,reason\n");
        assert_eq!(ResultTable::from_csv_bytes(b"a,b,reason\n").unwrap(), t);
    }

    #[test]
    fn nan_cells_are_literal() {
        let mut t = ResultTable::new(cols(&["x"]));
        t.push(vec![-f64::NAN], "strategy infeasible: cos2 > 1").unwrap();
        t.push(vec![0.1], "").unwrap();
        let text = String::from_utf8(t.to_csv_bytes().unwrap()).unwrap();
        assert_eq!(text, "x,reason\nNaN,strategy infeasible: cos2 > 1\n1.0000000000000001e-1,\n");
        assert!(!text.contains('\r'));
    }

    #[test]
    fn ragged_rows_rejected() {
        let mut t = ResultTable::new(cols(&["a", "b"]));
        assert!(matches!(t.push(vec![1.0], ""), Err(TableError::Ragged { .. })));
    }

    #[test]
    fn hash_is_sha256_hex() {
        assert_eq!(config_hash("abc"), "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
    }

    #[test]
    fn files_carry_the_hash() {
        let dir = tempfile::tempdir().unwrap();
        let mut t = ResultTable::new(cols(&["a"]));
        t.push(vec![1.0], "").unwrap();
        let manifest = RunManifest {
            experiment: "x".into(),
            config_hash: config_hash("{}"),
            code_version: "0".into(),
            seed: 0,
            rows: 1,
            columns: t.columns.clone(),
            wall_time_seconds: 0.0,
            config: serde_json::json!({}),
        };
        let path = emit_csv(&t, &manifest, dir.path(), "x").unwrap();
        assert!(path.file_name().unwrap().to_str().unwrap().starts_with(&format!("x-{}", &manifest.config_hash[..12])));
        assert_eq!(read_csv(&path).unwrap(), t);
        let sidecar = path.with_extension("manifest.json");
        let back: RunManifest = serde_json::from_slice(&fs::read(sidecar).unwrap()).unwrap();
        assert_eq!(back, manifest);
    }

    proptest! {
        #[test]
        fn csv_round_trip_is_bitwise(rows in prop::collection::vec(prop::collection::vec(any::<f64>(), 3), 0..20)) {
            let mut t = ResultTable::new(cols(&["a", "b", "c"]));
            for r in rows {
                t.push(r, "why, \"quoted\"").unwrap();
            }
            let back = ResultTable::from_csv_bytes(&t.to_csv_bytes().unwrap()).unwrap();
            let bits = |t: &ResultTable| t.rows.iter().flatten().map(|x| x.to_bits()).collect::<Vec<_>>();
            prop_assert_eq!(bits(&back), bits(&t));
            prop_assert_eq!(back.reasons, t.reasons);
        }
    }
}
