//! JSON system files and CSV output.
//!
//! System files look like `{"schema": 1, "family": "smib", "params": {...}}`
//! with matrices as row-major nested arrays.

use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize, Serializer};
use serde_json::{Map, Value};

use crate::numerics::{matrix_from_rows, matrix_to_rows, Matrix, Vector};
use crate::systems::{catalog_build, System};
use crate::{Error, Result};

pub const SCHEMA_VERSION: u32 = 1;

pub fn ser_matrix<S: Serializer>(m: &Matrix, s: S) -> std::result::Result<S::Ok, S::Error> {
    matrix_to_rows(m).serialize(s)
}

pub fn ser_vector<S: Serializer>(v: &Vector, s: S) -> std::result::Result<S::Ok, S::Error> {
    v.as_slice().serialize(s)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemFile {
    pub schema: u32,
    pub family: String,
    #[serde(default)]
    pub params: Map<String, Value>,
}

impl SystemFile {
    pub fn build(&self) -> Result<System> {
        if self.schema != SCHEMA_VERSION {
            return Err(Error::InvalidParam {
                key: "schema".into(),
                reason: format!(
                    "unsupported schema {}, expected {SCHEMA_VERSION}",
                    self.schema
                ),
            });
        }
        catalog_build(&self.family, &self.params)
    }
}

pub fn parse_system(json: &str) -> Result<System> {
    let file: SystemFile = serde_json::from_str(json)?;
    file.build()
}

pub fn load_system(path: &Path) -> Result<System> {
    parse_system(&std::fs::read_to_string(path)?)
}

/// Nested-array JSON matrix.
pub fn matrix_from_value(key: &str, v: &Value) -> Result<Matrix> {
    let rows: Vec<Vec<f64>> =
        serde_json::from_value(v.clone()).map_err(|e| Error::InvalidParam {
            key: key.into(),
            reason: e.to_string(),
        })?;
    Ok(matrix_from_rows(&rows)?)
}

/// Write a CSV file with a header row.
pub fn write_csv(path: &Path, header: &[String], rows: &[Vec<f64>]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(header)?;
    for row in rows {
        w.write_record(row.iter().map(|v| format_float(*v)))?;
    }
    w.flush()?;
    Ok(())
}

/// Same as [`write_csv`] but into any writer.
pub fn write_csv_to<W: Write>(out: W, header: &[String], rows: &[Vec<f64>]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(header)?;
    for row in rows {
        w.write_record(row.iter().map(|v| format_float(*v)))?;
    }
    w.flush()?;
    Ok(())
}

// shortest representation that round-trips
fn format_float(v: f64) -> String {
    format!("{v:?}")
}

/// Column names `prefix_1 .. prefix_n`.
pub fn indexed(prefix: &str, n: usize) -> Vec<String> {
    (1..=n).map(|i| format!("{prefix}_{i}")).collect()
}
