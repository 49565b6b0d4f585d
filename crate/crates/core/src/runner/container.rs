//! Self-describing dataset directories.
//!
//! ```text
//! manifest.json   counts, dtype "f64le", seed, source, schema version, target names
//! inputs.f64      n_rows × n_cols, row-major, little-endian f64
//! targets.f64     n_rows × n_targets (present when target names are listed)
//! meta.csv        index plus ground-truth columns
//! ```

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ndcore::Matrix;

pub const SCHEMA_VERSION: u32 = 1;
pub const DTYPE: &str = "f64le";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ContainerManifest {
    pub schema_version: u32,
    pub n_rows: usize,
    pub n_cols: usize,
    pub dtype: String,
    pub seed: u64,
    pub source: String,
    pub target_names: Vec<String>,
}

/// Ground-truth columns kept as text, one row per dataset row.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct MetaTable {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl MetaTable {
    pub fn column(&self, name: &str) -> Option<Vec<&str>> {
        let j = self.columns.iter().position(|c| c == name)?;
        Some(self.rows.iter().map(|r| r[j].as_str()).collect())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct DatasetContainer {
    pub inputs: Matrix,
    pub targets: Option<Matrix>,
    pub target_names: Vec<String>,
    pub meta: MetaTable,
    pub seed: u64,
    pub source: String,
}

fn load_err(field: &str, message: impl Into<String>) -> Error {
    Error::Load { field: field.into(), message: message.into() }
}

fn write_f64(path: &Path, values: &[f64]) -> Result<()> {
    let mut bytes = Vec::with_capacity(8 * values.len());
    for v in values {
        bytes.extend_from_slice(&v.to_le_bytes());
    }
    fs::write(path, bytes)?;
    Ok(())
}

fn read_f64(path: &Path, rows: usize, cols: usize, field: &str) -> Result<Matrix> {
    let name = path.file_name().and_then(|n| n.to_str()).unwrap_or("data");
    let bytes = fs::read(path).map_err(|e| load_err(name, e.to_string()))?;
    let expected = rows
        .checked_mul(cols)
        .and_then(|n| n.checked_mul(8))
        .ok_or_else(|| load_err(field, "declared size overflows"))?;
    if bytes.len() != expected {
        return Err(load_err(
            field,
            format!(
                "{name} holds {} bytes but the manifest declares {rows} × {cols} values ({expected} bytes)",
                bytes.len()
            ),
        ));
    }
    let data = bytes.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().unwrap())).collect();
    Matrix::from_vec(rows, cols, data)
}

impl DatasetContainer {
    pub fn n_rows(&self) -> usize {
        self.inputs.rows()
    }

    pub fn manifest(&self) -> ContainerManifest {
        ContainerManifest {
            schema_version: SCHEMA_VERSION,
            n_rows: self.inputs.rows(),
            n_cols: self.inputs.cols(),
            dtype: DTYPE.into(),
            seed: self.seed,
            source: self.source.clone(),
            target_names: self.target_names.clone(),
        }
    }

    pub fn target_column(&self, name: &str) -> Option<Vec<f64>> {
        let j = self.target_names.iter().position(|n| n == name)?;
        let t = self.targets.as_ref()?;
        Some((0..t.rows()).map(|i| t[(i, j)]).collect())
    }

    fn validate(&self) -> Result<()> {
        let n = self.inputs.rows();
        if let Some(t) = &self.targets {
            if t.rows() != n || t.cols() != self.target_names.len() {
                return Err(Error::InvalidArgument(format!(
                    "targets are {:?} but the dataset has {n} rows and {} target names",
                    t.shape(),
                    self.target_names.len()
                )));
            }
        } else if !self.target_names.is_empty() {
            return Err(Error::InvalidArgument("target names given without targets".into()));
        }
        if self.meta.rows.len() != n || self.meta.rows.iter().any(|r| r.len() != self.meta.columns.len()) {
            return Err(Error::InvalidArgument("meta table does not match the dataset rows".into()));
        }
        Ok(())
    }

    /// Returns the relative file names written.
    pub fn save(&self, dir: &Path) -> Result<Vec<String>> {
        self.validate()?;
        fs::create_dir_all(dir)?;
        fs::write(dir.join("manifest.json"), serde_json::to_string_pretty(&self.manifest())?)?;
        write_f64(&dir.join("inputs.f64"), self.inputs.as_slice())?;
        let mut files = vec!["manifest.json".to_string(), "inputs.f64".to_string()];
        if let Some(t) = &self.targets {
            write_f64(&dir.join("targets.f64"), t.as_slice())?;
            files.push("targets.f64".into());
        }
        let mut w = csv::Writer::from_path(dir.join("meta.csv"))?;
        w.write_record(&self.meta.columns)?;
        for r in &self.meta.rows {
            w.write_record(r)?;
        }
        w.flush()?;
        files.push("meta.csv".into());
        Ok(files)
    }

    pub fn load(dir: &Path) -> Result<Self> {
        let text =
            fs::read_to_string(dir.join("manifest.json")).map_err(|e| load_err("manifest.json", e.to_string()))?;
        let m: ContainerManifest = serde_json::from_str(&text).map_err(|e| load_err("manifest.json", e.to_string()))?;
        if m.schema_version != SCHEMA_VERSION {
            return Err(load_err("schema_version", format!("unsupported version {}", m.schema_version)));
        }
        if m.dtype != DTYPE {
            return Err(load_err("dtype", format!("unsupported dtype `{}`", m.dtype)));
        }
        let inputs = read_f64(&dir.join("inputs.f64"), m.n_rows, m.n_cols, "n_rows")?;
        let targets = if m.target_names.is_empty() {
            None
        } else {
            Some(read_f64(&dir.join("targets.f64"), m.n_rows, m.target_names.len(), "target_names")?)
        };
        let mut r = csv::Reader::from_path(dir.join("meta.csv")).map_err(|e| load_err("meta.csv", e.to_string()))?;
        let columns = r.headers().map_err(|e| load_err("meta.csv", e.to_string()))?.iter().map(String::from).collect();
        let rows = r
            .records()
            .map(|rec| rec.map(|rec| rec.iter().map(String::from).collect()))
            .collect::<std::result::Result<Vec<Vec<String>>, _>>()
            .map_err(|e| load_err("meta.csv", e.to_string()))?;
        if rows.len() != m.n_rows {
            return Err(load_err(
                "n_rows",
                format!("meta.csv has {} rows, manifest declares {}", rows.len(), m.n_rows),
            ));
        }
        Ok(Self {
            inputs,
            targets,
            target_names: m.target_names,
            meta: MetaTable { columns, rows },
            seed: m.seed,
            source: m.source,
        })
    }
}
