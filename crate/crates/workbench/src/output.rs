//! Artifact encoding. Every file opens with a provenance header; CSV numbers
//! carry 17 significant digits so they parse back to the same double.

use std::path::Path;

use anyhow::{Context, Result};
use serde::Serialize;

use reconcile_core::delphi::write_atomic;

pub const TOOL: &str = "reconcile";
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Header {
    pub tool: String,
    pub version: String,
    pub seed: u64,
    pub config_sha256: String,
}

impl Header {
    pub fn new(seed: u64, config_sha256: String) -> Self {
        Self {
            tool: TOOL.to_string(),
            version: VERSION.to_string(),
            seed,
            config_sha256,
        }
    }

    fn comment_lines(&self) -> String {
        format!(
            "# tool: {} {}\n# seed: {}\n# config-sha256: {}\n",
            self.tool, self.version, self.seed, self.config_sha256
        )
    }
}

/// `x` with 17 significant digits.
pub fn num(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else {
        format!("{x}")
    }
}

/// Rows of string cells under a fixed column list.
pub struct Table {
    columns: Vec<&'static str>,
    rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(columns: &[&'static str]) -> Self {
        Self {
            columns: columns.to_vec(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn to_csv(&self, header: &Header) -> Result<Vec<u8>> {
        let mut out = header.comment_lines().into_bytes();
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(&self.columns)?;
        for r in &self.rows {
            w.write_record(r)?;
        }
        out.extend(w.into_inner().context("csv buffer")?);
        Ok(out)
    }
}

#[derive(Serialize)]
struct WithHeader<'a, T: Serialize> {
    header: &'a Header,
    #[serde(flatten)]
    body: &'a T,
}

pub fn to_json<T: Serialize>(header: &Header, body: &T) -> Result<Vec<u8>> {
    let mut bytes = serde_json::to_vec_pretty(&WithHeader { header, body })?;
    bytes.push(b'\n');
    Ok(bytes)
}

pub fn write(dir: &Path, name: &str, bytes: &[u8]) -> Result<()> {
    std::fs::create_dir_all(dir).with_context(|| format!("cannot create {}", dir.display()))?;
    let path = dir.join(name);
    write_atomic(&path, bytes, true).with_context(|| format!("cannot write {}", path.display()))
}

/// Reader that skips the `#` header block.
pub fn csv_reader<R: std::io::Read>(r: R) -> csv::Reader<R> {
    csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_reader(r)
}
