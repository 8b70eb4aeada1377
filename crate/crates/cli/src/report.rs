use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::Serialize;
use serde_json::Value;

pub const SCHEMA_VERSION: u32 = 1;

/// Provenance shared by every report of one run.
#[derive(Debug, Clone, Serialize)]
pub struct Provenance {
    pub tool_version: &'static str,
    pub config_hash: String,
    /// SHA-256 of each input, keyed by role (`events`, `museum`, …).
    pub input_hashes: BTreeMap<String, String>,
}

#[derive(Serialize)]
struct Envelope<'a, B> {
    schema: String,
    schema_version: u32,
    #[serde(flatten)]
    provenance: &'a Provenance,
    #[serde(flatten)]
    body: &'a B,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

/// A plot-ready table.
pub struct Table {
    pub header: Vec<&'static str>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(header: &[&'static str]) -> Table {
        Table {
            header: header.to_vec(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }
}

pub fn num(x: f64) -> String {
    x.to_string()
}

pub fn opt(x: Option<f64>) -> String {
    x.map(num).unwrap_or_default()
}

pub struct Writer {
    pub outdir: PathBuf,
    pub format: Format,
    pub provenance: Provenance,
    written: Vec<PathBuf>,
}

impl Writer {
    pub fn new(outdir: PathBuf, format: Format, provenance: Provenance) -> Result<Writer> {
        std::fs::create_dir_all(&outdir)
            .with_context(|| format!("cannot create output directory {}", outdir.display()))?;
        Ok(Writer {
            outdir,
            format,
            provenance,
            written: Vec::new(),
        })
    }

    pub fn written(&self) -> &[PathBuf] {
        &self.written
    }

    /// Writes `<stage>.json`, or `<stage>.csv` as flattened key/value rows.
    pub fn report<B: Serialize>(&mut self, stage: &str, body: &B) -> Result<()> {
        let env = Envelope {
            schema: format!("galleryflow.{stage}"),
            schema_version: SCHEMA_VERSION,
            provenance: &self.provenance,
            body,
        };
        match self.format {
            Format::Json => {
                let mut text = serde_json::to_string_pretty(&env)?;
                text.push('\n');
                self.write_bytes(&format!("{stage}.json"), text.as_bytes())
            }
            Format::Csv => {
                let value = serde_json::to_value(&env)?;
                let mut t = Table::new(&["key", "value"]);
                flatten("", &value, &mut t);
                self.table(&format!("{stage}.csv"), &t)
            }
        }
    }

    pub fn table(&mut self, name: &str, t: &Table) -> Result<()> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(&t.header)?;
        for r in &t.rows {
            w.write_record(r)?;
        }
        let bytes = w.into_inner().context("csv buffer")?;
        self.write_bytes(name, &bytes)
    }

    pub fn write_bytes(&mut self, name: &str, bytes: &[u8]) -> Result<()> {
        let path = self.outdir.join(name);
        std::fs::write(&path, bytes).with_context(|| format!("cannot write {}", path.display()))?;
        self.written.push(path);
        Ok(())
    }
}

fn flatten(prefix: &str, v: &Value, out: &mut Table) {
    let key = |k: &str| {
        if prefix.is_empty() {
            k.to_string()
        } else {
            format!("{prefix}.{k}")
        }
    };
    match v {
        Value::Object(m) => m.iter().for_each(|(k, v)| flatten(&key(k), v, out)),
        Value::Array(a) => a
            .iter()
            .enumerate()
            .for_each(|(i, v)| flatten(&key(&i.to_string()), v, out)),
        Value::Null => out.push(vec![prefix.to_string(), String::new()]),
        Value::String(s) => out.push(vec![prefix.to_string(), s.clone()]),
        other => out.push(vec![prefix.to_string(), other.to_string()]),
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    use sha2::{Digest, Sha256};
    hex::encode(Sha256::digest(bytes))
}

pub fn read_input(role: &str, path: &Path) -> Result<Vec<u8>> {
    std::fs::read(path).with_context(|| format!("cannot read {role} file {}", path.display()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flatten_uses_dotted_paths() {
        let v: Value = serde_json::json!({"a": {"b": [1, null]}, "c": "x"});
        let mut t = Table::new(&["key", "value"]);
        flatten("", &v, &mut t);
        let keys: Vec<_> = t.rows.iter().map(|r| (r[0].as_str(), r[1].as_str())).collect();
        assert_eq!(keys, vec![("a.b.0", "1"), ("a.b.1", ""), ("c", "x")]);
    }
}
