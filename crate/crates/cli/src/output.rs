use std::collections::BTreeMap;
use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use chrono::{SecondsFormat, Utc};
use serde::{Deserialize, Serialize};
use serde_json::Value;
use sha2::{Digest, Sha256};

/// Everything needed to rerun a command: passing a result file back via
/// `--config` replays it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool: String,
    pub version: String,
    pub command: String,
    pub parameters: Value,
    pub seeds: Vec<u64>,
    pub threads: Option<usize>,
    pub started_at: String,
    pub finished_at: Option<String>,
    /// SHA-256 of every input file, keyed by the path as given.
    pub input_digests: BTreeMap<String, String>,
}

pub struct Ctx {
    pub manifest: RunManifest,
    out: Option<PathBuf>,
    csv: Option<PathBuf>,
}

fn now() -> String {
    Utc::now().to_rfc3339_opts(SecondsFormat::Millis, true)
}

impl Ctx {
    pub fn new(out: Option<PathBuf>, csv: Option<PathBuf>, threads: Option<usize>) -> Self {
        Self {
            manifest: RunManifest {
                tool: "qshearer".into(),
                version: env!("CARGO_PKG_VERSION").into(),
                command: String::new(),
                parameters: Value::Null,
                seeds: Vec::new(),
                threads,
                started_at: now(),
                finished_at: None,
                input_digests: BTreeMap::new(),
            },
            out,
            csv,
        }
    }

    pub fn start(&mut self, command: &str, params: &impl Serialize) -> Result<()> {
        self.manifest.command = command.into();
        self.manifest.parameters = serde_json::to_value(params)?;
        Ok(())
    }

    /// Reads an input file and records its digest.
    pub fn read_input(&mut self, path: &Path) -> Result<String> {
        let bytes = std::fs::read(path).with_context(|| format!("reading {}", path.display()))?;
        let digest = hex::encode(Sha256::digest(&bytes));
        self.manifest
            .input_digests
            .insert(path.to_string_lossy().into_owned(), digest);
        String::from_utf8(bytes).with_context(|| format!("{} is not UTF-8", path.display()))
    }

    fn finished(&mut self) -> &RunManifest {
        self.manifest.finished_at = Some(now());
        &self.manifest
    }

    /// `{"manifest": ..., "result": ...}` to `--out` or stdout.
    pub fn emit_json(&mut self, result: &impl Serialize) -> Result<()> {
        let out = self.out.clone();
        let doc = serde_json::json!({ "manifest": self.finished(), "result": result });
        write_text(out.as_deref(), &(serde_json::to_string_pretty(&doc)? + "\n"))
    }

    /// JSON only when `--out` was given.
    pub fn emit_json_if_requested(&mut self, result: &impl Serialize) -> Result<()> {
        if self.out.is_some() {
            self.emit_json(result)?;
        }
        Ok(())
    }

    pub fn write_file_with_manifest(&mut self, path: &Path, body: Value) -> Result<()> {
        let mut doc = serde_json::json!({ "manifest": self.finished() });
        if let (Value::Object(d), Value::Object(b)) = (&mut doc, body) {
            d.extend(b);
        }
        write_text(Some(path), &(serde_json::to_string_pretty(&doc)? + "\n"))
    }

    /// CSV to `--csv` or stdout, preceded by a `# manifest: {...}` line.
    pub fn emit_csv(&mut self, table: &Table) -> Result<()> {
        let path = self.csv.clone();
        let manifest = serde_json::to_string(self.finished())?;
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(&table.header)?;
        for row in &table.rows {
            w.write_record(row)?;
        }
        let body = String::from_utf8(w.into_inner().context("flushing CSV")?)?;
        write_text(path.as_deref(), &format!("# manifest: {manifest}\n{body}"))
    }

    pub fn hypergraph_meta(&mut self, extra: Value) -> Value {
        let mut meta = serde_json::json!({ "manifest": self.finished() });
        if let (Value::Object(m), Value::Object(e)) = (&mut meta, extra) {
            m.extend(e);
        }
        meta
    }

    pub fn write_json_value(&mut self, value: &Value) -> Result<()> {
        let out = self.out.clone();
        write_text(out.as_deref(), &(serde_json::to_string_pretty(value)? + "\n"))
    }
}

fn write_text(path: Option<&Path>, text: &str) -> Result<()> {
    match path {
        Some(p) => std::fs::write(p, text).with_context(|| format!("writing {}", p.display())),
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout.write_all(text.as_bytes())?;
            stdout.flush()?;
            Ok(())
        }
    }
}

pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(header: &[&str]) -> Self {
        Self {
            header: header.iter().map(|s| s.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        self.rows.push(row);
    }
}

/// 17 significant digits, enough to round-trip any `f64`.
pub fn fmt_f64(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else {
        x.to_string()
    }
}

pub fn fmt_opt(x: Option<f64>) -> String {
    x.map(fmt_f64).unwrap_or_default()
}
