use std::io::Write;
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::{json, Map, Value};
use sha2::{Digest, Sha256};
use tempfile::NamedTempFile;

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

/// Header attached to every output. No timestamps, so reruns are
/// byte-identical.
#[derive(Debug, Clone, Serialize)]
pub struct Provenance {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: String,
    pub config_sha256: String,
    pub seed: Option<u64>,
    pub tolerances: Map<String, Value>,
    pub converged: bool,
}

impl Provenance {
    pub fn new<C: Serialize>(command: &str, config: &C, seed: Option<u64>) -> Self {
        let bytes = serde_json::to_vec(config).expect("configs serialize");
        Provenance {
            tool: env!("CARGO_PKG_NAME"),
            version: env!("CARGO_PKG_VERSION"),
            command: command.to_string(),
            config_sha256: hex(&Sha256::digest(&bytes)),
            seed,
            tolerances: Map::new(),
            converged: true,
        }
    }

    pub fn tolerance(mut self, key: &str, value: impl Into<Value>) -> Self {
        self.tolerances.insert(key.to_string(), value.into());
        self
    }

    fn csv_header(&self, summary: &Map<String, Value>) -> String {
        let mut s = format!("# {} {}\n# command: {}\n# config_sha256: {}\n", self.tool, self.version, self.command, self.config_sha256);
        match self.seed {
            Some(seed) => s.push_str(&format!("# seed: {seed}\n")),
            None => s.push_str("# seed: none\n"),
        }
        for (k, v) in &self.tolerances {
            s.push_str(&format!("# tolerance.{k}: {v}\n"));
        }
        s.push_str(&format!("# converged: {}\n", self.converged));
        for (k, v) in summary {
            s.push_str(&format!("# {k}: {v}\n"));
        }
        s
    }
}

fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

/// One CSV table; `suffix` distinguishes extra files of a multi-table
/// command (`out.csv` → `out_<suffix>.csv`).
pub struct Table {
    pub suffix: Option<String>,
    pub body: Vec<u8>,
}

impl Table {
    pub fn main(body: Vec<u8>) -> Self {
        Table { suffix: None, body }
    }

    pub fn extra(suffix: impl Into<String>, body: Vec<u8>) -> Self {
        Table {
            suffix: Some(suffix.into()),
            body,
        }
    }
}

pub struct Report {
    pub provenance: Provenance,
    /// Scalar results repeated in CSV headers.
    pub summary: Map<String, Value>,
    pub tables: Vec<Table>,
    pub json: Value,
}

fn suffixed(path: &Path, suffix: &str) -> PathBuf {
    let stem = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    let name = match path.extension() {
        Some(ext) => format!("{stem}_{suffix}.{}", ext.to_string_lossy()),
        None => format!("{stem}_{suffix}"),
    };
    path.with_file_name(name)
}

/// Writes through a temp file in the target directory, then renames.
fn write_atomic(path: &Path, bytes: &[u8]) -> std::io::Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = NamedTempFile::new_in(dir)?;
    tmp.write_all(bytes)?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| e.error)?;
    Ok(())
}

pub fn emit(report: &Report, format: Format, out: Option<&Path>) -> std::io::Result<()> {
    match format {
        Format::Json => {
            let doc = json!({ "provenance": report.provenance, "result": report.json });
            let mut bytes = serde_json::to_vec_pretty(&doc)?;
            bytes.push(b'\n');
            match out {
                Some(p) => write_atomic(p, &bytes),
                None => std::io::stdout().lock().write_all(&bytes),
            }
        }
        Format::Csv => {
            let header = report.provenance.csv_header(&report.summary);
            match out {
                Some(p) => {
                    for t in &report.tables {
                        let path = match &t.suffix {
                            Some(s) => suffixed(p, s),
                            None => p.to_path_buf(),
                        };
                        let mut bytes = header.clone().into_bytes();
                        if let Some(s) = &t.suffix {
                            bytes.extend_from_slice(format!("# table: {s}\n").as_bytes());
                        }
                        bytes.extend_from_slice(&t.body);
                        write_atomic(&path, &bytes)?;
                    }
                    Ok(())
                }
                None => {
                    let mut stdout = std::io::stdout().lock();
                    stdout.write_all(header.as_bytes())?;
                    for (i, t) in report.tables.iter().enumerate() {
                        if i > 0 {
                            stdout.write_all(b"\n")?;
                        }
                        if let Some(s) = &t.suffix {
                            writeln!(stdout, "# table: {s}")?;
                        }
                        stdout.write_all(&t.body)?;
                    }
                    Ok(())
                }
            }
        }
    }
}
