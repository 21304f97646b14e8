use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use anyhow::{Context, Result};
use clap::ValueEnum;
use serde::Serialize;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

/// Provenance record written next to every file output.
#[derive(Debug, Clone, Serialize)]
pub struct RunManifest {
    pub schema_version: u32,
    pub command: String,
    pub parameter_source: String,
    pub seed: Option<u64>,
    pub n_runs: Option<u64>,
    pub outputs: Vec<PathBuf>,
    pub tool_version: &'static str,
    pub timestamp_unix_s: u64,
}

impl RunManifest {
    pub fn new(command: &str, parameter_source: String, seed: Option<u64>, n_runs: Option<u64>) -> Self {
        RunManifest {
            schema_version: SCHEMA_VERSION,
            command: command.to_string(),
            parameter_source,
            seed,
            n_runs,
            outputs: Vec::new(),
            tool_version: env!("CARGO_PKG_VERSION"),
            timestamp_unix_s: SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0),
        }
    }
}

pub fn manifest_path(out: &Path) -> PathBuf {
    let mut name = out.file_name().map(|n| n.to_os_string()).unwrap_or_default();
    name.push(".manifest.json");
    out.with_file_name(name)
}

#[derive(Serialize)]
struct Envelope<'a, D: Serialize> {
    schema_version: u32,
    command: &'a str,
    result: D,
}

pub fn json_bytes<D: Serialize>(command: &str, data: &D) -> Result<Vec<u8>> {
    let mut v = serde_json::to_vec_pretty(&Envelope { schema_version: SCHEMA_VERSION, command, result: data })?;
    v.push(b'\n');
    Ok(v)
}

/// CSV with a header row taken from the row fields; `empty_header` is written
/// when there are no rows.
pub fn csv_bytes<R: Serialize>(empty_header: &[&str], rows: &[R]) -> Result<Vec<u8>> {
    let mut w = csv::WriterBuilder::new().has_headers(!rows.is_empty()).from_writer(Vec::new());
    if rows.is_empty() {
        w.write_record(empty_header)?;
    }
    for r in rows {
        w.serialize(r)?;
    }
    w.into_inner().context("flushing CSV buffer")
}

/// Writes `bytes` to `out` with its manifest beside it, or to stdout with the
/// manifest as one JSON line on stderr.
pub fn emit(bytes: &[u8], out: Option<&Path>, mut manifest: RunManifest) -> Result<()> {
    match out {
        Some(path) => {
            fs::write(path, bytes).with_context(|| format!("writing {}", path.display()))?;
            manifest.outputs.push(path.to_path_buf());
            let mpath = manifest_path(path);
            let mut text = serde_json::to_vec_pretty(&manifest)?;
            text.push(b'\n');
            fs::write(&mpath, text).with_context(|| format!("writing {}", mpath.display()))?;
        }
        None => {
            let mut stdout = io::stdout().lock();
            stdout.write_all(bytes)?;
            stdout.flush()?;
            eprintln!("{}", serde_json::to_string(&manifest)?);
        }
    }
    Ok(())
}
