use std::io::Write;
use std::path::Path;

use serde::Serialize;

use crate::error::Result;

/// Writes `bytes` next to `path` and renames into place.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = path
        .parent()
        .filter(|p| !p.as_os_str().is_empty())
        .unwrap_or(Path::new("."));
    std::fs::create_dir_all(dir)?;
    let name = path.file_name().and_then(|n| n.to_str()).unwrap_or("out");
    let tmp = dir.join(format!(".{name}.tmp-{}", std::process::id()));
    {
        let mut f = std::fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
    }
    std::fs::rename(&tmp, path)?;
    Ok(())
}

/// Shortest round-trip decimal; exponent form outside [1e−4, 1e15).
pub fn num(x: f64) -> String {
    let a = x.abs();
    if x == 0.0 || (1e-4..1e15).contains(&a) || !x.is_finite() {
        format!("{x}")
    } else {
        format!("{x:e}")
    }
}

/// CSV text with a fixed header.
pub struct Csv {
    text: String,
    columns: usize,
}

impl Csv {
    pub fn new(header: &[&str]) -> Self {
        Self {
            text: header.join(",") + "\n",
            columns: header.len(),
        }
    }

    pub fn row(&mut self, cells: &[String]) {
        assert_eq!(cells.len(), self.columns, "CSV row width");
        self.text.push_str(&cells.join(","));
        self.text.push('\n');
    }

    pub fn as_str(&self) -> &str {
        &self.text
    }
}

/// Metadata written next to each data file as `<file>.meta.toml`.
#[derive(Serialize)]
pub struct Sidecar {
    pub subcommand: String,
    pub config_hash: String,
    pub code_version: String,
    pub created_unix: u64,
    pub seed: u64,
    pub threads: usize,
    pub points: usize,
    pub warnings: Vec<String>,
    pub notes: Vec<String>,
    pub config: toml::Table,
}

pub fn write_with_sidecar(path: &Path, csv: &Csv, meta: &Sidecar) -> Result<()> {
    write_atomic(path, csv.as_str().as_bytes())?;
    let mut side = path.as_os_str().to_owned();
    side.push(".meta.toml");
    let text = toml::to_string(meta).expect("sidecar serializes");
    write_atomic(Path::new(&side), text.as_bytes())
}
