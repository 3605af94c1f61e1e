//! CSV tables and the JSON run manifest.

use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::Result;

/// Fixed 12-significant-digit scientific format, so identical inputs give
/// byte-identical tables.
pub fn fmt_float(v: f64) -> String {
    if v.is_nan() {
        "nan".into()
    } else if v.is_infinite() {
        if v > 0.0 { "inf".into() } else { "-inf".into() }
    } else if v == 0.0 {
        "0.00000000000e0".into()
    } else {
        format!("{v:.11e}")
    }
}

/// A header plus rows of numbers.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl Table {
    pub fn new(header: &[&str]) -> Self {
        Table { header: header.iter().map(|s| s.to_string()).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<f64>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn to_csv(&self) -> String {
        let mut s = self.header.join(",");
        s.push('\n');
        for r in &self.rows {
            let cells: Vec<String> = r.iter().map(|v| fmt_float(*v)).collect();
            s.push_str(&cells.join(","));
            s.push('\n');
        }
        s
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        std::fs::File::create(path)?.write_all(self.to_csv().as_bytes())?;
        Ok(())
    }
}

/// Hex SHA-256 of `bytes`.
pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

/// Provenance record written next to every set of outputs.
#[derive(Clone, Debug, Serialize)]
pub struct RunManifest {
    pub tool: String,
    pub version: String,
    pub command: String,
    pub config: serde_json::Value,
    pub input_sha256: String,
    pub tolerances: serde_json::Value,
    pub truncation: serde_json::Value,
    pub wall_time_s: f64,
    pub outputs: Vec<String>,
    pub status: String,
    pub error: Option<String>,
}

/// Collects outputs during a run and writes the manifest at the end, also
/// when the run fails.
pub struct ManifestWriter {
    dir: PathBuf,
    started: Instant,
    manifest: RunManifest,
}

pub const MANIFEST_NAME: &str = "manifest.json";

impl ManifestWriter {
    pub fn new(dir: &Path, command: &str, config: serde_json::Value, input: &[u8]) -> Result<Self> {
        std::fs::create_dir_all(dir)?;
        Ok(ManifestWriter {
            dir: dir.to_path_buf(),
            started: Instant::now(),
            manifest: RunManifest {
                tool: env!("CARGO_PKG_NAME").into(),
                version: env!("CARGO_PKG_VERSION").into(),
                command: command.into(),
                config,
                input_sha256: sha256_hex(input),
                tolerances: serde_json::Value::Null,
                truncation: serde_json::Value::Null,
                wall_time_s: 0.0,
                outputs: Vec::new(),
                status: "running".into(),
                error: None,
            },
        })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn set_tolerances(&mut self, v: serde_json::Value) {
        self.manifest.tolerances = v;
    }

    pub fn set_truncation(&mut self, v: serde_json::Value) {
        self.manifest.truncation = v;
    }

    /// Writes a table into the output directory and records it.
    pub fn write_table(&mut self, name: &str, table: &Table) -> Result<PathBuf> {
        let path = self.dir.join(name);
        table.write(&path)?;
        Ok(path)
    }

    pub fn write_json(&mut self, name: &str, value: &serde_json::Value) -> Result<PathBuf> {
        let path = self.dir.join(name);
        std::fs::write(&path, serde_json::to_string_pretty(value).expect("JSON values serialize"))?;
        Ok(path)
    }

    /// Finalizes the manifest. Every file in the directory is listed.
    pub fn finish(mut self, error: Option<String>) -> Result<RunManifest> {
        self.manifest.wall_time_s = self.started.elapsed().as_secs_f64();
        self.manifest.status = if error.is_some() { "failed".into() } else { "ok".into() };
        self.manifest.error = error;
        let mut files: Vec<String> = std::fs::read_dir(&self.dir)?
            .filter_map(|e| e.ok())
            .filter(|e| e.file_type().map(|t| t.is_file()).unwrap_or(false))
            .map(|e| e.file_name().to_string_lossy().into_owned())
            .filter(|n| n != MANIFEST_NAME)
            .collect();
        files.sort();
        self.manifest.outputs = files;
        let text = serde_json::to_string_pretty(&self.manifest).expect("manifest serializes");
        std::fs::write(self.dir.join(MANIFEST_NAME), text)?;
        Ok(self.manifest)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn float_format_is_fixed_width_precision() {
        assert_eq!(fmt_float(1.0), "1.00000000000e0");
        assert_eq!(fmt_float(-0.000123456789012345), "-1.23456789012e-4");
        assert_eq!(fmt_float(0.0), "0.00000000000e0");
        assert_eq!(fmt_float(f64::NAN), "nan");
    }

    #[test]
    fn table_csv() {
        let mut t = Table::new(&["a", "b"]);
        t.push(vec![1.0, 2.5]);
        assert_eq!(t.to_csv(), "a,b\n1.00000000000e0,2.50000000000e0\n");
    }

    #[test]
    fn sha256_of_empty_input() {
        assert_eq!(sha256_hex(b""), "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
    }

    #[test]
    fn manifest_lists_every_file() {
        let dir = tempfile::tempdir().unwrap();
        let mut w = ManifestWriter::new(dir.path(), "test", serde_json::json!({}), b"x").unwrap();
        w.write_table("t.csv", &Table::new(&["a"])).unwrap();
        std::fs::write(dir.path().join("extra.txt"), "1").unwrap();
        let m = w.finish(None).unwrap();
        assert_eq!(m.outputs, vec!["extra.txt".to_string(), "t.csv".to_string()]);
        assert!(dir.path().join(MANIFEST_NAME).exists());
    }
}
