//! CSV files with `#` metadata lines and the per-run manifest.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::error::{CliError, CliResult};

pub const MANIFEST_FILE: &str = "manifest.json";

/// Collects the files written by one command.
#[derive(Debug)]
pub struct OutputDir {
    root: PathBuf,
    written: Vec<PathBuf>,
}

impl OutputDir {
    pub fn create(root: &Path) -> CliResult<Self> {
        std::fs::create_dir_all(root).map_err(|e| CliError::io(root, e))?;
        Ok(OutputDir {
            root: root.to_path_buf(),
            written: Vec::new(),
        })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn written(&self) -> &[PathBuf] {
        &self.written
    }

    /// Writes `name` with metadata lines, a header and rows.
    pub fn csv<R, I>(&mut self, name: &str, meta: &[(&str, String)], header: &[String], rows: I) -> CliResult<PathBuf>
    where
        I: IntoIterator<Item = R>,
        R: IntoIterator<Item = String>,
    {
        let path = self.root.join(name);
        let io = |e: std::io::Error| CliError::io(&path, e);
        let mut file = BufWriter::new(File::create(&path).map_err(io)?);
        for (k, v) in meta {
            writeln!(file, "# {k}: {v}").map_err(io)?;
        }
        let mut w = csv::Writer::from_writer(file);
        let csv_err = |e: csv::Error| CliError::io(&path, std::io::Error::other(e));
        w.write_record(header).map_err(csv_err)?;
        for row in rows {
            w.write_record(row).map_err(csv_err)?;
        }
        w.flush().map_err(io)?;
        self.written.push(PathBuf::from(name));
        Ok(path)
    }

    pub fn real_matrix(&mut self, name: &str, meta: &[(&str, String)], m: &DMatrix<f64>) -> CliResult<PathBuf> {
        let header: Vec<String> = (0..m.ncols()).map(|j| format!("c{}", j + 1)).collect();
        let rows = (0..m.nrows()).map(|i| (0..m.ncols()).map(move |j| num(m[(i, j)])).collect::<Vec<_>>());
        self.csv(name, meta, &header, rows)
    }

    pub fn complex_matrix(
        &mut self,
        name: &str,
        meta: &[(&str, String)],
        m: &DMatrix<Complex64>,
    ) -> CliResult<PathBuf> {
        let header: Vec<String> = (0..m.ncols())
            .flat_map(|j| [format!("re{}", j + 1), format!("im{}", j + 1)])
            .collect();
        let rows = (0..m.nrows()).map(|i| {
            (0..m.ncols())
                .flat_map(move |j| [num(m[(i, j)].re), num(m[(i, j)].im)])
                .collect::<Vec<_>>()
        });
        self.csv(name, meta, &header, rows)
    }

    /// Writes the manifest describing this run; it is not itself listed.
    pub fn finish(self, manifest: RunManifest) -> CliResult<PathBuf> {
        let path = self.root.join(MANIFEST_FILE);
        let text = serde_json::to_string_pretty(&RunManifest {
            outputs: self.written.iter().map(|p| p.display().to_string()).collect(),
            ..manifest
        })
        .expect("manifest serializes");
        std::fs::write(&path, text + "\n").map_err(|e| CliError::io(&path, e))?;
        Ok(path)
    }
}

/// Round-trip exact number formatting.
pub fn num(x: f64) -> String {
    format!("{x:e}")
}

#[derive(Debug, Clone, PartialEq, Serialize, serde::Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub arguments: Vec<String>,
    /// SHA-256 of the scenario file bytes.
    pub scenario_hash: String,
    pub seed: Option<u64>,
    pub version: String,
    pub warnings: Vec<String>,
    pub outputs: Vec<String>,
}

impl RunManifest {
    pub fn new(
        command: &str,
        arguments: Vec<String>,
        scenario: &[u8],
        seed: Option<u64>,
        warnings: Vec<String>,
    ) -> Self {
        RunManifest {
            command: command.to_string(),
            arguments,
            scenario_hash: sha256_hex(scenario),
            seed,
            version: env!("CARGO_PKG_VERSION").to_string(),
            warnings,
            outputs: Vec::new(),
        }
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn number_format_round_trips() {
        for x in [0.1 + 0.2, -3.5e-21, 1.0, 6.02214076e23] {
            assert_eq!(num(x).parse::<f64>().unwrap(), x);
        }
    }

    #[test]
    fn csv_has_metadata_header_and_rows() {
        let dir = tempfile::tempdir().unwrap();
        let mut out = OutputDir::create(dir.path()).unwrap();
        let m = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 3.0, 4.0]);
        let path = out.real_matrix("c.csv", &[("quantity", "C".into())], &m).unwrap();
        let text = std::fs::read_to_string(path).unwrap();
        assert_eq!(text, "# quantity: C\nc1,c2\n1e0,2e0\n3e0,4e0\n");
        let manifest = out
            .finish(RunManifest::new("matrices", vec![], b"x", None, vec![]))
            .unwrap();
        let parsed: RunManifest = serde_json::from_str(&std::fs::read_to_string(manifest).unwrap()).unwrap();
        assert_eq!(parsed.outputs, vec!["c.csv".to_string()]);
        assert_eq!(parsed.scenario_hash, sha256_hex(b"x"));
    }
}
