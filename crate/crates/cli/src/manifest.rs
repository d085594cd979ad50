//! Run manifests: what a command wrote, with digests, and the summary over many runs.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::CliError;
use crate::svg::Svg;

pub const MANIFEST_NAME: &str = "manifest.json";
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Artifact {
    /// Relative to the manifest directory.
    pub path: String,
    pub sha256: String,
    pub bytes: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub value: Option<f64>,
    pub detail: String,
}

impl Check {
    pub fn new(name: &str, passed: bool, value: f64, detail: impl Into<String>) -> Self {
        Check { name: name.to_string(), passed, value: value.is_finite().then_some(value), detail: detail.into() }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub version: String,
    pub config: BTreeMap<String, String>,
    pub seed: u64,
    pub files: Vec<Artifact>,
    pub checks: Vec<Check>,
    pub duration_secs: f64,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().fold(String::with_capacity(64), |mut s, b| {
        let _ = write!(s, "{b:02x}");
        s
    })
}

/// Collects artifacts written into one output directory.
pub struct ArtifactWriter {
    dir: PathBuf,
    files: Vec<Artifact>,
}

impl ArtifactWriter {
    pub fn create(dir: &Path) -> Result<Self, CliError> {
        fs::create_dir_all(dir).map_err(CliError::io(dir))?;
        Ok(ArtifactWriter { dir: dir.to_path_buf(), files: Vec::new() })
    }

    pub fn write(&mut self, name: &str, bytes: impl AsRef<[u8]>) -> Result<(), CliError> {
        let bytes = bytes.as_ref();
        let path = self.dir.join(name);
        fs::write(&path, bytes).map_err(CliError::io(&path))?;
        self.files.retain(|a| a.path != name);
        self.files.push(Artifact { path: name.to_string(), sha256: sha256_hex(bytes), bytes: bytes.len() as u64 });
        Ok(())
    }

    pub fn write_json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<(), CliError> {
        let mut text = serde_json::to_string_pretty(value).map_err(|e| CliError::Format { path: name.into(), message: e.to_string() })?;
        text.push('\n');
        self.write(name, text)
    }

    pub fn finish(self, manifest: RunManifest) -> Result<(PathBuf, RunManifest), CliError> {
        let manifest = RunManifest { files: self.files, ..manifest };
        let path = self.dir.join(MANIFEST_NAME);
        let text = serde_json::to_string_pretty(&manifest).map_err(|e| CliError::Format { path: path.clone(), message: e.to_string() })?;
        fs::write(&path, text + "\n").map_err(CliError::io(&path))?;
        Ok((path, manifest))
    }
}

pub fn load_manifest(path: &Path) -> Result<RunManifest, CliError> {
    let text = fs::read_to_string(path).map_err(CliError::io(path))?;
    serde_json::from_str(&text).map_err(|e| CliError::Format { path: path.to_path_buf(), message: e.to_string() })
}

/// Re-hashes every listed file.
pub fn verify(manifest: &RunManifest, dir: &Path) -> Result<(), CliError> {
    for a in &manifest.files {
        let path = dir.join(&a.path);
        let bytes = fs::read(&path).map_err(CliError::io(&path))?;
        let actual = sha256_hex(&bytes);
        if actual != a.sha256 {
            return Err(CliError::DigestMismatch { path, expected: a.sha256.clone(), actual });
        }
    }
    Ok(())
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct SummaryRow {
    pub manifest: String,
    pub command: String,
    pub check: String,
    pub passed: bool,
    pub value: Option<f64>,
    pub detail: String,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct Summary {
    pub runs: usize,
    pub rows: Vec<SummaryRow>,
    pub artifacts: Vec<String>,
}

impl Summary {
    pub fn all_passed(&self) -> bool {
        self.rows.iter().all(|r| r.passed)
    }

    pub fn to_text(&self) -> String {
        let mut s = String::from("# Run summary\n\n");
        let _ = writeln!(s, "runs: {}", self.runs);
        let passed = self.rows.iter().filter(|r| r.passed).count();
        let _ = writeln!(s, "checks: {passed}/{} passed\n", self.rows.len());
        if !self.rows.is_empty() {
            s.push_str("| run | command | check | result | value | detail |\n|---|---|---|---|---|---|\n");
            for r in &self.rows {
                let v = r.value.map_or("-".to_string(), |v| format!("{v:.6e}"));
                let res = if r.passed { "PASS" } else { "FAIL" };
                let _ = writeln!(s, "| {} | {} | {} | {res} | {v} | {} |", r.manifest, r.command, r.check, r.detail);
            }
            s.push('\n');
        }
        if !self.artifacts.is_empty() {
            s.push_str("## Artifacts\n\n");
            for a in &self.artifacts {
                let _ = writeln!(s, "- {a}");
            }
        }
        s
    }

    /// One line per artifact, coloured by whether its run passed every check.
    pub fn to_svg(&self) -> String {
        let line = 18.0;
        let mut svg = Svg::new(640.0, line * (self.artifacts.len() as f64 + 2.0));
        svg.text(10.0, line, &format!("{} runs, {} checks", self.runs, self.rows.len()), "#000");
        for (i, a) in self.artifacts.iter().enumerate() {
            let run = a.split('/').next().unwrap_or("");
            let ok = self.rows.iter().filter(|r| r.manifest == run).all(|r| r.passed);
            svg.text(10.0, line * (i as f64 + 2.0), a, if ok { "#1a7f37" } else { "#cf222e" });
        }
        svg.finish()
    }
}

/// Verifies every manifest and aggregates their checks. Runs are named by
/// the directory holding the manifest.
pub fn report(manifests: &[PathBuf]) -> Result<Summary, CliError> {
    let mut summary = Summary::default();
    for path in manifests {
        let m = load_manifest(path)?;
        let dir = path.parent().unwrap_or(Path::new("."));
        verify(&m, dir)?;
        let run = dir.file_name().map_or_else(|| dir.display().to_string(), |n| n.to_string_lossy().into_owned());
        summary.runs += 1;
        for c in &m.checks {
            summary.rows.push(SummaryRow {
                manifest: run.clone(),
                command: m.command.clone(),
                check: c.name.clone(),
                passed: c.passed,
                value: c.value,
                detail: c.detail.clone(),
            });
        }
        summary.artifacts.extend(m.files.iter().map(|a| format!("{run}/{}", a.path)));
    }
    Ok(summary)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn digest_of_empty_input() {
        assert_eq!(sha256_hex(b""), "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
    }

    #[test]
    fn empty_report_is_empty() {
        let s = report(&[]).unwrap();
        assert_eq!(s.runs, 0);
        assert!(s.rows.is_empty() && s.all_passed());
    }
}
