//! Artifact writing: JSON reports, CSV series, field snapshots and the run
//! manifest.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use eulerlab_core::snapshot::{write_frames, SnapshotManifest};
use eulerlab_core::ScalarField;
use serde::Serialize;

use crate::error::CliError;

/// Writes into one output directory and remembers every file it wrote.
pub struct Artifacts {
    root: PathBuf,
    written: Vec<String>,
}

#[derive(Serialize)]
struct RunManifest<'a> {
    experiment: &'a str,
    config_sha256: &'a str,
    artifacts: &'a [String],
}

fn io(path: &Path) -> impl FnOnce(std::io::Error) -> CliError + '_ {
    move |source| CliError::Io {
        path: path.to_path_buf(),
        source,
    }
}

impl Artifacts {
    pub fn create(root: &Path) -> Result<Self, CliError> {
        fs::create_dir_all(root).map_err(io(root))?;
        Ok(Self {
            root: root.to_path_buf(),
            written: Vec::new(),
        })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    fn record(&mut self, rel: &str) {
        if !self.written.iter().any(|w| w == rel) {
            self.written.push(rel.to_string());
        }
    }

    pub fn json<T: Serialize>(&mut self, rel: &str, value: &T) -> Result<(), CliError> {
        let path = self.root.join(rel);
        let mut text = serde_json::to_string_pretty(value)?;
        text.push('\n');
        fs::write(&path, text).map_err(io(&path))?;
        self.record(rel);
        Ok(())
    }

    /// CSV with a header row; every column must have the same length.
    pub fn csv(&mut self, rel: &str, columns: &[(&str, &[f64])]) -> Result<(), CliError> {
        let path = self.root.join(rel);
        let mut w = csv::Writer::from_path(&path)?;
        w.write_record(columns.iter().map(|c| c.0))?;
        let rows = columns.first().map_or(0, |c| c.1.len());
        for r in 0..rows {
            w.write_record(columns.iter().map(|c| format!("{:e}", c.1[r])))?;
        }
        w.flush().map_err(io(&path))?;
        self.record(rel);
        Ok(())
    }

    pub fn text(&mut self, rel: &str, body: &str) -> Result<(), CliError> {
        let path = self.root.join(rel);
        fs::write(&path, body).map_err(io(&path))?;
        self.record(rel);
        Ok(())
    }

    /// Field snapshots of one run under `dir/` plus `dir/manifest.json`.
    pub fn frames(
        &mut self,
        dir: &str,
        config_hash: &str,
        components: &[&str],
        frames: &[(f64, Vec<&ScalarField>)],
        ledgers: BTreeMap<String, Vec<f64>>,
    ) -> Result<(), CliError> {
        let base = self.root.join(dir);
        let mut m: SnapshotManifest = write_frames(&base, "frame", config_hash, components, frames)?;
        m.ledgers = ledgers;
        m.write(&base.join("manifest.json"))?;
        for f in &m.files {
            self.record(&format!("{dir}/{f}"));
        }
        self.record(&format!("{dir}/manifest.json"));
        Ok(())
    }

    /// Writes `manifest.json` listing every artifact (sorted).
    pub fn finish(mut self, experiment: &str, config_hash: &str) -> Result<Vec<String>, CliError> {
        self.written.sort();
        let m = RunManifest {
            experiment,
            config_sha256: config_hash,
            artifacts: &self.written,
        };
        let path = self.root.join("manifest.json");
        let mut text = serde_json::to_string_pretty(&m)?;
        text.push('\n');
        fs::write(&path, text).map_err(io(&path))?;
        Ok(self.written)
    }
}
