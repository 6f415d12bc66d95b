//! Reproducibility manifests: one JSON document per completed run, written
//! atomically, plus the consolidated report over a results directory.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::CliError;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunManifest {
    /// The exact `key = value` snapshot that reproduces this run.
    pub config: String,
    pub config_hash: String,
    pub version: String,
    pub started_unix: u64,
    pub finished_unix: u64,
    pub result_files: Vec<String>,
    /// Per-task convergence / statistics summary.
    pub diagnostics: serde_json::Value,
}

pub fn config_hash(config_text: &str) -> String {
    let digest = Sha256::digest(config_text.as_bytes());
    let mut s = String::with_capacity(64);
    for b in digest {
        s.push_str(&format!("{b:02x}"));
    }
    s
}

pub fn now_unix() -> u64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0)
}

/// Write a file atomically (temp then rename).
pub fn write_atomic(path: &Path, contents: &str) -> Result<(), CliError> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent)
            .map_err(|e| CliError::Io(format!("creating {}: {e}", parent.display())))?;
    }
    let tmp = path.with_extension("tmp");
    fs::write(&tmp, contents).map_err(|e| CliError::Io(format!("writing {}: {e}", tmp.display())))?;
    fs::rename(&tmp, path)
        .map_err(|e| CliError::Io(format!("renaming into {}: {e}", path.display())))?;
    Ok(())
}

impl RunManifest {
    /// Persist under `dir/manifest-<hash8>-<start>.json` so reruns of the
    /// same configuration keep their history.
    pub fn write(&self, dir: &Path) -> Result<PathBuf, CliError> {
        let name = format!(
            "manifest-{}-{}.json",
            &self.config_hash[..8],
            self.started_unix
        );
        let path = dir.join(name);
        let text = serde_json::to_string_pretty(self)
            .map_err(|e| CliError::Io(format!("serializing manifest: {e}")))?;
        write_atomic(&path, &text)?;
        Ok(path)
    }
}

#[derive(Debug, Serialize)]
pub struct ReportEntry {
    pub config_hash: String,
    pub latest: RunManifest,
    pub history: Vec<RunManifest>,
}

#[derive(Debug, Serialize)]
pub struct ConsolidatedReport {
    pub count: usize,
    pub entries: Vec<ReportEntry>,
}

/// Aggregate every manifest in a directory, keyed by configuration hash;
/// the latest finish time wins, earlier runs stay in the history.
pub fn emit_report(dir: &Path) -> Result<ConsolidatedReport, CliError> {
    if !dir.is_dir() {
        return Err(CliError::Validation(format!(
            "dir: no such results directory '{}'",
            dir.display()
        )));
    }
    let mut groups: BTreeMap<String, Vec<RunManifest>> = BTreeMap::new();
    let entries =
        fs::read_dir(dir).map_err(|e| CliError::Io(format!("reading {}: {e}", dir.display())))?;
    for entry in entries {
        let entry = entry.map_err(|e| CliError::Io(format!("reading directory entry: {e}")))?;
        let name = entry.file_name().to_string_lossy().to_string();
        if !(name.starts_with("manifest-") && name.ends_with(".json")) {
            continue;
        }
        let text = fs::read_to_string(entry.path())
            .map_err(|e| CliError::Io(format!("reading {name}: {e}")))?;
        let manifest: RunManifest = serde_json::from_str(&text)
            .map_err(|e| CliError::Validation(format!("corrupt manifest {name}: {e}")))?;
        groups
            .entry(manifest.config_hash.clone())
            .or_default()
            .push(manifest);
    }
    let mut entries = Vec::new();
    for (hash, mut runs) in groups {
        runs.sort_by_key(|m| m.finished_unix);
        let latest = runs.last().cloned().expect("nonempty group");
        entries.push(ReportEntry {
            config_hash: hash,
            latest,
            history: runs,
        });
    }
    Ok(ConsolidatedReport {
        count: entries.len(),
        entries,
    })
}
