//! Run manifests.
//!
//! Every subcommand writes a manifest recording the exact invocation, the
//! resolved settings, the seeds in play, and the files it produced. Replaying
//! the recorded argv reproduces every output byte for byte, except for the
//! wall-clock fields, which are documented as non-deterministic.

use std::collections::BTreeMap;
use std::path::Path;
use std::time::{SystemTime, UNIX_EPOCH};

use serde::Serialize;

use randepth::Result;

#[derive(Serialize)]
pub struct RunManifest {
    pub command: String,
    pub argv: Vec<String>,
    pub version: String,
    pub start_unix: u64,
    pub end_unix: u64,
    pub seeds: BTreeMap<String, u64>,
    pub settings: serde_json::Value,
    pub outputs: Vec<String>,
}

pub struct ManifestWriter {
    command: String,
    argv: Vec<String>,
    start_unix: u64,
    seeds: BTreeMap<String, u64>,
    settings: serde_json::Value,
    outputs: Vec<String>,
}

fn unix_now() -> u64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0)
}

impl ManifestWriter {
    /// Starts a manifest for `command` with the resolved settings snapshot.
    pub fn new(command: &str, settings: serde_json::Value) -> Self {
        ManifestWriter {
            command: command.to_string(),
            argv: std::env::args().collect(),
            start_unix: unix_now(),
            seeds: BTreeMap::new(),
            settings,
            outputs: Vec::new(),
        }
    }

    pub fn seed(&mut self, name: &str, value: u64) {
        self.seeds.insert(name.to_string(), value);
    }

    pub fn output(&mut self, path: &Path) {
        self.outputs.push(path.display().to_string());
    }

    /// Attach an extra settings entry discovered while running (for example
    /// the list of failed cells in an experiment).
    pub fn note(&mut self, key: &str, value: serde_json::Value) {
        match self.settings.as_object_mut() {
            Some(map) => {
                map.insert(key.to_string(), value);
            }
            None => {
                self.settings = serde_json::json!({ "settings": self.settings.clone(), key: value });
            }
        }
    }

    /// Stamps the end time and writes the manifest JSON to `path`.
    pub fn write(self, path: &Path) -> Result<()> {
        let manifest = RunManifest {
            command: self.command,
            argv: self.argv,
            version: env!("CARGO_PKG_VERSION").to_string(),
            start_unix: self.start_unix,
            end_unix: unix_now(),
            seeds: self.seeds,
            settings: self.settings,
            outputs: self.outputs,
        };
        let text = serde_json::to_string_pretty(&manifest)?;
        std::fs::write(path, text + "\n")?;
        Ok(())
    }
}

/// Appends the trailing manifest reference column every result CSV carries.
pub fn with_manifest_column(csv: &str, manifest_name: &str) -> String {
    let mut out = String::with_capacity(csv.len() + 32 * csv.lines().count());
    for (i, line) in csv.lines().enumerate() {
        out.push_str(line);
        out.push(',');
        out.push_str(if i == 0 { "manifest" } else { manifest_name });
        out.push('\n');
    }
    out
}
