use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::Duration;

use serde::Serialize;
use smr_core::error::Result;

/// Record of one CLI run, written next to its outputs.
#[derive(Debug, Clone, Serialize)]
pub struct RunManifest {
    pub command: String,
    pub tool_version: String,
    pub config: BTreeMap<String, String>,
    pub inputs: Vec<PathBuf>,
    pub outputs: Vec<PathBuf>,
    pub timing: Timing,
}

#[derive(Debug, Clone, Serialize)]
pub struct Timing {
    pub elapsed_ms: f64,
}

impl RunManifest {
    pub fn new(command: &str) -> Self {
        Self {
            command: command.to_string(),
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            config: BTreeMap::new(),
            inputs: Vec::new(),
            outputs: Vec::new(),
            timing: Timing { elapsed_ms: 0.0 },
        }
    }

    pub fn set(&mut self, key: &str, value: impl ToString) {
        self.config.insert(key.to_string(), value.to_string());
    }

    /// Writes the manifest via a sibling temp file and a rename. Every
    /// listed output must already exist.
    pub fn write(&mut self, path: &Path, elapsed: Duration) -> Result<()> {
        self.timing.elapsed_ms = elapsed.as_secs_f64() * 1e3;
        if let Some(missing) = self.outputs.iter().find(|p| !p.exists()) {
            return Err(std::io::Error::new(
                std::io::ErrorKind::NotFound,
                format!("declared output {} was not written", missing.display()),
            )
            .into());
        }
        let json = serde_json::to_string_pretty(self).map_err(std::io::Error::other)?;
        let tmp = path.with_extension("json.tmp");
        std::fs::write(&tmp, json + "\n")?;
        std::fs::rename(&tmp, path)?;
        Ok(())
    }
}

/// `<path>.manifest.json` beside a primary output file.
pub fn beside(path: &Path) -> PathBuf {
    let mut name = path.file_name().unwrap_or_default().to_os_string();
    name.push(".manifest.json");
    path.with_file_name(name)
}
