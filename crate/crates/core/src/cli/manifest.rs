use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::table::SweepSpec;

/// Written next to every table so the run can be replayed exactly.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool_version: String,
    pub spec: SweepSpec,
    pub csv: PathBuf,
    pub markdown: PathBuf,
}

impl RunManifest {
    pub fn new(spec: SweepSpec, csv: PathBuf, markdown: PathBuf) -> Self {
        Self {
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            spec,
            csv,
            markdown,
        }
    }

    pub fn load(path: &Path) -> Result<Self, String> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| format!("cannot read manifest {}: {e}", path.display()))?;
        serde_json::from_str(&text).map_err(|e| format!("invalid manifest {}: {e}", path.display()))
    }

    pub fn save(&self, path: &Path) -> std::io::Result<()> {
        let text = serde_json::to_string_pretty(self).expect("manifest serializes");
        std::fs::write(path, text + "\n")
    }
}
