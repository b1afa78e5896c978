use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::config::RunConfig;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridInfo {
    pub cells: usize,
    pub dx: f64,
    pub x0: f64,
    pub coupling_index: usize,
    /// Bytes of one full two-photon amplitude grid.
    pub chi_bytes: u64,
}

/// Quantities the run derives from the config.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Derived {
    pub gamma_unit: f64,
    pub j_coupling: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub g_coupling: Option<f64>,
    pub ee_residual: f64,
    pub omega_ee: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub omega_bright: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub carrier: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid: Option<GridInfo>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_max: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Artifact {
    /// Path relative to the output directory.
    pub path: String,
    pub sha256: String,
    pub bytes: u64,
}

impl Artifact {
    pub fn of(dir: &Path, file: &Path) -> std::io::Result<Self> {
        let data = std::fs::read(file)?;
        let rel = file.strip_prefix(dir).unwrap_or(file);
        Ok(Self { path: rel.to_string_lossy().into_owned(), sha256: hex::encode(Sha256::digest(&data)), bytes: data.len() as u64 })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool: String,
    pub experiment: String,
    pub dry_run: bool,
    pub config: RunConfig,
    pub derived: Derived,
    pub artifacts: Vec<Artifact>,
    /// Headline numbers of the run; non-finite values are stored as null.
    pub results: BTreeMap<String, Option<f64>>,
    pub wall_seconds: f64,
}

impl RunManifest {
    /// The config this run used, as normalized TOML.
    pub fn config_toml(&self) -> String {
        self.config.to_toml()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("manifest serializes")
    }

    pub fn from_json(text: &str) -> serde_json::Result<Self> {
        serde_json::from_str(text)
    }
}
