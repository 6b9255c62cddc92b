//! Run manifests written next to every output file.
//!
//! Data files hold only deterministic content, so they can be compared byte
//! for byte across thread counts; thread count, wall time and hashes live in
//! `<output>.manifest.json`.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{CliError, CliResult};

/// How `J` is signed; recorded in every sampling manifest.
pub const SIGN_CONVENTION: &str = "J = -2 Im<K_AB psi|K_BC psi> = i Tr(rho [K_AB, K_BC]); \
     regions are the Voronoi cells of the rotated tetrahedron vertices \
     A=(1,1,1), B=(1,-1,-1), C=(-1,1,-1), D=(-1,-1,1) (normalized); entropies in nats";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub version: String,
    /// Arguments after the program name, as given.
    pub args: Vec<String>,
    pub seed: Option<u64>,
    pub n: Option<usize>,
    pub samples: Option<usize>,
    pub threads: usize,
    pub wall_time_s: f64,
    /// SHA-256 (hex) of each output, keyed by file name.
    pub outputs: BTreeMap<String, String>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub notes: BTreeMap<String, String>,
}

impl RunManifest {
    pub fn new(command: &str, args: &[String]) -> Self {
        RunManifest {
            command: command.to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            args: args.to_vec(),
            seed: None,
            n: None,
            samples: None,
            threads: 1,
            wall_time_s: 0.0,
            outputs: BTreeMap::new(),
            notes: BTreeMap::new(),
        }
    }

    pub fn read(path: &Path) -> CliResult<Self> {
        let text = fs::read_to_string(path).map_err(|e| CliError::from(e).context(path.display()))?;
        Ok(serde_json::from_str(&text)?)
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

pub fn manifest_path(output: &Path) -> PathBuf {
    let mut name = output.file_name().unwrap_or_default().to_os_string();
    name.push(".manifest.json");
    output.with_file_name(name)
}

fn file_key(path: &Path) -> String {
    path.file_name()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default()
}

/// Write `bytes` to `path` and the manifest (with the output hash) beside it.
pub fn write_output(path: &Path, bytes: &[u8], mut manifest: RunManifest) -> CliResult<RunManifest> {
    fs::write(path, bytes).map_err(|e| CliError::from(e).context(path.display()))?;
    manifest.outputs.insert(file_key(path), sha256_hex(bytes));
    let text = serde_json::to_string_pretty(&manifest)? + "\n";
    let mpath = manifest_path(path);
    fs::write(&mpath, text).map_err(|e| CliError::from(e).context(mpath.display()))?;
    Ok(manifest)
}
