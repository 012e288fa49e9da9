//! Artifact writing and the run manifest.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::io::Write as _;
use std::path::Path;

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::config::RunConfig;
use crate::error::CliError;

pub const MANIFEST: &str = "run.manifest";

/// Files produced by one run, keyed by path relative to the output directory.
#[derive(Debug, Default)]
pub struct Artifacts {
    files: BTreeMap<String, String>,
}

impl Artifacts {
    pub fn add(&mut self, name: impl Into<String>, contents: String) {
        self.files.insert(name.into(), contents);
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.files.keys().map(String::as_str)
    }
}

/// Writes `contents` to `path` via a temporary file in the same directory.
pub fn write_atomic(path: &Path, contents: &[u8]) -> Result<(), CliError> {
    let io = |e: std::io::Error| CliError::io("io", format!("{}: {e}", path.display()));
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    std::fs::create_dir_all(dir).map_err(io)?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(io)?;
    tmp.write_all(contents).map_err(io)?;
    tmp.as_file().sync_all().map_err(io)?;
    tmp.persist(path).map_err(|e| io(e.error))?;
    Ok(())
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().fold(String::with_capacity(64), |mut s, b| {
        let _ = write!(s, "{b:02x}");
        s
    })
}

#[derive(Serialize)]
struct ManifestTable<'a> {
    build: String,
    outputs: BTreeMap<&'a str, String>,
}

#[derive(Serialize)]
struct Manifest<'a> {
    #[serde(flatten)]
    config: &'a RunConfig,
    manifest: ManifestTable<'a>,
}

pub fn build_id() -> String {
    format!(
        "{} {} ({}-{}, {})",
        env!("CARGO_PKG_NAME"),
        env!("CARGO_PKG_VERSION"),
        std::env::consts::ARCH,
        std::env::consts::OS,
        if cfg!(debug_assertions) { "debug" } else { "release" }
    )
}

/// Writes every artifact, then `run.manifest` with the resolved config and
/// output hashes.
pub fn commit(config: &RunConfig, artifacts: &Artifacts) -> Result<(), CliError> {
    let mut outputs = BTreeMap::new();
    for (name, contents) in &artifacts.files {
        write_atomic(&config.out_dir.join(name), contents.as_bytes())?;
        outputs.insert(name.as_str(), sha256_hex(contents.as_bytes()));
    }
    let m = Manifest {
        config,
        manifest: ManifestTable {
            build: build_id(),
            outputs,
        },
    };
    let text = toml::to_string(&m).map_err(|e| CliError::io("io", e.to_string()))?;
    write_atomic(&config.out_dir.join(MANIFEST), text.as_bytes())
}
