//! Configuration files, run manifests and output bookkeeping.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use anyhow::{bail, Context, Result};
use clap::ValueEnum;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

/// Subcommand names, also accepted as section names in config files.
pub const SUBCOMMANDS: [&str; 6] = ["effective-channel", "guess-prob", "attack-cost", "ber", "ber-sweep-l", "key"];

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Csv,
    Json,
}

impl Format {
    pub fn extension(self) -> &'static str {
        match self {
            Format::Csv => "csv",
            Format::Json => "json",
        }
    }
}

/// Written next to every set of outputs; accepted back as `--config`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RunManifest {
    pub subcommand: String,
    pub tool_version: String,
    pub master_seed: u64,
    pub format: Format,
    pub config: serde_json::Value,
    pub outputs: Vec<PathBuf>,
    pub started_unix_ms: u64,
    pub finished_unix_ms: u64,
}

impl RunManifest {
    pub fn file_name(subcommand: &str) -> String {
        format!("{subcommand}.manifest.json")
    }
}

pub fn unix_ms() -> u64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_millis() as u64)
        .unwrap_or(0)
}

fn parse_document(path: &Path) -> Result<serde_json::Value> {
    let text = fs::read_to_string(path).with_context(|| format!("cannot read config {}", path.display()))?;
    let is_json = path.extension().is_some_and(|e| e.eq_ignore_ascii_case("json"));
    if is_json {
        serde_json::from_str(&text).with_context(|| format!("invalid JSON in {}", path.display()))
    } else {
        toml::from_str(&text).with_context(|| format!("invalid TOML in {}", path.display()))
    }
}

/// Settings for `subcommand` from a config file or manifest, layered over
/// the defaults of `T`. Returns the format recorded in a manifest, if any.
pub fn load<T: DeserializeOwned + Default>(path: Option<&Path>, subcommand: &str) -> Result<(T, Option<Format>)> {
    let Some(path) = path else {
        return Ok((T::default(), None));
    };
    let doc = parse_document(path)?;
    let obj = doc
        .as_object()
        .with_context(|| format!("config {} must be a table/object", path.display()))?;

    let (section, format) = if obj.contains_key("tool_version") && obj.contains_key("config") {
        let manifest: RunManifest =
            serde_json::from_value(doc.clone()).with_context(|| format!("invalid manifest {}", path.display()))?;
        if manifest.subcommand != subcommand {
            bail!(
                "manifest {} was written by '{}', not '{subcommand}'",
                path.display(),
                manifest.subcommand
            );
        }
        (manifest.config, Some(manifest.format))
    } else if obj.keys().any(|k| SUBCOMMANDS.contains(&k.as_str())) {
        (obj.get(subcommand).cloned().unwrap_or_else(|| serde_json::json!({})), None)
    } else {
        (doc, None)
    };
    let cfg = serde_json::from_value(section)
        .with_context(|| format!("invalid '{subcommand}' settings in {}", path.display()))?;
    Ok((cfg, format))
}

/// Output directory plus the list of files written so far.
pub struct Outputs {
    dir: PathBuf,
    written: Vec<PathBuf>,
}

impl Outputs {
    pub fn new(dir: &Path) -> Result<Self> {
        fs::create_dir_all(dir).with_context(|| format!("cannot create output directory {}", dir.display()))?;
        Ok(Self {
            dir: dir.to_path_buf(),
            written: Vec::new(),
        })
    }

    pub fn write(&mut self, name: &str, contents: &[u8]) -> Result<PathBuf> {
        let path = self.dir.join(name);
        fs::write(&path, contents).with_context(|| format!("cannot write {}", path.display()))?;
        self.written.push(path.clone());
        Ok(path)
    }

    pub fn files(&self) -> &[PathBuf] {
        &self.written
    }

    /// Writes the manifest describing this run and returns its path.
    pub fn finish<C: Serialize>(
        self,
        subcommand: &str,
        config: &C,
        master_seed: u64,
        format: Format,
        started_unix_ms: u64,
    ) -> Result<PathBuf> {
        let manifest = RunManifest {
            subcommand: subcommand.to_string(),
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            master_seed,
            format,
            config: serde_json::to_value(config)?,
            outputs: self.written,
            started_unix_ms,
            finished_unix_ms: unix_ms(),
        };
        let path = self.dir.join(RunManifest::file_name(subcommand));
        fs::write(&path, serde_json::to_string_pretty(&manifest)?)
            .with_context(|| format!("cannot write {}", path.display()))?;
        Ok(path)
    }
}
