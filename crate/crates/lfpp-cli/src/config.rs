//! Run configuration file: a single TOML document with one section per
//! subcommand. Command-line flags override file values; seeds are never
//! defaulted silently.

use anyhow::{bail, Context, Result};
use serde::Deserialize;
use std::path::Path;

pub const CONFIG_SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub schema_version: Option<u32>,
    #[serde(default)]
    pub sample: SampleSection,
    #[serde(default)]
    pub couple: CoupleSection,
    #[serde(default)]
    pub dist: DistSection,
    #[serde(default)]
    pub compare: CompareSection,
    #[serde(default)]
    pub exponent: ExponentSection,
    #[serde(default)]
    pub levelset: LevelsetSection,
    #[serde(default)]
    pub report: ReportSection,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SampleSection {
    pub n: Option<u32>,
    pub seed: Option<u64>,
    pub out: Option<String>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CoupleSection {
    pub n: Option<u32>,
    pub m: Option<u32>,
    pub seed: Option<u64>,
    pub mode: Option<String>,
    pub tolerance: Option<f64>,
    pub out_prefix: Option<String>,
    pub region: Option<String>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DistSection {
    pub kind: Option<String>,
    pub xi: Option<f64>,
    pub field: Option<String>,
    pub coupling: Option<String>,
    pub region: Option<String>,
    pub out: Option<String>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CompareSection {
    pub coupling: Option<String>,
    pub n: Option<u32>,
    pub m: Option<u32>,
    pub seed: Option<u64>,
    pub pairs: Option<usize>,
    pub xi: Option<f64>,
    pub region: Option<String>,
    pub out: Option<String>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExponentSection {
    pub xi: Option<f64>,
    pub ladder: Option<Vec<u32>>,
    pub reps: Option<u32>,
    pub seed: Option<u64>,
    pub out_csv: Option<String>,
    pub out_json: Option<String>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LevelsetSection {
    pub n: Option<u32>,
    pub chi: Option<f64>,
    pub xi: Option<f64>,
    pub seed: Option<u64>,
    pub samples: Option<u32>,
    pub out_csv: Option<String>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReportSection {
    pub xi: Option<f64>,
    pub ladder: Option<Vec<u32>>,
    pub reps: Option<u32>,
    pub seed: Option<u64>,
    pub chi: Option<f64>,
    pub levelset_samples: Option<u32>,
    pub out_csv: Option<String>,
    pub out_json: Option<String>,
}

pub fn load(path: Option<&Path>) -> Result<FileConfig> {
    let Some(path) = path else {
        return Ok(FileConfig::default());
    };
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("reading config {}", path.display()))?;
    let cfg: FileConfig =
        toml::from_str(&text).with_context(|| format!("parsing config {}", path.display()))?;
    let version = cfg.schema_version.unwrap_or(CONFIG_SCHEMA_VERSION);
    if version != CONFIG_SCHEMA_VERSION {
        bail!(
            "config schema version {version} not supported (expected {CONFIG_SCHEMA_VERSION}); \
             refusing to guess at its meaning"
        );
    }
    Ok(cfg)
}

/// Flag value wins over config value; error when neither is present.
pub fn require<T>(flag: Option<T>, file: Option<T>, name: &str) -> Result<T> {
    flag.or(file)
        .with_context(|| format!("missing required parameter --{name} (not in config either)"))
}

pub fn prefer<T>(flag: Option<T>, file: Option<T>, default: T) -> T {
    flag.or(file).unwrap_or(default)
}
