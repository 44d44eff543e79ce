//! Fully resolved run configurations. A manifest holds everything that
//! influences the outputs and nothing else (no output paths, no thread
//! counts, no timestamps), so replaying it reproduces the same files.

use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::{Deserialize, Serialize};

use clusterrec::algorithms::AlgorithmKind;
use clusterrec::eval::{AlgorithmPlan, ProtocolOptions, SweepParam};
use clusterrec::ratings::{IdPolicy, Level, RatingFormat};
use clusterrec::synth::SynthConfig;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub tool: String,
    pub version: String,
    /// Top-level seed every random stream derives from.
    pub seed: Option<u64>,
    pub config: RunConfig,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "command", rename_all = "lowercase")]
pub enum RunConfig {
    Ingest(IngestConfig),
    Synth(SynthRun),
    Run(RunSpec),
    Sweep(SweepSpec),
    Report(ReportSpec),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FileSource {
    pub path: PathBuf,
    pub format: RatingFormat,
    pub ids: IdPolicy,
    pub levels: Option<Level>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IngestConfig {
    pub source: FileSource,
    pub quantize: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SynthRun {
    pub model: SynthConfig,
    pub omega_constant: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum DataSource {
    File(FileSource),
    Synthetic(SynthConfig),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunSpec {
    pub source: DataSource,
    pub plan: AlgorithmPlan,
    pub protocol: ProtocolOptions,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepSpec {
    pub base: SynthConfig,
    pub param: SweepParam,
    pub from: f64,
    pub to: f64,
    pub steps: usize,
    pub trials: usize,
    pub algorithm: AlgorithmKind,
    pub omega_constant: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReportSpec {
    pub run_dir: PathBuf,
}

impl Manifest {
    pub fn new(seed: Option<u64>, config: RunConfig) -> Self {
        Manifest {
            tool: env!("CARGO_PKG_NAME").to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            seed,
            config,
        }
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("cannot read manifest {}", path.display()))?;
        serde_json::from_str(&text).with_context(|| format!("{} is not a valid manifest", path.display()))
    }

    pub fn to_json(&self) -> Result<String> {
        let mut s = serde_json::to_string_pretty(self)?;
        s.push('\n');
        Ok(s)
    }
}
