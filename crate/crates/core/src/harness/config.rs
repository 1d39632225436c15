use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{ConfigError, Error};
use crate::model::ModelSpec;
use crate::types::DecodeConfig;

use super::corpus::LengthDist;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EngineName {
    Greedy,
    Fixed,
    VarBeam,
    VarStream,
    VarFifo,
    FixedStream,
}

impl EngineName {
    pub const ALL: [EngineName; 6] = [
        EngineName::Greedy,
        EngineName::Fixed,
        EngineName::VarBeam,
        EngineName::VarStream,
        EngineName::VarFifo,
        EngineName::FixedStream,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            EngineName::Greedy => "greedy",
            EngineName::Fixed => "fixed",
            EngineName::VarBeam => "varbeam",
            EngineName::VarStream => "varstream",
            EngineName::VarFifo => "varfifo",
            EngineName::FixedStream => "fixedstream",
        }
    }

    /// Engines that run without pruning.
    pub fn requires_fixed_width(self) -> bool {
        matches!(self, EngineName::Fixed | EngineName::FixedStream)
    }
}

impl fmt::Display for EngineName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for EngineName {
    type Err = ConfigError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        EngineName::ALL
            .into_iter()
            .find(|e| e.as_str() == s)
            .ok_or_else(|| {
                let names: Vec<&str> = EngineName::ALL.iter().map(|e| e.as_str()).collect();
                ConfigError::new("engine", format!("unknown engine `{s}` (expected one of {})", names.join(", ")))
            })
    }
}

/// A model file path, or the model spec inline.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ModelSource {
    Path(PathBuf),
    Inline(ModelSpec),
}

impl ModelSource {
    pub fn resolve(&self, base: Option<&Path>) -> Result<ModelSpec, Error> {
        match self {
            ModelSource::Inline(spec) => Ok(spec.clone()),
            ModelSource::Path(p) => ModelSpec::load(&resolve_path(base, p)),
        }
    }
}

/// A corpus file path, or parameters for a synthetic corpus.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum CorpusSource {
    Path(PathBuf),
    Synthetic { num_inputs: usize, length: LengthDist },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub engine: EngineName,
    pub model: ModelSource,
    pub corpus: CorpusSource,
    #[serde(default)]
    pub decode: DecodeConfig,
    /// Results document destination.
    #[serde(default)]
    pub output: Option<PathBuf>,
    /// Record a per-step trace (written as CSV next to `output`).
    #[serde(default)]
    pub trace: bool,
    /// Seed for synthetic corpus generation.
    #[serde(default)]
    pub seed: u64,
    /// Sort inputs by length before batching.
    #[serde(default = "default_true")]
    pub bucket: bool,
}

fn default_true() -> bool {
    true
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self, Error> {
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.to_owned(),
            source,
        })?;
        serde_json::from_str(&text).map_err(|source| Error::Json {
            path: path.to_owned(),
            source,
        })
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        self.decode.validate()?;
        if self.engine.requires_fixed_width() {
            if self.decode.delta != f64::INFINITY {
                return Err(ConfigError::new(
                    "delta",
                    format!("engine `{}` runs without pruning; delta must be inf, got {}", self.engine, self.decode.delta),
                ));
            }
            if self.decode.max_candidates != self.decode.k {
                return Err(ConfigError::new(
                    "max_candidates",
                    format!(
                        "engine `{}` runs without pruning; max_candidates must equal k = {}, got {}",
                        self.engine, self.decode.k, self.decode.max_candidates
                    ),
                ));
            }
        }
        if let CorpusSource::Synthetic { num_inputs, length } = &self.corpus {
            if *num_inputs == 0 {
                return Err(ConfigError::new("corpus.num_inputs", "must be at least 1"));
            }
            length.validate()?;
        }
        Ok(())
    }

    /// Where the trace CSV goes: `<output stem>.trace.csv`.
    pub fn trace_path(&self) -> Option<PathBuf> {
        let out = self.output.as_ref()?;
        Some(out.with_extension("trace.csv"))
    }
}

pub(crate) fn resolve_path(base: Option<&Path>, p: &Path) -> PathBuf {
    match base {
        Some(dir) if p.is_relative() => dir.join(p),
        _ => p.to_owned(),
    }
}
