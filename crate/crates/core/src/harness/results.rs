use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::Error;
use crate::metrics::{MetricsSummary, StepRecord};
use crate::types::{Candidate, TokenId};

use super::config::{EngineName, ExperimentConfig};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoredSequence {
    pub tokens: Vec<TokenId>,
    pub score: f64,
}

impl From<&Candidate> for ScoredSequence {
    fn from(c: &Candidate) -> Self {
        Self {
            tokens: c.tokens.clone(),
            score: c.score,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InputRecord {
    pub input_id: usize,
    /// Finalized candidates in emission order.
    pub candidates: Vec<ScoredSequence>,
}

/// Results of one experiment. Records are in corpus order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultsDocument {
    pub engine: EngineName,
    pub metrics: MetricsSummary,
    pub config: ExperimentConfig,
    pub records: Vec<InputRecord>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trace: Option<Vec<StepRecord>>,
}

impl ResultsDocument {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("results serialize")
    }

    pub fn write(&self, path: &Path) -> Result<(), Error> {
        if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
            std::fs::create_dir_all(dir).map_err(|source| Error::Io {
                path: dir.to_owned(),
                source,
            })?;
        }
        std::fs::write(path, self.to_json()).map_err(|source| Error::Io {
            path: path.to_owned(),
            source,
        })
    }

    pub fn read(path: &Path) -> Result<Self, Error> {
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.to_owned(),
            source,
        })?;
        serde_json::from_str(&text).map_err(|source| Error::Json {
            path: path.to_owned(),
            source,
        })
    }
}

/// Writes `timestep,expansions,effective_len,cost` rows.
pub fn write_trace_csv(path: &Path, trace: &[StepRecord]) -> Result<(), Error> {
    let mut w = csv::Writer::from_path(path)?;
    for step in trace {
        w.serialize(step)?;
    }
    w.flush().map_err(|source| Error::Io {
        path: path.to_owned(),
        source,
    })
}

pub fn read_trace_csv(path: &Path) -> Result<Vec<StepRecord>, Error> {
    let mut r = csv::Reader::from_path(path)?;
    r.deserialize().map(|row| row.map_err(Error::from)).collect()
}
