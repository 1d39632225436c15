//! Scorers (encoder + next-token decoder) and the simulated step-cost model.
//!
//! Two synthetic scorers stand in for trained models: [`TableScorer`], an
//! n-gram table loaded from a model file, and [`HashScorer`], which derives
//! a deterministic distribution from a hash of the input and prefix.

mod cost;
mod hashed;
mod ngram;

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

pub use cost::{step_cost, CostParams};
pub use hashed::{mix64, HashScorer};
pub use ngram::TableScorer;

use crate::error::{Error, ModelError};
use crate::types::{Candidate, TokenId, Vocabulary};

/// Encoder output for one input.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Encoding {
    pub input_id: usize,
    pub tokens: Vec<TokenId>,
    /// Derived from the model seed and the input tokens.
    pub seed: u64,
    pub input_len: usize,
}

impl Encoding {
    /// Validates `tokens` against `vocab` and derives the encoding seed.
    pub fn new(
        input_id: usize,
        tokens: &[TokenId],
        vocab: &Vocabulary,
        model_seed: u64,
    ) -> Result<Self, ModelError> {
        if tokens.is_empty() {
            return Err(ModelError::EmptyInput);
        }
        if let Some((position, token)) = tokens.iter().enumerate().find(|(_, t)| !vocab.contains(**t)) {
            return Err(ModelError::TokenOutOfRange {
                position,
                token: token.0,
                vocab_size: vocab.size(),
            });
        }
        Ok(Self {
            input_id,
            tokens: tokens.to_vec(),
            seed: derive_seed(model_seed, tokens),
            input_len: tokens.len(),
        })
    }
}

/// `mix64` folded over the input tokens (each offset by one), starting from
/// `mix64(model_seed)`.
pub fn derive_seed(model_seed: u64, tokens: &[TokenId]) -> u64 {
    tokens
        .iter()
        .fold(mix64(model_seed), |h, t| mix64(h ^ (u64::from(t.0) + 1)))
}

/// Encoder/decoder pair driving the search engines.
pub trait Scorer {
    fn vocab(&self) -> &Vocabulary;

    fn encode(&self, input_id: usize, tokens: &[TokenId]) -> Result<Encoding, ModelError>;

    /// Log-probabilities over the vocabulary for the token following `candidate`.
    fn score_next(&self, encoding: &Encoding, candidate: &Candidate) -> Result<Vec<f64>, ModelError>;
}

impl<S: Scorer + ?Sized> Scorer for &S {
    fn vocab(&self) -> &Vocabulary {
        (**self).vocab()
    }

    fn encode(&self, input_id: usize, tokens: &[TokenId]) -> Result<Encoding, ModelError> {
        (**self).encode(input_id, tokens)
    }

    fn score_next(&self, encoding: &Encoding, candidate: &Candidate) -> Result<Vec<f64>, ModelError> {
        (**self).score_next(encoding, candidate)
    }
}

/// Model file contents.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ModelSpec {
    NgramTable {
        vocab_size: usize,
        sos: u32,
        eos: u32,
        order: usize,
        /// Space-joined context token ids to a row of log-probabilities.
        table: BTreeMap<String, Vec<f64>>,
        #[serde(default)]
        renormalize: bool,
    },
    SeededHash {
        vocab_size: usize,
        sos: u32,
        eos: u32,
        seed: u64,
        eos_bias: f64,
    },
}

impl ModelSpec {
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

    pub fn build(&self) -> Result<Model, Error> {
        match self {
            ModelSpec::NgramTable {
                vocab_size,
                sos,
                eos,
                order,
                table,
                renormalize,
            } => {
                let vocab = Vocabulary::new(*vocab_size, TokenId(*sos), TokenId(*eos))?;
                let mut rows = BTreeMap::new();
                for (key, row) in table {
                    rows.insert(parse_context(key)?, row.clone());
                }
                Ok(Model::Table(TableScorer::new(vocab, *order, rows, *renormalize)?))
            }
            ModelSpec::SeededHash {
                vocab_size,
                sos,
                eos,
                seed,
                eos_bias,
            } => {
                let vocab = Vocabulary::new(*vocab_size, TokenId(*sos), TokenId(*eos))?;
                Ok(Model::Hash(HashScorer::new(vocab, *seed, *eos_bias)?))
            }
        }
    }

    pub fn vocab_size(&self) -> usize {
        match self {
            ModelSpec::NgramTable { vocab_size, .. } | ModelSpec::SeededHash { vocab_size, .. } => *vocab_size,
        }
    }
}

fn parse_context(key: &str) -> Result<Vec<TokenId>, ModelError> {
    key.split_whitespace()
        .map(|t| {
            t.parse::<u32>()
                .map(TokenId)
                .map_err(|_| ModelError::Format(format!("bad context key `{key}`")))
        })
        .collect()
}

/// A loaded scorer.
#[derive(Debug, Clone)]
pub enum Model {
    Table(TableScorer),
    Hash(HashScorer),
}

impl Scorer for Model {
    fn vocab(&self) -> &Vocabulary {
        match self {
            Model::Table(m) => m.vocab(),
            Model::Hash(m) => m.vocab(),
        }
    }

    fn encode(&self, input_id: usize, tokens: &[TokenId]) -> Result<Encoding, ModelError> {
        match self {
            Model::Table(m) => m.encode(input_id, tokens),
            Model::Hash(m) => m.encode(input_id, tokens),
        }
    }

    fn score_next(&self, encoding: &Encoding, candidate: &Candidate) -> Result<Vec<f64>, ModelError> {
        match self {
            Model::Table(m) => m.score_next(encoding, candidate),
            Model::Hash(m) => m.score_next(encoding, candidate),
        }
    }
}
