use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Geometric};
use serde::{Deserialize, Serialize};

use crate::error::{ConfigError, CorpusError, Error};
use crate::types::TokenId;

/// Ordered inputs `x_1 .. x_N`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Corpus {
    pub inputs: Vec<Vec<TokenId>>,
}

impl Corpus {
    pub fn len(&self) -> usize {
        self.inputs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.inputs.is_empty()
    }

    /// One input per line, tokens separated by whitespace.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for input in &self.inputs {
            let line: Vec<String> = input.iter().map(|t| t.to_string()).collect();
            out.push_str(&line.join(" "));
            out.push('\n');
        }
        out
    }
}

pub fn parse_corpus(text: &str) -> Result<Corpus, CorpusError> {
    let mut inputs = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let tokens = line
            .split_whitespace()
            .map(|t| {
                t.parse::<u32>().map(TokenId).map_err(|_| CorpusError::Parse {
                    line: i + 1,
                    reason: format!("`{t}` is not a non-negative integer token id"),
                })
            })
            .collect::<Result<Vec<_>, _>>()?;
        if tokens.is_empty() {
            return Err(CorpusError::Parse {
                line: i + 1,
                reason: "empty input".into(),
            });
        }
        inputs.push(tokens);
    }
    if inputs.is_empty() {
        return Err(CorpusError::Empty);
    }
    Ok(Corpus { inputs })
}

pub fn load_corpus(path: &Path) -> Result<Corpus, Error> {
    let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.to_owned(),
        source,
    })?;
    parse_corpus(&text).map_err(|source| Error::Corpus {
        path: path.to_owned(),
        source,
    })
}

/// Stable sort by length, longest first. `permutation[p]` is the original
/// index of the input now at position `p`.
pub fn bucket_by_length(corpus: &Corpus) -> (Corpus, Vec<usize>) {
    let mut permutation: Vec<usize> = (0..corpus.len()).collect();
    permutation.sort_by_key(|&i| std::cmp::Reverse(corpus.inputs[i].len()));
    let inputs = permutation.iter().map(|&i| corpus.inputs[i].clone()).collect();
    (Corpus { inputs }, permutation)
}

/// Input length distribution for synthetic corpora.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum LengthDist {
    /// `1 + Geometric(1 / mean)`, support `1..`, mean `mean`.
    Geometric { mean: f64 },
    /// Uniform over `min..=max`.
    Uniform { min: usize, max: usize },
}

impl LengthDist {
    pub fn validate(&self) -> Result<(), ConfigError> {
        match *self {
            LengthDist::Geometric { mean } if !(mean >= 1.0 && mean.is_finite()) => {
                Err(ConfigError::new("length.mean", format!("{mean} is not a finite mean >= 1")))
            }
            LengthDist::Uniform { min, max } if min == 0 || min > max => Err(ConfigError::new(
                "length",
                format!("uniform range [{min}, {max}] must satisfy 1 <= min <= max"),
            )),
            _ => Ok(()),
        }
    }
}

/// Deterministic corpus of `count` inputs with tokens uniform over the vocabulary.
pub fn generate_synthetic_corpus(
    seed: u64,
    count: usize,
    vocab_size: usize,
    lengths: LengthDist,
) -> Result<Corpus, ConfigError> {
    if count == 0 {
        return Err(ConfigError::new("num_inputs", "must be at least 1"));
    }
    if vocab_size == 0 {
        return Err(ConfigError::new("vocab_size", "must be at least 1"));
    }
    lengths.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let geometric = match lengths {
        LengthDist::Geometric { mean } => Some(
            Geometric::new(1.0 / mean).map_err(|e| ConfigError::new("length.mean", e.to_string()))?,
        ),
        LengthDist::Uniform { .. } => None,
    };
    let inputs = (0..count)
        .map(|_| {
            let len = match (lengths, &geometric) {
                (LengthDist::Geometric { .. }, Some(g)) => 1 + g.sample(&mut rng) as usize,
                (LengthDist::Uniform { min, max }, _) => rng.random_range(min..=max),
                _ => unreachable!(),
            };
            (0..len)
                .map(|_| TokenId(rng.random_range(0..vocab_size as u32)))
                .collect()
        })
        .collect();
    Ok(Corpus { inputs })
}
