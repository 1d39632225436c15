use crate::error::{ConfigError, ModelError};
use crate::types::{Candidate, TokenId, Vocabulary};

use super::ngram::log_sum_exp;
use super::{Encoding, Scorer};

/// Raw logits are spread uniformly over `[0, LOGIT_SPREAD)` before the eos shift.
const LOGIT_SPREAD: f64 = 4.0;

/// SplitMix64 finalizer.
pub fn mix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Deterministic pseudo-random scorer.
///
/// Logits are hashed from `(encoding seed, candidate tokens, next token)`. The
/// eos logit is shifted by `eos_bias * (len(candidate) / len(input) - 1)`: it
/// starts `eos_bias` below the other tokens and overtakes them once the
/// candidate outgrows the input, so output length tracks input length. Rows
/// are log-softmax normalized.
#[derive(Debug, Clone)]
pub struct HashScorer {
    vocab: Vocabulary,
    seed: u64,
    eos_bias: f64,
}

impl HashScorer {
    pub fn new(vocab: Vocabulary, seed: u64, eos_bias: f64) -> Result<Self, ConfigError> {
        if !eos_bias.is_finite() {
            return Err(ConfigError::new("eos_bias", "must be finite"));
        }
        Ok(Self { vocab, seed, eos_bias })
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn eos_bias(&self) -> f64 {
        self.eos_bias
    }
}

impl Scorer for HashScorer {
    fn vocab(&self) -> &Vocabulary {
        &self.vocab
    }

    fn encode(&self, input_id: usize, tokens: &[TokenId]) -> Result<Encoding, ModelError> {
        Encoding::new(input_id, tokens, &self.vocab, self.seed)
    }

    fn score_next(&self, encoding: &Encoding, candidate: &Candidate) -> Result<Vec<f64>, ModelError> {
        let prefix = candidate
            .tokens
            .iter()
            .fold(encoding.seed, |h, t| mix64(h ^ (u64::from(t.0) + 1)));
        let mut row: Vec<f64> = (0..self.vocab.size() as u64)
            .map(|v| {
                let h = mix64(prefix ^ (v + 1).wrapping_mul(0xD6E8_FEB8_6659_FD93));
                LOGIT_SPREAD * ((h >> 11) as f64 / (1u64 << 53) as f64)
            })
            .collect();
        row[self.vocab.eos().index()] +=
            self.eos_bias * (candidate.len() as f64 / encoding.input_len as f64 - 1.0);
        let lse = log_sum_exp(&row);
        row.iter_mut().for_each(|x| *x -= lse);
        Ok(row)
    }
}
