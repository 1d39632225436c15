//! Domain types shared by every engine: tokens, candidates, beams, the decode
//! configuration, and the deterministic top-k selection over expansion pools.

use std::cmp::Ordering;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{ConfigError, SearchError};
use crate::heuristics::HeuristicConfig;
use crate::model::CostParams;

/// Index into the vocabulary.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct TokenId(pub u32);

impl TokenId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl fmt::Display for TokenId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Vocabulary {
    size: usize,
    sos: TokenId,
    eos: TokenId,
}

impl Vocabulary {
    pub fn new(size: usize, sos: TokenId, eos: TokenId) -> Result<Self, ConfigError> {
        if size < 2 {
            return Err(ConfigError::new("vocab_size", "must be at least 2"));
        }
        if sos.index() >= size {
            return Err(ConfigError::new("sos", format!("{sos} is not below vocab_size {size}")));
        }
        if eos.index() >= size {
            return Err(ConfigError::new("eos", format!("{eos} is not below vocab_size {size}")));
        }
        if sos == eos {
            return Err(ConfigError::new("eos", "must differ from sos"));
        }
        Ok(Self { size, sos, eos })
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn sos(&self) -> TokenId {
        self.sos
    }

    pub fn eos(&self) -> TokenId {
        self.eos
    }

    pub fn contains(&self, token: TokenId) -> bool {
        token.index() < self.size
    }

    pub fn tokens(&self) -> impl Iterator<Item = TokenId> {
        (0..self.size as u32).map(TokenId)
    }
}

/// A partial or finalized output sequence with its cumulative log-probability.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Candidate {
    pub tokens: Vec<TokenId>,
    pub score: f64,
    pub finalized: bool,
    pub input_id: usize,
}

impl Candidate {
    /// The initial candidate `[sos]` with score 0.
    pub fn start(vocab: &Vocabulary, input_id: usize) -> Self {
        Self {
            tokens: vec![vocab.sos()],
            score: 0.0,
            finalized: false,
            input_id,
        }
    }

    /// Appends `token` with log-probability `logp`. The result is finalized
    /// when `token` is `eos` or its length reaches `max_len`.
    ///
    /// Panics if `self` is already finalized.
    #[must_use]
    pub fn extend(&self, token: TokenId, logp: f64, eos: TokenId, max_len: usize) -> Self {
        assert!(
            !self.finalized,
            "extend called on a finalized candidate (input {})",
            self.input_id
        );
        let mut tokens = Vec::with_capacity(self.tokens.len() + 1);
        tokens.extend_from_slice(&self.tokens);
        tokens.push(token);
        let finalized = token == eos || tokens.len() >= max_len;
        Self {
            tokens,
            score: self.score + logp,
            finalized,
            input_id: self.input_id,
        }
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn last_token(&self) -> TokenId {
        *self.tokens.last().expect("candidate always holds sos")
    }
}

/// Where an expansion proposal comes from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Origin {
    /// One-token extension of an active candidate.
    Extend,
    /// No-op carry-over of a finalized candidate kept on the beam.
    Retain,
}

/// A scored entry of a beam's expansion pool. `parent` is the position of the
/// source candidate within the beam's ordered candidate list.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Proposal {
    pub parent: usize,
    pub token: TokenId,
    pub score: f64,
    pub origin: Origin,
}

impl Proposal {
    pub fn extend(parent: usize, token: TokenId, score: f64) -> Self {
        Self {
            parent,
            token,
            score,
            origin: Origin::Extend,
        }
    }

    pub fn retain(parent: usize, last_token: TokenId, score: f64) -> Self {
        Self {
            parent,
            token: last_token,
            score,
            origin: Origin::Retain,
        }
    }
}

/// Rank order over proposals: score descending, then lower parent, then lower token.
pub fn rank_order(a: &Proposal, b: &Proposal) -> Ordering {
    b.score
        .total_cmp(&a.score)
        .then(a.parent.cmp(&b.parent))
        .then(a.token.cmp(&b.token))
}

/// Sorts `pool` into rank order.
pub fn sort_pool(pool: &mut [Proposal]) {
    pool.sort_unstable_by(rank_order);
}

/// Returns the `min(k, |pool|)` best proposals in rank order.
pub fn top_k_select(pool: &[Proposal], k: usize) -> Result<Vec<Proposal>, SearchError> {
    if pool.is_empty() {
        return Err(SearchError::EmptyPool);
    }
    let mut ranked = pool.to_vec();
    if k < ranked.len() && k > 0 {
        ranked.select_nth_unstable_by(k - 1, rank_order);
    }
    ranked.truncate(k);
    sort_pool(&mut ranked);
    Ok(ranked)
}

/// The per-input set of candidates at a common length `l_t`.
#[derive(Debug, Clone, PartialEq)]
pub struct Beam {
    pub input_id: usize,
    /// Rank order: score descending, ties in selection order.
    pub candidates: Vec<Candidate>,
    pub l_t: usize,
    /// Candidates already emitted to final outputs.
    pub emitted: usize,
}

impl Beam {
    /// Width-1 beam holding `[sos]` at `l_t = 1`.
    pub fn initial(vocab: &Vocabulary, input_id: usize) -> Self {
        Self {
            input_id,
            candidates: vec![Candidate::start(vocab, input_id)],
            l_t: 1,
            emitted: 0,
        }
    }

    /// Number of candidates that will be scored when this beam is expanded.
    pub fn active_width(&self) -> usize {
        self.candidates.iter().filter(|c| !c.finalized).count()
    }

    pub fn is_terminated(&self) -> bool {
        self.candidates.is_empty()
    }

    pub fn active(&self) -> impl Iterator<Item = &Candidate> {
        self.candidates.iter().filter(|c| !c.finalized)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FinalizationPolicy {
    /// End-token expansions go to the outputs the step they appear.
    Immediate,
    /// Finalized candidates stay on the beam and are emitted once they rank first.
    #[default]
    Deferred,
}

impl std::str::FromStr for FinalizationPolicy {
    type Err = ConfigError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "immediate" => Ok(Self::Immediate),
            "deferred" => Ok(Self::Deferred),
            other => Err(ConfigError::new(
                "policy",
                format!("expected `immediate` or `deferred`, got `{other}`"),
            )),
        }
    }
}

/// Search hyperparameters shared by every engine.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DecodeConfig {
    /// Beam width.
    pub k: usize,
    /// Batch size in beams.
    pub n: usize,
    /// Refill threshold as a fraction of `n`.
    pub epsilon: f64,
    /// Absolute pruning threshold; `+inf` disables it.
    #[serde(with = "serde_delta")]
    pub delta: f64,
    /// Max candidates per parent; `k` disables the cap.
    pub max_candidates: usize,
    pub max_len: usize,
    pub policy: FinalizationPolicy,
    /// Max candidate expansions per timestep, `n * k` when unset.
    pub capacity: Option<usize>,
    /// Every this many timesteps, run all live beams to completion.
    pub flush_interval: Option<usize>,
    pub cost_c0: f64,
    pub cost_c1: f64,
}

impl Default for DecodeConfig {
    fn default() -> Self {
        Self {
            k: 5,
            n: 16,
            epsilon: 1.0 / 6.0,
            delta: 1.5,
            max_candidates: 3,
            max_len: 64,
            policy: FinalizationPolicy::Deferred,
            capacity: None,
            flush_interval: None,
            cost_c0: 1.0,
            cost_c1: 1.0,
        }
    }
}

impl DecodeConfig {
    pub fn capacity(&self) -> usize {
        self.capacity.unwrap_or(self.n * self.k)
    }

    pub fn heuristics(&self) -> HeuristicConfig {
        HeuristicConfig {
            delta: self.delta,
            max_candidates: self.max_candidates,
        }
    }

    pub fn cost_params(&self) -> CostParams {
        CostParams {
            c0: self.cost_c0,
            c1: self.cost_c1,
        }
    }

    /// True when neither pruning heuristic can bind.
    pub fn is_fixed_width(&self) -> bool {
        self.delta == f64::INFINITY && self.max_candidates == self.k
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.k == 0 {
            return Err(ConfigError::new("k", "must be at least 1"));
        }
        if self.n == 0 {
            return Err(ConfigError::new("n", "must be at least 1"));
        }
        if !(self.epsilon > 0.0 && self.epsilon < 1.0) {
            return Err(ConfigError::new(
                "epsilon",
                format!("{} is not in (0, 1)", self.epsilon),
            ));
        }
        if self.delta.is_nan() || self.delta < 0.0 {
            return Err(ConfigError::new(
                "delta",
                format!("{} is not a non-negative threshold", self.delta),
            ));
        }
        if self.max_candidates == 0 || self.max_candidates > self.k {
            return Err(ConfigError::new(
                "max_candidates",
                format!("{} is not in [1, k = {}]", self.max_candidates, self.k),
            ));
        }
        if self.max_len < 2 {
            return Err(ConfigError::new("max_len", "must be at least 2"));
        }
        if self.capacity() < self.k {
            return Err(ConfigError::new(
                "capacity",
                format!("{} is below k = {}", self.capacity(), self.k),
            ));
        }
        if self.flush_interval == Some(0) {
            return Err(ConfigError::new("flush_interval", "must be at least 1"));
        }
        self.cost_params()
            .validate()
            .map_err(|reason| ConfigError::new("cost_c0", reason))?;
        Ok(())
    }
}

/// `delta` as a JSON number, or the string `"inf"` when disabled.
pub(crate) mod serde_delta {
    use serde::de::{self, Deserializer, Visitor};
    use serde::Serializer;
    use std::fmt;

    pub fn serialize<S: Serializer>(value: &f64, s: S) -> Result<S::Ok, S::Error> {
        if value.is_infinite() && *value > 0.0 {
            s.serialize_str("inf")
        } else {
            s.serialize_f64(*value)
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        struct DeltaVisitor;

        impl Visitor<'_> for DeltaVisitor {
            type Value = f64;

            fn expecting(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str("a non-negative number or \"inf\"")
            }

            fn visit_f64<E: de::Error>(self, v: f64) -> Result<f64, E> {
                Ok(v)
            }

            fn visit_u64<E: de::Error>(self, v: u64) -> Result<f64, E> {
                Ok(v as f64)
            }

            fn visit_i64<E: de::Error>(self, v: i64) -> Result<f64, E> {
                Ok(v as f64)
            }

            fn visit_str<E: de::Error>(self, v: &str) -> Result<f64, E> {
                super::parse_delta(v).map_err(E::custom)
            }

            fn visit_unit<E: de::Error>(self) -> Result<f64, E> {
                Ok(f64::INFINITY)
            }
        }

        d.deserialize_any(DeltaVisitor)
    }
}

/// Parses a threshold: a number, or `inf` / `infinity` / `none` to disable.
pub fn parse_delta(s: &str) -> Result<f64, String> {
    match s.trim().to_ascii_lowercase().as_str() {
        "inf" | "+inf" | "infinity" | "none" => Ok(f64::INFINITY),
        other => other
            .parse::<f64>()
            .map_err(|e| format!("bad delta `{s}`: {e}")),
    }
}
