//! Fixtures and independent reference implementations shared by the
//! integration tests.
#![allow(dead_code)]

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use streambeam::error::ModelError;
use streambeam::harness::{generate_synthetic_corpus, LengthDist};
use streambeam::model::Encoding;
use streambeam::{Beam, Candidate, DecodeConfig, FinalizationPolicy, HashScorer, Scorer, TableScorer, TokenId, Vocabulary};

pub fn ids(xs: &[u32]) -> Vec<TokenId> {
    xs.iter().copied().map(TokenId).collect()
}

pub fn hash_model(vocab_size: usize, seed: u64, eos_bias: f64) -> HashScorer {
    HashScorer::new(Vocabulary::new(vocab_size, TokenId(0), TokenId(1)).unwrap(), seed, eos_bias).unwrap()
}

pub fn geometric_inputs(seed: u64, count: usize, vocab_size: usize, mean: f64) -> Vec<Vec<TokenId>> {
    generate_synthetic_corpus(seed, count, vocab_size, LengthDist::Geometric { mean })
        .unwrap()
        .inputs
}

/// Table scorer from rows of probabilities (converted to logs).
pub fn table_from_probs(vocab: Vocabulary, order: usize, rows: &[(&[u32], &[f64])]) -> TableScorer {
    let rows: BTreeMap<Vec<TokenId>, Vec<f64>> = rows
        .iter()
        .map(|(ctx, probs)| (ids(ctx), probs.iter().map(|p| p.ln()).collect()))
        .collect();
    TableScorer::new(vocab, order, rows, false).unwrap()
}

/// Random bigram table with finite rows; eos gets `eos_mass` of every row.
pub fn random_table(seed: u64, vocab: Vocabulary, eos_mass: f64) -> TableScorer {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut rows = BTreeMap::new();
    for ctx in vocab.tokens().filter(|t| *t != vocab.eos()) {
        let mut weights: Vec<f64> = (0..vocab.size()).map(|_| rng.random_range(1..=8) as f64).collect();
        weights[vocab.eos().index()] = 0.0;
        let total: f64 = weights.iter().sum();
        let row: Vec<f64> = weights
            .iter()
            .enumerate()
            .map(|(i, w)| {
                if i == vocab.eos().index() {
                    eos_mass.ln()
                } else {
                    (w / total * (1.0 - eos_mass)).ln()
                }
            })
            .collect();
        rows.insert(vec![ctx], row);
    }
    TableScorer::new(vocab, 1, rows, true).unwrap()
}

/// Input-dependent scorer over `{0 = sos (also emittable), 1 = a, 2 = eos}`:
/// the input length is the target output length. Below it eos is unlikely;
/// at or beyond it eos dominates, so a width-2 beam finishes in the step that
/// expands length-`target` candidates.
pub struct TargetLengthScorer {
    vocab: Vocabulary,
}

impl TargetLengthScorer {
    pub fn new() -> Self {
        Self {
            vocab: Vocabulary::new(3, TokenId(0), TokenId(2)).unwrap(),
        }
    }
}

impl Scorer for TargetLengthScorer {
    fn vocab(&self) -> &Vocabulary {
        &self.vocab
    }

    fn encode(&self, input_id: usize, tokens: &[TokenId]) -> Result<Encoding, ModelError> {
        Encoding::new(input_id, tokens, &self.vocab, 0)
    }

    fn score_next(&self, encoding: &Encoding, candidate: &Candidate) -> Result<Vec<f64>, ModelError> {
        let target = encoding.input_len;
        let probs: [f64; 3] = if candidate.len() >= target {
            [0.05, 0.05, 0.9]
        } else {
            [0.4, 0.59, 0.01]
        };
        Ok(probs.iter().map(|p| p.ln()).collect())
    }
}

// ── Reference beam step ────────────────────────────────────────────────────
//
// Written from the rule description, without the library's pool, sort, or
// filter helpers.

#[derive(Clone, Copy, Debug)]
struct Entry {
    score: f64,
    parent: usize,
    token: u32,
    retain: bool,
}

fn precedes(a: &Entry, b: &Entry) -> bool {
    if a.score != b.score {
        return a.score > b.score;
    }
    if a.parent != b.parent {
        return a.parent < b.parent;
    }
    a.token < b.token
}

/// Selection sort by rank.
fn ranked(mut entries: Vec<Entry>) -> Vec<Entry> {
    let mut out = Vec::with_capacity(entries.len());
    while !entries.is_empty() {
        let mut best = 0;
        for i in 1..entries.len() {
            if precedes(&entries[i], &entries[best]) {
                best = i;
            }
        }
        out.push(entries.remove(best));
    }
    out
}

fn build(beam: &Beam, rows: &[Vec<f64>], e: &Entry, eos: u32, max_len: usize) -> Candidate {
    let parent = &beam.candidates[e.parent];
    if e.retain {
        return parent.clone();
    }
    let active_rank = (0..e.parent).filter(|&j| !beam.candidates[j].finalized).count();
    let mut tokens = parent.tokens.clone();
    tokens.push(TokenId(e.token));
    let len = tokens.len();
    Candidate {
        tokens,
        score: parent.score + rows[active_rank][e.token as usize],
        finalized: e.token == eos || len >= max_len,
        input_id: parent.input_id,
    }
}

pub fn oracle_expand(beam: &Beam, rows: &[Vec<f64>], cfg: &DecodeConfig, vocab: &Vocabulary) -> (Beam, Vec<Candidate>) {
    let eos = vocab.eos().0;
    let mut entries = Vec::new();
    let mut r = 0;
    for (j, c) in beam.candidates.iter().enumerate() {
        if c.finalized {
            if cfg.policy == FinalizationPolicy::Deferred {
                entries.push(Entry {
                    score: c.score,
                    parent: j,
                    token: c.tokens.last().unwrap().0,
                    retain: true,
                });
            }
        } else {
            for v in 0..vocab.size() {
                entries.push(Entry {
                    score: c.score + rows[r][v],
                    parent: j,
                    token: v as u32,
                    retain: false,
                });
            }
            r += 1;
        }
    }
    let order = ranked(entries);
    let quota = cfg.k - beam.emitted;
    let next_len = beam.l_t + 1;
    let count_from = |chosen: &[Entry], parent: usize| chosen.iter().filter(|c| !c.retain && c.parent == parent).count();

    let (mut kept, mut emitted): (Vec<Entry>, Vec<Entry>) = match cfg.policy {
        FinalizationPolicy::Deferred => {
            let mut chosen: Vec<Entry> = Vec::new();
            for e in &order {
                if chosen.len() == cfg.k {
                    break;
                }
                if e.retain || count_from(&chosen, e.parent) < cfg.max_candidates {
                    chosen.push(*e);
                }
            }
            let top = chosen[0].score;
            chosen.retain(|e| e.score >= top - cfg.delta);
            (chosen, Vec::new())
        }
        FinalizationPolicy::Immediate => {
            let mut out = Vec::new();
            let mut next: Vec<Entry> = Vec::new();
            for e in order.iter().take(2 * cfg.k) {
                if e.token == eos {
                    if out.len() < quota {
                        out.push(*e);
                    }
                } else if next.len() < cfg.k && count_from(&next, e.parent) < cfg.max_candidates {
                    next.push(*e);
                }
            }
            let mut top = f64::NEG_INFINITY;
            for e in out.iter().chain(next.iter()) {
                top = top.max(e.score);
            }
            next.retain(|e| e.score >= top - cfg.delta);
            (next, out)
        }
    };

    if next_len >= cfg.max_len {
        let mut all = emitted.clone();
        all.extend(kept.drain(..));
        let mut all = ranked(all);
        all.truncate(quota);
        emitted = all;
    } else if cfg.policy == FinalizationPolicy::Deferred {
        while emitted.len() < quota && !kept.is_empty() && build(beam, rows, &kept[0], eos, cfg.max_len).finalized {
            emitted.push(kept.remove(0));
        }
    }

    let out: Vec<Candidate> = emitted.iter().map(|e| build(beam, rows, e, eos, cfg.max_len)).collect();
    let total = beam.emitted + out.len();
    let candidates = if total >= cfg.k {
        Vec::new()
    } else {
        kept.iter().map(|e| build(beam, rows, e, eos, cfg.max_len)).collect()
    };
    (
        Beam {
            input_id: beam.input_id,
            candidates,
            l_t: next_len,
            emitted: total,
        },
        out,
    )
}

/// Beam search driven by [`oracle_expand`], materializing every pool.
pub fn oracle_beam_decode<S: Scorer>(scorer: &S, enc: &Encoding, cfg: &DecodeConfig) -> Vec<Candidate> {
    let vocab = *scorer.vocab();
    let mut beam = Beam::initial(&vocab, enc.input_id);
    let mut out = Vec::new();
    while !beam.candidates.is_empty() {
        let rows: Vec<Vec<f64>> = beam
            .candidates
            .iter()
            .filter(|c| !c.finalized)
            .map(|c| scorer.score_next(enc, c).unwrap())
            .collect();
        let (next, emitted) = oracle_expand(&beam, &rows, cfg, &vocab);
        out.extend(emitted);
        beam = next;
    }
    out
}

/// A random but well-formed beam state plus score rows, for small
/// vocabularies and beam widths.
pub struct RandomCase {
    pub beam: Beam,
    pub rows: Vec<Vec<f64>>,
    pub config: DecodeConfig,
    pub vocab: Vocabulary,
}

pub fn random_case(rng: &mut ChaCha8Rng) -> RandomCase {
    let k = rng.random_range(1..=3);
    let vocab_size = rng.random_range(2..=4);
    let sos = rng.random_range(0..vocab_size as u32);
    let eos = (sos + rng.random_range(1..vocab_size as u32)) % vocab_size as u32;
    let vocab = Vocabulary::new(vocab_size, TokenId(sos), TokenId(eos)).unwrap();
    let max_len = rng.random_range(2..=5);
    let policy = if rng.random_bool(0.5) {
        FinalizationPolicy::Deferred
    } else {
        FinalizationPolicy::Immediate
    };
    let delta = if rng.random_bool(0.3) {
        f64::INFINITY
    } else {
        rng.random_range(0..=12) as f64 / 4.0
    };
    let config = DecodeConfig {
        k,
        n: 1,
        delta,
        max_candidates: rng.random_range(1..=k),
        max_len,
        policy,
        ..DecodeConfig::default()
    };

    let l_t = rng.random_range(1..max_len);
    let emitted = rng.random_range(0..k);
    let width = rng.random_range(1..=k);
    let non_eos: Vec<u32> = (0..vocab_size as u32).filter(|t| *t != eos).collect();
    // Quarter steps so ties are frequent.
    let coarse = |rng: &mut ChaCha8Rng| -(rng.random_range(0..=16) as f64) / 4.0;
    let mut candidates: Vec<Candidate> = (0..width)
        .map(|i| {
            let finalized = policy == FinalizationPolicy::Deferred && l_t > 1 && i > 0 && rng.random_bool(0.35);
            let len = if finalized { rng.random_range(2..=l_t) } else { l_t };
            let mut tokens = vec![TokenId(sos)];
            while tokens.len() < len {
                tokens.push(TokenId(non_eos[rng.random_range(0..non_eos.len())]));
            }
            if finalized {
                *tokens.last_mut().unwrap() = TokenId(eos);
            }
            Candidate {
                tokens,
                score: coarse(rng) - l_t as f64,
                finalized,
                input_id: 0,
            }
        })
        .collect();
    // Rank-1 must be active after a step; keep the beam ordered by score.
    candidates.sort_by(|a, b| b.score.total_cmp(&a.score));
    if candidates[0].finalized {
        candidates[0].finalized = false;
        candidates[0].tokens = std::iter::once(TokenId(sos))
            .chain((1..l_t).map(|_| TokenId(non_eos[0])))
            .collect();
    }
    let rows = candidates
        .iter()
        .filter(|c| !c.finalized)
        .map(|_| (0..vocab_size).map(|_| coarse(rng)).collect())
        .collect();
    RandomCase {
        beam: Beam {
            input_id: 0,
            candidates,
            l_t,
            emitted,
        },
        rows,
        config,
        vocab,
    }
}
