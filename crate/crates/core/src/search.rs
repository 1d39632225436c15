//! Unbatched reference engines.
//!
//! [`expand_beam`] is the single beam-update step used by every engine,
//! batched or not; [`beam_decode`] and [`greedy_decode`] drive it (or plain
//! argmax) for one input and serve as the oracle for the schedulers.

use crate::error::{Result, SearchError};
use crate::heuristics::{absolute_threshold_filter, apply_heuristics};
use crate::model::{Encoding, Scorer};
use crate::types::{rank_order, sort_pool, Beam, Candidate, DecodeConfig, Origin, Proposal, Vocabulary};

pub use crate::types::FinalizationPolicy;

/// Extends with the argmax token (lowest id on ties) until eos or `max_len`.
pub fn greedy_decode<S: Scorer + ?Sized>(scorer: &S, encoding: &Encoding, max_len: usize) -> Result<Candidate> {
    let vocab = scorer.vocab();
    let mut candidate = Candidate::start(vocab, encoding.input_id);
    while !candidate.finalized {
        let row = scorer.score_next(encoding, &candidate)?;
        let (best, logp) = row
            .iter()
            .enumerate()
            .fold((0, f64::NEG_INFINITY), |acc, (i, &x)| if x > acc.1 { (i, x) } else { acc });
        candidate = candidate.extend(crate::types::TokenId(best as u32), logp, vocab.eos(), max_len);
    }
    Ok(candidate)
}

/// Scores every active candidate of `beam`, in beam order.
pub fn score_beam<S: Scorer + ?Sized>(scorer: &S, encoding: &Encoding, beam: &Beam) -> Result<Vec<Vec<f64>>> {
    beam.active()
        .map(|c| scorer.score_next(encoding, c).map_err(Into::into))
        .collect()
}

/// Advances `beam` by one token.
///
/// `rows` holds one score vector per active candidate, in beam order.
/// Returns the next beam (empty once the input is done) and the candidates
/// emitted to the final outputs this step, in emission order. When the next
/// length reaches `max_len`, every surviving candidate is finalized and the
/// survivors are emitted in rank order.
///
/// Panics if `beam` has no candidates.
pub fn expand_beam(
    beam: &Beam,
    rows: &[Vec<f64>],
    config: &DecodeConfig,
    vocab: &Vocabulary,
) -> Result<(Beam, Vec<Candidate>), SearchError> {
    assert!(
        !beam.is_terminated(),
        "expand_beam called on a terminated beam (input {})",
        beam.input_id
    );
    let active = beam.active_width();
    if rows.len() != active {
        return Err(SearchError::RowCount {
            expected: active,
            got: rows.len(),
        });
    }
    if let Some(bad) = rows.iter().find(|r| r.len() != vocab.size()) {
        return Err(SearchError::RowWidth {
            expected: vocab.size(),
            got: bad.len(),
        });
    }

    let pool = build_pool(beam, rows, config.policy);
    let quota = config.k.saturating_sub(beam.emitted);
    let next_len = beam.l_t + 1;
    let (mut survivors, mut emitted) = match config.policy {
        FinalizationPolicy::Deferred => {
            let selected = apply_heuristics(pool, &config.heuristics(), config.k);
            (materialize(beam, rows, &selected, vocab, config.max_len), Vec::new())
        }
        FinalizationPolicy::Immediate => immediate_select(beam, rows, pool, config, vocab, quota),
    };

    if next_len >= config.max_len {
        // Everything left is finalized; drain in rank order.
        let mut all: Vec<(Proposal, Candidate)> = emitted.drain(..).chain(survivors.drain(..)).collect();
        all.sort_by(|a, b| rank_order(&a.0, &b.0));
        emitted = all;
        emitted.truncate(quota);
    } else if config.policy == FinalizationPolicy::Deferred {
        let n = survivors
            .iter()
            .take_while(|(_, c)| c.finalized)
            .count()
            .min(quota);
        emitted.extend(survivors.drain(..n));
    }

    let emitted: Vec<Candidate> = emitted.into_iter().map(|(_, c)| c).collect();
    let total_emitted = beam.emitted + emitted.len();
    let candidates = if total_emitted >= config.k {
        Vec::new()
    } else {
        survivors.into_iter().map(|(_, c)| c).collect()
    };
    Ok((
        Beam {
            input_id: beam.input_id,
            candidates,
            l_t: next_len,
            emitted: total_emitted,
        },
        emitted,
    ))
}

/// Every active candidate times every token, plus a no-op proposal per
/// finalized candidate under the deferred policy.
fn build_pool(beam: &Beam, rows: &[Vec<f64>], policy: FinalizationPolicy) -> Vec<Proposal> {
    let mut pool = Vec::with_capacity(rows.len() * rows.first().map_or(0, Vec::len) + beam.candidates.len());
    let mut rows = rows.iter();
    for (j, c) in beam.candidates.iter().enumerate() {
        if c.finalized {
            if policy == FinalizationPolicy::Deferred {
                pool.push(Proposal::retain(j, c.last_token(), c.score));
            }
            continue;
        }
        let row = rows.next().expect("row count checked");
        pool.extend(
            row.iter()
                .enumerate()
                .map(|(v, logp)| Proposal::extend(j, crate::types::TokenId(v as u32), c.score + logp)),
        );
    }
    pool
}

/// Logp of `p` from its parent's score row. Rows are indexed by active rank.
fn logp_of(beam: &Beam, rows: &[Vec<f64>], p: &Proposal) -> f64 {
    let active_rank = beam.candidates[..p.parent].iter().filter(|c| !c.finalized).count();
    rows[active_rank][p.token.index()]
}

fn realize(beam: &Beam, rows: &[Vec<f64>], p: &Proposal, vocab: &Vocabulary, max_len: usize) -> Candidate {
    let parent = &beam.candidates[p.parent];
    match p.origin {
        Origin::Retain => parent.clone(),
        Origin::Extend => parent.extend(p.token, logp_of(beam, rows, p), vocab.eos(), max_len),
    }
}

fn materialize(
    beam: &Beam,
    rows: &[Vec<f64>],
    selected: &[Proposal],
    vocab: &Vocabulary,
    max_len: usize,
) -> Vec<(Proposal, Candidate)> {
    selected
        .iter()
        .map(|p| (*p, realize(beam, rows, p, vocab, max_len)))
        .collect()
}

/// Scan the best `2k` proposals: eos extensions are emitted (within the
/// remaining quota), other extensions fill the next beam up to `k` subject to
/// the per-parent cap. The threshold is then anchored at the better of the
/// best emitted score and the next beam's rank-1 score.
fn immediate_select(
    beam: &Beam,
    rows: &[Vec<f64>],
    mut pool: Vec<Proposal>,
    config: &DecodeConfig,
    vocab: &Vocabulary,
    quota: usize,
) -> (Vec<(Proposal, Candidate)>, Vec<(Proposal, Candidate)>) {
    sort_pool(&mut pool);
    pool.truncate(2 * config.k);
    let mut emitted = Vec::new();
    let mut next: Vec<(Proposal, Candidate)> = Vec::new();
    let mut per_parent = vec![0usize; beam.candidates.len()];
    for p in &pool {
        if p.token == vocab.eos() {
            if emitted.len() < quota {
                emitted.push((*p, realize(beam, rows, p, vocab, config.max_len)));
            }
        } else if next.len() < config.k && per_parent[p.parent] < config.max_candidates {
            per_parent[p.parent] += 1;
            next.push((*p, realize(beam, rows, p, vocab, config.max_len)));
        }
    }
    let anchor = emitted
        .iter()
        .chain(next.iter())
        .map(|(p, _)| p.score)
        .fold(f64::NEG_INFINITY, f64::max);
    let next = absolute_threshold_filter(next, config.delta, anchor);
    (next, emitted)
}

impl crate::heuristics::Scored for (Proposal, Candidate) {
    fn score(&self) -> f64 {
        self.0.score
    }
}

/// Runs [`expand_beam`] from `[sos]` until the beam terminates; returns up to
/// `k` finalized candidates in emission order.
pub fn beam_decode<S: Scorer + ?Sized>(scorer: &S, encoding: &Encoding, config: &DecodeConfig) -> Result<Vec<Candidate>> {
    let vocab = *scorer.vocab();
    let mut beam = Beam::initial(&vocab, encoding.input_id);
    let mut outputs = Vec::new();
    while !beam.is_terminated() {
        let rows = score_beam(scorer, encoding, &beam)?;
        let (next, emitted) = expand_beam(&beam, &rows, config, &vocab)?;
        outputs.extend(emitted);
        beam = next;
    }
    Ok(outputs)
}
