//! Beam pruning heuristics: the per-parent candidate cap and the absolute
//! score threshold, composed into the variable-width beam selection.
//!
//! Composition order is fixed: the pool is ranked, the cap is applied while
//! scanning for the `k` best proposals, then the threshold prunes the
//! selected beam relative to its rank-1 entry. The rank-1 entry may be a
//! finalized candidate carried over from an earlier step.

use serde::{Deserialize, Serialize};

use crate::types::{sort_pool, Candidate, Origin, Proposal};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HeuristicConfig {
    /// Absolute threshold. `f64::INFINITY` disables it.
    pub delta: f64,
    /// Max proposals accepted from one parent per step.
    pub max_candidates: usize,
}

impl HeuristicConfig {
    /// Both heuristics disabled for beam width `k`.
    pub fn disabled(k: usize) -> Self {
        Self {
            delta: f64::INFINITY,
            max_candidates: k,
        }
    }
}

/// Anything carrying a cumulative score.
pub trait Scored {
    fn score(&self) -> f64;
}

impl Scored for Proposal {
    fn score(&self) -> f64 {
        self.score
    }
}

impl Scored for Candidate {
    fn score(&self) -> f64 {
        self.score
    }
}

/// Scans a rank-ordered pool, accepting a proposal only while its parent has
/// fewer than `max_candidates` accepted proposals. Retained (no-op) proposals
/// are exempt from the cap. Stops after `k` acceptances.
pub fn max_candidates_filter(pool: &[Proposal], max_candidates: usize, k: usize) -> Vec<Proposal> {
    let mut per_parent: Vec<usize> = Vec::new();
    let mut accepted = Vec::with_capacity(k.min(pool.len()));
    for p in pool {
        if accepted.len() == k {
            break;
        }
        if p.origin == Origin::Extend {
            if per_parent.len() <= p.parent {
                per_parent.resize(p.parent + 1, 0);
            }
            if per_parent[p.parent] >= max_candidates {
                continue;
            }
            per_parent[p.parent] += 1;
        }
        accepted.push(*p);
    }
    accepted
}

/// Keeps exactly the items scoring at least `best_score - delta`.
pub fn absolute_threshold_filter<T: Scored>(items: Vec<T>, delta: f64, best_score: f64) -> Vec<T> {
    if delta == f64::INFINITY {
        return items;
    }
    let floor = best_score - delta;
    items.into_iter().filter(|c| c.score() >= floor).collect()
}

/// Prunes one beam's full expansion pool into the next beam: rank, cap per
/// parent while taking the top `k`, then threshold against the rank-1 score.
///
/// The result is in rank order and holds between 1 and `k` proposals for a
/// nonempty pool.
pub fn apply_heuristics(mut pool: Vec<Proposal>, config: &HeuristicConfig, k: usize) -> Vec<Proposal> {
    sort_pool(&mut pool);
    let selected = max_candidates_filter(&pool, config.max_candidates, k);
    match selected.first() {
        Some(best) => {
            let best = best.score;
            absolute_threshold_filter(selected, config.delta, best)
        }
        None => selected,
    }
}
