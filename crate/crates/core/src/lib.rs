//! Streaming ("refill") batching for variable-length, variable-width beam
//! search.
//!
//! The crate provides an unbatched reference beam search ([`search`]), the
//! pruning heuristics it uses ([`heuristics`]), three batched schedulers that
//! reproduce its outputs exactly while packing work differently
//! ([`scheduler`]), synthetic scorers and a simulated per-step cost model
//! ([`model`]), run counters ([`metrics`]), and an experiment harness with a
//! CLI front end ([`harness`]).

pub mod error;
pub mod harness;
pub mod heuristics;
pub mod metrics;
pub mod model;
pub mod scheduler;
pub mod search;
pub mod types;

pub use error::{ConfigError, Error, ModelError, Result, SearchError};
pub use heuristics::{apply_heuristics, HeuristicConfig};
pub use metrics::{MetricsReport, MetricsSummary};
pub use model::{CostParams, Encoding, HashScorer, Model, ModelSpec, Scorer, TableScorer};
pub use scheduler::{run_varbeam, run_varfifo, run_varstream, Engine, RunOutput};
pub use search::{beam_decode, expand_beam, greedy_decode};
pub use types::{Beam, Candidate, DecodeConfig, FinalizationPolicy, TokenId, Vocabulary};
