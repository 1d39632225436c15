//! Batched execution over a stream of inputs.
//!
//! All engines share one loop: optionally flush, refill the batch according
//! to the engine's refill rule, select beams for this timestep under the
//! capacity limit, expand them, and drop terminated beams.
//!
//! | engine    | refill                       | selection                 |
//! |-----------|------------------------------|---------------------------|
//! | VarBeam   | only when the batch is empty | min `l_t`                 |
//! | VarStream | when `|beams| <= epsilon * n`| min `l_t`                 |
//! | VarFIFO   | whenever `|beams| < n`       | max `l_t` first, padded   |
//!
//! Each beam evolves exactly as in [`beam_decode`](crate::search::beam_decode),
//! so every engine emits identical per-input outputs; only the timestep
//! count and the simulated cost differ.

use serde::{Deserialize, Serialize};

use crate::error::{Result, SearchError};
use crate::metrics::MetricsReport;
use crate::model::{Encoding, Scorer};
use crate::search::{expand_beam, score_beam};
use crate::types::{Beam, Candidate, DecodeConfig, TokenId};

/// A beam in the batch together with its encoding.
#[derive(Debug, Clone)]
pub struct LiveBeam {
    pub beam: Beam,
    pub encoding: Encoding,
    /// Timestep count at admission.
    pub admitted_at: usize,
}

#[derive(Debug, Clone, Default)]
pub struct BatchState {
    /// Live beams in arrival order.
    pub beams: Vec<LiveBeam>,
    /// Emitted candidates, one slot per consumed input.
    pub outputs: Vec<Vec<Candidate>>,
    /// Index of the next unread input.
    pub cursor: usize,
    pub timestep: usize,
    /// `(input_id, admitted_at, finished_at)` for every terminated beam.
    pub lifetimes: Vec<(usize, usize, usize)>,
}

impl BatchState {
    pub fn new() -> Self {
        Self::default()
    }
}

/// Beams chosen for one timestep, as indices into `BatchState::beams` in
/// arrival order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StepSelection {
    pub selected: Vec<usize>,
    pub total_expansions: usize,
    pub effective_len: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RefillRule {
    /// Refill to `n` once at most `epsilon * n` beams remain.
    Threshold(f64),
    /// Refill to `n` whenever below `n`.
    Eager,
    /// Load the next `n` inputs only after the batch has drained.
    WhenEmpty,
}

impl RefillRule {
    fn triggers(self, live: usize, n: usize) -> bool {
        match self {
            // Small tolerance so that e.g. (1/3) * 3 compares equal to 1.
            RefillRule::Threshold(eps) => live as f64 <= eps * n as f64 + 1e-9,
            RefillRule::Eager => live < n,
            RefillRule::WhenEmpty => live == 0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Engine {
    VarBeam,
    VarStream,
    VarFifo,
}

impl Engine {
    fn refill_rule(self, config: &DecodeConfig) -> RefillRule {
        match self {
            Engine::VarBeam => RefillRule::WhenEmpty,
            Engine::VarStream => RefillRule::Threshold(config.epsilon),
            Engine::VarFifo => RefillRule::Eager,
        }
    }

    fn select(self, state: &BatchState, capacity: usize) -> Result<StepSelection, SearchError> {
        match self {
            Engine::VarBeam | Engine::VarStream => select_min_lt(state, capacity),
            Engine::VarFifo => select_fifo_max_lt(state, capacity),
        }
    }
}

/// Outputs indexed by input position, plus the run's metrics.
#[derive(Debug, Clone, PartialEq)]
pub struct RunOutput {
    pub outputs: Vec<Vec<Candidate>>,
    pub metrics: MetricsReport,
    /// `(input_id, admitted_at, finished_at)` per input, in finishing order.
    pub lifetimes: Vec<(usize, usize, usize)>,
}

/// Admits fresh inputs as `[sos]` beams when `rule` triggers, filling the
/// batch back up to `n` or until the stream runs out. Returns the number
/// admitted.
pub fn refill<S: Scorer + ?Sized>(
    state: &mut BatchState,
    inputs: &[Vec<TokenId>],
    config: &DecodeConfig,
    rule: RefillRule,
    scorer: &S,
) -> Result<usize> {
    if state.cursor >= inputs.len() || !rule.triggers(state.beams.len(), config.n) {
        return Ok(0);
    }
    let room = config.n.saturating_sub(state.beams.len());
    let take = room.min(inputs.len() - state.cursor);
    for input_id in state.cursor..state.cursor + take {
        let encoding = scorer.encode(input_id, &inputs[input_id])?;
        state.beams.push(LiveBeam {
            beam: Beam::initial(scorer.vocab(), input_id),
            encoding,
            admitted_at: state.timestep,
        });
        if state.outputs.len() <= input_id {
            state.outputs.resize_with(input_id + 1, Vec::new);
        }
    }
    state.cursor += take;
    Ok(take)
}

/// Greedily packs beams from `order` (atomic, skip what does not fit) under
/// `capacity`.
fn pack(state: &BatchState, order: impl Iterator<Item = usize>, capacity: usize) -> Result<StepSelection, SearchError> {
    let mut selected = Vec::new();
    let mut total = 0;
    let mut effective_len = 0;
    for i in order {
        let beam = &state.beams[i].beam;
        let width = beam.active_width();
        if width > capacity {
            return Err(SearchError::BeamExceedsCapacity { width, capacity });
        }
        if total + width <= capacity {
            total += width;
            effective_len = effective_len.max(beam.l_t);
            selected.push(i);
        }
    }
    selected.sort_unstable();
    Ok(StepSelection {
        selected,
        total_expansions: total,
        effective_len,
    })
}

/// Selects, in arrival order, the beams at the minimum `l_t` that fit under
/// `capacity`. Longer beams pause.
pub fn select_min_lt(state: &BatchState, capacity: usize) -> Result<StepSelection, SearchError> {
    let Some(min_lt) = state.beams.iter().map(|b| b.beam.l_t).min() else {
        return Ok(StepSelection {
            selected: Vec::new(),
            total_expansions: 0,
            effective_len: 0,
        });
    };
    let order = (0..state.beams.len()).filter(|&i| state.beams[i].beam.l_t == min_lt);
    pack(state, order, capacity)
}

/// Selects beams starting from the largest `l_t` (ties in arrival order)
/// under `capacity`. The step is charged at the largest selected `l_t`.
pub fn select_fifo_max_lt(state: &BatchState, capacity: usize) -> Result<StepSelection, SearchError> {
    let mut order: Vec<usize> = (0..state.beams.len()).collect();
    order.sort_by_key(|&i| std::cmp::Reverse(state.beams[i].beam.l_t));
    pack(state, order.into_iter(), capacity)
}

/// Expands the selected beams once, records the step, and removes beams that
/// terminated.
fn execute_step<S: Scorer + ?Sized>(
    state: &mut BatchState,
    selection: &StepSelection,
    scorer: &S,
    config: &DecodeConfig,
    metrics: &mut MetricsReport,
) -> Result<()> {
    let vocab = *scorer.vocab();
    let mut scored = 0;
    for &i in &selection.selected {
        let live = &mut state.beams[i];
        let rows = score_beam(scorer, &live.encoding, &live.beam)?;
        scored += rows.len();
        let (next, emitted) = expand_beam(&live.beam, &rows, config, &vocab)?;
        state.outputs[live.beam.input_id].extend(emitted);
        live.beam = next;
    }
    if scored != selection.total_expansions {
        return Err(crate::error::Error::Invariant(format!(
            "selection promised {} expansions, scored {scored}",
            selection.total_expansions
        )));
    }
    metrics.record_step(scored, selection.effective_len, &config.cost_params());
    state.timestep += 1;
    let now = state.timestep;
    let lifetimes = &mut state.lifetimes;
    state.beams.retain(|b| {
        if b.beam.is_terminated() {
            lifetimes.push((b.beam.input_id, b.admitted_at, now));
            false
        } else {
            true
        }
    });
    Ok(())
}

/// Runs every live beam to termination, packing in arrival order under the
/// capacity limit regardless of `l_t`. The cursor is left untouched.
pub fn flush_all<S: Scorer + ?Sized>(
    state: &mut BatchState,
    scorer: &S,
    config: &DecodeConfig,
    metrics: &mut MetricsReport,
) -> Result<()> {
    while !state.beams.is_empty() {
        let selection = pack(state, 0..state.beams.len(), config.capacity())?;
        execute_step(state, &selection, scorer, config, metrics)?;
    }
    Ok(())
}

/// Runs `engine` over `inputs`. Outputs are indexed by input position.
///
/// With `config.flush_interval` set, every that many regular timesteps all
/// live beams are run to completion before refilling resumes.
pub fn run_engine<S: Scorer + ?Sized>(
    engine: Engine,
    inputs: &[Vec<TokenId>],
    scorer: &S,
    config: &DecodeConfig,
    trace: bool,
) -> Result<RunOutput> {
    config.validate()?;
    let rule = engine.refill_rule(config);
    let capacity = config.capacity();
    let mut state = BatchState::new();
    let mut metrics = MetricsReport::new(trace);
    let mut since_flush = 0;
    loop {
        if let Some(interval) = config.flush_interval {
            if since_flush >= interval && !state.beams.is_empty() {
                flush_all(&mut state, scorer, config, &mut metrics)?;
                since_flush = 0;
            }
        }
        refill(&mut state, inputs, config, rule, scorer)?;
        if state.beams.is_empty() {
            break;
        }
        let selection = engine.select(&state, capacity)?;
        execute_step(&mut state, &selection, scorer, config, &mut metrics)?;
        since_flush += 1;
    }
    if state.cursor != inputs.len() || state.outputs.len() != inputs.len() {
        return Err(crate::error::Error::Invariant(format!(
            "consumed {} of {} inputs",
            state.cursor,
            inputs.len()
        )));
    }
    Ok(RunOutput {
        outputs: state.outputs,
        metrics,
        lifetimes: state.lifetimes,
    })
}

/// Traditional batching: decode `n` inputs to completion, then the next `n`.
pub fn run_varbeam<S: Scorer + ?Sized>(inputs: &[Vec<TokenId>], scorer: &S, config: &DecodeConfig) -> Result<RunOutput> {
    run_engine(Engine::VarBeam, inputs, scorer, config, false)
}

/// Streaming refill with min-`l_t` selection.
pub fn run_varstream<S: Scorer + ?Sized>(inputs: &[Vec<TokenId>], scorer: &S, config: &DecodeConfig) -> Result<RunOutput> {
    run_engine(Engine::VarStream, inputs, scorer, config, false)
}

/// Streaming with eager refill and max-`l_t`-first selection.
pub fn run_varfifo<S: Scorer + ?Sized>(inputs: &[Vec<TokenId>], scorer: &S, config: &DecodeConfig) -> Result<RunOutput> {
    run_engine(Engine::VarFifo, inputs, scorer, config, false)
}
