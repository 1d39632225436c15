//! Experiment orchestration: corpus ingestion, engine dispatch, and results
//! persistence.

mod config;
mod corpus;
mod results;

use std::path::Path;

pub use config::{CorpusSource, EngineName, ExperimentConfig, ModelSource};
pub use corpus::{bucket_by_length, generate_synthetic_corpus, load_corpus, parse_corpus, Corpus, LengthDist};
pub use results::{read_trace_csv, write_trace_csv, InputRecord, ResultsDocument, ScoredSequence};

use crate::error::Result;
use crate::model::Scorer;
use crate::scheduler::{run_engine, Engine, RunOutput};
use crate::types::DecodeConfig;

/// The decode settings an engine actually runs with. Greedy search is width-1
/// beam search with both heuristics off.
pub fn effective_decode(engine: EngineName, decode: &DecodeConfig) -> DecodeConfig {
    match engine {
        EngineName::Greedy => DecodeConfig {
            k: 1,
            max_candidates: 1,
            delta: f64::INFINITY,
            capacity: decode.capacity.map(|c| c.max(1)),
            ..decode.clone()
        },
        _ => decode.clone(),
    }
}

fn scheduler_for(engine: EngineName) -> Engine {
    match engine {
        EngineName::Greedy | EngineName::Fixed | EngineName::VarBeam => Engine::VarBeam,
        EngineName::VarStream | EngineName::FixedStream => Engine::VarStream,
        EngineName::VarFifo => Engine::VarFifo,
    }
}

/// Runs `engine` on `corpus`, optionally length-bucketed, and returns the
/// outputs in corpus order with candidate `input_id`s set to corpus indices.
pub fn run_corpus<S: Scorer + ?Sized>(
    engine: EngineName,
    corpus: &Corpus,
    scorer: &S,
    decode: &DecodeConfig,
    bucket: bool,
    trace: bool,
) -> Result<RunOutput> {
    let decode = effective_decode(engine, decode);
    let (ordered, permutation) = if bucket {
        bucket_by_length(corpus)
    } else {
        (corpus.clone(), (0..corpus.len()).collect())
    };
    let run = run_engine(scheduler_for(engine), &ordered.inputs, scorer, &decode, trace)?;
    let mut outputs = vec![Vec::new(); corpus.len()];
    for (position, mut candidates) in run.outputs.into_iter().enumerate() {
        let original = permutation[position];
        candidates.iter_mut().for_each(|c| c.input_id = original);
        outputs[original] = candidates;
    }
    let lifetimes = run
        .lifetimes
        .iter()
        .map(|&(position, admitted, finished)| (permutation[position], admitted, finished))
        .collect();
    Ok(RunOutput {
        outputs,
        metrics: run.metrics,
        lifetimes,
    })
}

/// Loads the model and corpus named by `config`, runs the engine, and writes
/// the results document (and trace CSV) when an output path is set.
/// Relative paths resolve against `base_dir` when given.
pub fn run_experiment(config: &ExperimentConfig, base_dir: Option<&Path>) -> Result<ResultsDocument> {
    config.validate()?;
    let spec = config.model.resolve(base_dir)?;
    let model = spec.build()?;
    let corpus = match &config.corpus {
        CorpusSource::Path(p) => load_corpus(&config::resolve_path(base_dir, p))?,
        CorpusSource::Synthetic { num_inputs, length } => {
            generate_synthetic_corpus(config.seed, *num_inputs, model.vocab().size(), *length)?
        }
    };

    let run = run_corpus(config.engine, &corpus, &model, &config.decode, config.bucket, config.trace)?;
    let records = run
        .outputs
        .iter()
        .enumerate()
        .map(|(input_id, cands)| InputRecord {
            input_id,
            candidates: cands.iter().map(ScoredSequence::from).collect(),
        })
        .collect();
    let mut echo = config.clone();
    echo.decode = effective_decode(config.engine, &config.decode);
    let doc = ResultsDocument {
        engine: config.engine,
        metrics: run.metrics.summarize(),
        config: echo,
        records,
        trace: run.metrics.per_step_trace.clone(),
    };

    if let Some(out) = &config.output {
        let out = config::resolve_path(base_dir, out);
        doc.write(&out)?;
        if let Some(trace) = &run.metrics.per_step_trace {
            write_trace_csv(&out.with_extension("trace.csv"), trace)?;
        }
    }
    Ok(doc)
}
