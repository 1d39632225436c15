use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;

use streambeam::harness::{run_experiment, CorpusSource, EngineName, ExperimentConfig, LengthDist, ModelSource};
use streambeam::types::parse_delta;
use streambeam::{ConfigError, DecodeConfig, Error, FinalizationPolicy, ModelSpec};

/// Run a batched beam-search decoding experiment and report step metrics.
///
/// Settings come from `--config` (JSON) when given; any flag overrides the
/// matching field. Without a model, a seeded hash scorer over 50 tokens is
/// used; without a corpus, a synthetic corpus with geometric lengths is
/// generated from `--seed`.
#[derive(Parser, Debug)]
#[command(name = "streambeam", version, about)]
struct Args {
    /// Experiment config file (JSON).
    #[arg(long)]
    config: Option<PathBuf>,

    /// greedy | fixed | varbeam | varstream | varfifo | fixedstream
    #[arg(long)]
    engine: Option<String>,

    /// Model file (JSON).
    #[arg(long)]
    model: Option<PathBuf>,

    /// Corpus file: one input per line, whitespace-separated token ids.
    #[arg(long)]
    corpus: Option<PathBuf>,

    /// Synthetic corpus size when no corpus file is given.
    #[arg(long, default_value_t = 500)]
    num_inputs: usize,

    /// Mean input length of the synthetic corpus.
    #[arg(long, default_value_t = 12.0)]
    mean_len: f64,

    /// Beam width.
    #[arg(long)]
    k: Option<usize>,

    /// Batch size in beams.
    #[arg(long)]
    n: Option<usize>,

    /// Refill threshold as a fraction of n.
    #[arg(long)]
    epsilon: Option<f64>,

    /// Absolute pruning threshold, or `inf` to disable.
    #[arg(long)]
    delta: Option<String>,

    /// Max candidates per parent (k disables).
    #[arg(long)]
    max_candidates: Option<usize>,

    #[arg(long)]
    max_len: Option<usize>,

    /// immediate | deferred
    #[arg(long)]
    policy: Option<String>,

    /// Max candidate expansions per timestep (default n * k).
    #[arg(long)]
    capacity: Option<usize>,

    /// Finish all live beams every this many timesteps.
    #[arg(long)]
    flush_interval: Option<usize>,

    #[arg(long)]
    cost_c0: Option<f64>,

    #[arg(long)]
    cost_c1: Option<f64>,

    /// Record a per-step trace (CSV next to --out).
    #[arg(long)]
    trace: bool,

    /// Keep corpus order instead of sorting inputs by length.
    #[arg(long)]
    no_bucket: bool,

    /// Results document path; printed to stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,

    /// Seed for synthetic corpus (and default model) generation.
    #[arg(long)]
    seed: Option<u64>,
}

fn build_config(args: Args) -> Result<(ExperimentConfig, Option<PathBuf>), Error> {
    let (mut cfg, base) = match &args.config {
        Some(path) => {
            let cfg = ExperimentConfig::load(path)?;
            (cfg, path.parent().map(|p| p.to_owned()))
        }
        None => {
            let seed = args.seed.unwrap_or(0);
            let cfg = ExperimentConfig {
                engine: EngineName::VarStream,
                model: ModelSource::Inline(ModelSpec::SeededHash {
                    vocab_size: 50,
                    sos: 0,
                    eos: 1,
                    seed,
                    eos_bias: 8.0,
                }),
                corpus: CorpusSource::Synthetic {
                    num_inputs: args.num_inputs,
                    length: LengthDist::Geometric { mean: args.mean_len },
                },
                decode: DecodeConfig::default(),
                output: None,
                trace: false,
                seed,
                bucket: true,
            };
            (cfg, None)
        }
    };

    if let Some(e) = &args.engine {
        cfg.engine = e.parse()?;
    }
    if let Some(m) = args.model {
        cfg.model = ModelSource::Path(absolute(m)?);
    }
    if let Some(c) = args.corpus {
        cfg.corpus = CorpusSource::Path(absolute(c)?);
    }
    let d = &mut cfg.decode;
    if let Some(v) = args.k {
        d.k = v;
    }
    if let Some(v) = args.n {
        d.n = v;
    }
    if let Some(v) = args.epsilon {
        d.epsilon = v;
    }
    if let Some(v) = &args.delta {
        d.delta = parse_delta(v).map_err(|reason| ConfigError::new("delta", reason))?;
    }
    if let Some(v) = args.max_candidates {
        d.max_candidates = v;
    }
    if let Some(v) = args.max_len {
        d.max_len = v;
    }
    if let Some(v) = &args.policy {
        d.policy = v.parse::<FinalizationPolicy>()?;
    }
    if args.capacity.is_some() {
        d.capacity = args.capacity;
    }
    if args.flush_interval.is_some() {
        d.flush_interval = args.flush_interval;
    }
    if let Some(v) = args.cost_c0 {
        d.cost_c0 = v;
    }
    if let Some(v) = args.cost_c1 {
        d.cost_c1 = v;
    }
    if args.trace {
        cfg.trace = true;
    }
    if args.no_bucket {
        cfg.bucket = false;
    }
    if let Some(out) = args.out {
        cfg.output = Some(absolute(out)?);
    }
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    Ok((cfg, base))
}

/// Flag paths are relative to the working directory; config-file paths are
/// relative to the config file.
fn absolute(p: PathBuf) -> Result<PathBuf, Error> {
    if p.is_absolute() {
        return Ok(p);
    }
    std::env::current_dir()
        .map(|cwd| cwd.join(&p))
        .map_err(|source| Error::Io { path: p, source })
}

fn main() -> ExitCode {
    let args = match Args::try_parse() {
        Ok(a) => a,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let result = build_config(args).and_then(|(cfg, base)| {
        let doc = run_experiment(&cfg, base.as_deref())?;
        Ok((cfg, doc))
    });
    match result {
        Ok((cfg, doc)) => {
            if cfg.output.is_some() {
                let m = &doc.metrics;
                println!(
                    "engine={} inputs={} timesteps={} expansions={} exp/step={} cost={}",
                    doc.engine,
                    doc.records.len(),
                    m.timesteps,
                    m.candidate_expansions,
                    m.expansions_per_step_text,
                    m.simulated_cost
                );
            } else {
                println!("{}", doc.to_json());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
