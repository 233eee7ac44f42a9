//! `atm` — command-line front end for the author-topic toolkit.
//!
//! Sub-commands map onto the pipeline stages: `prep` builds per-window
//! vocabulary/bag/author artifacts, `train` fits the model over restart
//! chains and keeps the most coherent one, `topics`, `coherence`,
//! `similar`, and `embed` query a trained model, and `verify` re-checks
//! the digests recorded in the run manifest.

mod commands;
mod io_utils;
mod manifest;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

#[derive(Parser)]
#[command(name = "atm", version, about = "Author-topic modeling toolkit")]
struct Cli {
    /// Manifest file written/extended by every command.
    #[arg(long, global = true, default_value = "atm-manifest.json")]
    manifest: PathBuf,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Preprocess a corpus into per-window vocabulary, bag, and author files.
    Prep(PrepArgs),
    /// Train the author-topic model with multiple restarts; keep the best.
    Train(TrainArgs),
    /// Print each topic's top words and authors.
    Topics(TopicsArgs),
    /// Report UMass coherence per topic.
    Coherence(CoherenceArgs),
    /// Rank researchers similar to a query author, or export the
    /// pairwise Hellinger matrix.
    Similar(SimilarArgs),
    /// Embed authors in 2-D with t-SNE; write CSV and optional SVG.
    Embed(EmbedArgs),
    /// Recompute the digests recorded in the manifest and fail on mismatch.
    Verify,
}

#[derive(Args)]
struct PrepArgs {
    /// Line-delimited JSON corpus file.
    #[arg(long)]
    input: PathBuf,
    /// Directory for the per-window artifact files.
    #[arg(long, default_value = ".")]
    out_dir: PathBuf,
    /// Window config file with `label,year_lo,year_hi` lines.
    #[arg(long)]
    windows: Option<PathBuf>,
    /// Inline window spec `label:year_lo:year_hi`; repeatable.
    #[arg(long = "window", value_name = "LABEL:LO:HI")]
    window_specs: Vec<String>,
    /// Accepted year range; defaults to the span of the windows.
    #[arg(long)]
    min_year: Option<i32>,
    #[arg(long)]
    max_year: Option<i32>,
    /// Custom stopword file: one term per line, `#` comments.
    #[arg(long)]
    stopwords: Option<PathBuf>,
    /// Multi-word phrase file promoted to underscore tokens.
    #[arg(long)]
    phrases: Option<PathBuf>,
    #[arg(long, default_value_t = 2)]
    min_token_len: usize,
    #[arg(long, default_value_t = 20)]
    bigram_min_count: u32,
    #[arg(long, default_value_t = 10.0)]
    bigram_score_threshold: f64,
    #[arg(long, default_value_t = 5)]
    vocab_min_docs: u32,
    #[arg(long, default_value_t = 0.5)]
    vocab_max_doc_frac: f64,
}

#[derive(Args)]
struct TrainArgs {
    /// Bag-corpus file from `prep`.
    #[arg(long)]
    bag: PathBuf,
    /// Vocabulary file from `prep`.
    #[arg(long)]
    vocab: PathBuf,
    /// Output model file.
    #[arg(long)]
    out: PathBuf,
    /// Restart report file (TSV: seed, mean coherence, selected).
    #[arg(long)]
    report: Option<PathBuf>,
    #[arg(short = 'k', long = "topics", default_value_t = 5)]
    k: usize,
    #[arg(long, default_value_t = 0.5)]
    alpha: f64,
    #[arg(long, default_value_t = 0.1)]
    eta: f64,
    #[arg(long, default_value_t = 2000)]
    iterations: usize,
    #[arg(long, default_value_t = 200)]
    burn_in: usize,
    #[arg(long, default_value_t = 10)]
    thinning: usize,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    /// Number of restart chains (seeds seed, seed+1, ...).
    #[arg(long, default_value_t = 5)]
    restarts: usize,
    /// Top words per topic used for the coherence selection criterion.
    #[arg(long, default_value_t = 10)]
    coherence_top_m: usize,
}

#[derive(Args)]
struct TopicsArgs {
    #[arg(long)]
    model: PathBuf,
    #[arg(long, default_value_t = 10, value_parser = clap::value_parser!(u32).range(1..))]
    top_words: u32,
    #[arg(long, default_value_t = 5, value_parser = clap::value_parser!(u32).range(1..))]
    top_authors: u32,
    /// Write the report here instead of standard output.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct CoherenceArgs {
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    bag: PathBuf,
    #[arg(long, default_value_t = 10, value_parser = clap::value_parser!(u32).range(1..))]
    top_m: u32,
    /// TSV report path; standard output when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Machine-readable JSON report path.
    #[arg(long)]
    json: Option<PathBuf>,
}

#[derive(Args)]
struct SimilarArgs {
    #[arg(long)]
    model: PathBuf,
    /// Query author (exact canonical name).
    #[arg(long)]
    author: Option<String>,
    #[arg(short = 'k', long, default_value_t = 5, value_parser = clap::value_parser!(u32).range(1..))]
    k: u32,
    /// Only rank authors with at least this many documents (needs --bag).
    #[arg(long)]
    min_docs: Option<u32>,
    /// Bag-corpus file; required by --min-docs.
    #[arg(long)]
    bag: Option<PathBuf>,
    /// Export the dense pairwise Hellinger matrix as CSV.
    #[arg(long)]
    matrix: Option<PathBuf>,
    /// Write the ranked report here instead of standard output.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct EmbedArgs {
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    bag: PathBuf,
    /// Coordinates CSV output path.
    #[arg(long)]
    out: PathBuf,
    /// Optional SVG scatter output path.
    #[arg(long)]
    svg: Option<PathBuf>,
    #[arg(long, default_value_t = 30.0)]
    perplexity: f64,
    #[arg(long, default_value_t = 1000)]
    iterations: usize,
    #[arg(long, default_value_t = 200.0)]
    learning_rate: f64,
    #[arg(long, default_value_t = 12.0)]
    early_exaggeration: f64,
    #[arg(long, default_value_t = 250)]
    exaggeration_iters: usize,
    #[arg(long, default_value_t = 0.5)]
    momentum_early: f64,
    #[arg(long, default_value_t = 0.8)]
    momentum_late: f64,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    /// Drop authors with fewer documents before embedding.
    #[arg(long, default_value_t = 1)]
    min_docs: u32,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let (stage, result) = match &cli.command {
        Command::Prep(args) => ("prep", commands::prep(args, &cli.manifest)),
        Command::Train(args) => ("train", commands::train(args, &cli.manifest)),
        Command::Topics(args) => ("topics", commands::topics(args, &cli.manifest)),
        Command::Coherence(args) => ("coherence", commands::coherence(args, &cli.manifest)),
        Command::Similar(args) => ("similar", commands::similar(args, &cli.manifest)),
        Command::Embed(args) => ("embed", commands::embed(args, &cli.manifest)),
        Command::Verify => ("verify", commands::verify(&cli.manifest)),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("atm {stage}: error: {err:#}");
            ExitCode::from(exit_code_for(&err))
        }
    }
}

/// 2 for missing/unreadable files, 3 for the empty-vocabulary condition,
/// 1 for everything else.
fn exit_code_for(err: &anyhow::Error) -> u8 {
    for cause in err.chain() {
        if let Some(core_err) = cause.downcast_ref::<atm_core::Error>() {
            match core_err {
                atm_core::Error::EmptyVocabulary { .. } => return 3,
                atm_core::Error::Io { source, .. }
                    if source.kind() == std::io::ErrorKind::NotFound =>
                {
                    return 2
                }
                _ => {}
            }
        }
        if let Some(io_err) = cause.downcast_ref::<std::io::Error>() {
            if io_err.kind() == std::io::ErrorKind::NotFound {
                return 2;
            }
        }
    }
    1
}
