//! Sub-command implementations.

use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use serde_json::json;

use atm_core::atm::{
    load_model, save_model, top_authors_for_topic, top_terms, train_with_restarts,
    AtmHyperParams, AtmModel,
};
use atm_core::corpus::{build_author_map, default_windows, load_corpus, window_slice, SchemaConfig};
use atm_core::embed::{coords_csv, embed_authors, svg_scatter, TsneConfig};
use atm_core::eval::coherence_report;
use atm_core::similarity::{pairwise_hellinger, top_k_similar};
use atm_core::textprep::{prepare, BagCorpus, PrepConfig, Vocabulary};

use crate::io_utils::{
    atomic_write, author_map_tsv, edit_distance, parse_window_spec, read_phrase_file,
    read_term_file, read_windows_file, resolve_config_path,
};
use crate::manifest;
use crate::{
    CoherenceArgs, EmbedArgs, PrepArgs, SimilarArgs, TopicsArgs, TrainArgs,
};

fn emit(out: &Option<PathBuf>, text: &str) -> Result<()> {
    match out {
        Some(path) => atomic_write(path, text.as_bytes()),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

pub fn prep(args: &PrepArgs, manifest_path: &Path) -> Result<()> {
    let mut input_files = vec![args.input.clone()];

    let windows = if let Some(file) = &args.windows {
        let file = resolve_config_path(file);
        let windows = read_windows_file(&file)?;
        input_files.push(file);
        windows
    } else if !args.window_specs.is_empty() {
        args.window_specs
            .iter()
            .map(|s| parse_window_spec(s))
            .collect::<Result<Vec<_>>>()?
    } else {
        default_windows()
    };

    let mut schema = SchemaConfig::from_windows(windows)?;
    if let Some(min) = args.min_year {
        schema.min_year = min;
    }
    if let Some(max) = args.max_year {
        schema.max_year = max;
    }

    let custom_stopwords: BTreeSet<String> = match &args.stopwords {
        Some(file) => {
            let file = resolve_config_path(file);
            let terms = read_term_file(&file)?;
            input_files.push(file);
            terms
        }
        None => BTreeSet::new(),
    };
    let phrases: Vec<String> = match &args.phrases {
        Some(file) => {
            let file = resolve_config_path(file);
            let list = read_phrase_file(&file)?;
            input_files.push(file);
            list
        }
        None => Vec::new(),
    };

    let config = PrepConfig {
        custom_stopwords,
        phrases,
        min_token_len: args.min_token_len,
        bigram_min_count: args.bigram_min_count,
        bigram_score_threshold: args.bigram_score_threshold,
        vocab_min_docs: args.vocab_min_docs,
        vocab_max_doc_frac: args.vocab_max_doc_frac,
    };
    config.validate()?;

    let corpus = load_corpus(&args.input, &schema)?;
    std::fs::create_dir_all(&args.out_dir)
        .with_context(|| format!("creating {}", args.out_dir.display()))?;

    let mut outputs = Vec::new();
    let mut prepared_windows = 0usize;
    for window in corpus.windows.clone() {
        let slice = window_slice(&corpus, &window.label)?;
        if slice.is_empty() {
            log::warn!("window {} has no records; skipped", window.label);
            continue;
        }
        let author_map = build_author_map(&slice);
        let output = prepare(&slice, &author_map, &config)?;
        for id in &output.dropped_ids {
            eprintln!(
                "atm prep: note: document {id} in window {} dropped (no in-vocabulary tokens)",
                window.label
            );
        }

        let vocab_path = args.out_dir.join(format!("{}.vocab.tsv", window.label));
        let bag_path = args.out_dir.join(format!("{}.bag.json", window.label));
        let authors_path = args.out_dir.join(format!("{}.authors.tsv", window.label));
        let mut vocab_text = String::new();
        for (id, term) in output.vocab.terms.iter().enumerate() {
            let _ = writeln!(vocab_text, "{id}\t{term}\t{}", output.vocab.doc_freq[id]);
        }
        atomic_write(&vocab_path, vocab_text.as_bytes())?;
        atomic_write(&bag_path, &serde_json::to_vec(&output.bag)?)?;
        atomic_write(&authors_path, author_map_tsv(&output.bag).as_bytes())?;
        println!(
            "window {}: {} docs, {} authors, {} terms, {} tokens",
            window.label,
            output.bag.n_docs(),
            output.bag.n_authors(),
            output.vocab.len(),
            output.bag.n_tokens
        );
        outputs.extend([vocab_path, bag_path, authors_path]);
        prepared_windows += 1;
    }
    if prepared_windows == 0 {
        bail!("no window contains any record");
    }

    manifest::append_entry(
        manifest_path,
        "prep",
        vec![],
        json!({ "schema": schema, "prep": config }),
        &input_files,
        &outputs,
    )
}

fn load_artifacts(bag: &Path, vocab: &Path) -> Result<(BagCorpus, Vocabulary)> {
    let bag = BagCorpus::load_json(bag)?;
    let vocab = Vocabulary::load_tsv(vocab)?;
    if bag.n_terms != vocab.len() {
        bail!(
            "bag indexes {} terms but vocabulary has {}; artifacts are inconsistent",
            bag.n_terms,
            vocab.len()
        );
    }
    Ok((bag, vocab))
}

pub fn train(args: &TrainArgs, manifest_path: &Path) -> Result<()> {
    let (bag, vocab) = load_artifacts(&args.bag, &args.vocab)?;
    let hyper = AtmHyperParams {
        k: args.k,
        alpha: args.alpha,
        eta: args.eta,
        iterations: args.iterations,
        burn_in: args.burn_in,
        thinning: args.thinning,
        seed: args.seed,
    };
    let (model, stats) =
        train_with_restarts(&bag, &vocab, &hyper, args.restarts, args.coherence_top_m)?;
    save_model(&model, &args.out)?;

    let best_seed = model.hyper.seed;
    let mut report = String::from("seed\tmean_coherence\tselected\n");
    for stat in &stats {
        let _ = writeln!(
            report,
            "{}\t{:.6}\t{}",
            stat.seed,
            stat.mean_coherence,
            if stat.seed == best_seed { "yes" } else { "no" }
        );
    }
    print!("{report}");
    let mut outputs = vec![args.out.clone()];
    if let Some(path) = &args.report {
        atomic_write(path, report.as_bytes())?;
        outputs.push(path.clone());
    }

    manifest::append_entry(
        manifest_path,
        "train",
        stats.iter().map(|s| s.seed).collect(),
        json!({
            "hyper": hyper,
            "restarts": args.restarts,
            "coherence_top_m": args.coherence_top_m,
        }),
        &[args.bag.clone(), args.vocab.clone()],
        &outputs,
    )
}

pub fn topics(args: &TopicsArgs, manifest_path: &Path) -> Result<()> {
    let model = load_model(&args.model)?;
    let mut text = String::new();
    for topic in 0..model.n_topics() {
        for (rank, (term, prob)) in top_terms(&model, topic, args.top_words as usize)?
            .into_iter()
            .enumerate()
        {
            let _ = writeln!(text, "{topic}\tword\t{}\t{term}\t{prob:.4}", rank + 1);
        }
        for (rank, (author, share)) in
            top_authors_for_topic(&model, topic, args.top_authors as usize)?
                .into_iter()
                .enumerate()
        {
            let _ = writeln!(
                text,
                "{topic}\tauthor\t{}\t{}\t{share:.4}",
                rank + 1,
                model.authors[author as usize]
            );
        }
    }
    emit(&args.out, &text)?;

    let outputs: Vec<PathBuf> = args.out.iter().cloned().collect();
    manifest::append_entry(
        manifest_path,
        "topics",
        vec![],
        json!({ "top_words": args.top_words, "top_authors": args.top_authors }),
        &[args.model.clone()],
        &outputs,
    )
}

pub fn coherence(args: &CoherenceArgs, manifest_path: &Path) -> Result<()> {
    let model = load_model(&args.model)?;
    let bag = BagCorpus::load_json(&args.bag)?;
    let report = coherence_report(&model, &bag, args.top_m as usize)?;

    let mut text = String::new();
    for (topic, value) in report.per_topic.iter().enumerate() {
        let words: Vec<String> = top_terms(&model, topic, args.top_m as usize)?
            .into_iter()
            .map(|(term, _)| term)
            .collect();
        let _ = writeln!(text, "{topic}\t{value:.6}\t{}", words.join(" "));
    }
    let _ = writeln!(text, "mean\t{:.6}", report.mean);
    let _ = writeln!(text, "sum\t{:.6}", report.sum);
    emit(&args.out, &text)?;

    let mut outputs: Vec<PathBuf> = args.out.iter().cloned().collect();
    if let Some(path) = &args.json {
        atomic_write(path, serde_json::to_string_pretty(&report)?.as_bytes())?;
        outputs.push(path.clone());
    }
    manifest::append_entry(
        manifest_path,
        "coherence",
        vec![],
        json!({ "top_m": args.top_m }),
        &[args.model.clone(), args.bag.clone()],
        &outputs,
    )
}

fn resolve_author(model: &AtmModel, name: &str) -> Result<usize> {
    let canonical = name.split_whitespace().collect::<Vec<_>>().join(" ");
    if let Some(idx) = model.authors.iter().position(|a| *a == canonical) {
        return Ok(idx);
    }
    let mut ranked: Vec<(usize, &String)> = model
        .authors
        .iter()
        .map(|a| (edit_distance(&canonical.to_lowercase(), &a.to_lowercase()), a))
        .collect();
    ranked.sort_by(|a, b| a.0.cmp(&b.0).then(a.1.cmp(b.1)));
    let suggestions: Vec<String> = ranked.iter().take(5).map(|(_, a)| (*a).clone()).collect();
    Err(anyhow!(
        "unknown author {canonical:?}; closest matches: {}",
        suggestions.join(", ")
    ))
}

pub fn similar(args: &SimilarArgs, manifest_path: &Path) -> Result<()> {
    if args.author.is_none() && args.matrix.is_none() {
        bail!("nothing to do: pass --author NAME and/or --matrix FILE");
    }
    let model = load_model(&args.model)?;
    let mut inputs = vec![args.model.clone()];
    let mut outputs: Vec<PathBuf> = Vec::new();

    let doc_counts: Option<Vec<u32>> = match (&args.min_docs, &args.bag) {
        (Some(_), None) => bail!("--min-docs requires --bag for document counts"),
        (Some(_), Some(bag_path)) => {
            let bag = BagCorpus::load_json(bag_path)?;
            model.check_alignment(&bag)?;
            inputs.push(bag_path.clone());
            Some(bag.author_doc_counts())
        }
        _ => None,
    };

    if let Some(name) = &args.author {
        let query = resolve_author(&model, name)?;
        let full = top_k_similar(&model, query, model.n_authors().saturating_sub(1))?;
        let min_docs = args.min_docs.unwrap_or(0);
        let mut text = String::new();
        let mut rank = 0usize;
        for (author, score) in &full.ranked {
            if let Some(counts) = &doc_counts {
                if counts[*author as usize] < min_docs {
                    continue;
                }
            }
            rank += 1;
            let _ = writeln!(
                text,
                "{rank}\t{}\t{score:.6}",
                model.authors[*author as usize]
            );
            if rank == args.k as usize {
                break;
            }
        }
        emit(&args.out, &text)?;
        outputs.extend(args.out.iter().cloned());
    }

    if let Some(matrix_path) = &args.matrix {
        let m = pairwise_hellinger(&model);
        let mut csv = String::from("author");
        for name in &model.authors {
            let _ = write!(csv, ",{}", csv_field(name));
        }
        csv.push('\n');
        for i in 0..m.rows() {
            let _ = write!(csv, "{}", csv_field(&model.authors[i]));
            for j in 0..m.cols() {
                let _ = write!(csv, ",{:.6}", m.get(i, j));
            }
            csv.push('\n');
        }
        atomic_write(matrix_path, csv.as_bytes())?;
        outputs.push(matrix_path.clone());
    }

    manifest::append_entry(
        manifest_path,
        "similar",
        vec![],
        json!({ "author": args.author, "k": args.k, "min_docs": args.min_docs }),
        &inputs,
        &outputs,
    )
}

fn csv_field(name: &str) -> String {
    if name.contains(',') || name.contains('"') || name.contains('\n') {
        format!("\"{}\"", name.replace('"', "\"\""))
    } else {
        name.to_string()
    }
}

pub fn embed(args: &EmbedArgs, manifest_path: &Path) -> Result<()> {
    let model = load_model(&args.model)?;
    let bag = BagCorpus::load_json(&args.bag)?;
    let config = TsneConfig {
        perplexity: args.perplexity,
        iterations: args.iterations,
        learning_rate: args.learning_rate,
        early_exaggeration: args.early_exaggeration,
        exaggeration_iters: args.exaggeration_iters,
        momentum_early: args.momentum_early,
        momentum_late: args.momentum_late,
        seed: args.seed,
    };
    let embedding = embed_authors(&model, &bag, &config, args.min_docs)?;

    atomic_write(&args.out, coords_csv(&embedding).as_bytes())?;
    let mut outputs = vec![args.out.clone()];
    if let Some(svg_path) = &args.svg {
        atomic_write(svg_path, svg_scatter(&embedding)?.as_bytes())?;
        outputs.push(svg_path.clone());
    }
    println!("embedded {} authors", embedding.len());

    manifest::append_entry(
        manifest_path,
        "embed",
        vec![config.seed],
        json!({ "tsne": config, "min_docs": args.min_docs }),
        &[args.model.clone(), args.bag.clone()],
        &outputs,
    )
}

pub fn verify(manifest_path: &Path) -> Result<()> {
    let (entries, files) = manifest::verify(manifest_path)?;
    println!("manifest OK: {entries} entries, {files} file digests verified");
    Ok(())
}
