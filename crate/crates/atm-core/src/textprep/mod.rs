//! Text preprocessing pipeline: tokenize → stopword filter → stem →
//! phrase/bigram promotion → vocabulary pruning → vectorization.
//!
//! Every stage is a pure function over immutable input, so documents can
//! be processed in parallel; corpus-level statistics are reduced in a
//! fixed order, which keeps the output byte-identical to a sequential
//! run. Identical input and config always produce identical Vocabulary
//! and BagCorpus.

mod porter;
mod smart;

pub use porter::stem;
pub use smart::{is_smart_stopword, SMART_STOPWORDS, SMART_STOPWORD_COUNT};

use std::collections::{BTreeSet, HashMap};
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::corpus::{AuthorMap, Corpus};
use crate::error::{Error, Result};
use crate::par;

/// Free parameters of the preprocessing pipeline.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PrepConfig {
    /// Extra stopwords filtered in addition to the SMART list.
    pub custom_stopwords: BTreeSet<String>,
    /// Multi-word phrases promoted to underscore-joined tokens.
    pub phrases: Vec<String>,
    pub min_token_len: usize,
    pub bigram_min_count: u32,
    pub bigram_score_threshold: f64,
    pub vocab_min_docs: u32,
    pub vocab_max_doc_frac: f64,
}

impl Default for PrepConfig {
    fn default() -> Self {
        PrepConfig {
            custom_stopwords: BTreeSet::new(),
            phrases: Vec::new(),
            min_token_len: 2,
            bigram_min_count: 20,
            bigram_score_threshold: 10.0,
            vocab_min_docs: 5,
            vocab_max_doc_frac: 0.5,
        }
    }
}

impl PrepConfig {
    pub fn validate(&self) -> Result<()> {
        if self.min_token_len < 1 {
            return Err(Error::InvalidPrepConfig {
                reason: "min_token_len must be >= 1".into(),
            });
        }
        if self.bigram_min_count < 1 {
            return Err(Error::InvalidPrepConfig {
                reason: "bigram_min_count must be >= 1".into(),
            });
        }
        if self.bigram_score_threshold < 0.0 {
            return Err(Error::InvalidPrepConfig {
                reason: "bigram_score_threshold must be >= 0".into(),
            });
        }
        if self.vocab_min_docs < 1 {
            return Err(Error::InvalidPrepConfig {
                reason: "vocab_min_docs must be >= 1".into(),
            });
        }
        if !(self.vocab_max_doc_frac > 0.0 && self.vocab_max_doc_frac <= 1.0) {
            return Err(Error::InvalidPrepConfig {
                reason: "vocab_max_doc_frac must be in (0, 1]".into(),
            });
        }
        Ok(())
    }
}

/// Retained term list with document frequencies; `terms` is sorted
/// lexicographically and `term_to_id` is its exact inverse.
#[derive(Debug, Clone, PartialEq)]
pub struct Vocabulary {
    pub terms: Vec<String>,
    pub term_to_id: HashMap<String, u32>,
    pub doc_freq: Vec<u32>,
}

impl Vocabulary {
    fn from_parts(terms: Vec<String>, doc_freq: Vec<u32>) -> Self {
        let term_to_id = terms
            .iter()
            .enumerate()
            .map(|(i, t)| (t.clone(), i as u32))
            .collect();
        Vocabulary {
            terms,
            term_to_id,
            doc_freq,
        }
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    /// Writes `id<TAB>term<TAB>doc_freq` lines.
    pub fn save_tsv(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let file = File::create(path).map_err(|e| Error::io(path.display().to_string(), e))?;
        let mut w = BufWriter::new(file);
        for (id, term) in self.terms.iter().enumerate() {
            writeln!(w, "{id}\t{term}\t{}", self.doc_freq[id])
                .map_err(|e| Error::io(path.display().to_string(), e))?;
        }
        w.flush().map_err(|e| Error::io(path.display().to_string(), e))
    }

    pub fn load_tsv(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let file = File::open(path).map_err(|e| Error::io(path.display().to_string(), e))?;
        let mut terms = Vec::new();
        let mut doc_freq = Vec::new();
        for (idx, line) in BufReader::new(file).lines().enumerate() {
            let line = line.map_err(|e| Error::io(path.display().to_string(), e))?;
            if line.is_empty() {
                continue;
            }
            let mut parts = line.splitn(3, '\t');
            let bad = || Error::MalformedRecord {
                line: idx + 1,
                reason: "expected id<TAB>term<TAB>doc_freq".into(),
            };
            let id: usize = parts.next().ok_or_else(bad)?.parse().map_err(|_| bad())?;
            let term = parts.next().ok_or_else(bad)?.to_string();
            let df: u32 = parts.next().ok_or_else(bad)?.parse().map_err(|_| bad())?;
            if id != terms.len() {
                return Err(Error::MalformedRecord {
                    line: idx + 1,
                    reason: format!("non-contiguous term id {id}"),
                });
            }
            terms.push(term);
            doc_freq.push(df);
        }
        Ok(Vocabulary::from_parts(terms, doc_freq))
    }
}

/// Integer-coded bag-of-words corpus, aligned with a compacted author
/// table. Documents that became empty during vectorization are absent;
/// authors whose every document was dropped are absent too.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BagCorpus {
    /// Per document: sorted, duplicate-free `(term_id, count)` pairs.
    pub docs: Vec<Vec<(u32, u32)>>,
    /// Per document: sorted author indices into `authors`.
    pub doc_authors: Vec<Vec<u32>>,
    /// Source record id of each retained document.
    pub doc_ids: Vec<String>,
    /// Canonical names of the authors that survived vectorization.
    pub authors: Vec<String>,
    /// Vocabulary size the term ids index into.
    pub n_terms: usize,
    /// Total token count over all retained documents.
    pub n_tokens: u64,
}

impl BagCorpus {
    pub fn n_docs(&self) -> usize {
        self.docs.len()
    }

    pub fn n_authors(&self) -> usize {
        self.authors.len()
    }

    /// Number of documents attributed to each author.
    pub fn author_doc_counts(&self) -> Vec<u32> {
        let mut counts = vec![0u32; self.authors.len()];
        for doc in &self.doc_authors {
            for &a in doc {
                counts[a as usize] += 1;
            }
        }
        counts
    }

    pub fn save_json(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let file = File::create(path).map_err(|e| Error::io(path.display().to_string(), e))?;
        let mut w = BufWriter::new(file);
        serde_json::to_writer(&mut w, self).map_err(|e| Error::MalformedRecord {
            line: 0,
            reason: e.to_string(),
        })?;
        w.flush().map_err(|e| Error::io(path.display().to_string(), e))
    }

    pub fn load_json(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let file = File::open(path).map_err(|e| Error::io(path.display().to_string(), e))?;
        serde_json::from_reader(BufReader::new(file)).map_err(|e| Error::MalformedRecord {
            line: 0,
            reason: format!("bag corpus: {e}"),
        })
    }
}

/// Lowercases, collapses whitespace, strips punctuation, drops tokens
/// containing digits, and drops tokens shorter than `min_token_len`.
/// A token containing a digit is dropped whole rather than digit-stripped.
pub fn tokenize(text: &str, min_token_len: usize) -> Vec<String> {
    text.to_lowercase()
        .split_whitespace()
        .filter_map(|raw| {
            let cleaned: String = raw.chars().filter(|c| c.is_alphanumeric()).collect();
            if cleaned.is_empty() || cleaned.chars().any(|c| c.is_numeric()) {
                return None;
            }
            if cleaned.chars().count() < min_token_len {
                return None;
            }
            Some(cleaned)
        })
        .collect()
}

/// Removes tokens found in the embedded SMART list or the custom set,
/// preserving the order of survivors.
pub fn remove_stopwords(tokens: Vec<String>, custom: &BTreeSet<String>) -> Vec<String> {
    tokens
        .into_iter()
        .filter(|t| !is_smart_stopword(t) && !custom.contains(t))
        .collect()
}

/// Tokenize → stopword-filter → stem, per document. Parallel over
/// documents; output is independent of the schedule.
pub fn process_texts(texts: &[String], config: &PrepConfig) -> Vec<Vec<String>> {
    par::map_indexed(texts.len(), |i| process_one(&texts[i], config))
}

/// Sequential twin of [`process_texts`] for benchmarks.
pub fn process_texts_seq(texts: &[String], config: &PrepConfig) -> Vec<Vec<String>> {
    par::map_indexed_seq(texts.len(), |i| process_one(&texts[i], config))
}

fn process_one(text: &str, config: &PrepConfig) -> Vec<String> {
    let tokens = tokenize(text, config.min_token_len);
    remove_stopwords(tokens, &config.custom_stopwords)
        .into_iter()
        .map(|t| stem(&t))
        .collect()
}

/// Appends underscore-joined bigram tokens for adjacent pairs that are
/// frequent enough: corpus count(a,b) >= bigram_min_count and
/// score(a,b) = (count(a,b) - min_count) * N_tok / (count(a) * count(b))
/// >= bigram_score_threshold. The bigram token is appended once to every
/// document containing the pair; original unigrams are retained. Pair
/// counting scans only the input documents, never appended tokens.
pub fn promote_bigrams(token_docs: Vec<Vec<String>>, config: &PrepConfig) -> Vec<Vec<String>> {
    let appends = bigram_appends(&token_docs, config);
    merge_appends(token_docs, appends)
}

fn bigram_appends(token_docs: &[Vec<String>], config: &PrepConfig) -> Vec<Vec<String>> {
    let mut unigram_counts: HashMap<&str, u64> = HashMap::new();
    let mut pair_counts: HashMap<(&str, &str), u32> = HashMap::new();
    let mut n_tok: u64 = 0;
    for doc in token_docs {
        n_tok += doc.len() as u64;
        for tok in doc {
            *unigram_counts.entry(tok).or_insert(0) += 1;
        }
        for pair in doc.windows(2) {
            *pair_counts.entry((&pair[0], &pair[1])).or_insert(0) += 1;
        }
    }

    let qualifies = |a: &str, b: &str| -> bool {
        let Some(&pc) = pair_counts.get(&(a, b)) else {
            return false;
        };
        if pc < config.bigram_min_count {
            return false;
        }
        let ca = unigram_counts[a] as f64;
        let cb = unigram_counts[b] as f64;
        let score = (pc - config.bigram_min_count) as f64 * n_tok as f64 / (ca * cb);
        score >= config.bigram_score_threshold
    };

    token_docs
        .iter()
        .map(|doc| {
            let mut seen: Vec<String> = Vec::new();
            for pair in doc.windows(2) {
                if qualifies(&pair[0], &pair[1]) {
                    let joined = format!("{}_{}", pair[0], pair[1]);
                    if !seen.contains(&joined) {
                        seen.push(joined);
                    }
                }
            }
            seen
        })
        .collect()
}

fn merge_appends(token_docs: Vec<Vec<String>>, appends: Vec<Vec<String>>) -> Vec<Vec<String>> {
    token_docs
        .into_iter()
        .zip(appends)
        .map(|(mut doc, extra)| {
            doc.extend(extra);
            doc
        })
        .collect()
}

/// Promotes user-supplied multi-word phrases the same way as bigrams:
/// each phrase is run through the token pipeline, and its underscore-join
/// is appended once to every document containing the token sequence.
pub fn promote_phrases(
    token_docs: Vec<Vec<String>>,
    config: &PrepConfig,
) -> Vec<Vec<String>> {
    let appends = phrase_appends(&token_docs, config);
    merge_appends(token_docs, appends)
}

fn phrase_appends(token_docs: &[Vec<String>], config: &PrepConfig) -> Vec<Vec<String>> {
    let phrase_seqs: Vec<Vec<String>> = config
        .phrases
        .iter()
        .map(|p| process_one(p, config))
        .filter(|seq| seq.len() >= 2)
        .collect();
    token_docs
        .iter()
        .map(|doc| {
            let mut out = Vec::new();
            for seq in &phrase_seqs {
                let found = doc
                    .windows(seq.len())
                    .any(|w| w.iter().zip(seq).all(|(a, b)| a == b));
                if found {
                    out.push(seq.join("_"));
                }
            }
            out
        })
        .collect()
}

/// Retains terms with vocab_min_docs <= doc_freq <= vocab_max_doc_frac * D,
/// sorted lexicographically.
pub fn build_vocabulary(token_docs: &[Vec<String>], config: &PrepConfig) -> Result<Vocabulary> {
    let n_docs = token_docs.len();
    let mut doc_freq: HashMap<&str, u32> = HashMap::new();
    for doc in token_docs {
        let mut in_doc: Vec<&str> = doc.iter().map(String::as_str).collect();
        in_doc.sort_unstable();
        in_doc.dedup();
        for term in in_doc {
            *doc_freq.entry(term).or_insert(0) += 1;
        }
    }

    let max_df = config.vocab_max_doc_frac * n_docs as f64;
    let mut kept: Vec<(&str, u32)> = doc_freq
        .into_iter()
        .filter(|(_, df)| *df >= config.vocab_min_docs && (*df as f64) <= max_df)
        .collect();
    kept.sort_unstable_by(|a, b| a.0.cmp(b.0));

    if kept.is_empty() {
        return Err(Error::EmptyVocabulary {
            min_docs: config.vocab_min_docs,
            max_frac: config.vocab_max_doc_frac,
        });
    }
    let (terms, freqs): (Vec<_>, Vec<_>) = kept
        .into_iter()
        .map(|(t, df)| (t.to_string(), df))
        .unzip();
    Ok(Vocabulary::from_parts(terms, freqs))
}

/// Counts in-vocabulary tokens per document. Documents with no
/// in-vocabulary token are dropped (ids returned in `dropped_ids` and
/// logged); authors left without documents are dropped from the author
/// table, with indices remapped.
#[derive(Debug)]
pub struct VectorizeOutcome {
    pub bag: BagCorpus,
    pub dropped_ids: Vec<String>,
}

pub fn vectorize(
    token_docs: &[Vec<String>],
    doc_ids: &[String],
    vocab: &Vocabulary,
    author_map: &AuthorMap,
) -> Result<VectorizeOutcome> {
    assert_eq!(token_docs.len(), author_map.doc_authors.len());
    assert_eq!(token_docs.len(), doc_ids.len());

    let mut docs = Vec::new();
    let mut kept_doc_authors = Vec::new();
    let mut kept_ids = Vec::new();
    let mut dropped_ids = Vec::new();
    let mut n_tokens: u64 = 0;

    for (d, tokens) in token_docs.iter().enumerate() {
        let mut counts: HashMap<u32, u32> = HashMap::new();
        for tok in tokens {
            if let Some(&id) = vocab.term_to_id.get(tok) {
                *counts.entry(id).or_insert(0) += 1;
            }
        }
        if counts.is_empty() {
            dropped_ids.push(doc_ids[d].clone());
            log::warn!("document {} dropped: no in-vocabulary tokens", doc_ids[d]);
            continue;
        }
        let mut pairs: Vec<(u32, u32)> = counts.into_iter().collect();
        pairs.sort_unstable_by_key(|(id, _)| *id);
        n_tokens += pairs.iter().map(|(_, c)| *c as u64).sum::<u64>();
        docs.push(pairs);
        kept_doc_authors.push(author_map.doc_authors[d].clone());
        kept_ids.push(doc_ids[d].clone());
    }

    if docs.is_empty() {
        return Err(Error::EmptyBagCorpus);
    }

    // Compact the author table to the authors that still own a document.
    let mut present = vec![false; author_map.authors.len()];
    for doc in &kept_doc_authors {
        for &a in doc {
            present[a as usize] = true;
        }
    }
    let mut remap = vec![u32::MAX; author_map.authors.len()];
    let mut authors = Vec::new();
    for (old, name) in author_map.authors.iter().enumerate() {
        if present[old] {
            remap[old] = authors.len() as u32;
            authors.push(name.clone());
        }
    }
    let doc_authors = kept_doc_authors
        .into_iter()
        .map(|doc| doc.into_iter().map(|a| remap[a as usize]).collect())
        .collect();

    Ok(VectorizeOutcome {
        bag: BagCorpus {
            docs,
            doc_authors,
            doc_ids: kept_ids,
            authors,
            n_terms: vocab.len(),
            n_tokens,
        },
        dropped_ids,
    })
}

/// Full pipeline over a corpus slice: title + abstract per document,
/// through every stage in order. Phrase and bigram promotion both scan
/// the pristine per-document token sequences, so neither sees the
/// other's appended tokens.
pub struct PrepOutput {
    pub vocab: Vocabulary,
    pub bag: BagCorpus,
    pub dropped_ids: Vec<String>,
}

pub fn prepare(corpus: &Corpus, author_map: &AuthorMap, config: &PrepConfig) -> Result<PrepOutput> {
    config.validate()?;
    let texts: Vec<String> = corpus
        .records
        .iter()
        .map(|r| format!("{} {}", r.title, r.abstract_text))
        .collect();
    let doc_ids: Vec<String> = corpus.records.iter().map(|r| r.id.clone()).collect();

    let processed = process_texts(&texts, config);
    // Both promotions scan the pristine docs; appends are then merged.
    let from_phrases = phrase_appends(&processed, config);
    let from_bigrams = bigram_appends(&processed, config);
    let finalized = merge_appends(merge_appends(processed, from_phrases), from_bigrams);

    let vocab = build_vocabulary(&finalized, config)?;
    let outcome = vectorize(&finalized, &doc_ids, &vocab, author_map)?;
    Ok(PrepOutput {
        vocab,
        bag: outcome.bag,
        dropped_ids: outcome.dropped_ids,
    })
}
