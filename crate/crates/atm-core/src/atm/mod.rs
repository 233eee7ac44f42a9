//! The author-topic model: hyperparameters, the trained artifact, the
//! generative sampler, collapsed Gibbs inference, and model queries.
//!
//! Each word of a document is explained by first picking one of the
//! document's authors uniformly, then a topic from that author's topic
//! distribution θ_a, then the word from that topic's word distribution
//! β_k. Both θ rows and β rows carry symmetric Dirichlet priors (α and
//! η). Inference integrates θ and β out analytically and resamples only
//! the discrete per-token author/topic assignments.

mod generative;
mod gibbs;
mod model_io;

pub use generative::{sample_corpus, GenerativeOverrides, SampledCorpus};
pub use gibbs::{fit, AssignmentState};
pub use model_io::{load_model, save_model, MODEL_MAGIC, MODEL_VERSION};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::eval;
use crate::mat::Matrix;
use crate::par;
use crate::textprep::{BagCorpus, Vocabulary};

/// Hyperparameters of the model and its Gibbs run.
///
/// The paper's topic-word prior is called `eta` here so it cannot be
/// confused with the topic-word matrix β itself.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AtmHyperParams {
    /// Topic count K.
    pub k: usize,
    /// Symmetric Dirichlet concentration for author-topic rows.
    pub alpha: f64,
    /// Symmetric Dirichlet concentration for topic-word rows.
    pub eta: f64,
    /// Total Gibbs sweeps.
    pub iterations: usize,
    /// Sweeps discarded before averaging.
    pub burn_in: usize,
    /// Stride between retained sweeps after burn-in.
    pub thinning: usize,
    /// Seed for the ChaCha8 generator.
    pub seed: u64,
}

impl AtmHyperParams {
    /// Defaults: α = 0.5, η = 0.1, 2000 sweeps, burn-in 200, thinning 10.
    pub fn new(k: usize, seed: u64) -> Self {
        AtmHyperParams {
            k,
            alpha: 0.5,
            eta: 0.1,
            iterations: 2000,
            burn_in: 200,
            thinning: 10,
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |reason: &str| {
            Err(Error::InvalidHyperParams {
                reason: reason.into(),
            })
        };
        if self.k < 1 {
            return fail("K must be >= 1");
        }
        // NaN must fail these checks too.
        if self.alpha.partial_cmp(&0.0) != Some(std::cmp::Ordering::Greater) {
            return fail("alpha must be > 0");
        }
        if self.eta.partial_cmp(&0.0) != Some(std::cmp::Ordering::Greater) {
            return fail("eta must be > 0");
        }
        if self.iterations <= self.burn_in {
            return fail("iterations must exceed burn_in");
        }
        if self.thinning < 1 {
            return fail("thinning must be >= 1");
        }
        Ok(())
    }
}

/// The trained artifact: row-stochastic θ (A×K) and β (K×V), the
/// hyperparameters that produced them, and the term/author tables they
/// are indexed against.
#[derive(Debug, Clone, PartialEq)]
pub struct AtmModel {
    pub theta: Matrix,
    pub beta: Matrix,
    pub hyper: AtmHyperParams,
    pub terms: Vec<String>,
    pub authors: Vec<String>,
}

impl AtmModel {
    pub fn n_topics(&self) -> usize {
        self.beta.rows()
    }

    pub fn n_terms(&self) -> usize {
        self.terms.len()
    }

    pub fn n_authors(&self) -> usize {
        self.authors.len()
    }

    /// Checks that a bag corpus is indexed against the same vocabulary
    /// and author table as this model.
    pub fn check_alignment(&self, bag: &BagCorpus) -> Result<()> {
        if bag.n_terms != self.n_terms() {
            return Err(Error::ArtifactMismatch {
                reason: format!(
                    "vocabulary size {} (corpus) vs {} (model)",
                    bag.n_terms,
                    self.n_terms()
                ),
            });
        }
        if bag.authors != self.authors {
            return Err(Error::ArtifactMismatch {
                reason: "author tables differ".into(),
            });
        }
        Ok(())
    }
}

/// The `n` most probable term ids of a topic, descending probability,
/// ties broken by ascending term id. `n` is clamped to V.
pub fn top_term_ids(model: &AtmModel, topic: usize, n: usize) -> Result<Vec<u32>> {
    let k = model.n_topics();
    if topic >= k {
        return Err(Error::TopicOutOfRange { topic, k });
    }
    let row = model.beta.row(topic);
    let mut order: Vec<u32> = (0..row.len() as u32).collect();
    order.sort_by(|&a, &b| {
        row[b as usize]
            .partial_cmp(&row[a as usize])
            .expect("finite probabilities")
            .then(a.cmp(&b))
    });
    order.truncate(n.min(row.len()));
    Ok(order)
}

/// As [`top_term_ids`] but resolved to `(term, probability)` pairs.
pub fn top_terms(model: &AtmModel, topic: usize, n: usize) -> Result<Vec<(String, f64)>> {
    Ok(top_term_ids(model, topic, n)?
        .into_iter()
        .map(|id| (model.terms[id as usize].clone(), model.beta.get(topic, id as usize)))
        .collect())
}

/// The `n` authors with the highest θ mass on a topic, descending,
/// ties broken by ascending author index.
pub fn top_authors_for_topic(
    model: &AtmModel,
    topic: usize,
    n: usize,
) -> Result<Vec<(u32, f64)>> {
    let k = model.n_topics();
    if topic >= k {
        return Err(Error::TopicOutOfRange { topic, k });
    }
    let mut order: Vec<u32> = (0..model.n_authors() as u32).collect();
    order.sort_by(|&a, &b| {
        model
            .theta
            .get(b as usize, topic)
            .partial_cmp(&model.theta.get(a as usize, topic))
            .expect("finite probabilities")
            .then(a.cmp(&b))
    });
    order.truncate(n.min(model.n_authors()));
    Ok(order
        .into_iter()
        .map(|a| (a, model.theta.get(a as usize, topic)))
        .collect())
}

/// Mean per-token log-likelihood of a corpus under the point estimates:
/// (1/N) Σ_{d,n} log[ (1/|A_d|) Σ_{a∈A_d} Σ_k θ_ak β_{k,w} ]. Always <= 0.
pub fn per_word_log_likelihood(model: &AtmModel, bag: &BagCorpus) -> Result<f64> {
    model.check_alignment(bag)?;
    let k = model.n_topics();
    let mut total = 0.0;
    let mut n_tokens = 0u64;
    for (doc, authors) in bag.docs.iter().zip(&bag.doc_authors) {
        for &(term, count) in doc {
            let mut p = 0.0;
            for &a in authors {
                let theta_row = model.theta.row(a as usize);
                for topic in 0..k {
                    p += theta_row[topic] * model.beta.get(topic, term as usize);
                }
            }
            p /= authors.len() as f64;
            total += count as f64 * p.ln();
            n_tokens += count as u64;
        }
    }
    Ok(total / n_tokens as f64)
}

/// One restart chain's outcome in a multi-restart run.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RestartStat {
    pub seed: u64,
    pub mean_coherence: f64,
}

/// Trains `restarts` chains with seeds `hyper.seed + i`, scores each by
/// mean UMass coherence of its topics' top `coherence_top_m` terms, and
/// returns the best model (ties broken by lowest seed) plus the per-chain
/// report. Chains are independent and may run in parallel.
pub fn train_with_restarts(
    bag: &BagCorpus,
    vocab: &Vocabulary,
    hyper: &AtmHyperParams,
    restarts: usize,
    coherence_top_m: usize,
) -> Result<(AtmModel, Vec<RestartStat>)> {
    if restarts < 1 {
        return Err(Error::InvalidHyperParams {
            reason: "restarts must be >= 1".into(),
        });
    }
    hyper.validate()?;

    let chains: Vec<Result<(AtmModel, f64)>> = par::map_indexed(restarts, |i| {
        let chain_hyper = AtmHyperParams {
            seed: hyper.seed + i as u64,
            ..hyper.clone()
        };
        let model = fit(bag, vocab, &chain_hyper)?;
        let report = eval::coherence_report(&model, bag, coherence_top_m)?;
        Ok((model, report.mean))
    });

    let mut best: Option<(AtmModel, f64)> = None;
    let mut stats = Vec::with_capacity(restarts);
    for chain in chains {
        let (model, coherence) = chain?;
        stats.push(RestartStat {
            seed: model.hyper.seed,
            mean_coherence: coherence,
        });
        let better = match &best {
            None => true,
            Some((_, c)) => coherence > *c,
        };
        if better {
            best = Some((model, coherence));
        }
    }
    Ok((best.expect("restarts >= 1").0, stats))
}
