//! Collapsed Gibbs inference for the author-topic model.
//!
//! θ and β are integrated out via Dirichlet-multinomial conjugacy; only
//! the per-token author and topic assignments (x, z) remain. Each token
//! is resampled JOINTLY from
//!
//!   p(x = a, z = k | rest) ∝ (count_ak + α)/(count_a + Kα)
//!                          · (count_kv + η)/(count_k + Vη)
//!
//! restricted to the document's authors (the uniform author prior
//! cancels), with the token's own contribution removed from the counts.
//! After burn-in, θ and β are averaged over the retained sweeps of the
//! smoothed estimates θ̂ = (count_ak + α)/(count_a + Kα) and
//! β̂ = (count_kv + η)/(count_k + Vη).
//!
//! A chain is strictly sequential: documents in order, tokens in order,
//! one RNG draw per token per sweep. Same seed, same model, bit for bit.
//! The single-chain average is a pragmatic posterior summary; label
//! switching within a chain would blur it, but labels are stable in
//! practice on corpora with separated topics.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::mat::Matrix;
use crate::textprep::{BagCorpus, Vocabulary};

use super::{AtmHyperParams, AtmModel};

/// Per-token assignments and the count tables they imply.
pub struct AssignmentState {
    /// Expanded word ids per document (one entry per token instance).
    pub doc_words: Vec<Vec<u32>>,
    /// Author indices per document.
    pub doc_authors: Vec<Vec<u32>>,
    /// Per-token author assignment, aligned with `doc_words`.
    pub x: Vec<Vec<u32>>,
    /// Per-token topic assignment, aligned with `doc_words`.
    pub z: Vec<Vec<u32>>,
    pub count_ak: Vec<u32>,
    pub count_kv: Vec<u32>,
    pub count_k: Vec<u32>,
    pub count_a: Vec<u32>,
    pub n_topics: usize,
    pub n_terms: usize,
    pub n_authors: usize,
}

impl AssignmentState {
    /// Expands the bag corpus into token instances and draws the initial
    /// assignments: author uniform over the document's authors, topic
    /// uniform over K.
    pub fn init(bag: &BagCorpus, k: usize, rng: &mut ChaCha8Rng) -> Self {
        let a = bag.n_authors();
        let v = bag.n_terms;
        let mut state = AssignmentState {
            doc_words: bag
                .docs
                .iter()
                .map(|doc| {
                    doc.iter()
                        .flat_map(|&(term, count)| std::iter::repeat(term).take(count as usize))
                        .collect()
                })
                .collect(),
            doc_authors: bag.doc_authors.clone(),
            x: Vec::new(),
            z: Vec::new(),
            count_ak: vec![0; a * k],
            count_kv: vec![0; k * v],
            count_k: vec![0; k],
            count_a: vec![0; a],
            n_topics: k,
            n_terms: v,
            n_authors: a,
        };

        for d in 0..state.doc_words.len() {
            let authors = state.doc_authors[d].clone();
            let mut xs = Vec::with_capacity(state.doc_words[d].len());
            let mut zs = Vec::with_capacity(state.doc_words[d].len());
            for n in 0..state.doc_words[d].len() {
                let author = authors[rng.gen_range(0..authors.len())];
                let topic = rng.gen_range(0..k) as u32;
                let word = state.doc_words[d][n];
                state.increment(author, topic, word);
                xs.push(author);
                zs.push(topic);
            }
            state.x.push(xs);
            state.z.push(zs);
        }
        state
    }

    fn increment(&mut self, author: u32, topic: u32, word: u32) {
        self.count_ak[author as usize * self.n_topics + topic as usize] += 1;
        self.count_kv[topic as usize * self.n_terms + word as usize] += 1;
        self.count_k[topic as usize] += 1;
        self.count_a[author as usize] += 1;
    }

    fn decrement(&mut self, author: u32, topic: u32, word: u32) {
        self.count_ak[author as usize * self.n_topics + topic as usize] -= 1;
        self.count_kv[topic as usize * self.n_terms + word as usize] -= 1;
        self.count_k[topic as usize] -= 1;
        self.count_a[author as usize] -= 1;
    }

    /// One full sweep: every token of every document resampled in order.
    pub fn sweep(&mut self, hyper: &AtmHyperParams, rng: &mut ChaCha8Rng, weights: &mut Vec<f64>) {
        let k = self.n_topics;
        let v = self.n_terms as f64;
        let k_alpha = hyper.k as f64 * hyper.alpha;
        let v_eta = v * hyper.eta;

        for d in 0..self.doc_words.len() {
            let n_tokens = self.doc_words[d].len();
            for n in 0..n_tokens {
                let word = self.doc_words[d][n];
                let old_author = self.x[d][n];
                let old_topic = self.z[d][n];
                self.decrement(old_author, old_topic, word);

                let authors = &self.doc_authors[d];
                weights.clear();
                let mut total = 0.0;
                for &a in authors {
                    let base = a as usize * k;
                    let denom_a = self.count_a[a as usize] as f64 + k_alpha;
                    for topic in 0..k {
                        let w = (self.count_ak[base + topic] as f64 + hyper.alpha) / denom_a
                            * (self.count_kv[topic * self.n_terms + word as usize] as f64
                                + hyper.eta)
                            / (self.count_k[topic] as f64 + v_eta);
                        weights.push(w);
                        total += w;
                    }
                }

                let u = rng.gen::<f64>() * total;
                let mut acc = 0.0;
                let mut chosen = weights.len() - 1;
                for (cell, w) in weights.iter().enumerate() {
                    acc += w;
                    if u < acc {
                        chosen = cell;
                        break;
                    }
                }
                let new_author = authors[chosen / k];
                let new_topic = (chosen % k) as u32;
                self.increment(new_author, new_topic, word);
                self.x[d][n] = new_author;
                self.z[d][n] = new_topic;
            }
        }
    }

    /// Recounts the tables from (x, z) from scratch and compares with the
    /// incrementally maintained ones. Returns true when they agree exactly.
    pub fn verify_counts(&self) -> bool {
        let mut count_ak = vec![0u32; self.n_authors * self.n_topics];
        let mut count_kv = vec![0u32; self.n_topics * self.n_terms];
        let mut count_k = vec![0u32; self.n_topics];
        let mut count_a = vec![0u32; self.n_authors];
        for d in 0..self.doc_words.len() {
            for n in 0..self.doc_words[d].len() {
                let (a, k, w) = (self.x[d][n], self.z[d][n], self.doc_words[d][n]);
                count_ak[a as usize * self.n_topics + k as usize] += 1;
                count_kv[k as usize * self.n_terms + w as usize] += 1;
                count_k[k as usize] += 1;
                count_a[a as usize] += 1;
            }
        }
        count_ak == self.count_ak
            && count_kv == self.count_kv
            && count_k == self.count_k
            && count_a == self.count_a
    }

    /// Every assignment is within the document's author set and [0, K).
    pub fn verify_support(&self) -> bool {
        self.x.iter().zip(&self.z).zip(&self.doc_authors).all(
            |((xs, zs), authors)| {
                xs.iter().all(|a| authors.contains(a))
                    && zs.iter().all(|&t| (t as usize) < self.n_topics)
            },
        )
    }

    fn smoothed_theta(&self, hyper: &AtmHyperParams) -> Matrix {
        let k_alpha = self.n_topics as f64 * hyper.alpha;
        let mut theta = Matrix::zeros(self.n_authors, self.n_topics);
        for a in 0..self.n_authors {
            let denom = self.count_a[a] as f64 + k_alpha;
            for t in 0..self.n_topics {
                theta.set(
                    a,
                    t,
                    (self.count_ak[a * self.n_topics + t] as f64 + hyper.alpha) / denom,
                );
            }
        }
        theta
    }

    fn smoothed_beta(&self, hyper: &AtmHyperParams) -> Matrix {
        let v_eta = self.n_terms as f64 * hyper.eta;
        let mut beta = Matrix::zeros(self.n_topics, self.n_terms);
        for t in 0..self.n_topics {
            let denom = self.count_k[t] as f64 + v_eta;
            for w in 0..self.n_terms {
                beta.set(
                    t,
                    w,
                    (self.count_kv[t * self.n_terms + w] as f64 + hyper.eta) / denom,
                );
            }
        }
        beta
    }
}

/// Fits the model by collapsed Gibbs sampling. Deterministic given the
/// seed; sweeps run strictly sequentially.
pub fn fit(bag: &BagCorpus, vocab: &Vocabulary, hyper: &AtmHyperParams) -> Result<AtmModel> {
    hyper.validate()?;
    if bag.docs.is_empty() {
        return Err(Error::EmptyCorpus);
    }
    if bag.n_terms != vocab.len() {
        return Err(Error::ArtifactMismatch {
            reason: format!(
                "bag indexes {} terms but vocabulary has {}",
                bag.n_terms,
                vocab.len()
            ),
        });
    }
    if hyper.k as u64 > bag.n_tokens {
        log::warn!(
            "K = {} exceeds the corpus token count {}; most topics will stay at the prior",
            hyper.k,
            bag.n_tokens
        );
    }

    let mut rng = ChaCha8Rng::seed_from_u64(hyper.seed);
    let mut state = AssignmentState::init(bag, hyper.k, &mut rng);
    debug_assert!(state.verify_counts());

    let a = state.n_authors;
    let v = state.n_terms;
    let mut theta_acc = vec![0.0f64; a * hyper.k];
    let mut beta_acc = vec![0.0f64; hyper.k * v];
    let mut retained = 0usize;
    let mut weights: Vec<f64> = Vec::with_capacity(hyper.k * 8);

    for sweep in 1..=hyper.iterations {
        state.sweep(hyper, &mut rng, &mut weights);
        if sweep > hyper.burn_in && (sweep - hyper.burn_in - 1) % hyper.thinning == 0 {
            let theta = state.smoothed_theta(hyper);
            let beta = state.smoothed_beta(hyper);
            for (acc, v) in theta_acc.iter_mut().zip(theta.data()) {
                *acc += v;
            }
            for (acc, v) in beta_acc.iter_mut().zip(beta.data()) {
                *acc += v;
            }
            retained += 1;
        }
    }
    debug_assert!(state.verify_counts());

    let denom = retained as f64;
    for x in &mut theta_acc {
        *x /= denom;
    }
    for x in &mut beta_acc {
        *x /= denom;
    }

    Ok(AtmModel {
        theta: Matrix::from_vec(a, hyper.k, theta_acc),
        beta: Matrix::from_vec(hyper.k, v, beta_acc),
        hyper: hyper.clone(),
        terms: vocab.terms.clone(),
        authors: bag.authors.clone(),
    })
}
