//! Forward sampler for the author-topic generative process: θ rows from
//! Dir(α), β rows from Dir(η), then per token an author uniform over the
//! document's authors, a topic from θ_a, and a word from β_k.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Gamma};

use crate::corpus::AuthorMap;
use crate::error::{Error, Result};
use crate::mat::Matrix;
use crate::textprep::BagCorpus;

use super::AtmHyperParams;

/// Optional fixed θ/β for controlled experiments. When absent, rows are
/// drawn from their Dirichlet priors.
#[derive(Debug, Clone, Default)]
pub struct GenerativeOverrides {
    pub theta: Option<Matrix>,
    pub beta: Option<Matrix>,
}

/// A sampled corpus with its ground truth and raw assignments.
#[derive(Debug, Clone)]
pub struct SampledCorpus {
    pub bag: BagCorpus,
    pub theta: Matrix,
    pub beta: Matrix,
    /// Author picked for each token, aligned with documents.
    pub token_authors: Vec<Vec<u32>>,
    /// Topic picked for each token.
    pub token_topics: Vec<Vec<u32>>,
}

fn dirichlet_row(rng: &mut ChaCha8Rng, dim: usize, concentration: f64) -> Vec<f64> {
    let gamma = Gamma::new(concentration, 1.0).expect("valid concentration");
    let mut row: Vec<f64> = (0..dim)
        .map(|_| gamma.sample(rng).max(1e-300))
        .collect();
    let sum: f64 = row.iter().sum();
    for x in &mut row {
        *x /= sum;
    }
    row
}

fn categorical(rng: &mut ChaCha8Rng, probs: &[f64]) -> usize {
    let u: f64 = rng.gen();
    let mut acc = 0.0;
    for (i, p) in probs.iter().enumerate() {
        acc += p;
        if u < acc {
            return i;
        }
    }
    probs.len() - 1
}

fn check_override(m: &Matrix, rows: usize, cols: usize, what: &str) -> Result<()> {
    if m.rows() != rows || m.cols() != cols {
        return Err(Error::InvalidHyperParams {
            reason: format!(
                "{what} override is {}x{}, expected {rows}x{cols}",
                m.rows(),
                m.cols()
            ),
        });
    }
    for i in 0..rows {
        let sum: f64 = m.row(i).iter().sum();
        if (sum - 1.0).abs() > 1e-9 || m.row(i).iter().any(|&p| p < 0.0) {
            return Err(Error::InvalidHyperParams {
                reason: format!("{what} override row {i} is not a probability vector"),
            });
        }
    }
    Ok(())
}

/// Samples a corpus from the generative process. Deterministic given
/// `hyper.seed`. Every document must have at least one token and one
/// author.
pub fn sample_corpus(
    hyper: &AtmHyperParams,
    author_map: &AuthorMap,
    doc_lengths: &[usize],
    vocab_size: usize,
    overrides: &GenerativeOverrides,
) -> Result<SampledCorpus> {
    hyper.validate()?;
    if doc_lengths.len() != author_map.doc_authors.len() {
        return Err(Error::InvalidHyperParams {
            reason: "doc_lengths and author map disagree on document count".into(),
        });
    }
    if doc_lengths.iter().any(|&len| len == 0) {
        return Err(Error::InvalidHyperParams {
            reason: "every document needs at least one token".into(),
        });
    }
    if vocab_size == 0 {
        return Err(Error::InvalidHyperParams {
            reason: "vocab_size must be >= 1".into(),
        });
    }

    let a = author_map.n_authors();
    let k = hyper.k;
    let mut rng = ChaCha8Rng::seed_from_u64(hyper.seed);

    let theta = match &overrides.theta {
        Some(m) => {
            check_override(m, a, k, "theta")?;
            m.clone()
        }
        None => {
            let rows: Vec<Vec<f64>> = (0..a).map(|_| dirichlet_row(&mut rng, k, hyper.alpha)).collect();
            Matrix::from_rows(&rows)
        }
    };
    let beta = match &overrides.beta {
        Some(m) => {
            check_override(m, k, vocab_size, "beta")?;
            m.clone()
        }
        None => {
            let rows: Vec<Vec<f64>> = (0..k)
                .map(|_| dirichlet_row(&mut rng, vocab_size, hyper.eta))
                .collect();
            Matrix::from_rows(&rows)
        }
    };

    let mut docs = Vec::with_capacity(doc_lengths.len());
    let mut token_authors = Vec::with_capacity(doc_lengths.len());
    let mut token_topics = Vec::with_capacity(doc_lengths.len());
    let mut n_tokens = 0u64;

    for (d, &len) in doc_lengths.iter().enumerate() {
        let authors = &author_map.doc_authors[d];
        let mut words = Vec::with_capacity(len);
        let mut xs = Vec::with_capacity(len);
        let mut zs = Vec::with_capacity(len);
        for _ in 0..len {
            let author = authors[rng.gen_range(0..authors.len())];
            let topic = categorical(&mut rng, theta.row(author as usize)) as u32;
            let word = categorical(&mut rng, beta.row(topic as usize)) as u32;
            xs.push(author);
            zs.push(topic);
            words.push(word);
        }
        let mut counts = std::collections::HashMap::new();
        for &w in &words {
            *counts.entry(w).or_insert(0u32) += 1;
        }
        let mut pairs: Vec<(u32, u32)> = counts.into_iter().collect();
        pairs.sort_unstable_by_key(|(t, _)| *t);
        n_tokens += len as u64;
        docs.push(pairs);
        token_authors.push(xs);
        token_topics.push(zs);
    }

    let bag = BagCorpus {
        docs,
        doc_authors: author_map.doc_authors.clone(),
        doc_ids: (0..doc_lengths.len()).map(|d| format!("synthetic-{d:04}")).collect(),
        authors: author_map.authors.clone(),
        n_terms: vocab_size,
        n_tokens,
    };

    Ok(SampledCorpus {
        bag,
        theta,
        beta,
        token_authors,
        token_topics,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn map_of(doc_authors: Vec<Vec<u32>>, n_authors: usize) -> AuthorMap {
        AuthorMap {
            authors: (0..n_authors).map(|i| format!("Author {i:02}")).collect(),
            doc_authors,
        }
    }

    #[test]
    fn k1_is_degenerate() {
        let map = map_of(vec![vec![0], vec![1]], 2);
        let hyper = AtmHyperParams::new(1, 4);
        let out = sample_corpus(&hyper, &map, &[5, 7], 4, &GenerativeOverrides::default()).unwrap();
        assert!(out.token_topics.iter().flatten().all(|&z| z == 0));
        for a in 0..2 {
            assert_eq!(out.theta.row(a), &[1.0]);
        }
    }

    #[test]
    fn point_mass_overrides_force_the_chain() {
        // theta one-hot on topic 2, beta row 2 one-hot on word 7.
        let k = 3;
        let v = 10;
        let map = map_of(vec![vec![0]], 1);
        let mut theta = Matrix::zeros(1, k);
        theta.set(0, 2, 1.0);
        let mut beta = Matrix::zeros(k, v);
        beta.set(0, 0, 1.0);
        beta.set(1, 1, 1.0);
        beta.set(2, 7, 1.0);
        let hyper = AtmHyperParams::new(k, 11);
        let out = sample_corpus(
            &hyper,
            &map,
            &[20],
            v,
            &GenerativeOverrides {
                theta: Some(theta),
                beta: Some(beta),
            },
        )
        .unwrap();
        assert_eq!(out.bag.docs[0], vec![(7, 20)]);
        assert!(out.token_topics[0].iter().all(|&z| z == 2));
    }

    #[test]
    fn single_author_docs_assign_that_author() {
        let map = map_of(vec![vec![1]], 2);
        let hyper = AtmHyperParams::new(2, 8);
        let out = sample_corpus(&hyper, &map, &[30], 5, &GenerativeOverrides::default()).unwrap();
        assert!(out.token_authors[0].iter().all(|&x| x == 1));
    }

    #[test]
    fn deterministic_given_seed() {
        let map = map_of(vec![vec![0, 1], vec![1]], 2);
        let hyper = AtmHyperParams::new(3, 99);
        let a = sample_corpus(&hyper, &map, &[10, 10], 6, &GenerativeOverrides::default()).unwrap();
        let b = sample_corpus(&hyper, &map, &[10, 10], 6, &GenerativeOverrides::default()).unwrap();
        assert_eq!(a.bag, b.bag);
        assert_eq!(a.theta, b.theta);
        assert_eq!(a.beta, b.beta);
    }

    #[test]
    fn invalid_inputs_are_rejected() {
        let map = map_of(vec![vec![0]], 1);
        let hyper = AtmHyperParams::new(0, 1);
        assert!(sample_corpus(&hyper, &map, &[3], 4, &GenerativeOverrides::default()).is_err());
        let hyper = AtmHyperParams::new(2, 1);
        assert!(sample_corpus(&hyper, &map, &[0], 4, &GenerativeOverrides::default()).is_err());
        assert!(sample_corpus(&hyper, &map, &[3, 3], 4, &GenerativeOverrides::default()).is_err());
    }

    /// Token-author assignments are uniform over each document's authors.
    #[test]
    fn author_choice_is_uniform_over_three_authors() {
        let n_docs = 400;
        let doc_authors: Vec<Vec<u32>> = (0..n_docs)
            .map(|d| {
                let base = (d % 10) as u32 * 3;
                vec![base, base + 1, base + 2]
            })
            .collect();
        let map = map_of(doc_authors, 30);
        let lengths = vec![30usize; n_docs];
        let hyper = AtmHyperParams::new(2, 123);
        let out = sample_corpus(&hyper, &map, &lengths, 20, &GenerativeOverrides::default()).unwrap();

        let mut position_counts = [0u64; 3];
        let mut total = 0u64;
        for (d, xs) in out.token_authors.iter().enumerate() {
            let authors = &map.doc_authors[d];
            for &x in xs {
                let pos = authors.iter().position(|&a| a == x).unwrap();
                position_counts[pos] += 1;
                total += 1;
            }
        }
        assert!(total >= 10_000);
        for (pos, &c) in position_counts.iter().enumerate() {
            let freq = c as f64 / total as f64;
            assert!(
                (freq - 1.0 / 3.0).abs() < 0.03,
                "position {pos} frequency {freq}"
            );
        }
    }
}
