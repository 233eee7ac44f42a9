//! Hellinger distance and the researcher-similarity score over
//! author-topic rows.
//!
//! H(p, q) = (1/√2)·‖√p − √q‖₂ is a bounded metric on probability
//! vectors; the similarity score S = 1/(1 + H) lives in [0.5, 1].

use serde::{Deserialize, Serialize};

use crate::atm::AtmModel;
use crate::error::{Error, Result};
use crate::mat::Matrix;
use crate::par;

const NORMALIZATION_TOL: f64 = 1e-9;

/// Ranked similarity query result. Scores descend; exact ties are broken
/// by ascending author index. The query author is excluded.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimilarityResult {
    pub query_author: u32,
    pub ranked: Vec<(u32, f64)>,
}

fn validate_pair(p: &[f64], q: &[f64]) -> Result<()> {
    if p.len() != q.len() {
        return Err(Error::LengthMismatch {
            left: p.len(),
            right: q.len(),
        });
    }
    for (name, v) in [("left", p), ("right", q)] {
        if v.iter().any(|x| *x < 0.0 || !x.is_finite()) {
            return Err(Error::NotNormalized {
                reason: format!("{name} vector has negative or non-finite entries"),
            });
        }
        let sum: f64 = v.iter().sum();
        if (sum - 1.0).abs() > NORMALIZATION_TOL {
            return Err(Error::NotNormalized {
                reason: format!("{name} vector sums to {sum}"),
            });
        }
    }
    Ok(())
}

/// Renormalizes exactly, then evaluates H. Clamping keeps floating-point
/// drift from pushing the result outside [0, 1].
fn hellinger_unchecked(p: &[f64], q: &[f64]) -> f64 {
    let sp: f64 = p.iter().sum();
    let sq: f64 = q.iter().sum();
    let mut acc = 0.0;
    for (a, b) in p.iter().zip(q) {
        let d = (a / sp).sqrt() - (b / sq).sqrt();
        acc += d * d;
    }
    ((acc / 2.0).sqrt()).clamp(0.0, 1.0)
}

/// Hellinger distance between two probability vectors.
pub fn hellinger(p: &[f64], q: &[f64]) -> Result<f64> {
    validate_pair(p, q)?;
    Ok(hellinger_unchecked(p, q))
}

/// Similarity score S(p, q) = 1 / (1 + H(p, q)), in [0.5, 1].
pub fn similarity(p: &[f64], q: &[f64]) -> Result<f64> {
    Ok(1.0 / (1.0 + hellinger(p, q)?))
}

/// Ranks every other author by similarity to the query author's topic
/// row. `k` is clamped to A − 1.
pub fn top_k_similar(model: &AtmModel, author: usize, k: usize) -> Result<SimilarityResult> {
    let a = model.n_authors();
    if author >= a {
        return Err(Error::AuthorOutOfRange { author, a });
    }
    let query = model.theta.row(author);
    let mut scored: Vec<(u32, f64)> = (0..a)
        .filter(|&other| other != author)
        .map(|other| {
            let s = 1.0 / (1.0 + hellinger_unchecked(query, model.theta.row(other)));
            (other as u32, s)
        })
        .collect();
    scored.sort_by(|x, y| {
        y.1.partial_cmp(&x.1)
            .expect("similarity scores are finite")
            .then(x.0.cmp(&y.0))
    });
    scored.truncate(k.min(a.saturating_sub(1)));
    Ok(SimilarityResult {
        query_author: author as u32,
        ranked: scored,
    })
}

/// Full A×A Hellinger matrix over θ rows: symmetric with a zero
/// diagonal. Each upper-triangle entry is computed once and mirrored;
/// rows are computed in parallel with a deterministic assembly.
pub fn pairwise_hellinger(model: &AtmModel) -> Matrix {
    pairwise_hellinger_of(&model.theta)
}

pub(crate) fn pairwise_hellinger_of(theta: &Matrix) -> Matrix {
    let n = theta.rows();
    let upper: Vec<Vec<f64>> = par::map_indexed(n, |i| {
        ((i + 1)..n)
            .map(|j| hellinger_unchecked(theta.row(i), theta.row(j)))
            .collect()
    });
    assemble_symmetric(n, &upper)
}

/// Sequential twin of [`pairwise_hellinger`] for benchmarks.
pub fn pairwise_hellinger_seq(theta: &Matrix) -> Matrix {
    let n = theta.rows();
    let upper: Vec<Vec<f64>> = par::map_indexed_seq(n, |i| {
        ((i + 1)..n)
            .map(|j| hellinger_unchecked(theta.row(i), theta.row(j)))
            .collect()
    });
    assemble_symmetric(n, &upper)
}

fn assemble_symmetric(n: usize, upper: &[Vec<f64>]) -> Matrix {
    let mut m = Matrix::zeros(n, n);
    for i in 0..n {
        for (off, &d) in upper[i].iter().enumerate() {
            let j = i + 1 + off;
            m.set(i, j, d);
            m.set(j, i, d);
        }
    }
    m
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::atm::AtmHyperParams;
    use proptest::prelude::*;
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn assert_close(a: f64, b: f64, tol: f64) {
        assert!((a - b).abs() <= tol, "{a} vs {b} (tol {tol})");
    }

    #[test]
    fn hellinger_identity_and_maximum() {
        let p = [0.3, 0.7];
        assert_eq!(hellinger(&p, &p).unwrap(), 0.0);
        assert_close(hellinger(&[1.0, 0.0], &[0.0, 1.0]).unwrap(), 1.0, 0.0);
    }

    #[test]
    fn hellinger_closed_form_value() {
        // Direct evaluation: sqrt(((sqrt(.5)-1)^2 + (sqrt(.5))^2) / 2).
        let expected = (((0.5f64.sqrt() - 1.0).powi(2) + 0.5) / 2.0).sqrt();
        let h = hellinger(&[0.5, 0.5], &[1.0, 0.0]).unwrap();
        assert_close(h, expected, 1e-15);
        assert_close(h, 0.5411961, 1e-6);
    }

    #[test]
    fn similarity_closed_form_value() {
        assert_eq!(similarity(&[0.25, 0.75], &[0.25, 0.75]).unwrap(), 1.0);
        assert_close(similarity(&[1.0, 0.0], &[0.0, 1.0]).unwrap(), 0.5, 1e-15);
        let s = similarity(&[0.5, 0.5], &[1.0, 0.0]).unwrap();
        let expected = 1.0 / (1.0 + (((0.5f64.sqrt() - 1.0).powi(2) + 0.5) / 2.0).sqrt());
        assert_close(s, expected, 1e-15);
        assert_close(s, 0.6488463, 1e-6);
    }

    #[test]
    fn invalid_inputs_are_rejected() {
        assert!(matches!(
            hellinger(&[1.0], &[0.5, 0.5]),
            Err(Error::LengthMismatch { .. })
        ));
        assert!(matches!(
            hellinger(&[0.6, 0.6], &[0.5, 0.5]),
            Err(Error::NotNormalized { .. })
        ));
        assert!(matches!(
            hellinger(&[-0.1, 1.1], &[0.5, 0.5]),
            Err(Error::NotNormalized { .. })
        ));
    }

    fn model_from_theta(rows: Vec<Vec<f64>>) -> AtmModel {
        let a = rows.len();
        let k = rows[0].len();
        AtmModel {
            theta: Matrix::from_rows(&rows),
            beta: Matrix::from_rows(&vec![vec![1.0 / 3.0; 3]; k]),
            hyper: AtmHyperParams::new(k, 42),
            terms: (0..3).map(|i| format!("t{i}")).collect(),
            authors: (0..a).map(|i| format!("a{i}")).collect(),
        }
    }

    fn random_simplex(rng: &mut ChaCha8Rng, k: usize) -> Vec<f64> {
        let raw: Vec<f64> = (0..k).map(|_| rng.gen::<f64>() + 1e-3).collect();
        let s: f64 = raw.iter().sum();
        raw.into_iter().map(|x| x / s).collect()
    }

    #[test]
    fn duplicate_row_dominates_ranking() {
        let model = model_from_theta(vec![
            vec![0.2, 0.8],
            vec![0.2, 0.8],
            vec![0.9, 0.1],
        ]);
        let res = top_k_similar(&model, 0, 5).unwrap();
        assert_eq!(res.ranked.len(), 2);
        assert_eq!(res.ranked[0].0, 1);
        assert_eq!(res.ranked[0].1, 1.0);
        assert_eq!(res.ranked[1].0, 2);
    }

    #[test]
    fn k_is_clamped_to_a_minus_one() {
        let model = model_from_theta(vec![
            vec![0.2, 0.8],
            vec![0.3, 0.7],
            vec![0.9, 0.1],
            vec![0.5, 0.5],
        ]);
        let res = top_k_similar(&model, 1, 100).unwrap();
        assert_eq!(res.ranked.len(), 3);
        assert!(matches!(
            top_k_similar(&model, 9, 1),
            Err(Error::AuthorOutOfRange { .. })
        ));
    }

    #[test]
    fn ranking_matches_bruteforce_pairwise_sort() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let rows: Vec<Vec<f64>> = (0..10).map(|_| random_simplex(&mut rng, 4)).collect();
        let model = model_from_theta(rows.clone());
        let res = top_k_similar(&model, 3, 9).unwrap();

        // Independent route: compute every similarity directly and sort.
        let mut expected: Vec<(u32, f64)> = (0..10u32)
            .filter(|&i| i != 3)
            .map(|i| {
                (
                    i,
                    similarity(&rows[3], &rows[i as usize]).unwrap(),
                )
            })
            .collect();
        expected.sort_by(|x, y| y.1.partial_cmp(&x.1).unwrap().then(x.0.cmp(&y.0)));
        for ((ai, si), (bi, sj)) in res.ranked.iter().zip(&expected) {
            assert_eq!(ai, bi);
            assert_close(*si, *sj, 1e-12);
        }
    }

    #[test]
    fn pairwise_matrix_matches_recomputation() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let rows: Vec<Vec<f64>> = (0..5).map(|_| random_simplex(&mut rng, 3)).collect();
        let model = model_from_theta(rows.clone());
        let m = pairwise_hellinger(&model);
        assert_eq!(m.rows(), 5);
        for i in 0..5 {
            assert_eq!(m.get(i, i), 0.0);
            for j in 0..5 {
                assert_eq!(m.get(i, j), m.get(j, i), "exact mirror");
                if i != j {
                    let direct = hellinger(&rows[i], &rows[j]).unwrap();
                    assert_close(m.get(i, j), direct, 1e-12);
                }
            }
        }
        // Parallel and sequential assemblies agree bit-for-bit.
        let seq = pairwise_hellinger_seq(&model.theta);
        assert_eq!(m, seq);
    }

    #[test]
    fn single_author_matrix_is_zero() {
        let model = model_from_theta(vec![vec![1.0]]);
        let m = pairwise_hellinger(&model);
        assert_eq!(m.rows(), 1);
        assert_eq!(m.get(0, 0), 0.0);
    }

    proptest! {
        #[test]
        fn metric_properties_hold(seed in 0u64..500) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let p = random_simplex(&mut rng, 5);
            let q = random_simplex(&mut rng, 5);
            let r = random_simplex(&mut rng, 5);
            let hpq = hellinger(&p, &q).unwrap();
            let hqp = hellinger(&q, &p).unwrap();
            let hpr = hellinger(&p, &r).unwrap();
            let hrq = hellinger(&r, &q).unwrap();
            prop_assert!((hpq - hqp).abs() < 1e-15);
            prop_assert_eq!(hellinger(&p, &p).unwrap(), 0.0);
            prop_assert!(hpq <= hpr + hrq + 1e-9, "triangle inequality");
            prop_assert!((0.0..=1.0).contains(&hpq));
            let s = similarity(&p, &q).unwrap();
            prop_assert!((0.5..=1.0).contains(&s));
        }

        /// Ranking by descending S equals ranking by ascending H.
        #[test]
        fn similarity_order_mirrors_distance_order(seed in 0u64..200) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let rows: Vec<Vec<f64>> = (0..6).map(|_| random_simplex(&mut rng, 3)).collect();
            let q = random_simplex(&mut rng, 3);
            let mut by_s: Vec<usize> = (0..6).collect();
            by_s.sort_by(|&a, &b| {
                similarity(&q, &rows[b]).unwrap()
                    .partial_cmp(&similarity(&q, &rows[a]).unwrap()).unwrap()
                    .then(a.cmp(&b))
            });
            let mut by_h: Vec<usize> = (0..6).collect();
            by_h.sort_by(|&a, &b| {
                hellinger(&q, &rows[a]).unwrap()
                    .partial_cmp(&hellinger(&q, &rows[b]).unwrap()).unwrap()
                    .then(a.cmp(&b))
            });
            prop_assert_eq!(by_s, by_h);
        }
    }
}
