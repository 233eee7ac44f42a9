//! Exact O(n²) t-SNE over a precomputed distance matrix.
//!
//! Input affinities are Gaussian conditionals on squared distances with
//! per-row bandwidths found by bisection to match a target perplexity
//! (2^entropy), then symmetrized: P = (P_cond + P_condᵀ) / 2n. The
//! embedding minimizes KL(P‖Q) with a Student-t (1 d.o.f.) Q by gradient
//! descent with momentum and early exaggeration.
//!
//! The gradient for point i is 4·Σⱼ (pᵢⱼ − qᵢⱼ)(yᵢ − yⱼ)(1 + ‖yᵢ − yⱼ‖²)⁻¹.
//! p and q are floored at 1e-12 inside logarithms only.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};
use crate::mat::Matrix;
use crate::par;

use super::TsneConfig;

const LOG_FLOOR: f64 = 1e-12;
const PERPLEXITY_TOL: f64 = 1e-5;
const MAX_BISECTIONS: usize = 50;

fn validate_distances(distances: &Matrix) -> Result<usize> {
    let n = distances.rows();
    if distances.cols() != n {
        return Err(Error::BadDistanceMatrix {
            reason: format!("matrix is {}x{}", n, distances.cols()),
        });
    }
    if n < 3 {
        return Err(Error::TooFewPoints { n });
    }
    for i in 0..n {
        if distances.get(i, i) != 0.0 {
            return Err(Error::BadDistanceMatrix {
                reason: format!("nonzero diagonal at {i}"),
            });
        }
        for j in 0..n {
            let d = distances.get(i, j);
            if !d.is_finite() || d < 0.0 {
                return Err(Error::BadDistanceMatrix {
                    reason: format!("entry ({i}, {j}) = {d}"),
                });
            }
            if d != distances.get(j, i) {
                return Err(Error::BadDistanceMatrix {
                    reason: format!("asymmetric at ({i}, {j})"),
                });
            }
        }
    }
    Ok(n)
}

/// One row of Gaussian conditional probabilities with its bandwidth
/// bisected until the row perplexity is within 1e-5 of the target (at
/// most 50 steps; rows whose ties make the target unreachable keep their
/// closest achievable value).
///
/// Exponents are shifted by the row's minimum squared distance, which
/// changes nothing after normalization but keeps the nearest neighbor's
/// weight at exp(0) for any bandwidth.
fn conditional_row(sq_dists: &[f64], i: usize, target: f64) -> Vec<f64> {
    let n = sq_dists.len();
    let shift = sq_dists
        .iter()
        .enumerate()
        .filter(|&(j, _)| j != i)
        .map(|(_, &d)| d)
        .fold(f64::INFINITY, f64::min);
    let mut p = vec![0.0; n];
    let mut beta = 1.0;
    let mut beta_min = f64::NEG_INFINITY;
    let mut beta_max = f64::INFINITY;

    for _ in 0..MAX_BISECTIONS {
        let mut sum = 0.0;
        for j in 0..n {
            if j != i {
                p[j] = (-beta * (sq_dists[j] - shift)).exp();
                sum += p[j];
            } else {
                p[j] = 0.0;
            }
        }
        for x in &mut p {
            *x /= sum;
        }

        let entropy: f64 = p
            .iter()
            .filter(|&&x| x > 0.0)
            .map(|&x| -x * x.ln())
            .sum();
        let perplexity = entropy.exp();
        let diff = perplexity - target;
        if diff.abs() <= PERPLEXITY_TOL {
            break;
        }
        if diff > 0.0 {
            beta_min = beta;
            beta = if beta_max.is_infinite() {
                beta * 2.0
            } else {
                (beta + beta_max) / 2.0
            };
        } else {
            beta_max = beta;
            beta = if beta_min.is_infinite() {
                beta / 2.0
            } else {
                (beta + beta_min) / 2.0
            };
        }
    }
    p
}

fn affinities_from_rows(n: usize, cond: Vec<Vec<f64>>) -> Matrix {
    let mut p = Matrix::zeros(n, n);
    let denom = 2.0 * n as f64;
    for i in 0..n {
        for j in 0..n {
            p.set(i, j, (cond[i][j] + cond[j][i]) / denom);
        }
    }
    p
}

/// Effective perplexity: clamped to (n − 1)/3 with a warning, kept > 1.
fn effective_perplexity(perplexity: f64, n: usize) -> f64 {
    let cap = (n as f64 - 1.0) / 3.0;
    if perplexity > cap {
        log::warn!("perplexity {perplexity} clamped to {cap} for n = {n}");
        cap.max(1.0 + 1e-6)
    } else {
        perplexity
    }
}

/// Symmetrized joint affinity matrix P: entries nonnegative, Σ P = 1,
/// zero diagonal. Rows run in parallel; assembly is index-ordered, so
/// the result is bit-identical to a sequential run.
pub fn input_affinities(distances: &Matrix, perplexity: f64) -> Result<Matrix> {
    let n = validate_distances(distances)?;
    let target = effective_perplexity(perplexity, n);
    let cond = par::map_indexed(n, |i| {
        let sq: Vec<f64> = distances.row(i).iter().map(|d| d * d).collect();
        conditional_row(&sq, i, target)
    });
    Ok(affinities_from_rows(n, cond))
}

/// Sequential twin of [`input_affinities`] for benchmarks.
pub fn input_affinities_seq(distances: &Matrix, perplexity: f64) -> Result<Matrix> {
    let n = validate_distances(distances)?;
    let target = effective_perplexity(perplexity, n);
    let cond = par::map_indexed_seq(n, |i| {
        let sq: Vec<f64> = distances.row(i).iter().map(|d| d * d).collect();
        conditional_row(&sq, i, target)
    });
    Ok(affinities_from_rows(n, cond))
}

/// Student-t weights w_ij = (1 + ‖yᵢ − yⱼ‖²)⁻¹ and their off-diagonal
/// total. Per-row partial sums are reduced in index order.
fn embedded_weights(y: &Matrix) -> (Matrix, f64) {
    let n = y.rows();
    let rows: Vec<(Vec<f64>, f64)> = par::map_indexed(n, |i| {
        let yi = y.row(i);
        let mut row = vec![0.0; n];
        let mut partial = 0.0;
        for j in 0..n {
            if j != i {
                let yj = y.row(j);
                let dx = yi[0] - yj[0];
                let dy = yi[1] - yj[1];
                let w = 1.0 / (1.0 + dx * dx + dy * dy);
                row[j] = w;
                partial += w;
            }
        }
        (row, partial)
    });
    let mut w = Matrix::zeros(n, n);
    let mut z = 0.0;
    for (i, (row, partial)) in rows.into_iter().enumerate() {
        w.row_mut(i).copy_from_slice(&row);
        z += partial;
    }
    (w, z)
}

/// Low-dimensional joint probabilities Q for the current coordinates.
pub fn q_matrix(y: &Matrix) -> Matrix {
    let (mut w, z) = embedded_weights(y);
    for x in w.data_mut() {
        *x /= z;
    }
    w
}

/// KL(P‖Q) with both arguments floored at 1e-12 inside the logarithm.
pub fn kl_divergence(p: &Matrix, y: &Matrix) -> f64 {
    let q = q_matrix(y);
    let n = p.rows();
    let mut kl = 0.0;
    for i in 0..n {
        for j in 0..n {
            if i == j {
                continue;
            }
            let pij = p.get(i, j);
            if pij > 0.0 {
                kl += pij * (pij.max(LOG_FLOOR).ln() - q.get(i, j).max(LOG_FLOOR).ln());
            }
        }
    }
    kl
}

/// Analytic gradient of KL(P‖Q) with respect to the coordinates.
pub fn kl_gradient(p: &Matrix, y: &Matrix) -> Matrix {
    let (w, z) = embedded_weights(y);
    let n = y.rows();
    let grad_rows: Vec<[f64; 2]> = par::map_indexed(n, |i| {
        let yi = y.row(i);
        let mut g = [0.0; 2];
        for j in 0..n {
            if j != i {
                let yj = y.row(j);
                let wij = w.get(i, j);
                let qij = wij / z;
                let coeff = 4.0 * (p.get(i, j) - qij) * wij;
                g[0] += coeff * (yi[0] - yj[0]);
                g[1] += coeff * (yi[1] - yj[1]);
            }
        }
        g
    });
    let mut grad = Matrix::zeros(n, 2);
    for (i, g) in grad_rows.into_iter().enumerate() {
        grad.set(i, 0, g[0]);
        grad.set(i, 1, g[1]);
    }
    grad
}

/// Result of a full optimization run, with per-iteration KL values for
/// convergence checks.
pub struct TsneRun {
    pub coords: Matrix,
    pub kl_history: Vec<f64>,
}

/// Runs the optimizer and keeps diagnostics.
pub fn run_tsne(distances: &Matrix, config: &TsneConfig) -> Result<TsneRun> {
    config.validate()?;
    let n = validate_distances(distances)?;
    let p = input_affinities(distances, config.perplexity)?;

    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let normal = Normal::new(0.0, 1e-4).expect("valid sigma");
    let mut y = Matrix::zeros(n, 2);
    for x in y.data_mut() {
        *x = normal.sample(&mut rng);
    }

    let mut velocity = Matrix::zeros(n, 2);
    let mut gains = vec![1.0f64; n * 2];
    let mut kl_history = Vec::with_capacity(config.iterations);
    let mut p_eff = p.clone();

    for iter in 0..config.iterations {
        if iter < config.exaggeration_iters {
            for (eff, base) in p_eff.data_mut().iter_mut().zip(p.data()) {
                *eff = base * config.early_exaggeration;
            }
        } else {
            p_eff.data_mut().copy_from_slice(p.data());
        }

        let grad = kl_gradient(&p_eff, &y);
        let momentum = if iter < config.exaggeration_iters {
            config.momentum_early
        } else {
            config.momentum_late
        };
        for idx in 0..n * 2 {
            let g = grad.data()[idx];
            // Per-parameter gains from the reference optimizer: grow when
            // gradient and velocity agree in direction, shrink otherwise.
            gains[idx] = if (g > 0.0) == (velocity.data()[idx] > 0.0) {
                (gains[idx] * 0.8).max(0.01)
            } else {
                gains[idx] + 0.2
            };
            let v = momentum * velocity.data()[idx] - config.learning_rate * gains[idx] * g;
            velocity.data_mut()[idx] = v;
            y.data_mut()[idx] += v;
        }
        // Re-center so coordinates stay bounded; the objective is
        // translation invariant.
        let (mut cx, mut cy) = (0.0, 0.0);
        for i in 0..n {
            cx += y.get(i, 0);
            cy += y.get(i, 1);
        }
        cx /= n as f64;
        cy /= n as f64;
        for i in 0..n {
            let vx = y.get(i, 0) - cx;
            let vy = y.get(i, 1) - cy;
            y.set(i, 0, vx);
            y.set(i, 1, vy);
        }

        kl_history.push(kl_divergence(&p, &y));
    }

    Ok(TsneRun {
        coords: y,
        kl_history,
    })
}

/// 2-D coordinates minimizing KL(P‖Q). Deterministic given the seed.
pub fn tsne(distances: &Matrix, config: &TsneConfig) -> Result<Matrix> {
    run_tsne(distances, config).map(|r| r.coords)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    fn equilateral_distances() -> Matrix {
        let mut d = Matrix::zeros(3, 3);
        for i in 0..3 {
            for j in 0..3 {
                if i != j {
                    d.set(i, j, 1.0);
                }
            }
        }
        d
    }

    fn random_distances(n: usize, seed: u64) -> Matrix {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut d = Matrix::zeros(n, n);
        for i in 0..n {
            for j in (i + 1)..n {
                let v: f64 = rng.gen::<f64>() + 0.05;
                d.set(i, j, v);
                d.set(j, i, v);
            }
        }
        d
    }

    #[test]
    fn three_equidistant_points_give_uniform_p() {
        let p = input_affinities(&equilateral_distances(), 1.5).unwrap();
        for i in 0..3 {
            assert_eq!(p.get(i, i), 0.0);
            for j in 0..3 {
                if i != j {
                    assert!(
                        (p.get(i, j) - 1.0 / 6.0).abs() < 1e-12,
                        "p[{i}][{j}] = {}",
                        p.get(i, j)
                    );
                }
            }
        }
    }

    #[test]
    fn equal_distance_row_is_uniform() {
        // Distances from point 0 are all equal; its conditional row must
        // be uniform whatever the bandwidth.
        let mut d = random_distances(5, 3);
        for j in 1..5 {
            d.set(0, j, 2.0);
            d.set(j, 0, 2.0);
        }
        let target = 1.3;
        let sq: Vec<f64> = d.row(0).iter().map(|x| x * x).collect();
        let row = conditional_row(&sq, 0, target);
        for j in 1..5 {
            assert!((row[j] - 0.25).abs() < 1e-12);
        }
    }

    #[test]
    fn p_matrix_invariants_hold() {
        let d = random_distances(8, 17);
        let p = input_affinities(&d, 2.0).unwrap();
        let mut total = 0.0;
        for i in 0..8 {
            assert_eq!(p.get(i, i), 0.0);
            for j in 0..8 {
                let v = p.get(i, j);
                assert!(v >= 0.0);
                assert_eq!(v, p.get(j, i));
                total += v;
            }
        }
        assert!((total - 1.0).abs() < 1e-12);
        // Parallel and sequential agree exactly.
        assert_eq!(p, input_affinities_seq(&d, 2.0).unwrap());
    }

    #[test]
    fn row_perplexities_hit_target() {
        let d = random_distances(5, 29);
        let target = 1.3;
        for i in 0..5 {
            let sq: Vec<f64> = d.row(i).iter().map(|x| x * x).collect();
            let row = conditional_row(&sq, i, target);
            // Independent re-derivation of the row's perplexity.
            let entropy: f64 = row
                .iter()
                .filter(|&&x| x > 0.0)
                .map(|&x| -x * x.ln())
                .sum();
            assert!(
                (entropy.exp() - target).abs() <= 1e-5,
                "row {i}: perplexity {}",
                entropy.exp()
            );
        }
    }

    #[test]
    fn too_few_or_malformed_inputs_error() {
        let d = Matrix::zeros(2, 2);
        assert!(matches!(
            input_affinities(&d, 1.5),
            Err(Error::TooFewPoints { n: 2 })
        ));
        let mut bad = random_distances(4, 5);
        bad.set(1, 2, bad.get(2, 1) + 0.5);
        assert!(matches!(
            input_affinities(&bad, 1.5),
            Err(Error::BadDistanceMatrix { .. })
        ));
    }

    #[test]
    fn gradient_matches_central_differences() {
        for &n in &[4usize, 6, 10] {
            let d = random_distances(n, 100 + n as u64);
            let p = input_affinities(&d, 2.0).unwrap();
            let mut rng = ChaCha8Rng::seed_from_u64(n as u64);
            let mut y = Matrix::zeros(n, 2);
            for x in y.data_mut() {
                *x = rng.gen::<f64>() * 2.0 - 1.0;
            }

            let analytic = kl_gradient(&p, &y);
            let h = 1e-5;
            let mut max_rel = 0.0f64;
            for i in 0..n {
                for c in 0..2 {
                    let mut plus = y.clone();
                    plus.set(i, c, plus.get(i, c) + h);
                    let mut minus = y.clone();
                    minus.set(i, c, minus.get(i, c) - h);
                    let fd = (kl_divergence(&p, &plus) - kl_divergence(&p, &minus)) / (2.0 * h);
                    let a = analytic.get(i, c);
                    let rel = (a - fd).abs() / a.abs().max(fd.abs()).max(1e-8);
                    max_rel = max_rel.max(rel);
                }
            }
            assert!(max_rel < 1e-4, "n = {n}: max relative error {max_rel}");
        }
    }

    #[test]
    fn objective_is_translation_invariant() {
        let n = 6;
        let d = random_distances(n, 31);
        let p = input_affinities(&d, 1.5).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(77);
        let mut y = Matrix::zeros(n, 2);
        for x in y.data_mut() {
            *x = rng.gen::<f64>();
        }
        let base = kl_divergence(&p, &y);
        let mut shifted = y.clone();
        for i in 0..n {
            shifted.set(i, 0, shifted.get(i, 0) + 3.25);
            shifted.set(i, 1, shifted.get(i, 1) - 1.5);
        }
        assert!((kl_divergence(&p, &shifted) - base).abs() < 1e-12);
    }

    #[test]
    fn q_matrix_invariants_at_final_iteration() {
        let d = random_distances(6, 41);
        let config = TsneConfig {
            iterations: 120,
            exaggeration_iters: 40,
            perplexity: 1.5,
            ..TsneConfig::new(9)
        };
        let run = run_tsne(&d, &config).unwrap();
        let q = q_matrix(&run.coords);
        let mut total = 0.0;
        for i in 0..6 {
            assert_eq!(q.get(i, i), 0.0);
            for j in 0..6 {
                assert!(q.get(i, j) >= 0.0);
                assert_eq!(q.get(i, j), q.get(j, i));
                total += q.get(i, j);
            }
        }
        assert!((total - 1.0).abs() < 1e-9);
    }

    #[test]
    fn same_seed_reproduces_coords() {
        let d = random_distances(7, 53);
        let config = TsneConfig {
            iterations: 150,
            exaggeration_iters: 50,
            perplexity: 1.8,
            ..TsneConfig::new(4)
        };
        let a = tsne(&d, &config).unwrap();
        let b = tsne(&d, &config).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn well_separated_clusters_stay_separated() {
        // Two 4-point clusters: within-cluster distance 0.01, between 10.
        let n = 8;
        let mut d = Matrix::zeros(n, n);
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    let same = (i < 4) == (j < 4);
                    d.set(i, j, if same { 0.01 } else { 10.0 });
                }
            }
        }
        let config = TsneConfig {
            perplexity: 2.0,
            iterations: 600,
            exaggeration_iters: 150,
            ..TsneConfig::new(12)
        };
        let y = tsne(&d, &config).unwrap();
        let dist = |a: usize, b: usize| {
            let dx = y.get(a, 0) - y.get(b, 0);
            let dy = y.get(a, 1) - y.get(b, 1);
            (dx * dx + dy * dy).sqrt()
        };
        let mut max_within = 0.0f64;
        let mut min_between = f64::INFINITY;
        for i in 0..n {
            for j in (i + 1)..n {
                let v = dist(i, j);
                if (i < 4) == (j < 4) {
                    max_within = max_within.max(v);
                } else {
                    min_between = min_between.min(v);
                }
            }
        }
        assert!(
            max_within < min_between,
            "within {max_within} vs between {min_between}"
        );
    }

    #[test]
    fn kl_is_mostly_non_increasing_late_in_the_run() {
        let d = random_distances(10, 71);
        let config = TsneConfig {
            perplexity: 2.5,
            iterations: 300,
            exaggeration_iters: 80,
            ..TsneConfig::new(3)
        };
        let run = run_tsne(&d, &config).unwrap();
        let tail = &run.kl_history[run.kl_history.len() - 101..];
        let decreases = tail
            .windows(2)
            .filter(|w| w[1] <= w[0] + 1e-12)
            .count();
        let frac = decreases as f64 / (tail.len() - 1) as f64;
        assert!(frac >= 0.95, "only {frac} of late steps decreased KL");
    }
}
