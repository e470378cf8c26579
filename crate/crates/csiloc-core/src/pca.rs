//! Deterministic principal-component scores for small, dense problems.
//!
//! The image layout treats every feature column as one observation whose
//! coordinates are that feature's values over the training rows, then places
//! the observations by their first two principal components. With `F`
//! features and `N` training rows the observation matrix is `F x N`; since
//! only scores (not loadings) are needed, we eigendecompose the `F x F` Gram
//! matrix of the centred observations, which is cheap when `F << N`.
//!
//! Everything is branch-free of randomness: a cyclic Jacobi sweep with a fixed
//! rotation order, descending eigenvalue sort with index tie-break, and a sign
//! convention that makes each score axis unique (the observation with the
//! largest |score| gets a positive score, earliest index winning ties).

use alloc::vec;
use alloc::vec::Vec;
#[allow(unused_imports)]
use num_traits::Float;

/// First two principal-component scores for a set of observations.
#[derive(Clone, Debug)]
pub struct LeadingScores {
    /// Per-observation `(score_1, score_2)`.
    pub scores: Vec<[f64; 2]>,
    /// Eigenvalues of the centred Gram matrix for the two leading axes.
    pub eigenvalues: [f64; 2],
}

/// Compute the two leading principal-component scores of `observations`
/// (each a point in `R^dim`, all the same length).
///
/// Returns `None` when the observations are indistinguishable (zero total
/// spread), in which case no projection axis exists. A zero *second*
/// eigenvalue is fine: the second score column is all zeros.
pub fn leading_scores(observations: &[Vec<f64>]) -> Option<LeadingScores> {
    let n = observations.len();
    assert!(n >= 2, "need at least two observations, got {n}");
    let dim = observations[0].len();

    // Centre across observations.
    let mut mean = vec![0.0f64; dim];
    for obs in observations {
        assert_eq!(obs.len(), dim, "ragged observation set");
        for (m, v) in mean.iter_mut().zip(obs) {
            *m += v;
        }
    }
    for m in &mut mean {
        *m /= n as f64;
    }
    let centred: Vec<Vec<f64>> = observations
        .iter()
        .map(|obs| obs.iter().zip(&mean).map(|(v, m)| v - m).collect())
        .collect();

    // Gram matrix G[i][j] = <c_i, c_j>, symmetric n x n.
    let mut gram = vec![0.0f64; n * n];
    for i in 0..n {
        for j in i..n {
            let dot: f64 = centred[i].iter().zip(&centred[j]).map(|(a, b)| a * b).sum();
            gram[i * n + j] = dot;
            gram[j * n + i] = dot;
        }
    }

    let total_spread: f64 = (0..n).map(|i| gram[i * n + i]).sum();
    if total_spread <= f64::EPSILON * n as f64 {
        return None;
    }

    let (eigenvalues, eigenvectors) = jacobi_eigen_sym(gram, n);

    // Scores along axis k are sqrt(lambda_k) * v_k; a non-positive eigenvalue
    // (numerically zero spread beyond the first axis) collapses to zeros.
    let mut scores = vec![[0.0f64; 2]; n];
    let mut leading = [0.0f64; 2];
    for k in 0..2 {
        let lambda = eigenvalues[k].max(0.0);
        leading[k] = lambda;
        if lambda <= total_spread * 1e-12 {
            continue;
        }
        let scale = lambda.sqrt();
        let axis: Vec<f64> = (0..n).map(|i| eigenvectors[i * n + k] * scale).collect();
        // Sign convention: largest-magnitude score positive, first index on ties.
        let mut pivot = 0;
        for (i, v) in axis.iter().enumerate() {
            if v.abs() > axis[pivot].abs() {
                pivot = i;
            }
        }
        let flip = if axis[pivot] < 0.0 { -1.0 } else { 1.0 };
        for (s, v) in scores.iter_mut().zip(&axis) {
            s[k] = v * flip;
        }
    }

    Some(LeadingScores {
        scores,
        eigenvalues: leading,
    })
}

/// Eigendecomposition of a symmetric matrix by cyclic Jacobi rotations.
///
/// `a` is row-major `n x n` and is consumed. Returns `(eigenvalues,
/// eigenvectors)` with eigenvalues sorted descending (original index breaking
/// ties) and eigenvectors as the columns of the returned row-major matrix, in
/// the same order. Deterministic: fixed sweep order, fixed convergence
/// threshold, no pivot randomisation.
pub fn jacobi_eigen_sym(mut a: Vec<f64>, n: usize) -> (Vec<f64>, Vec<f64>) {
    assert_eq!(a.len(), n * n);
    let mut v = vec![0.0f64; n * n];
    for i in 0..n {
        v[i * n + i] = 1.0;
    }
    if n == 1 {
        return (vec![a[0]], v);
    }

    let scale: f64 = (0..n).map(|i| a[i * n + i].abs()).fold(0.0, f64::max).max(1e-300);
    let tol = scale * 1e-14;

    for _sweep in 0..100 {
        let mut off = 0.0f64;
        for p in 0..n {
            for q in (p + 1)..n {
                off = off.max(a[p * n + q].abs());
            }
        }
        if off <= tol {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a[p * n + q];
                if apq.abs() <= tol * 1e-2 {
                    continue;
                }
                let app = a[p * n + p];
                let aqq = a[q * n + q];
                let theta = (aqq - app) / (2.0 * apq);
                // Smaller-angle root for stability.
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;

                // Update rows/columns p and q of A (symmetric storage).
                for i in 0..n {
                    if i != p && i != q {
                        let aip = a[i * n + p];
                        let aiq = a[i * n + q];
                        a[i * n + p] = c * aip - s * aiq;
                        a[p * n + i] = a[i * n + p];
                        a[i * n + q] = s * aip + c * aiq;
                        a[q * n + i] = a[i * n + q];
                    }
                }
                a[p * n + p] = app - t * apq;
                a[q * n + q] = aqq + t * apq;
                a[p * n + q] = 0.0;
                a[q * n + p] = 0.0;

                // Accumulate the rotation into the eigenvector columns.
                for i in 0..n {
                    let vip = v[i * n + p];
                    let viq = v[i * n + q];
                    v[i * n + p] = c * vip - s * viq;
                    v[i * n + q] = s * vip + c * viq;
                }
            }
        }
    }

    // Sort eigenpairs by descending eigenvalue, original index on ties.
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| {
        let (di, dj) = (a[i * n + i], a[j * n + j]);
        dj.partial_cmp(&di).unwrap().then(i.cmp(&j))
    });
    let eigenvalues: Vec<f64> = order.iter().map(|&i| a[i * n + i]).collect();
    let mut sorted_v = vec![0.0f64; n * n];
    for (new_col, &old_col) in order.iter().enumerate() {
        for row in 0..n {
            sorted_v[row * n + new_col] = v[row * n + old_col];
        }
    }
    (eigenvalues, sorted_v)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn jacobi_recovers_known_spectrum() {
        // A = Q diag(5, 2, 1) Q^T for a hand-built orthogonal Q.
        let q = [
            [2.0 / 3.0, -2.0 / 3.0, 1.0 / 3.0],
            [2.0 / 3.0, 1.0 / 3.0, -2.0 / 3.0],
            [1.0 / 3.0, 2.0 / 3.0, 2.0 / 3.0],
        ];
        let d = [5.0, 2.0, 1.0];
        let mut a = vec![0.0; 9];
        for i in 0..3 {
            for j in 0..3 {
                let mut sum = 0.0;
                for k in 0..3 {
                    sum += q[i][k] * d[k] * q[j][k];
                }
                a[i * 3 + j] = sum;
            }
        }
        let (vals, vecs) = jacobi_eigen_sym(a.clone(), 3);
        assert_abs_diff_eq!(vals[0], 5.0, epsilon = 1e-12);
        assert_abs_diff_eq!(vals[1], 2.0, epsilon = 1e-12);
        assert_abs_diff_eq!(vals[2], 1.0, epsilon = 1e-12);
        // A v = lambda v for each column.
        for col in 0..3 {
            for row in 0..3 {
                let mut av = 0.0;
                for k in 0..3 {
                    av += a[row * 3 + k] * vecs[k * 3 + col];
                }
                assert_abs_diff_eq!(av, vals[col] * vecs[row * 3 + col], epsilon = 1e-10);
            }
        }
    }

    #[test]
    fn jacobi_matches_nalgebra_on_random_symmetric_matrices() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(99);
        for trial in 0..20 {
            let n = 2 + (trial % 7);
            let mut m = nalgebra::DMatrix::<f64>::zeros(n, n);
            for i in 0..n {
                for j in i..n {
                    let x: f64 = rng.gen_range(-3.0..3.0);
                    m[(i, j)] = x;
                    m[(j, i)] = x;
                }
            }
            let flat: Vec<f64> = (0..n * n).map(|k| m[(k / n, k % n)]).collect();
            let (vals, _) = jacobi_eigen_sym(flat, n);
            let mut reference: Vec<f64> = m.symmetric_eigen().eigenvalues.iter().copied().collect();
            reference.sort_by(|a, b| b.partial_cmp(a).unwrap());
            for (got, want) in vals.iter().zip(&reference) {
                assert_abs_diff_eq!(got, want, epsilon = 1e-9);
            }
        }
    }

    #[test]
    fn leading_scores_match_direct_two_dim_pca() {
        // Four observations already living in a 2-D subspace. Centred
        // coordinates: x = (-3, 1, 1, 1), y = (0, 0.5, -1, 0.5), which have
        // zero cross-covariance, so the principal axes are the coordinate
        // axes (variances 12 and 1.5) and the scores are the centred
        // coordinates up to the documented sign convention.
        let obs = vec![
            vec![0.0, 1.0],
            vec![4.0, 1.5],
            vec![4.0, 0.0],
            vec![4.0, 1.5],
        ];
        let got = leading_scores(&obs).expect("non-degenerate");

        // Independent oracle: apply the same sign rule to the known centred
        // coordinates. Axis 1 pivot is index 0 (|-3| strictly largest, flips
        // to +3); axis 2 pivot is index 2 (|-1| strictly largest, flips too).
        let expect = [[3.0, 0.0], [-1.0, -0.5], [-1.0, 1.0], [-1.0, -0.5]];
        for (g, e) in got.scores.iter().zip(&expect) {
            assert_abs_diff_eq!(g[0], e[0], epsilon = 1e-9);
            assert_abs_diff_eq!(g[1], e[1], epsilon = 1e-9);
        }
        assert_abs_diff_eq!(got.eigenvalues[0], 12.0, epsilon = 1e-9);
        assert_abs_diff_eq!(got.eigenvalues[1], 1.5, epsilon = 1e-9);
    }

    #[test]
    fn identical_observations_are_degenerate() {
        let obs = vec![vec![1.0, 2.0, 3.0]; 5];
        assert!(leading_scores(&obs).is_none());
    }

    #[test]
    fn one_dimensional_spread_zeroes_second_axis() {
        let obs = vec![vec![0.0, 0.0], vec![1.0, 2.0], vec![2.0, 4.0]];
        let got = leading_scores(&obs).unwrap();
        for s in &got.scores {
            assert_abs_diff_eq!(s[1], 0.0, epsilon = 1e-9);
        }
        assert!(got.eigenvalues[0] > 0.0);
    }

    #[test]
    fn scores_are_deterministic() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        let obs: Vec<Vec<f64>> = (0..12)
            .map(|_| (0..30).map(|_| rng.gen_range(-1.0..1.0)).collect())
            .collect();
        let a = leading_scores(&obs).unwrap();
        let b = leading_scores(&obs).unwrap();
        for (x, y) in a.scores.iter().zip(&b.scores) {
            assert_eq!(x, y);
        }
    }
}
