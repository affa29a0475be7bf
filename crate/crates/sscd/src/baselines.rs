//! Reference scorers: Pearson correlation, Kendall rank correlation (tau-b)
//! and Lasso regression coefficients. None of them uses label information;
//! they are the yardsticks the semi-supervised learner is compared against.
//!
//! Correlations are undirected, so both orderings of a pair receive the same
//! score. Lasso is directional: the score of (i, j) is the magnitude of the
//! coefficient of predictor i in the model for response j. All baseline
//! scores are ranked by absolute value.

use nalgebra::DMatrix;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::pairspace::{DataMatrix, PairIndex};

/// Per-pair real scores from one scoring method.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoreTable {
    scores: Vec<f64>,
    method: String,
    /// When true, scores are compared through their absolute values.
    use_absolute: bool,
}

impl ScoreTable {
    pub fn new(scores: Vec<f64>, method: impl Into<String>, use_absolute: bool) -> Self {
        ScoreTable {
            scores,
            method: method.into(),
            use_absolute,
        }
    }

    pub fn scores(&self) -> &[f64] {
        &self.scores
    }

    pub fn method(&self) -> &str {
        &self.method
    }

    pub fn use_absolute(&self) -> bool {
        self.use_absolute
    }

    pub fn len(&self) -> usize {
        self.scores.len()
    }

    pub fn is_empty(&self) -> bool {
        self.scores.is_empty()
    }
}

fn check_sample_size(data: &DataMatrix, min_n: usize) -> Result<()> {
    if data.n() < min_n {
        return Err(Error::Param(format!(
            "need at least {min_n} samples, got {}",
            data.n()
        )));
    }
    Ok(())
}

/// Pearson correlation per unordered pair, assigned to both directions.
pub fn pearson_scores(data: &DataMatrix) -> Result<ScoreTable> {
    check_sample_size(data, 3)?;
    let p = data.p();
    let n = data.n() as f64;
    let pairs = PairIndex::new(p);

    let mut means = vec![0.0; p];
    let mut sds = vec![0.0; p];
    for c in 0..p {
        let col = data.values().column(c);
        let mean = col.iter().sum::<f64>() / n;
        let ss: f64 = col.iter().map(|v| (v - mean) * (v - mean)).sum();
        if ss == 0.0 {
            return Err(Error::ConstantVariable {
                name: data.variable_names()[c].clone(),
            });
        }
        means[c] = mean;
        sds[c] = ss.sqrt();
    }

    let mut scores = vec![0.0; pairs.count()];
    for i in 0..p {
        for j in (i + 1)..p {
            let ci = data.values().column(i);
            let cj = data.values().column(j);
            let cov: f64 = ci
                .iter()
                .zip(cj.iter())
                .map(|(a, b)| (a - means[i]) * (b - means[j]))
                .sum();
            let r = cov / (sds[i] * sds[j]);
            scores[pairs.index(i, j).unwrap()] = r;
            scores[pairs.index(j, i).unwrap()] = r;
        }
    }
    Ok(ScoreTable::new(scores, "pearson", true))
}

/// Kendall tau-b per unordered pair, assigned to both directions.
///
/// Counting uses the O(n log n) merge-sort scheme with tie correction; the
/// quadratic pair count serves only as a test oracle.
pub fn kendall_scores(data: &DataMatrix) -> Result<ScoreTable> {
    check_sample_size(data, 3)?;
    let p = data.p();
    let pairs = PairIndex::new(p);
    let columns: Vec<Vec<f64>> = (0..p).map(|c| data.column(c)).collect();

    let unordered: Vec<(usize, usize)> = (0..p)
        .flat_map(|i| ((i + 1)..p).map(move |j| (i, j)))
        .collect();
    let taus = unordered
        .par_iter()
        .map(|&(i, j)| kendall_tau_b(&columns[i], &columns[j]).map(|t| (i, j, t)))
        .collect::<Result<Vec<_>>>()?;

    let mut scores = vec![0.0; pairs.count()];
    for (i, j, t) in taus {
        scores[pairs.index(i, j).unwrap()] = t;
        scores[pairs.index(j, i).unwrap()] = t;
    }
    Ok(ScoreTable::new(scores, "kendall", true))
}

/// Tie-corrected Kendall correlation of two slices.
pub fn kendall_tau_b(x: &[f64], y: &[f64]) -> Result<f64> {
    assert_eq!(x.len(), y.len());
    let n = x.len();
    let n_pairs = (n * (n - 1) / 2) as f64;

    // Sort lexicographically by (x, y).
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| {
        x[a].partial_cmp(&x[b])
            .unwrap()
            .then(y[a].partial_cmp(&y[b]).unwrap())
    });
    let xs: Vec<f64> = order.iter().map(|&i| x[i]).collect();
    let mut ys: Vec<f64> = order.iter().map(|&i| y[i]).collect();

    // Tie counts among x and joint (x, y) ties from consecutive runs.
    let mut tied_x = 0.0f64;
    let mut tied_xy = 0.0f64;
    let mut run_x = 1.0f64;
    let mut run_xy = 1.0f64;
    for i in 1..n {
        if xs[i] == xs[i - 1] {
            run_x += 1.0;
            if ys[i] == ys[i - 1] {
                run_xy += 1.0;
            } else {
                tied_xy += run_xy * (run_xy - 1.0) / 2.0;
                run_xy = 1.0;
            }
        } else {
            tied_x += run_x * (run_x - 1.0) / 2.0;
            run_x = 1.0;
            tied_xy += run_xy * (run_xy - 1.0) / 2.0;
            run_xy = 1.0;
        }
    }
    tied_x += run_x * (run_x - 1.0) / 2.0;
    tied_xy += run_xy * (run_xy - 1.0) / 2.0;

    // Merge sort y, counting the swaps that would sort it (= discordant pairs).
    let mut swaps = 0u64;
    let mut buf = ys.clone();
    let mut width = 1;
    while width < n {
        let mut lo = 0;
        while lo < n {
            let mid = (lo + width).min(n);
            let hi = (lo + 2 * width).min(n);
            let (mut a, mut b, mut out) = (lo, mid, lo);
            while a < mid || b < hi {
                if a < mid && (b >= hi || ys[a] <= ys[b]) {
                    buf[out] = ys[a];
                    a += 1;
                } else {
                    buf[out] = ys[b];
                    b += 1;
                    swaps += (mid - a) as u64;
                }
                out += 1;
            }
            lo += 2 * width;
        }
        std::mem::swap(&mut ys, &mut buf);
        width *= 2;
    }

    // Tie counts among y from the now-sorted sequence.
    let mut tied_y = 0.0f64;
    let mut run_y = 1.0f64;
    for i in 1..n {
        if ys[i] == ys[i - 1] {
            run_y += 1.0;
        } else {
            tied_y += run_y * (run_y - 1.0) / 2.0;
            run_y = 1.0;
        }
    }
    tied_y += run_y * (run_y - 1.0) / 2.0;

    let denom = ((n_pairs - tied_x) * (n_pairs - tied_y)).sqrt();
    if denom == 0.0 {
        return Err(Error::ConstantVariable {
            name: "(all values tied)".into(),
        });
    }
    let concordant_minus_discordant = n_pairs - tied_x - tied_y + tied_xy - 2.0 * swaps as f64;
    Ok(concordant_minus_discordant / denom)
}

/// Lasso coefficient magnitudes: variable j is regressed on all others and
/// the coefficient of predictor i lands on pair (i, j).
///
/// For every response the regularization weight is selected by k-fold
/// cross-validation over a 50-point logarithmic path from the smallest
/// all-zero weight down by three decades. Fold assignment is seeded.
pub fn lasso_scores(data: &DataMatrix, folds: usize, seed: u64) -> Result<ScoreTable> {
    if folds < 2 {
        return Err(Error::Cv(format!("need at least 2 folds, got {folds}")));
    }
    if data.n() < 2 * folds {
        return Err(Error::Cv(format!(
            "need at least {} samples for {folds}-fold cross-validation, got {}",
            2 * folds,
            data.n()
        )));
    }
    let p = data.p();
    let n = data.n();
    let pairs = PairIndex::new(p);

    // Standardize all columns once (mean 0, sample sd 1).
    let std = crate::histfeat::standardize_truncate(data, f64::INFINITY)?;
    let x = std.values();

    // Seeded fold assignment shared by all responses.
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut perm: Vec<usize> = (0..n).collect();
    perm.shuffle(&mut rng);
    let fold_of: Vec<usize> = {
        let mut f = vec![0; n];
        for (rank, &row) in perm.iter().enumerate() {
            f[row] = rank % folds;
        }
        f
    };

    let responses: Vec<usize> = (0..p).collect();
    let fitted = responses
        .par_iter()
        .map(|&j| lasso_for_response(x, j, folds, &fold_of).map(|coef| (j, coef)))
        .collect::<Result<Vec<_>>>()?;

    let mut scores = vec![0.0; pairs.count()];
    for (j, coef) in fitted {
        let mut idx = 0;
        for i in 0..p {
            if i == j {
                continue;
            }
            scores[pairs.index(i, j).unwrap()] = coef[idx].abs();
            idx += 1;
        }
    }
    Ok(ScoreTable::new(scores, "lasso", true))
}

const LASSO_PATH_LEN: usize = 50;
const LASSO_PATH_DECADES: f64 = 3.0;
const LASSO_KKT_TOL: f64 = 1e-9;
const LASSO_MAX_SWEEPS: usize = 2_000;

fn lasso_for_response(
    x: &DMatrix<f64>,
    response: usize,
    folds: usize,
    fold_of: &[usize],
) -> Result<Vec<f64>> {
    let n = x.nrows();
    let p = x.ncols();
    let predictors: Vec<usize> = (0..p).filter(|&i| i != response).collect();
    let y: Vec<f64> = x.column(response).iter().copied().collect();
    let cols: Vec<Vec<f64>> = predictors
        .iter()
        .map(|&i| x.column(i).iter().copied().collect())
        .collect();

    let lambda_path = {
        let all: Vec<usize> = (0..n).collect();
        let lambda_max = lasso_lambda_max(&cols, &y, &all);
        log_path(lambda_max, LASSO_PATH_DECADES, LASSO_PATH_LEN)
    };

    // Mean validation error per path point.
    let mut cv_err = vec![0.0f64; lambda_path.len()];
    for fold in 0..folds {
        let train: Vec<usize> = (0..n).filter(|&r| fold_of[r] != fold).collect();
        let valid: Vec<usize> = (0..n).filter(|&r| fold_of[r] == fold).collect();
        if train.is_empty() || valid.is_empty() {
            return Err(Error::Cv(format!("fold {fold} is empty")));
        }
        let mut beta = vec![0.0; cols.len()];
        for (li, &lambda) in lambda_path.iter().enumerate() {
            coordinate_descent(&cols, &y, &train, lambda, &mut beta, LASSO_MAX_SWEEPS)?;
            let mut err = 0.0;
            for &r in &valid {
                let mut pred = 0.0;
                for (ci, col) in cols.iter().enumerate() {
                    pred += beta[ci] * col[r];
                }
                let resid = y[r] - pred;
                err += resid * resid;
            }
            cv_err[li] += err / valid.len() as f64;
        }
    }

    // Smallest mean error; ties resolve to the sparser (larger) weight.
    let best = cv_err
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.partial_cmp(b.1).unwrap())
        .map(|(i, _)| i)
        .unwrap();

    // Refit on all samples at the selected weight, warm-started down the path.
    let all: Vec<usize> = (0..n).collect();
    let mut beta = vec![0.0; cols.len()];
    for &lambda in &lambda_path[..=best] {
        coordinate_descent(&cols, &y, &all, lambda, &mut beta, LASSO_MAX_SWEEPS)?;
    }
    Ok(beta)
}

/// Smallest weight at which every coefficient is zero:
/// `max_i |x_i' y| / n` for the loss `(1/2n)||y - X b||^2 + lambda ||b||_1`.
pub fn lasso_lambda_max(cols: &[Vec<f64>], y: &[f64], rows: &[usize]) -> f64 {
    let n = rows.len() as f64;
    cols.iter()
        .map(|col| rows.iter().map(|&r| col[r] * y[r]).sum::<f64>().abs() / n)
        .fold(0.0, f64::max)
}

fn log_path(lambda_max: f64, decades: f64, len: usize) -> Vec<f64> {
    if lambda_max <= 0.0 {
        // Response orthogonal to every predictor; any tiny path works.
        return vec![0.0; 1];
    }
    (0..len)
        .map(|i| lambda_max * 10f64.powf(-decades * i as f64 / (len - 1) as f64))
        .collect()
}

/// Cyclic coordinate descent for `(1/2n)||y - X b||^2 + lambda||b||_1`
/// restricted to `rows`. Iterates full sweeps, at most `max_sweeps`, until
/// the KKT residual is below tolerance. `beta` is used as the warm start
/// and holds the solution.
///
/// Uses the covariance formulation: with `G = X'X/n` and `c = X'y/n`
/// precomputed, each coordinate update costs O(d) rather than O(n).
pub fn coordinate_descent(
    cols: &[Vec<f64>],
    y: &[f64],
    rows: &[usize],
    lambda: f64,
    beta: &mut [f64],
    max_sweeps: usize,
) -> Result<()> {
    let n = rows.len() as f64;
    let d = cols.len();

    let mut gram = vec![0.0f64; d * d];
    let mut xty = vec![0.0f64; d];
    for i in 0..d {
        for j in i..d {
            let g: f64 = rows.iter().map(|&r| cols[i][r] * cols[j][r]).sum::<f64>() / n;
            gram[i * d + j] = g;
            gram[j * d + i] = g;
        }
        xty[i] = rows.iter().map(|&r| cols[i][r] * y[r]).sum::<f64>() / n;
    }

    // gb = G * beta, maintained incrementally.
    let mut gb = vec![0.0f64; d];
    for i in 0..d {
        if beta[i] != 0.0 {
            for j in 0..d {
                gb[j] += gram[j * d + i] * beta[i];
            }
        }
    }

    let kkt = |gb: &[f64], beta: &[f64]| -> f64 {
        let mut worst = 0.0f64;
        for i in 0..d {
            let grad = xty[i] - gb[i];
            let v = if beta[i] == 0.0 {
                (grad.abs() - lambda).max(0.0)
            } else {
                (grad - lambda * beta[i].signum()).abs()
            };
            worst = worst.max(v);
        }
        worst
    };

    for sweep in 0..max_sweeps {
        let mut max_delta = 0.0f64;
        for i in 0..d {
            let curvature = gram[i * d + i];
            if curvature == 0.0 {
                beta[i] = 0.0;
                continue;
            }
            let z = xty[i] - gb[i] + curvature * beta[i];
            let new = soft_threshold(z, lambda) / curvature;
            let delta = new - beta[i];
            if delta != 0.0 {
                for j in 0..d {
                    gb[j] += gram[j * d + i] * delta;
                }
                beta[i] = new;
                max_delta = max_delta.max(delta.abs());
            }
        }
        if kkt(&gb, beta) <= LASSO_KKT_TOL {
            return Ok(());
        }
        if max_delta <= 1e-13 && sweep > 0 {
            // Stalled; nearly collinear designs can sit marginally above
            // the tolerance.
            return Ok(());
        }
    }
    // Tolerance not reached; the estimate is still usable, so keep it.
    Ok(())
}

pub fn soft_threshold(z: f64, lambda: f64) -> f64 {
    if z > lambda {
        z - lambda
    } else if z < -lambda {
        z + lambda
    } else {
        0.0
    }
}

/// Max violation of the Lasso stationarity conditions.
pub fn lasso_kkt_residual(
    cols: &[Vec<f64>],
    rows: &[usize],
    resid: &[f64],
    beta: &[f64],
    lambda: f64,
) -> f64 {
    let n = rows.len() as f64;
    let mut worst = 0.0f64;
    for (ci, col) in cols.iter().enumerate() {
        let grad: f64 = rows
            .iter()
            .enumerate()
            .map(|(ri, &r)| col[r] * resid[ri])
            .sum::<f64>()
            / n;
        let v = if beta[ci] == 0.0 {
            (grad.abs() - lambda).max(0.0)
        } else {
            (grad - lambda * beta[ci].signum()).abs()
        };
        worst = worst.max(v);
    }
    worst
}

/// Lasso objective value, exposed for convergence tests.
pub fn lasso_objective(
    cols: &[Vec<f64>],
    y: &[f64],
    rows: &[usize],
    beta: &[f64],
    lambda: f64,
) -> f64 {
    let n = rows.len() as f64;
    let mut rss = 0.0;
    for &r in rows {
        let mut pred = 0.0;
        for (ci, col) in cols.iter().enumerate() {
            pred += beta[ci] * col[r];
        }
        let resid = y[r] - pred;
        rss += resid * resid;
    }
    rss / (2.0 * n) + lambda * beta.iter().map(|b| b.abs()).sum::<f64>()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn data(cols: &[&[f64]]) -> DataMatrix {
        let n = cols[0].len();
        let rows: Vec<Vec<f64>> = (0..n)
            .map(|r| cols.iter().map(|c| c[r]).collect())
            .collect();
        let names = (0..cols.len()).map(|i| format!("v{i}")).collect();
        DataMatrix::from_rows(&rows, names).unwrap()
    }

    #[test]
    fn pearson_exact_linear_relationships() {
        let x = [1.0, 2.0, 3.0, 4.0, 5.0];
        let y: Vec<f64> = x.iter().map(|v| 2.0 * v + 1.0).collect();
        let neg: Vec<f64> = x.iter().map(|v| -v).collect();
        let d = data(&[&x, &y, &neg]);
        let s = pearson_scores(&d).unwrap();
        let pairs = PairIndex::new(3);
        assert_abs_diff_eq!(s.scores()[pairs.index(0, 1).unwrap()], 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(s.scores()[pairs.index(1, 0).unwrap()], 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(s.scores()[pairs.index(0, 2).unwrap()], -1.0, epsilon = 1e-12);
        assert!(s.use_absolute());
    }

    #[test]
    fn pearson_rejects_constant_column() {
        let d = data(&[&[1.0, 1.0, 1.0], &[1.0, 2.0, 3.0]]);
        assert!(matches!(
            pearson_scores(&d),
            Err(Error::ConstantVariable { .. })
        ));
    }

    #[test]
    fn kendall_monotone_sequences() {
        let x = [1.0f64, 2.0, 3.0, 4.0, 5.0];
        let up: Vec<f64> = x.iter().map(|v| v.exp()).collect();
        let down: Vec<f64> = x.iter().map(|v| -v * v).collect();
        assert_abs_diff_eq!(kendall_tau_b(&x, &up).unwrap(), 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(kendall_tau_b(&x, &down).unwrap(), -1.0, epsilon = 1e-15);
    }

    #[test]
    fn kendall_four_point_example() {
        // Brute-force count: only (2,3) vs (3,2) is discordant, so
        // 5 concordant, 1 discordant of 6 and tau = (5 - 1) / 6 = 2/3.
        let x = [1.0, 2.0, 3.0, 4.0];
        let y = [1.0, 3.0, 2.0, 4.0];
        assert_abs_diff_eq!(kendall_tau_b(&x, &y).unwrap(), 2.0 / 3.0, epsilon = 1e-15);
    }

    #[test]
    fn kendall_all_tied_is_an_error() {
        let x = [1.0, 1.0, 1.0, 1.0];
        let y = [1.0, 2.0, 3.0, 4.0];
        assert!(kendall_tau_b(&x, &y).is_err());
    }

    #[test]
    fn lambda_at_or_above_max_zeroes_all_coefficients() {
        let cols = vec![vec![1.0, -1.0, 0.5, -0.5], vec![0.3, 0.3, -0.3, -0.3]];
        let y = vec![1.0, -0.5, 0.25, -0.75];
        let rows: Vec<usize> = (0..4).collect();
        let lmax = lasso_lambda_max(&cols, &y, &rows);
        let mut beta = vec![0.0; 2];
        coordinate_descent(&cols, &y, &rows, lmax, &mut beta, 1000).unwrap();
        assert!(beta.iter().all(|&b| b == 0.0));
        let mut beta = vec![0.1, -0.1];
        coordinate_descent(&cols, &y, &rows, lmax * 1.5, &mut beta, 1000).unwrap();
        assert!(beta.iter().all(|&b| b == 0.0));
    }

    #[test]
    fn univariate_lasso_matches_soft_thresholded_ols() {
        // One standardized predictor: the solution is the soft-thresholded
        // OLS slope rescaled by the curvature.
        let x: Vec<f64> = (0..20).map(|i| (i as f64 - 9.5) / 5.0).collect();
        let y: Vec<f64> = x.iter().map(|v| 0.8 * v + 0.05 * (v * 3.0).sin()).collect();
        let rows: Vec<usize> = (0..20).collect();
        let cols = vec![x.clone()];
        let n = 20.0;
        let curv = x.iter().map(|v| v * v).sum::<f64>() / n;
        let xty = x.iter().zip(&y).map(|(a, b)| a * b).sum::<f64>() / n;
        let ols = xty / curv;

        let mut beta = vec![0.0];
        coordinate_descent(&cols, &y, &rows, 0.0, &mut beta, 1000).unwrap();
        assert_abs_diff_eq!(beta[0], ols, epsilon = 1e-10);

        let lambda = 0.1;
        let mut beta = vec![0.0];
        coordinate_descent(&cols, &y, &rows, lambda, &mut beta, 1000).unwrap();
        let expect = soft_threshold(xty, lambda) / curv;
        assert_abs_diff_eq!(beta[0], expect, epsilon = 1e-10);
    }

    #[test]
    fn lasso_scores_shape_and_cv_guard() {
        let n = 24;
        let x0: Vec<f64> = (0..n).map(|i| (i as f64 * 0.7).sin()).collect();
        let x1: Vec<f64> = x0.iter().map(|v| 0.9 * v).collect();
        let x2: Vec<f64> = (0..n).map(|i| (i as f64 * 1.3).cos()).collect();
        let d = data(&[&x0, &x1, &x2]);
        let s = lasso_scores(&d, 5, 7).unwrap();
        assert_eq!(s.len(), 6);
        assert!(s.scores().iter().all(|v| v.is_finite()));
        assert!(matches!(lasso_scores(&d, 13, 7), Err(Error::Cv(_))));
    }
}
