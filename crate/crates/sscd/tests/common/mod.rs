//! Shared test oracles, all independent of the library code paths they
//! check: brute-force rank statistics, direct gradient-descent minimization,
//! closed-form truncated-Gaussian integrals and plain quadrature.
#![allow(dead_code)]

use nalgebra::DMatrix;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sscd::laprls::LaplacianSystem;
use sscd::pairspace::{LabelAssignment, LabelState};

pub fn seeded(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Pairwise Mann–Whitney AUC: fraction of (positive, negative) pairs ranked
/// correctly, ties counted half.
pub fn brute_force_auc(scores: &[f64], truth: &[bool], use_absolute: bool) -> f64 {
    let vals: Vec<f64> = if use_absolute {
        scores.iter().map(|s| s.abs()).collect()
    } else {
        scores.to_vec()
    };
    let mut wins = 0.0f64;
    let mut total = 0.0f64;
    for (i, &ti) in truth.iter().enumerate() {
        if !ti {
            continue;
        }
        for (j, &tj) in truth.iter().enumerate() {
            if tj {
                continue;
            }
            total += 1.0;
            if vals[i] > vals[j] {
                wins += 1.0;
            } else if vals[i] == vals[j] {
                wins += 0.5;
            }
        }
    }
    wins / total
}

/// Quadratic-time Kendall tau-b.
pub fn brute_force_kendall(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len();
    let mut concordant = 0.0f64;
    let mut discordant = 0.0f64;
    let mut tied_x = 0.0f64;
    let mut tied_y = 0.0f64;
    for i in 0..n {
        for j in (i + 1)..n {
            let dx = x[i] - x[j];
            let dy = y[i] - y[j];
            if dx == 0.0 && dy == 0.0 {
                tied_x += 1.0;
                tied_y += 1.0;
            } else if dx == 0.0 {
                tied_x += 1.0;
            } else if dy == 0.0 {
                tied_y += 1.0;
            } else if dx * dy > 0.0 {
                concordant += 1.0;
            } else {
                discordant += 1.0;
            }
        }
    }
    let n0 = (n * (n - 1) / 2) as f64;
    (concordant - discordant) / ((n0 - tied_x) * (n0 - tied_y)).sqrt()
}

/// One-hot label matrix with zero rows for unlabelled pairs.
pub fn one_hot_labels(labels: &LabelAssignment) -> DMatrix<f64> {
    let mut y = DMatrix::zeros(labels.len(), 2);
    for k in 0..labels.len() {
        match labels.state(k) {
            LabelState::NonCausal => y[(k, 0)] = 1.0,
            LabelState::Causal => y[(k, 1)] = 1.0,
            LabelState::Unlabelled => {}
        }
    }
    y
}

/// Analytic gradient of the fitting objective at `f`.
pub fn objective_gradient(
    f: &DMatrix<f64>,
    system: &LaplacianSystem,
    labels: &LabelAssignment,
    lambda: f64,
) -> DMatrix<f64> {
    let m = labels.len();
    let m_l = labels.num_labelled() as f64;
    let y = one_hot_labels(labels);
    let mut grad = system.matrix() * f * (2.0 * lambda / (m as f64 * m as f64));
    for k in 0..m {
        if labels.state(k).is_labelled() {
            grad[(k, 0)] += 2.0 / m_l * (f[(k, 0)] - y[(k, 0)]);
            grad[(k, 1)] += 2.0 / m_l * (f[(k, 1)] - y[(k, 1)]);
        }
    }
    grad
}

/// Finite-difference gradient of the objective (central differences).
pub fn finite_difference_gradient(
    f: &DMatrix<f64>,
    system: &LaplacianSystem,
    labels: &LabelAssignment,
    lambda: f64,
    step: f64,
) -> DMatrix<f64> {
    let mut grad = DMatrix::zeros(f.nrows(), f.ncols());
    let mut probe = f.clone();
    for r in 0..f.nrows() {
        for c in 0..f.ncols() {
            let orig = probe[(r, c)];
            probe[(r, c)] = orig + step;
            let up = sscd::laprls::objective_value(&probe, system, labels, lambda);
            probe[(r, c)] = orig - step;
            let down = sscd::laprls::objective_value(&probe, system, labels, lambda);
            probe[(r, c)] = orig;
            grad[(r, c)] = (up - down) / (2.0 * step);
        }
    }
    grad
}

/// Conjugate-gradient descent with exact line search on the quadratic
/// objective, from an arbitrary start. Restarted on the true gradient every
/// `2m` steps; returns once the gradient norm drops below `tol`.
pub fn gradient_descent_minimize(
    system: &LaplacianSystem,
    labels: &LabelAssignment,
    lambda: f64,
    init: DMatrix<f64>,
    max_iters: usize,
    tol: f64,
) -> DMatrix<f64> {
    let m = labels.len();
    let m_l = labels.num_labelled() as f64;
    let smooth_scale = 2.0 * lambda / (m as f64 * m as f64);
    let hessian_apply = |g: &DMatrix<f64>| -> DMatrix<f64> {
        let mut h = system.matrix() * g * smooth_scale;
        for k in 0..m {
            if labels.state(k).is_labelled() {
                h[(k, 0)] += 2.0 / m_l * g[(k, 0)];
                h[(k, 1)] += 2.0 / m_l * g[(k, 1)];
            }
        }
        h
    };
    let dot = |a: &DMatrix<f64>, b: &DMatrix<f64>| -> f64 {
        a.iter().zip(b.iter()).map(|(x, y)| x * y).sum()
    };

    let mut f = init;
    let mut residual = -objective_gradient(&f, system, labels, lambda);
    let mut direction = residual.clone();
    let mut rs = dot(&residual, &residual);
    for iter in 0..max_iters {
        if rs.sqrt() <= tol {
            break;
        }
        if iter > 0 && iter % (2 * m) == 0 {
            residual = -objective_gradient(&f, system, labels, lambda);
            direction = residual.clone();
            rs = dot(&residual, &residual);
        }
        let hd = hessian_apply(&direction);
        let dhd = dot(&direction, &hd);
        if dhd <= 0.0 {
            break;
        }
        let step = rs / dhd;
        f += &direction * step;
        residual -= hd * step;
        let rs_next = dot(&residual, &residual);
        direction = &residual + &direction * (rs_next / rs);
        rs = rs_next;
    }
    f
}

/// Random well-conditioned fitting instance: points in a low-dimensional
/// space define the distances, sigma comes from the median heuristic, and a
/// given fraction of nodes gets random labels.
pub fn random_fit_instance(
    rng: &mut ChaCha8Rng,
    m: usize,
    labelled_frac: f64,
    lambda: f64,
) -> (LaplacianSystem, LabelAssignment, f64) {
    use rand::seq::SliceRandom;
    let dim = 3;
    let points: Vec<Vec<f64>> = (0..m)
        .map(|_| (0..dim).map(|_| rng.random_range(-1.0..=1.0)).collect())
        .collect();
    let mut d = DMatrix::zeros(m, m);
    for a in 0..m {
        for b in (a + 1)..m {
            let dist: f64 = points[a]
                .iter()
                .zip(&points[b])
                .map(|(x, y)| (x - y) * (x - y))
                .sum::<f64>()
                .sqrt();
            d[(a, b)] = dist;
            d[(b, a)] = dist;
        }
    }
    let distances =
        sscd::pairmetric::DistanceMatrix::from_raw(d, sscd::pairmetric::MetricKind::PcaEuclidean)
            .unwrap();
    let sigma = sscd::pairmetric::median_heuristic_sigma(&distances);
    let similarity = sscd::pairmetric::similarity_matrix(&distances, sigma).unwrap();
    let system = sscd::laprls::normalized_laplacian(&similarity).unwrap();

    let n_lab = ((m as f64 * labelled_frac).round() as usize).max(1);
    let mut order: Vec<usize> = (0..m).collect();
    order.shuffle(rng);
    let mut states = vec![LabelState::Unlabelled; m];
    for &k in order.iter().take(n_lab) {
        states[k] = if rng.random_range(0.0..1.0) < 0.5 {
            LabelState::Causal
        } else {
            LabelState::NonCausal
        };
    }
    (system, LabelAssignment::new(states), lambda)
}

/// Swaps Causal and NonCausal labels, leaving unlabelled pairs alone.
pub fn swap_labels(labels: &LabelAssignment) -> LabelAssignment {
    let states = labels
        .states()
        .iter()
        .map(|s| match s {
            LabelState::Causal => LabelState::NonCausal,
            LabelState::NonCausal => LabelState::Causal,
            LabelState::Unlabelled => LabelState::Unlabelled,
        })
        .collect();
    LabelAssignment::new(states)
}

pub const SQRT_2: f64 = std::f64::consts::SQRT_2;

/// Standard normal CDF.
pub fn normal_cdf(z: f64) -> f64 {
    0.5 * (1.0 + libm::erf(z / SQRT_2))
}

fn normal_pdf(z: f64) -> f64 {
    (-0.5 * z * z).exp() / (2.0 * std::f64::consts::PI).sqrt()
}

/// Isotropic bivariate Gaussian conditioned on the square [lo, hi]^2.
/// This is a smooth density on the square, so histogram consistency rates
/// apply to it.
#[derive(Debug, Clone, Copy)]
pub struct TruncatedGaussian {
    pub mean_x: f64,
    pub mean_y: f64,
    pub sd: f64,
    pub lo: f64,
    pub hi: f64,
}

impl TruncatedGaussian {
    pub fn standard(lo: f64, hi: f64) -> Self {
        TruncatedGaussian {
            mean_x: 0.0,
            mean_y: 0.0,
            sd: 1.0,
            lo,
            hi,
        }
    }

    fn axis_mass(&self, mean: f64) -> f64 {
        normal_cdf((self.hi - mean) / self.sd) - normal_cdf((self.lo - mean) / self.sd)
    }

    /// Normalizing constant of the conditioned density.
    pub fn total_mass(&self) -> f64 {
        self.axis_mass(self.mean_x) * self.axis_mass(self.mean_y)
    }

    pub fn density(&self, x: f64, y: f64) -> f64 {
        let zx = (x - self.mean_x) / self.sd;
        let zy = (y - self.mean_y) / self.sd;
        normal_pdf(zx) * normal_pdf(zy) / (self.sd * self.sd) / self.total_mass()
    }

    /// Probability of the rectangle [x0,x1]×[y0,y1] under the conditioned law.
    pub fn rect_prob(&self, x0: f64, x1: f64, y0: f64, y1: f64) -> f64 {
        let px = normal_cdf((x1 - self.mean_x) / self.sd) - normal_cdf((x0 - self.mean_x) / self.sd);
        let py = normal_cdf((y1 - self.mean_y) / self.sd) - normal_cdf((y0 - self.mean_y) / self.sd);
        px * py / self.total_mass()
    }

    /// `int pi^2` over the square, in closed form.
    pub fn l2_norm_sq(&self) -> f64 {
        let axis = |mean: f64| -> f64 {
            // int phi_sd(t - mean)^2 dt over [lo, hi]
            let scale = 1.0 / (2.0 * std::f64::consts::PI.sqrt() * self.sd);
            let hi = SQRT_2 * (self.hi - mean) / self.sd;
            let lo = SQRT_2 * (self.lo - mean) / self.sd;
            scale * (normal_cdf(hi) - normal_cdf(lo))
        };
        axis(self.mean_x) * axis(self.mean_y) / self.total_mass().powi(2)
    }

    /// Rejection sampling from the conditioned law.
    pub fn sample(&self, rng: &mut ChaCha8Rng, n: usize) -> (Vec<f64>, Vec<f64>) {
        let normal = rand_distr::Normal::new(0.0, self.sd).unwrap();
        let mut xs = Vec::with_capacity(n);
        let mut ys = Vec::with_capacity(n);
        while xs.len() < n {
            let x = self.mean_x + rng.sample(normal);
            let y = self.mean_y + rng.sample(normal);
            if x >= self.lo && x <= self.hi && y >= self.lo && y <= self.hi {
                xs.push(x);
                ys.push(y);
            }
        }
        (xs, ys)
    }
}

/// Exact L2 error between a histogram estimate and a truncated-Gaussian
/// target, via `int (pi - kappa)^2 = int pi^2 - 2 sum_b m_b p_b / h^2
/// + sum_b m_b^2 / h^2` with rectangle probabilities in closed form.
pub fn histogram_l2_error(
    hist: &sscd::histfeat::HistogramDensity,
    target: &TruncatedGaussian,
) -> f64 {
    let grid = hist.grid();
    let b = grid.bins();
    let h = grid.bin_width();
    let mut cross = 0.0;
    let mut kappa_sq = 0.0;
    for i in 0..b {
        let x0 = grid.lo() + i as f64 * h;
        for j in 0..b {
            let y0 = grid.lo() + j as f64 * h;
            let mass = hist.mass()[(i, j)];
            if mass > 0.0 {
                let p = target.rect_prob(x0, x0 + h, y0, y0 + h);
                cross += mass * p;
                kappa_sq += mass * mass;
            }
        }
    }
    let err_sq = target.l2_norm_sq() - 2.0 * cross / (h * h) + kappa_sq / (h * h);
    err_sq.max(0.0).sqrt()
}

/// Midpoint-rule quadrature of `int (f - g)^2` over [lo, hi]^2 on an
/// n_grid × n_grid mesh.
pub fn quadrature_l2_distance(
    f: &dyn Fn(f64, f64) -> f64,
    g: &dyn Fn(f64, f64) -> f64,
    lo: f64,
    hi: f64,
    n_grid: usize,
) -> f64 {
    let step = (hi - lo) / n_grid as f64;
    let mut total = 0.0;
    for i in 0..n_grid {
        let x = lo + (i as f64 + 0.5) * step;
        for j in 0..n_grid {
            let y = lo + (j as f64 + 0.5) * step;
            let diff = f(x, y) - g(x, y);
            total += diff * diff;
        }
    }
    (total * step * step).sqrt()
}

/// Ordinary least-squares slope of y on x.
pub fn regression_slope(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    sxy / sxx
}

pub fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

pub fn standard_error(v: &[f64]) -> f64 {
    let m = mean(v);
    let var = v.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (v.len() as f64 - 1.0);
    (var / v.len() as f64).sqrt()
}
