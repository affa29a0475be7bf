//! Laplacian-regularized least squares over the pair similarity graph.
//!
//! With similarity matrix `W`, degree matrix `D` and normalized Laplacian
//! `L = I - D^{-1/2} W D^{-1/2}`, the learner minimizes
//!
//! ```text
//! J(F) = (1/m_L) * sum_{k in L} ||F_k - Y_k||^2  +  (lambda / m^2) * tr(F' L F)
//! ```
//!
//! over real m×2 matrices F (columns: non-causal, causal). The stationarity
//! system `(J + gamma L + eps I) F = Y`, with `J` the labelled-row selector,
//! `gamma = lambda * m_L / m^2` and a small ridge `eps`, is solved in closed
//! form by a dense symmetric factorization. The per-pair score is
//! `F[k][1] - F[k][0]`; its sign is the predicted label and its magnitude
//! ranks candidate pairs.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::pairmetric::SimilarityMatrix;
use crate::pairspace::{LabelAssignment, LabelState};

/// Ridge added to the stationarity system so degenerate graphs (for example
/// unlabelled connected components) still solve deterministically.
pub const RIDGE: f64 = 1e-8;

/// Default regularization weight.
pub const DEFAULT_LAMBDA: f64 = 0.001;

/// Coarse grid of regularization weights exposed by the CLI.
pub const LAMBDA_GRID: [f64; 4] = [0.001, 0.01, 0.1, 1.0];

/// Normalized graph Laplacian plus the degrees it was built from.
#[derive(Debug, Clone, PartialEq)]
pub struct LaplacianSystem {
    l_norm: DMatrix<f64>,
    degrees: DVector<f64>,
}

impl LaplacianSystem {
    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.l_norm
    }

    pub fn degrees(&self) -> &DVector<f64> {
        &self.degrees
    }

    pub fn len(&self) -> usize {
        self.l_norm.nrows()
    }
}

/// Output of a fit: the real-valued classification matrix, derived scores
/// and thresholded predictions.
#[derive(Debug, Clone, PartialEq)]
pub struct FitResult {
    f: DMatrix<f64>,
    scores: Vec<f64>,
    predictions: Vec<bool>,
    lambda: f64,
    sigma: Option<f64>,
}

impl FitResult {
    /// The m×2 matrix of class responses (columns: non-causal, causal).
    pub fn class_matrix(&self) -> &DMatrix<f64> {
        &self.f
    }

    /// Per-pair score `f[:,1] - f[:,0]`; higher means more causal.
    pub fn scores(&self) -> &[f64] {
        &self.scores
    }

    /// `scores > 0` (a tie at exactly zero predicts non-causal).
    pub fn predictions(&self) -> &[bool] {
        &self.predictions
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    /// Similarity bandwidth used upstream, recorded by the pipeline.
    pub fn sigma(&self) -> Option<f64> {
        self.sigma
    }

    pub fn with_sigma(mut self, sigma: f64) -> Self {
        self.sigma = Some(sigma);
        self
    }
}

/// Builds the normalized Laplacian `I - D^{-1/2} W D^{-1/2}` with degrees
/// `d_k = sum_{k'} W[k][k']` (full row sum, diagonal included).
pub fn normalized_laplacian(similarity: &SimilarityMatrix) -> Result<LaplacianSystem> {
    let w = similarity.values();
    let m = w.nrows();
    let mut degrees = DVector::zeros(m);
    for k in 0..m {
        let d: f64 = w.row(k).iter().sum();
        if !(d > 0.0) {
            return Err(Error::Degree { k });
        }
        degrees[k] = d;
    }
    let inv_sqrt: Vec<f64> = degrees.iter().map(|d| 1.0 / d.sqrt()).collect();
    // Fill the upper triangle and mirror it so the matrix is exactly
    // symmetric despite non-associative rounding.
    let mut l_norm = DMatrix::zeros(m, m);
    for i in 0..m {
        l_norm[(i, i)] = 1.0 - w[(i, i)] * inv_sqrt[i] * inv_sqrt[i];
        for j in (i + 1)..m {
            let v = -(w[(i, j)] * inv_sqrt[i] * inv_sqrt[j]);
            l_norm[(i, j)] = v;
            l_norm[(j, i)] = v;
        }
    }
    Ok(LaplacianSystem { l_norm, degrees })
}

/// One-hot label matrix with zero rows for unlabelled pairs.
fn padded_labels(labels: &LabelAssignment) -> DMatrix<f64> {
    let m = labels.len();
    let mut y = DMatrix::zeros(m, 2);
    for k in 0..m {
        match labels.state(k) {
            LabelState::NonCausal => y[(k, 0)] = 1.0,
            LabelState::Causal => y[(k, 1)] = 1.0,
            LabelState::Unlabelled => {}
        }
    }
    y
}

/// Closed-form minimizer of the regularized objective.
pub fn fit(system: &LaplacianSystem, labels: &LabelAssignment, lambda: f64) -> Result<FitResult> {
    let m = system.len();
    if labels.len() != m {
        return Err(Error::Param(format!(
            "label vector length {} does not match graph size {m}",
            labels.len()
        )));
    }
    if lambda < 0.0 {
        return Err(Error::Param(format!(
            "regularization weight must be nonnegative, got {lambda}"
        )));
    }
    let m_l = labels.num_labelled();
    if m_l == 0 {
        return Err(Error::NoLabels);
    }

    let gamma = lambda * m_l as f64 / (m as f64 * m as f64);
    let mut a = system.matrix() * gamma;
    for k in 0..m {
        a[(k, k)] += RIDGE;
        if labels.state(k).is_labelled() {
            a[(k, k)] += 1.0;
        }
    }
    let y = padded_labels(labels);

    let f = match a.clone().cholesky() {
        Some(chol) => chol.solve(&y),
        None => a.lu().solve(&y).ok_or(Error::Solve)?,
    };

    let scores: Vec<f64> = (0..m).map(|k| f[(k, 1)] - f[(k, 0)]).collect();
    let predictions: Vec<bool> = scores.iter().map(|&s| s > 0.0).collect();
    Ok(FitResult {
        f,
        scores,
        predictions,
        lambda,
        sigma: None,
    })
}

/// Value of the objective at an arbitrary class matrix; used to verify the
/// closed-form solver against direct minimization.
pub fn objective_value(
    f: &DMatrix<f64>,
    system: &LaplacianSystem,
    labels: &LabelAssignment,
    lambda: f64,
) -> f64 {
    let m = system.len();
    let m_l = labels.num_labelled();
    let y = padded_labels(labels);

    let mut loss = 0.0;
    for k in 0..m {
        if labels.state(k).is_labelled() {
            let d0 = f[(k, 0)] - y[(k, 0)];
            let d1 = f[(k, 1)] - y[(k, 1)];
            loss += d0 * d0 + d1 * d1;
        }
    }
    if m_l > 0 {
        loss /= m_l as f64;
    }

    let lf = system.matrix() * f;
    let smooth = (f.transpose() * lf).trace();
    loss + lambda / (m as f64 * m as f64) * smooth
}
