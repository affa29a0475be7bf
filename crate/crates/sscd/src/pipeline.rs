//! End-to-end wiring of the semi-supervised pipeline:
//! standardize → histogram features → PCA → distances → similarity →
//! Laplacian → closed-form fit.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::histfeat::{pair_features, pca_reduce, standardize_truncate, HistogramGrid};
use crate::laprls::{fit, normalized_laplacian, FitResult, DEFAULT_LAMBDA};
use crate::pairmetric::{median_heuristic_sigma, pair_distance_matrix, similarity_matrix};
use crate::pairspace::{DataMatrix, LabelAssignment, PairIndex};

/// Tunables of the semi-supervised pipeline with their default values.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SscdParams {
    /// Histogram bin width.
    pub bin_width: f64,
    /// Standardized values are clamped into [-bound, bound].
    pub bound: f64,
    /// PCA target dimension for the pair-feature matrix.
    pub d_target: usize,
    /// Regularization weight of the Laplacian smoothness term.
    pub lambda: f64,
    /// Similarity bandwidth; None selects the median pair distance.
    pub sigma: Option<f64>,
}

impl Default for SscdParams {
    fn default() -> Self {
        SscdParams {
            bin_width: 0.2,
            bound: 3.0,
            d_target: 100,
            lambda: DEFAULT_LAMBDA,
            sigma: None,
        }
    }
}

/// Fits the full pipeline on a data matrix and a partial label assignment.
/// The returned fit records the bandwidth that was actually used.
pub fn run_sscd(
    data: &DataMatrix,
    labels: &LabelAssignment,
    params: &SscdParams,
) -> Result<FitResult> {
    let pairs = PairIndex::new(data.p());
    if labels.len() != pairs.count() {
        return Err(Error::Param(format!(
            "label vector length {} does not match m={} for p={}",
            labels.len(),
            pairs.count(),
            data.p()
        )));
    }
    let standardized = standardize_truncate(data, params.bound)?;
    let grid = HistogramGrid::new(params.bin_width, -params.bound, params.bound)?;
    let raw = pair_features(&standardized, &grid)?;
    let reduced = pca_reduce(&raw, params.d_target)?;
    let distances = pair_distance_matrix(&reduced);
    let sigma = match params.sigma {
        Some(s) => s,
        None => median_heuristic_sigma(&distances),
    };
    let similarity = similarity_matrix(&distances, sigma)?;
    let laplacian = normalized_laplacian(&similarity)?;
    Ok(fit(&laplacian, labels, params.lambda)?.with_sigma(sigma))
}
