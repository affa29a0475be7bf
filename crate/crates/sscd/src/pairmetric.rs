//! Distances between variable pairs and the RBF similarity graph built from
//! them.
//!
//! The distance between two pairs is the L2 distance between their estimated
//! bivariate densities. For piecewise-constant histogram densities on a
//! shared grid this is `(1/h) * ||mass_a - mass_b||`, so the same Euclidean
//! form serves raw bin features and (scaled) PCA projections alike.

use nalgebra::DMatrix;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::histfeat::{FeatureKind, HistogramDensity, PairFeatureMatrix};

/// How a distance matrix was computed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MetricKind {
    /// Exact L2 distance between histogram densities.
    ExactHistogramL2,
    /// Euclidean distance between PCA rows, carried on the 1/h scale so it
    /// agrees with [`MetricKind::ExactHistogramL2`] when nothing is lost in
    /// projection.
    PcaEuclidean,
}

/// Symmetric m×m matrix of pair distances with zero diagonal.
#[derive(Debug, Clone, PartialEq)]
pub struct DistanceMatrix {
    d: DMatrix<f64>,
    metric_kind: MetricKind,
}

impl DistanceMatrix {
    /// Wraps a precomputed distance matrix. It must be square, symmetric,
    /// nonnegative and zero on the diagonal.
    pub fn from_raw(d: DMatrix<f64>, metric_kind: MetricKind) -> Result<Self> {
        if d.nrows() != d.ncols() {
            return Err(Error::Param("distance matrix must be square".into()));
        }
        for i in 0..d.nrows() {
            if d[(i, i)] != 0.0 {
                return Err(Error::Param(format!("nonzero diagonal at {i}")));
            }
            for j in (i + 1)..d.ncols() {
                let v = d[(i, j)];
                if !v.is_finite() || v < 0.0 || v != d[(j, i)] {
                    return Err(Error::Param(format!(
                        "entry ({i},{j}) is not a symmetric nonnegative distance"
                    )));
                }
            }
        }
        Ok(DistanceMatrix { d, metric_kind })
    }

    pub fn values(&self) -> &DMatrix<f64> {
        &self.d
    }

    pub fn metric_kind(&self) -> MetricKind {
        self.metric_kind
    }

    pub fn len(&self) -> usize {
        self.d.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.d.nrows() == 0
    }
}

/// Dense m×m similarity matrix `W = exp(-d^2 / (2 sigma^2))`; entries in
/// (0, 1], unit diagonal.
#[derive(Debug, Clone, PartialEq)]
pub struct SimilarityMatrix {
    w: DMatrix<f64>,
    sigma: f64,
}

impl SimilarityMatrix {
    pub fn values(&self) -> &DMatrix<f64> {
        &self.w
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn len(&self) -> usize {
        self.w.nrows()
    }
}

/// Exact L2 distance between two histogram densities on the same grid:
/// `( sum_bins (dens_a - dens_b)^2 * h^2 )^(1/2) = ||mass_a - mass_b|| / h`.
pub fn density_l2_distance(a: &HistogramDensity, b: &HistogramDensity) -> Result<f64> {
    if a.grid() != b.grid() {
        return Err(Error::Grid(
            "histograms live on different grids; distances are undefined".into(),
        ));
    }
    let mut sq = 0.0;
    for (x, y) in a.mass().iter().zip(b.mass().iter()) {
        let diff = x - y;
        sq += diff * diff;
    }
    Ok(sq.sqrt() / a.grid().bin_width())
}

/// Pairwise distances between all feature rows. Raw-bin rows give the exact
/// histogram L2 metric; PCA rows give its Euclidean approximation on the
/// same scale. Row blocks are filled in parallel.
pub fn pair_distance_matrix(features: &PairFeatureMatrix) -> DistanceMatrix {
    let m = features.num_pairs();
    let x = features.features();
    let inv_h = 1.0 / features.grid().bin_width();
    let metric_kind = match features.kind() {
        FeatureKind::RawBins => MetricKind::ExactHistogramL2,
        FeatureKind::PcaReduced => MetricKind::PcaEuclidean,
    };

    // Upper triangle by row, mirrored afterwards.
    let rows: Vec<Vec<f64>> = (0..m)
        .into_par_iter()
        .map(|k| {
            let rk = x.row(k);
            ((k + 1)..m)
                .map(|k2| {
                    let mut sq = 0.0;
                    for (a, b) in rk.iter().zip(x.row(k2).iter()) {
                        let diff = a - b;
                        sq += diff * diff;
                    }
                    sq.sqrt() * inv_h
                })
                .collect()
        })
        .collect();

    let mut d = DMatrix::zeros(m, m);
    for (k, row) in rows.iter().enumerate() {
        for (offset, &v) in row.iter().enumerate() {
            let k2 = k + 1 + offset;
            d[(k, k2)] = v;
            d[(k2, k)] = v;
        }
    }
    DistanceMatrix { d, metric_kind }
}

/// Median of the off-diagonal upper-triangle distances. Falls back to the
/// smallest positive entry when the median is zero, and to 1 when every
/// distance is zero.
pub fn median_heuristic_sigma(distances: &DistanceMatrix) -> f64 {
    let m = distances.len();
    let mut entries = Vec::with_capacity(m * (m - 1) / 2);
    for k in 0..m {
        for k2 in (k + 1)..m {
            entries.push(distances.values()[(k, k2)]);
        }
    }
    if entries.is_empty() {
        return 1.0;
    }
    entries.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = entries.len();
    let median = if n % 2 == 1 {
        entries[n / 2]
    } else {
        0.5 * (entries[n / 2 - 1] + entries[n / 2])
    };
    if median > 0.0 {
        return median;
    }
    entries.iter().copied().find(|&v| v > 0.0).unwrap_or(1.0)
}

/// Elementwise RBF map of a distance matrix.
pub fn similarity_matrix(distances: &DistanceMatrix, sigma: f64) -> Result<SimilarityMatrix> {
    if !(sigma > 0.0) || !sigma.is_finite() {
        return Err(Error::Param(format!(
            "similarity bandwidth must be positive and finite, got {sigma}"
        )));
    }
    let scale = -0.5 / (sigma * sigma);
    let w = distances.values().map(|d| (d * d * scale).exp());
    Ok(SimilarityMatrix { w, sigma })
}
