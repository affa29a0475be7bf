//! Per-pair featurization: column standardization with truncation, bivariate
//! histogram density estimation, and PCA compression of the pair-feature
//! matrix.
//!
//! Each ordered pair (i, j) is mapped to the flattened bin-mass grid of the
//! bivariate histogram of columns (i, j). With the default grid (bin width
//! 0.2 on [-3, 3]^2) that is a 30×30 = 900-dimensional feature vector per
//! pair, typically compressed to 100 dimensions by PCA.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::pairspace::{DataMatrix, PairIndex};

/// Regular square grid over a truncation square `[lo, hi]^2`.
///
/// Bins are half-open `[edge_k, edge_{k+1})` except the last bin along each
/// axis, which also includes its upper edge so clamped boundary values are
/// counted.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HistogramGrid {
    lo: f64,
    hi: f64,
    bins: usize,
}

impl HistogramGrid {
    /// Builds a grid of bin width `h` over `[lo, hi]^2`. `(hi - lo) / h`
    /// must be an integer (within floating-point tolerance).
    pub fn new(h: f64, lo: f64, hi: f64) -> Result<Self> {
        if !(h > 0.0) || !h.is_finite() {
            return Err(Error::Grid(format!("bin width must be positive, got {h}")));
        }
        if !(hi > lo) {
            return Err(Error::Grid(format!("empty domain [{lo}, {hi}]")));
        }
        let ratio = (hi - lo) / h;
        let bins = ratio.round();
        if bins < 1.0 || (ratio - bins).abs() > 1e-9 * ratio.max(1.0) {
            return Err(Error::Grid(format!(
                "(hi - lo) / h = {ratio} is not an integer bin count"
            )));
        }
        Ok(HistogramGrid {
            lo,
            hi,
            bins: bins as usize,
        })
    }

    /// The default featurization grid: width 0.2 on [-3, 3]^2 (900 bins).
    pub fn default_feature_grid() -> Self {
        HistogramGrid::new(0.2, -3.0, 3.0).expect("static grid is valid")
    }

    pub fn lo(&self) -> f64 {
        self.lo
    }

    pub fn hi(&self) -> f64 {
        self.hi
    }

    pub fn bins(&self) -> usize {
        self.bins
    }

    pub fn bin_width(&self) -> f64 {
        (self.hi - self.lo) / self.bins as f64
    }

    /// Bin index along one axis; the closing edge maps into the last bin.
    fn bin_of(&self, x: f64) -> usize {
        let t = (x - self.lo) / (self.hi - self.lo);
        let idx = (t * self.bins as f64).floor() as isize;
        idx.clamp(0, self.bins as isize - 1) as usize
    }

    fn contains(&self, x: f64) -> bool {
        x >= self.lo && x <= self.hi
    }
}

/// A normalized bivariate histogram: `mass[(i, j)]` is the fraction of
/// samples in bin `B_{i,j}` (first variable along the first axis). The
/// estimated density on that bin is `mass / h^2`.
#[derive(Debug, Clone, PartialEq)]
pub struct HistogramDensity {
    mass: DMatrix<f64>,
    grid: HistogramGrid,
    n: usize,
}

impl HistogramDensity {
    pub fn mass(&self) -> &DMatrix<f64> {
        &self.mass
    }

    pub fn grid(&self) -> &HistogramGrid {
        &self.grid
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Density value on bin (i, j).
    pub fn density(&self, i: usize, j: usize) -> f64 {
        let h = self.grid.bin_width();
        self.mass[(i, j)] / (h * h)
    }

    /// Density evaluated at a point of the domain.
    pub fn density_at(&self, x: f64, y: f64) -> f64 {
        self.density(self.grid.bin_of(x), self.grid.bin_of(y))
    }

    pub fn total_mass(&self) -> f64 {
        self.mass.iter().sum()
    }

    /// Flattened mass grid, first-axis-major: entry `i * bins + j`.
    pub fn flat_mass(&self) -> Vec<f64> {
        let b = self.grid.bins();
        let mut out = Vec::with_capacity(b * b);
        for i in 0..b {
            for j in 0..b {
                out.push(self.mass[(i, j)]);
            }
        }
        out
    }
}

/// Bins an n×2 scatter into a normalized histogram. All points must lie
/// inside the grid domain.
pub fn histogram_estimate(xs: &[f64], ys: &[f64], grid: &HistogramGrid) -> Result<HistogramDensity> {
    if xs.len() != ys.len() {
        return Err(Error::Param(format!(
            "coordinate slices of unequal length ({} vs {})",
            xs.len(),
            ys.len()
        )));
    }
    let n = xs.len();
    if n == 0 {
        return Err(Error::EmptyData);
    }
    let b = grid.bins();
    let mut counts = vec![0u64; b * b];
    for (&x, &y) in xs.iter().zip(ys) {
        if !grid.contains(x) || !grid.contains(y) {
            return Err(Error::OutOfDomain {
                x,
                y,
                lo: grid.lo(),
                hi: grid.hi(),
            });
        }
        counts[grid.bin_of(x) * b + grid.bin_of(y)] += 1;
    }
    let inv_n = 1.0 / n as f64;
    let mass = DMatrix::from_fn(b, b, |i, j| counts[i * b + j] as f64 * inv_n);
    Ok(HistogramDensity {
        mass,
        grid: *grid,
        n,
    })
}

/// Standardizes each column to sample mean 0 and sample standard deviation 1
/// (denominator n-1), then clamps every value into `[-bound, bound]`.
pub fn standardize_truncate(data: &DataMatrix, bound: f64) -> Result<DataMatrix> {
    if !(bound > 0.0) {
        return Err(Error::Param(format!(
            "truncation bound must be positive, got {bound}"
        )));
    }
    let n = data.n();
    let mut values = data.values().clone();
    for c in 0..data.p() {
        let mut col = values.column_mut(c);
        let mean = col.iter().sum::<f64>() / n as f64;
        let ss: f64 = col.iter().map(|v| (v - mean) * (v - mean)).sum();
        let sd = (ss / (n as f64 - 1.0)).sqrt();
        if sd == 0.0 {
            return Err(Error::ConstantVariable {
                name: data.variable_names()[c].clone(),
            });
        }
        for v in col.iter_mut() {
            *v = ((*v - mean) / sd).clamp(-bound, bound);
        }
    }
    DataMatrix::new(values, data.variable_names().to_vec())
}

/// Whether feature rows are raw flattened bin masses or PCA projections.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FeatureKind {
    RawBins,
    PcaReduced,
}

/// Orthonormal PCA basis fitted to a raw feature matrix, kept so projections
/// are reproducible.
#[derive(Debug, Clone, PartialEq)]
pub struct PcaBasis {
    /// Feature-mean row subtracted before projection.
    pub mean: DVector<f64>,
    /// d_raw × d_eff matrix with orthonormal columns (principal directions,
    /// decreasing singular value).
    pub components: DMatrix<f64>,
    /// Singular values of the centered feature matrix, decreasing.
    pub singular_values: Vec<f64>,
}

/// One feature row per ordered pair, in linear-index order.
#[derive(Debug, Clone, PartialEq)]
pub struct PairFeatureMatrix {
    features: DMatrix<f64>,
    kind: FeatureKind,
    grid: HistogramGrid,
    p: usize,
    pca: Option<PcaBasis>,
}

impl PairFeatureMatrix {
    pub fn features(&self) -> &DMatrix<f64> {
        &self.features
    }

    pub fn kind(&self) -> FeatureKind {
        self.kind
    }

    pub fn grid(&self) -> &HistogramGrid {
        &self.grid
    }

    /// Variable count p; rows are the m = p(p-1) ordered pairs.
    pub fn p(&self) -> usize {
        self.p
    }

    pub fn num_pairs(&self) -> usize {
        self.features.nrows()
    }

    pub fn dim(&self) -> usize {
        self.features.ncols()
    }

    pub fn pca_basis(&self) -> Option<&PcaBasis> {
        self.pca.as_ref()
    }

    pub fn row(&self, k: usize) -> Vec<f64> {
        self.features.row(k).iter().copied().collect()
    }
}

/// Builds the m×(bins^2) raw feature matrix: row k(i, j) is the flattened
/// histogram of columns (i, j), first variable on the first grid axis.
///
/// `data` must already be standardized and truncated into the grid domain.
/// Rows are computed in parallel.
pub fn pair_features(data: &DataMatrix, grid: &HistogramGrid) -> Result<PairFeatureMatrix> {
    let p = data.p();
    let pairs = PairIndex::new(p);
    let m = pairs.count();
    let d = grid.bins() * grid.bins();
    let columns: Vec<Vec<f64>> = (0..p).map(|c| data.column(c)).collect();
    let pair_list: Vec<(usize, usize)> = pairs.pairs().collect();

    let mut rows = vec![0.0f64; m * d];
    rows.par_chunks_mut(d)
        .zip(pair_list.par_iter())
        .try_for_each(|(row, &(i, j))| -> Result<()> {
            let hist = histogram_estimate(&columns[i], &columns[j], grid)?;
            row.copy_from_slice(&hist.flat_mass());
            Ok(())
        })?;

    Ok(PairFeatureMatrix {
        features: DMatrix::from_row_slice(m, d, &rows),
        kind: FeatureKind::RawBins,
        grid: *grid,
        p,
        pca: None,
    })
}

/// Centers the feature rows and projects them onto the top
/// `min(d_target, rank)` principal directions.
///
/// The basis is orthonormal and ordered by decreasing singular value;
/// directions with numerically zero singular value are dropped, so a
/// `d_target` above the rank truncates silently.
pub fn pca_reduce(features: &PairFeatureMatrix, d_target: usize) -> Result<PairFeatureMatrix> {
    if d_target == 0 {
        return Err(Error::Param("d_target must be at least 1".into()));
    }
    let x = features.features();
    let (m, d) = (x.nrows(), x.ncols());

    let mean = DVector::from_fn(d, |c, _| x.column(c).iter().sum::<f64>() / m as f64);
    let mut centered = x.clone();
    for r in 0..m {
        for c in 0..d {
            centered[(r, c)] -= mean[c];
        }
    }

    // Eigendecompose the smaller of C'C (d×d) and CC' (m×m).
    let (mut eigvals, mut components) = if d <= m {
        let cov = centered.transpose() * &centered;
        let eig = cov.symmetric_eigen();
        (eig.eigenvalues, eig.eigenvectors)
    } else {
        let gram = &centered * centered.transpose();
        let eig = gram.symmetric_eigen();
        // Right singular vectors from the left ones: v = C'u / sigma.
        let mut vals = Vec::with_capacity(m);
        let mut vecs = DMatrix::zeros(d, m);
        for c in 0..m {
            let lambda = eig.eigenvalues[c].max(0.0);
            vals.push(lambda);
            if lambda > 0.0 {
                let v = centered.transpose() * eig.eigenvectors.column(c) / lambda.sqrt();
                vecs.set_column(c, &v);
            }
        }
        (DVector::from_vec(vals), vecs)
    };

    // Sort by decreasing eigenvalue.
    let mut order: Vec<usize> = (0..eigvals.len()).collect();
    order.sort_by(|&a, &b| eigvals[b].partial_cmp(&eigvals[a]).unwrap());
    let sorted_vals: Vec<f64> = order.iter().map(|&i| eigvals[i].max(0.0)).collect();
    let sorted_vecs = DMatrix::from_fn(components.nrows(), order.len(), |r, c| {
        components[(r, order[c])]
    });
    eigvals = DVector::from_vec(sorted_vals);
    components = sorted_vecs;

    // Numerical rank: eigenvalues of the cross-product matrix below
    // eps * max_dim * lambda_max are noise.
    let lambda_max = eigvals.iter().cloned().fold(0.0f64, f64::max);
    let tol = f64::EPSILON * m.max(d) as f64 * lambda_max;
    let rank = eigvals.iter().take_while(|&&l| l > tol).count();
    let d_eff = d_target.min(rank);

    let mut basis = DMatrix::zeros(d, d_eff);
    let mut singular_values = Vec::with_capacity(d_eff);
    for c in 0..d_eff {
        let mut col: DVector<f64> = components.column(c).into();
        // Deterministic sign: largest-magnitude component positive.
        let pivot = col
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.abs().partial_cmp(&b.1.abs()).unwrap())
            .map(|(i, _)| i)
            .unwrap_or(0);
        if col[pivot] < 0.0 {
            col.neg_mut();
        }
        basis.set_column(c, &col);
        singular_values.push(eigvals[c].sqrt());
    }

    let projected = &centered * &basis;
    Ok(PairFeatureMatrix {
        features: projected,
        kind: FeatureKind::PcaReduced,
        grid: *features.grid(),
        p: features.p(),
        pca: Some(PcaBasis {
            mean,
            components: basis,
            singular_values,
        }),
    })
}
