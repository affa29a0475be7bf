//! Core data model: data matrices, ordered-pair linear indexing, label sets
//! and adjacency matrices.
//!
//! Every ordered pair (i, j) of distinct variables is an object of the
//! learning task. Pairs are linearized row-major while skipping the diagonal:
//! `k(i, j) = i * (p - 1) + j - [j > i]`, giving `m = p * (p - 1)` pairs.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// An n×p matrix of real measurements. Rows are samples, columns are named
/// variables. Entries are guaranteed finite and names unique.
#[derive(Debug, Clone, PartialEq)]
pub struct DataMatrix {
    values: DMatrix<f64>,
    variable_names: Vec<String>,
}

impl DataMatrix {
    pub fn new(values: DMatrix<f64>, variable_names: Vec<String>) -> Result<Self> {
        let (n, p) = (values.nrows(), values.ncols());
        if n < 2 || p < 2 {
            return Err(Error::Param(format!(
                "data matrix must have n >= 2 samples and p >= 2 variables (got n={n}, p={p})"
            )));
        }
        if variable_names.len() != p {
            return Err(Error::Param(format!(
                "{} variable names for {p} columns",
                variable_names.len()
            )));
        }
        for (idx, name) in variable_names.iter().enumerate() {
            if variable_names[..idx].contains(name) {
                return Err(Error::DuplicateVariable { name: name.clone() });
            }
        }
        for col in 0..p {
            for row in 0..n {
                if !values[(row, col)].is_finite() {
                    return Err(Error::NonFiniteValue {
                        row,
                        column: variable_names[col].clone(),
                    });
                }
            }
        }
        Ok(DataMatrix {
            values,
            variable_names,
        })
    }

    /// Builds a matrix from row-major sample data.
    pub fn from_rows(rows: &[Vec<f64>], variable_names: Vec<String>) -> Result<Self> {
        let n = rows.len();
        let p = variable_names.len();
        if rows.iter().any(|r| r.len() != p) {
            return Err(Error::Format(
                "all rows must have one entry per variable".into(),
            ));
        }
        let values = DMatrix::from_fn(n, p, |r, c| rows[r][c]);
        DataMatrix::new(values, variable_names)
    }

    pub fn n(&self) -> usize {
        self.values.nrows()
    }

    pub fn p(&self) -> usize {
        self.values.ncols()
    }

    pub fn values(&self) -> &DMatrix<f64> {
        &self.values
    }

    pub fn variable_names(&self) -> &[String] {
        &self.variable_names
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        self.values.column(j).iter().copied().collect()
    }

    /// Position of a variable name, if present.
    pub fn variable_id(&self, name: &str) -> Option<usize> {
        self.variable_names.iter().position(|v| v == name)
    }

    /// A new matrix containing the given sample rows, in the given order.
    pub fn select_rows(&self, rows: &[usize]) -> Result<Self> {
        let data: Vec<Vec<f64>> = rows
            .iter()
            .map(|&r| self.values.row(r).iter().copied().collect())
            .collect();
        DataMatrix::from_rows(&data, self.variable_names.clone())
    }

    /// A new matrix containing the given variable columns, in the given
    /// order.
    pub fn select_columns(&self, cols: &[usize]) -> Result<Self> {
        let data: Vec<Vec<f64>> = (0..self.n())
            .map(|r| cols.iter().map(|&c| self.values[(r, c)]).collect())
            .collect();
        let names = cols
            .iter()
            .map(|&c| self.variable_names[c].clone())
            .collect();
        DataMatrix::from_rows(&data, names)
    }
}

/// Bijection between ordered pairs (i, j), i != j, and linear indices
/// 0..m with m = p(p-1).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PairIndex {
    p: usize,
}

impl PairIndex {
    pub fn new(p: usize) -> Self {
        PairIndex { p }
    }

    pub fn p(&self) -> usize {
        self.p
    }

    /// Number of ordered pairs, m = p(p-1).
    pub fn count(&self) -> usize {
        self.p * (self.p - 1)
    }

    /// Linear index of the ordered pair (i, j).
    pub fn index(&self, i: usize, j: usize) -> Result<usize> {
        if i == j || i >= self.p || j >= self.p {
            return Err(Error::PairIndex { i, j, p: self.p });
        }
        Ok(i * (self.p - 1) + j - usize::from(j > i))
    }

    /// Inverse of [`PairIndex::index`].
    pub fn unindex(&self, k: usize) -> Result<(usize, usize)> {
        let m = self.count();
        if k >= m {
            return Err(Error::LinearIndex { k, m });
        }
        let i = k / (self.p - 1);
        let r = k % (self.p - 1);
        let j = if r < i { r } else { r + 1 };
        Ok((i, j))
    }

    /// Iterates all ordered pairs in canonical (linear-index) order.
    pub fn pairs(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        let p = self.p;
        (0..p).flat_map(move |i| (0..p).filter(move |&j| j != i).map(move |j| (i, j)))
    }
}

/// Per-pair label state.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum LabelState {
    NonCausal,
    Causal,
    Unlabelled,
}

impl LabelState {
    pub fn is_labelled(&self) -> bool {
        !matches!(self, LabelState::Unlabelled)
    }
}

/// Labels over all m ordered pairs, partitioning them into a labelled set L
/// and an unlabelled set U.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabelAssignment {
    states: Vec<LabelState>,
}

impl LabelAssignment {
    pub fn new(states: Vec<LabelState>) -> Self {
        LabelAssignment { states }
    }

    pub fn all_unlabelled(m: usize) -> Self {
        LabelAssignment {
            states: vec![LabelState::Unlabelled; m],
        }
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn state(&self, k: usize) -> LabelState {
        self.states[k]
    }

    pub fn states(&self) -> &[LabelState] {
        &self.states
    }

    /// Indices of labelled pairs (the set L), in increasing order.
    pub fn labelled_indices(&self) -> Vec<usize> {
        (0..self.states.len())
            .filter(|&k| self.states[k].is_labelled())
            .collect()
    }

    /// Indices of unlabelled pairs (the set U), in increasing order.
    pub fn unlabelled_indices(&self) -> Vec<usize> {
        (0..self.states.len())
            .filter(|&k| !self.states[k].is_labelled())
            .collect()
    }

    pub fn num_labelled(&self) -> usize {
        self.states.iter().filter(|s| s.is_labelled()).count()
    }

    pub fn num_unlabelled(&self) -> usize {
        self.states.len() - self.num_labelled()
    }
}

/// p×p binary adjacency matrix with a zero diagonal. Entry (i, j) asserts a
/// causal influence of variable i on variable j; the matrix is in general
/// asymmetric and the graph need not be acyclic.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(into = "AdjacencyRepr", try_from = "AdjacencyRepr")]
pub struct AdjacencyMatrix {
    p: usize,
    entries: Vec<bool>,
}

impl AdjacencyMatrix {
    pub fn zeros(p: usize) -> Self {
        AdjacencyMatrix {
            p,
            entries: vec![false; p * p],
        }
    }

    pub fn p(&self) -> usize {
        self.p
    }

    pub fn get(&self, i: usize, j: usize) -> bool {
        self.entries[i * self.p + j]
    }

    pub fn set(&mut self, i: usize, j: usize, value: bool) {
        assert!(i != j, "the diagonal of an adjacency matrix is fixed to 0");
        self.entries[i * self.p + j] = value;
    }

    pub fn edge_count(&self) -> usize {
        self.entries.iter().filter(|&&e| e).count()
    }

    /// Fraction of off-diagonal entries set to 1.
    pub fn off_diagonal_density(&self) -> f64 {
        let m = self.p * (self.p - 1);
        self.edge_count() as f64 / m as f64
    }

    pub fn edges(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for i in 0..self.p {
            for j in 0..self.p {
                if i != j && self.get(i, j) {
                    out.push((i, j));
                }
            }
        }
        out
    }
}

#[derive(Serialize, Deserialize)]
struct AdjacencyRepr {
    p: usize,
    edges: Vec<(usize, usize)>,
}

impl From<AdjacencyMatrix> for AdjacencyRepr {
    fn from(a: AdjacencyMatrix) -> Self {
        AdjacencyRepr {
            p: a.p,
            edges: a.edges(),
        }
    }
}

impl TryFrom<AdjacencyRepr> for AdjacencyMatrix {
    type Error = String;

    fn try_from(repr: AdjacencyRepr) -> std::result::Result<Self, String> {
        let mut a = AdjacencyMatrix::zeros(repr.p);
        for (i, j) in repr.edges {
            if i == j || i >= repr.p || j >= repr.p {
                return Err(format!("invalid edge ({i},{j}) for p={}", repr.p));
            }
            a.set(i, j, true);
        }
        Ok(a)
    }
}

/// Reads labels for `observed` pairs off an adjacency matrix; all other pairs
/// stay unlabelled.
pub fn labels_from_adjacency(
    adjacency: &AdjacencyMatrix,
    observed: &[(usize, usize)],
) -> Result<LabelAssignment> {
    let pairs = PairIndex::new(adjacency.p());
    let mut states = vec![LabelState::Unlabelled; pairs.count()];
    for &(i, j) in observed {
        let k = pairs.index(i, j)?;
        states[k] = if adjacency.get(i, j) {
            LabelState::Causal
        } else {
            LabelState::NonCausal
        };
    }
    Ok(LabelAssignment::new(states))
}

/// Rebuilds the adjacency matrix from a complete label vector. Errors if any
/// pair is still unlabelled.
pub fn graph_from_labels(labels: &LabelAssignment, p: usize) -> Result<AdjacencyMatrix> {
    let pairs = PairIndex::new(p);
    if labels.len() != pairs.count() {
        return Err(Error::Param(format!(
            "label vector length {} does not match m={} for p={p}",
            labels.len(),
            pairs.count()
        )));
    }
    let mut adjacency = AdjacencyMatrix::zeros(p);
    for (k, (i, j)) in pairs.pairs().enumerate() {
        match labels.state(k) {
            LabelState::Causal => adjacency.set(i, j, true),
            LabelState::NonCausal => {}
            LabelState::Unlabelled => return Err(Error::IncompleteLabels { k }),
        }
    }
    Ok(adjacency)
}
