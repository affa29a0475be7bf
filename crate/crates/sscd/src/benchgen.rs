//! Synthetic benchmark construction: linear-Gaussian structural-equation
//! data with clamping interventions, the robust z-score gold standard, and
//! the two label-sampling schemes (random pairs, whole rows).
//!
//! Everything here is seed-deterministic: the same spec and arguments always
//! produce the same bytes.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, Uniform};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::pairspace::{AdjacencyMatrix, DataMatrix, LabelAssignment, LabelState, PairIndex};

/// A weighted directed edge of a structural-equation model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SemEdge {
    pub from: usize,
    pub to: usize,
    pub weight: f64,
}

/// Specification of a linear-Gaussian structural-equation model:
/// `x_v = sum_{u -> v} w_uv * x_u + eps_v`, `eps_v ~ Normal(0, noise_sd^2)`,
/// over an acyclic edge set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SemSpec {
    pub p: usize,
    pub edges: Vec<SemEdge>,
    pub noise_sd: f64,
    pub seed: u64,
}

impl SemSpec {
    pub fn new(p: usize, edges: Vec<SemEdge>, noise_sd: f64, seed: u64) -> Result<Self> {
        let spec = SemSpec {
            p,
            edges,
            noise_sd,
            seed,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if self.p < 2 {
            return Err(Error::Param(format!("need p >= 2 variables, got {}", self.p)));
        }
        if !(self.noise_sd > 0.0) {
            return Err(Error::Param(format!(
                "noise standard deviation must be positive, got {}",
                self.noise_sd
            )));
        }
        for e in &self.edges {
            if e.from == e.to || e.from >= self.p || e.to >= self.p {
                return Err(Error::Param(format!(
                    "invalid edge ({}, {}) for p={}",
                    e.from, e.to, self.p
                )));
            }
            if e.weight == 0.0 || !e.weight.is_finite() {
                return Err(Error::Param(format!(
                    "edge ({}, {}) must carry a finite nonzero weight",
                    e.from, e.to
                )));
            }
        }
        self.topological_order().map(|_| ())
    }

    /// Kahn's algorithm; errors on a cycle.
    pub fn topological_order(&self) -> Result<Vec<usize>> {
        let mut indegree = vec![0usize; self.p];
        let mut children: Vec<Vec<usize>> = vec![Vec::new(); self.p];
        for e in &self.edges {
            indegree[e.to] += 1;
            children[e.from].push(e.to);
        }
        let mut queue: Vec<usize> = (0..self.p).filter(|&v| indegree[v] == 0).collect();
        let mut order = Vec::with_capacity(self.p);
        while let Some(v) = queue.pop() {
            order.push(v);
            for &c in &children[v] {
                indegree[c] -= 1;
                if indegree[c] == 0 {
                    queue.push(c);
                }
            }
        }
        if order.len() != self.p {
            return Err(Error::Cycle);
        }
        Ok(order)
    }

    /// Parents of each variable with their weights.
    fn parents(&self) -> Vec<Vec<(usize, f64)>> {
        let mut parents: Vec<Vec<(usize, f64)>> = vec![Vec::new(); self.p];
        for e in &self.edges {
            parents[e.to].push((e.from, e.weight));
        }
        parents
    }

    pub fn variable_names(&self) -> Vec<String> {
        (0..self.p).map(|i| format!("x{i}")).collect()
    }
}

/// Parameters for drawing a random DAG spec over `p` observed variables.
///
/// With `latent_hubs = 0` this is a plain Erdős–Rényi-style DAG over a
/// random ordering with forward-edge probability `edge_prob`.
///
/// With `latent_hubs > 0` the spec models unmeasured master regulators: the
/// hub variables are appended after the observed block (callers keep only
/// the first `p` columns) and each co-activates `hub_children` observed
/// variables with weight `+hub_weight`. Those siblings are strongly
/// positively correlated but never causally related. The remaining observed
/// variables split into a small source set and a sink set; every sink is
/// inhibited by `parents_per_sink` source parents (weights `-magnitude`,
/// plus extras with probability `edge_prob`), so causal pairs carry strong
/// negative correlation. Ranked by correlation magnitude alone the
/// confounded siblings come first; the sign structure is only usable by a
/// method that learns from labelled examples.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RandomDagParams {
    /// Probability of each optional extra source -> sink edge.
    pub edge_prob: f64,
    /// Weight magnitudes are uniform on [low, high]; the sign is random.
    pub weight_low: f64,
    pub weight_high: f64,
    pub noise_sd: f64,
    /// Number of unmeasured driver variables (0 = plain DAG).
    pub latent_hubs: usize,
    /// Observed variables driven by each hub.
    pub hub_children: usize,
    /// Weight magnitude of hub -> observed edges (random sign).
    pub hub_weight: f64,
    /// Mandatory source parents per sink variable (hub mode).
    pub parents_per_sink: usize,
}

impl Default for RandomDagParams {
    fn default() -> Self {
        RandomDagParams {
            edge_prob: 0.15,
            weight_low: 0.5,
            weight_high: 1.5,
            noise_sd: 1.0,
            latent_hubs: 0,
            hub_children: 8,
            hub_weight: 5.0,
            parents_per_sink: 1,
        }
    }
}

/// Draws an acyclic spec per [`RandomDagParams`]. With latent hubs the
/// returned spec has `p + latent_hubs` variables, observed ones first.
pub fn random_dag(p: usize, params: &RandomDagParams, seed: u64) -> Result<SemSpec> {
    if !(0.0..=1.0).contains(&params.edge_prob) {
        return Err(Error::Param(format!(
            "edge probability must lie in [0, 1], got {}",
            params.edge_prob
        )));
    }
    if !(0.0 < params.weight_low && params.weight_low <= params.weight_high) {
        return Err(Error::Param(
            "weight magnitudes must satisfy 0 < low <= high".into(),
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let magnitude = Uniform::new_inclusive(params.weight_low, params.weight_high)
        .map_err(|e| Error::Param(e.to_string()))?;
    let coin = Uniform::new(0.0f64, 1.0).map_err(|e| Error::Param(e.to_string()))?;

    if params.latent_hubs == 0 {
        let mut order: Vec<usize> = (0..p).collect();
        order.shuffle(&mut rng);
        let mut edges = Vec::new();
        for a in 0..p {
            for b in (a + 1)..p {
                if coin.sample(&mut rng) < params.edge_prob {
                    let mut weight = magnitude.sample(&mut rng);
                    if coin.sample(&mut rng) < 0.5 {
                        weight = -weight;
                    }
                    edges.push(SemEdge {
                        from: order[a],
                        to: order[b],
                        weight,
                    });
                }
            }
        }
        return SemSpec::new(p, edges, params.noise_sd, seed);
    }

    let hubs = params.latent_hubs;
    let sib_vars = hubs * params.hub_children;
    if params.hub_children < 2 || !(params.hub_weight > 0.0) || sib_vars + 4 > p {
        return Err(Error::Param(format!(
            "latent-hub mode needs hub_children >= 2, a positive hub weight and \
             latent_hubs * hub_children + 4 <= p (got {sib_vars} sibling variables, p={p})"
        )));
    }
    let p_total = p + hubs;
    let mut edges = Vec::new();

    let mut perm: Vec<usize> = (0..p).collect();
    perm.shuffle(&mut rng);

    // Sibling layer: `hub_children` co-activated variables per hub.
    for h in 0..hubs {
        for c in 0..params.hub_children {
            let child = perm[h * params.hub_children + c];
            edges.push(SemEdge {
                from: p + h,
                to: child,
                weight: params.hub_weight,
            });
        }
    }

    // The rest is the causal layer: a few sources driving many sinks.
    let rest = &perm[sib_vars..];
    let n_sources = (rest.len() / 3).max(2);
    let sources = &rest[..n_sources];
    let sinks = &rest[n_sources..];

    for &sink in sinks {
        let mut candidates = sources.to_vec();
        candidates.shuffle(&mut rng);
        let wanted = params.parents_per_sink.max(1).min(candidates.len());
        for &parent in &candidates[..wanted] {
            let weight = -magnitude.sample(&mut rng);
            edges.push(SemEdge {
                from: parent,
                to: sink,
                weight,
            });
        }
        for &s in &candidates[wanted..] {
            if coin.sample(&mut rng) < params.edge_prob {
                let weight = -magnitude.sample(&mut rng);
                edges.push(SemEdge {
                    from: s,
                    to: sink,
                    weight,
                });
            }
        }
    }
    SemSpec::new(p_total, edges, params.noise_sd, seed)
}

/// One post-intervention sample: the clamped target and the values of all
/// variables under that clamp.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InterventionRow {
    pub target: usize,
    pub values: Vec<f64>,
}

/// Samples observational rows and one row per requested intervention.
///
/// Interventions clamp the target to the given value (its structural
/// equation is removed) and sample every other variable as usual.
pub fn simulate_sem(
    spec: &SemSpec,
    n_obs: usize,
    interventions: &[(usize, f64)],
) -> Result<(DataMatrix, Vec<InterventionRow>)> {
    spec.validate()?;
    if n_obs < 2 {
        return Err(Error::Param(format!(
            "need at least 2 observational samples, got {n_obs}"
        )));
    }
    for &(target, value) in interventions {
        if target >= spec.p {
            return Err(Error::Param(format!(
                "intervention target {target} out of range for p={}",
                spec.p
            )));
        }
        if !value.is_finite() {
            return Err(Error::Param("intervention value must be finite".into()));
        }
    }

    let order = spec.topological_order()?;
    let parents = spec.parents();
    let noise = Normal::new(0.0, spec.noise_sd).map_err(|e| Error::Param(e.to_string()))?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);

    let sample_row = |clamp: Option<(usize, f64)>, rng: &mut ChaCha8Rng| -> Vec<f64> {
        let mut row = vec![0.0; spec.p];
        for &v in &order {
            if let Some((target, value)) = clamp {
                if v == target {
                    row[v] = value;
                    continue;
                }
            }
            let mut x = noise.sample(rng);
            for &(u, w) in &parents[v] {
                x += w * row[u];
            }
            row[v] = x;
        }
        row
    };

    let obs_rows: Vec<Vec<f64>> = (0..n_obs).map(|_| sample_row(None, &mut rng)).collect();
    let intervention_rows: Vec<InterventionRow> = interventions
        .iter()
        .map(|&(target, value)| InterventionRow {
            target,
            values: sample_row(Some((target, value)), &mut rng),
        })
        .collect();

    let data = DataMatrix::from_rows(&obs_rows, spec.variable_names())?;
    Ok((data, intervention_rows))
}

/// How a gold standard was produced.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Provenance {
    /// Robust z-score rule on interventional readouts.
    ZScore,
    /// Directed reachability in the generating DAG.
    Reachability,
}

/// Ground-truth adjacency of (possibly indirect) causal effects.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GoldStandard {
    pub adjacency: AdjacencyMatrix,
    /// Threshold of the z-score rule; NaN for reachability provenance.
    #[serde(default = "f64_nan", skip_serializing_if = "is_nan")]
    pub tau: f64,
    pub provenance: Provenance,
    /// Variables dropped from the z-score rule because their observational
    /// interquartile range was zero.
    pub excluded: Vec<usize>,
}

fn f64_nan() -> f64 {
    f64::NAN
}

#[allow(clippy::trivially_copy_pass_by_ref)]
fn is_nan(v: &f64) -> bool {
    v.is_nan()
}

/// Linear-interpolation quantile of a sorted slice (the common type-7 rule).
fn quantile_sorted(sorted: &[f64], q: f64) -> f64 {
    let n = sorted.len();
    if n == 1 {
        return sorted[0];
    }
    let pos = q * (n - 1) as f64;
    let lo = pos.floor() as usize;
    let frac = pos - lo as f64;
    if lo + 1 < n {
        sorted[lo] + frac * (sorted[lo + 1] - sorted[lo])
    } else {
        sorted[n - 1]
    }
}

/// Robust z-score gold standard: pair (i, j) is causal iff
/// `|x_j^(int i) - median_j| / IQR_j > tau` (strict). Variables with zero
/// observational IQR are excluded from both sides of the rule and reported.
pub fn zscore_gold_standard(
    intervention_rows: &[InterventionRow],
    obs_holdout: &DataMatrix,
    tau: f64,
) -> Result<GoldStandard> {
    if !(tau >= 0.0) {
        return Err(Error::Param(format!("threshold must be nonnegative, got {tau}")));
    }
    let p = obs_holdout.p();
    for row in intervention_rows {
        if row.target >= p || row.values.len() != p {
            return Err(Error::Param(format!(
                "intervention row for target {} does not match p={p}",
                row.target
            )));
        }
    }

    let mut medians = vec![0.0; p];
    let mut iqrs = vec![0.0; p];
    let mut excluded = Vec::new();
    for j in 0..p {
        let mut col = obs_holdout.column(j);
        col.sort_by(|a, b| a.partial_cmp(b).unwrap());
        medians[j] = quantile_sorted(&col, 0.5);
        iqrs[j] = quantile_sorted(&col, 0.75) - quantile_sorted(&col, 0.25);
        if iqrs[j] == 0.0 {
            excluded.push(j);
        }
    }

    let mut adjacency = AdjacencyMatrix::zeros(p);
    for row in intervention_rows {
        let i = row.target;
        if excluded.contains(&i) {
            continue;
        }
        for j in 0..p {
            if j == i || excluded.contains(&j) {
                continue;
            }
            let z = (row.values[j] - medians[j]).abs() / iqrs[j];
            if z > tau {
                adjacency.set(i, j, true);
            }
        }
    }
    Ok(GoldStandard {
        adjacency,
        tau,
        provenance: Provenance::ZScore,
        excluded,
    })
}

/// True iff the fraction of off-diagonal ones reaches `min_fraction`.
pub fn density_check(adjacency: &AdjacencyMatrix, min_fraction: f64) -> bool {
    adjacency.off_diagonal_density() >= min_fraction
}

/// Gold standard from directed reachability: (i, j) causal iff some
/// directed path i -> ... -> j exists.
pub fn reachability_gold_standard(spec: &SemSpec) -> Result<GoldStandard> {
    let order = spec.topological_order()?;
    let mut children: Vec<Vec<usize>> = vec![Vec::new(); spec.p];
    for e in &spec.edges {
        children[e.from].push(e.to);
    }
    // Reachable sets in reverse topological order.
    let mut reach: Vec<Vec<bool>> = vec![vec![false; spec.p]; spec.p];
    for &v in order.iter().rev() {
        for &c in &children[v] {
            reach[v][c] = true;
            for j in 0..spec.p {
                if reach[c][j] {
                    reach[v][j] = true;
                }
            }
        }
    }
    let mut adjacency = AdjacencyMatrix::zeros(spec.p);
    for i in 0..spec.p {
        for j in 0..spec.p {
            if i != j && reach[i][j] {
                adjacency.set(i, j, true);
            }
        }
    }
    Ok(GoldStandard {
        adjacency,
        tau: f64::NAN,
        provenance: Provenance::Reachability,
        excluded: Vec::new(),
    })
}

/// How labelled pairs are drawn from the gold standard.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum LabelScheme {
    /// A uniform sample of `floor(rho * m)` pairs.
    Random,
    /// All pairs (i, .) for a uniform sample of `floor(rho * p)` cause
    /// variables i.
    RowWise,
}

impl std::fmt::Display for LabelScheme {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            LabelScheme::Random => write!(f, "random"),
            LabelScheme::RowWise => write!(f, "rowwise"),
        }
    }
}

/// Reveals a fraction `rho` of the gold standard as labels; the remainder
/// stays unlabelled. Deterministic given the seed.
pub fn sample_labels(
    adjacency: &AdjacencyMatrix,
    rho: f64,
    scheme: LabelScheme,
    seed: u64,
) -> Result<LabelAssignment> {
    if !(rho > 0.0 && rho < 1.0) {
        return Err(Error::Param(format!(
            "label fraction must lie strictly between 0 and 1, got {rho}"
        )));
    }
    let p = adjacency.p();
    let pairs = PairIndex::new(p);
    let m = pairs.count();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    let mut states = vec![LabelState::Unlabelled; m];
    let label_pair = |k: usize, states: &mut Vec<LabelState>| {
        let (i, j) = pairs.unindex(k).expect("k < m");
        states[k] = if adjacency.get(i, j) {
            LabelState::Causal
        } else {
            LabelState::NonCausal
        };
    };

    match scheme {
        LabelScheme::Random => {
            let n_lab = (rho * m as f64).floor() as usize;
            if n_lab == 0 {
                return Err(Error::Param(format!(
                    "rho={rho} labels no pairs (m={m})"
                )));
            }
            let mut all: Vec<usize> = (0..m).collect();
            all.shuffle(&mut rng);
            for &k in all.iter().take(n_lab) {
                label_pair(k, &mut states);
            }
        }
        LabelScheme::RowWise => {
            let n_rows = (rho * p as f64).floor() as usize;
            if n_rows == 0 {
                return Err(Error::Param(format!(
                    "rho={rho} labels no rows (p={p})"
                )));
            }
            let mut rows: Vec<usize> = (0..p).collect();
            rows.shuffle(&mut rng);
            for &i in rows.iter().take(n_rows) {
                for j in 0..p {
                    if j != i {
                        label_pair(pairs.index(i, j).unwrap(), &mut states);
                    }
                }
            }
        }
    }
    Ok(LabelAssignment::new(states))
}
