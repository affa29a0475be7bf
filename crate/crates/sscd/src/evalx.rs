//! Evaluation: ROC/AUC over unlabelled pairs and the multi-replicate
//! experiment harness (label-fraction sweeps, training-size sweeps,
//! mean AUC with standard errors).

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::baselines::{self, ScoreTable};
use crate::benchgen::{
    density_check, random_dag, sample_labels, simulate_sem, zscore_gold_standard,
    GoldStandard, LabelScheme, RandomDagParams,
};
use crate::error::{Error, Result};
use crate::laprls::FitResult;
use crate::pairspace::{DataMatrix, LabelAssignment, PairIndex};
use crate::pipeline::{run_sscd, SscdParams};

/// ROC curve and its area.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RocResult {
    pub auc: f64,
    /// (false-positive rate, true-positive rate) from (0,0) to (1,1),
    /// one point per distinct threshold.
    pub roc_points: Vec<(f64, f64)>,
    pub n_pos: usize,
    pub n_neg: usize,
}

impl RocResult {
    /// Trapezoidal area of the stored curve; equals `auc` up to roundoff.
    pub fn trapezoid_area(&self) -> f64 {
        self.roc_points
            .windows(2)
            .map(|w| {
                let (x0, y0) = w[0];
                let (x1, y1) = w[1];
                (x1 - x0) * (y0 + y1) * 0.5
            })
            .sum()
    }
}

/// Mann–Whitney AUC with tie correction plus the exact ROC curve from a
/// sweep over every distinct score value.
///
/// With `use_absolute` the scores are ranked by magnitude first (the
/// convention for the undirected baselines).
pub fn auc(scores: &[f64], truth: &[bool], use_absolute: bool) -> Result<RocResult> {
    if scores.len() != truth.len() {
        return Err(Error::Param(format!(
            "{} scores for {} truth labels",
            scores.len(),
            truth.len()
        )));
    }
    let n = scores.len();
    let n_pos = truth.iter().filter(|&&t| t).count();
    let n_neg = n - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return Err(Error::SingleClass);
    }
    let vals: Vec<f64> = if use_absolute {
        scores.iter().map(|s| s.abs()).collect()
    } else {
        scores.to_vec()
    };
    if vals.iter().any(|v| v.is_nan()) {
        return Err(Error::Param("scores contain NaN".into()));
    }

    // Average ranks (1-based) with ties shared.
    let mut idx: Vec<usize> = (0..n).collect();
    idx.sort_by(|&a, &b| vals[a].partial_cmp(&vals[b]).unwrap());
    let mut rank = vec![0.0f64; n];
    let mut i = 0;
    while i < n {
        let mut j = i;
        while j + 1 < n && vals[idx[j + 1]] == vals[idx[i]] {
            j += 1;
        }
        let shared = (i + j + 2) as f64 / 2.0;
        for t in i..=j {
            rank[idx[t]] = shared;
        }
        i = j + 1;
    }
    let rank_sum_pos: f64 = (0..n).filter(|&k| truth[k]).map(|k| rank[k]).sum();
    let auc_value = (rank_sum_pos - (n_pos * (n_pos + 1)) as f64 / 2.0)
        / (n_pos as f64 * n_neg as f64);

    // Threshold sweep from the highest score down, one point per distinct
    // value; tie groups advance tp and fp together.
    let mut roc_points = vec![(0.0, 0.0)];
    let (mut tp, mut fp) = (0usize, 0usize);
    let mut i = n;
    while i > 0 {
        let hi = vals[idx[i - 1]];
        let mut j = i;
        while j > 0 && vals[idx[j - 1]] == hi {
            if truth[idx[j - 1]] {
                tp += 1;
            } else {
                fp += 1;
            }
            j -= 1;
        }
        roc_points.push((fp as f64 / n_neg as f64, tp as f64 / n_pos as f64));
        i = j;
    }
    Ok(RocResult {
        auc: auc_value,
        roc_points,
        n_pos,
        n_neg,
    })
}

/// Anything that scores all m ordered pairs.
pub trait PairScorer {
    fn pair_scores(&self) -> &[f64];
    /// Whether ranking should go through absolute values.
    fn ranks_by_magnitude(&self) -> bool;
}

impl PairScorer for ScoreTable {
    fn pair_scores(&self) -> &[f64] {
        self.scores()
    }

    fn ranks_by_magnitude(&self) -> bool {
        self.use_absolute()
    }
}

impl PairScorer for FitResult {
    fn pair_scores(&self) -> &[f64] {
        self.scores()
    }

    fn ranks_by_magnitude(&self) -> bool {
        false
    }
}

/// Restricts scores and gold-standard truth to the unlabelled pairs, then
/// computes the ROC. Labelled pairs never enter the evaluation.
pub fn evaluate_on_unlabelled(
    scorer: &dyn PairScorer,
    gold: &GoldStandard,
    labels: &LabelAssignment,
) -> Result<RocResult> {
    let pairs = PairIndex::new(gold.adjacency.p());
    let m = pairs.count();
    if labels.len() != m || scorer.pair_scores().len() != m {
        return Err(Error::Param(format!(
            "scores ({}), labels ({}) and gold standard (m={m}) do not agree",
            scorer.pair_scores().len(),
            labels.len()
        )));
    }
    let unlabelled = labels.unlabelled_indices();
    let mut scores = Vec::with_capacity(unlabelled.len());
    let mut truth = Vec::with_capacity(unlabelled.len());
    for &k in &unlabelled {
        let (i, j) = pairs.unindex(k)?;
        scores.push(scorer.pair_scores()[k]);
        truth.push(gold.adjacency.get(i, j));
    }
    auc(&scores, &truth, scorer.ranks_by_magnitude())
}

/// Scoring methods the harness can run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Sscd,
    Pearson,
    Kendall,
    Lasso,
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Method::Sscd => write!(f, "sscd"),
            Method::Pearson => write!(f, "pearson"),
            Method::Kendall => write!(f, "kendall"),
            Method::Lasso => write!(f, "lasso"),
        }
    }
}

impl std::str::FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "sscd" => Ok(Method::Sscd),
            "pearson" => Ok(Method::Pearson),
            "kendall" => Ok(Method::Kendall),
            "lasso" => Ok(Method::Lasso),
            other => Err(Error::Param(format!("unknown method '{other}'"))),
        }
    }
}

/// Full sweep configuration. Serialized verbatim into the report so runs
/// are self-describing.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub p: usize,
    pub n_train_grid: Vec<usize>,
    pub rho_grid: Vec<f64>,
    pub methods: Vec<Method>,
    pub scheme: LabelScheme,
    pub replicates: usize,
    pub seed: u64,
    /// Robust z-score threshold for the interventional gold standard.
    pub tau: f64,
    pub dag: RandomDagParams,
    /// Clamp value applied by each gold-standard intervention.
    pub intervention_value: f64,
    /// Minimum fraction of causal pairs a generated gold standard must have.
    pub min_causal_fraction: f64,
    /// Keep only benchmark draws where at least half the rows of the gold
    /// standard have a causal effect (rejection sampling).
    pub require_nonempty_rows: bool,
    pub sscd: SscdParams,
    pub lasso_folds: usize,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            p: 20,
            n_train_grid: vec![500],
            rho_grid: vec![0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8],
            methods: vec![Method::Sscd, Method::Pearson, Method::Kendall, Method::Lasso],
            scheme: LabelScheme::Random,
            replicates: 25,
            seed: 0,
            tau: 5.0,
            // Latent-confounder benchmark: unmeasured hubs make strong
            // correlations mostly non-causal, so correlation ranking alone
            // misleads while the causal layer stays detectable.
            dag: RandomDagParams {
                edge_prob: 0.15,
                weight_low: 4.5,
                weight_high: 5.5,
                noise_sd: 1.0,
                latent_hubs: 1,
                hub_children: 8,
                hub_weight: 15.0,
                parents_per_sink: 1,
            },
            intervention_value: 20.0,
            min_causal_fraction: 0.025,
            require_nonempty_rows: false,
            sscd: SscdParams::default(),
            lasso_folds: 5,
        }
    }
}

/// AUC of one replicate in one grid cell.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReplicateAuc {
    pub replicate: usize,
    pub auc: f64,
}

/// Aggregate over replicates for one (method, rho, n_train) cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellSummary {
    pub method: Method,
    pub rho: f64,
    pub n_train: usize,
    pub aucs: Vec<ReplicateAuc>,
    pub mean_auc: Option<f64>,
    /// Sample standard deviation divided by sqrt(#replicates); None below
    /// two successful replicates.
    pub std_error: Option<f64>,
}

/// A failed replicate (or cell within a replicate) and why.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunFailure {
    pub replicate: usize,
    pub n_train: usize,
    pub rho: Option<f64>,
    pub method: Option<Method>,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub config: ExperimentConfig,
    pub cells: Vec<CellSummary>,
    pub failures: Vec<RunFailure>,
}

impl ExperimentReport {
    pub fn to_json_pretty(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    /// Flat rows (method, rho, n_train, replicate, auc) for external plotting.
    pub fn csv_rows(&self) -> Vec<(String, f64, usize, usize, f64)> {
        let mut rows = Vec::new();
        for cell in &self.cells {
            for ra in &cell.aucs {
                rows.push((
                    cell.method.to_string(),
                    cell.rho,
                    cell.n_train,
                    ra.replicate,
                    ra.auc,
                ));
            }
        }
        rows
    }

    pub fn cell(&self, method: Method, rho: f64, n_train: usize) -> Option<&CellSummary> {
        self.cells
            .iter()
            .find(|c| c.method == method && c.rho == rho && c.n_train == n_train)
    }
}

/// Data supplied by the user instead of the synthetic generator.
#[derive(Debug, Clone)]
pub struct ExternalDataset {
    pub data: DataMatrix,
    pub gold: GoldStandard,
}

/// SplitMix64 over the base seed and a stream id; replicate r derives its
/// base as `config.seed + r` and every purpose below uses a distinct stream.
fn derive_seed(base: u64, stream: u64) -> u64 {
    let mut z = base ^ stream.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

const STREAM_DAG: u64 = 1;
const STREAM_DATA: u64 = 2;
const STREAM_LABELS: u64 = 3;
const STREAM_LASSO: u64 = 4;
const STREAM_SUBSAMPLE: u64 = 5;
const MAX_BENCH_DRAWS: u64 = 200;

struct ReplicateOutput {
    aucs: Vec<(usize, usize, usize, f64)>, // (method idx, n_train idx, rho idx, auc)
    failures: Vec<RunFailure>,
}

/// At least half of the gold-standard rows have some causal effect.
fn half_rows_nonempty(gold: &GoldStandard) -> bool {
    let p = gold.adjacency.p();
    let nonempty = (0..p)
        .filter(|&i| (0..p).any(|j| i != j && gold.adjacency.get(i, j)))
        .count();
    2 * nonempty >= p
}

/// Draws a benchmark instance for one (replicate, n_train) cell, retrying
/// until the gold standard passes the configured density filters.
///
/// With latent hubs the spec has more variables than are measured; only the
/// observed block (the first `config.p` columns) reaches the data matrix,
/// the gold standard and the interventions.
fn draw_benchmark(
    config: &ExperimentConfig,
    rep_seed: u64,
    n_train_idx: usize,
    n_train: usize,
) -> Result<(DataMatrix, GoldStandard)> {
    for attempt in 0..MAX_BENCH_DRAWS {
        let salt = (n_train_idx as u64) << 32 | attempt;
        let mut spec = random_dag(
            config.p,
            &config.dag,
            derive_seed(rep_seed, STREAM_DAG.wrapping_add(salt << 3)),
        )?;
        spec.seed = derive_seed(rep_seed, STREAM_DATA.wrapping_add(salt << 3));

        let interventions: Vec<(usize, f64)> = (0..config.p)
            .map(|v| (v, config.intervention_value))
            .collect();
        let (obs_full, mut int_rows) = simulate_sem(&spec, 2 * n_train, &interventions)?;
        let observed: Vec<usize> = (0..config.p).collect();
        let obs = obs_full.select_columns(&observed)?;
        for row in &mut int_rows {
            row.values.truncate(config.p);
        }

        let holdout_rows: Vec<usize> = (0..n_train).collect();
        let train_rows: Vec<usize> = (n_train..2 * n_train).collect();
        let holdout = obs.select_rows(&holdout_rows)?;
        let train = obs.select_rows(&train_rows)?;

        let gold = zscore_gold_standard(&int_rows, &holdout, config.tau)?;
        if !density_check(&gold.adjacency, config.min_causal_fraction) {
            continue;
        }
        if config.require_nonempty_rows && !half_rows_nonempty(&gold) {
            continue;
        }
        return Ok((train, gold));
    }
    Err(Error::Param(format!(
        "no benchmark draw reached {:.1}% causal pairs in {MAX_BENCH_DRAWS} attempts",
        100.0 * config.min_causal_fraction
    )))
}

/// Training data for one (replicate, n_train) cell from a user-supplied
/// dataset: a seeded row subsample when n_train is below the sample count.
fn subsample_external(
    external: &ExternalDataset,
    rep_seed: u64,
    n_train: usize,
) -> Result<(DataMatrix, GoldStandard)> {
    use rand::seq::SliceRandom;
    use rand::SeedableRng;
    let n = external.data.n();
    let data = if n_train >= n {
        external.data.clone()
    } else {
        let mut rng =
            rand_chacha::ChaCha8Rng::seed_from_u64(derive_seed(rep_seed, STREAM_SUBSAMPLE));
        let mut rows: Vec<usize> = (0..n).collect();
        rows.shuffle(&mut rng);
        let mut take: Vec<usize> = rows.into_iter().take(n_train).collect();
        take.sort_unstable();
        external.data.select_rows(&take)?
    };
    Ok((data, external.gold.clone()))
}

fn run_replicate(
    config: &ExperimentConfig,
    external: Option<&ExternalDataset>,
    replicate: usize,
) -> ReplicateOutput {
    let rep_seed = config.seed.wrapping_add(replicate as u64);
    let mut out = ReplicateOutput {
        aucs: Vec::new(),
        failures: Vec::new(),
    };

    for (ti, &n_train) in config.n_train_grid.iter().enumerate() {
        let drawn = match external {
            Some(ext) => subsample_external(ext, rep_seed, n_train),
            None => draw_benchmark(config, rep_seed, ti, n_train),
        };
        let (train, gold) = match drawn {
            Ok(pair) => pair,
            Err(e) => {
                out.failures.push(RunFailure {
                    replicate,
                    n_train,
                    rho: None,
                    method: None,
                    message: e.to_string(),
                });
                continue;
            }
        };

        // Baselines ignore the labels, so one fit per cell serves every rho.
        let mut baseline_tables: Vec<(usize, ScoreTable)> = Vec::new();
        for (mi, &method) in config.methods.iter().enumerate() {
            let table = match method {
                Method::Sscd => continue,
                Method::Pearson => baselines::pearson_scores(&train),
                Method::Kendall => baselines::kendall_scores(&train),
                Method::Lasso => baselines::lasso_scores(
                    &train,
                    config.lasso_folds,
                    derive_seed(rep_seed, STREAM_LASSO.wrapping_add((ti as u64) << 3)),
                ),
            };
            match table {
                Ok(t) => baseline_tables.push((mi, t)),
                Err(e) => out.failures.push(RunFailure {
                    replicate,
                    n_train,
                    rho: None,
                    method: Some(method),
                    message: e.to_string(),
                }),
            }
        }

        for (ri, &rho) in config.rho_grid.iter().enumerate() {
            let label_seed = derive_seed(
                rep_seed,
                STREAM_LABELS.wrapping_add(((ti as u64) << 20 | ri as u64) << 3),
            );
            let labels = match sample_labels(&gold.adjacency, rho, config.scheme, label_seed) {
                Ok(l) => l,
                Err(e) => {
                    out.failures.push(RunFailure {
                        replicate,
                        n_train,
                        rho: Some(rho),
                        method: None,
                        message: e.to_string(),
                    });
                    continue;
                }
            };

            for (mi, &method) in config.methods.iter().enumerate() {
                let roc = match method {
                    Method::Sscd => run_sscd(&train, &labels, &config.sscd)
                        .and_then(|fit| evaluate_on_unlabelled(&fit, &gold, &labels)),
                    _ => match baseline_tables.iter().find(|(i, _)| *i == mi) {
                        Some((_, table)) => evaluate_on_unlabelled(table, &gold, &labels),
                        None => continue, // baseline itself failed; already recorded
                    },
                };
                match roc {
                    Ok(r) => out.aucs.push((mi, ti, ri, r.auc)),
                    Err(e) => out.failures.push(RunFailure {
                        replicate,
                        n_train,
                        rho: Some(rho),
                        method: Some(method),
                        message: e.to_string(),
                    }),
                }
            }
        }
    }
    out
}

/// Runs the full sweep. Replicates execute in parallel with seeds derived
/// from `config.seed + replicate`, so the report is byte-identical across
/// runs of the same configuration.
pub fn run_experiment(
    config: &ExperimentConfig,
    external: Option<&ExternalDataset>,
) -> Result<ExperimentReport> {
    if config.replicates == 0 {
        return Err(Error::Param("need at least one replicate".into()));
    }
    if config.rho_grid.is_empty() || config.n_train_grid.is_empty() || config.methods.is_empty() {
        return Err(Error::Param(
            "rho grid, n_train grid and method list must be nonempty".into(),
        ));
    }
    if let Some(ext) = external {
        if ext.gold.adjacency.p() != ext.data.p() {
            return Err(Error::Param(format!(
                "gold standard covers {} variables but the data has {}",
                ext.gold.adjacency.p(),
                ext.data.p()
            )));
        }
    }

    let outputs: Vec<ReplicateOutput> = (0..config.replicates)
        .into_par_iter()
        .map(|r| run_replicate(config, external, r))
        .collect();

    let mut cells = Vec::new();
    for (mi, &method) in config.methods.iter().enumerate() {
        for (ti, &n_train) in config.n_train_grid.iter().enumerate() {
            for (ri, &rho) in config.rho_grid.iter().enumerate() {
                let mut aucs = Vec::new();
                for (rep, output) in outputs.iter().enumerate() {
                    for &(omi, oti, ori, auc) in &output.aucs {
                        if omi == mi && oti == ti && ori == ri {
                            aucs.push(ReplicateAuc {
                                replicate: rep,
                                auc,
                            });
                        }
                    }
                }
                let (mean_auc, std_error) = summarize(&aucs);
                cells.push(CellSummary {
                    method,
                    rho,
                    n_train,
                    aucs,
                    mean_auc,
                    std_error,
                });
            }
        }
    }
    let failures: Vec<RunFailure> = outputs.into_iter().flat_map(|o| o.failures).collect();
    Ok(ExperimentReport {
        config: config.clone(),
        cells,
        failures,
    })
}

fn summarize(aucs: &[ReplicateAuc]) -> (Option<f64>, Option<f64>) {
    if aucs.is_empty() {
        return (None, None);
    }
    let n = aucs.len() as f64;
    let mean = aucs.iter().map(|a| a.auc).sum::<f64>() / n;
    if aucs.len() < 2 {
        return (Some(mean), None);
    }
    let var = aucs.iter().map(|a| (a.auc - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (Some(mean), Some((var / n).sqrt()))
}
