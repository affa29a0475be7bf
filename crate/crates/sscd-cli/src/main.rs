//! Command-line front end: benchmark simulation, featurization, fitting,
//! baselines and the evaluation harness.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use sscd::baselines;
use sscd::benchgen::{
    random_dag, reachability_gold_standard, sample_labels, simulate_sem, zscore_gold_standard,
    GoldStandard, LabelScheme, RandomDagParams,
};
use sscd::evalx::{run_experiment, ExperimentConfig, ExternalDataset, Method};
use sscd::histfeat::{pair_features, pca_reduce, standardize_truncate, HistogramGrid};
use sscd::io;
use sscd::pipeline::{run_sscd, SscdParams};
use sscd::Error;

#[derive(Parser)]
#[command(
    name = "sscd",
    version,
    about = "Semi-supervised causal discovery over ordered variable pairs",
    propagate_version = true
)]
struct Cli {
    /// Cap the worker thread count (default: one per core).
    #[arg(long, global = true)]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic benchmark: SEM spec, data, gold standard.
    Simulate(SimulateArgs),
    /// Fit the semi-supervised pipeline on a data matrix and labels.
    Fit(FitArgs),
    /// Run the multi-replicate evaluation sweep and write reports.
    Evaluate(EvaluateArgs),
    /// Score all pairs with the reference methods.
    Baselines(BaselinesArgs),
    /// Export the per-pair histogram feature matrix.
    Features(FeaturesArgs),
}

#[derive(Args)]
struct DagOpts {
    /// Number of observed variables.
    #[arg(long, default_value_t = 20)]
    p: usize,
    /// Probability of each optional forward/extra edge.
    #[arg(long, default_value_t = 0.15)]
    edge_prob: f64,
    /// Smallest edge-weight magnitude.
    #[arg(long, default_value_t = 0.5)]
    weight_low: f64,
    /// Largest edge-weight magnitude.
    #[arg(long, default_value_t = 1.5)]
    weight_high: f64,
    /// Structural noise standard deviation.
    #[arg(long, default_value_t = 1.0)]
    noise_sd: f64,
    /// Unmeasured confounder hubs (0 = plain random DAG).
    #[arg(long, default_value_t = 0)]
    latent_hubs: usize,
    /// Observed variables co-activated by each hub.
    #[arg(long, default_value_t = 8)]
    hub_children: usize,
    /// Hub edge weight.
    #[arg(long, default_value_t = 15.0)]
    hub_weight: f64,
    /// Mandatory source parents per sink variable (hub mode).
    #[arg(long, default_value_t = 1)]
    parents_per_sink: usize,
}

impl DagOpts {
    fn params(&self) -> RandomDagParams {
        RandomDagParams {
            edge_prob: self.edge_prob,
            weight_low: self.weight_low,
            weight_high: self.weight_high,
            noise_sd: self.noise_sd,
            latent_hubs: self.latent_hubs,
            hub_children: self.hub_children,
            hub_weight: self.hub_weight,
            parents_per_sink: self.parents_per_sink,
        }
    }
}

#[derive(Args)]
struct SscdOpts {
    /// Histogram bin width.
    #[arg(long, alias = "h", default_value_t = 0.2)]
    bin_width: f64,
    /// Standardized values are clamped into [-bound, bound].
    #[arg(long, default_value_t = 3.0)]
    bound: f64,
    /// PCA target dimension for the pair features.
    #[arg(long, default_value_t = 100)]
    d_target: usize,
    /// Smoothness regularization weight (grid: 0.001, 0.01, 0.1, 1.0).
    #[arg(long, default_value_t = 0.001)]
    lambda: f64,
    /// Similarity bandwidth; omitted = median pair distance.
    #[arg(long)]
    sigma: Option<f64>,
}

impl SscdOpts {
    fn params(&self) -> SscdParams {
        SscdParams {
            bin_width: self.bin_width,
            bound: self.bound,
            d_target: self.d_target,
            lambda: self.lambda,
            sigma: self.sigma,
        }
    }
}

#[derive(Args)]
struct SimulateArgs {
    #[command(flatten)]
    dag: DagOpts,
    /// Observational sample count.
    #[arg(long, default_value_t = 1000)]
    n_obs: usize,
    /// RNG seed; fixed seed means byte-identical output.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Robust z-score threshold of the gold standard.
    #[arg(long, default_value_t = 5.0)]
    tau: f64,
    /// Clamp value applied by each intervention.
    #[arg(long, default_value_t = 20.0)]
    intervention_value: f64,
    /// Gold-standard rule: zscore | reachability.
    #[arg(long, default_value = "zscore")]
    gold: String,
    /// Also write labels.csv revealing this fraction of the gold standard.
    #[arg(long)]
    rho: Option<f64>,
    /// Label sampling scheme: random | rowwise.
    #[arg(long, default_value = "random")]
    scheme: String,
    /// Output directory (created if missing).
    #[arg(long)]
    out_dir: PathBuf,
}

#[derive(Args)]
struct FitArgs {
    /// Data matrix CSV (header row = variable names).
    #[arg(long)]
    data: PathBuf,
    /// Label CSV with columns from,to,label.
    #[arg(long)]
    labels: PathBuf,
    #[command(flatten)]
    sscd: SscdOpts,
    /// Output score JSON.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct EvaluateArgs {
    #[command(flatten)]
    dag: DagOpts,
    #[command(flatten)]
    sscd: SscdOpts,
    /// Training sample sizes, comma separated.
    #[arg(long, value_delimiter = ',', default_value = "500")]
    n_train: Vec<usize>,
    /// Label fractions, comma separated.
    #[arg(long, value_delimiter = ',',
          default_value = "0.1,0.2,0.3,0.4,0.5,0.6,0.7,0.8")]
    rho_grid: Vec<f64>,
    /// Methods to run, comma separated: sscd,pearson,kendall,lasso.
    #[arg(long, value_delimiter = ',', default_value = "sscd,pearson,kendall,lasso")]
    methods: Vec<String>,
    /// Label sampling scheme: random | rowwise.
    #[arg(long, default_value = "random")]
    scheme: String,
    /// Replicates per grid cell.
    #[arg(long, default_value_t = 25)]
    replicates: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Robust z-score threshold of the gold standard.
    #[arg(long, default_value_t = 5.0)]
    tau: f64,
    /// Clamp value applied by each gold-standard intervention.
    #[arg(long, default_value_t = 20.0)]
    intervention_value: f64,
    /// Smallest acceptable fraction of causal pairs in a drawn benchmark.
    #[arg(long, default_value_t = 0.025)]
    min_causal_fraction: f64,
    /// Redraw benchmarks until at least half the rows have a causal effect.
    #[arg(long, default_value_t = false)]
    require_nonempty_rows: bool,
    /// Cross-validation folds for the lasso baseline.
    #[arg(long, default_value_t = 5)]
    lasso_folds: usize,
    /// Evaluate this data matrix instead of simulating (needs --gold-json).
    #[arg(long)]
    data: Option<PathBuf>,
    /// Gold-standard JSON accompanying --data.
    #[arg(long)]
    gold_json: Option<PathBuf>,
    /// Report JSON path.
    #[arg(long)]
    out_json: PathBuf,
    /// Flat report CSV path (method,rho,n_train,replicate,auc).
    #[arg(long)]
    out_csv: PathBuf,
}

#[derive(Args)]
struct BaselinesArgs {
    /// Data matrix CSV.
    #[arg(long)]
    data: PathBuf,
    /// Methods, comma separated: pearson,kendall,lasso.
    #[arg(long, value_delimiter = ',', default_value = "pearson,kendall,lasso")]
    methods: Vec<String>,
    /// Cross-validation folds for lasso.
    #[arg(long, default_value_t = 5)]
    folds: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output directory; one score JSON per method.
    #[arg(long)]
    out_dir: PathBuf,
}

#[derive(Args)]
struct FeaturesArgs {
    /// Data matrix CSV.
    #[arg(long)]
    data: PathBuf,
    #[command(flatten)]
    sscd: SscdOpts,
    /// Apply PCA compression to --d-target dimensions.
    #[arg(long, default_value_t = false)]
    pca: bool,
    /// Output prefix; writes <prefix>.csv, <prefix>.bin, <prefix>.bin.json.
    #[arg(long)]
    out_prefix: PathBuf,
}

/// Errors that should read as bad invocations (exit code 2) rather than
/// runtime failures (exit code 1).
fn is_usage_error(e: &Error) -> bool {
    matches!(
        e,
        Error::Io { .. }
            | Error::Csv { .. }
            | Error::Json { .. }
            | Error::Format(_)
            | Error::Param(_)
            | Error::UnknownVariable { .. }
            | Error::DuplicateVariable { .. }
            | Error::NonFiniteValue { .. }
    )
}

fn parse_scheme(s: &str) -> Result<LabelScheme, Error> {
    match s.to_ascii_lowercase().as_str() {
        "random" => Ok(LabelScheme::Random),
        "rowwise" | "row-wise" => Ok(LabelScheme::RowWise),
        other => Err(Error::Param(format!(
            "unknown label scheme '{other}' (expected random or rowwise)"
        ))),
    }
}

fn parse_methods(items: &[String]) -> Result<Vec<Method>, Error> {
    items.iter().map(|s| s.parse::<Method>()).collect()
}

fn cmd_simulate(args: &SimulateArgs) -> Result<(), Error> {
    if args.dag.p < 2 {
        return Err(Error::Param(format!(
            "need at least 2 variables, got --p {}",
            args.dag.p
        )));
    }
    let spec = random_dag(args.dag.p, &args.dag.params(), args.seed)?;
    let p_obs = args.dag.p;

    let interventions: Vec<(usize, f64)> = (0..p_obs)
        .map(|v| (v, args.intervention_value))
        .collect();
    let (full, mut int_rows) = simulate_sem(&spec, args.n_obs, &interventions)?;
    let observed: Vec<usize> = (0..p_obs).collect();
    let data = full.select_columns(&observed)?;
    for row in &mut int_rows {
        row.values.truncate(p_obs);
    }

    let gold = match args.gold.to_ascii_lowercase().as_str() {
        "zscore" => {
            // Per the benchmark protocol, the first half of the
            // observational data anchors the robust z-scores.
            let holdout_rows: Vec<usize> = (0..data.n() / 2).collect();
            let holdout = data.select_rows(&holdout_rows)?;
            zscore_gold_standard(&int_rows, &holdout, args.tau)?
        }
        "reachability" => {
            let mut g = reachability_gold_standard(&spec)?;
            if g.adjacency.p() != p_obs {
                // Restrict to the observed block.
                let mut a = sscd::AdjacencyMatrix::zeros(p_obs);
                for (i, j) in g.adjacency.edges() {
                    if i < p_obs && j < p_obs {
                        a.set(i, j, true);
                    }
                }
                g.adjacency = a;
            }
            g
        }
        other => {
            return Err(Error::Param(format!(
                "unknown gold-standard rule '{other}' (expected zscore or reachability)"
            )))
        }
    };

    std::fs::create_dir_all(&args.out_dir).map_err(|e| Error::Io {
        path: args.out_dir.clone(),
        source: e,
    })?;
    io::write_json(args.out_dir.join("sem_spec.json"), &spec)?;
    io::write_data_csv(args.out_dir.join("observational.csv"), &data)?;
    io::write_interventions_csv(
        args.out_dir.join("interventions.csv"),
        &int_rows,
        data.variable_names(),
    )?;
    io::write_json(args.out_dir.join("gold_standard.json"), &gold)?;

    if let Some(rho) = args.rho {
        let scheme = parse_scheme(&args.scheme)?;
        let labels = sample_labels(&gold.adjacency, rho, scheme, args.seed)?;
        io::write_label_csv(args.out_dir.join("labels.csv"), &labels, &data)?;
    }
    println!("wrote benchmark files to {}", args.out_dir.display());
    Ok(())
}

fn cmd_fit(args: &FitArgs) -> Result<(), Error> {
    let data = io::read_data_csv(&args.data)?;
    let labels = io::read_label_csv(&args.labels, &data)?;
    let params = args.sscd.params();
    let fit = run_sscd(&data, &labels, &params)?;
    let file = io::ScoreFile::from_fit(&fit, &labels, &data, &params);
    io::write_json(&args.out, &file)?;
    println!(
        "fitted {} pairs (lambda {}, sigma {:.6}); scores in {}",
        labels.len(),
        fit.lambda(),
        fit.sigma().unwrap_or(f64::NAN),
        args.out.display()
    );
    Ok(())
}

fn cmd_evaluate(args: &EvaluateArgs) -> Result<ExitCode, Error> {
    let config = ExperimentConfig {
        p: args.dag.p,
        n_train_grid: args.n_train.clone(),
        rho_grid: args.rho_grid.clone(),
        methods: parse_methods(&args.methods)?,
        scheme: parse_scheme(&args.scheme)?,
        replicates: args.replicates,
        seed: args.seed,
        tau: args.tau,
        dag: args.dag.params(),
        intervention_value: args.intervention_value,
        min_causal_fraction: args.min_causal_fraction,
        require_nonempty_rows: args.require_nonempty_rows,
        sscd: args.sscd.params(),
        lasso_folds: args.lasso_folds,
    };

    let external = match (&args.data, &args.gold_json) {
        (Some(data_path), Some(gold_path)) => {
            let data = io::read_data_csv(data_path)?;
            let gold: GoldStandard = io::read_json(gold_path)?;
            Some(ExternalDataset { data, gold })
        }
        (None, None) => None,
        _ => {
            return Err(Error::Param(
                "--data and --gold-json must be given together".into(),
            ))
        }
    };

    let report = run_experiment(&config, external.as_ref())?;
    std::fs::write(&args.out_json, report.to_json_pretty()).map_err(|e| Error::Io {
        path: args.out_json.clone(),
        source: e,
    })?;
    io::write_report_csv(&args.out_csv, &report)?;

    for cell in &report.cells {
        println!(
            "{:8} rho={:.2} n_train={:5} mean_auc={} se={} ({} replicates)",
            cell.method.to_string(),
            cell.rho,
            cell.n_train,
            cell.mean_auc.map_or("-".into(), |v| format!("{v:.4}")),
            cell.std_error.map_or("-".into(), |v| format!("{v:.4}")),
            cell.aucs.len(),
        );
    }
    if report.failures.is_empty() {
        println!("all replicates completed");
        Ok(ExitCode::SUCCESS)
    } else {
        // Reports are written; the exit code still signals the failures.
        eprintln!(
            "{} replicate cells failed (details in {})",
            report.failures.len(),
            args.out_json.display()
        );
        Ok(ExitCode::from(1))
    }
}

fn cmd_baselines(args: &BaselinesArgs) -> Result<(), Error> {
    let data = io::read_data_csv(&args.data)?;
    let methods = parse_methods(&args.methods)?;
    std::fs::create_dir_all(&args.out_dir).map_err(|e| Error::Io {
        path: args.out_dir.clone(),
        source: e,
    })?;
    for method in methods {
        let table = match method {
            Method::Pearson => baselines::pearson_scores(&data)?,
            Method::Kendall => baselines::kendall_scores(&data)?,
            Method::Lasso => baselines::lasso_scores(&data, args.folds, args.seed)?,
            Method::Sscd => {
                return Err(Error::Param(
                    "sscd needs labels; use the fit subcommand".into(),
                ))
            }
        };
        let path = args.out_dir.join(format!("{method}.json"));
        io::write_json(&path, &io::ScoreFile::from_table(&table, &data))?;
        println!("wrote {}", path.display());
    }
    Ok(())
}

fn cmd_features(args: &FeaturesArgs) -> Result<(), Error> {
    let data = io::read_data_csv(&args.data)?;
    let params = args.sscd.params();
    let standardized = standardize_truncate(&data, params.bound)?;
    let grid = HistogramGrid::new(params.bin_width, -params.bound, params.bound)?;
    let mut features = pair_features(&standardized, &grid)?;
    if args.pca {
        features = pca_reduce(&features, params.d_target)?;
    }

    let csv_path = args.out_prefix.with_extension("csv");
    let bin_path = args.out_prefix.with_extension("bin");
    io::write_features_csv(&csv_path, &features, data.variable_names())?;
    io::write_matrix_binary(&bin_path, features.features(), &io::feature_sidecar(&features))?;
    println!(
        "wrote {} and {} ({} pairs x {} dims)",
        csv_path.display(),
        bin_path.display(),
        features.num_pairs(),
        features.dim()
    );
    Ok(())
}

fn run(cli: &Cli) -> Result<ExitCode, Error> {
    if let Some(threads) = cli.threads {
        // Ignore the error if a pool already exists (e.g. repeated calls in
        // tests); the cap is best-effort.
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global();
    }
    match &cli.command {
        Command::Simulate(args) => cmd_simulate(args).map(|()| ExitCode::SUCCESS),
        Command::Fit(args) => cmd_fit(args).map(|()| ExitCode::SUCCESS),
        Command::Evaluate(args) => cmd_evaluate(args),
        Command::Baselines(args) => cmd_baselines(args).map(|()| ExitCode::SUCCESS),
        Command::Features(args) => cmd_features(args).map(|()| ExitCode::SUCCESS),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            if is_usage_error(&e) {
                ExitCode::from(2)
            } else {
                ExitCode::from(1)
            }
        }
    }
}
