//! Acceptance suite: one test per criterion, each printing a pass/fail
//! line. Run with
//!
//! ```text
//! cargo test -p sscd --test acceptance -- --nocapture
//! ```

mod common;

use std::time::Instant;

use common::{
    brute_force_auc, finite_difference_gradient, gradient_descent_minimize, histogram_l2_error,
    one_hot_labels, quadrature_l2_distance, random_fit_instance, regression_slope, seeded,
    swap_labels, TruncatedGaussian,
};
use nalgebra::DMatrix;
use rand::Rng;
use sscd::benchgen::{zscore_gold_standard, InterventionRow, LabelScheme};
use sscd::evalx::{auc, run_experiment, ExperimentConfig, Method};
use sscd::histfeat::{histogram_estimate, HistogramGrid};
use sscd::laprls::fit;
use sscd::pairmetric::density_l2_distance;
use sscd::pairspace::DataMatrix;

fn verdict(number: u32, name: &str, pass: bool, detail: &str) {
    eprintln!(
        "acceptance criterion {number:2} ({name}): {} [{detail}]",
        if pass { "PASS" } else { "FAIL" }
    );
    assert!(pass, "criterion {number} ({name}) failed: {detail}");
}

/// Bin width proportional to n^(-1/4), snapped onto the [-3,3] grid.
fn snapped_bandwidth(n: usize) -> f64 {
    let raw = (n as f64).powf(-0.25);
    let bins = (6.0 / raw).round().max(1.0);
    6.0 / bins
}

#[test]
fn criterion_01_histogram_convergence_rate() {
    let start = Instant::now();
    let target = TruncatedGaussian::standard(-3.0, 3.0);
    let sizes = [100usize, 1_000, 10_000, 100_000];
    let replicates = 20;

    let mut log_n = Vec::new();
    let mut log_err = Vec::new();
    for (si, &n) in sizes.iter().enumerate() {
        let grid = HistogramGrid::new(snapped_bandwidth(n), -3.0, 3.0).unwrap();
        let mut total = 0.0;
        for rep in 0..replicates {
            let mut rng = seeded(9_000 + (si * replicates + rep) as u64);
            let (xs, ys) = target.sample(&mut rng, n);
            let hist = histogram_estimate(&xs, &ys, &grid).unwrap();
            total += histogram_l2_error(&hist, &target);
        }
        log_n.push((n as f64).ln());
        log_err.push((total / replicates as f64).ln());
    }
    let slope = regression_slope(&log_n, &log_err);
    let elapsed = start.elapsed();
    let pass = (-0.40..=-0.10).contains(&slope) && elapsed.as_secs_f64() < 120.0;
    verdict(
        1,
        "histogram L2 convergence at h ~ n^(-1/4)",
        pass,
        &format!("log-log slope {slope:.4}, elapsed {elapsed:.2?}"),
    );
}

#[test]
fn criterion_02_metric_axioms() {
    let grid = HistogramGrid::default_feature_grid();
    let mut rng = seeded(41_000);
    let scatter = |rng: &mut rand_chacha::ChaCha8Rng| {
        let n = rng.random_range(1..100);
        let xs: Vec<f64> = (0..n).map(|_| rng.random_range(-3.0..=3.0)).collect();
        let ys: Vec<f64> = (0..n).map(|_| rng.random_range(-3.0..=3.0)).collect();
        histogram_estimate(&xs, &ys, &grid).unwrap()
    };
    let mut failures = 0usize;
    for _ in 0..1000 {
        let a = scatter(&mut rng);
        let b = scatter(&mut rng);
        let c = scatter(&mut rng);
        let dab = density_l2_distance(&a, &b).unwrap();
        let dba = density_l2_distance(&b, &a).unwrap();
        let daa = density_l2_distance(&a, &a).unwrap();
        let dac = density_l2_distance(&a, &c).unwrap();
        let dbc = density_l2_distance(&b, &c).unwrap();
        if dab != dba || daa != 0.0 || dab < 0.0 || dac > dab + dbc + 1e-12 {
            failures += 1;
        }
    }
    verdict(
        2,
        "pseudo-metric axioms on 1000 scatter triples",
        failures == 0,
        &format!("{failures} failures"),
    );
}

#[test]
fn criterion_03_metric_consistency() {
    // Two narrow truncated Gaussians with distinct means; the idealized
    // distance comes from a 3000x3000 quadrature oracle.
    let a = TruncatedGaussian {
        mean_x: -1.0,
        mean_y: 0.0,
        sd: 0.5,
        lo: -3.0,
        hi: 3.0,
    };
    let b = TruncatedGaussian {
        mean_x: 1.0,
        mean_y: 0.0,
        sd: 0.5,
        lo: -3.0,
        hi: 3.0,
    };
    let d_ideal = quadrature_l2_distance(
        &|x, y| a.density(x, y),
        &|x, y| b.density(x, y),
        -3.0,
        3.0,
        3000,
    );

    let n = 100_000;
    let grid = HistogramGrid::new(snapped_bandwidth(n), -3.0, 3.0).unwrap();
    let mut rng = seeded(303_000);
    let (xa, ya) = a.sample(&mut rng, n);
    let (xb, yb) = b.sample(&mut rng, n);
    let ha = histogram_estimate(&xa, &ya, &grid).unwrap();
    let hb = histogram_estimate(&xb, &yb, &grid).unwrap();
    let d_sample = density_l2_distance(&ha, &hb).unwrap();

    let rel = (d_sample - d_ideal).abs() / d_ideal;
    verdict(
        3,
        "sample metric approximates idealized metric",
        rel <= 0.10,
        &format!("d_ideal {d_ideal:.5}, d_sample {d_sample:.5}, rel err {rel:.4}"),
    );
}

#[test]
fn criterion_04_solver_correctness() {
    let mut rng = seeded(404_000);
    let mut worst_gap = 0.0f64;
    let mut worst_grad = 0.0f64;
    for _ in 0..20 {
        let m = rng.random_range(20..=100);
        let lambda = rng.random_range(0.4..=1.0);
        let (system, labels, lambda) = random_fit_instance(&mut rng, m, 0.5, lambda);
        let solved = fit(&system, &labels, lambda).unwrap();

        let init = DMatrix::from_fn(m, 2, |_, _| rng.random_range(-1.0..=1.0));
        let descended = gradient_descent_minimize(&system, &labels, lambda, init, 20_000, 1e-11);
        worst_gap = worst_gap.max((solved.class_matrix() - &descended).amax());

        let grad =
            finite_difference_gradient(solved.class_matrix(), &system, &labels, lambda, 1e-5);
        worst_grad = worst_grad.max(grad.amax());
    }

    // Full supervision without smoothing interpolates the labels.
    let (system, labels, _) = random_fit_instance(&mut rng, 40, 1.0, 0.0);
    let solved = fit(&system, &labels, 0.0).unwrap();
    let interp_gap = (solved.class_matrix() - one_hot_labels(&labels)).amax();

    let pass = worst_gap <= 1e-5 && worst_grad <= 1e-6 && interp_gap <= 1e-6;
    verdict(
        4,
        "closed form matches gradient descent",
        pass,
        &format!(
            "max |closed - descent| {worst_gap:.2e}, max fd-gradient {worst_grad:.2e}, \
             interpolation gap {interp_gap:.2e}"
        ),
    );
}

#[test]
fn criterion_05_label_swap_antisymmetry() {
    let mut rng = seeded(505_000);
    let mut exact = true;
    for _ in 0..50 {
        let m = rng.random_range(10..=60);
        let lambda = rng.random_range(0.0..=1.0);
        let (system, labels, lambda) = random_fit_instance(&mut rng, m, 0.4, lambda);
        let forward = fit(&system, &labels, lambda).unwrap();
        let swapped = fit(&system, &swap_labels(&labels), lambda).unwrap();
        for k in 0..m {
            if swapped.scores()[k] != -forward.scores()[k] {
                exact = false;
            }
        }
    }
    verdict(
        5,
        "label swap negates scores exactly",
        exact,
        "50 random fits",
    );
}

#[test]
fn criterion_06_auc_oracle() {
    let mut rng = seeded(606_000);
    let mut worst = 0.0f64;
    for trial in 0..500 {
        let n = rng.random_range(2..=60);
        let levels = if trial % 2 == 0 { Some(4) } else { None };
        let (scores, truth) = loop {
            let scores: Vec<f64> = (0..n)
                .map(|_| {
                    let v: f64 = rng.random_range(-1.0..=1.0);
                    match levels {
                        Some(l) => (v * l as f64).round() / l as f64,
                        None => v,
                    }
                })
                .collect();
            let truth: Vec<bool> = (0..n).map(|_| rng.random_range(0.0..1.0) < 0.4).collect();
            let pos = truth.iter().filter(|&&t| t).count();
            if pos > 0 && pos < n {
                break (scores, truth);
            }
        };
        let use_absolute = trial % 3 == 0;
        let fast = auc(&scores, &truth, use_absolute).unwrap().auc;
        let brute = brute_force_auc(&scores, &truth, use_absolute);
        worst = worst.max((fast - brute).abs());
    }

    let fixed = auc(
        &[0.9, 0.8, 0.7, 0.6],
        &[true, false, true, false],
        false,
    )
    .unwrap()
    .auc;

    let pass = worst <= 1e-12 && fixed == 0.75;
    verdict(
        6,
        "fast AUC equals brute force",
        pass,
        &format!("max |fast - brute| {worst:.2e}, fixed example {fixed}"),
    );
}

fn benchmark_config(scheme: LabelScheme, rho_grid: Vec<f64>, methods: Vec<Method>) -> ExperimentConfig {
    ExperimentConfig {
        rho_grid,
        methods,
        scheme,
        replicates: 25,
        seed: 0,
        ..ExperimentConfig::default()
    }
}

#[test]
fn criterion_07_sscd_outranks_pearson() {
    let start = Instant::now();
    let config = benchmark_config(
        LabelScheme::Random,
        vec![0.5],
        vec![Method::Sscd, Method::Pearson],
    );
    let report = run_experiment(&config, None).unwrap();
    let sscd = report.cell(Method::Sscd, 0.5, 500).unwrap().mean_auc.unwrap();
    let pearson = report
        .cell(Method::Pearson, 0.5, 500)
        .unwrap()
        .mean_auc
        .unwrap();
    let elapsed = start.elapsed();
    let pass = sscd >= 0.60 && sscd >= pearson && elapsed.as_secs_f64() < 300.0;
    verdict(
        7,
        "benchmark ordering: sscd over pearson",
        pass,
        &format!("sscd {sscd:.4}, pearson {pearson:.4}, elapsed {elapsed:.2?}"),
    );
}

#[test]
fn criterion_08_rho_trend() {
    let config = benchmark_config(LabelScheme::Random, vec![0.1, 0.8], vec![Method::Sscd]);
    let report = run_experiment(&config, None).unwrap();
    let low = report.cell(Method::Sscd, 0.1, 500).unwrap().mean_auc.unwrap();
    let high = report.cell(Method::Sscd, 0.8, 500).unwrap().mean_auc.unwrap();
    verdict(
        8,
        "more labels do not hurt",
        high >= low - 0.02,
        &format!("mean auc at rho 0.1: {low:.4}, at rho 0.8: {high:.4}"),
    );
}

#[test]
fn criterion_09_rowwise_is_not_easier() {
    let random = run_experiment(
        &benchmark_config(LabelScheme::Random, vec![0.5], vec![Method::Sscd]),
        None,
    )
    .unwrap();
    let rowwise = run_experiment(
        &benchmark_config(LabelScheme::RowWise, vec![0.5], vec![Method::Sscd]),
        None,
    )
    .unwrap();
    let random_mean = random.cell(Method::Sscd, 0.5, 500).unwrap().mean_auc.unwrap();
    let rowwise_mean = rowwise
        .cell(Method::Sscd, 0.5, 500)
        .unwrap()
        .mean_auc
        .unwrap();
    verdict(
        9,
        "row-wise sampling is the harder problem",
        rowwise_mean <= random_mean + 0.05,
        &format!("rowwise {rowwise_mean:.4} vs random {random_mean:.4}"),
    );
}

#[test]
fn criterion_10_gold_standard_rule() {
    // Holdout with median 0 and IQR 2 in every column under the
    // linear-interpolation quantile rule.
    let rows: Vec<Vec<f64>> = vec![
        vec![-2.0, -2.0],
        vec![-1.0, -1.0],
        vec![0.0, 0.0],
        vec![1.0, 1.0],
        vec![2.0, 2.0],
    ];
    let holdout =
        DataMatrix::from_rows(&rows, vec!["a".to_string(), "b".to_string()]).unwrap();
    let (median, iqr, tau) = (0.0, 2.0, 5.0);

    let mut failures = 0usize;
    for case in 0..100 {
        // z sweeps 0..10 with the exact boundary z = 5 at case 50.
        let z = case as f64 * 0.1;
        let sign = if case % 2 == 0 { 1.0 } else { -1.0 };
        let value = median + sign * z * iqr;
        let ints = vec![InterventionRow {
            target: 0,
            values: vec![0.0, value],
        }];
        let gold = zscore_gold_standard(&ints, &holdout, tau).unwrap();
        let expect = z > tau;
        if gold.adjacency.get(0, 1) != expect {
            failures += 1;
        }
    }

    // The boundary itself: |value - median| / IQR == 5 exactly is non-causal.
    let boundary = vec![InterventionRow {
        target: 0,
        values: vec![0.0, median + tau * iqr],
    }];
    let gold = zscore_gold_standard(&boundary, &holdout, tau).unwrap();
    let boundary_ok = !gold.adjacency.get(0, 1);

    verdict(
        10,
        "z-score rule with strict threshold",
        failures == 0 && boundary_ok,
        &format!("{failures} mismatches, boundary non-causal: {boundary_ok}"),
    );
}

#[test]
fn criterion_11_report_determinism() {
    let config = ExperimentConfig {
        rho_grid: vec![0.5],
        methods: vec![Method::Sscd, Method::Pearson, Method::Kendall, Method::Lasso],
        replicates: 2,
        seed: 42,
        ..ExperimentConfig::default()
    };
    let a = run_experiment(&config, None).unwrap().to_json_pretty();
    let b = run_experiment(&config, None).unwrap().to_json_pretty();
    verdict(
        11,
        "evaluation report is byte-identical across runs",
        a == b,
        &format!("{} bytes", a.len()),
    );
}
