mod common;

use alsel_core::sim::{
    generate_mixture, nearest_center, run_experiment, simulate_predictions, standard_error,
    train_learner, train_learner_with_history, AlExperimentReport, InitialSelection, LearnerConfig,
    SimConfig, SoftmaxRegression,
};
use alsel_core::{
    classwise_variance, consistency_scores, entropy_scores, EmbeddingMatrix, Strategy,
};
use common::*;
use rand::Rng;
use rand_distr::StandardNormal;

fn small_config() -> SimConfig {
    SimConfig {
        n_samples: 300,
        dim: 4,
        n_classes: 3,
        cluster_spread: 0.4,
        initial_budget: 10,
        cycle_budgets: vec![10, 15],
        n_augmentations: 4,
        seeds: vec![0, 1, 2],
        learner: LearnerConfig {
            epochs: 60,
            ..LearnerConfig::default()
        },
        ..SimConfig::default()
    }
}

fn bits(m: &EmbeddingMatrix) -> Vec<u32> {
    m.values().iter().map(|v| v.to_bits()).collect()
}

#[test]
fn same_seed_gives_an_identical_dataset() {
    let config = SimConfig::default();
    let a = generate_mixture(&config, 9).unwrap();
    let b = generate_mixture(&config, 9).unwrap();
    assert_eq!(bits(&a.train_features), bits(&b.train_features));
    assert_eq!(bits(&a.test_features), bits(&b.test_features));
    assert_eq!(a.train_labels, b.train_labels);
    assert_eq!(a.test_labels, b.test_labels);
    let c = generate_mixture(&config, 10).unwrap();
    assert_ne!(bits(&a.train_features), bits(&c.train_features));
    assert_eq!(a.train_features.n_samples(), 1800);
    assert_eq!(a.test_features.n_samples(), 200);
}

#[test]
fn class_counts_are_balanced() {
    let config = SimConfig {
        n_samples: 1003,
        n_classes: 7,
        ..SimConfig::default()
    };
    let data = generate_mixture(&config, 3).unwrap();
    let mut counts = vec![0usize; 7];
    for &y in data.train_labels.iter().chain(&data.test_labels) {
        counts[y] += 1;
    }
    let (lo, hi) = (counts.iter().min().unwrap(), counts.iter().max().unwrap());
    assert!(hi - lo <= 1, "{counts:?}");
}

#[test]
fn separable_limit_is_classified_perfectly() {
    let config = SimConfig {
        cluster_spread: 1e-4,
        ..SimConfig::default()
    };
    for seed in 0..3 {
        let data = generate_mixture(&config, seed).unwrap();
        for (x, &y) in data.test_features.rows().zip(&data.test_labels) {
            assert_eq!(nearest_center(&data.centers, x), y);
        }
    }
}

/// Fresh draws from the known mixture, labeled by their generating class.
fn fresh_sample(
    centers: &[Vec<f64>],
    spread: f64,
    n: usize,
    rng: &mut impl Rng,
) -> (EmbeddingMatrix, Vec<usize>) {
    let mut rows = Vec::with_capacity(n);
    let mut labels = Vec::with_capacity(n);
    for _ in 0..n {
        let y = rng.random_range(0..centers.len());
        rows.push(
            centers[y]
                .iter()
                .map(|c| c + spread * rng.sample::<f64, _>(StandardNormal))
                .collect::<Vec<_>>(),
        );
        labels.push(y);
    }
    (EmbeddingMatrix::from_f64_rows(&rows).unwrap(), labels)
}

#[test]
fn logistic_learner_approaches_the_bayes_rate() {
    let config = SimConfig::default();
    let mut rng = rng(30);
    for seed in 0..2 {
        let data = generate_mixture(&config, seed).unwrap();
        let (x, y) = fresh_sample(&data.centers, config.cluster_spread, 50_000, &mut rng);
        // equal priors and a shared isotropic covariance: Bayes rule is the nearest center
        let bayes = x
            .rows()
            .zip(&y)
            .filter(|(row, &label)| nearest_center(&data.centers, row) == label)
            .count() as f64
            / y.len() as f64;
        let model = train_learner(
            &data.train_features,
            &data.train_labels,
            config.n_classes,
            &config.learner,
        )
        .unwrap();
        let acc = model.accuracy(&x, &y);
        assert!(acc <= bayes + 0.01, "seed {seed}: {acc} vs Bayes {bayes}");
        assert!(bayes - acc <= 0.03, "seed {seed}: {acc} vs Bayes {bayes}");
    }
}

#[test]
fn analytic_gradient_matches_central_differences() {
    let mut rng = rng(31);
    for instance in 0..20 {
        let (n, d, c) = (
            rng.random_range(3..15),
            rng.random_range(1..5),
            rng.random_range(2..5),
        );
        let x = gaussian_matrix(n, d, &mut rng);
        let y: Vec<usize> = (0..n).map(|_| rng.random_range(0..c)).collect();
        let params: Vec<f64> = (0..c * (d + 1))
            .map(|_| rng.sample::<f64, _>(StandardNormal))
            .collect();
        let l2 = rng.random::<f64>() * 0.1;
        let model = SoftmaxRegression::from_params(d, c, params.clone()).unwrap();
        let (_, grad) = model.objective_and_gradient(&x, &y, l2);
        let h = 1e-5;
        for j in 0..params.len() {
            let shifted = |delta: f64| {
                let mut p = params.clone();
                p[j] += delta;
                SoftmaxRegression::from_params(d, c, p)
                    .unwrap()
                    .objective(&x, &y, l2)
            };
            let numeric = (shifted(h) - shifted(-h)) / (2.0 * h);
            let scale = grad[j].abs().max(numeric.abs()).max(1e-3);
            assert!(
                (grad[j] - numeric).abs() <= 1e-5 * scale,
                "instance {instance}, param {j}: {} vs {numeric}",
                grad[j]
            );
        }
    }
}

#[test]
fn training_loss_never_increases() {
    let data = generate_mixture(&SimConfig::default(), 4).unwrap();
    let (_, history) = train_learner_with_history(
        &data.train_features,
        &data.train_labels,
        8,
        &LearnerConfig::default(),
    )
    .unwrap();
    for pair in history.windows(2) {
        assert!(pair[1] <= pair[0] + 1e-12);
    }
}

#[test]
fn untrained_model_is_uniform() {
    let mut rng = rng(32);
    let x = gaussian_matrix(20, 3, &mut rng);
    let config = LearnerConfig {
        epochs: 0,
        ..LearnerConfig::default()
    };
    let model = train_learner(&x, &[0; 20], 5, &config).unwrap();
    let p = simulate_predictions(&model, &x, 3, 0.5, 1).unwrap();
    for h in entropy_scores(&p) {
        assert!((h - 5f64.ln()).abs() < 1e-6);
    }
}

#[test]
fn separable_one_dimensional_data_is_learned() {
    let x = EmbeddingMatrix::new(6, 1, vec![-3.0, -2.0, -1.0, 1.0, 2.0, 3.0]).unwrap();
    let y = [0, 0, 0, 1, 1, 1];
    let model = train_learner(&x, &y, 2, &LearnerConfig::default()).unwrap();
    let test = EmbeddingMatrix::new(4, 1, vec![-5.0, -0.5, 0.5, 5.0]).unwrap();
    assert_eq!(model.accuracy(&test, &[0, 0, 1, 1]), 1.0);
    assert!(train_learner(&x, &[], 2, &LearnerConfig::default()).is_err());
}

fn trained_model(seed: u64) -> (SoftmaxRegression, EmbeddingMatrix) {
    let config = SimConfig::default();
    let data = generate_mixture(&config, seed).unwrap();
    let labeled: Vec<usize> = (0..100).collect();
    let x = data.train_features.select_rows(&labeled).unwrap();
    let y: Vec<usize> = labeled.iter().map(|&i| data.train_labels[i]).collect();
    let model = train_learner(&x, &y, config.n_classes, &config.learner).unwrap();
    (
        model,
        data.train_features
            .select_rows(&(0..500).collect::<Vec<_>>())
            .unwrap(),
    )
}

fn mean_consistency(
    model: &SoftmaxRegression,
    x: &EmbeddingMatrix,
    k: usize,
    noise: f64,
    seed: u64,
) -> Vec<f64> {
    let p = simulate_predictions(model, x, k, noise, seed).unwrap();
    consistency_scores(&classwise_variance(&p).unwrap())
}

#[test]
fn noiseless_copies_have_zero_variance() {
    let (model, x) = trained_model(0);
    assert!(mean_consistency(&model, &x, 5, 0.0, 3)
        .iter()
        .all(|&s| s == 0.0));
}

#[test]
fn more_augmentation_noise_means_less_consistency() {
    for seed in 0..10 {
        let (model, x) = trained_model(seed);
        let mean = |noise| {
            let s = mean_consistency(&model, &x, 10, noise, seed);
            s.iter().sum::<f64>() / s.len() as f64
        };
        let (base, doubled) = (mean(0.15), mean(0.3));
        assert!(doubled >= base, "seed {seed}: {doubled} < {base}");
    }
}

#[test]
fn variance_estimates_agree_across_augmentation_counts() {
    let (model, x) = trained_model(5);
    let k10 = mean_consistency(&model, &x, 10, 0.3, 100);
    let k50 = mean_consistency(&model, &x, 50, 0.3, 200);
    let diffs: Vec<f64> = k10.iter().zip(&k50).map(|(a, b)| a - b).collect();
    let mean = diffs.iter().sum::<f64>() / diffs.len() as f64;
    let se = standard_error(&diffs);
    assert!(
        mean.abs() <= 3.0 * se,
        "mean difference {mean}, standard error {se}"
    );
}

#[test]
fn exhausting_the_pool_equalises_every_strategy() {
    let config = SimConfig {
        n_samples: 200,
        initial_budget: 20,
        cycle_budgets: vec![160],
        seeds: vec![7],
        learner: LearnerConfig {
            epochs: 50,
            ..LearnerConfig::default()
        },
        ..SimConfig::default()
    };
    let report = run_experiment(&config).unwrap();
    let finals: Vec<f64> = report
        .runs
        .iter()
        .map(|r| r.cycles[1].test_accuracy)
        .collect();
    assert!(finals.windows(2).all(|w| w[0] == w[1]), "{finals:?}");
    assert!(report
        .runs
        .iter()
        .all(|r| r.cycles[1].covering_radius == 0.0));
}

fn check_run_invariants(config: &SimConfig, report: &AlExperimentReport) {
    let n_train = config.n_train();
    assert_eq!(
        report.runs.len(),
        config.seeds.len() * config.strategies.len() * config.initial_selections.len()
    );
    for run in &report.runs {
        let mut labeled = std::collections::HashSet::new();
        let mut expected = 0;
        let mut last_radius = f64::INFINITY;
        for (cycle, record) in run.cycles.iter().enumerate() {
            expected += if cycle == 0 {
                config.initial_budget
            } else {
                config.cycle_budgets[cycle - 1]
            };
            for &i in &record.selected {
                assert!(i < n_train, "index {i} is outside the training pool");
                assert!(labeled.insert(i), "index {i} labeled twice");
            }
            assert_eq!(record.labeled_count, expected);
            assert_eq!(labeled.len(), expected);
            assert!(record.covering_radius <= last_radius);
            last_radius = record.covering_radius;
        }
    }
}

#[test]
fn labeled_sets_grow_and_cover_ever_tighter() {
    let config = small_config();
    check_run_invariants(&config, &run_experiment(&config).unwrap());
}

#[test]
fn reports_are_reproducible_across_runs_and_threads() {
    let config = small_config();
    let json = |threads: usize| {
        let report = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap()
            .install(|| run_experiment(&config).unwrap());
        serde_json::to_string(&report).unwrap()
    };
    let one = json(1);
    assert_eq!(one, json(1));
    assert_eq!(one, json(4));

    let random_only = SimConfig {
        strategies: vec![Strategy::Random],
        ..small_config()
    };
    assert_eq!(
        run_experiment(&random_only).unwrap(),
        run_experiment(&random_only).unwrap()
    );
}

#[test]
fn aggregates_use_the_standard_error_over_seeds() {
    let config = small_config();
    let report = run_experiment(&config).unwrap();
    for mode in [InitialSelection::Random, InitialSelection::InitialDiversity] {
        for &strategy in &config.strategies {
            for cycle in 0..=config.cycle_budgets.len() {
                let acc: Vec<f64> = report
                    .runs_for(mode, strategy)
                    .map(|r| r.cycles[cycle].test_accuracy)
                    .collect();
                let n = acc.len() as f64;
                let mean = acc.iter().sum::<f64>() / n;
                let sd = (acc.iter().map(|a| (a - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt();
                let agg = report.aggregate(mode, strategy, cycle).unwrap();
                assert!((agg.mean_accuracy - mean).abs() < 1e-12);
                assert!((agg.stderr_accuracy - sd / n.sqrt()).abs() < 1e-12);
            }
        }
    }
}

#[test]
fn invalid_configs_are_rejected() {
    let bad = SimConfig {
        strategies: vec![Strategy::InitialDiversity],
        ..small_config()
    };
    assert!(run_experiment(&bad).is_err());
    let bad = SimConfig {
        n_classes: 400,
        ..small_config()
    };
    assert!(generate_mixture(&bad, 0).is_err());
}

/// One-sided paired check over seeds: the diversity start must not have a
/// larger covering radius than the random start by more than two standard
/// errors of the paired difference.
#[test]
fn diversity_start_does_not_widen_the_covering_radius() {
    let config = SimConfig {
        cycle_budgets: vec![],
        strategies: vec![Strategy::Random],
        seeds: (0..20).collect(),
        ..SimConfig::default()
    };
    let report = run_experiment(&config).unwrap();
    let radius = |mode| -> Vec<f64> {
        report
            .runs_for(mode, Strategy::Random)
            .map(|r| r.cycles[0].covering_radius)
            .collect()
    };
    let diffs: Vec<f64> = radius(InitialSelection::InitialDiversity)
        .iter()
        .zip(&radius(InitialSelection::Random))
        .map(|(d, r)| d - r)
        .collect();
    let mean = diffs.iter().sum::<f64>() / diffs.len() as f64;
    let se = standard_error(&diffs);
    assert!(
        mean <= 2.0 * se,
        "mean paired difference {mean}, standard error {se}"
    );
}
