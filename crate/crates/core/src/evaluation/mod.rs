//! Cross-validation protocol, statistics and reports.

mod folds;
mod report;
mod stats;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::classifiers::{self, timeit, ClassifierConfig, Family, MlpConfig};
use crate::dataio::ClassLabel;
use crate::error::{Error, Result};
use crate::features::{FeatureMatrix, Normalization};

pub use folds::{make_fold_plan, FoldPlan};
pub use report::{
    accuracy_time_ratio, compare_reports, emit_report, load_report, ratio_report, report_from_csv,
    report_to_csv, Aggregates, Comparison, ConfusionMatrix, PairwiseTest, RatioReport, RatioRow,
    ReportFormat, RunRecord, RunReport, CSV_COLUMNS, NEAR_CHANCE_ACCURACY, REPORT_VERSION,
};
pub use stats::{student_two_tailed, t_test, t_test_with, MeanStd, TTestKind, TTestResult, SIGNIFICANCE};

/// Folds per cross-validation run.
pub const FOLDS: usize = 10;

/// Test share of an MLP holdout run; the remainder is split again into
/// training and validation by [`MlpModel::train`](classifiers::MlpModel::train).
pub const MLP_TEST_SHARE: f64 = 0.15;

/// Rules applied by the protocol, recorded in every report.
pub const DECISIONS: [&str; 9] = [
    "features min-max scaled with bounds fitted on the training rows of each run; test values clamped",
    "accuracies in percent; std is the sample standard deviation over completed runs",
    "timing covers the train and predict calls only, excluding feature extraction",
    "synthetic (balancing) samples take part in both training and test partitions",
    "argmax and vote ties resolve to the lowest class index",
    "1-NN distance ties resolve to the lowest training index",
    "CART split ties resolve to the lowest feature, then the lowest threshold",
    "a run whose training partition lacks a class is recorded as failed and skipped by aggregates",
    "MLP runs are 70/15/15 holdouts per (architecture, order seed, weight seed); fold is 0",
];

/// Number of runs the protocol performs for `family` with `seeds` seeds.
pub fn expected_runs(family: Family, seeds: u64, folds: usize) -> usize {
    let s = seeds as usize;
    match family {
        Family::Svm | Family::Knn | Family::Tree => s * folds,
        Family::Elm => s * s * folds,
        Family::Mlp => MlpConfig::ARCHITECTURES.len() * s * s,
    }
}

fn rows_of(matrix: &FeatureMatrix, idx: &[usize]) -> (Vec<Vec<f64>>, Vec<ClassLabel>) {
    (
        idx.iter().map(|&i| matrix.rows[i].features.clone()).collect(),
        idx.iter().map(|&i| matrix.rows[i].label).collect(),
    )
}

fn present(labels: &[ClassLabel]) -> Vec<ClassLabel> {
    ClassLabel::ALL
        .into_iter()
        .filter(|c| labels.contains(c))
        .collect()
}

/// Trains on `train`, evaluates on both partitions.
fn evaluate_split(
    matrix: &FeatureMatrix,
    config: &ClassifierConfig,
    train_idx: &[usize],
    test_idx: &[usize],
    run: RunRecord,
) -> Result<RunRecord> {
    let (tx, ty) = rows_of(matrix, train_idx);
    let (vx, vy) = rows_of(matrix, test_idx);
    let missing: Vec<&str> = present(&matrix.labels())
        .into_iter()
        .filter(|c| !ty.contains(c))
        .map(|c| c.as_str())
        .collect();
    if !missing.is_empty() {
        let reason = Error::DegenerateFold {
            fold: run.fold,
            reason: format!("training partition has no {} samples", missing.join("/")),
        };
        return Ok(RunRecord {
            error: Some(reason.to_string()),
            ..run
        });
    }
    let norm = Normalization::fit(&tx)?;
    let tx = norm.apply_all(&tx)?;
    let vx = norm.apply_all(&vx)?;
    let model = classifiers::train(config, &tx, &ty)?;
    let train_pred = model.predict(&tx)?;
    let (test_pred, test_sec) = timeit(|| model.predict(&vx));
    let test_pred = test_pred?;
    let confusion = ConfusionMatrix::from_predictions(&vy, &test_pred);
    Ok(RunRecord {
        train_acc: 100.0 * classifiers::accuracy(&train_pred, &ty),
        test_acc: confusion.accuracy(),
        train_sec: model.train_seconds,
        test_sec,
        confusion,
        ..run
    })
}

fn blank_run(seed: u64, weight_seed: Option<u64>, fold: usize, variant: String) -> RunRecord {
    RunRecord {
        seed,
        weight_seed,
        fold,
        variant,
        train_acc: 0.0,
        test_acc: 0.0,
        train_sec: 0.0,
        test_sec: 0.0,
        confusion: ConfusionMatrix::default(),
        error: None,
    }
}

fn weight_seed_of(config: &ClassifierConfig) -> Option<u64> {
    match config {
        ClassifierConfig::Elm(c) => Some(c.weight_seed),
        ClassifierConfig::Mlp(c) => Some(c.weight_seed),
        _ => None,
    }
}

/// One k-fold cross-validation pass: each fold is the test set once.
pub fn run_cv(matrix: &FeatureMatrix, config: &ClassifierConfig, plan: &FoldPlan) -> Result<Vec<RunRecord>> {
    if plan.len() != matrix.len() {
        return Err(Error::InvalidArgument(format!(
            "fold plan covers {} samples but the matrix has {}",
            plan.len(),
            matrix.len()
        )));
    }
    (0..plan.folds)
        .map(|fold| {
            let run = blank_run(plan.permutation_seed, weight_seed_of(config), fold, String::new());
            evaluate_split(matrix, config, &plan.train_indices(fold), &plan.test_indices(fold), run)
        })
        .collect()
}

/// One MLP holdout run: the last 15% of the `seed` permutation is the test set.
pub fn run_holdout(matrix: &FeatureMatrix, config: &MlpConfig, seed: u64) -> Result<RunRecord> {
    let n = matrix.len();
    let n_test = ((n as f64) * MLP_TEST_SHARE).round() as usize;
    if n_test == 0 || n_test >= n {
        return Err(Error::InvalidArgument(format!("{n} samples are too few for a holdout split")));
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let (train, test) = order.split_at(n - n_test);
    let variant = config
        .hidden
        .iter()
        .map(|h| h.to_string())
        .collect::<Vec<_>>()
        .join("-");
    let run = blank_run(seed, Some(config.weight_seed), 0, variant);
    evaluate_split(matrix, &ClassifierConfig::Mlp(config.clone()), train, test, run)
}

#[derive(Debug, Clone)]
enum Job {
    Cv { seed: u64, config: ClassifierConfig },
    Holdout { seed: u64, config: MlpConfig },
}

/// Full protocol for one configuration over seeds `1..=seeds`.
///
/// SVM, tree and 1-NN: one 10-fold pass per data-order seed. ELM: one pass
/// per (order seed, weight seed) pair. MLP: a holdout run for every
/// architecture, order seed and weight seed. Runs execute on the current
/// rayon pool; records keep the sequential order.
pub fn run_protocol(matrix: &FeatureMatrix, config: &ClassifierConfig, seeds: u64) -> Result<RunReport> {
    if seeds == 0 {
        return Err(Error::InvalidArgument("at least one seed is required".into()));
    }
    if matrix.is_empty() {
        return Err(Error::Dataset("empty feature matrix".into()));
    }
    let mut jobs = Vec::new();
    match config {
        ClassifierConfig::Mlp(base) => {
            for arch in MlpConfig::ARCHITECTURES {
                for seed in 1..=seeds {
                    for ws in 1..=seeds {
                        let cfg = MlpConfig {
                            hidden: arch.to_vec(),
                            weight_seed: ws,
                            shuffle_seed: ws,
                            ..base.clone()
                        };
                        jobs.push(Job::Holdout { seed, config: cfg });
                    }
                }
            }
        }
        c if c.is_seeded() => {
            for seed in 1..=seeds {
                for ws in 1..=seeds {
                    jobs.push(Job::Cv {
                        seed,
                        config: c.with_weight_seed(ws),
                    });
                }
            }
        }
        c => {
            for seed in 1..=seeds {
                jobs.push(Job::Cv {
                    seed,
                    config: c.clone(),
                });
            }
        }
    }
    let results: Vec<Result<Vec<RunRecord>>> = jobs
        .par_iter()
        .map(|job| match job {
            Job::Cv { seed, config } => run_cv(matrix, config, &make_fold_plan(matrix.len(), FOLDS, *seed)?),
            Job::Holdout { seed, config } => Ok(vec![run_holdout(matrix, config, *seed)?]),
        })
        .collect();
    let mut runs = Vec::new();
    for r in results {
        runs.extend(r?);
    }
    let extractor = matrix.extractor;
    let config_id = format!("{extractor}/{}/{}", config.family().as_str(), config.kernel());
    Ok(RunReport {
        version: REPORT_VERSION,
        config_id,
        extractor: extractor.to_string(),
        family: extractor.variant().to_string(),
        classifier: config.family(),
        kernel: config.kernel().to_string(),
        classifier_config: config.clone(),
        classes: present(&matrix.labels()),
        samples: matrix.len(),
        synthetic_samples: matrix.rows.iter().filter(|r| r.synthetic).count(),
        seeds,
        folds: FOLDS,
        decisions: DECISIONS.iter().map(|d| d.to_string()).collect(),
        aggregates: Aggregates::of(&runs),
        runs,
    })
}
