//! Classifier suite: ELM, SVM, 1-NN over a k-d tree, CART and MLP.
//!
//! Every classifier trains on rows of equal dimension with [`ClassLabel`]
//! targets and is deterministic given its seeds. Ties (argmax, votes,
//! equidistant neighbours) always go to the lowest index.

mod elm;
mod knn;
mod linalg;
mod mlp;
mod svm;
mod tree;

use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::dataio::ClassLabel;
use crate::error::{Error, Result};

pub use elm::{ElmConfig, ElmKernel, ElmModel};
pub use knn::{KdTree, KnnModel, LEAF_CAPACITY};
pub use linalg::{pinv, PINV_RCOND};
pub use mlp::{
    loss_and_gradient, EarlyStopping, MlpConfig, MlpModel, MlpTrainer, Network, StopDecision,
    TrainingHistory,
};
pub use svm::{solve_binary, BinaryProblem, BinarySolution, SvmConfig, SvmKernel, SvmModel};
pub use tree::{TreeModel, TreeNode};

/// Runs `f` and returns its result with the elapsed wall-clock seconds.
pub fn timeit<T>(f: impl FnOnce() -> T) -> (T, f64) {
    let start = Instant::now();
    let out = f();
    (out, start.elapsed().as_secs_f64())
}

/// Classifier family.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Family {
    Elm,
    Svm,
    Knn,
    Tree,
    Mlp,
}

impl Family {
    pub const ALL: [Family; 5] = [Family::Elm, Family::Svm, Family::Knn, Family::Tree, Family::Mlp];

    pub fn as_str(self) -> &'static str {
        match self {
            Family::Elm => "elm",
            Family::Svm => "svm",
            Family::Knn => "knn",
            Family::Tree => "tree",
            Family::Mlp => "mlp",
        }
    }

    /// Kernel or trainer names accepted for this family.
    pub fn kernels(self) -> &'static [&'static str] {
        match self {
            Family::Elm => &["rbf", "linear", "polynomial", "wavelet", "sigmoid", "sine", "hardlim", "tribas"],
            Family::Svm => &["linear", "polynomial", "rbf", "sigmoid"],
            Family::Knn => &["euclidean"],
            Family::Tree => &["gini"],
            Family::Mlp => &["batch", "gd", "gdm", "gda", "gdx", "rprop"],
        }
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Family {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Family::ALL
            .into_iter()
            .find(|f| f.as_str() == s.trim().to_ascii_lowercase())
            .ok_or_else(|| Error::UnknownName {
                kind: "classifier",
                name: s.to_string(),
                expected: "elm, svm, knn, tree, mlp".into(),
            })
    }
}

/// Complete training configuration of one classifier.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum ClassifierConfig {
    Elm(ElmConfig),
    Svm(SvmConfig),
    Knn,
    Tree,
    Mlp(MlpConfig),
}

impl ClassifierConfig {
    /// Default configuration for `family` with the named kernel or trainer.
    pub fn from_names(family: Family, kernel: &str) -> Result<Self> {
        let unknown = || Error::UnknownName {
            kind: "kernel",
            name: format!("{family}:{kernel}"),
            expected: family.kernels().join(", "),
        };
        match family {
            Family::Elm => Ok(ClassifierConfig::Elm(ElmConfig::new(kernel.parse()?))),
            Family::Svm => Ok(ClassifierConfig::Svm(SvmConfig::new(kernel.parse()?))),
            Family::Knn if family.kernels().contains(&kernel) => Ok(ClassifierConfig::Knn),
            Family::Tree if family.kernels().contains(&kernel) => Ok(ClassifierConfig::Tree),
            Family::Mlp => Ok(ClassifierConfig::Mlp(MlpConfig::new(kernel.parse()?))),
            _ => Err(unknown()),
        }
    }

    pub fn family(&self) -> Family {
        match self {
            ClassifierConfig::Elm(_) => Family::Elm,
            ClassifierConfig::Svm(_) => Family::Svm,
            ClassifierConfig::Knn => Family::Knn,
            ClassifierConfig::Tree => Family::Tree,
            ClassifierConfig::Mlp(_) => Family::Mlp,
        }
    }

    /// Kernel or trainer name.
    pub fn kernel(&self) -> &'static str {
        match self {
            ClassifierConfig::Elm(c) => c.kernel.as_str(),
            ClassifierConfig::Svm(c) => c.kernel.as_str(),
            ClassifierConfig::Knn => "euclidean",
            ClassifierConfig::Tree => "gini",
            ClassifierConfig::Mlp(c) => c.trainer.as_str(),
        }
    }

    /// Sets the seed that drives the classifier's own randomness (ELM
    /// hidden layer, MLP initial weights and train/validation split).
    pub fn with_weight_seed(&self, seed: u64) -> Self {
        match self {
            ClassifierConfig::Elm(c) => ClassifierConfig::Elm(ElmConfig {
                weight_seed: seed,
                ..c.clone()
            }),
            ClassifierConfig::Mlp(c) => ClassifierConfig::Mlp(MlpConfig {
                weight_seed: seed,
                shuffle_seed: seed,
                ..c.clone()
            }),
            other => other.clone(),
        }
    }

    /// Whether the classifier draws random numbers of its own.
    pub fn is_seeded(&self) -> bool {
        matches!(self, ClassifierConfig::Elm(_) | ClassifierConfig::Mlp(_))
    }
}

/// Fitted state of one classifier.
#[derive(Debug, Clone)]
pub enum ModelState {
    Elm(ElmModel),
    Svm(SvmModel),
    Knn(KnnModel),
    Tree(TreeModel),
    Mlp(MlpModel),
}

/// A trained classifier with its wall-clock training time.
#[derive(Debug, Clone)]
pub struct TrainedModel {
    pub family: Family,
    pub kernel: &'static str,
    pub classes: Vec<ClassLabel>,
    pub dims: usize,
    pub train_seconds: f64,
    pub state: ModelState,
}

impl TrainedModel {
    pub fn predict(&self, x: &[Vec<f64>]) -> Result<Vec<ClassLabel>> {
        for row in x {
            if row.len() != self.dims {
                return Err(Error::DimensionMismatch {
                    expected: self.dims,
                    actual: row.len(),
                });
            }
            if row.iter().any(|v| !v.is_finite()) {
                return Err(Error::NonFinite);
            }
        }
        Ok(match &self.state {
            ModelState::Elm(m) => m.predict(x),
            ModelState::Svm(m) => m.predict(x),
            ModelState::Knn(m) => m.predict(x),
            ModelState::Tree(m) => m.predict(x),
            ModelState::Mlp(m) => m.predict(x),
        })
    }
}

/// Trains the configured classifier and records the training time.
pub fn train(config: &ClassifierConfig, x: &[Vec<f64>], y: &[ClassLabel]) -> Result<TrainedModel> {
    let (dims, classes) = validate_training(x, y)?;
    let (state, seconds) = timeit(|| -> Result<ModelState> {
        Ok(match config {
            ClassifierConfig::Elm(c) => ModelState::Elm(ElmModel::train(x, y, c)?),
            ClassifierConfig::Svm(c) => ModelState::Svm(SvmModel::train(x, y, c)?),
            ClassifierConfig::Knn => ModelState::Knn(KnnModel::build(x, y)?),
            ClassifierConfig::Tree => ModelState::Tree(TreeModel::train(x, y)?),
            ClassifierConfig::Mlp(c) => ModelState::Mlp(MlpModel::train(x, y, c)?),
        })
    });
    Ok(TrainedModel {
        family: config.family(),
        kernel: config.kernel(),
        classes,
        dims,
        train_seconds: seconds,
        state: state?,
    })
}

/// Checks shapes and finiteness; returns the dimension and sorted classes.
pub(crate) fn validate_training(x: &[Vec<f64>], y: &[ClassLabel]) -> Result<(usize, Vec<ClassLabel>)> {
    if x.is_empty() {
        return Err(Error::Dataset("no training samples".into()));
    }
    if x.len() != y.len() {
        return Err(Error::Dataset(format!("{} rows but {} labels", x.len(), y.len())));
    }
    let dims = x[0].len();
    if dims == 0 {
        return Err(Error::Dataset("zero-dimensional features".into()));
    }
    for row in x {
        if row.len() != dims {
            return Err(Error::DimensionMismatch {
                expected: dims,
                actual: row.len(),
            });
        }
        if row.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite);
        }
    }
    Ok((dims, present_classes(y)))
}

pub(crate) fn present_classes(y: &[ClassLabel]) -> Vec<ClassLabel> {
    let mut seen = [false; 3];
    for l in y {
        seen[l.index()] = true;
    }
    ClassLabel::ALL.into_iter().filter(|l| seen[l.index()]).collect()
}

/// Index of the largest value; the first one wins ties.
pub(crate) fn argmax(values: impl IntoIterator<Item = f64>) -> usize {
    let mut best = (0, f64::NEG_INFINITY);
    for (i, v) in values.into_iter().enumerate() {
        if v > best.1 {
            best = (i, v);
        }
    }
    best.0
}

/// Fraction of matching labels.
pub fn accuracy(predicted: &[ClassLabel], actual: &[ClassLabel]) -> f64 {
    if actual.is_empty() {
        return 0.0;
    }
    let hits = predicted.iter().zip(actual).filter(|(a, b)| a == b).count();
    hits as f64 / actual.len() as f64
}

#[cfg(test)]
pub(crate) mod testdata;
