use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::dataio::ClassLabel;
use crate::error::{Error, Result};

use super::{argmax, validate_training};

/// First-order training algorithms.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum MlpTrainer {
    /// Batch delta rule with a fixed learning rate.
    Batch,
    GradientDescent,
    Momentum,
    AdaptiveLearningRate,
    MomentumAdaptive,
    Rprop,
}

impl MlpTrainer {
    pub const ALL: [MlpTrainer; 6] = [
        MlpTrainer::Batch,
        MlpTrainer::GradientDescent,
        MlpTrainer::Momentum,
        MlpTrainer::AdaptiveLearningRate,
        MlpTrainer::MomentumAdaptive,
        MlpTrainer::Rprop,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            MlpTrainer::Batch => "batch",
            MlpTrainer::GradientDescent => "gd",
            MlpTrainer::Momentum => "gdm",
            MlpTrainer::AdaptiveLearningRate => "gda",
            MlpTrainer::MomentumAdaptive => "gdx",
            MlpTrainer::Rprop => "rprop",
        }
    }
}

impl fmt::Display for MlpTrainer {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for MlpTrainer {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        MlpTrainer::ALL
            .into_iter()
            .find(|t| t.as_str() == s.trim().to_ascii_lowercase())
            .ok_or_else(|| Error::UnknownName {
                kind: "MLP trainer",
                name: s.to_string(),
                expected: MlpTrainer::ALL.map(|t| t.as_str()).join(", "),
            })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MlpConfig {
    /// Hidden layer widths.
    pub hidden: Vec<usize>,
    pub trainer: MlpTrainer,
    pub max_epochs: usize,
    /// Consecutive epochs without validation improvement before stopping.
    pub patience: usize,
    /// Train / validation / test proportions. [`MlpModel::train`] uses the
    /// first two to carve a validation set out of its input.
    pub split: (f64, f64, f64),
    pub learning_rate: f64,
    pub momentum: f64,
    pub lr_increase: f64,
    pub lr_decrease: f64,
    /// Largest accepted ratio of new to old training error for the
    /// adaptive trainers.
    pub max_error_increase: f64,
    pub rprop_delta0: f64,
    pub rprop_delta_max: f64,
    pub rprop_increase: f64,
    pub rprop_decrease: f64,
    pub weight_seed: u64,
    pub shuffle_seed: u64,
}

impl MlpConfig {
    pub const ARCHITECTURES: [&'static [usize]; 3] = [&[100], &[500], &[100, 100]];

    pub fn new(trainer: MlpTrainer) -> Self {
        MlpConfig {
            hidden: vec![100],
            trainer,
            max_epochs: 100,
            patience: 5,
            split: (0.70, 0.15, 0.15),
            learning_rate: 0.01,
            momentum: 0.9,
            lr_increase: 1.05,
            lr_decrease: 0.7,
            max_error_increase: 1.04,
            rprop_delta0: 0.07,
            rprop_delta_max: 50.0,
            rprop_increase: 1.2,
            rprop_decrease: 0.5,
            weight_seed: 1,
            shuffle_seed: 1,
        }
    }

    pub fn with_hidden(mut self, hidden: &[usize]) -> Self {
        self.hidden = hidden.to_vec();
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.hidden.iter().any(|h| *h == 0) {
            return Err(Error::InvalidArgument("hidden layers need at least one unit".into()));
        }
        let (a, b, c) = self.split;
        if !(a > 0.0 && b >= 0.0 && c >= 0.0 && ((a + b + c) - 1.0).abs() < 1e-9) {
            return Err(Error::InvalidArgument(format!("bad split {:?}", self.split)));
        }
        if self.learning_rate < 0.0 || !(0.0..1.0).contains(&self.momentum) {
            return Err(Error::InvalidArgument("bad learning rate or momentum".into()));
        }
        Ok(())
    }
}

fn sigmoid(z: f64) -> f64 {
    1.0 / (1.0 + (-z).exp())
}

/// Fully connected network: sigmoid hidden layers, linear output.
#[derive(Debug, Clone, PartialEq)]
pub struct Network {
    /// `out x in` per layer.
    pub weights: Vec<DMatrix<f64>>,
    pub biases: Vec<DVector<f64>>,
}

impl Network {
    /// Weights uniform in `[-1, 1] / sqrt(fan_in)`, biases likewise.
    pub fn random(sizes: &[usize], seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut weights = Vec::new();
        let mut biases = Vec::new();
        for pair in sizes.windows(2) {
            let scale = 1.0 / (pair[0] as f64).sqrt();
            weights.push(DMatrix::from_fn(pair[1], pair[0], |_, _| {
                rng.random_range(-1.0..=1.0) * scale
            }));
            biases.push(DVector::from_fn(pair[1], |_, _| rng.random_range(-1.0..=1.0) * scale));
        }
        Network { weights, biases }
    }

    pub fn parameter_count(&self) -> usize {
        self.weights.iter().map(|w| w.len()).sum::<usize>()
            + self.biases.iter().map(|b| b.len()).sum::<usize>()
    }

    /// Parameters as one vector, layer by layer, weights before biases.
    pub fn to_flat(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.parameter_count());
        for (w, b) in self.weights.iter().zip(&self.biases) {
            out.extend_from_slice(w.as_slice());
            out.extend_from_slice(b.as_slice());
        }
        out
    }

    pub fn set_flat(&mut self, flat: &[f64]) {
        let mut at = 0;
        for (w, b) in self.weights.iter_mut().zip(self.biases.iter_mut()) {
            let n = w.len();
            w.as_mut_slice().copy_from_slice(&flat[at..at + n]);
            at += n;
            let n = b.len();
            b.as_mut_slice().copy_from_slice(&flat[at..at + n]);
            at += n;
        }
    }

    /// Activations of every layer for a batch (one row per sample); the
    /// first entry is the input itself.
    fn activations(&self, x: &DMatrix<f64>) -> Vec<DMatrix<f64>> {
        let mut acts = vec![x.clone()];
        let last = self.weights.len() - 1;
        for (l, (w, b)) in self.weights.iter().zip(&self.biases).enumerate() {
            let mut z = acts[l].clone() * w.transpose();
            for mut row in z.row_iter_mut() {
                row += b.transpose();
            }
            if l < last {
                z.apply(|v| *v = sigmoid(*v));
            }
            acts.push(z);
        }
        acts
    }

    pub fn forward(&self, x: &DMatrix<f64>) -> DMatrix<f64> {
        self.activations(x).pop().expect("at least one layer")
    }
}

fn mse(out: &DMatrix<f64>, t: &DMatrix<f64>) -> f64 {
    if out.is_empty() {
        return 0.0;
    }
    (out - t).norm_squared() / out.len() as f64
}

/// Mean squared error over all outputs and its gradient, flattened in
/// [`Network::to_flat`] order.
pub fn loss_and_gradient(net: &Network, x: &DMatrix<f64>, t: &DMatrix<f64>) -> (f64, Vec<f64>) {
    let acts = net.activations(x);
    let out = acts.last().expect("output layer");
    let scale = 2.0 / out.len() as f64;
    let mut delta = (out - t) * scale;
    let loss = mse(out, t);
    let layers = net.weights.len();
    let mut grads: Vec<(DMatrix<f64>, DVector<f64>)> = Vec::with_capacity(layers);
    for l in (0..layers).rev() {
        let gw = delta.transpose() * &acts[l];
        let gb = DVector::from_iterator(delta.ncols(), delta.column_iter().map(|c| c.sum()));
        if l > 0 {
            let mut back = &delta * &net.weights[l];
            back.zip_apply(&acts[l], |d, a| *d *= a * (1.0 - a));
            delta = back;
        }
        grads.push((gw, gb));
    }
    grads.reverse();
    let mut flat = Vec::with_capacity(net.parameter_count());
    for (gw, gb) in grads {
        flat.extend_from_slice(gw.as_slice());
        flat.extend_from_slice(gb.as_slice());
    }
    (loss, flat)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StopDecision {
    Improved,
    Continue,
    Stop,
}

/// Validation-based stopping: halts after `patience` consecutive epochs
/// without a strict improvement.
#[derive(Debug, Clone)]
pub struct EarlyStopping {
    pub patience: usize,
    pub best_error: f64,
    pub best_epoch: usize,
    failures: usize,
}

impl EarlyStopping {
    pub fn new(patience: usize) -> Self {
        EarlyStopping {
            patience,
            best_error: f64::INFINITY,
            best_epoch: 0,
            failures: 0,
        }
    }

    pub fn observe(&mut self, epoch: usize, error: f64) -> StopDecision {
        if error < self.best_error {
            self.best_error = error;
            self.best_epoch = epoch;
            self.failures = 0;
            StopDecision::Improved
        } else {
            self.failures += 1;
            if self.failures >= self.patience {
                StopDecision::Stop
            } else {
                StopDecision::Continue
            }
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct TrainingHistory {
    /// Training error at the start of each epoch.
    pub train_error: Vec<f64>,
    /// Validation error after each epoch (empty without a validation set).
    pub validation_error: Vec<f64>,
    pub best_epoch: usize,
    pub epochs_run: usize,
}

/// Per-run optimiser state.
struct Optimizer<'a> {
    cfg: &'a MlpConfig,
    lr: f64,
    previous_step: Vec<f64>,
    previous_gradient: Vec<f64>,
    rprop_delta: Vec<f64>,
}

impl<'a> Optimizer<'a> {
    fn new(cfg: &'a MlpConfig, params: usize) -> Self {
        Optimizer {
            cfg,
            lr: cfg.learning_rate,
            previous_step: vec![0.0; params],
            previous_gradient: vec![0.0; params],
            rprop_delta: vec![cfg.rprop_delta0; params],
        }
    }

    /// One batch update; returns the training error before the update.
    fn step(&mut self, net: &mut Network, x: &DMatrix<f64>, t: &DMatrix<f64>) -> f64 {
        let (loss, g) = loss_and_gradient(net, x, t);
        let mut w = net.to_flat();
        let cfg = self.cfg;
        match cfg.trainer {
            MlpTrainer::Batch | MlpTrainer::GradientDescent => {
                for (p, gi) in w.iter_mut().zip(&g) {
                    *p -= self.lr * gi;
                }
                net.set_flat(&w);
            }
            MlpTrainer::Momentum => {
                let mc = cfg.momentum;
                for ((p, gi), prev) in w.iter_mut().zip(&g).zip(self.previous_step.iter_mut()) {
                    *prev = mc * *prev - self.lr * (1.0 - mc) * gi;
                    *p += *prev;
                }
                net.set_flat(&w);
            }
            MlpTrainer::AdaptiveLearningRate | MlpTrainer::MomentumAdaptive => {
                let mc = if cfg.trainer == MlpTrainer::MomentumAdaptive {
                    cfg.momentum
                } else {
                    0.0
                };
                let step: Vec<f64> = g
                    .iter()
                    .zip(&self.previous_step)
                    .map(|(gi, prev)| mc * prev - self.lr * (1.0 - mc) * gi)
                    .collect();
                let trial: Vec<f64> = w.iter().zip(&step).map(|(p, s)| p + s).collect();
                net.set_flat(&trial);
                let new_loss = mse(&net.forward(x), t);
                if new_loss > loss * cfg.max_error_increase {
                    net.set_flat(&w);
                    self.lr *= cfg.lr_decrease;
                    self.previous_step.iter_mut().for_each(|s| *s = 0.0);
                } else {
                    if new_loss < loss {
                        self.lr *= cfg.lr_increase;
                    }
                    self.previous_step = step;
                }
            }
            MlpTrainer::Rprop => {
                for i in 0..w.len() {
                    let sign_change = g[i] * self.previous_gradient[i];
                    if sign_change > 0.0 {
                        self.rprop_delta[i] =
                            (self.rprop_delta[i] * cfg.rprop_increase).min(cfg.rprop_delta_max);
                    } else if sign_change < 0.0 {
                        self.rprop_delta[i] *= cfg.rprop_decrease;
                    }
                    let s = if g[i] > 0.0 {
                        1.0
                    } else if g[i] < 0.0 {
                        -1.0
                    } else {
                        0.0
                    };
                    w[i] -= s * self.rprop_delta[i];
                }
                self.previous_gradient = g;
                net.set_flat(&w);
            }
        }
        loss
    }
}

/// Trained multilayer perceptron.
#[derive(Debug, Clone)]
pub struct MlpModel {
    pub trainer: MlpTrainer,
    pub network: Network,
    pub classes: Vec<ClassLabel>,
    pub history: TrainingHistory,
}

fn to_matrix(x: &[Vec<f64>], dims: usize) -> DMatrix<f64> {
    DMatrix::from_fn(x.len(), dims, |i, j| x[i][j])
}

fn one_hot(y: &[ClassLabel], classes: &[ClassLabel]) -> DMatrix<f64> {
    DMatrix::from_fn(y.len(), classes.len(), |i, c| {
        if y[i] == classes[c] {
            1.0
        } else {
            0.0
        }
    })
}

impl MlpModel {
    /// Shuffles the input with `shuffle_seed`, holds out a validation share
    /// in the ratio `split.1 : split.0` and trains with early stopping.
    pub fn train(x: &[Vec<f64>], y: &[ClassLabel], cfg: &MlpConfig) -> Result<Self> {
        validate_training(x, y)?;
        cfg.validate()?;
        let mut order: Vec<usize> = (0..x.len()).collect();
        order.shuffle(&mut ChaCha8Rng::seed_from_u64(cfg.shuffle_seed));
        let share = cfg.split.1 / (cfg.split.0 + cfg.split.1);
        let n_val = ((x.len() as f64) * share).round() as usize;
        let n_val = n_val.min(x.len() - 1);
        let (val_idx, train_idx) = order.split_at(n_val);
        let pick = |idx: &[usize]| -> (Vec<Vec<f64>>, Vec<ClassLabel>) {
            (idx.iter().map(|&i| x[i].clone()).collect(), idx.iter().map(|&i| y[i]).collect())
        };
        let (tx, ty) = pick(train_idx);
        let (vx, vy) = pick(val_idx);
        let classes = super::present_classes(y);
        let validation = if n_val > 0 { Some((&vx[..], &vy[..])) } else { None };
        Self::fit_with_classes(&tx, &ty, validation, classes, cfg)
    }

    /// Trains on `x`; with a validation set, stops early and keeps the
    /// best-validation weights, otherwise runs all epochs.
    pub fn fit(
        x: &[Vec<f64>],
        y: &[ClassLabel],
        validation: Option<(&[Vec<f64>], &[ClassLabel])>,
        cfg: &MlpConfig,
    ) -> Result<Self> {
        let (_, classes) = validate_training(x, y)?;
        cfg.validate()?;
        Self::fit_with_classes(x, y, validation, classes, cfg)
    }

    fn fit_with_classes(
        x: &[Vec<f64>],
        y: &[ClassLabel],
        validation: Option<(&[Vec<f64>], &[ClassLabel])>,
        classes: Vec<ClassLabel>,
        cfg: &MlpConfig,
    ) -> Result<Self> {
        let dims = x[0].len();
        let mut sizes = vec![dims];
        sizes.extend_from_slice(&cfg.hidden);
        sizes.push(classes.len());
        let mut net = Network::random(&sizes, cfg.weight_seed);
        let xm = to_matrix(x, dims);
        let tm = one_hot(y, &classes);
        let val = match validation {
            Some((vx, vy)) if !vx.is_empty() => {
                if vx.iter().any(|r| r.len() != dims) {
                    return Err(Error::DimensionMismatch {
                        expected: dims,
                        actual: vx.iter().map(|r| r.len()).find(|l| *l != dims).unwrap_or(0),
                    });
                }
                Some((to_matrix(vx, dims), one_hot(vy, &classes)))
            }
            _ => None,
        };

        let mut history = TrainingHistory::default();
        let mut stopper = EarlyStopping::new(cfg.patience);
        let mut best = net.clone();
        if let Some((vx, vt)) = &val {
            stopper.observe(0, mse(&net.forward(vx), vt));
        }
        let mut opt = Optimizer::new(cfg, net.parameter_count());
        for epoch in 1..=cfg.max_epochs {
            let loss = opt.step(&mut net, &xm, &tm);
            history.train_error.push(loss);
            history.epochs_run = epoch;
            if let Some((vx, vt)) = &val {
                let err = mse(&net.forward(vx), vt);
                history.validation_error.push(err);
                match stopper.observe(epoch, err) {
                    StopDecision::Improved => best = net.clone(),
                    StopDecision::Continue => {}
                    StopDecision::Stop => break,
                }
            }
        }
        let network = if val.is_some() {
            history.best_epoch = stopper.best_epoch;
            best
        } else {
            history.best_epoch = history.epochs_run;
            net
        };
        Ok(MlpModel {
            trainer: cfg.trainer,
            network,
            classes,
            history,
        })
    }

    pub fn predict(&self, x: &[Vec<f64>]) -> Vec<ClassLabel> {
        if x.is_empty() {
            return Vec::new();
        }
        let out = self.network.forward(&to_matrix(x, x[0].len()));
        (0..x.len())
            .map(|i| self.classes[argmax(out.row(i).iter().copied())])
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::classifiers::testdata::{blobs, xor};

    fn toy() -> (DMatrix<f64>, DMatrix<f64>) {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let x = DMatrix::from_fn(5, 3, |_, _| rng.random_range(-1.0..1.0));
        let t = DMatrix::from_fn(5, 2, |_, _| rng.random_range(-1.0..1.0));
        (x, t)
    }

    #[test]
    fn gradient_matches_central_differences() {
        let (x, t) = toy();
        for sizes in [&[3, 4, 2][..], &[3, 4, 3, 2][..], &[3, 2][..]] {
            let mut net = Network::random(sizes, 3);
            let (_, g) = loss_and_gradient(&net, &x, &t);
            let w = net.to_flat();
            let h = 1e-6;
            for i in 0..w.len() {
                let mut p = w.clone();
                p[i] = w[i] + h;
                net.set_flat(&p);
                let up = mse(&net.forward(&x), &t);
                p[i] = w[i] - h;
                net.set_flat(&p);
                let down = mse(&net.forward(&x), &t);
                net.set_flat(&w);
                let fd = (up - down) / (2.0 * h);
                let rel = (fd - g[i]).abs() / fd.abs().max(g[i].abs()).max(1e-8);
                assert!(rel < 1e-4, "param {i}: analytic {} numeric {fd}", g[i]);
            }
        }
    }

    #[test]
    fn flat_round_trip() {
        let mut net = Network::random(&[4, 3, 2], 1);
        let flat = net.to_flat();
        assert_eq!(flat.len(), 4 * 3 + 3 + 3 * 2 + 2);
        let copy = net.clone();
        net.set_flat(&flat);
        assert_eq!(net, copy);
    }

    #[test]
    fn rprop_solves_xor_for_most_seeds() {
        let (x, y) = xor();
        let mut solved = 0;
        for seed in 0..30 {
            let cfg = MlpConfig {
                weight_seed: seed,
                ..MlpConfig::new(MlpTrainer::Rprop)
            };
            let m = MlpModel::fit(&x, &y, None, &cfg).unwrap();
            if m.predict(&x) == y {
                solved += 1;
            }
        }
        assert!(solved >= 25, "solved {solved}/30");
    }

    #[test]
    fn early_stopping_counts_failures() {
        let mut es = EarlyStopping::new(5);
        assert_eq!(es.observe(1, 1.0), StopDecision::Improved);
        let mut stopped = None;
        for epoch in 2..=100 {
            if es.observe(epoch, 1.0 + epoch as f64) == StopDecision::Stop {
                stopped = Some(epoch);
                break;
            }
        }
        assert!(stopped.unwrap() <= 7);
        assert_eq!(es.best_epoch, 1);
        // an improvement resets the counter
        let mut es = EarlyStopping::new(2);
        es.observe(0, 1.0);
        assert_eq!(es.observe(1, 2.0), StopDecision::Continue);
        assert_eq!(es.observe(2, 0.5), StopDecision::Improved);
        assert_eq!(es.observe(3, 0.5), StopDecision::Continue);
        assert_eq!(es.observe(4, 0.6), StopDecision::Stop);
    }

    #[test]
    fn zero_learning_rate_changes_nothing() {
        let (x, y) = blobs(10, 3, 2.0, 4);
        let cfg = MlpConfig {
            learning_rate: 0.0,
            max_epochs: 20,
            ..MlpConfig::new(MlpTrainer::GradientDescent)
        };
        let classes = crate::classifiers::present_classes(&y);
        let initial = Network::random(&[3, 100, classes.len()], cfg.weight_seed);
        let m = MlpModel::fit(&x, &y, None, &cfg).unwrap();
        assert_eq!(m.network, initial);
        assert_eq!(m.history.train_error.len(), 20);
        assert!(m.history.train_error.iter().all(|e| *e == m.history.train_error[0]));
    }

    #[test]
    fn returns_best_validation_weights() {
        let (x, y) = blobs(40, 4, 1.0, 2);
        let cfg = MlpConfig::new(MlpTrainer::Rprop);
        let m = MlpModel::train(&x, &y, &cfg).unwrap();
        let h = &m.history;
        assert!(h.epochs_run <= cfg.max_epochs);
        let best = h.validation_error.iter().cloned().fold(f64::INFINITY, f64::min);
        if h.best_epoch > 0 {
            assert_eq!(h.validation_error[h.best_epoch - 1], best);
        }
        if h.epochs_run < cfg.max_epochs {
            assert!(h.epochs_run >= h.best_epoch + cfg.patience);
        }
    }

    #[test]
    fn every_trainer_learns_separated_blobs() {
        let (x, y) = blobs(30, 3, 4.0, 5);
        for trainer in MlpTrainer::ALL {
            let cfg = MlpConfig::new(trainer);
            let m = MlpModel::fit(&x, &y, None, &cfg).unwrap();
            let acc = crate::classifiers::accuracy(&m.predict(&x), &y);
            assert!(acc > 0.9, "{trainer}: {acc}");
            assert!(m.history.train_error.last() < m.history.train_error.first());
        }
    }

    #[test]
    fn adaptive_rate_never_accepts_large_increases() {
        let (x, y) = blobs(20, 3, 2.0, 6);
        let cfg = MlpConfig {
            learning_rate: 50.0,
            ..MlpConfig::new(MlpTrainer::AdaptiveLearningRate)
        };
        let m = MlpModel::fit(&x, &y, None, &cfg).unwrap();
        for w in m.history.train_error.windows(2) {
            assert!(w[1] <= w[0] * cfg.max_error_increase + 1e-12);
        }
    }

    #[test]
    fn names_and_config_validation() {
        for t in MlpTrainer::ALL {
            assert_eq!(t.as_str().parse::<MlpTrainer>().unwrap(), t);
        }
        assert!("trainscg".parse::<MlpTrainer>().is_err());
        assert!(MlpConfig::new(MlpTrainer::Batch).with_hidden(&[0]).validate().is_err());
        for arch in MlpConfig::ARCHITECTURES {
            assert!(MlpConfig::new(MlpTrainer::Batch).with_hidden(arch).validate().is_ok());
        }
    }
}
