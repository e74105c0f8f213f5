use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::dataio::ClassLabel;
use crate::error::{Error, Result};

use super::linalg::pinv;
use super::{argmax, validate_training};

/// Hidden-layer activation of an extreme learning machine.
///
/// Node `i` computes `z = w_i . x + b_i` and then: linear `z`; sigmoid
/// `1 / (1 + e^-z)`; sine `sin z`; hardlim `z >= 0`; tribas
/// `max(0, 1 - |z|)`; polynomial `(z + 1)^2`; wavelet (Morlet)
/// `cos(1.75 z) e^(-z^2 / 2)`. The rbf kernel ignores `w_i` and computes
/// `exp(-|x - a_i|^2 * b_i)` with a random centre `a_i` and width `b_i`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ElmKernel {
    Rbf,
    Linear,
    Polynomial,
    Wavelet,
    Sigmoid,
    Sine,
    Hardlim,
    Tribas,
}

impl ElmKernel {
    pub const ALL: [ElmKernel; 8] = [
        ElmKernel::Rbf,
        ElmKernel::Linear,
        ElmKernel::Polynomial,
        ElmKernel::Wavelet,
        ElmKernel::Sigmoid,
        ElmKernel::Sine,
        ElmKernel::Hardlim,
        ElmKernel::Tribas,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ElmKernel::Rbf => "rbf",
            ElmKernel::Linear => "linear",
            ElmKernel::Polynomial => "polynomial",
            ElmKernel::Wavelet => "wavelet",
            ElmKernel::Sigmoid => "sigmoid",
            ElmKernel::Sine => "sine",
            ElmKernel::Hardlim => "hardlim",
            ElmKernel::Tribas => "tribas",
        }
    }

    fn activate(self, z: f64) -> f64 {
        match self {
            ElmKernel::Linear => z,
            ElmKernel::Sigmoid => 1.0 / (1.0 + (-z).exp()),
            ElmKernel::Sine => z.sin(),
            ElmKernel::Hardlim => {
                if z >= 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            ElmKernel::Tribas => (1.0 - z.abs()).max(0.0),
            ElmKernel::Polynomial => (z + 1.0) * (z + 1.0),
            ElmKernel::Wavelet => (1.75 * z).cos() * (-0.5 * z * z).exp(),
            ElmKernel::Rbf => unreachable!("rbf nodes are distance based"),
        }
    }
}

impl fmt::Display for ElmKernel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ElmKernel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        ElmKernel::ALL
            .into_iter()
            .find(|k| k.as_str() == s.trim().to_ascii_lowercase())
            .ok_or_else(|| Error::UnknownName {
                kind: "ELM kernel",
                name: s.to_string(),
                expected: ElmKernel::ALL.map(|k| k.as_str()).join(", "),
            })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ElmConfig {
    pub hidden_neurons: usize,
    pub kernel: ElmKernel,
    pub weight_seed: u64,
}

impl ElmConfig {
    pub const DEFAULT_HIDDEN: usize = 100;

    pub fn new(kernel: ElmKernel) -> Self {
        ElmConfig {
            hidden_neurons: Self::DEFAULT_HIDDEN,
            kernel,
            weight_seed: 1,
        }
    }
}

/// Random hidden layer plus least-squares output weights.
#[derive(Debug, Clone)]
pub struct ElmModel {
    pub kernel: ElmKernel,
    /// `hidden x dims`: input weights, or rbf centres.
    pub input_weights: DMatrix<f64>,
    /// Biases, or rbf widths.
    pub biases: Vec<f64>,
    /// `hidden x classes`.
    pub output_weights: DMatrix<f64>,
    pub classes: Vec<ClassLabel>,
}

impl ElmModel {
    pub fn train(x: &[Vec<f64>], y: &[ClassLabel], cfg: &ElmConfig) -> Result<Self> {
        let (dims, classes) = validate_training(x, y)?;
        if cfg.hidden_neurons == 0 {
            return Err(Error::InvalidArgument("ELM needs at least one hidden neuron".into()));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.weight_seed);
        let input_weights =
            DMatrix::from_fn(cfg.hidden_neurons, dims, |_, _| rng.random_range(-1.0..=1.0));
        let biases: Vec<f64> = (0..cfg.hidden_neurons)
            .map(|_| {
                if cfg.kernel == ElmKernel::Rbf {
                    rng.random_range(0.0..=1.0)
                } else {
                    rng.random_range(-1.0..=1.0)
                }
            })
            .collect();
        let mut model = ElmModel {
            kernel: cfg.kernel,
            input_weights,
            biases,
            output_weights: DMatrix::zeros(0, 0),
            classes,
        };
        let h = model.hidden(x);
        let targets = DMatrix::from_fn(x.len(), model.classes.len(), |i, c| {
            if y[i] == model.classes[c] {
                1.0
            } else {
                0.0
            }
        });
        model.output_weights = pinv(&h)? * targets;
        Ok(model)
    }

    /// Hidden activations, one row per sample.
    pub fn hidden(&self, x: &[Vec<f64>]) -> DMatrix<f64> {
        let xm = DMatrix::from_fn(x.len(), self.input_weights.ncols(), |i, j| x[i][j]);
        if self.kernel == ElmKernel::Rbf {
            let centres = &self.input_weights;
            DMatrix::from_fn(x.len(), centres.nrows(), |i, k| {
                let d2: f64 = (0..centres.ncols())
                    .map(|j| (xm[(i, j)] - centres[(k, j)]).powi(2))
                    .sum();
                (-d2 * self.biases[k]).exp()
            })
        } else {
            let mut z = xm * self.input_weights.transpose();
            for (k, b) in self.biases.iter().enumerate() {
                for v in z.column_mut(k).iter_mut() {
                    *v = self.kernel.activate(*v + b);
                }
            }
            z
        }
    }

    pub fn outputs(&self, x: &[Vec<f64>]) -> DMatrix<f64> {
        self.hidden(x) * &self.output_weights
    }

    pub fn predict(&self, x: &[Vec<f64>]) -> Vec<ClassLabel> {
        let out = self.outputs(x);
        (0..x.len())
            .map(|i| self.classes[argmax(out.row(i).iter().copied())])
            .collect()
    }
}
