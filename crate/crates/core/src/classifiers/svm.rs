use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::dataio::ClassLabel;
use crate::error::{Error, Result};

use super::{argmax, validate_training};

/// Curvature floor for non-positive-definite pairs.
const TAU: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SvmKernel {
    Linear,
    Polynomial,
    Rbf,
    Sigmoid,
}

impl SvmKernel {
    pub const ALL: [SvmKernel; 4] = [
        SvmKernel::Linear,
        SvmKernel::Polynomial,
        SvmKernel::Rbf,
        SvmKernel::Sigmoid,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            SvmKernel::Linear => "linear",
            SvmKernel::Polynomial => "polynomial",
            SvmKernel::Rbf => "rbf",
            SvmKernel::Sigmoid => "sigmoid",
        }
    }
}

impl fmt::Display for SvmKernel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for SvmKernel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        SvmKernel::ALL
            .into_iter()
            .find(|k| k.as_str() == s.trim().to_ascii_lowercase())
            .ok_or_else(|| Error::UnknownName {
                kind: "SVM kernel",
                name: s.to_string(),
                expected: "linear, polynomial, rbf, sigmoid".into(),
            })
    }
}

/// C-SVC hyperparameters; defaults follow LIBSVM.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SvmConfig {
    pub kernel: SvmKernel,
    pub c: f64,
    pub degree: u32,
    /// `None` means `1 / dims`.
    pub gamma: Option<f64>,
    pub coef0: f64,
    pub tolerance: f64,
    pub max_iterations: usize,
}

impl SvmConfig {
    pub fn new(kernel: SvmKernel) -> Self {
        SvmConfig {
            kernel,
            c: 1.0,
            degree: 3,
            gamma: None,
            coef0: 0.0,
            tolerance: 1e-3,
            max_iterations: 10_000_000,
        }
    }

    fn validate(&self) -> Result<()> {
        if !(self.c > 0.0) || !(self.tolerance > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "SVM needs C > 0 and tolerance > 0 (C={}, tol={})",
                self.c, self.tolerance
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct Kernel {
    kind: SvmKernel,
    gamma: f64,
    coef0: f64,
    degree: i32,
}

impl Kernel {
    fn eval(&self, a: &[f64], b: &[f64]) -> f64 {
        let dot = || a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>();
        match self.kind {
            SvmKernel::Linear => dot(),
            SvmKernel::Polynomial => (self.gamma * dot() + self.coef0).powi(self.degree),
            SvmKernel::Rbf => {
                let d2: f64 = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum();
                (-self.gamma * d2).exp()
            }
            SvmKernel::Sigmoid => (self.gamma * dot() + self.coef0).tanh(),
        }
    }
}

/// Dual problem of one two-class machine: `gram` is the `n x n` kernel
/// matrix (row-major) and `y` holds +1 / -1 targets.
pub struct BinaryProblem<'a> {
    pub gram: &'a [f64],
    pub y: &'a [f64],
    pub c: f64,
    pub tolerance: f64,
    pub max_iterations: usize,
}

#[derive(Debug, Clone)]
pub struct BinarySolution {
    pub alpha: Vec<f64>,
    /// Decision function is `sum_t alpha_t y_t K(x_t, x) - rho`.
    pub rho: f64,
    pub iterations: usize,
    /// Dual objective `sum alpha - alpha^T Q alpha / 2` after every step,
    /// starting from the zero vector.
    pub objective_history: Vec<f64>,
}

/// Sequential minimal optimisation with second-order working-set
/// selection, in the formulation of LIBSVM.
pub fn solve_binary(p: &BinaryProblem) -> BinarySolution {
    let n = p.y.len();
    let k = |i: usize, j: usize| p.gram[i * n + j];
    let y = p.y;
    let c = p.c;
    let mut alpha = vec![0.0; n];
    // gradient of 1/2 a^T Q a - e^T a
    let mut grad = vec![-1.0; n];
    let objective = |alpha: &[f64], grad: &[f64]| -> f64 {
        -0.5 * alpha.iter().zip(grad).map(|(a, g)| a * (g - 1.0)).sum::<f64>()
    };
    let mut history = vec![0.0];
    let mut iterations = 0;
    let in_up = |t: usize, a: f64| (y[t] > 0.0 && a < c) || (y[t] < 0.0 && a > 0.0);
    let in_low = |t: usize, a: f64| (y[t] > 0.0 && a > 0.0) || (y[t] < 0.0 && a < c);

    while iterations < p.max_iterations {
        let mut g_max = f64::NEG_INFINITY;
        let mut i = usize::MAX;
        for t in 0..n {
            if in_up(t, alpha[t]) && -y[t] * grad[t] > g_max {
                g_max = -y[t] * grad[t];
                i = t;
            }
        }
        let mut g_max2 = f64::NEG_INFINITY;
        let mut j = usize::MAX;
        let mut best = f64::INFINITY;
        for t in 0..n {
            if !in_low(t, alpha[t]) {
                continue;
            }
            g_max2 = g_max2.max(y[t] * grad[t]);
            if i == usize::MAX {
                continue;
            }
            let b = g_max + y[t] * grad[t];
            if b > 0.0 {
                let mut a = k(i, i) + k(t, t) - 2.0 * k(i, t);
                if a <= 0.0 {
                    a = TAU;
                }
                let obj = -(b * b) / a;
                if obj < best {
                    best = obj;
                    j = t;
                }
            }
        }
        if g_max + g_max2 < p.tolerance || i == usize::MAX || j == usize::MAX {
            break;
        }
        iterations += 1;

        let (old_i, old_j) = (alpha[i], alpha[j]);
        let mut quad = k(i, i) + k(j, j) - 2.0 * k(i, j);
        if quad <= 0.0 {
            quad = TAU;
        }
        if y[i] != y[j] {
            let delta = (-grad[i] - grad[j]) / quad;
            let diff = alpha[i] - alpha[j];
            alpha[i] += delta;
            alpha[j] += delta;
            if diff > 0.0 {
                if alpha[j] < 0.0 {
                    alpha[j] = 0.0;
                    alpha[i] = diff;
                }
            } else if alpha[i] < 0.0 {
                alpha[i] = 0.0;
                alpha[j] = -diff;
            }
            if diff > 0.0 {
                if alpha[i] > c {
                    alpha[i] = c;
                    alpha[j] = c - diff;
                }
            } else if alpha[j] > c {
                alpha[j] = c;
                alpha[i] = c + diff;
            }
        } else {
            let delta = (grad[i] - grad[j]) / quad;
            let sum = alpha[i] + alpha[j];
            alpha[i] -= delta;
            alpha[j] += delta;
            if sum > c {
                if alpha[i] > c {
                    alpha[i] = c;
                    alpha[j] = sum - c;
                }
            } else if alpha[j] < 0.0 {
                alpha[j] = 0.0;
                alpha[i] = sum;
            }
            if sum > c {
                if alpha[j] > c {
                    alpha[j] = c;
                    alpha[i] = sum - c;
                }
            } else if alpha[i] < 0.0 {
                alpha[i] = 0.0;
                alpha[j] = sum;
            }
        }
        let (di, dj) = (alpha[i] - old_i, alpha[j] - old_j);
        for t in 0..n {
            grad[t] += y[t] * (y[i] * k(t, i) * di + y[j] * k(t, j) * dj);
        }
        history.push(objective(&alpha, &grad));
    }

    let (mut ub, mut lb) = (f64::INFINITY, f64::NEG_INFINITY);
    let (mut free, mut free_sum) = (0usize, 0.0);
    for t in 0..n {
        let yg = y[t] * grad[t];
        if alpha[t] >= c {
            if y[t] < 0.0 {
                ub = ub.min(yg);
            } else {
                lb = lb.max(yg);
            }
        } else if alpha[t] <= 0.0 {
            if y[t] > 0.0 {
                ub = ub.min(yg);
            } else {
                lb = lb.max(yg);
            }
        } else {
            free += 1;
            free_sum += yg;
        }
    }
    let rho = if free > 0 {
        free_sum / free as f64
    } else {
        (ub + lb) / 2.0
    };
    BinarySolution {
        alpha,
        rho,
        iterations,
        objective_history: history,
    }
}

#[derive(Debug, Clone)]
struct Machine {
    positive: usize,
    negative: usize,
    support: Vec<Vec<f64>>,
    /// `alpha_t y_t` per support vector.
    coef: Vec<f64>,
    rho: f64,
}

impl Machine {
    fn decision(&self, kernel: &Kernel, x: &[f64]) -> f64 {
        self.support
            .iter()
            .zip(&self.coef)
            .map(|(s, c)| c * kernel.eval(s, x))
            .sum::<f64>()
            - self.rho
    }
}

/// One-vs-one C-SVC.
#[derive(Debug, Clone)]
pub struct SvmModel {
    kernel: Kernel,
    machines: Vec<Machine>,
    pub classes: Vec<ClassLabel>,
}

impl SvmModel {
    pub fn train(x: &[Vec<f64>], y: &[ClassLabel], cfg: &SvmConfig) -> Result<Self> {
        cfg.validate()?;
        let (dims, classes) = validate_training(x, y)?;
        if classes.len() < 2 {
            return Err(Error::Dataset("SVM training needs at least two classes".into()));
        }
        let kernel = Kernel {
            kind: cfg.kernel,
            gamma: cfg.gamma.unwrap_or(1.0 / dims as f64),
            coef0: cfg.coef0,
            degree: cfg.degree as i32,
        };
        let mut machines = Vec::new();
        for a in 0..classes.len() {
            for b in a + 1..classes.len() {
                let idx: Vec<usize> = (0..x.len())
                    .filter(|&i| y[i] == classes[a] || y[i] == classes[b])
                    .collect();
                let targets: Vec<f64> = idx
                    .iter()
                    .map(|&i| if y[i] == classes[a] { 1.0 } else { -1.0 })
                    .collect();
                let gram = gram_matrix(&kernel, x, &idx);
                let sol = solve_binary(&BinaryProblem {
                    gram: &gram,
                    y: &targets,
                    c: cfg.c,
                    tolerance: cfg.tolerance,
                    max_iterations: cfg.max_iterations,
                });
                let mut support = Vec::new();
                let mut coef = Vec::new();
                for (t, &i) in idx.iter().enumerate() {
                    if sol.alpha[t] > 0.0 {
                        support.push(x[i].clone());
                        coef.push(sol.alpha[t] * targets[t]);
                    }
                }
                machines.push(Machine {
                    positive: a,
                    negative: b,
                    support,
                    coef,
                    rho: sol.rho,
                });
            }
        }
        Ok(SvmModel {
            kernel,
            machines,
            classes,
        })
    }

    /// Total number of support vectors over all pairwise machines.
    pub fn support_vector_count(&self) -> usize {
        self.machines.iter().map(|m| m.support.len()).sum()
    }

    pub fn predict(&self, x: &[Vec<f64>]) -> Vec<ClassLabel> {
        x.iter()
            .map(|row| {
                let mut votes = vec![0.0; self.classes.len()];
                for m in &self.machines {
                    if m.decision(&self.kernel, row) > 0.0 {
                        votes[m.positive] += 1.0;
                    } else {
                        votes[m.negative] += 1.0;
                    }
                }
                self.classes[argmax(votes)]
            })
            .collect()
    }
}

fn gram_matrix(kernel: &Kernel, x: &[Vec<f64>], idx: &[usize]) -> Vec<f64> {
    let n = idx.len();
    let mut g = vec![0.0; n * n];
    for a in 0..n {
        for b in a..n {
            let v = kernel.eval(&x[idx[a]], &x[idx[b]]);
            g[a * n + b] = v;
            g[b * n + a] = v;
        }
    }
    g
}

#[cfg(test)]
mod tests {
    use super::super::testdata::{blobs, unit_scale};
    use super::super::accuracy;
    use super::*;

    fn linear_gram(x: &[Vec<f64>]) -> Vec<f64> {
        let k = Kernel {
            kind: SvmKernel::Linear,
            gamma: 1.0,
            coef0: 0.0,
            degree: 1,
        };
        gram_matrix(&k, x, &(0..x.len()).collect::<Vec<_>>())
    }

    #[test]
    fn two_points_closed_form() {
        let x = vec![vec![-1.0], vec![1.0]];
        let y = [1.0, -1.0];
        let gram = linear_gram(&x);
        let sol = solve_binary(&BinaryProblem {
            gram: &gram,
            y: &y,
            c: 100.0,
            tolerance: 1e-9,
            max_iterations: 1000,
        });
        // w = -1, b = 0, both points on the margin with alpha = 1/2
        assert!((sol.alpha[0] - 0.5).abs() < 1e-12 && (sol.alpha[1] - 0.5).abs() < 1e-12);
        assert!(sol.rho.abs() < 1e-12);

        let labels = [ClassLabel::Normal, ClassLabel::Benign];
        let mut cfg = SvmConfig::new(SvmKernel::Linear);
        cfg.c = 100.0;
        let m = SvmModel::train(&x, &labels, &cfg).unwrap();
        assert_eq!(m.support_vector_count(), 2);
        let mach = &m.machines[0];
        assert!((mach.decision(&m.kernel, &[0.0])).abs() < 1e-12);
        assert_eq!(
            m.predict(&[vec![-0.1], vec![0.1]]),
            vec![ClassLabel::Normal, ClassLabel::Benign]
        );
    }

    fn kkt_violation(gram: &[f64], y: &[f64], sol: &BinarySolution, c: f64) -> f64 {
        let n = y.len();
        let mut worst: f64 = 0.0;
        for t in 0..n {
            let f: f64 = (0..n).map(|s| sol.alpha[s] * y[s] * gram[t * n + s]).sum::<f64>() - sol.rho;
            let margin = y[t] * f;
            let a = sol.alpha[t];
            let v = if a <= 0.0 {
                (1.0 - margin).max(0.0)
            } else if a >= c {
                (margin - 1.0).max(0.0)
            } else {
                (margin - 1.0).abs()
            };
            assert!((0.0..=c).contains(&a));
            worst = worst.max(v);
        }
        worst
    }

    #[test]
    fn kkt_conditions_and_monotone_objective() {
        let (x, labels) = blobs(25, 4, 2.0, 3);
        let x = unit_scale(&x);
        for kernel in [SvmKernel::Linear, SvmKernel::Rbf, SvmKernel::Polynomial] {
            let k = Kernel {
                kind: kernel,
                gamma: 0.5,
                coef0: 1.0,
                degree: 3,
            };
            let idx: Vec<usize> = (0..x.len()).filter(|&i| labels[i] != ClassLabel::Malignant).collect();
            let y: Vec<f64> = idx.iter().map(|&i| if labels[i] == ClassLabel::Normal { 1.0 } else { -1.0 }).collect();
            let gram = gram_matrix(&k, &x, &idx);
            for c in [0.5, 10.0] {
                let tol = 1e-3;
                let sol = solve_binary(&BinaryProblem {
                    gram: &gram,
                    y: &y,
                    c,
                    tolerance: tol,
                    max_iterations: 1_000_000,
                });
                assert!(kkt_violation(&gram, &y, &sol, c) <= tol, "{kernel} C={c}");
                let eq: f64 = sol.alpha.iter().zip(&y).map(|(a, t)| a * t).sum();
                assert!(eq.abs() < 1e-9);
                assert!(sol
                    .objective_history
                    .windows(2)
                    .all(|w| w[1] >= w[0] - 1e-12), "{kernel} C={c}");
            }
        }
    }

    #[test]
    fn separated_blobs_are_fit_exactly() {
        let (x, y) = blobs(30, 5, 10.0, 8);
        let m = SvmModel::train(&x, &y, &SvmConfig::new(SvmKernel::Linear)).unwrap();
        assert_eq!(accuracy(&m.predict(&x), &y), 1.0);
        assert_eq!(m.machines.len(), 3);
    }

    #[test]
    fn all_kernels_train() {
        let (x, y) = blobs(20, 6, 5.0, 2);
        let x = unit_scale(&x);
        for kernel in SvmKernel::ALL {
            let m = SvmModel::train(&x, &y, &SvmConfig::new(kernel)).unwrap();
            let p = m.predict(&x);
            assert_eq!(p, m.predict(&x));
            if kernel != SvmKernel::Sigmoid {
                assert!(accuracy(&p, &y) > 0.9, "{kernel}: {}", accuracy(&p, &y));
            }
        }
    }

    #[test]
    fn vote_ties_go_to_lowest_class() {
        // constant machines voting N over B, M over N and B over M
        let constant = |positive, negative, sign: f64| Machine {
            positive,
            negative,
            support: vec![],
            coef: vec![],
            rho: -sign,
        };
        let m = SvmModel {
            kernel: Kernel {
                kind: SvmKernel::Linear,
                gamma: 1.0,
                coef0: 0.0,
                degree: 1,
            },
            machines: vec![constant(0, 1, 1.0), constant(0, 2, -1.0), constant(1, 2, 1.0)],
            classes: ClassLabel::ALL.to_vec(),
        };
        assert_eq!(m.predict(&[vec![0.3]]), vec![ClassLabel::Normal]);
    }

    #[test]
    fn rejects_single_class_and_bad_config() {
        let x = vec![vec![0.0], vec![1.0]];
        let y = vec![ClassLabel::Benign; 2];
        assert!(matches!(
            SvmModel::train(&x, &y, &SvmConfig::new(SvmKernel::Rbf)),
            Err(Error::Dataset(_))
        ));
        let mut cfg = SvmConfig::new(SvmKernel::Linear);
        cfg.c = 0.0;
        assert!(SvmModel::train(&x, &[ClassLabel::Normal, ClassLabel::Benign], &cfg).is_err());
    }
}
