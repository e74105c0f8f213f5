use std::cmp::Ordering;
use std::collections::VecDeque;

use crate::dataio::ClassLabel;
use crate::error::Result;

use super::validate_training;

#[derive(Debug, Clone, PartialEq)]
pub enum TreeNode {
    Leaf {
        class: ClassLabel,
        counts: [usize; 3],
    },
    Split {
        feature: usize,
        /// Samples with `x[feature] <= threshold` go left.
        threshold: f64,
        left: usize,
        right: usize,
    },
}

/// CART classification tree grown breadth first with Gini impurity.
///
/// Any impure node whose samples differ in some feature is split (minimum
/// leaf size 1), up to `n - 1` splits in total. Thresholds are midpoints
/// between consecutive distinct values; equal impurities resolve to the
/// lowest feature index and then the lowest threshold.
#[derive(Debug, Clone)]
pub struct TreeModel {
    pub nodes: Vec<TreeNode>,
}

struct Candidate {
    feature: usize,
    threshold: f64,
    left: Vec<usize>,
    right: Vec<usize>,
    /// Exact score `sum_c l_c^2 / n_l + sum_c r_c^2 / n_r` as a fraction;
    /// larger means purer children.
    num: u128,
    den: u128,
}

fn counts_of(idx: &[usize], y: &[ClassLabel]) -> [usize; 3] {
    let mut c = [0; 3];
    for &i in idx {
        c[y[i].index()] += 1;
    }
    c
}

fn majority(counts: &[usize; 3]) -> ClassLabel {
    let mut best = 0;
    for k in 1..3 {
        if counts[k] > counts[best] {
            best = k;
        }
    }
    ClassLabel::from_index(best).expect("three classes")
}

fn best_split(x: &[Vec<f64>], y: &[ClassLabel], idx: &[usize]) -> Option<Candidate> {
    let dims = x[idx[0]].len();
    let total = counts_of(idx, y);
    let mut best: Option<Candidate> = None;
    let mut order = idx.to_vec();
    for f in 0..dims {
        order.sort_by(|&a, &b| x[a][f].total_cmp(&x[b][f]).then(a.cmp(&b)));
        let mut left = [0u128; 3];
        for pos in 0..order.len() - 1 {
            left[y[order[pos]].index()] += 1;
            let (lo, hi) = (x[order[pos]][f], x[order[pos + 1]][f]);
            if lo == hi {
                continue;
            }
            let nl = (pos + 1) as u128;
            let nr = order.len() as u128 - nl;
            let sl: u128 = left.iter().map(|c| c * c).sum();
            let sr: u128 = (0..3)
                .map(|k| {
                    let r = total[k] as u128 - left[k];
                    r * r
                })
                .sum();
            let num = sl * nr + sr * nl;
            let den = nl * nr;
            let improves = match &best {
                None => true,
                Some(b) => (num * b.den).cmp(&(b.num * den)) == Ordering::Greater,
            };
            if improves {
                let mut threshold = lo + (hi - lo) / 2.0;
                if threshold >= hi {
                    threshold = lo;
                }
                best = Some(Candidate {
                    feature: f,
                    threshold,
                    left: order[..=pos].to_vec(),
                    right: order[pos + 1..].to_vec(),
                    num,
                    den,
                });
            }
        }
    }
    best
}

impl TreeModel {
    pub fn train(x: &[Vec<f64>], y: &[ClassLabel]) -> Result<Self> {
        validate_training(x, y)?;
        let max_splits = x.len().saturating_sub(1);
        let mut nodes = Vec::new();
        let mut splits = 0;
        let mut queue = VecDeque::new();
        nodes.push(TreeNode::Leaf {
            class: ClassLabel::Normal,
            counts: [0; 3],
        });
        queue.push_back((0usize, (0..x.len()).collect::<Vec<_>>()));
        while let Some((id, idx)) = queue.pop_front() {
            let counts = counts_of(&idx, y);
            let pure = counts.iter().filter(|c| **c > 0).count() <= 1;
            let candidate = if pure || splits >= max_splits {
                None
            } else {
                best_split(x, y, &idx)
            };
            match candidate {
                None => {
                    nodes[id] = TreeNode::Leaf {
                        class: majority(&counts),
                        counts,
                    };
                }
                Some(c) => {
                    splits += 1;
                    let (left, right) = (nodes.len(), nodes.len() + 1);
                    let placeholder = TreeNode::Leaf {
                        class: ClassLabel::Normal,
                        counts: [0; 3],
                    };
                    nodes.push(placeholder.clone());
                    nodes.push(placeholder);
                    nodes[id] = TreeNode::Split {
                        feature: c.feature,
                        threshold: c.threshold,
                        left,
                        right,
                    };
                    queue.push_back((left, c.left));
                    queue.push_back((right, c.right));
                }
            }
        }
        Ok(TreeModel { nodes })
    }

    pub fn split_count(&self) -> usize {
        self.nodes
            .iter()
            .filter(|n| matches!(n, TreeNode::Split { .. }))
            .count()
    }

    pub fn predict_one(&self, row: &[f64]) -> ClassLabel {
        let mut id = 0;
        loop {
            match &self.nodes[id] {
                TreeNode::Leaf { class, .. } => return *class,
                TreeNode::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => id = if row[*feature] <= *threshold { *left } else { *right },
            }
        }
    }

    pub fn predict(&self, x: &[Vec<f64>]) -> Vec<ClassLabel> {
        x.iter().map(|r| self.predict_one(r)).collect()
    }
}
