use crate::dataio::ClassLabel;
use crate::error::Result;

use super::validate_training;

/// Maximum number of points stored in a leaf.
pub const LEAF_CAPACITY: usize = 50;

#[derive(Debug, Clone)]
enum Node {
    Leaf(Vec<usize>),
    Split {
        dim: usize,
        value: f64,
        left: usize,
        right: usize,
    },
}

/// Exact nearest-neighbour search tree over Euclidean distance.
///
/// Each split cuts at the median of the widest coordinate; points in the
/// left child are `<=` the cut value and points in the right child `>=`.
#[derive(Debug, Clone)]
pub struct KdTree {
    points: Vec<Vec<f64>>,
    nodes: Vec<Node>,
}

fn squared_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

impl KdTree {
    pub fn build(points: Vec<Vec<f64>>) -> Self {
        let mut tree = KdTree {
            points,
            nodes: Vec::new(),
        };
        let all: Vec<usize> = (0..tree.points.len()).collect();
        tree.build_node(all);
        tree
    }

    fn build_node(&mut self, mut idx: Vec<usize>) -> usize {
        let id = self.nodes.len();
        if idx.len() <= LEAF_CAPACITY {
            self.nodes.push(Node::Leaf(idx));
            return id;
        }
        let dims = self.points[idx[0]].len();
        let spread = |d: usize| {
            let (lo, hi) = idx.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &i| {
                let v = self.points[i][d];
                (lo.min(v), hi.max(v))
            });
            hi - lo
        };
        let mut dim = 0;
        let mut widest = f64::NEG_INFINITY;
        for d in 0..dims {
            let s = spread(d);
            if s > widest {
                widest = s;
                dim = d;
            }
        }
        idx.sort_by(|&a, &b| {
            self.points[a][dim]
                .total_cmp(&self.points[b][dim])
                .then(a.cmp(&b))
        });
        let mid = idx.len() / 2;
        let value = self.points[idx[mid]][dim];
        let right_idx = idx.split_off(mid);
        self.nodes.push(Node::Leaf(Vec::new()));
        let left = self.build_node(idx);
        let right = self.build_node(right_idx);
        self.nodes[id] = Node::Split {
            dim,
            value,
            left,
            right,
        };
        id
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Largest number of points held by any leaf.
    pub fn max_leaf_size(&self) -> usize {
        self.nodes
            .iter()
            .filter_map(|n| match n {
                Node::Leaf(v) => Some(v.len()),
                _ => None,
            })
            .max()
            .unwrap_or(0)
    }

    /// Index and squared distance of the nearest point; equal distances
    /// resolve to the lowest index.
    pub fn nearest(&self, q: &[f64]) -> Option<(usize, f64)> {
        if self.points.is_empty() {
            return None;
        }
        let mut best = (usize::MAX, f64::INFINITY);
        self.search(0, q, &mut best);
        Some(best)
    }

    fn search(&self, node: usize, q: &[f64], best: &mut (usize, f64)) {
        match &self.nodes[node] {
            Node::Leaf(idx) => {
                for &i in idx {
                    let d = squared_distance(&self.points[i], q);
                    if d < best.1 || (d == best.1 && i < best.0) {
                        *best = (i, d);
                    }
                }
            }
            Node::Split {
                dim,
                value,
                left,
                right,
            } => {
                let diff = q[*dim] - value;
                let (near, far) = if diff <= 0.0 {
                    (*left, *right)
                } else {
                    (*right, *left)
                };
                self.search(near, q, best);
                if diff * diff <= best.1 {
                    self.search(far, q, best);
                }
            }
        }
    }
}

/// One-nearest-neighbour classifier.
#[derive(Debug, Clone)]
pub struct KnnModel {
    tree: KdTree,
    labels: Vec<ClassLabel>,
}

impl KnnModel {
    pub fn build(x: &[Vec<f64>], y: &[ClassLabel]) -> Result<Self> {
        validate_training(x, y)?;
        Ok(KnnModel {
            tree: KdTree::build(x.to_vec()),
            labels: y.to_vec(),
        })
    }

    pub fn predict(&self, x: &[Vec<f64>]) -> Vec<ClassLabel> {
        x.iter()
            .map(|q| self.labels[self.tree.nearest(q).expect("non-empty tree").0])
            .collect()
    }
}
