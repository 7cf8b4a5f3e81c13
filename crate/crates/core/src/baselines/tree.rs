use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::DesignMatrix;
use crate::tensor::Matrix;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TreeConfig {
    pub max_depth: usize,
    pub min_samples_leaf: usize,
}

impl Default for TreeConfig {
    fn default() -> Self {
        TreeConfig {
            max_depth: 8,
            min_samples_leaf: 2,
        }
    }
}

/// Arena node; children are indices into [`Tree::nodes`]. Rows with
/// `x[feature] <= threshold` go left.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum TreeNode {
    Leaf {
        prediction: f64,
    },
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tree {
    /// Root at index 0.
    pub nodes: Vec<TreeNode>,
}

impl Tree {
    pub fn predict_row(&self, x: &[f64]) -> f64 {
        let mut i = 0;
        loop {
            match self.nodes[i] {
                TreeNode::Leaf { prediction } => return prediction,
                TreeNode::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => i = if x[feature] <= threshold { left } else { right },
            }
        }
    }

    pub fn predict(&self, x: &Matrix) -> Vec<f64> {
        (0..x.rows()).map(|r| self.predict_row(x.row(r))).collect()
    }

    pub fn leaves(&self) -> usize {
        self.nodes.iter().filter(|n| matches!(n, TreeNode::Leaf { .. })).count()
    }

    pub fn depth(&self) -> usize {
        fn walk(nodes: &[TreeNode], i: usize) -> usize {
            match nodes[i] {
                TreeNode::Leaf { .. } => 0,
                TreeNode::Split { left, right, .. } => 1 + walk(nodes, left).max(walk(nodes, right)),
            }
        }
        walk(&self.nodes, 0)
    }
}

/// Greedy CART on squared error over every feature.
pub fn fit_tree(d: &DesignMatrix, cfg: &TreeConfig) -> Tree {
    let rows: Vec<usize> = (0..d.n()).collect();
    let all: Vec<usize> = (0..d.p()).collect();
    grow(&d.x, &d.y, rows, cfg, &mut |_| all.clone())
}

struct Best {
    feature: usize,
    threshold: f64,
    gain: f64,
}

/// Grows a tree on `rows` (duplicates allowed). `features` is asked for the
/// candidate feature list at every split.
pub(crate) fn grow(
    x: &Matrix,
    y: &[f64],
    rows: Vec<usize>,
    cfg: &TreeConfig,
    features: &mut dyn FnMut(usize) -> Vec<usize>,
) -> Tree {
    let mut nodes = Vec::new();
    build(x, y, rows, 0, cfg, features, &mut nodes);
    Tree { nodes }
}

fn build(
    x: &Matrix,
    y: &[f64],
    rows: Vec<usize>,
    depth: usize,
    cfg: &TreeConfig,
    features: &mut dyn FnMut(usize) -> Vec<usize>,
    nodes: &mut Vec<TreeNode>,
) -> usize {
    let n = rows.len();
    let mean = rows.iter().map(|&r| y[r]).sum::<f64>() / n as f64;
    let id = nodes.len();
    nodes.push(TreeNode::Leaf { prediction: mean });

    let first = y[rows[0]];
    let constant = rows.iter().all(|&r| y[r] == first);
    let min_leaf = cfg.min_samples_leaf.max(1);
    if depth >= cfg.max_depth || constant || n < 2 * min_leaf {
        return id;
    }
    let Some(best) = best_split(x, y, &rows, mean, min_leaf, &features(x.cols())) else {
        return id;
    };
    let (left_rows, right_rows): (Vec<usize>, Vec<usize>) =
        rows.iter().partition(|&&r| x[(r, best.feature)] <= best.threshold);
    let left = build(x, y, left_rows, depth + 1, cfg, features, nodes);
    let right = build(x, y, right_rows, depth + 1, cfg, features, nodes);
    nodes[id] = TreeNode::Split {
        feature: best.feature,
        threshold: best.threshold,
        left,
        right,
    };
    id
}

/// Largest squared-error reduction over midpoints between consecutive
/// distinct values. Only strictly better candidates replace the incumbent,
/// so ties resolve to the earlier feature in `candidates` and the lower
/// threshold.
fn best_split(x: &Matrix, y: &[f64], rows: &[usize], mean: f64, min_leaf: usize, candidates: &[usize]) -> Option<Best> {
    let n = rows.len();
    let mut best: Option<Best> = None;
    let mut pairs: Vec<(f64, f64)> = Vec::with_capacity(n);
    for &f in candidates {
        pairs.clear();
        pairs.extend(rows.iter().map(|&r| (x[(r, f)], y[r] - mean)));
        pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
        let total: f64 = pairs.iter().map(|p| p.1).sum();
        let mut left_sum = 0.0;
        for i in 0..n - 1 {
            left_sum += pairs[i].1;
            let n_left = i + 1;
            let n_right = n - n_left;
            if pairs[i].0 == pairs[i + 1].0 || n_left < min_leaf || n_right < min_leaf {
                continue;
            }
            let right_sum = total - left_sum;
            let gain = left_sum * left_sum / n_left as f64 + right_sum * right_sum / n_right as f64
                - total * total / n as f64;
            if gain > best.as_ref().map_or(0.0, |b| b.gain) {
                let (lo, hi) = (pairs[i].0, pairs[i + 1].0);
                let mut threshold = lo + (hi - lo) / 2.0;
                if threshold >= hi {
                    threshold = lo;
                }
                best = Some(Best {
                    feature: f,
                    threshold,
                    gain,
                });
            }
        }
    }
    best
}
