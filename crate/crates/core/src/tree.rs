//! Greedy binary decision-tree growth shared by the regression (mse) and
//! classification (gini) learners.
//!
//! Splits are searched over the midpoints of consecutive distinct sorted
//! feature values; the best split is the one minimizing the summed child
//! impurity, with ties broken toward the lowest feature index and then the
//! lowest threshold. A node is only split when that strictly reduces the
//! impurity. Routing sends `x <= threshold` to the left child.

use std::collections::VecDeque;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::matrix::Matrix;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Criterion {
    /// Sum of squared deviations from the child mean (regression).
    Mse,
    /// Binary Gini impurity weighted by child size (classification).
    Gini,
}

impl Criterion {
    /// Impurity contribution of a block, already weighted by its size:
    /// `n * mse` for Mse, `n * gini` for Gini (labels in {0,1}).
    #[inline]
    fn weighted(self, n: f64, sum: f64, sumsq: f64) -> f64 {
        match self {
            Criterion::Mse => (sumsq - sum * sum / n).max(0.0),
            Criterion::Gini => 2.0 * (sum - sum * sum / n).max(0.0),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Node {
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
    Leaf {
        value: f64,
        samples: usize,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tree {
    pub nodes: Vec<Node>,
}

#[derive(Debug, Clone)]
pub struct GrowParams {
    pub criterion: Criterion,
    pub max_depth: Option<usize>,
    pub min_samples_split: usize,
    /// Candidate features re-drawn per split; `None` considers every feature.
    pub features_per_split: Option<usize>,
}

impl GrowParams {
    pub fn new(criterion: Criterion) -> Self {
        GrowParams {
            criterion,
            max_depth: None,
            min_samples_split: 2,
            features_per_split: None,
        }
    }
}

impl Tree {
    pub fn predict_row(&self, row: &[f64]) -> f64 {
        let mut at = 0;
        loop {
            match &self.nodes[at] {
                Node::Leaf { value, .. } => return *value,
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => {
                    at = if row[*feature] <= *threshold { *left } else { *right };
                }
            }
        }
    }

    pub fn predict(&self, x: &Matrix) -> Vec<f64> {
        (0..x.rows()).map(|r| self.predict_row(x.row(r))).collect()
    }

    pub fn n_leaves(&self) -> usize {
        self.nodes
            .iter()
            .filter(|n| matches!(n, Node::Leaf { .. }))
            .count()
    }

    pub fn depth(&self) -> usize {
        fn walk(nodes: &[Node], at: usize) -> usize {
            match &nodes[at] {
                Node::Leaf { .. } => 0,
                Node::Split { left, right, .. } => 1 + walk(nodes, *left).max(walk(nodes, *right)),
            }
        }
        walk(&self.nodes, 0)
    }
}

struct BestSplit {
    feature: usize,
    threshold: f64,
    child_impurity: f64,
}

/// Search candidate splits for the node holding `idx`. Returns the best
/// (lowest combined child impurity) or `None` when no candidate exists.
fn best_split(
    x: &Matrix,
    y: &[f64],
    idx: &[usize],
    features: &[usize],
    criterion: Criterion,
) -> Option<BestSplit> {
    let n = idx.len();
    let mut best: Option<BestSplit> = None;
    let mut order: Vec<usize> = Vec::with_capacity(n);

    for &f in features {
        order.clear();
        order.extend_from_slice(idx);
        order.sort_by(|&a, &b| {
            x.get(a, f)
                .partial_cmp(&x.get(b, f))
                .unwrap()
                .then(a.cmp(&b))
        });

        let total_sum: f64 = idx.iter().map(|&i| y[i]).sum();
        let total_sumsq: f64 = idx.iter().map(|&i| y[i] * y[i]).sum();

        let mut left_sum = 0.0;
        let mut left_sumsq = 0.0;
        for i in 1..n {
            let yi = y[order[i - 1]];
            left_sum += yi;
            left_sumsq += yi * yi;
            let prev = x.get(order[i - 1], f);
            let cur = x.get(order[i], f);
            if cur <= prev {
                continue;
            }
            let mid = 0.5 * (prev + cur);
            // A midpoint that rounds onto either endpoint cannot separate
            // the two values; fall back to the left endpoint.
            let threshold = if prev < mid && mid < cur { mid } else { prev };
            let child = criterion.weighted(i as f64, left_sum, left_sumsq)
                + criterion.weighted(
                    (n - i) as f64,
                    total_sum - left_sum,
                    total_sumsq - left_sumsq,
                );
            let better = match &best {
                None => true,
                Some(b) => child < b.child_impurity,
            };
            if better {
                best = Some(BestSplit {
                    feature: f,
                    threshold,
                    child_impurity: child,
                });
            }
        }
    }
    best
}

/// Grow a tree over the rows in `idx`. `rng` is only consulted when
/// `features_per_split` asks for per-split feature subsampling.
pub fn grow(
    x: &Matrix,
    y: &[f64],
    idx: Vec<usize>,
    params: &GrowParams,
    mut rng: Option<&mut ChaCha8Rng>,
) -> Tree {
    assert!(!idx.is_empty(), "cannot grow a tree on zero rows");
    let p = x.cols();
    let mut nodes = vec![Node::Leaf { value: 0.0, samples: 0 }];
    let mut queue: VecDeque<(usize, Vec<usize>, usize)> = VecDeque::new();
    queue.push_back((0, idx, 0));

    let base_features: Vec<usize> = (0..p).collect();
    let mut pool: Vec<usize> = base_features.clone();

    while let Some((slot, idx, depth)) = queue.pop_front() {
        let n = idx.len();
        let sum: f64 = idx.iter().map(|&i| y[i]).sum();
        let sumsq: f64 = idx.iter().map(|&i| y[i] * y[i]).sum();
        let mean = sum / n as f64;
        let parent_impurity = params.criterion.weighted(n as f64, sum, sumsq);

        let make_leaf = |nodes: &mut Vec<Node>| {
            nodes[slot] = Node::Leaf {
                value: mean,
                samples: n,
            };
        };

        let at_depth_limit = params.max_depth.is_some_and(|d| depth >= d);
        let pure = {
            let first = y[idx[0]];
            idx.iter().all(|&i| y[i] == first)
        };
        if n < params.min_samples_split || at_depth_limit || pure {
            make_leaf(&mut nodes);
            continue;
        }

        let features: &[usize] = match params.features_per_split {
            Some(m) if m < p => {
                let rng = rng
                    .as_deref_mut()
                    .expect("feature subsampling requires an rng");
                for i in 0..m {
                    let j = rng.random_range(i..p);
                    pool.swap(i, j);
                }
                pool[..m].sort_unstable();
                &pool[..m]
            }
            _ => &base_features,
        };

        let split = best_split(x, y, &idx, features, params.criterion);
        let accepted = split.and_then(|s| {
            let tiny = 1e-12 * (1.0 + parent_impurity);
            (s.child_impurity < parent_impurity - tiny).then_some(s)
        });
        let Some(s) = accepted else {
            make_leaf(&mut nodes);
            continue;
        };

        let (left_idx, right_idx): (Vec<usize>, Vec<usize>) = idx
            .iter()
            .copied()
            .partition(|&i| x.get(i, s.feature) <= s.threshold);
        debug_assert!(!left_idx.is_empty() && !right_idx.is_empty());

        let left = nodes.len();
        nodes.push(Node::Leaf { value: 0.0, samples: 0 });
        let right = nodes.len();
        nodes.push(Node::Leaf { value: 0.0, samples: 0 });
        nodes[slot] = Node::Split {
            feature: s.feature,
            threshold: s.threshold,
            left,
            right,
        };
        queue.push_back((left, left_idx, depth + 1));
        queue.push_back((right, right_idx, depth + 1));
    }

    Tree { nodes }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn one_split_separable_problem() {
        let x = Matrix::from_rows(&[vec![-2.0], vec![-1.0], vec![1.0], vec![2.0]]);
        let y = vec![0.0, 0.0, 1.0, 1.0];
        let tree = grow(&x, &y, (0..4).collect(), &GrowParams::new(Criterion::Mse), None);
        assert_eq!(tree.n_leaves(), 2);
        match &tree.nodes[0] {
            Node::Split { threshold, .. } => assert!(*threshold > -1.0 && *threshold < 1.0),
            other => panic!("expected split at root, got {other:?}"),
        }
        assert_eq!(tree.predict(&x), y);
    }

    #[test]
    fn constant_target_yields_single_leaf() {
        let x = Matrix::from_rows(&[vec![1.0], vec![2.0], vec![3.0]]);
        let y = vec![5.0, 5.0, 5.0];
        let tree = grow(&x, &y, (0..3).collect(), &GrowParams::new(Criterion::Mse), None);
        assert_eq!(tree.nodes.len(), 1);
        assert_eq!(tree.predict_row(&[99.0]), 5.0);
    }

    #[test]
    fn unrestricted_tree_memorizes_distinct_rows() {
        let rows: Vec<Vec<f64>> = (0..40)
            .map(|i| vec![(i * 37 % 41) as f64, (i * 17 % 23) as f64])
            .collect();
        let x = Matrix::from_rows(&rows);
        let y: Vec<f64> = (0..40).map(|i| (i as f64).sin() * 10.0).collect();
        let tree = grow(&x, &y, (0..40).collect(), &GrowParams::new(Criterion::Mse), None);
        assert_eq!(tree.predict(&x), y);
    }

    #[test]
    fn max_depth_zero_is_a_stump_mean() {
        let x = Matrix::from_rows(&[vec![0.0], vec![1.0], vec![2.0], vec![3.0]]);
        let y = vec![1.0, 3.0, 5.0, 7.0];
        let params = GrowParams {
            max_depth: Some(0),
            ..GrowParams::new(Criterion::Mse)
        };
        let tree = grow(&x, &y, (0..4).collect(), &params, None);
        assert_eq!(tree.nodes.len(), 1);
        assert_eq!(tree.predict_row(&[0.0]), 4.0);
    }

    #[test]
    fn power_of_two_feature_scaling_leaves_predictions_unchanged() {
        let rows: Vec<Vec<f64>> = (0..60)
            .map(|i| {
                vec![
                    ((i * 31 + 7) % 97) as f64 / 9.0,
                    ((i * 13 + 3) % 53) as f64 / 7.0,
                ]
            })
            .collect();
        let y: Vec<f64> = (0..60).map(|i| ((i * 29 + 11) % 19) as f64).collect();
        let x = Matrix::from_rows(&rows);
        let scaled_rows: Vec<Vec<f64>> = rows.iter().map(|r| vec![r[0] * 4.0, r[1]]).collect();
        let xs = Matrix::from_rows(&scaled_rows);
        let params = GrowParams::new(Criterion::Mse);
        let t = grow(&x, &y, (0..60).collect(), &params, None);
        let ts = grow(&xs, &y, (0..60).collect(), &params, None);
        assert_eq!(t.predict(&x), ts.predict(&xs));
    }
}
