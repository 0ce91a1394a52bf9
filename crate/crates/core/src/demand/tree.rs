//! Least-squares regression trees with axis-aligned splits.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::demand::FeatureMatrix;

/// Growth limits for one tree.
#[derive(Debug, Clone, Copy)]
pub(crate) struct TreeParams {
    pub max_depth: usize,
    pub min_samples_split: usize,
    pub min_samples_leaf: usize,
    /// Candidate feature dimensions sampled per split.
    pub n_candidate_features: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Node {
    Leaf {
        value: f64,
    },
    Split {
        feature: usize,
        threshold: f64,
        left: Box<Node>,
        right: Box<Node>,
    },
}

/// One boosting stage: a depth-limited tree fit to residuals, predicting the
/// mean residual of the leaf a sample falls into.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegressionTree {
    pub root: Node,
}

struct FitCtx<'a> {
    data: &'a FeatureMatrix,
    residuals: &'a [f64],
    params: TreeParams,
}

impl RegressionTree {
    /// Fit a tree to `residuals`, accumulating split gains into
    /// `importance_acc` (one slot per feature).
    pub(crate) fn fit(
        data: &FeatureMatrix,
        residuals: &[f64],
        params: TreeParams,
        rng: &mut ChaCha8Rng,
        importance_acc: &mut [f64],
    ) -> Self {
        debug_assert_eq!(data.rows(), residuals.len());
        let rows: Vec<usize> = (0..data.rows()).collect();
        let ctx = FitCtx {
            data,
            residuals,
            params,
        };
        let root = grow(&ctx, rows, 0, rng, importance_acc);
        RegressionTree { root }
    }

    pub fn predict(&self, x: &[f64]) -> f64 {
        let mut node = &self.root;
        loop {
            match node {
                Node::Leaf { value } => return *value,
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => {
                    node = if x[*feature] <= *threshold { left } else { right };
                }
            }
        }
    }

    pub fn depth(&self) -> usize {
        fn d(n: &Node) -> usize {
            match n {
                Node::Leaf { .. } => 0,
                Node::Split { left, right, .. } => 1 + d(left).max(d(right)),
            }
        }
        d(&self.root)
    }

    pub fn leaf_count(&self) -> usize {
        fn c(n: &Node) -> usize {
            match n {
                Node::Leaf { .. } => 1,
                Node::Split { left, right, .. } => c(left) + c(right),
            }
        }
        c(&self.root)
    }
}

struct BestSplit {
    feature: usize,
    threshold: f64,
    children_sse: f64,
}

fn grow(
    ctx: &FitCtx<'_>,
    rows: Vec<usize>,
    depth: usize,
    rng: &mut ChaCha8Rng,
    importance_acc: &mut [f64],
) -> Node {
    let n = rows.len();
    let (sum, sum_sq) = rows.iter().fold((0.0, 0.0), |(s, q), &r| {
        let y = ctx.residuals[r];
        (s + y, q + y * y)
    });
    let mean = sum / n as f64;

    let p = ctx.params;
    if depth >= p.max_depth || n < p.min_samples_split || n < 2 * p.min_samples_leaf {
        return Node::Leaf { value: mean };
    }

    let node_sse = sum_sq - sum * sum / n as f64;
    let best = find_best_split(ctx, &rows, sum, sum_sq, rng);
    let Some(best) = best else {
        return Node::Leaf { value: mean };
    };
    let gain = node_sse - best.children_sse;
    if !(gain > 0.0) {
        return Node::Leaf { value: mean };
    }
    importance_acc[best.feature] += gain;

    // Stable partition keeps original row order inside each child.
    let (left_rows, right_rows): (Vec<usize>, Vec<usize>) = rows
        .into_iter()
        .partition(|&r| ctx.data.at(r, best.feature) <= best.threshold);
    let left = grow(ctx, left_rows, depth + 1, rng, importance_acc);
    let right = grow(ctx, right_rows, depth + 1, rng, importance_acc);
    Node::Split {
        feature: best.feature,
        threshold: best.threshold,
        left: Box::new(left),
        right: Box::new(right),
    }
}

/// Scan sampled candidate features for the split minimizing the summed
/// child SSE. Ties keep the first candidate in (feature, threshold) order.
fn find_best_split(
    ctx: &FitCtx<'_>,
    rows: &[usize],
    node_sum: f64,
    node_sum_sq: f64,
    rng: &mut ChaCha8Rng,
) -> Option<BestSplit> {
    let n = rows.len();
    let d = ctx.data.cols();
    let candidates = sample_features(d, ctx.params.n_candidate_features, rng);
    let msl = ctx.params.min_samples_leaf;

    let mut best: Option<BestSplit> = None;
    let mut pairs: Vec<(f64, f64)> = Vec::with_capacity(n);
    for &f in &candidates {
        pairs.clear();
        pairs.extend(
            rows.iter()
                .map(|&r| (ctx.data.at(r, f), ctx.residuals[r])),
        );
        pairs.sort_by(|a, b| a.0.total_cmp(&b.0));

        let mut sum_left = 0.0;
        let mut sum_sq_left = 0.0;
        for i in 0..n - 1 {
            let (v, y) = pairs[i];
            sum_left += y;
            sum_sq_left += y * y;
            let v_next = pairs[i + 1].0;
            if v == v_next {
                continue;
            }
            let nl = i + 1;
            let nr = n - nl;
            if nl < msl || nr < msl {
                continue;
            }
            let sum_right = node_sum - sum_left;
            let sse_left = sum_sq_left - sum_left * sum_left / nl as f64;
            let sse_right =
                (node_sum_sq - sum_sq_left) - sum_right * sum_right / nr as f64;
            let children_sse = sse_left + sse_right;
            if best.as_ref().is_none_or(|b| children_sse < b.children_sse) {
                best = Some(BestSplit {
                    feature: f,
                    threshold: (v + v_next) / 2.0,
                    children_sse,
                });
            }
        }
    }
    best
}

/// Sample `m` distinct feature indices, returned in ascending order.
fn sample_features(d: usize, m: usize, rng: &mut ChaCha8Rng) -> Vec<usize> {
    if m >= d {
        return (0..d).collect();
    }
    let mut idx: Vec<usize> = (0..d).collect();
    for i in 0..m {
        let j = rng.gen_range(i..d);
        idx.swap(i, j);
    }
    idx.truncate(m);
    idx.sort_unstable();
    idx
}
