//! CART classification tree with Gini impurity.
//!
//! A split sends `x[feature] <= threshold` left, and thresholds are always
//! observed training values, so predictions depend only on the order of each
//! feature's values.

use rand::seq::index::sample;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::similarity::Features;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TreeParams {
    pub min_leaf: usize,
    pub max_depth: usize,
}

impl TreeParams {
    pub const DEFAULT: TreeParams = TreeParams { min_leaf: 5, max_depth: 12 };
}

impl Default for TreeParams {
    fn default() -> Self {
        Self::DEFAULT
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Node {
    Leaf { positive_fraction: f64, samples: usize },
    Split { feature: usize, threshold: f64, left: usize, right: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecisionTree {
    /// Node 0 is the root.
    pub nodes: Vec<Node>,
}

fn gini(pos: usize, n: usize) -> f64 {
    if n == 0 {
        return 0.0;
    }
    let p = pos as f64 / n as f64;
    2.0 * p * (1.0 - p)
}

struct Builder<'a, R> {
    x: &'a [Features],
    y: &'a [bool],
    params: TreeParams,
    max_features: Option<usize>,
    rng: &'a mut R,
    nodes: Vec<Node>,
}

impl<R: Rng> Builder<'_, R> {
    fn build(&mut self, idx: Vec<usize>, depth: usize) -> usize {
        let n = idx.len();
        let pos = idx.iter().filter(|&&i| self.y[i]).count();
        let slot = self.nodes.len();
        self.nodes.push(Node::Leaf { positive_fraction: pos as f64 / n.max(1) as f64, samples: n });
        if pos == 0 || pos == n || depth >= self.params.max_depth || n < 2 * self.params.min_leaf.max(1) {
            return slot;
        }
        let features: Vec<usize> = match self.max_features {
            Some(m) if m < 4 => {
                let mut f = sample(self.rng, 4, m).into_vec();
                f.sort_unstable();
                f
            }
            _ => (0..4).collect(),
        };
        let Some((feature, threshold)) = self.best_split(&idx, pos, &features) else {
            return slot;
        };
        let (left, right): (Vec<usize>, Vec<usize>) = idx.into_iter().partition(|&i| self.x[i][feature] <= threshold);
        let l = self.build(left, depth + 1);
        let r = self.build(right, depth + 1);
        self.nodes[slot] = Node::Split { feature, threshold, left: l, right: r };
        slot
    }

    fn best_split(&self, idx: &[usize], pos: usize, features: &[usize]) -> Option<(usize, f64)> {
        let n = idx.len();
        let min_leaf = self.params.min_leaf.max(1);
        let parent = gini(pos, n);
        let mut best: Option<(f64, usize, f64)> = None;
        let mut order = idx.to_vec();
        for &f in features {
            order.sort_by(|&a, &b| self.x[a][f].total_cmp(&self.x[b][f]).then(a.cmp(&b)));
            let mut left_pos = 0;
            for k in 1..n {
                left_pos += usize::from(self.y[order[k - 1]]);
                let (lo, hi) = (self.x[order[k - 1]][f], self.x[order[k]][f]);
                if k < min_leaf || n - k < min_leaf || lo == hi {
                    continue;
                }
                let impurity =
                    (k as f64 * gini(left_pos, k) + (n - k) as f64 * gini(pos - left_pos, n - k)) / n as f64;
                let gain = parent - impurity;
                if gain > 1e-12 && best.is_none_or(|(g, _, _)| gain > g) {
                    best = Some((gain, f, lo));
                }
            }
        }
        best.map(|(_, f, t)| (f, t))
    }
}

impl DecisionTree {
    /// Fits a tree; `max_features` limits the features tried per split (drawn
    /// with `rng`).
    pub fn fit<R: Rng>(
        x: &[Features],
        y: &[bool],
        params: &TreeParams,
        max_features: Option<usize>,
        rng: &mut R,
    ) -> Self {
        Self::fit_indices(x, y, (0..x.len()).collect(), params, max_features, rng)
    }

    pub(crate) fn fit_indices<R: Rng>(
        x: &[Features],
        y: &[bool],
        idx: Vec<usize>,
        params: &TreeParams,
        max_features: Option<usize>,
        rng: &mut R,
    ) -> Self {
        let mut b = Builder { x, y, params: *params, max_features, rng, nodes: Vec::new() };
        b.build(idx, 0);
        DecisionTree { nodes: b.nodes }
    }

    pub fn predict_proba(&self, x: &Features) -> f64 {
        let mut at = 0;
        loop {
            match self.nodes[at] {
                Node::Leaf { positive_fraction, .. } => return positive_fraction,
                Node::Split { feature, threshold, left, right } => {
                    at = if x[feature] <= threshold { left } else { right };
                }
            }
        }
    }

    pub fn depth(&self) -> usize {
        fn walk(nodes: &[Node], at: usize) -> usize {
            match nodes[at] {
                Node::Leaf { .. } => 0,
                Node::Split { left, right, .. } => 1 + walk(nodes, left).max(walk(nodes, right)),
            }
        }
        walk(&self.nodes, 0)
    }
}
