//! Random forest of bootstrapped CART trees, trained in parallel with one
//! derived seed per tree.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::tree::{DecisionTree, TreeParams};
use crate::evalstats::derive_seed;
use crate::similarity::Features;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ForestParams {
    pub trees: usize,
    /// Features tried per split; 2 = ⌈√4⌉.
    pub max_features: usize,
    pub tree: TreeParams,
}

impl ForestParams {
    pub const DEFAULT: ForestParams =
        ForestParams { trees: 500, max_features: 2, tree: TreeParams { min_leaf: 1, max_depth: 16 } };
}

impl Default for ForestParams {
    fn default() -> Self {
        Self::DEFAULT
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RandomForest {
    pub trees: Vec<DecisionTree>,
}

impl RandomForest {
    pub fn fit(x: &[Features], y: &[bool], p: &ForestParams, seed: u64) -> Self {
        let n = x.len();
        let trees = (0..p.trees)
            .into_par_iter()
            .map(|t| {
                let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, t as u64));
                let idx: Vec<usize> = (0..n).map(|_| rng.random_range(0..n)).collect();
                DecisionTree::fit_indices(x, y, idx, &p.tree, Some(p.max_features), &mut rng)
            })
            .collect();
        Self { trees }
    }

    /// Mean of the trees' leaf probabilities.
    pub fn predict_proba(&self, x: &Features) -> f64 {
        self.trees.iter().map(|t| t.predict_proba(x)).sum::<f64>() / self.trees.len() as f64
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn data() -> (Vec<Features>, Vec<bool>) {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        (0..200)
            .map(|_| {
                let pos = rng.random_bool(0.5);
                let base = if pos { 2.0 } else { 0.0 };
                let f: Features = std::array::from_fn(|_| base + rng.random_range(0.0..1.5));
                (f, pos)
            })
            .unzip()
    }

    #[test]
    fn deterministic_and_accurate() {
        let (x, y) = data();
        let p = ForestParams { trees: 40, ..ForestParams::DEFAULT };
        let a = RandomForest::fit(&x, &y, &p, 7);
        let b = RandomForest::fit(&x, &y, &p, 7);
        assert_eq!(a, b);
        let correct = x.iter().zip(&y).filter(|(r, &l)| (a.predict_proba(r) >= 0.5) == l).count();
        assert_eq!(correct, x.len());
        assert_ne!(a, RandomForest::fit(&x, &y, &p, 8));
    }

    #[test]
    fn invariant_to_increasing_feature_transform() {
        let (x, y) = data();
        let p = ForestParams { trees: 20, ..ForestParams::DEFAULT };
        let warp = |r: &Features| [r[0].exp(), r[1], r[2] * 3.0, r[3]];
        let a = RandomForest::fit(&x, &y, &p, 1);
        let b = RandomForest::fit(&x.iter().map(warp).collect::<Vec<_>>(), &y, &p, 1);
        for r in x.iter().take(50) {
            let probe = [r[0] * 0.9, r[1] + 0.1, r[2], r[3]];
            assert_eq!(a.predict_proba(&probe), b.predict_proba(&warp(&probe)));
        }
    }
}
