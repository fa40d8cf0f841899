//! Supervised link prediction with k-fold cross-validation.
//!
//! Old links are the positive training examples and new links the positive
//! test examples. Non-links are assigned to folds by a seeded hash, so each
//! fold's negatives are a fixed, roughly equal share of the pool.

pub mod forest;
pub mod logistic;
pub mod naive_bayes;
pub mod tree;

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use rand::seq::IteratorRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::evalstats::{derive_seed, Confusion};
use crate::graph::{NodeId, NodePair};
use crate::similarity::{Features, Similarity, SimilarityError};
use crate::slicing::SlicedView;
use crate::unsupervised::SnapshotPair;

pub use forest::{ForestParams, RandomForest};
pub use logistic::{LogisticParams, LogisticRegression};
pub use naive_bayes::{GaussianNaiveBayes, NaiveBayesParams};
pub use tree::{DecisionTree, TreeParams};

/// Version of the fitted-model JSON document.
pub const MODEL_FORMAT_VERSION: u32 = 1;
pub const DEFAULT_FOLDS: usize = 10;
pub const DECISION_THRESHOLD: f64 = 0.5;

#[derive(Debug, Error, PartialEq)]
pub enum SupervisedError {
    #[error("fold {fold} out of range for {k_folds} folds")]
    FoldOutOfRange { fold: usize, k_folds: usize },
    #[error("need {needed} training negatives but only {available} are available")]
    InsufficientNegatives { needed: usize, available: usize },
    #[error("training set has a single class")]
    SingleClassTrainingSet,
    #[error("feature vector of {0:?} is not finite and non-negative")]
    NonFiniteFeature(NodePair),
    #[error("at least two folds are required")]
    TooFewFolds,
    #[error(transparent)]
    Similarity(#[from] SimilarityError),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LabeledExample {
    pub pair: NodePair,
    /// CN, JC, AA, RA under the view's slice.
    pub features: Features,
    pub positive: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct FoldPlan {
    pub k_folds: usize,
    /// Downsample training negatives to the number of training positives.
    pub undersample: bool,
    pub seed: u64,
}

impl Default for FoldPlan {
    fn default() -> Self {
        Self { k_folds: DEFAULT_FOLDS, undersample: true, seed: 0 }
    }
}

impl FoldPlan {
    /// Fold of a negative pair; a pure function of the pair and the seed.
    pub fn fold_of(&self, pair: NodePair) -> usize {
        let key = (u64::from(pair.lo.0) << 32) | u64::from(pair.hi.0);
        (derive_seed(self.seed, key) % self.k_folds as u64) as usize
    }

    fn check(&self, fold: usize) -> Result<(), SupervisedError> {
        if self.k_folds < 2 {
            return Err(SupervisedError::TooFewFolds);
        }
        if fold >= self.k_folds {
            return Err(SupervisedError::FoldOutOfRange { fold, k_folds: self.k_folds });
        }
        Ok(())
    }
}

fn is_negative(pair: NodePair, snapshots: &SnapshotPair) -> bool {
    !snapshots.e_old().contains(&pair) && !snapshots.e_new().contains(&pair)
}

fn all_negatives<'a>(egos: &'a [NodeId], snapshots: &'a SnapshotPair) -> impl Iterator<Item = NodePair> + 'a {
    egos.iter().enumerate().flat_map(move |(a, &i)| {
        egos[a + 1..].iter().map(move |&j| NodePair::new(i, j)).filter(move |&p| is_negative(p, snapshots))
    })
}

/// Training pairs of `fold`: old links, then negatives from the other folds.
///
/// With undersampling the negatives are drawn by rejection sampling, so the
/// cost grows with the number of old links rather than the number of ego
/// pairs. Small pools fall back to exhaustive enumeration.
pub fn training_pairs(
    egos: &[NodeId],
    snapshots: &SnapshotPair,
    plan: &FoldPlan,
    fold: usize,
) -> Result<(Vec<NodePair>, Vec<NodePair>), SupervisedError> {
    plan.check(fold)?;
    let positives: Vec<NodePair> = snapshots.e_old().iter().copied().collect();
    if !plan.undersample {
        let negatives = all_negatives(egos, snapshots).filter(|&p| plan.fold_of(p) != fold).collect();
        return Ok((positives, negatives));
    }

    let needed = positives.len();
    let n = egos.len();
    let pairs = n * n.saturating_sub(1) / 2;
    let approx_pool = pairs.saturating_sub(snapshots.e_old().len() + snapshots.e_new().len());
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(plan.seed, fold as u64 + 1));

    if n >= 2 && needed * 4 <= approx_pool * (plan.k_folds - 1) / plan.k_folds {
        let mut chosen = BTreeSet::new();
        let mut order = Vec::with_capacity(needed);
        let max_draws = 1_000 * needed + 10_000;
        for _ in 0..max_draws {
            if order.len() == needed {
                break;
            }
            let a = rng.random_range(0..n);
            let b = rng.random_range(0..n);
            if a == b {
                continue;
            }
            let p = NodePair::new(egos[a], egos[b]);
            if is_negative(p, snapshots) && plan.fold_of(p) != fold && chosen.insert(p) {
                order.push(p);
            }
        }
        if order.len() == needed {
            order.sort_unstable();
            return Ok((positives, order));
        }
    }

    let outside: Vec<NodePair> = all_negatives(egos, snapshots).filter(|&p| plan.fold_of(p) != fold).collect();
    if outside.len() < needed {
        return Err(SupervisedError::InsufficientNegatives { needed, available: outside.len() });
    }
    let mut negatives = outside.into_iter().choose_multiple(&mut rng, needed);
    negatives.sort_unstable();
    Ok((positives, negatives))
}

/// Test pairs of `fold`: new links, then the fold's negatives.
pub fn test_pairs(
    egos: &[NodeId],
    snapshots: &SnapshotPair,
    plan: &FoldPlan,
    fold: usize,
) -> Result<(Vec<NodePair>, Vec<NodePair>), SupervisedError> {
    plan.check(fold)?;
    let positives = snapshots.e_new().iter().copied().collect();
    let negatives = all_negatives(egos, snapshots).filter(|&p| plan.fold_of(p) == fold).collect();
    Ok((positives, negatives))
}

/// Computes features for labeled pairs in parallel, preserving order.
pub fn label_pairs(
    view: &SlicedView<'_>,
    sim: &Similarity,
    positives: &[NodePair],
    negatives: &[NodePair],
) -> Result<Vec<LabeledExample>, SupervisedError> {
    let labeled: Vec<(NodePair, bool)> =
        positives.iter().map(|&p| (p, true)).chain(negatives.iter().map(|&p| (p, false))).collect();
    labeled
        .par_iter()
        .map(|&(pair, positive)| {
            let features = sim.features(view, pair.lo, pair.hi)?;
            Ok(LabeledExample { pair, features, positive })
        })
        .collect()
}

pub fn build_dataset(
    view: &SlicedView<'_>,
    sim: &Similarity,
    snapshots: &SnapshotPair,
    plan: &FoldPlan,
    fold: usize,
) -> Result<(Vec<LabeledExample>, Vec<LabeledExample>), SupervisedError> {
    let (tp, tn) = training_pairs(view.egos(), snapshots, plan, fold)?;
    let (sp, sn) = test_pairs(view.egos(), snapshots, plan, fold)?;
    Ok((label_pairs(view, sim, &tp, &tn)?, label_pairs(view, sim, &sp, &sn)?))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "params")]
pub enum Learner {
    LogisticRegression(LogisticParams),
    GaussianNaiveBayes(NaiveBayesParams),
    DecisionTree(TreeParams),
    RandomForest(ForestParams),
}

impl Learner {
    pub const MANDATORY: [Learner; 3] = [
        Learner::LogisticRegression(LogisticParams::DEFAULT),
        Learner::GaussianNaiveBayes(NaiveBayesParams::DEFAULT),
        Learner::DecisionTree(TreeParams::DEFAULT),
    ];

    pub fn short_name(&self) -> &'static str {
        match self {
            Learner::LogisticRegression(_) => "LR",
            Learner::GaussianNaiveBayes(_) => "GNB",
            Learner::DecisionTree(_) => "DT",
            Learner::RandomForest(_) => "RF",
        }
    }
}

impl fmt::Display for Learner {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.short_name())
    }
}

impl FromStr for Learner {
    type Err = String;

    /// Parses a short name with default hyperparameters.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_uppercase().as_str() {
            "LR" | "LOGISTICREGRESSION" => Ok(Learner::LogisticRegression(LogisticParams::DEFAULT)),
            "GNB" | "NB" | "GAUSSIANNAIVEBAYES" => Ok(Learner::GaussianNaiveBayes(NaiveBayesParams::DEFAULT)),
            "DT" | "DECISIONTREE" => Ok(Learner::DecisionTree(TreeParams::DEFAULT)),
            "RF" | "RANDOMFOREST" => Ok(Learner::RandomForest(ForestParams::DEFAULT)),
            _ => Err(format!("unknown learner {s:?} (expected LR, GNB, DT or RF)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "model")]
pub enum Model {
    LogisticRegression(LogisticRegression),
    GaussianNaiveBayes(GaussianNaiveBayes),
    DecisionTree(DecisionTree),
    RandomForest(RandomForest),
}

/// Immutable fitted model with the learner that produced it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FittedModel {
    pub format_version: u32,
    pub learner: Learner,
    pub seed: u64,
    pub model: Model,
}

impl FittedModel {
    /// Probability that the pair is a link.
    pub fn predict_proba(&self, x: &Features) -> f64 {
        match &self.model {
            Model::LogisticRegression(m) => m.predict_proba(x),
            Model::GaussianNaiveBayes(m) => m.predict_proba(x),
            Model::DecisionTree(m) => m.predict_proba(x),
            Model::RandomForest(m) => m.predict_proba(x),
        }
    }

    pub fn predict(&self, x: &Features) -> bool {
        self.predict_proba(x) >= DECISION_THRESHOLD
    }

    pub fn to_json(&self) -> serde_json::Result<String> {
        serde_json::to_string_pretty(self)
    }

    pub fn from_json(s: &str) -> serde_json::Result<Self> {
        serde_json::from_str(s)
    }
}

pub(crate) fn split_xy(train: &[LabeledExample]) -> Result<(Vec<Features>, Vec<bool>), SupervisedError> {
    for ex in train {
        if ex.features.iter().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(SupervisedError::NonFiniteFeature(ex.pair));
        }
    }
    let pos = train.iter().filter(|e| e.positive).count();
    if pos == 0 || pos == train.len() {
        return Err(SupervisedError::SingleClassTrainingSet);
    }
    Ok((train.iter().map(|e| e.features).collect(), train.iter().map(|e| e.positive).collect()))
}

pub fn fit(learner: &Learner, train: &[LabeledExample], seed: u64) -> Result<FittedModel, SupervisedError> {
    let (x, y) = split_xy(train)?;
    let model = match learner {
        Learner::LogisticRegression(p) => Model::LogisticRegression(LogisticRegression::fit(&x, &y, p)),
        Learner::GaussianNaiveBayes(p) => Model::GaussianNaiveBayes(GaussianNaiveBayes::fit(&x, &y, p)),
        Learner::DecisionTree(p) => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            Model::DecisionTree(DecisionTree::fit(&x, &y, p, None, &mut rng))
        }
        Learner::RandomForest(p) => Model::RandomForest(RandomForest::fit(&x, &y, p, seed)),
    };
    Ok(FittedModel { format_version: MODEL_FORMAT_VERSION, learner: *learner, seed, model })
}

/// Confusion of thresholded predictions on `test`.
pub fn predict_fold(model: &FittedModel, test: &[LabeledExample]) -> Confusion {
    let mut c = Confusion::default();
    for ex in test {
        match (model.predict(&ex.features), ex.positive) {
            (true, true) => c.tp += 1,
            (true, false) => c.fp += 1,
            (false, true) => c.fn_ += 1,
            (false, false) => c.tn += 1,
        }
    }
    c
}

/// Runs every fold in parallel and returns the per-fold confusions in fold
/// order.
pub fn cross_validate(
    view: &SlicedView<'_>,
    sim: &Similarity,
    snapshots: &SnapshotPair,
    plan: &FoldPlan,
    learner: &Learner,
) -> Result<Vec<Confusion>, SupervisedError> {
    view.warm().map_err(SimilarityError::from)?;
    (0..plan.k_folds)
        .into_par_iter()
        .map(|fold| {
            let (train, test) = build_dataset(view, sim, snapshots, plan, fold)?;
            let model = fit(learner, &train, derive_seed(plan.seed, 1_000 + fold as u64))?;
            Ok(predict_fold(&model, &test))
        })
        .collect()
}
