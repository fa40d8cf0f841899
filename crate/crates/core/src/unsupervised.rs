//! Top-K link prediction between egos and its evaluation against a later
//! snapshot.

use std::cmp::Ordering;
use std::collections::{BTreeSet, BinaryHeap};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::evalstats::Confusion;
use crate::graph::{InteractionGraph, NodeId, NodePair};
use crate::similarity::{Similarity, SimilarityError, SimilarityKind};
use crate::slicing::{SliceSpec, SlicedView};

#[derive(Debug, Error, PartialEq)]
pub enum PredictError {
    #[error("no candidate pairs left after removing existing links")]
    EmptyCandidatePool,
    #[error("k must be at least 1")]
    InvalidK,
    #[error("no positive pairs to evaluate against")]
    NoPositives,
    #[error("pair {0:?} is both an old and a new link")]
    OverlappingSnapshots(NodePair),
    #[error("predictions and snapshots disagree on the ego set: {0}")]
    MismatchedEgoSets(String),
    #[error(transparent)]
    Similarity(#[from] SimilarityError),
}

/// Ego-ego links of the first snapshot and those that appear by the second.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SnapshotPair {
    e_old: BTreeSet<NodePair>,
    e_new: BTreeSet<NodePair>,
}

impl SnapshotPair {
    pub fn new(e_old: BTreeSet<NodePair>, e_new: BTreeSet<NodePair>) -> Result<Self, PredictError> {
        if let Some(p) = e_old.intersection(&e_new).next() {
            return Err(PredictError::OverlappingSnapshots(*p));
        }
        Ok(Self { e_old, e_new })
    }

    /// Takes `e_old` from the base graph's links among `egos` and `e_new` from
    /// `later` minus `e_old`, keeping only pairs of egos.
    pub fn from_graph(
        graph: &InteractionGraph,
        egos: &[NodeId],
        later: impl IntoIterator<Item = NodePair>,
    ) -> Self {
        let ego_set: BTreeSet<NodeId> = egos.iter().copied().collect();
        let mut e_old = BTreeSet::new();
        for &i in &ego_set {
            if let Ok(row) = graph.neighborhood(i) {
                for &j in row {
                    if i < j && ego_set.contains(&j) {
                        e_old.insert(NodePair::new(i, j));
                    }
                }
            }
        }
        let e_new = later
            .into_iter()
            .filter(|p| p.lo != p.hi && ego_set.contains(&p.lo) && ego_set.contains(&p.hi))
            .filter(|p| !e_old.contains(p))
            .collect();
        Self { e_old, e_new }
    }

    pub fn e_old(&self) -> &BTreeSet<NodePair> {
        &self.e_old
    }

    pub fn e_new(&self) -> &BTreeSet<NodePair> {
        &self.e_new
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RankedPredictions {
    pub spec: SliceSpec,
    pub kind: SimilarityKind,
    pub k: usize,
    /// Best first: score descending, then pair ascending.
    pub entries: Vec<(NodePair, f64)>,
    /// Set when the candidate pool held fewer than `k` pairs.
    pub truncated: bool,
}

impl RankedPredictions {
    pub fn pairs(&self) -> impl Iterator<Item = NodePair> + '_ {
        self.entries.iter().map(|e| e.0)
    }
}

/// Ranking order: higher score first, ties by ascending pair.
#[derive(Debug, Clone, Copy)]
struct Ranked(f64, NodePair);

impl Ord for Ranked {
    fn cmp(&self, other: &Self) -> Ordering {
        other.0.total_cmp(&self.0).then(self.1.cmp(&other.1))
    }
}

impl PartialOrd for Ranked {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl PartialEq for Ranked {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Ranked {}

/// Keeps the `k` best entries seen so far; the heap top is the worst kept.
struct TopK {
    k: usize,
    heap: BinaryHeap<Ranked>,
}

impl TopK {
    fn new(k: usize) -> Self {
        Self { k, heap: BinaryHeap::with_capacity(k.min(1 << 16) + 1) }
    }

    fn push(&mut self, r: Ranked) {
        if self.heap.len() < self.k {
            self.heap.push(r);
        } else if let Some(worst) = self.heap.peek() {
            if r < *worst {
                self.heap.pop();
                self.heap.push(r);
            }
        }
    }

    fn merge(mut self, other: TopK) -> TopK {
        for r in other.heap {
            self.push(r);
        }
        self
    }

    fn into_sorted(self) -> Vec<(NodePair, f64)> {
        self.heap.into_sorted_vec().into_iter().map(|r| (r.1, r.0)).collect()
    }
}

/// The `k` best of `scored` under the ranking order.
pub fn select_top_k(scored: impl IntoIterator<Item = (NodePair, f64)>, k: usize) -> Vec<(NodePair, f64)> {
    let mut top = TopK::new(k);
    for (p, s) in scored {
        top.push(Ranked(s, p));
    }
    top.into_sorted()
}

/// Number of candidate pairs: unordered ego pairs minus old links.
pub fn pool_size(n_egos: usize, snapshots: &SnapshotPair) -> usize {
    (n_egos * n_egos.saturating_sub(1) / 2).saturating_sub(snapshots.e_old.len())
}

/// Rows of the upper triangle, visited in parallel.
fn for_each_candidate<T, F>(
    view: &SlicedView<'_>,
    snapshots: &SnapshotPair,
    init: impl Fn() -> T + Sync + Send,
    visit: F,
) -> Result<Vec<T>, PredictError>
where
    T: Send,
    F: Fn(&mut T, NodePair) -> Result<(), PredictError> + Sync + Send,
{
    let egos = view.egos();
    (0..egos.len())
        .into_par_iter()
        .map(|a| {
            let mut acc = init();
            for &j in &egos[a + 1..] {
                let pair = NodePair::new(egos[a], j);
                if !snapshots.e_old.contains(&pair) {
                    visit(&mut acc, pair)?;
                }
            }
            Ok(acc)
        })
        .collect()
}

/// Scores every candidate pair of the view.
pub fn score_pool(
    view: &SlicedView<'_>,
    sim: &Similarity,
    kind: SimilarityKind,
    snapshots: &SnapshotPair,
) -> Result<Vec<(NodePair, f64)>, PredictError> {
    view.warm().map_err(SimilarityError::from)?;
    let rows = for_each_candidate(view, snapshots, Vec::new, |row, pair| {
        row.push((pair, sim.score(view, kind, pair.lo, pair.hi)?));
        Ok(())
    })?;
    Ok(rows.into_iter().flatten().collect())
}

/// Recommends the `k` candidate pairs with the highest similarity. When fewer
/// than `k` pairs score above zero, zero-score pairs fill the list in pair
/// order.
pub fn rank_candidates(
    view: &SlicedView<'_>,
    sim: &Similarity,
    kind: SimilarityKind,
    snapshots: &SnapshotPair,
    k: usize,
) -> Result<RankedPredictions, PredictError> {
    if k == 0 {
        return Err(PredictError::InvalidK);
    }
    let pool = pool_size(view.egos().len(), snapshots);
    if pool == 0 {
        return Err(PredictError::EmptyCandidatePool);
    }
    view.warm().map_err(SimilarityError::from)?;
    let tops = for_each_candidate(
        view,
        snapshots,
        || TopK::new(k),
        |top, pair| {
            top.push(Ranked(sim.score(view, kind, pair.lo, pair.hi)?, pair));
            Ok(())
        },
    )?;
    let top = tops.into_iter().fold(TopK::new(k), TopK::merge);
    Ok(RankedPredictions { spec: view.spec(), kind, k, entries: top.into_sorted(), truncated: k > pool })
}

/// Confusion counts of a top-K list; negatives are the candidate pairs that
/// were neither predicted nor new.
pub fn confusion(
    preds: &RankedPredictions,
    snapshots: &SnapshotPair,
    n_egos: usize,
) -> Result<Confusion, PredictError> {
    let listed: BTreeSet<NodePair> = preds.pairs().collect();
    if listed.len() != preds.entries.len() {
        return Err(PredictError::MismatchedEgoSets("duplicate predicted pair".into()));
    }
    if let Some(p) = listed.intersection(&snapshots.e_old).next() {
        return Err(PredictError::MismatchedEgoSets(format!("predicted pair {p:?} is an old link")));
    }
    let tp = listed.intersection(&snapshots.e_new).count();
    let fp = listed.len() - tp;
    let fn_ = snapshots.e_new.len() - tp;
    let union = listed.len() + snapshots.e_new.len() - tp;
    let pool = pool_size(n_egos, snapshots);
    if union > pool {
        return Err(PredictError::MismatchedEgoSets(format!(
            "{union} predicted or new pairs exceed the {pool} candidates among {n_egos} egos"
        )));
    }
    Ok(Confusion::new(tp as u64, fp as u64, fn_ as u64, (pool - union) as u64))
}

/// Area under the precision-recall curve from a threshold sweep over scored
/// candidates. Points with zero recall are dropped and the curve starts at
/// recall 0 with the precision of the first retained point.
pub fn pr_auc_from_scores(scored: &[(NodePair, f64)], positives: &BTreeSet<NodePair>) -> Result<f64, PredictError> {
    if positives.is_empty() {
        return Err(PredictError::NoPositives);
    }
    let mut sorted: Vec<(f64, bool)> = scored.iter().map(|(p, s)| (*s, positives.contains(p))).collect();
    sorted.sort_by(|a, b| b.0.total_cmp(&a.0));
    let total = positives.len() as f64;
    let mut points: Vec<(f64, f64)> = Vec::new();
    let (mut tp, mut seen) = (0usize, 0usize);
    let mut i = 0;
    while i < sorted.len() {
        let s = sorted[i].0;
        while i < sorted.len() && sorted[i].0 == s {
            tp += usize::from(sorted[i].1);
            seen += 1;
            i += 1;
        }
        if tp > 0 {
            points.push((tp as f64 / total, tp as f64 / seen as f64));
        }
    }
    let Some(&(_, first_precision)) = points.first() else {
        return Ok(0.0);
    };
    let mut area = 0.0;
    let mut prev = (0.0, first_precision);
    for &(r, p) in &points {
        area += (r - prev.0) * (p + prev.1) / 2.0;
        prev = (r, p);
    }
    Ok(area.clamp(0.0, 1.0))
}

/// PR-curve AUC of `kind` on the view, with `e_new` as positives.
pub fn pr_curve_auc(
    view: &SlicedView<'_>,
    sim: &Similarity,
    kind: SimilarityKind,
    snapshots: &SnapshotPair,
) -> Result<f64, PredictError> {
    if snapshots.e_new.is_empty() {
        return Err(PredictError::NoPositives);
    }
    let scored = score_pool(view, sim, kind, snapshots)?;
    pr_auc_from_scores(&scored, &snapshots.e_new)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn pair(a: u32, b: u32) -> NodePair {
        NodePair::new(NodeId(a), NodeId(b))
    }

    fn preds(entries: Vec<(NodePair, f64)>) -> RankedPredictions {
        RankedPredictions {
            spec: SliceSpec::BASELINE,
            kind: SimilarityKind::ResourceAllocation,
            k: entries.len(),
            entries,
            truncated: false,
        }
    }

    #[test]
    fn ties_break_by_pair_order() {
        let top = select_top_k(vec![(pair(2, 3), 1.0), (pair(0, 5), 1.0), (pair(1, 4), 2.0), (pair(0, 1), 0.0)], 3);
        assert_eq!(top, vec![(pair(1, 4), 2.0), (pair(0, 5), 1.0), (pair(2, 3), 1.0)]);
        let all = select_top_k(vec![(pair(0, 1), 0.0), (pair(0, 2), 0.0)], 10);
        assert_eq!(all.len(), 2);
    }

    #[test]
    fn snapshot_rejects_overlap() {
        let old: BTreeSet<_> = [pair(0, 1)].into();
        assert_eq!(SnapshotPair::new(old.clone(), old).unwrap_err(), PredictError::OverlappingSnapshots(pair(0, 1)));
    }

    #[test]
    fn perfect_list_confusion() {
        let snaps = SnapshotPair::new([pair(0, 1)].into(), [pair(2, 3), pair(1, 2)].into()).unwrap();
        let c = confusion(&preds(vec![(pair(1, 2), 3.0), (pair(2, 3), 1.0)]), &snaps, 4).unwrap();
        assert_eq!(c, Confusion::new(2, 0, 0, 3));

        let miss = confusion(&preds(vec![(pair(0, 2), 3.0), (pair(0, 3), 1.0)]), &snaps, 4).unwrap();
        assert_eq!((miss.tp, miss.fp, miss.fn_, miss.tn), (0, 2, 2, 1));

        let bad = confusion(&preds(vec![(pair(0, 1), 3.0)]), &snaps, 4);
        assert!(matches!(bad, Err(PredictError::MismatchedEgoSets(_))));
        let too_small = confusion(&preds(vec![(pair(0, 7), 3.0)]), &snaps, 2);
        assert!(matches!(too_small, Err(PredictError::MismatchedEgoSets(_))));
    }

    #[test]
    fn auc_conventions() {
        let positives: BTreeSet<_> = [pair(0, 1), pair(0, 2)].into();
        let perfect = vec![(pair(0, 1), 3.0), (pair(0, 2), 2.0), (pair(1, 2), 1.0), (pair(1, 3), 0.5)];
        assert!((pr_auc_from_scores(&perfect, &positives).unwrap() - 1.0).abs() < 1e-15);

        let flat: Vec<_> = perfect.iter().map(|(p, _)| (*p, 0.0)).collect();
        assert!((pr_auc_from_scores(&flat, &positives).unwrap() - 0.5).abs() < 1e-15);

        assert_eq!(pr_auc_from_scores(&flat, &BTreeSet::new()), Err(PredictError::NoPositives));
    }

    /// Reference AUC: for every K, take the K best pairs; a point exists only
    /// where the K-th and (K+1)-th scores differ, i.e. at threshold cuts.
    fn exhaustive_k_auc(scored: &[(NodePair, f64)], positives: &BTreeSet<NodePair>) -> f64 {
        let mut ranked = scored.to_vec();
        ranked.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
        let mut curve = Vec::new();
        for k in 1..=ranked.len() {
            if k < ranked.len() && ranked[k].1 == ranked[k - 1].1 {
                continue;
            }
            let tp = ranked[..k].iter().filter(|(p, _)| positives.contains(p)).count();
            if tp > 0 {
                curve.push((tp as f64 / positives.len() as f64, tp as f64 / k as f64));
            }
        }
        let mut xs = vec![0.0];
        let mut ys = vec![curve[0].1];
        for (r, p) in curve {
            xs.push(r);
            ys.push(p);
        }
        (1..xs.len()).map(|i| (xs[i] - xs[i - 1]) * (ys[i] + ys[i - 1]) / 2.0).sum()
    }

    #[test]
    fn auc_matches_exhaustive_k_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..200 {
            let scored: Vec<(NodePair, f64)> =
                (0..30).map(|i| (pair(i, 100), f64::from(rng.random_range(0..6u8)))).collect();
            let positives: BTreeSet<_> = (0..30).filter(|_| rng.random_bool(0.3)).map(|i| pair(i, 100)).collect();
            if positives.is_empty() {
                continue;
            }
            let got = pr_auc_from_scores(&scored, &positives).unwrap();
            let want = exhaustive_k_auc(&scored, &positives);
            assert!((got - want).abs() < 1e-12, "{got} vs {want}");
        }
    }

    proptest! {
        #[test]
        fn monotone_transform_keeps_ranking(
            scores in proptest::collection::vec(0u8..10, 1..40),
            k in 1usize..50,
            newbits in proptest::collection::vec(any::<bool>(), 40),
        ) {
            let scored: Vec<_> = scores.iter().enumerate().map(|(i, &s)| (pair(i as u32, 99), f64::from(s))).collect();
            let doubled: Vec<_> = scored.iter().map(|&(p, s)| (p, 2.0 * s + 1.0)).collect();
            let a = select_top_k(scored.clone(), k);
            let b = select_top_k(doubled, k);
            prop_assert_eq!(a.iter().map(|e| e.0).collect::<Vec<_>>(), b.iter().map(|e| e.0).collect::<Vec<_>>());
            prop_assert!(a.windows(2).all(|w| w[0].1 >= w[1].1));
            prop_assert_eq!(a.len(), k.min(scored.len()));

            let e_new: BTreeSet<_> = scored.iter().zip(&newbits).filter(|(_, &b)| b).map(|((p, _), _)| *p).collect();
            let snaps = SnapshotPair::new(BTreeSet::new(), e_new.clone()).unwrap();
            let c = confusion(&preds(a.clone()), &snaps, 100).unwrap();
            let pool = pool_size(100, &snaps) as u64;
            prop_assert_eq!(c.tp + c.fp, a.len() as u64);
            prop_assert_eq!(c.tp + c.fn_, e_new.len() as u64);
            prop_assert_eq!(c.total(), pool);
        }
    }
}
