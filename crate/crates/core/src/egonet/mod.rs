//! Ego-network extraction: activity filtering, contact frequencies and
//! concentric circles from 1-D mean shift over those frequencies.

pub mod activity;
pub mod frequency;
pub mod meanshift;

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::{GraphError, InteractionGraph, NodeId};

pub use activity::{regularity_filter, stationarity_filter, ActivityFilter, ActivityProfile, MonthActivity};
pub use frequency::{contact_frequencies, contact_frequencies_by_ego, InteractionRecord};

#[derive(Debug, Error, PartialEq)]
pub enum EgonetError {
    #[error("activity profile has no months")]
    EmptyProfile,
    #[error("timestamp {0} is out of range")]
    InvalidTimestamp(i64),
    #[error("record at {timestamp} is after the window end {window_end}")]
    FutureTimestamp { timestamp: i64, window_end: i64 },
    #[error("interaction of {0} with itself")]
    SelfInteraction(NodeId),
    #[error("records mix egos {0} and {1}")]
    MixedEgos(NodeId, NodeId),
    #[error("alter {alter} has invalid frequency {frequency}")]
    InvalidFrequency { alter: NodeId, frequency: f64 },
    #[error("alter {0} listed twice")]
    DuplicateAlter(NodeId),
    #[error("ego {0} has no alter above the active threshold")]
    EmptyEgoNetwork(NodeId),
    #[error(transparent)]
    Graph(#[from] GraphError),
}

/// A slicing level: the k-th concentric circle, the whole active network, or
/// every alter including acquaintances.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum CircleLevel {
    C1,
    C2,
    C3,
    C4,
    C5,
    Active,
    All,
}

impl CircleLevel {
    pub const ALL_LEVELS: [CircleLevel; 7] = [
        CircleLevel::C1,
        CircleLevel::C2,
        CircleLevel::C3,
        CircleLevel::C4,
        CircleLevel::C5,
        CircleLevel::Active,
        CircleLevel::All,
    ];

    pub fn circle_index(self) -> Option<usize> {
        match self {
            CircleLevel::C1 => Some(1),
            CircleLevel::C2 => Some(2),
            CircleLevel::C3 => Some(3),
            CircleLevel::C4 => Some(4),
            CircleLevel::C5 => Some(5),
            CircleLevel::Active | CircleLevel::All => None,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            CircleLevel::C1 => "C1",
            CircleLevel::C2 => "C2",
            CircleLevel::C3 => "C3",
            CircleLevel::C4 => "C4",
            CircleLevel::C5 => "C5",
            CircleLevel::Active => "Active",
            CircleLevel::All => "All",
        }
    }
}

impl fmt::Display for CircleLevel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for CircleLevel {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        CircleLevel::ALL_LEVELS
            .into_iter()
            .find(|l| l.as_str().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| format!("unknown circle level {s:?}"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CircleParams {
    /// Contacts per year below which an alter is an acquaintance.
    pub active_threshold: f64,
    /// Mean-shift window half-width; estimated per ego when absent.
    pub bandwidth: Option<f64>,
    pub bandwidth_quantile: f64,
}

impl Default for CircleParams {
    fn default() -> Self {
        Self { active_threshold: 1.0, bandwidth: None, bandwidth_quantile: meanshift::DEFAULT_QUANTILE }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrequencyCluster {
    pub mean: f64,
    /// `(alter, contacts per year)`, sorted by alter id.
    pub members: Vec<(NodeId, f64)>,
}

/// One ego's alters split into frequency clusters (most intimate first) plus
/// the acquaintances below the active threshold. Circle `k` is the union of
/// clusters `1..=k`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EgoNetwork {
    pub ego: NodeId,
    pub active_threshold: f64,
    pub bandwidth: f64,
    pub clusters: Vec<FrequencyCluster>,
    pub acquaintances: Vec<(NodeId, f64)>,
}

impl EgoNetwork {
    pub fn optimal_circle_count(&self) -> usize {
        self.clusters.len()
    }

    /// Members of circle `k` (1-based, clamped to the outermost circle).
    pub fn circle(&self, k: usize) -> Vec<NodeId> {
        let k = k.clamp(1, self.clusters.len());
        let mut out: Vec<NodeId> =
            self.clusters[..k].iter().flat_map(|c| c.members.iter().map(|m| m.0)).collect();
        out.sort_unstable();
        out
    }

    pub fn active(&self) -> Vec<NodeId> {
        self.circle(self.clusters.len())
    }

    pub fn alter_count(&self) -> usize {
        self.clusters.iter().map(|c| c.members.len()).sum::<usize>() + self.acquaintances.len()
    }

    /// Sorted members of the requested level. Levels past the ego's last
    /// circle fall back to that circle.
    pub fn circle_members(&self, level: CircleLevel) -> Vec<NodeId> {
        match level {
            CircleLevel::Active => self.active(),
            CircleLevel::All => {
                let mut out = self.active();
                out.extend(self.acquaintances.iter().map(|a| a.0));
                out.sort_unstable();
                out
            }
            level => self.circle(level.circle_index().unwrap()),
        }
    }
}

/// Groups an ego's contact frequencies into concentric circles.
///
/// The result does not depend on the order of `freqs`.
pub fn cluster_circles(
    ego: NodeId,
    freqs: &[(NodeId, f64)],
    params: &CircleParams,
) -> Result<EgoNetwork, EgonetError> {
    let mut sorted = freqs.to_vec();
    sorted.sort_by(|a, b| a.0.cmp(&b.0));
    for w in sorted.windows(2) {
        if w[0].0 == w[1].0 {
            return Err(EgonetError::DuplicateAlter(w[0].0));
        }
    }
    for &(alter, f) in &sorted {
        if !(f >= 0.0) || !f.is_finite() {
            return Err(EgonetError::InvalidFrequency { alter, frequency: f });
        }
    }
    let (active, acquaintances): (Vec<_>, Vec<_>) =
        sorted.into_iter().partition(|&(_, f)| f >= params.active_threshold);
    if active.is_empty() {
        return Err(EgonetError::EmptyEgoNetwork(ego));
    }

    let values: Vec<f64> = active.iter().map(|a| a.1).collect();
    let bandwidth = params
        .bandwidth
        .unwrap_or_else(|| meanshift::estimate_bandwidth(&values, params.bandwidth_quantile));
    let clustering = meanshift::mean_shift(&values, bandwidth);

    let mut clusters: Vec<FrequencyCluster> = (0..clustering.cluster_count())
        .map(|_| FrequencyCluster { mean: 0.0, members: Vec::new() })
        .collect();
    for (&label, &member) in clustering.labels.iter().zip(&active) {
        clusters[label].members.push(member);
    }
    for c in &mut clusters {
        c.mean = c.members.iter().map(|m| m.1).sum::<f64>() / c.members.len() as f64;
    }
    // Mean-shift labels ascend with the mode; circles run from most frequent.
    clusters.reverse();

    Ok(EgoNetwork { ego, active_threshold: params.active_threshold, bandwidth, clusters, acquaintances })
}

/// Builds the ego network of `ego` from its edge weights in `graph`.
pub fn extract_ego_network(
    graph: &InteractionGraph,
    ego: NodeId,
    params: &CircleParams,
) -> Result<EgoNetwork, EgonetError> {
    let freqs: Vec<(NodeId, f64)> = graph.weighted_neighbors(ego)?.collect();
    cluster_circles(ego, &freqs, params)
}

/// Extracts every ego-class node in parallel. Egos that fail (typically with
/// [`EgonetError::EmptyEgoNetwork`]) are returned separately so the caller
/// can drop them.
pub fn extract_all(
    graph: &InteractionGraph,
    params: &CircleParams,
) -> (BTreeMap<NodeId, EgoNetwork>, Vec<(NodeId, EgonetError)>) {
    let egos: Vec<NodeId> = graph.egos().collect();
    let results: Vec<(NodeId, Result<EgoNetwork, EgonetError>)> = egos
        .par_iter()
        .map(|&e| (e, extract_ego_network(graph, e, params)))
        .collect();
    let mut ok = BTreeMap::new();
    let mut failed = Vec::new();
    for (e, r) in results {
        match r {
            Ok(en) => {
                ok.insert(e, en);
            }
            Err(err) => failed.push((e, err)),
        }
    }
    (ok, failed)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn freqs(values: &[f64]) -> Vec<(NodeId, f64)> {
        values.iter().enumerate().map(|(i, &f)| (NodeId(i as u32 + 1), f)).collect()
    }

    fn params(bandwidth: Option<f64>) -> CircleParams {
        CircleParams { bandwidth, ..CircleParams::default() }
    }

    #[test]
    fn equal_frequencies_form_one_circle() {
        let en = cluster_circles(NodeId(0), &freqs(&[10.0; 5]), &params(None)).unwrap();
        assert_eq!(en.optimal_circle_count(), 1);
        assert_eq!(en.circle(1).len(), 5);
        assert_eq!(en.circle_members(CircleLevel::C5), en.active());
    }

    #[test]
    fn six_point_example() {
        let en = cluster_circles(
            NodeId(0),
            &freqs(&[52.0, 50.0, 12.0, 11.0, 1.2, 1.1]),
            &params(Some(3.0)),
        )
        .unwrap();
        assert_eq!(en.optimal_circle_count(), 3);
        assert_eq!(en.circle(1), vec![NodeId(1), NodeId(2)]);
        assert_eq!(en.circle(2).len(), 4);
        assert_eq!(en.circle(3).len(), 6);
        assert!((en.clusters[0].mean - 51.0).abs() < 1e-12);
    }

    #[test]
    fn below_threshold_only_is_empty() {
        assert_eq!(
            cluster_circles(NodeId(0), &freqs(&[0.5, 0.2]), &params(None)),
            Err(EgonetError::EmptyEgoNetwork(NodeId(0)))
        );
    }

    #[test]
    fn invalid_input_is_rejected() {
        assert!(matches!(
            cluster_circles(NodeId(0), &freqs(&[2.0, -1.0]), &params(None)),
            Err(EgonetError::InvalidFrequency { .. })
        ));
        let dup = vec![(NodeId(1), 2.0), (NodeId(1), 3.0)];
        assert_eq!(
            cluster_circles(NodeId(0), &dup, &params(None)),
            Err(EgonetError::DuplicateAlter(NodeId(1)))
        );
    }

    #[test]
    fn levels_beyond_last_circle_clamp() {
        let en = cluster_circles(
            NodeId(0),
            &freqs(&[52.0, 50.0, 12.0, 11.0, 1.2, 1.1, 0.3]),
            &params(Some(3.0)),
        )
        .unwrap();
        assert_eq!(en.circle_members(CircleLevel::C5), en.circle(3));
        assert_eq!(en.circle_members(CircleLevel::C4), en.circle(3));
        let all = en.circle_members(CircleLevel::All);
        assert_eq!(all.len(), 7);
        assert!(all.contains(&NodeId(7)));
        assert!(!en.active().contains(&NodeId(7)));
    }

    #[test]
    fn active_is_union_of_seven_clusters() {
        // Seven well-separated levels with bandwidth 1.
        let values = [100.0, 80.0, 60.0, 40.0, 20.0, 10.0, 5.0];
        let en = cluster_circles(NodeId(0), &freqs(&values), &params(Some(1.0))).unwrap();
        assert_eq!(en.optimal_circle_count(), 7);
        let mut union: Vec<NodeId> =
            en.clusters.iter().flat_map(|c| c.members.iter().map(|m| m.0)).collect();
        union.sort();
        assert_eq!(en.circle_members(CircleLevel::Active), union);
        assert_eq!(en.circle_members(CircleLevel::C5).len(), 5);
    }

    fn random_freqs(seed: u64) -> Vec<(NodeId, f64)> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = rng.random_range(1..60);
        (0..n).map(|i| (NodeId(i + 1), rng.random_range(0.05..60.0))).collect()
    }

    proptest! {
        #[test]
        fn concentric_and_threshold_respected(seed in 0u64..10_000) {
            let f = random_freqs(seed);
            let Ok(en) = cluster_circles(NodeId(0), &f, &params(None)) else { return Ok(()); };
            let levels = CircleLevel::ALL_LEVELS;
            for w in levels.windows(2) {
                let inner = en.circle_members(w[0]);
                let outer = en.circle_members(w[1]);
                prop_assert!(inner.iter().all(|v| outer.binary_search(v).is_ok()));
            }
            for c in &en.clusters {
                prop_assert!(c.members.iter().all(|m| m.1 >= en.active_threshold));
            }
            prop_assert!(en.acquaintances.iter().all(|a| a.1 < en.active_threshold));
            prop_assert_eq!(en.alter_count(), f.len());
            prop_assert!(en.clusters.windows(2).all(|w| w[0].mean > w[1].mean));
        }

        #[test]
        fn permutation_invariant(seed in 0u64..10_000) {
            let f = random_freqs(seed);
            let mut g = f.clone();
            g.reverse();
            let k = g.len() / 3;
            g.rotate_left(k);
            prop_assert_eq!(cluster_circles(NodeId(0), &f, &params(None)),
                            cluster_circles(NodeId(0), &g, &params(None)));
        }

        #[test]
        fn membership_scale_invariant(seed in 0u64..10_000, c in 0.1f64..50.0, h in 0.5f64..10.0) {
            let f: Vec<_> = random_freqs(seed).into_iter().map(|(a, v)| (a, v + 1.0)).collect();
            let scaled: Vec<_> = f.iter().map(|&(a, v)| (a, v * c)).collect();
            let p = CircleParams { active_threshold: 0.0, ..params(Some(h)) };
            let q = CircleParams { active_threshold: 0.0, ..params(Some(h * c)) };
            let a = cluster_circles(NodeId(0), &f, &p).unwrap();
            let b = cluster_circles(NodeId(0), &scaled, &q).unwrap();
            prop_assert_eq!(a.optimal_circle_count(), b.optimal_circle_count());
            for k in 1..=a.optimal_circle_count() {
                prop_assert_eq!(a.circle(k), b.circle(k));
            }
        }
    }

    #[test]
    fn planted_layers_are_recovered() {
        // Clusters of 1-2, 5, 15, 50 alters; means 4x bandwidth apart or more.
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..50 {
            let sizes = [rng.random_range(1..=2), 5, 15, 50];
            let means = [100.0, 60.0, 30.0, 10.0];
            let mut f = Vec::new();
            let mut truth = Vec::new();
            for (k, (&s, &m)) in sizes.iter().zip(&means).enumerate() {
                for _ in 0..s {
                    let id = NodeId(f.len() as u32 + 1);
                    f.push((id, m + rng.random_range(-1.0..1.0)));
                    truth.push(k);
                }
            }
            let en = cluster_circles(NodeId(0), &f, &params(Some(5.0))).unwrap();
            assert_eq!(en.optimal_circle_count(), 4);
            let mut cumulative = 0;
            for (k, &s) in sizes.iter().enumerate() {
                cumulative += s;
                assert_eq!(en.circle(k + 1).len(), cumulative);
            }
        }
    }
}
