//! Immutable weighted interaction graph.
//!
//! Labels are interned to dense `u32` ids in sorted label order, so the same
//! multiset of input edges always produces the same ids and the same
//! adjacency regardless of the order the edges arrive in. Adjacency is stored
//! in CSR form with each row sorted by neighbor id.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Dense node index assigned by [`build_graph`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct NodeId(pub u32);

impl NodeId {
    #[inline]
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "#{}", self.0)
    }
}

/// Unordered node pair stored as `(min, max)`; ordering is lexicographic.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct NodePair {
    pub lo: NodeId,
    pub hi: NodeId,
}

impl NodePair {
    pub fn new(a: NodeId, b: NodeId) -> Self {
        if a <= b {
            Self { lo: a, hi: b }
        } else {
            Self { lo: b, hi: a }
        }
    }
}

impl fmt::Display for NodePair {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.lo, self.hi)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NodeClass {
    Ego,
    DomainSpecific,
    Generic,
}

impl NodeClass {
    /// Ego and domain-specific nodes survive the domain filter.
    #[inline]
    pub fn is_domain(self) -> bool {
        matches!(self, NodeClass::Ego | NodeClass::DomainSpecific)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            NodeClass::Ego => "ego",
            NodeClass::DomainSpecific => "domain",
            NodeClass::Generic => "generic",
        }
    }
}

impl fmt::Display for NodeClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for NodeClass {
    type Err = GraphError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "ego" => Ok(NodeClass::Ego),
            "domain" | "domain_specific" | "domainspecific" => Ok(NodeClass::DomainSpecific),
            "generic" => Ok(NodeClass::Generic),
            other => Err(GraphError::UnknownClass(other.to_owned())),
        }
    }
}

/// One undirected interaction edge; `weight` is contacts per year.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightedEdge {
    pub src: String,
    pub dst: String,
    pub weight: f64,
}

impl WeightedEdge {
    pub fn new(src: impl Into<String>, dst: impl Into<String>, weight: f64) -> Self {
        Self { src: src.into(), dst: dst.into(), weight }
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum GraphError {
    #[error("edge {src} -- {dst} has invalid weight {weight}")]
    NegativeWeight { src: String, dst: String, weight: f64 },
    #[error("self-loop on {0}")]
    SelfLoop(String),
    #[error("empty node label")]
    EmptyLabel,
    #[error("unknown node {0}")]
    UnknownNode(NodeId),
    #[error("unknown node label {0:?}")]
    UnknownLabel(String),
    #[error("unknown node class {0:?} (expected ego, domain or generic)")]
    UnknownClass(String),
}

#[derive(Debug, Clone)]
pub struct InteractionGraph {
    labels: Vec<String>,
    index: HashMap<String, NodeId>,
    classes: Vec<NodeClass>,
    offsets: Vec<usize>,
    neighbors: Vec<NodeId>,
    weights: Vec<f64>,
    edge_count: usize,
}

/// Builds the symmetric base graph.
///
/// Repeated edges between the same pair (in either direction) are merged by
/// summing their weights. Labels that appear in `edges` but not in `classes`
/// become [`NodeClass::Generic`]; labels that appear only in `classes` become
/// isolated nodes.
pub fn build_graph(
    edges: &[WeightedEdge],
    classes: &BTreeMap<String, NodeClass>,
) -> Result<InteractionGraph, GraphError> {
    let mut labels: BTreeSet<&str> = BTreeSet::new();
    for e in edges {
        if e.src.is_empty() || e.dst.is_empty() {
            return Err(GraphError::EmptyLabel);
        }
        if !(e.weight >= 0.0) || !e.weight.is_finite() {
            return Err(GraphError::NegativeWeight {
                src: e.src.clone(),
                dst: e.dst.clone(),
                weight: e.weight,
            });
        }
        if e.src == e.dst {
            return Err(GraphError::SelfLoop(e.src.clone()));
        }
        labels.insert(&e.src);
        labels.insert(&e.dst);
    }
    for label in classes.keys() {
        if label.is_empty() {
            return Err(GraphError::EmptyLabel);
        }
        labels.insert(label);
    }

    let labels: Vec<String> = labels.into_iter().map(str::to_owned).collect();
    let index: HashMap<String, NodeId> = labels
        .iter()
        .enumerate()
        .map(|(i, l)| (l.clone(), NodeId(i as u32)))
        .collect();
    let mut unclassed = 0usize;
    let node_classes: Vec<NodeClass> = labels
        .iter()
        .map(|l| {
            classes.get(l).copied().unwrap_or_else(|| {
                unclassed += 1;
                NodeClass::Generic
            })
        })
        .collect();
    if unclassed > 0 && !classes.is_empty() {
        log::warn!("{unclassed} node(s) without a class entry defaulted to generic");
    }

    // Canonical (lo, hi, w) triples, sorted so duplicate weights are summed in
    // a fixed order and the result is bitwise independent of input order.
    let mut triples: Vec<(u32, u32, f64)> = edges
        .iter()
        .map(|e| {
            let a = index[&e.src].0;
            let b = index[&e.dst].0;
            (a.min(b), a.max(b), e.weight)
        })
        .collect();
    triples.sort_by(|x, y| (x.0, x.1).cmp(&(y.0, y.1)).then(x.2.total_cmp(&y.2)));
    let mut merged: Vec<(u32, u32, f64)> = Vec::with_capacity(triples.len());
    for (a, b, w) in triples {
        match merged.last_mut() {
            Some(last) if last.0 == a && last.1 == b => last.2 += w,
            _ => merged.push((a, b, w)),
        }
    }

    let n = labels.len();
    let mut degree = vec![0usize; n];
    for &(a, b, _) in &merged {
        degree[a as usize] += 1;
        degree[b as usize] += 1;
    }
    let mut offsets = Vec::with_capacity(n + 1);
    offsets.push(0);
    for d in &degree {
        offsets.push(offsets.last().unwrap() + d);
    }
    let total = *offsets.last().unwrap();
    let mut neighbors = vec![NodeId(0); total];
    let mut weights = vec![0.0; total];
    let mut cursor = offsets[..n].to_vec();
    // `merged` is sorted by (lo, hi): row v first receives every x < v in
    // ascending order (as hi), then every y > v in ascending order (as lo).
    for &(a, b, w) in &merged {
        let (ai, bi) = (a as usize, b as usize);
        neighbors[cursor[ai]] = NodeId(b);
        weights[cursor[ai]] = w;
        cursor[ai] += 1;
        neighbors[cursor[bi]] = NodeId(a);
        weights[cursor[bi]] = w;
        cursor[bi] += 1;
    }
    debug_assert!((0..n).all(|v| {
        neighbors[offsets[v]..offsets[v + 1]].windows(2).all(|w| w[0] < w[1])
    }));

    Ok(InteractionGraph {
        labels,
        index,
        classes: node_classes,
        offsets,
        neighbors,
        weights,
        edge_count: merged.len(),
    })
}

impl InteractionGraph {
    pub fn node_count(&self) -> usize {
        self.labels.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edge_count
    }

    pub fn contains(&self, id: NodeId) -> bool {
        id.index() < self.labels.len()
    }

    pub fn nodes(&self) -> impl Iterator<Item = NodeId> + '_ {
        (0..self.labels.len() as u32).map(NodeId)
    }

    /// Ego-class nodes in ascending id order.
    pub fn egos(&self) -> impl Iterator<Item = NodeId> + '_ {
        self.nodes().filter(|&v| self.classes[v.index()] == NodeClass::Ego)
    }

    pub fn label(&self, id: NodeId) -> Result<&str, GraphError> {
        self.labels.get(id.index()).map(String::as_str).ok_or(GraphError::UnknownNode(id))
    }

    pub fn id(&self, label: &str) -> Result<NodeId, GraphError> {
        self.index.get(label).copied().ok_or_else(|| GraphError::UnknownLabel(label.to_owned()))
    }

    pub fn class(&self, id: NodeId) -> Result<NodeClass, GraphError> {
        self.classes.get(id.index()).copied().ok_or(GraphError::UnknownNode(id))
    }

    fn row(&self, id: NodeId) -> Result<std::ops::Range<usize>, GraphError> {
        if !self.contains(id) {
            return Err(GraphError::UnknownNode(id));
        }
        Ok(self.offsets[id.index()]..self.offsets[id.index() + 1])
    }

    /// Γ(i): sorted, duplicate-free neighbor ids.
    pub fn neighborhood(&self, id: NodeId) -> Result<&[NodeId], GraphError> {
        Ok(&self.neighbors[self.row(id)?])
    }

    pub fn degree(&self, id: NodeId) -> Result<usize, GraphError> {
        Ok(self.row(id)?.len())
    }

    /// Neighbors paired with the contact frequency of the connecting edge.
    pub fn weighted_neighbors(
        &self,
        id: NodeId,
    ) -> Result<impl Iterator<Item = (NodeId, f64)> + '_, GraphError> {
        let r = self.row(id)?;
        Ok(self.neighbors[r.clone()].iter().copied().zip(self.weights[r].iter().copied()))
    }

    pub fn weight(&self, a: NodeId, b: NodeId) -> Option<f64> {
        let r = self.row(a).ok()?;
        let row = &self.neighbors[r.clone()];
        row.binary_search(&b).ok().map(|k| self.weights[r.start + k])
    }

    pub fn has_edge(&self, a: NodeId, b: NodeId) -> bool {
        self.weight(a, b).is_some()
    }

    /// Each undirected edge once, as `(lo, hi, weight)` in ascending order.
    pub fn edges(&self) -> impl Iterator<Item = (NodeId, NodeId, f64)> + '_ {
        self.nodes().flat_map(move |a| {
            let r = self.offsets[a.index()]..self.offsets[a.index() + 1];
            self.neighbors[r.clone()]
                .iter()
                .zip(&self.weights[r])
                .filter(move |(b, _)| a < **b)
                .map(move |(&b, &w)| (a, b, w))
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn classes(pairs: &[(&str, NodeClass)]) -> BTreeMap<String, NodeClass> {
        pairs.iter().map(|(l, c)| (l.to_string(), *c)).collect()
    }

    #[test]
    fn minimal_graph() {
        let g = build_graph(
            &[WeightedEdge::new("a", "b", 2.0)],
            &classes(&[("a", NodeClass::Ego), ("b", NodeClass::Ego)]),
        )
        .unwrap();
        assert_eq!(g.node_count(), 2);
        assert_eq!(g.edge_count(), 1);
        let a = g.id("a").unwrap();
        let b = g.id("b").unwrap();
        assert_eq!(g.neighborhood(a).unwrap(), &[b]);
        assert_eq!(g.class(a).unwrap(), NodeClass::Ego);
    }

    #[test]
    fn reverse_duplicates_merge_by_sum() {
        let g = build_graph(
            &[WeightedEdge::new("a", "b", 1.0), WeightedEdge::new("b", "a", 1.0)],
            &BTreeMap::new(),
        )
        .unwrap();
        assert_eq!(g.edge_count(), 1);
        let (a, b) = (g.id("a").unwrap(), g.id("b").unwrap());
        assert_eq!(g.weight(a, b), Some(2.0));
        assert_eq!(g.weight(b, a), Some(2.0));
    }

    #[test]
    fn rejects_bad_edges() {
        let none = BTreeMap::new();
        assert!(matches!(
            build_graph(&[WeightedEdge::new("a", "b", -1.0)], &none),
            Err(GraphError::NegativeWeight { .. })
        ));
        assert!(matches!(
            build_graph(&[WeightedEdge::new("a", "b", f64::NAN)], &none),
            Err(GraphError::NegativeWeight { .. })
        ));
        assert_eq!(
            build_graph(&[WeightedEdge::new("a", "a", 1.0)], &none).unwrap_err(),
            GraphError::SelfLoop("a".into())
        );
        assert_eq!(
            build_graph(&[WeightedEdge::new("", "a", 1.0)], &none).unwrap_err(),
            GraphError::EmptyLabel
        );
    }

    #[test]
    fn unclassed_labels_default_to_generic() {
        let g = build_graph(
            &[WeightedEdge::new("a", "b", 1.0)],
            &classes(&[("a", NodeClass::Ego)]),
        )
        .unwrap();
        assert_eq!(g.class(g.id("b").unwrap()).unwrap(), NodeClass::Generic);
    }

    #[test]
    fn isolated_and_star() {
        let mut edges = Vec::new();
        for leaf in ["l1", "l2", "l3", "l4", "l5"] {
            edges.push(WeightedEdge::new("hub", leaf, 1.0));
        }
        let g = build_graph(&edges, &classes(&[("lonely", NodeClass::Generic)])).unwrap();
        let lonely = g.id("lonely").unwrap();
        assert!(g.neighborhood(lonely).unwrap().is_empty());
        assert_eq!(g.degree(lonely).unwrap(), 0);
        let hub = g.id("hub").unwrap();
        let leaves: Vec<&str> =
            g.neighborhood(hub).unwrap().iter().map(|&v| g.label(v).unwrap()).collect();
        assert_eq!(leaves, vec!["l1", "l2", "l3", "l4", "l5"]);
        assert_eq!(g.degree(hub).unwrap(), 5);
        assert_eq!(g.neighborhood(NodeId(999)), Err(GraphError::UnknownNode(NodeId(999))));
    }

    fn random_edges(rng: &mut ChaCha8Rng, n: usize, m: usize) -> Vec<WeightedEdge> {
        (0..m)
            .filter_map(|_| {
                let a = rng.random_range(0..n);
                let b = rng.random_range(0..n);
                (a != b).then(|| {
                    WeightedEdge::new(format!("n{a}"), format!("n{b}"), rng.random_range(0.0..5.0))
                })
            })
            .collect()
    }

    #[test]
    fn degrees_match_recount_of_raw_tuples() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for n in [20usize, 30] {
            let edges = random_edges(&mut rng, n, 3 * n);
            let g = build_graph(&edges, &BTreeMap::new()).unwrap();
            let mut adj: BTreeMap<&str, BTreeSet<&str>> = BTreeMap::new();
            for e in &edges {
                adj.entry(&e.src).or_default().insert(&e.dst);
                adj.entry(&e.dst).or_default().insert(&e.src);
            }
            for (label, nbrs) in &adj {
                let id = g.id(label).unwrap();
                assert_eq!(g.degree(id).unwrap(), nbrs.len());
                let got: BTreeSet<&str> =
                    g.neighborhood(id).unwrap().iter().map(|&v| g.label(v).unwrap()).collect();
                assert_eq!(&got, nbrs);
            }
            let degree_sum: usize = g.nodes().map(|v| g.degree(v).unwrap()).sum();
            assert_eq!(degree_sum, 2 * g.edge_count());
        }
    }

    proptest::proptest! {
        #[test]
        fn symmetric_sorted_and_order_independent(seed in 0u64..1000, n in 2usize..25) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let edges = random_edges(&mut rng, n, 2 * n);
            let g = build_graph(&edges, &BTreeMap::new()).unwrap();
            for v in g.nodes() {
                let row = g.neighborhood(v).unwrap();
                proptest::prop_assert!(row.windows(2).all(|w| w[0] < w[1]));
                for &u in row {
                    proptest::prop_assert!(u != v);
                    proptest::prop_assert!(g.neighborhood(u).unwrap().contains(&v));
                    proptest::prop_assert_eq!(g.weight(u, v), g.weight(v, u));
                }
            }
            let mut shuffled = edges.clone();
            shuffled.reverse();
            let k = shuffled.len() / 2;
            shuffled.rotate_left(k);
            let h = build_graph(&shuffled, &BTreeMap::new()).unwrap();
            let ge: Vec<_> = g.edges().map(|(a, b, w)| (a, b, w.to_bits())).collect();
            let he: Vec<_> = h.edges().map(|(a, b, w)| (a, b, w.to_bits())).collect();
            proptest::prop_assert_eq!(ge, he);
        }
    }
}
