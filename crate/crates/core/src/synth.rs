//! Synthetic ego networks with planted circles and planted link formation.
//!
//! Egos come in small groups. Members of a group share the same innermost
//! alters, so new links between them are visible to inner-circle slices.
//! Outer circles and acquaintances are drawn from a common pool of popular
//! nodes shared by every ego, which adds overlap that carries no signal.

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::{build_graph, GraphError, InteractionGraph, NodeClass, NodeId, NodePair, WeightedEdge};
use crate::io::{self, IoError};
use crate::unsupervised::SnapshotPair;

#[derive(Debug, Error, PartialEq)]
pub enum SynthError {
    #[error("infeasible synthetic spec: {0}")]
    InfeasibleSpec(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SyntheticSpec {
    pub n_egos: usize,
    /// Egos per group sharing the innermost alters.
    pub group_size: usize,
    /// Target cumulative circle sizes, rounded to whole alters.
    pub circle_sizes: Vec<f64>,
    /// Mean contacts per year of each layer.
    pub freq_means: Vec<f64>,
    /// Relative half-width of the uniform multiplicative jitter.
    pub freq_jitter: f64,
    /// Alters contacted less than once per year.
    pub acquaintances: usize,
    /// Size of the popular pool relative to the alters each ego draws from it.
    pub pool_factor: f64,
    /// Fraction of non-ego nodes marked domain-specific.
    pub domain_fraction: f64,
    /// Probability that two egos of one group are linked in the first snapshot.
    pub old_link_rate: f64,
    /// Expected random old links per ego across groups.
    pub random_old_links: f64,
    /// Probability that an unlinked pair in one group links by the second
    /// snapshot; cross-group noise links scale with it.
    pub new_link_rate: f64,
    /// Cross-group new links per ego, multiplied by `new_link_rate`.
    pub random_new_links: f64,
    pub seed: u64,
}

impl Default for SyntheticSpec {
    fn default() -> Self {
        Self {
            n_egos: 100,
            group_size: 5,
            circle_sizes: vec![1.5, 5.0, 15.0, 50.0],
            freq_means: vec![48.0, 16.0, 5.3, 1.8],
            freq_jitter: 0.03,
            acquaintances: 20,
            pool_factor: 2.0,
            domain_fraction: 0.5,
            old_link_rate: 0.3,
            random_old_links: 0.5,
            new_link_rate: 0.5,
            random_new_links: 0.2,
            seed: 0,
        }
    }
}

/// Planted circle membership of one ego, innermost layer first.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlantedEgo {
    pub ego: String,
    pub group: usize,
    pub layers: Vec<Vec<String>>,
    pub acquaintances: Vec<String>,
}

impl PlantedEgo {
    /// Members of the planted circle `k` (1-based, cumulative).
    pub fn circle(&self, k: usize) -> BTreeSet<&str> {
        self.layers[..k.min(self.layers.len())].iter().flatten().map(String::as_str).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticDataset {
    pub edges: Vec<WeightedEdge>,
    pub classes: BTreeMap<String, NodeClass>,
    /// Ego-ego links present in the first snapshot.
    pub e_old: Vec<(String, String)>,
    /// Ego-ego links formed by the second snapshot.
    pub e_new: Vec<(String, String)>,
    pub planted: Vec<PlantedEgo>,
}

impl SyntheticDataset {
    pub fn graph(&self) -> Result<InteractionGraph, GraphError> {
        build_graph(&self.edges, &self.classes)
    }

    /// Ego-ego links of the second snapshot (old and new).
    pub fn later_links(&self) -> Vec<(String, String)> {
        let mut all: Vec<_> = self.e_old.iter().chain(&self.e_new).cloned().collect();
        all.sort();
        all
    }

    /// Snapshot pair over `egos`, mapping labels through `graph`.
    pub fn snapshots(&self, graph: &InteractionGraph, egos: &[NodeId]) -> Result<SnapshotPair, GraphError> {
        let later = self
            .later_links()
            .iter()
            .map(|(a, b)| Ok(NodePair::new(graph.id(a)?, graph.id(b)?)))
            .collect::<Result<Vec<_>, GraphError>>()?;
        Ok(SnapshotPair::from_graph(graph, egos, later))
    }

    /// Writes `edges.csv`, `classes.csv`, `later.csv` and `planted.json`.
    pub fn write_to_dir(&self, dir: &Path) -> Result<(), IoError> {
        std::fs::create_dir_all(dir).map_err(|source| IoError::Io { path: dir.to_path_buf(), source })?;
        io::write_file(&dir.join("edges.csv"), |f| io::write_weighted_edges(&self.edges, f))?;
        io::write_file(&dir.join("classes.csv"), |f| io::write_classes(&self.classes, f))?;
        io::write_file(&dir.join("later.csv"), |f| io::write_links(&self.later_links(), f))?;
        io::write_file(&dir.join("planted.json"), |f| {
            serde_json::to_writer_pretty(&mut *f, &self.planted)?;
            Ok(())
        })
    }
}

fn check(spec: &SyntheticSpec) -> Result<Vec<usize>, SynthError> {
    let bad = |m: &str| Err(SynthError::InfeasibleSpec(m.to_string()));
    if spec.n_egos == 0 || spec.group_size == 0 {
        return bad("need at least one ego and a positive group size");
    }
    if spec.circle_sizes.is_empty() || spec.circle_sizes.len() != spec.freq_means.len() {
        return bad("circle sizes and frequency means must be nonempty and of equal length");
    }
    if spec.circle_sizes.windows(2).any(|w| w[0] >= w[1]) || spec.circle_sizes[0] <= 0.0 {
        return bad("circle sizes must be positive and increasing");
    }
    if spec.freq_means.windows(2).any(|w| w[0] <= w[1]) {
        return bad("frequency means must be decreasing");
    }
    if !(0.0..1.0).contains(&spec.freq_jitter) {
        return bad("jitter must be in [0, 1)");
    }
    if spec.freq_means.last().unwrap() * (1.0 - spec.freq_jitter) < 1.0 {
        return bad("every planted layer must stay above one contact per year");
    }
    for r in [spec.domain_fraction, spec.old_link_rate, spec.new_link_rate] {
        if !(0.0..=1.0).contains(&r) {
            return bad("rates must be in [0, 1]");
        }
    }
    if spec.random_old_links < 0.0 || spec.random_new_links < 0.0 || spec.pool_factor < 1.0 {
        return bad("link counts must be non-negative and the pool factor at least 1");
    }
    let mut layer_sizes = Vec::new();
    let mut prev = 0usize;
    for &s in &spec.circle_sizes {
        let cum = (s.round() as usize).max(prev + 1);
        layer_sizes.push(cum - prev);
        prev = cum;
    }
    Ok(layer_sizes)
}

fn jittered<R: Rng>(rng: &mut R, mean: f64, jitter: f64) -> f64 {
    if jitter == 0.0 {
        mean
    } else {
        mean * rng.random_range(1.0 - jitter..=1.0 + jitter)
    }
}

/// Generates a dataset; identical specs give identical datasets.
pub fn generate_synthetic(spec: &SyntheticSpec) -> Result<SyntheticDataset, SynthError> {
    let layer_sizes = check(spec)?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let n = spec.n_egos;
    let width = n.to_string().len().max(4);
    let ego = |i: usize| format!("ego{i:0width$}");
    let groups = n.div_ceil(spec.group_size);
    let group_of = |i: usize| i / spec.group_size;

    let inner = layer_sizes[0];
    let private = if layer_sizes.len() > 1 { layer_sizes[1] } else { 0 };
    let outer: usize = layer_sizes.iter().skip(2).sum::<usize>() + spec.acquaintances;
    let pool_size = ((outer as f64 * spec.pool_factor).ceil() as usize).max(outer);

    let mut classes = BTreeMap::new();
    let mark = |rng: &mut ChaCha8Rng, label: &str, classes: &mut BTreeMap<String, NodeClass>| {
        let class =
            if rng.random_bool(spec.domain_fraction) { NodeClass::DomainSpecific } else { NodeClass::Generic };
        classes.insert(label.to_string(), class);
    };
    for i in 0..n {
        classes.insert(ego(i), NodeClass::Ego);
    }
    let inner_labels: Vec<Vec<String>> =
        (0..groups).map(|g| (0..inner).map(|k| format!("inner{g:0width$}-{k}")).collect()).collect();
    for l in inner_labels.iter().flatten() {
        mark(&mut rng, l, &mut classes);
    }
    let pool: Vec<String> = (0..pool_size).map(|k| format!("pop{k:05}")).collect();
    for l in &pool {
        mark(&mut rng, l, &mut classes);
    }

    let mut edges = Vec::new();
    let mut planted = Vec::with_capacity(n);
    for i in 0..n {
        let mut layers: Vec<Vec<String>> = vec![inner_labels[group_of(i)].clone()];
        if layer_sizes.len() > 1 {
            let own: Vec<String> = (0..private).map(|k| format!("private{i:0width$}-{k}")).collect();
            for l in &own {
                mark(&mut rng, l, &mut classes);
            }
            layers.push(own);
        }
        let picks = sample(&mut rng, pool_size, outer).into_vec();
        let mut at = 0;
        for &size in layer_sizes.iter().skip(2) {
            layers.push(picks[at..at + size].iter().map(|&p| pool[p].clone()).collect());
            at += size;
        }
        let acquaintances: Vec<String> = picks[at..].iter().map(|&p| pool[p].clone()).collect();
        for (layer, members) in layers.iter().enumerate() {
            for m in members {
                edges.push(WeightedEdge::new(ego(i), m.clone(), jittered(&mut rng, spec.freq_means[layer], spec.freq_jitter)));
            }
        }
        for a in &acquaintances {
            edges.push(WeightedEdge::new(ego(i), a.clone(), rng.random_range(0.1..0.9)));
        }
        planted.push(PlantedEgo { ego: ego(i), group: group_of(i), layers, acquaintances });
    }

    let mut e_old = BTreeSet::new();
    for i in 0..n {
        for j in i + 1..n {
            if group_of(i) == group_of(j) && rng.random_bool(spec.old_link_rate) {
                e_old.insert((i, j));
            }
        }
    }
    let random_pairs = |rng: &mut ChaCha8Rng, count: usize, taken: &BTreeSet<(usize, usize)>| {
        let mut out = BTreeSet::new();
        if n < 2 {
            return out;
        }
        for _ in 0..count * 20 {
            if out.len() == count {
                break;
            }
            let (a, b) = (rng.random_range(0..n), rng.random_range(0..n));
            let p = (a.min(b), a.max(b));
            if a != b && group_of(a) != group_of(b) && !taken.contains(&p) {
                out.insert(p);
            }
        }
        out
    };
    let old_random = random_pairs(&mut rng, (spec.random_old_links * n as f64 / 2.0).round() as usize, &e_old);
    e_old.extend(old_random);

    let mut e_new = BTreeSet::new();
    for i in 0..n {
        for j in i + 1..n {
            if group_of(i) == group_of(j) && !e_old.contains(&(i, j)) && rng.random_bool(spec.new_link_rate) {
                e_new.insert((i, j));
            }
        }
    }
    let noise_count = (spec.new_link_rate * spec.random_new_links * n as f64 / 2.0).round() as usize;
    let taken: BTreeSet<_> = e_old.union(&e_new).copied().collect();
    let new_random = random_pairs(&mut rng, noise_count, &taken);
    e_new.extend(new_random);

    let outer_mean = *spec.freq_means.last().unwrap();
    for &(i, j) in &e_old {
        edges.push(WeightedEdge::new(ego(i), ego(j), jittered(&mut rng, outer_mean, spec.freq_jitter)));
    }
    let names = |set: &BTreeSet<(usize, usize)>| set.iter().map(|&(i, j)| (ego(i), ego(j))).collect();
    Ok(SyntheticDataset { edges, classes, e_old: names(&e_old), e_new: names(&e_new), planted })
}

/// Frequencies of one ego with `sizes[k]` alters around `means[k]`, and the
/// index of each alter's layer.
pub fn planted_frequencies<R: Rng>(rng: &mut R, means: &[f64], sizes: &[usize], jitter: f64) -> (Vec<f64>, Vec<usize>) {
    let mut freqs = Vec::new();
    let mut layers = Vec::new();
    for (layer, (&m, &s)) in means.iter().zip(sizes).enumerate() {
        for _ in 0..s {
            freqs.push(jittered(rng, m, jitter));
            layers.push(layer);
        }
    }
    (freqs, layers)
}
