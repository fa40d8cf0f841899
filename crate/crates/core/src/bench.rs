//! Empirical scaling of the pipeline stages on synthetic graphs.
//!
//! Three stages are timed: ego-network extraction, all-pairs similarity
//! scoring (full and innermost-circle slices) and feature extraction for an
//! undersampled training set. Log-log least-squares slopes summarize how
//! each stage grows with graph size. Timings cover in-memory computation
//! only; generation and graph construction are excluded.

use std::collections::BTreeMap;
use std::hint::black_box;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::egonet::{extract_all, CircleLevel, CircleParams};
use crate::graph::NodeId;
use crate::similarity::{Similarity, SimilarityKind};
use crate::slicing::{slice, SliceSpec};
use crate::supervised::{training_pairs, FoldPlan};
use crate::synth::{generate_synthetic, SyntheticSpec};
use crate::Error;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BenchConfig {
    /// Target numbers of ego-ego links for the extraction and feature stages.
    pub edge_sizes: Vec<usize>,
    /// Numbers of egos for the all-pairs scoring stage.
    pub ego_sizes: Vec<usize>,
    pub reps: usize,
    pub seed: u64,
    /// Template for the generated graphs; `n_egos` and `seed` are overridden.
    pub spec: SyntheticSpec,
}

impl Default for BenchConfig {
    fn default() -> Self {
        Self {
            edge_sizes: vec![1_000, 2_000, 4_000, 8_000],
            ego_sizes: vec![250, 500, 1_000, 2_000],
            reps: 3,
            seed: 0,
            spec: SyntheticSpec::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchRow {
    pub stage: String,
    pub n_egos: usize,
    pub ego_edges: usize,
    pub edges: usize,
    /// Best of the repetitions.
    pub seconds: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchReport {
    pub rows: Vec<BenchRow>,
    /// Log-log slopes keyed by `stage_vs_size`.
    pub slopes: BTreeMap<String, f64>,
    /// Innermost-circle scoring took no longer than full scoring on every
    /// scoring graph.
    pub c1_not_slower: bool,
}

/// Least-squares slope of ln(y) against ln(x).
pub fn loglog_slope(points: &[(f64, f64)]) -> f64 {
    let pts: Vec<(f64, f64)> = points.iter().map(|&(x, y)| (x.ln(), y.max(1e-12).ln())).collect();
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    sxy / sxx
}

/// Minimum over `reps` of the mean time of `inner` calls.
fn time_min<F: FnMut()>(reps: usize, inner: usize, mut f: F) -> f64 {
    (0..reps.max(1))
        .map(|_| {
            let t = Instant::now();
            for _ in 0..inner {
                f();
            }
            t.elapsed().as_secs_f64() / inner as f64
        })
        .fold(f64::INFINITY, f64::min)
}

/// Egos needed for roughly `target` ego-ego links under `spec`.
fn egos_for_links(spec: &SyntheticSpec, target: usize) -> usize {
    let per_ego = spec.old_link_rate * (spec.group_size.saturating_sub(1)) as f64 / 2.0 + spec.random_old_links / 2.0;
    ((target as f64 / per_ego.max(1e-3)).ceil() as usize).max(2)
}

pub fn bench_scaling(cfg: &BenchConfig) -> Result<BenchReport, Error> {
    if cfg.edge_sizes.windows(2).any(|w| w[0] >= w[1]) || cfg.ego_sizes.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::Config("benchmark sizes must be increasing".into()));
    }
    let sim = Similarity::default();
    let mut rows = Vec::new();

    for (i, &target) in cfg.edge_sizes.iter().enumerate() {
        let spec = SyntheticSpec { n_egos: egos_for_links(&cfg.spec, target), seed: cfg.seed + i as u64, ..cfg.spec.clone() };
        let data = generate_synthetic(&spec)?;
        let graph = data.graph()?;
        let params = CircleParams::default();
        let extract = time_min(cfg.reps, 1, || {
            black_box(extract_all(&graph, &params));
        });
        let (egos, _) = extract_all(&graph, &params);
        let ids: Vec<NodeId> = egos.keys().copied().collect();
        let snapshots = data.snapshots(&graph, &ids)?;
        let view = slice(&graph, &egos, SliceSpec::BASELINE)?;
        view.warm()?;
        let plan = FoldPlan { seed: cfg.seed, ..FoldPlan::default() };
        let inner = (20_000 / target.max(1)).max(1);
        let mut failure = None;
        let features = time_min(cfg.reps, inner, || {
            match training_pairs(view.egos(), &snapshots, &plan, 0) {
                Ok((pos, neg)) => {
                    for p in pos.iter().chain(&neg) {
                        black_box(sim.features(&view, p.lo, p.hi).ok());
                    }
                }
                Err(e) => failure = Some(e),
            }
        });
        if let Some(e) = failure {
            return Err(e.into());
        }
        let base = |stage: &str, seconds| BenchRow {
            stage: stage.into(),
            n_egos: ids.len(),
            ego_edges: snapshots.e_old().len(),
            edges: graph.edge_count(),
            seconds,
        };
        rows.push(base("extract", extract));
        rows.push(base("features", features));
    }

    let mut c1_not_slower = true;
    for (i, &n) in cfg.ego_sizes.iter().enumerate() {
        let spec = SyntheticSpec { n_egos: n, seed: cfg.seed + 1_000 + i as u64, ..cfg.spec.clone() };
        let data = generate_synthetic(&spec)?;
        let graph = data.graph()?;
        let (egos, _) = extract_all(&graph, &CircleParams::default());
        let ids: Vec<NodeId> = egos.keys().copied().collect();
        let mut times = Vec::new();
        for level in [CircleLevel::All, CircleLevel::C1] {
            let view = slice(&graph, &egos, SliceSpec::new(level, false))?;
            view.warm()?;
            let seconds = time_min(cfg.reps, 1, || {
                let mut acc = 0.0;
                for (a, &x) in ids.iter().enumerate() {
                    for &y in &ids[a + 1..] {
                        acc += sim.score(&view, SimilarityKind::ResourceAllocation, x, y).unwrap_or(0.0);
                    }
                }
                black_box(acc);
            });
            times.push(seconds);
            rows.push(BenchRow {
                stage: format!("scoring_{}", level.as_str()),
                n_egos: ids.len(),
                ego_edges: 0,
                edges: graph.edge_count(),
                seconds,
            });
        }
        c1_not_slower &= times[1] <= times[0];
    }

    let mut slopes = BTreeMap::new();
    let series = |stage: &str, x: fn(&BenchRow) -> usize| -> Vec<(f64, f64)> {
        rows.iter().filter(|r| r.stage == stage).map(|r| (x(r) as f64, r.seconds)).collect()
    };
    for (key, stage, x) in [
        ("extract_vs_edges", "extract", (|r: &BenchRow| r.edges) as fn(&BenchRow) -> usize),
        ("features_vs_ego_edges", "features", |r: &BenchRow| r.ego_edges),
        ("scoring_All_vs_egos", "scoring_All", |r: &BenchRow| r.n_egos),
        ("scoring_C1_vs_egos", "scoring_C1", |r: &BenchRow| r.n_egos),
    ] {
        let pts = series(stage, x);
        if pts.len() >= 2 {
            slopes.insert(key.to_string(), loglog_slope(&pts));
        }
    }
    Ok(BenchReport { rows, slopes, c1_not_slower })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn slope_of_power_laws() {
        let quad: Vec<(f64, f64)> = [10.0, 20.0, 40.0].iter().map(|&x| (x, 3.0 * x * x)).collect();
        assert!((loglog_slope(&quad) - 2.0).abs() < 1e-12);
        let lin: Vec<(f64, f64)> = [5.0, 50.0, 500.0].iter().map(|&x| (x, 0.1 * x)).collect();
        assert!((loglog_slope(&lin) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn tiny_benchmark_runs() {
        let cfg = BenchConfig { edge_sizes: vec![50, 100], ego_sizes: vec![20, 40], reps: 1, ..BenchConfig::default() };
        let report = bench_scaling(&cfg).unwrap();
        assert_eq!(report.rows.len(), 8);
        assert_eq!(report.slopes.len(), 4);
        assert!(bench_scaling(&BenchConfig { ego_sizes: vec![40, 20], ..cfg }).is_err());
    }
}
