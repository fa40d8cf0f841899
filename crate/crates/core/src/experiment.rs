//! Experiment orchestration: load or generate data, extract ego networks,
//! run every (slice, method) job and write the report and run manifest.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::Instant;

use log::{info, warn};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::egonet::{extract_all, CircleParams, EgoNetwork};
use crate::evalstats::report::{write_csv, IntervalSettings, ReportRow};
use crate::evalstats::{derive_seed, microaverage};
use crate::graph::{build_graph, InteractionGraph, NodeClass, NodeId, NodePair, WeightedEdge};
use crate::io;
use crate::similarity::{Similarity, SimilarityConfig, SimilarityKind};
use crate::slicing::{slice, SliceSpec};
use crate::supervised::{cross_validate, FoldPlan, Learner};
use crate::synth::{generate_synthetic, SyntheticSpec};
use crate::unsupervised::{confusion, pr_auc_from_scores, rank_candidates, score_pool, SnapshotPair};
use crate::Error;

/// Environment variable naming the default output directory.
pub const OUT_DIR_ENV: &str = "CIRCLELINK_OUT_DIR";
pub const DEFAULT_OUT_DIR: &str = "circlelink-out";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    #[default]
    Unsupervised,
    Supervised,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Input {
    /// Either `edges` (weighted edge list) or `log` (interaction log) must be
    /// given. `later` lists the ego-ego links of the second snapshot.
    Files {
        #[serde(default)]
        edges: Option<PathBuf>,
        #[serde(default)]
        log: Option<PathBuf>,
        #[serde(default)]
        classes: Option<PathBuf>,
        later: PathBuf,
    },
    Synthetic(SyntheticSpec),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub input: Input,
    /// Slice names such as `C1`, `C1/DomainEdges` or `All/AllEdges`.
    pub slices: Vec<String>,
    pub kinds: Vec<SimilarityKind>,
    pub ks: Vec<usize>,
    pub mode: Mode,
    pub learners: Vec<String>,
    pub undersample: bool,
    pub folds: usize,
    pub seed: u64,
    /// Compute the precision-recall AUC for unsupervised rows.
    pub auc: bool,
    pub out_dir: Option<PathBuf>,
    pub circles: CircleParams,
    pub similarity: SimilarityConfig,
    pub intervals: IntervalSettings,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            input: Input::Synthetic(SyntheticSpec::default()),
            slices: vec!["C1".into(), "All".into()],
            kinds: vec![SimilarityKind::ResourceAllocation],
            ks: vec![100],
            mode: Mode::Unsupervised,
            learners: vec!["LR".into(), "GNB".into(), "DT".into()],
            undersample: true,
            folds: crate::supervised::DEFAULT_FOLDS,
            seed: 0,
            auc: true,
            out_dir: None,
            circles: CircleParams::default(),
            similarity: SimilarityConfig::default(),
            intervals: IntervalSettings::default(),
        }
    }
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self, Error> {
        serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self, Error> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn parsed_slices(&self) -> Result<Vec<SliceSpec>, Error> {
        self.slices.iter().map(|s| s.parse().map_err(Error::Config)).collect()
    }

    pub fn parsed_learners(&self) -> Result<Vec<Learner>, Error> {
        self.learners.iter().map(|s| s.parse().map_err(Error::Config)).collect()
    }

    pub fn validate(&self) -> Result<(), Error> {
        if self.slices.is_empty() {
            return Err(Error::Config("slice list is empty".into()));
        }
        self.parsed_slices()?;
        match self.mode {
            Mode::Unsupervised => {
                if self.ks.is_empty() || self.ks.contains(&0) {
                    return Err(Error::Config("K list must be nonempty and positive".into()));
                }
                if self.kinds.is_empty() {
                    return Err(Error::Config("similarity list is empty".into()));
                }
            }
            Mode::Supervised => {
                if self.parsed_learners()?.is_empty() {
                    return Err(Error::Config("learner list is empty".into()));
                }
                if self.folds < 2 {
                    return Err(Error::Config("at least two folds are required".into()));
                }
            }
        }
        if let Input::Files { edges: None, log: None, .. } = &self.input {
            return Err(Error::Config("file input needs `edges` or `log`".into()));
        }
        Ok(())
    }

    /// Configured directory, else the environment default, else
    /// [`DEFAULT_OUT_DIR`].
    pub fn resolved_out_dir(&self) -> PathBuf {
        self.out_dir
            .clone()
            .or_else(|| std::env::var_os(OUT_DIR_ENV).map(PathBuf::from))
            .unwrap_or_else(|| PathBuf::from(DEFAULT_OUT_DIR))
    }
}

/// Graph inputs in label space.
#[derive(Debug, Clone)]
pub struct LoadedData {
    pub edges: Vec<WeightedEdge>,
    pub classes: BTreeMap<String, NodeClass>,
    pub later: Vec<(String, String)>,
}

pub fn load_input(input: &Input) -> Result<LoadedData, Error> {
    match input {
        Input::Synthetic(spec) => {
            let d = generate_synthetic(spec)?;
            let later = d.later_links();
            Ok(LoadedData { edges: d.edges, classes: d.classes, later })
        }
        Input::Files { edges, log, classes, later } => {
            let edges = match (edges, log) {
                (Some(p), _) => io::load_weighted_edges(p)?,
                (None, Some(p)) => io::log_to_weighted_edges(&io::load_interaction_log(p)?),
                (None, None) => return Err(Error::Config("file input needs `edges` or `log`".into())),
            };
            let classes = match classes {
                Some(p) => io::load_classes(p)?,
                None => BTreeMap::new(),
            };
            Ok(LoadedData { edges, classes, later: io::load_links(later)? })
        }
    }
}

/// Graph, ego networks and snapshots ready for prediction.
pub struct Prepared {
    pub graph: InteractionGraph,
    pub egos: BTreeMap<NodeId, EgoNetwork>,
    pub snapshots: SnapshotPair,
    pub dropped_egos: usize,
}

pub fn prepare(data: &LoadedData, circles: &CircleParams, timings: &mut Timings) -> Result<Prepared, Error> {
    let t = Instant::now();
    let graph = build_graph(&data.edges, &data.classes)?;
    timings.record("build_graph", t);

    let t = Instant::now();
    let (egos, failed) = extract_all(&graph, circles);
    timings.record("extract_egos", t);
    for (e, err) in &failed {
        warn!("dropping ego {}: {err}", graph.label(*e).unwrap_or("?"));
    }
    let ids: Vec<NodeId> = egos.keys().copied().collect();
    let mut later = Vec::with_capacity(data.later.len());
    for (a, b) in &data.later {
        match (graph.id(a), graph.id(b)) {
            (Ok(x), Ok(y)) if x != y => later.push(NodePair::new(x, y)),
            _ => warn!("skipping later link {a}-{b}: endpoint not in the graph"),
        }
    }
    let snapshots = SnapshotPair::from_graph(&graph, &ids, later);
    info!(
        "{} nodes, {} edges, {} egos, {} old and {} new ego links",
        graph.node_count(),
        graph.edge_count(),
        ids.len(),
        snapshots.e_old().len(),
        snapshots.e_new().len()
    );
    Ok(Prepared { graph, egos, snapshots, dropped_egos: failed.len() })
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Timings(pub BTreeMap<String, f64>);

impl Timings {
    fn record(&mut self, stage: &str, since: Instant) {
        *self.0.entry(stage.to_string()).or_default() += since.elapsed().as_secs_f64();
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub tool: String,
    pub version: String,
    pub status: String,
    pub error: Option<String>,
    pub config: ExperimentConfig,
    pub seed: u64,
    pub started_at: String,
    pub wall_times: Timings,
    pub rows: usize,
    pub egos: usize,
    pub dropped_egos: usize,
    pub e_old: usize,
    pub e_new: usize,
}

#[derive(Debug, Clone)]
pub struct Outcome {
    pub rows: Vec<ReportRow>,
    pub manifest: Manifest,
}

/// Runs the experiment and writes `report.csv`, `report.json` and
/// `manifest.json` to the output directory. On failure the rows finished so
/// far are still written, and the manifest records the error.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<Outcome, Error> {
    cfg.validate()?;
    let out_dir = cfg.resolved_out_dir();
    std::fs::create_dir_all(&out_dir).map_err(|source| io::IoError::Io { path: out_dir.clone(), source })?;
    let mut manifest = Manifest {
        tool: env!("CARGO_PKG_NAME").to_string(),
        version: env!("CARGO_PKG_VERSION").to_string(),
        status: "running".into(),
        error: None,
        config: cfg.clone(),
        seed: cfg.seed,
        started_at: chrono::Utc::now().to_rfc3339(),
        wall_times: Timings::default(),
        rows: 0,
        egos: 0,
        dropped_egos: 0,
        e_old: 0,
        e_new: 0,
    };
    let mut rows = Vec::new();
    let result = run_inner(cfg, &mut manifest, &mut rows);
    manifest.rows = rows.len();
    match &result {
        Ok(()) => manifest.status = "ok".into(),
        Err(e) => {
            manifest.status = "failed".into();
            manifest.error = Some(e.to_string());
        }
    }
    write_outputs(&out_dir, &rows, &manifest)?;
    result.map(|()| Outcome { rows, manifest })
}

fn write_outputs(dir: &Path, rows: &[ReportRow], manifest: &Manifest) -> Result<(), Error> {
    io::write_file(&dir.join("report.csv"), |f| Ok(write_csv(rows, f)?))?;
    io::write_file(&dir.join("report.json"), |f| Ok(serde_json::to_writer_pretty(f, rows)?))?;
    io::write_file(&dir.join("manifest.json"), |f| Ok(serde_json::to_writer_pretty(f, manifest)?))?;
    Ok(())
}

fn run_inner(cfg: &ExperimentConfig, manifest: &mut Manifest, rows: &mut Vec<ReportRow>) -> Result<(), Error> {
    let t = Instant::now();
    let data = load_input(&cfg.input)?;
    manifest.wall_times.record("load_input", t);
    let prep = prepare(&data, &cfg.circles, &mut manifest.wall_times)?;
    manifest.egos = prep.egos.len();
    manifest.dropped_egos = prep.dropped_egos;
    manifest.e_old = prep.snapshots.e_old().len();
    manifest.e_new = prep.snapshots.e_new().len();

    let specs = cfg.parsed_slices()?;
    let sim = Similarity::new(cfg.similarity);
    let t = Instant::now();
    let jobs: Vec<(usize, SliceSpec, usize)> = match cfg.mode {
        Mode::Unsupervised => specs
            .iter()
            .flat_map(|&s| (0..cfg.kinds.len()).map(move |m| (s, m)))
            .enumerate()
            .map(|(i, (s, m))| (i, s, m))
            .collect(),
        Mode::Supervised => {
            let n = cfg.parsed_learners()?.len();
            specs.iter().flat_map(|&s| (0..n).map(move |m| (s, m))).enumerate().map(|(i, (s, m))| (i, s, m)).collect()
        }
    };
    let learners = if cfg.mode == Mode::Supervised { cfg.parsed_learners()? } else { Vec::new() };

    // Jobs run concurrently; results are gathered in job order so the report
    // does not depend on scheduling. Rows of jobs before the first failure
    // are kept.
    let results: Vec<Result<Vec<ReportRow>, Error>> = jobs
        .par_iter()
        .map(|&(job, spec, method)| {
            let view = slice(&prep.graph, &prep.egos, spec)?;
            match cfg.mode {
                Mode::Unsupervised => unsupervised_rows(cfg, &view, &sim, &prep.snapshots, cfg.kinds[method], job),
                Mode::Supervised => supervised_rows(cfg, &view, &sim, &prep.snapshots, &learners[method], job),
            }
        })
        .collect();
    manifest.wall_times.record("predict", t);
    for r in results {
        rows.extend(r?);
    }
    Ok(())
}

fn unsupervised_rows(
    cfg: &ExperimentConfig,
    view: &crate::slicing::SlicedView<'_>,
    sim: &Similarity,
    snapshots: &SnapshotPair,
    kind: SimilarityKind,
    job: usize,
) -> Result<Vec<ReportRow>, Error> {
    let max_k = *cfg.ks.iter().max().unwrap();
    let ranked = rank_candidates(view, sim, kind, snapshots, max_k)?;
    let auc = if cfg.auc && !snapshots.e_new().is_empty() {
        Some(pr_auc_from_scores(&score_pool(view, sim, kind, snapshots)?, snapshots.e_new())?)
    } else {
        None
    };
    let n = view.egos().len();
    cfg.ks
        .iter()
        .enumerate()
        .map(|(ki, &k)| {
            let mut top = ranked.clone();
            top.entries.truncate(k);
            top.k = k;
            let c = confusion(&top, snapshots, n)?;
            let seed = derive_seed(cfg.seed, (job as u64) << 16 | ki as u64);
            Ok(ReportRow::from_confusion(view.spec().to_string(), kind.as_str(), k as u64, &c, auc, &cfg.intervals, seed))
        })
        .collect()
}

fn supervised_rows(
    cfg: &ExperimentConfig,
    view: &crate::slicing::SlicedView<'_>,
    sim: &Similarity,
    snapshots: &SnapshotPair,
    learner: &Learner,
    job: usize,
) -> Result<Vec<ReportRow>, Error> {
    let plan = FoldPlan { k_folds: cfg.folds, undersample: cfg.undersample, seed: cfg.seed };
    let folds = cross_validate(view, sim, snapshots, &plan, learner)?;
    let c = microaverage(&folds);
    let seed = derive_seed(cfg.seed, (job as u64) << 16);
    Ok(vec![ReportRow::from_confusion(
        view.spec().to_string(),
        learner.short_name(),
        cfg.folds as u64,
        &c,
        None,
        &cfg.intervals,
        seed,
    )])
}

/// Circle summary of one ego for the `extract-ego` report.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EgoSummary {
    pub ego: String,
    pub bandwidth: f64,
    /// Cumulative circle sizes, innermost first.
    pub circle_sizes: Vec<usize>,
    pub cluster_means: Vec<f64>,
    pub active: usize,
    pub acquaintances: usize,
    pub circles: Vec<Vec<String>>,
}

pub fn summarize_egos(graph: &InteractionGraph, egos: &BTreeMap<NodeId, EgoNetwork>) -> Vec<EgoSummary> {
    egos.values()
        .map(|en| {
            let labels = |ids: Vec<NodeId>| ids.into_iter().map(|i| graph.label(i).unwrap_or("?").to_string()).collect();
            let circles: Vec<Vec<String>> = (1..=en.optimal_circle_count()).map(|k| labels(en.circle(k))).collect();
            EgoSummary {
                ego: graph.label(en.ego).unwrap_or("?").to_string(),
                bandwidth: en.bandwidth,
                circle_sizes: circles.iter().map(Vec::len).collect(),
                cluster_means: en.clusters.iter().map(|c| c.mean).collect(),
                active: en.active().len(),
                acquaintances: en.acquaintances.len(),
                circles,
            }
        })
        .collect()
}
