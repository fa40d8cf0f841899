use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use log::info;

use circlelink::bench::{bench_scaling, BenchConfig};
use circlelink::egonet::extract_all;
use circlelink::experiment::{run_experiment, summarize_egos, ExperimentConfig, Input, Mode, OUT_DIR_ENV};
use circlelink::graph::build_graph;
use circlelink::io;
use circlelink::synth::{generate_synthetic, SyntheticSpec};
use circlelink::Error;

#[derive(Parser)]
#[command(name = "circlelink", version, about = "Circle-aware link prediction between egos")]
struct Cli {
    /// Increase log verbosity (-v info, -vv debug).
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Extract ego networks and write their circles to egos.json.
    ExtractEgo(ExtractArgs),
    /// Unsupervised top-K prediction with similarity heuristics.
    Predict(PredictArgs),
    /// Cross-validated supervised prediction.
    Supervised(SupervisedArgs),
    /// Generate a synthetic dataset with planted circles.
    Synth(SynthArgs),
    /// Time the pipeline stages and fit log-log slopes.
    Bench(BenchArgs),
}

#[derive(Args)]
struct InputArgs {
    /// Experiment config (JSON); flags override its fields.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Weighted edge list `src,dst,weight`.
    #[arg(long, conflicts_with = "log")]
    edges: Option<PathBuf>,
    /// Interaction log `src,dst,timestamp`.
    #[arg(long)]
    log: Option<PathBuf>,
    /// Node classes `node,class`.
    #[arg(long)]
    classes: Option<PathBuf>,
    /// Ego-ego links of the later snapshot `src,dst`.
    #[arg(long)]
    later: Option<PathBuf>,
    /// Use a generated dataset with this many egos instead of files.
    #[arg(long, conflicts_with_all = ["edges", "log"])]
    synthetic_egos: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Fixed mean-shift bandwidth instead of the per-ego estimate.
    #[arg(long)]
    bandwidth: Option<f64>,
    #[arg(long, env = OUT_DIR_ENV)]
    out_dir: Option<PathBuf>,
}

#[derive(Args)]
struct ExtractArgs {
    #[command(flatten)]
    input: InputArgs,
}

#[derive(Args)]
struct RunArgs {
    #[command(flatten)]
    input: InputArgs,
    /// Slices such as `C1,C2/DomainEdges,All`.
    #[arg(long, value_delimiter = ',')]
    slices: Option<Vec<String>>,
}

#[derive(Args)]
struct PredictArgs {
    #[command(flatten)]
    run: RunArgs,
    /// Heuristics among CN, JC, AA, RA.
    #[arg(long, value_delimiter = ',')]
    kinds: Option<Vec<String>>,
    #[arg(long, value_delimiter = ',')]
    ks: Option<Vec<usize>>,
    /// Skip the precision-recall AUC.
    #[arg(long)]
    no_auc: bool,
}

#[derive(Args)]
struct SupervisedArgs {
    #[command(flatten)]
    run: RunArgs,
    /// Learners among LR, GNB, DT, RF.
    #[arg(long, value_delimiter = ',')]
    learners: Option<Vec<String>>,
    #[arg(long)]
    folds: Option<usize>,
    /// Train on all negatives instead of a balanced sample.
    #[arg(long)]
    no_undersample: bool,
}

#[derive(Args)]
struct SynthArgs {
    /// Generator spec (JSON); flags override its fields.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    n_egos: Option<usize>,
    #[arg(long)]
    new_link_rate: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, env = OUT_DIR_ENV)]
    out_dir: Option<PathBuf>,
}

#[derive(Args)]
struct BenchArgs {
    /// Benchmark config (JSON); flags override its fields.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Target ego-ego link counts for extraction and feature timing.
    #[arg(long, value_delimiter = ',')]
    edge_sizes: Option<Vec<usize>>,
    /// Ego counts for all-pairs scoring timing.
    #[arg(long, value_delimiter = ',')]
    ego_sizes: Option<Vec<usize>>,
    #[arg(long)]
    reps: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, env = OUT_DIR_ENV)]
    out_dir: Option<PathBuf>,
}

fn read_json<T: serde::de::DeserializeOwned + Default>(path: Option<&Path>) -> Result<T, Error> {
    let Some(path) = path else { return Ok(T::default()) };
    let text = std::fs::read_to_string(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
}

/// `need_later` is false for verbs that never read the later snapshot.
fn experiment_config(args: &InputArgs, need_later: bool) -> Result<ExperimentConfig, Error> {
    let mut cfg = match &args.config {
        Some(p) => ExperimentConfig::load(p)?,
        None => ExperimentConfig::default(),
    };
    if let Some(n) = args.synthetic_egos {
        let mut spec = match &cfg.input {
            Input::Synthetic(s) => s.clone(),
            Input::Files { .. } => SyntheticSpec::default(),
        };
        spec.n_egos = n;
        cfg.input = Input::Synthetic(spec);
    } else if args.edges.is_some() || args.log.is_some() {
        let later = match (&args.later, &cfg.input) {
            (Some(p), _) => p.clone(),
            (None, Input::Files { later, .. }) => later.clone(),
            (None, Input::Synthetic(_)) if !need_later => PathBuf::new(),
            (None, Input::Synthetic(_)) => return Err(Error::Config("--later is required with file input".into())),
        };
        cfg.input = Input::Files { edges: args.edges.clone(), log: args.log.clone(), classes: args.classes.clone(), later };
    } else if let Input::Files { classes, later, .. } = &mut cfg.input {
        if args.classes.is_some() {
            *classes = args.classes.clone();
        }
        if let Some(p) = &args.later {
            *later = p.clone();
        }
    }
    if let Some(seed) = args.seed {
        cfg.seed = seed;
        if let Input::Synthetic(spec) = &mut cfg.input {
            spec.seed = seed;
        }
    }
    if args.bandwidth.is_some() {
        cfg.circles.bandwidth = args.bandwidth;
    }
    if args.out_dir.is_some() {
        cfg.out_dir = args.out_dir.clone();
    }
    Ok(cfg)
}

fn run_config(args: &RunArgs, mode: Mode) -> Result<ExperimentConfig, Error> {
    let mut cfg = experiment_config(&args.input, true)?;
    cfg.mode = mode;
    if let Some(s) = &args.slices {
        cfg.slices = s.clone();
    }
    Ok(cfg)
}

fn write_json<T: serde::Serialize>(path: &Path, value: &T) -> Result<(), Error> {
    Ok(io::write_file(path, |f| {
        serde_json::to_writer_pretty(&mut *f, value)?;
        Ok(())
    })?)
}

fn create_dir(dir: &Path) -> Result<(), Error> {
    std::fs::create_dir_all(dir).map_err(|source| io::IoError::Io { path: dir.to_path_buf(), source }.into())
}

fn extract_ego(args: &ExtractArgs) -> Result<(), Error> {
    let cfg = experiment_config(&args.input, false)?;
    let (edges, classes) = match &cfg.input {
        Input::Synthetic(spec) => {
            let d = generate_synthetic(spec)?;
            (d.edges, d.classes)
        }
        Input::Files { edges, log, classes, .. } => {
            let edges = match (edges, log) {
                (Some(p), _) => io::load_weighted_edges(p)?,
                (None, Some(p)) => io::log_to_weighted_edges(&io::load_interaction_log(p)?),
                (None, None) => return Err(Error::Config("file input needs edges or a log".into())),
            };
            let classes = match classes {
                Some(p) => io::load_classes(p)?,
                None => Default::default(),
            };
            (edges, classes)
        }
    };
    let graph = build_graph(&edges, &classes)?;
    let (egos, failed) = extract_all(&graph, &cfg.circles);
    for (e, err) in &failed {
        log::warn!("dropping ego {}: {err}", graph.label(*e).unwrap_or("?"));
    }
    let dir = cfg.resolved_out_dir();
    create_dir(&dir)?;
    write_json(&dir.join("egos.json"), &summarize_egos(&graph, &egos))?;
    println!("{} egos extracted, {} dropped; wrote {}", egos.len(), failed.len(), dir.join("egos.json").display());
    Ok(())
}

fn experiment(cfg: ExperimentConfig) -> Result<(), Error> {
    let outcome = run_experiment(&cfg)?;
    let dir = cfg.resolved_out_dir();
    println!("{} report rows written to {}", outcome.rows.len(), dir.display());
    for r in &outcome.rows {
        let auc = r.auc.map(|a| format!(" auc={a:.4}")).unwrap_or_default();
        println!(
            "{:<16} {:<4} {:>6}  P={:.4} [{:.4}, {:.4}]  R={:.4}  F1={:.4}{auc}",
            r.spec, r.method, r.k_or_fold, r.precision, r.p_lo, r.p_hi, r.recall, r.f1
        );
    }
    Ok(())
}

fn predict(args: &PredictArgs) -> Result<(), Error> {
    let mut cfg = run_config(&args.run, Mode::Unsupervised)?;
    if let Some(kinds) = &args.kinds {
        cfg.kinds = kinds.iter().map(|k| k.parse().map_err(Error::Config)).collect::<Result<_, _>>()?;
    }
    if let Some(ks) = &args.ks {
        cfg.ks = ks.clone();
    }
    if args.no_auc {
        cfg.auc = false;
    }
    experiment(cfg)
}

fn supervised(args: &SupervisedArgs) -> Result<(), Error> {
    let mut cfg = run_config(&args.run, Mode::Supervised)?;
    if let Some(l) = &args.learners {
        cfg.learners = l.clone();
    }
    if let Some(f) = args.folds {
        cfg.folds = f;
    }
    if args.no_undersample {
        cfg.undersample = false;
    }
    experiment(cfg)
}

fn synth(args: &SynthArgs) -> Result<(), Error> {
    let mut spec: SyntheticSpec = read_json(args.config.as_deref())?;
    if let Some(n) = args.n_egos {
        spec.n_egos = n;
    }
    if let Some(r) = args.new_link_rate {
        spec.new_link_rate = r;
    }
    if let Some(s) = args.seed {
        spec.seed = s;
    }
    let data = generate_synthetic(&spec)?;
    let dir = args.out_dir.clone().unwrap_or_else(|| PathBuf::from(circlelink::experiment::DEFAULT_OUT_DIR));
    data.write_to_dir(&dir)?;
    println!(
        "{} edges, {} egos, {} old and {} new ego links; wrote {}",
        data.edges.len(),
        data.planted.len(),
        data.e_old.len(),
        data.e_new.len(),
        dir.display()
    );
    Ok(())
}

fn bench(args: &BenchArgs) -> Result<(), Error> {
    let mut cfg: BenchConfig = read_json(args.config.as_deref())?;
    if let Some(s) = &args.edge_sizes {
        cfg.edge_sizes = s.clone();
    }
    if let Some(s) = &args.ego_sizes {
        cfg.ego_sizes = s.clone();
    }
    if let Some(r) = args.reps {
        cfg.reps = r;
    }
    if let Some(s) = args.seed {
        cfg.seed = s;
    }
    info!("benchmarking edge sizes {:?}, ego sizes {:?}", cfg.edge_sizes, cfg.ego_sizes);
    let report = bench_scaling(&cfg)?;
    let dir = args.out_dir.clone().unwrap_or_else(|| PathBuf::from(circlelink::experiment::DEFAULT_OUT_DIR));
    create_dir(&dir)?;
    write_json(&dir.join("bench.json"), &report)?;
    for r in &report.rows {
        println!("{:<12} egos={:<6} ego_edges={:<7} edges={:<8} {:.6}s", r.stage, r.n_egos, r.ego_edges, r.edges, r.seconds);
    }
    for (k, v) in &report.slopes {
        println!("slope {k}: {v:.3}");
    }
    println!("C1 scoring no slower than All: {}", report.c1_not_slower);
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    let result = match &cli.command {
        Command::ExtractEgo(a) => extract_ego(a),
        Command::Predict(a) => predict(a),
        Command::Supervised(a) => supervised(a),
        Command::Synth(a) => synth(a),
        Command::Bench(a) => bench(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
