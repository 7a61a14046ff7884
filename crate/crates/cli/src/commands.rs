//! Subcommand implementations. Every command renders all of its outputs in
//! memory first; nothing is written unless the whole command succeeds.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::Args;
use faultgraph::baselines::{ae_scores, cof_scores, lof_scores, Algo, BaselineScores};
use faultgraph::eval::{evaluate, parameter_sweep, pca_project, EvalReport, SeedPolicy, SweepGrid, SweepResult};
use faultgraph::features::{build_feature_matrix, FeatureMatrix, LeafOrder, ScalingKind};
use faultgraph::gnn::{detect, DetectionReport, TrainConfig};
use faultgraph::graph::{build_adjacency, propagation_matrix, AdjacencyMatrix, Metric};
use faultgraph::ingest::{assemble_group, Dataset, GroupSpec, Label, Manifest};
use faultgraph::io::{self, BaselineReport, Checkpoint, FeatureSidecar, ScoredReport};
use serde::Serialize;
use serde_json::{json, Value};

use crate::config::{FeatureConfig, ModelConfig, PipelineConfig, StageSeeds};
use crate::error::CliError;

/// Files produced by a command, plus what goes into `run.json`.
pub struct Outputs {
    pub files: Vec<(String, Vec<u8>)>,
    pub config: Value,
    pub seeds: BTreeMap<&'static str, u64>,
    pub timings: BTreeMap<&'static str, f64>,
}

impl Outputs {
    fn new(config: &impl Serialize) -> Result<Self, CliError> {
        Ok(Outputs {
            files: Vec::new(),
            config: serde_json::to_value(config).map_err(|e| CliError::runtime(e.to_string()))?,
            seeds: BTreeMap::new(),
            timings: BTreeMap::new(),
        })
    }

    fn add(&mut self, name: impl Into<String>, bytes: Vec<u8>) {
        self.files.push((name.into(), bytes));
    }

    fn add_json(&mut self, name: &str, value: &impl Serialize) -> Result<(), CliError> {
        let bytes = io::to_json_bytes(value)?;
        self.add(name, bytes);
        Ok(())
    }
}

fn require_file(path: &Path, what: &str) -> Result<(), CliError> {
    if path.is_file() {
        Ok(())
    } else {
        Err(CliError::invalid(format!("{what} {} does not exist", path.display())))
    }
}

/// `features.csv` is accompanied by `features.scaling.json` when present.
fn sidecar_of(path: &Path) -> PathBuf {
    path.with_extension("scaling.json")
}

fn load_features(path: &Path) -> Result<FeatureMatrix, CliError> {
    require_file(path, "feature file")?;
    let sidecar = sidecar_of(path);
    let sidecar = sidecar.is_file().then_some(sidecar.as_path());
    Ok(io::read_features(path, sidecar)?)
}

fn fault_mask(labels: &[Label]) -> Result<Vec<bool>, CliError> {
    if labels.contains(&Label::Unknown) {
        return Err(CliError::invalid("labels contain unknown entries"));
    }
    Ok(labels.iter().map(|l| l.is_fault()).collect())
}

/// The explicit flag count, or the number of true faults when every object
/// is labeled.
fn resolve_n(n: Option<usize>, labels: &[Label]) -> Result<usize, CliError> {
    match n {
        Some(n) if n > labels.len() => Err(CliError::invalid(format!(
            "--n {n} exceeds the {} objects",
            labels.len()
        ))),
        Some(n) => Ok(n),
        None => {
            let mask = fault_mask(labels)
                .map_err(|_| CliError::invalid("objects are unlabeled; pass --n explicitly"))?;
            Ok(mask.iter().filter(|&&f| f).count())
        }
    }
}

fn check_k(k: usize, m: usize, what: &str) -> Result<(), CliError> {
    if k == 0 || k >= m {
        return Err(CliError::invalid(format!("{what} must satisfy 1 <= k < {m}, got {k}")));
    }
    Ok(())
}

// ---- ingest ----------------------------------------------------------------

#[derive(Debug, Args, Serialize)]
pub struct IngestArgs {
    /// Record manifest (JSON list of {path, format, condition, fault_diameter_mm, rate_hz})
    #[arg(long)]
    pub manifest: PathBuf,
    /// Experiment group: 1 inner race, 2 ball, 3 outer race
    #[arg(long)]
    pub group: u8,
    /// Seed for the fault-window draw
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 800)]
    pub normal_count: usize,
    /// Windows drawn per fault severity
    #[arg(long, default_value_t = 20)]
    pub fault_count: usize,
}

fn group_dataset(manifest: &Path, spec: &GroupSpec) -> Result<Dataset, CliError> {
    require_file(manifest, "manifest")?;
    let manifest = Manifest::read(manifest)?;
    let (normal, faults) = manifest.load_group(spec)?;
    Ok(assemble_group(spec, &normal, &faults)?)
}

pub fn ingest(args: &IngestArgs) -> Result<Outputs, CliError> {
    let mut spec = GroupSpec::standard(args.group, args.seed)?;
    spec.normal_count = args.normal_count;
    spec.fault_count = args.fault_count;
    let ds = group_dataset(&args.manifest, &spec)?;
    let mut out = Outputs::new(args)?;
    out.seeds.insert("group", args.seed);
    out.add("dataset.csv", io::dataset_csv(&ds)?);
    Ok(out)
}

// ---- features --------------------------------------------------------------

#[derive(Debug, Args, Serialize)]
pub struct FeaturesArgs {
    /// dataset.csv written by `ingest`
    #[arg(long)]
    pub dataset: PathBuf,
    #[arg(long, default_value_t = 3)]
    pub wpd_level: u32,
    /// natural | frequency
    #[arg(long, default_value = "natural")]
    pub leaf_order: LeafOrder,
    #[arg(long, default_value_t = 100)]
    pub eemd_ensemble: usize,
    #[arg(long, default_value_t = 0.2)]
    pub eemd_noise_ratio: f64,
    #[arg(long, default_value_t = 6)]
    pub eemd_imfs: usize,
    /// minmax | zscore | raw
    #[arg(long, default_value = "minmax")]
    pub scaling: ScalingKind,
    /// Seed for the EEMD noise ensemble
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

impl FeaturesArgs {
    fn config(&self) -> FeatureConfig {
        FeatureConfig {
            wpd_level: self.wpd_level,
            leaf_order: self.leaf_order,
            eemd_ensemble: self.eemd_ensemble,
            eemd_noise_ratio: self.eemd_noise_ratio,
            eemd_imfs: self.eemd_imfs,
            scaling: self.scaling,
        }
    }
}

fn feature_outputs(out: &mut Outputs, fm: &FeatureMatrix, cfg: &FeatureConfig, seed: u64) -> Result<(), CliError> {
    out.add("features.csv", io::features_csv(fm)?);
    out.add_json("features.scaling.json", &FeatureSidecar::describe(fm, Some(&cfg.params(seed))))
}

pub fn features(args: &FeaturesArgs) -> Result<Outputs, CliError> {
    let cfg = args.config();
    cfg.validate()?;
    require_file(&args.dataset, "dataset")?;
    let ds = io::read_dataset(&args.dataset)?;
    let fm = build_feature_matrix(&ds, &cfg.params(args.seed))?;
    let mut out = Outputs::new(args)?;
    out.seeds.insert("eemd", args.seed);
    feature_outputs(&mut out, &fm, &cfg, args.seed)?;
    Ok(out)
}

// ---- graph -----------------------------------------------------------------

#[derive(Debug, Args, Serialize)]
pub struct GraphArgs {
    /// features.csv written by `features`
    #[arg(long)]
    pub features: PathBuf,
    /// Neighbours per object
    #[arg(long, default_value_t = 5)]
    pub k: usize,
    /// inv_euclidean | cosine01
    #[arg(long, default_value = "inv_euclidean")]
    pub metric: Metric,
}

fn graph_outputs(out: &mut Outputs, a: &AdjacencyMatrix) -> Result<(), CliError> {
    out.add("graph.csv", io::adjacency_csv(a)?);
    out.add_json(
        "graph.json",
        &io::GraphHeader {
            m: a.len(),
            k: a.k,
            metric: a.metric,
        },
    )
}

pub fn graph(args: &GraphArgs) -> Result<Outputs, CliError> {
    let fm = load_features(&args.features)?;
    check_k(args.k, fm.nrows(), "--k")?;
    let a = build_adjacency(fm.values.view(), args.k, args.metric)?;
    let mut out = Outputs::new(args)?;
    graph_outputs(&mut out, &a)?;
    Ok(out)
}

// ---- detect ----------------------------------------------------------------

#[derive(Debug, Clone, Args, Serialize)]
pub struct ModelArgs {
    #[arg(long, default_value_t = 10)]
    pub hidden: usize,
    /// Learning rate
    #[arg(long, default_value_t = 0.002)]
    pub eta: f64,
    /// Gradient-descent iterations
    #[arg(long, default_value_t = 100)]
    pub iters: usize,
    #[arg(long, default_value_t = 0)]
    pub extra_hidden_layers: usize,
    /// Weight-initialisation seed
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

impl ModelArgs {
    fn train_config(&self) -> TrainConfig {
        ModelConfig {
            hidden: self.hidden,
            eta: self.eta,
            iters: self.iters,
            extra_hidden_layers: self.extra_hidden_layers,
        }
        .train_config(self.seed)
    }
}

#[derive(Debug, Args, Serialize)]
pub struct DetectArgs {
    /// features.csv written by `features`
    #[arg(long)]
    pub features: PathBuf,
    /// graph.csv written by `graph` (its graph.json must sit beside it);
    /// built from --k and --metric when omitted
    #[arg(long)]
    pub graph: Option<PathBuf>,
    #[arg(long, default_value_t = 5)]
    pub k: usize,
    /// inv_euclidean | cosine01
    #[arg(long, default_value = "inv_euclidean")]
    pub metric: Metric,
    /// Objects to flag; defaults to the number of labeled faults
    #[arg(long)]
    pub n: Option<usize>,
    #[command(flatten)]
    pub model: ModelArgs,
}

fn detection_outputs(out: &mut Outputs, report: &DetectionReport, ckpt: &Checkpoint) -> Result<(), CliError> {
    out.add_json("report.json", report)?;
    out.add("scores.csv", io::scores_csv(&report.ff, &report.flagged)?);
    out.add_json("model.json", ckpt)
}

pub fn detect_cmd(args: &DetectArgs) -> Result<Outputs, CliError> {
    let fm = load_features(&args.features)?;
    let cfg = args.model.train_config();
    cfg.validate()?;
    let n = resolve_n(args.n, &fm.labels)?;
    let adjacency = match &args.graph {
        Some(path) => {
            require_file(path, "graph file")?;
            let header = path.with_extension("json");
            require_file(&header, "graph header")?;
            let a = io::read_adjacency(path, &header)?;
            if a.len() != fm.nrows() {
                return Err(CliError::invalid(format!(
                    "graph has {} objects, features have {}",
                    a.len(),
                    fm.nrows()
                )));
            }
            a
        }
        None => {
            check_k(args.k, fm.nrows(), "--k")?;
            build_adjacency(fm.values.view(), args.k, args.metric)?
        }
    };
    let p = propagation_matrix(&adjacency);
    let start = Instant::now();
    let (model, report) = detect(fm.values.view(), &p, &cfg, n)?;
    let elapsed = start.elapsed().as_secs_f64();

    let mut out = Outputs::new(args)?;
    out.seeds.insert("model", cfg.seed);
    out.timings.insert("train_and_score", elapsed);
    detection_outputs(&mut out, &report, &Checkpoint::new(&model, &cfg))?;
    Ok(out)
}

// ---- baseline --------------------------------------------------------------

#[derive(Debug, Args, Serialize)]
pub struct BaselineArgs {
    /// ae | lof | cof
    #[arg(long)]
    pub algo: Algo,
    /// features.csv written by `features`
    #[arg(long)]
    pub features: PathBuf,
    /// Neighbours for lof and cof
    #[arg(long, default_value_t = 10)]
    pub k: usize,
    /// Objects to flag; defaults to the number of labeled faults
    #[arg(long)]
    pub n: Option<usize>,
    #[command(flatten)]
    pub model: ModelArgs,
}

fn run_baseline(algo: Algo, fm: &FeatureMatrix, k: usize, cfg: &TrainConfig) -> Result<BaselineScores, CliError> {
    let x = fm.values.view();
    Ok(match algo {
        Algo::Ae => ae_scores(x, cfg)?,
        Algo::Lof => {
            check_k(k, fm.nrows(), "k")?;
            lof_scores(x, k)?
        }
        Algo::Cof => {
            check_k(k, fm.nrows(), "k")?;
            cof_scores(x, k)?
        }
    })
}

pub fn baseline(args: &BaselineArgs) -> Result<Outputs, CliError> {
    let fm = load_features(&args.features)?;
    let cfg = args.model.train_config();
    cfg.validate()?;
    let n = resolve_n(args.n, &fm.labels)?;
    let scores = run_baseline(args.algo, &fm, args.k, &cfg)?;
    let report = BaselineReport::new(scores, n)?;
    let mut out = Outputs::new(args)?;
    if args.algo == Algo::Ae {
        out.seeds.insert("model", cfg.seed);
    }
    out.add_json("report.json", &report)?;
    out.add("scores.csv", io::scores_csv(&report.ff, &report.flagged)?);
    Ok(out)
}

// ---- eval ------------------------------------------------------------------

#[derive(Debug, Args, Serialize)]
pub struct EvalArgs {
    /// report.json written by `detect` or `baseline`
    #[arg(long)]
    pub report: PathBuf,
    /// Any CSV with a `label` column (features.csv or dataset.csv)
    #[arg(long)]
    pub labels: PathBuf,
}

fn evaluation(ff: &[f64], flagged: &[usize], labels: &[Label]) -> Result<EvalReport, CliError> {
    if ff.len() != labels.len() {
        return Err(CliError::invalid(format!(
            "report scores {} objects but {} labels were given",
            ff.len(),
            labels.len()
        )));
    }
    let faults = fault_mask(labels)?;
    Ok(evaluate(ff, flagged, &faults)?)
}

pub fn eval(args: &EvalArgs) -> Result<Outputs, CliError> {
    require_file(&args.report, "report")?;
    require_file(&args.labels, "labels file")?;
    let report: ScoredReport = io::read_json(&args.report)?;
    let labels = io::read_labels(&args.labels)?;
    let eval = evaluation(&report.ff, &report.flagged, &labels)?;
    let mut out = Outputs::new(args)?;
    out.add_json("eval.json", &eval)?;
    Ok(out)
}

// ---- sweep -----------------------------------------------------------------

#[derive(Debug, Args, Serialize)]
pub struct SweepArgs {
    /// features.csv written by `features`
    #[arg(long)]
    pub features: PathBuf,
    /// JSON grid {k, eta, iters, hidden, metric, extra_hidden_layers};
    /// the 144-cell default grid when omitted
    #[arg(long)]
    pub grid: Option<PathBuf>,
    /// fixed | per_cell
    #[arg(long, default_value = "per_cell")]
    pub seed_policy: SeedPolicy,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Objects to flag; defaults to the number of labeled faults
    #[arg(long)]
    pub n: Option<usize>,
}

#[derive(Serialize)]
struct SweepSummary<'a> {
    #[serde(flatten)]
    result: &'a SweepResult,
    auc_by_k: Vec<(usize, f64)>,
    auc_by_depth: Vec<(usize, f64)>,
}

fn sweep_outputs(out: &mut Outputs, result: &SweepResult) -> Result<(), CliError> {
    out.add("sweep.csv", io::sweep_csv(result)?);
    out.add_json(
        "sweep.json",
        &SweepSummary {
            result,
            auc_by_k: result.auc_by_k(),
            auc_by_depth: result.auc_by_depth(),
        },
    )
}

pub fn sweep(args: &SweepArgs) -> Result<Outputs, CliError> {
    let fm = load_features(&args.features)?;
    let grid: SweepGrid = match &args.grid {
        Some(path) => {
            require_file(path, "grid file")?;
            io::read_json(path)?
        }
        None => SweepGrid::default(),
    };
    fault_mask(&fm.labels)?;
    let n = resolve_n(args.n, &fm.labels)?;
    let result = parameter_sweep(&fm, &grid, args.seed_policy, args.seed, Some(n))?;
    let mut out = Outputs::new(args)?;
    out.config["resolved_grid"] = serde_json::to_value(&grid).map_err(|e| CliError::runtime(e.to_string()))?;
    out.seeds.insert("sweep", args.seed);
    sweep_outputs(&mut out, &result)?;
    Ok(out)
}

// ---- pca -------------------------------------------------------------------

#[derive(Debug, Args, Serialize)]
pub struct PcaArgs {
    /// features.csv written by `features`
    #[arg(long)]
    pub features: PathBuf,
    /// report.json whose flagged objects are marked in the output
    #[arg(long)]
    pub report: Option<PathBuf>,
}

fn pca_output(out: &mut Outputs, fm: &FeatureMatrix, flagged: &[usize]) -> Result<(), CliError> {
    let pca = pca_project(fm.values.view(), 2)?;
    out.add("pca.csv", io::pca_csv(&pca, &fm.labels, flagged)?);
    Ok(())
}

pub fn pca(args: &PcaArgs) -> Result<Outputs, CliError> {
    let fm = load_features(&args.features)?;
    let flagged = match &args.report {
        Some(path) => {
            require_file(path, "report")?;
            let r: ScoredReport = io::read_json(path)?;
            if r.ff.len() != fm.nrows() {
                return Err(CliError::invalid("report and features cover different objects"));
            }
            r.flagged
        }
        None => Vec::new(),
    };
    let mut out = Outputs::new(args)?;
    pca_output(&mut out, &fm, &flagged)?;
    Ok(out)
}

// ---- pipeline --------------------------------------------------------------

#[derive(Debug, Args, Serialize)]
pub struct PipelineArgs {
    /// Pipeline config (JSON)
    #[arg(long)]
    pub config: PathBuf,
}

/// Runs ingest, features, graph, detect, eval and pca in sequence, plus the
/// configured baselines and sweep. Returns the output directory from the
/// config alongside the outputs.
pub fn pipeline(args: &PipelineArgs) -> Result<(PathBuf, Outputs), CliError> {
    let cfg = PipelineConfig::load(&args.config)?;
    cfg.validate()?;
    let seeds = StageSeeds::derive(cfg.seed);
    let mut out = Outputs::new(&cfg)?;
    out.config["stage_seeds"] = json!(seeds);
    for (name, value) in [
        ("master", seeds.master),
        ("group", seeds.group),
        ("eemd", seeds.eemd),
        ("model", seeds.model),
    ] {
        out.seeds.insert(name, value);
    }

    let spec = cfg.group_spec(seeds.group)?;
    let ds = group_dataset(&cfg.manifest, &spec)?;
    out.add("dataset.csv", io::dataset_csv(&ds)?);

    let start = Instant::now();
    let fm = build_feature_matrix(&ds, &cfg.features.params(seeds.eemd))?;
    out.timings.insert("features", start.elapsed().as_secs_f64());
    feature_outputs(&mut out, &fm, &cfg.features, seeds.eemd)?;
    let faults = fault_mask(&fm.labels)?;
    let n = resolve_n(cfg.n, &fm.labels)?;

    let adjacency = build_adjacency(fm.values.view(), cfg.graph.k, cfg.graph.metric)?;
    graph_outputs(&mut out, &adjacency)?;

    let train = cfg.model.train_config(seeds.model);
    let start = Instant::now();
    let (model, report) = detect(fm.values.view(), &propagation_matrix(&adjacency), &train, n)?;
    out.timings.insert("train_and_score", start.elapsed().as_secs_f64());
    detection_outputs(&mut out, &report, &Checkpoint::new(&model, &train))?;

    let gnn_eval = evaluate(&report.ff, &report.flagged, &faults)?;
    out.add_json("eval.json", &gnn_eval)?;
    pca_output(&mut out, &fm, &report.flagged)?;

    if let Some(b) = &cfg.baselines {
        let k = b.k.unwrap_or(cfg.graph.k);
        let mut comparison = vec![json!({ "detector": "gnn", "eval": gnn_eval })];
        for &algo in &b.algos {
            let scores = run_baseline(algo, &fm, k, &train)?;
            let report = BaselineReport::new(scores, n)?;
            let eval = evaluation(&report.ff, &report.flagged, &fm.labels)?;
            out.add_json(&format!("baseline_{algo}.json"), &report)?;
            comparison.push(json!({ "detector": algo.as_str(), "eval": eval }));
        }
        out.add_json("comparison.json", &comparison)?;
    }

    if let Some(s) = &cfg.sweep {
        out.seeds.insert("sweep", seeds.sweep);
        let start = Instant::now();
        let result = parameter_sweep(&fm, &s.grid, s.seed_policy, seeds.sweep, Some(n))?;
        out.timings.insert("sweep", start.elapsed().as_secs_f64());
        sweep_outputs(&mut out, &result)?;
    }
    Ok((cfg.out_dir.clone(), out))
}
