//! Command-line front end. Every invocation produces one JSON run report
//! (to `--report`, else standard error) and a short summary on standard output.

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::brep::io::{model_from_str, model_to_string};
use crate::brep::{generate_dataset, generate_solid, BrepModel, SolidKind, SolidParams};
use crate::decompose::{
    convergence_study, decompose_model, max_residual, primitives_from_str, primitives_to_string, ModelPrimitives,
    QuadtreeOptions, DEFAULT_MAX_DEPTH, DEFAULT_TAU,
};
use crate::error::{Error, Result};
use crate::geom::NurbsCurve;
use crate::net::{
    accuracy, dataset_loss, decode_checkpoint, encode_checkpoint, finetune_head, gradcheck, init_params, trace_csv, train,
    Checkpoint, FinetuneOptions, Labels, ModelConfig, Strategy, Task, TrainOptions,
};
use crate::sampling::{decode_targets, encode_targets, sample_entity_points, ShapeTargets, DEFAULT_POINTS_PER_PRIMITIVE};
use crate::tokenize::{decode_batch, encode_batch, tokenize_model, Caps, TokenBatch};
use crate::util::{parse_json, sha256_hex, write_atomic};

#[derive(Debug, Parser)]
#[command(name = "brep2shape", version, about = "B-rep decomposition, tokenization and pre-training")]
pub struct Cli {
    /// Where to write the JSON run report (default: standard error).
    #[arg(long, global = true)]
    pub report: Option<PathBuf>,
    /// More log output (-v info, -vv debug).
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    pub verbose: u8,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate synthetic solids.
    Gen(GenArgs),
    /// Decompose a model into standard-degree Bézier primitives.
    Decompose(DecomposeArgs),
    /// Sample target points on the primitives.
    Sample(SampleArgs),
    /// Build the token tensors of a model.
    Tokenize(TokenizeArgs),
    /// Pre-train on a directory of token/target pairs.
    Pretrain(PretrainArgs),
    /// Fine-tune a checkpoint for classification or segmentation.
    Finetune(FinetuneArgs),
    /// Boundary RMSE against step size over dyadic refinements.
    VerifyConvergence(ConvergenceArgs),
    /// Analytic against finite-difference gradients on the toy model.
    Gradcheck(GradcheckArgs),
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Gen(_) => "gen",
            Command::Decompose(_) => "decompose",
            Command::Sample(_) => "sample",
            Command::Tokenize(_) => "tokenize",
            Command::Pretrain(_) => "pretrain",
            Command::Finetune(_) => "finetune",
            Command::VerifyConvergence(_) => "verify-convergence",
            Command::Gradcheck(_) => "gradcheck",
        }
    }

    fn config(&self) -> Value {
        let v = match self {
            Command::Gen(a) => serde_json::to_value(a),
            Command::Decompose(a) => serde_json::to_value(a),
            Command::Sample(a) => serde_json::to_value(a),
            Command::Tokenize(a) => serde_json::to_value(a),
            Command::Pretrain(a) => serde_json::to_value(a),
            Command::Finetune(a) => serde_json::to_value(a),
            Command::VerifyConvergence(a) => serde_json::to_value(a),
            Command::Gradcheck(a) => serde_json::to_value(a),
        };
        v.expect("arguments serialize")
    }
}

#[derive(Debug, Args, Serialize)]
pub struct GenArgs {
    /// box, cylinder, trimmed_plate, lofted_wedge, or mixed.
    #[arg(long, default_value = "box")]
    pub kind: String,
    /// More than one writes `model_NNNN.json` plus label files into `--out`.
    #[arg(long, default_value_t = 1)]
    pub count: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Extents `x,y,z` (single solid only).
    #[arg(long, value_delimiter = ',')]
    pub dims: Option<Vec<f64>>,
    #[arg(long)]
    pub radius: Option<f64>,
    #[arg(long)]
    pub height: Option<f64>,
    #[arg(long)]
    pub hole_radius: Option<f64>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args, Serialize)]
pub struct DecomposeArgs {
    #[arg(long)]
    pub input: PathBuf,
    /// Chord-to-arc threshold for boundary cells.
    #[arg(long, default_value_t = DEFAULT_TAU)]
    pub tau: f64,
    #[arg(long, default_value_t = DEFAULT_MAX_DEPTH)]
    pub max_depth: u32,
    /// Parameter samples per primitive edge for the residual check.
    #[arg(long, default_value_t = 8)]
    pub residual_samples: usize,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args, Serialize)]
pub struct SampleArgs {
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long)]
    pub primitives: PathBuf,
    /// Points per primitive.
    #[arg(short, default_value_t = DEFAULT_POINTS_PER_PRIMITIVE)]
    pub m: usize,
    /// Face and edge primitive caps.
    #[arg(long, default_value = "32,8")]
    pub caps: String,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args, Serialize)]
pub struct TokenizeArgs {
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long)]
    pub primitives: PathBuf,
    #[arg(long, default_value = "32,8")]
    pub caps: String,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args, Serialize)]
pub struct PretrainArgs {
    /// Directory of `<stem>.b2t` token files with matching `<stem>.b2s` targets.
    #[arg(long)]
    pub data_dir: PathBuf,
    /// Model config JSON; without it the default config takes caps and m from the data.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Overrides the config width.
    #[arg(long)]
    pub width: Option<usize>,
    #[arg(long, default_value_t = 100)]
    pub steps: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = crate::net::train::DEFAULT_LR)]
    pub lr: f64,
    #[arg(long, default_value_t = crate::net::train::DEFAULT_WEIGHT_DECAY)]
    pub weight_decay: f64,
    #[arg(long, default_value_t = 0)]
    pub warmup_steps: usize,
    /// Loss trace CSV (default: `--out` with a `.csv` extension).
    #[arg(long)]
    pub trace: Option<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args, Serialize)]
pub struct FinetuneArgs {
    #[arg(long)]
    pub checkpoint: PathBuf,
    /// Directory of `<stem>.b2t` token files.
    #[arg(long)]
    pub data_dir: PathBuf,
    #[arg(long, value_enum)]
    pub task: TaskArg,
    /// JSON object mapping each stem to a class (classify) or a list of face classes (segment).
    #[arg(long)]
    pub labels: PathBuf,
    #[arg(long, value_enum, default_value = "full")]
    pub strategy: StrategyArg,
    #[arg(long, default_value_t = 300)]
    pub steps: usize,
    #[arg(long, default_value_t = crate::net::train::DEFAULT_LR)]
    pub lr: f64,
    #[arg(long, default_value_t = crate::net::train::DEFAULT_WEIGHT_DECAY)]
    pub weight_decay: f64,
    #[arg(long, default_value_t = crate::net::finetune::DEFAULT_HEAD_RATE)]
    pub head_rate: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum TaskArg {
    Classify,
    Segment,
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum StrategyArg {
    Linear,
    Partial,
    Full,
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum CurveArg {
    Circle,
    /// Semi-axes 2 and 1.
    Ellipse,
}

#[derive(Debug, Args, Serialize)]
pub struct ConvergenceArgs {
    #[arg(long, value_enum, default_value = "circle")]
    pub curve: CurveArg,
    #[arg(long, default_value_t = 6)]
    pub levels: usize,
    /// Pieces at the coarsest level.
    #[arg(long, default_value_t = 8)]
    pub base: usize,
    /// CSV of `h,rmse` rows.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
pub struct GradcheckArgs {
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Sampled scalar parameters.
    #[arg(long, default_value_t = 50)]
    pub count: usize,
    /// Largest accepted relative error.
    #[arg(long, default_value_t = 1e-4)]
    pub tolerance: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FileDigest {
    pub path: PathBuf,
    pub sha256: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorEntry {
    pub kind: String,
    pub message: String,
    pub exit_code: i32,
}

/// One per invocation; the exit code is 0 iff `errors` is empty.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub command: String,
    pub inputs: Vec<FileDigest>,
    pub outputs: Vec<FileDigest>,
    pub config: Value,
    pub metrics: BTreeMap<String, Value>,
    pub errors: Vec<ErrorEntry>,
    pub wall_time_s: f64,
}

impl RunReport {
    fn new(command: &str, config: Value) -> Self {
        Self {
            command: command.to_string(),
            inputs: Vec::new(),
            outputs: Vec::new(),
            config,
            metrics: BTreeMap::new(),
            errors: Vec::new(),
            wall_time_s: 0.0,
        }
    }

    pub fn exit_code(&self) -> i32 {
        self.errors.first().map_or(0, |e| e.exit_code)
    }

    fn metric(&mut self, name: &str, value: impl Serialize) {
        self.metrics
            .insert(name.to_string(), serde_json::to_value(value).expect("metric serialize"));
    }

    fn fail(&mut self, err: &Error) {
        self.errors.push(ErrorEntry {
            kind: err.kind().to_string(),
            message: err.to_string(),
            exit_code: err.exit_code(),
        });
    }

    fn read(&mut self, path: &Path) -> Result<Vec<u8>> {
        let bytes = crate::util::read_bytes(path)?;
        self.inputs.push(FileDigest {
            path: path.to_path_buf(),
            sha256: sha256_hex(&bytes),
        });
        Ok(bytes)
    }

    fn read_text(&mut self, path: &Path) -> Result<String> {
        let bytes = self.read(path)?;
        String::from_utf8(bytes).map_err(|e| Error::parse(path.display().to_string(), e.to_string()))
    }

    fn write(&mut self, path: &Path, bytes: &[u8]) -> Result<()> {
        write_atomic(path, bytes)?;
        self.outputs.push(FileDigest {
            path: path.to_path_buf(),
            sha256: sha256_hex(bytes),
        });
        Ok(())
    }
}

/// Parses `args` (program name first), runs the command and returns the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let args: Vec<OsString> = args.into_iter().map(Into::into).collect();
    let started = Instant::now();
    let cli = match Cli::try_parse_from(&args) {
        Ok(cli) => cli,
        Err(e) if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) => {
            let _ = e.print();
            return 0;
        }
        Err(e) => {
            let _ = e.print();
            let mut report = RunReport::new(&guess_command(&args), Value::Null);
            let rendered = e.to_string();
            let first = rendered.lines().next().unwrap_or_default();
            report.fail(&Error::Argument(first.trim_start_matches("error: ").to_string()));
            report.wall_time_s = started.elapsed().as_secs_f64();
            return emit(&report, guess_report_path(&args).as_deref());
        }
    };
    init_logging(cli.verbose);
    let mut report = RunReport::new(cli.command.name(), cli.command.config());
    let result = match &cli.command {
        Command::Gen(a) => cmd_gen(a, &mut report),
        Command::Decompose(a) => cmd_decompose(a, &mut report),
        Command::Sample(a) => cmd_sample(a, &mut report),
        Command::Tokenize(a) => cmd_tokenize(a, &mut report),
        Command::Pretrain(a) => cmd_pretrain(a, &mut report),
        Command::Finetune(a) => cmd_finetune(a, &mut report),
        Command::VerifyConvergence(a) => cmd_verify_convergence(a, &mut report),
        Command::Gradcheck(a) => cmd_gradcheck(a, &mut report),
    };
    if let Err(e) = result {
        eprintln!("error: {e}");
        report.fail(&e);
    }
    report.wall_time_s = started.elapsed().as_secs_f64();
    emit(&report, cli.report.as_deref())
}

fn init_logging(verbose: u8) {
    let level = match verbose {
        0 => log::LevelFilter::Warn,
        1 => log::LevelFilter::Info,
        _ => log::LevelFilter::Debug,
    };
    let _ = env_logger::Builder::new().filter_level(level).parse_default_env().try_init();
}

fn emit(report: &RunReport, path: Option<&Path>) -> i32 {
    let text = serde_json::to_string_pretty(report).expect("report serialize");
    match path {
        Some(p) => {
            if let Err(e) = write_atomic(p, text.as_bytes()) {
                eprintln!("error: {e}");
                return e.exit_code();
            }
        }
        None => eprintln!("{text}"),
    }
    report.exit_code()
}

fn guess_command(args: &[OsString]) -> String {
    args.iter()
        .skip(1)
        .filter_map(|a| a.to_str())
        .find(|a| !a.starts_with('-'))
        .unwrap_or("")
        .to_string()
}

fn guess_report_path(args: &[OsString]) -> Option<PathBuf> {
    let mut it = args.iter().skip(1);
    while let Some(a) = it.next() {
        let s = a.to_string_lossy();
        if s == "--report" {
            return it.next().map(PathBuf::from);
        }
        if let Some(p) = s.strip_prefix("--report=") {
            return Some(PathBuf::from(p));
        }
    }
    None
}

fn parse_caps(s: &str) -> Result<Caps> {
    let parts: Vec<&str> = s.split(',').map(str::trim).collect();
    let caps = match parts.as_slice() {
        [f, e] => match (f.parse(), e.parse()) {
            (Ok(face), Ok(edge)) => Caps { face, edge },
            _ => return Err(Error::arg(format!("caps must be two integers, got {s:?}"))),
        },
        _ => return Err(Error::arg(format!("caps must be `face,edge`, got {s:?}"))),
    };
    caps.validate()?;
    Ok(caps)
}

fn load_model(report: &mut RunReport, path: &Path) -> Result<BrepModel> {
    model_from_str(&report.read_text(path)?)
}

fn load_primitives(report: &mut RunReport, path: &Path, model: &BrepModel) -> Result<ModelPrimitives> {
    let prims = primitives_from_str(&report.read_text(path)?)?;
    prims.check_matches(model)?;
    Ok(prims)
}

fn cmd_gen(a: &GenArgs, report: &mut RunReport) -> Result<()> {
    if a.count == 0 {
        return Err(Error::arg("count must be at least 1"));
    }
    let kinds: Vec<SolidKind> = match a.kind.as_str() {
        "mixed" => SolidKind::ALL.to_vec(),
        k => vec![k.parse()?],
    };
    let explicit = a.dims.is_some() || a.radius.is_some() || a.height.is_some() || a.hole_radius.is_some();
    let models = if a.count == 1 && kinds.len() == 1 {
        let d = SolidParams::default();
        let dims = match a.dims.as_deref() {
            Some(&[x, y, z]) => [x, y, z],
            Some(v) => return Err(Error::arg(format!("--dims needs 3 values, got {}", v.len()))),
            None => d.dims,
        };
        let params = SolidParams {
            dims,
            radius: a.radius.unwrap_or(d.radius),
            height: a.height.unwrap_or(d.height),
            hole_radius: a.hole_radius.unwrap_or(d.hole_radius),
        };
        vec![generate_solid(kinds[0], &params, a.seed)?]
    } else {
        if explicit {
            return Err(Error::arg("dimension flags apply to a single solid of one kind"));
        }
        generate_dataset(&kinds, a.count, a.seed)?
    };
    let (faces, edges): (usize, usize) = models.iter().map(|m| (m.num_faces(), m.num_edges())).fold((0, 0), |s, x| (s.0 + x.0, s.1 + x.1));
    if a.count == 1 {
        report.write(&a.out, model_to_string(&models[0]).as_bytes())?;
        println!("gen: {} with {faces} faces, {edges} edges -> {}", a.kind, a.out.display());
    } else {
        std::fs::create_dir_all(&a.out).map_err(|e| Error::io(&a.out, e))?;
        let mut classes = BTreeMap::new();
        let mut face_classes = BTreeMap::new();
        let texts: Vec<(String, String)> = models
            .iter()
            .enumerate()
            .map(|(i, m)| (format!("model_{i:04}"), model_to_string(m)))
            .collect();
        for ((stem, text), m) in texts.iter().zip(&models) {
            report.write(&a.out.join(format!("{stem}.json")), text.as_bytes())?;
            classes.insert(stem.clone(), m.label());
            face_classes.insert(stem.clone(), face_kinds(m));
        }
        report.write(&a.out.join("labels.json"), serde_json::to_string_pretty(&classes).expect("labels").as_bytes())?;
        report.write(
            &a.out.join("face_labels.json"),
            serde_json::to_string(&face_classes).expect("labels").as_bytes(),
        )?;
        println!("gen: {} solids ({faces} faces, {edges} edges) -> {}", a.count, a.out.display());
    }
    report.metric("models", models.len());
    report.metric("faces", faces);
    report.metric("edges", edges);
    Ok(())
}

/// 0 for planar faces, 1 for curved ones.
pub fn face_kinds(model: &BrepModel) -> Vec<usize> {
    model.faces().iter().map(|f| usize::from(!f.surface.is_planar())).collect()
}

fn cmd_decompose(a: &DecomposeArgs, report: &mut RunReport) -> Result<()> {
    let options = QuadtreeOptions {
        tau: a.tau,
        max_depth: a.max_depth,
    };
    options.validate()?;
    let model = load_model(report, &a.input)?;
    let prims = decompose_model(&model, options)?;
    let residual = max_residual(&model, &prims, a.residual_samples)?;
    report.write(&a.out, primitives_to_string(&prims).as_bytes())?;
    report.metric("faces", model.num_faces());
    report.metric("edges", model.num_edges());
    report.metric("triangles", prims.num_triangles());
    report.metric("segments", prims.num_segments());
    report.metric("max_residual", residual);
    report.metric("unconverged_cells", prims.unconverged_cells);
    println!(
        "decompose: {} faces -> {} triangles, {} edges -> {} segments, max residual {residual:.3e}, {} unconverged cells",
        model.num_faces(),
        prims.num_triangles(),
        model.num_edges(),
        prims.num_segments(),
        prims.unconverged_cells
    );
    Ok(())
}

fn cmd_sample(a: &SampleArgs, report: &mut RunReport) -> Result<()> {
    let caps = parse_caps(&a.caps)?;
    if a.m == 0 {
        return Err(Error::arg("m must be at least 1"));
    }
    let model = load_model(report, &a.input)?;
    let prims = load_primitives(report, &a.primitives, &model)?;
    let targets = sample_entity_points(&model, &prims, a.m, caps)?;
    report.write(&a.out, &encode_targets(&targets))?;
    let fv = targets.face_mask.iter().filter(|&&x| x != 0).count();
    let ev = targets.edge_mask.iter().filter(|&&x| x != 0).count();
    report.metric("face_points", fv);
    report.metric("edge_points", ev);
    report.metric("face_slots", targets.face_slots);
    report.metric("edge_slots", targets.edge_slots);
    println!("sample: {fv} face points, {ev} edge points (m = {}) -> {}", a.m, a.out.display());
    Ok(())
}

fn cmd_tokenize(a: &TokenizeArgs, report: &mut RunReport) -> Result<()> {
    let caps = parse_caps(&a.caps)?;
    let model = load_model(report, &a.input)?;
    let prims = load_primitives(report, &a.primitives, &model)?;
    let batch = tokenize_model(&model, &prims, caps)?;
    report.write(&a.out, &encode_batch(&batch))?;
    let fv = batch.face_mask.iter().filter(|&&x| x != 0).count();
    let ev = batch.edge_mask.iter().filter(|&&x| x != 0).count();
    let dropped = prims.num_triangles() + prims.num_segments() - fv - ev;
    report.metric("faces", batch.num_faces);
    report.metric("edges", batch.num_edges);
    report.metric("face_tokens", fv);
    report.metric("edge_tokens", ev);
    report.metric("truncated_primitives", dropped);
    report.metric("face_adjacency", batch.face_adjacency.len());
    report.metric("edge_adjacency", batch.edge_adjacency.len());
    println!(
        "tokenize: {fv} face / {ev} edge primitives, {} + {} adjacency triples, {dropped} truncated -> {}",
        batch.face_adjacency.len(),
        batch.edge_adjacency.len(),
        a.out.display()
    );
    Ok(())
}

/// Sorted stems of the files with extension `ext` in `dir`.
fn stems(dir: &Path, ext: &str) -> Result<Vec<String>> {
    let mut out = Vec::new();
    for entry in std::fs::read_dir(dir).map_err(|e| Error::io(dir, e))? {
        let path = entry.map_err(|e| Error::io(dir, e))?.path();
        if path.extension().and_then(|e| e.to_str()) == Some(ext) {
            if let Some(s) = path.file_stem().and_then(|s| s.to_str()) {
                out.push(s.to_string());
            }
        }
    }
    out.sort();
    if out.is_empty() {
        return Err(Error::arg(format!("no .{ext} files in {}", dir.display())));
    }
    Ok(out)
}

fn load_batch(report: &mut RunReport, path: &Path) -> Result<TokenBatch> {
    decode_batch(&report.read(path)?)
}

fn load_targets(report: &mut RunReport, path: &Path) -> Result<ShapeTargets> {
    decode_targets(&report.read(path)?)
}

fn cmd_pretrain(a: &PretrainArgs, report: &mut RunReport) -> Result<()> {
    let mut dataset = Vec::new();
    for stem in stems(&a.data_dir, "b2t")? {
        let tpath = a.data_dir.join(format!("{stem}.b2s"));
        if !tpath.exists() {
            return Err(Error::integrity(format!("{stem}.b2t has no matching {stem}.b2s")));
        }
        let batch = load_batch(report, &a.data_dir.join(format!("{stem}.b2t")))?;
        let targets = load_targets(report, &tpath)?;
        if (targets.num_faces, targets.num_edges) != (batch.num_faces, batch.num_edges) {
            return Err(Error::integrity(format!("{stem}: tokens and targets describe different models")));
        }
        dataset.push((batch, targets));
    }
    let mut cfg = match &a.config {
        Some(p) => ModelConfig::from_json(&report.read_text(p)?)?,
        None => {
            let (b, t) = &dataset[0];
            ModelConfig {
                face_cap: b.caps.face,
                edge_cap: b.caps.edge,
                points_per_primitive: t.m,
                ..ModelConfig::default()
            }
        }
    };
    if let Some(w) = a.width {
        cfg.width = w;
    }
    cfg.validate()?;
    for (i, (_, t)) in dataset.iter().enumerate() {
        if t.face_slots != cfg.face_slots() || t.edge_slots != cfg.edge_slots() {
            return Err(Error::Config(format!(
                "sample {i} has {}/{} point slots, config expects {}/{}",
                t.face_slots,
                t.edge_slots,
                cfg.face_slots(),
                cfg.edge_slots()
            )));
        }
    }
    let opts = TrainOptions {
        steps: a.steps,
        lr: a.lr,
        weight_decay: a.weight_decay,
        seed: a.seed,
        warmup_steps: a.warmup_steps,
        ..TrainOptions::default()
    };
    opts.validate()?;
    let init = init_params(&cfg, a.seed)?;
    let initial = dataset_loss(&init, &dataset, &cfg)?;
    let result = train(&dataset, &cfg, &opts, Some(init))?;
    let last = dataset_loss(&result.params, &dataset, &cfg)?;
    let ck = Checkpoint {
        config: cfg.clone(),
        seed: a.seed,
        task: None,
        params: result.params,
    };
    report.write(&a.out, &encode_checkpoint(&ck))?;
    let trace_path = a.trace.clone().unwrap_or_else(|| a.out.with_extension("csv"));
    report.write(&trace_path, trace_csv(&result.trace).as_bytes())?;
    report.metric("models", dataset.len());
    report.metric("parameters", ck.params.num_scalars());
    report.metric("model_config", &cfg);
    report.metric("initial_loss", json!({"total": initial.total, "face": initial.face, "edge": initial.edge}));
    report.metric("final_loss", json!({"total": last.total, "face": last.face, "edge": last.edge}));
    println!(
        "pretrain: {} models, {} steps, dataset loss {:.4e} -> {:.4e} -> {}",
        dataset.len(),
        a.steps,
        initial.total,
        last.total,
        a.out.display()
    );
    Ok(())
}

#[derive(Deserialize)]
#[serde(untagged)]
enum LabelEntry {
    Class(usize),
    Faces(Vec<usize>),
}

fn cmd_finetune(a: &FinetuneArgs, report: &mut RunReport) -> Result<()> {
    let task = match a.task {
        TaskArg::Classify => Task::Classify,
        TaskArg::Segment => Task::Segment,
    };
    let strategy = match a.strategy {
        StrategyArg::Linear => Strategy::Linear,
        StrategyArg::Partial => Strategy::Partial,
        StrategyArg::Full => Strategy::Full,
    };
    let ck = decode_checkpoint(&report.read(&a.checkpoint)?)?;
    let table: BTreeMap<String, LabelEntry> = parse_json(&report.read_text(&a.labels)?)?;
    let mut batches = Vec::new();
    let (mut per_model, mut per_face) = (Vec::new(), Vec::new());
    for stem in stems(&a.data_dir, "b2t")? {
        let entry = table
            .get(&stem)
            .ok_or_else(|| Error::integrity(format!("no label for {stem}")))?;
        match (task, entry) {
            (Task::Classify, LabelEntry::Class(c)) => per_model.push(*c),
            (Task::Segment, LabelEntry::Faces(f)) => per_face.push(f.clone()),
            _ => return Err(Error::integrity(format!("label of {stem} does not fit task {task:?}"))),
        }
        batches.push(load_batch(report, &a.data_dir.join(format!("{stem}.b2t")))?);
    }
    let labels = match task {
        Task::Classify => Labels::PerModel(per_model),
        Task::Segment => Labels::PerFace(per_face),
    };
    let train_opts = TrainOptions {
        steps: a.steps,
        lr: a.lr,
        weight_decay: a.weight_decay,
        seed: a.seed,
        ..TrainOptions::default()
    };
    let options = FinetuneOptions {
        head_rate: a.head_rate,
        ..FinetuneOptions::new(task, strategy, train_opts)
    };
    let result = finetune_head(&ck.params, &ck.config, &batches, &labels, &options)?;
    let acc = accuracy(&result.params, &batches, &labels, &ck.config, task)?;
    let out = Checkpoint {
        config: ck.config.clone(),
        seed: a.seed,
        task: Some(task),
        params: result.params,
    };
    report.write(&a.out, &encode_checkpoint(&out))?;
    let final_ce = result.trace.last().map(|t| t.1);
    report.metric("models", batches.len());
    report.metric("classes", labels.num_classes());
    report.metric("train_accuracy", acc);
    report.metric("final_loss", final_ce);
    println!(
        "finetune: {:?}/{:?} on {} models, train accuracy {:.4} -> {}",
        task,
        strategy,
        batches.len(),
        acc,
        a.out.display()
    );
    Ok(())
}

fn cmd_verify_convergence(a: &ConvergenceArgs, report: &mut RunReport) -> Result<()> {
    let circle = NurbsCurve::circle([0.0; 3], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0], 1.0)?;
    let curve = match a.curve {
        CurveArg::Circle => circle,
        CurveArg::Ellipse => circle.map_points(|p| [2.0 * p[0], p[1], p[2]]),
    };
    let study = convergence_study(&curve, a.base, a.levels)?;
    if let Some(out) = &a.out {
        let mut csv = String::from("h,rmse\n");
        for (h, e) in study.h.iter().zip(&study.rmse) {
            let _ = writeln!(csv, "{h:?},{e:?}");
        }
        report.write(out, csv.as_bytes())?;
    }
    report.metric("h", &study.h);
    report.metric("rmse", &study.rmse);
    report.metric("slope", study.slope);
    println!("verify-convergence: slope {:.4} over {} levels", study.slope, a.levels);
    Ok(())
}

fn cmd_gradcheck(a: &GradcheckArgs, report: &mut RunReport) -> Result<()> {
    if a.count == 0 {
        return Err(Error::arg("count must be at least 1"));
    }
    let r = gradcheck(a.seed, a.count)?;
    report.metric("checked", r.checked);
    report.metric("max_rel_error", r.max_rel_error);
    let worst = r
        .entries
        .iter()
        .max_by(|x, y| x.rel_error.total_cmp(&y.rel_error))
        .expect("at least one entry");
    report.metric("worst", worst);
    println!(
        "gradcheck: {} parameters, max relative error {:.3e} ({}[{}])",
        r.checked, r.max_rel_error, worst.name, worst.index
    );
    if !(r.max_rel_error < a.tolerance) {
        return Err(Error::Check(format!(
            "max relative gradient error {:.3e} exceeds {:.1e}",
            r.max_rel_error, a.tolerance
        )));
    }
    Ok(())
}
