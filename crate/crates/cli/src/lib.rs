//! The `likesense` command line.
//!
//! Results go to stdout and diagnostics to stderr. Every run ends with one of
//! the codes in [`ExitStatus`].

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use serde_json::Value;

use likesense::eval::{evaluate, reports_to_csv};
use likesense::experiments::{generate_synthetic, run_experiment_file, SyntheticSpec};
use likesense::features::{build_feature_space, build_matrix, vectorize_for_prediction, FeatureMode, Taxonomy};
use likesense::ingest::{
    load_data_dir, parse_category_fixture, parse_like_list, write_big5_table, write_category_fixture,
    write_user_likes_table, ResolverPolicy, BIG5_FILE, CATEGORY_FIXTURE_FILE, USER_LIKES_FILE,
};
use likesense::models::{fit, save_model, Algorithm, AlgorithmConfig, ModelBundle, TrainedModel};
use likesense::{CategoryPath, Error, Trait};

pub const GROUND_TRUTH_FILE: &str = "ground_truth.json";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExitStatus {
    Success = 0,
    Usage = 1,
    Data = 2,
    Runtime = 3,
}

impl ExitStatus {
    pub fn code(self) -> u8 {
        self as u8
    }
}

#[derive(Debug)]
pub struct Failure {
    pub status: ExitStatus,
    pub message: String,
}

impl Failure {
    fn usage(message: impl Into<String>) -> Self {
        Self { status: ExitStatus::Usage, message: message.into() }
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

/// Exit status for a library error.
pub fn classify(e: &Error) -> ExitStatus {
    match e {
        Error::InvalidConfig(_) | Error::InvalidHyperparameter(_) | Error::InvalidSplit(_) | Error::Json(_) => {
            ExitStatus::Usage
        }
        Error::Transport { .. } => ExitStatus::Runtime,
        _ => ExitStatus::Data,
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Self { status: classify(&e), message: e.to_string() }
    }
}

type CliResult<T> = std::result::Result<T, Failure>;

#[derive(Debug, Parser)]
#[command(name = "likesense", version, about = "Big Five trait regression from page-like categories")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Write a seeded synthetic dataset as ingestible CSVs.
    Generate(GenerateArgs),
    /// Fit one model (or one per trait) on a data directory.
    Train(TrainArgs),
    /// Predict trait scores for one user's like list.
    Predict(PredictArgs),
    /// Score a saved model on a data directory, or run an experiment config.
    Evaluate(EvaluateArgs),
    /// Run a comparison or sweep experiment config.
    Experiment(ExperimentArgs),
}

#[derive(Debug, Args)]
pub struct GenerateArgs {
    /// Synthetic spec JSON file.
    #[arg(long)]
    pub spec: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    /// Replaces the seed in the synthetic spec file.
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, Args)]
pub struct FeatureArgs {
    /// Users with fewer likes are dropped.
    #[arg(long, default_value_t = 1)]
    pub min_likes: u64,
    #[arg(long, value_parser = ["relative", "absolute"], default_value = "relative")]
    pub mode: String,
    #[arg(long, value_parser = ["both", "category_only", "subcategory_only"], default_value = "both")]
    pub taxonomy: String,
}

impl FeatureArgs {
    fn parsed(&self) -> (FeatureMode, Taxonomy) {
        let q = |s: &str| Value::String(s.to_string());
        (
            serde_json::from_value(q(&self.mode)).expect("clap restricts mode"),
            serde_json::from_value(q(&self.taxonomy)).expect("clap restricts taxonomy"),
        )
    }
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[arg(long)]
    pub data: PathBuf,
    /// linear, boosted_trees, knn, mlp or forest.
    #[arg(long)]
    pub algorithm: String,
    /// ope, con, ext, agr, neu, or `all` for a five-model bundle.
    #[arg(long = "trait")]
    pub target: String,
    /// JSON object of hyperparameters, e.g. `{"k": 8}`.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub seed: Option<u64>,
    #[command(flatten)]
    pub features: FeatureArgs,
}

#[derive(Debug, Args)]
pub struct PredictArgs {
    /// A model or bundle document.
    #[arg(long)]
    pub model: PathBuf,
    /// CSV with a `likeid` header and one like id per row.
    #[arg(long)]
    pub likes: PathBuf,
    /// Like-id category fixture (`likeid,category,subcategory`).
    #[arg(long)]
    pub categories: PathBuf,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    #[arg(long, conflicts_with = "config", requires = "data")]
    pub model: Option<PathBuf>,
    #[arg(long)]
    pub data: Option<PathBuf>,
    /// Experiment config; results are written to `--out`.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Report CSV path (model mode, default stdout) or output directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, default_value_t = 1)]
    pub min_likes: u64,
}

#[derive(Debug, Args)]
pub struct ExperimentArgs {
    #[arg(long)]
    pub config: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    /// Replaces the config's seed.
    #[arg(long)]
    pub seed: Option<u64>,
}

/// What a command produced: text for stdout.
pub type Output = String;

pub fn run(cli: Cli) -> CliResult<Output> {
    match cli.command {
        Command::Generate(a) => cmd_generate(&a),
        Command::Train(a) => cmd_train(&a),
        Command::Predict(a) => cmd_predict(&a),
        Command::Evaluate(a) => cmd_evaluate(&a),
        Command::Experiment(a) => cmd_experiment(&a),
    }
}

fn read(path: &Path) -> CliResult<String> {
    std::fs::read_to_string(path)
        .map_err(|e| Failure { status: ExitStatus::Data, message: format!("{}: {e}", path.display()) })
}

fn write(path: &Path, text: &str) -> CliResult<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(Error::from)?;
    }
    std::fs::write(path, text)
        .map_err(|e| Failure { status: ExitStatus::Runtime, message: format!("{}: {e}", path.display()) })
}

pub fn cmd_generate(a: &GenerateArgs) -> CliResult<Output> {
    let text = read(&a.spec)?;
    let mut spec: SyntheticSpec =
        serde_json::from_str(&text).map_err(|e| Failure::usage(format!("{}: {e}", a.spec.display())))?;
    if let Some(seed) = a.seed {
        spec.seed = seed;
    }
    let data = generate_synthetic(&spec)?;
    let rows = data.like_rows();
    write(&a.out.join(BIG5_FILE), &write_big5_table(data.dataset.users().map(|u| (u.user_id.as_str(), &u.scores))))?;
    write(&a.out.join(USER_LIKES_FILE), &write_user_likes_table(rows.iter().map(|(u, l)| (u.as_str(), l.as_str()))))?;
    write(&a.out.join(CATEGORY_FIXTURE_FILE), &write_category_fixture(&data.catalog))?;
    write(&a.out.join(GROUND_TRUTH_FILE), &(serde_json::to_string_pretty(&data.truth).map_err(Error::from)? + "\n"))?;
    eprintln!("generated {} users, {} likes into {}", data.dataset.len(), rows.len(), a.out.display());
    Ok(String::new())
}

/// Hyperparameters for `algorithm` from an optional JSON object.
pub fn algorithm_config(algorithm: &str, config: Option<&str>) -> CliResult<AlgorithmConfig> {
    let algorithm: Algorithm = algorithm.parse()?;
    let mut obj = match config {
        None => serde_json::Map::new(),
        Some(text) => match serde_json::from_str(text).map_err(|e| Failure::usage(format!("config: {e}")))? {
            Value::Object(m) => m,
            _ => return Err(Failure::usage("config must be a JSON object")),
        },
    };
    match obj.get("name") {
        Some(Value::String(n)) if n != algorithm.name() => {
            return Err(Failure::usage(format!("config is for {n}, not {algorithm}")));
        }
        Some(Value::String(_)) | None => {}
        Some(_) => return Err(Failure::usage("config name must be a string")),
    }
    obj.insert("name".into(), Value::String(algorithm.name().into()));
    serde_json::from_value(Value::Object(obj)).map_err(|e| Failure::usage(format!("config: {e}")))
}

fn parse_targets(s: &str) -> CliResult<Vec<Trait>> {
    if s == "all" {
        return Ok(Trait::ALL.to_vec());
    }
    Ok(vec![s.parse::<Trait>().map_err(|_| Failure::usage(format!("unknown trait {s:?}")))?])
}

#[derive(Serialize)]
struct TrainReport {
    #[serde(rename = "trait")]
    target: Trait,
    algorithm: Algorithm,
    n_train: usize,
    dim: usize,
    train_mse: f64,
    train_rmse: f64,
}

pub fn cmd_train(a: &TrainArgs) -> CliResult<Output> {
    let config_text = a.config.as_deref().map(read).transpose()?;
    let mut config = algorithm_config(&a.algorithm, config_text.as_deref())?;
    if let Some(seed) = a.seed {
        config = config.with_seed(seed);
    }
    let targets = parse_targets(&a.target)?;
    let (mode, taxonomy) = a.features.parsed();

    let (dataset, ingest) = load_data_dir(&a.data, &ResolverPolicy::Drop)?;
    eprintln!("ingested {} users, {} of {} likes resolved", dataset.len(), ingest.likes_resolved, ingest.likes_parsed);
    let projected = taxonomy.project_dataset(&dataset);
    let filtered = likesense::features::filter_min_likes(&projected, a.features.min_likes);
    let space = build_feature_space(&filtered)?;
    let matrix = build_matrix(&filtered, &space, a.features.min_likes, mode)?;

    let mut models = Vec::new();
    let mut reports = Vec::new();
    for t in targets {
        let model = fit(&matrix, t, &config, taxonomy)?;
        let r = evaluate(&model, &matrix)?;
        reports.push(TrainReport {
            target: t,
            algorithm: r.algorithm,
            n_train: matrix.len(),
            dim: space.dim(),
            train_mse: r.mse,
            train_rmse: r.rmse,
        });
        models.push(model);
    }
    let doc = if models.len() == 1 { save_model(&models[0])? } else { ModelBundle { models }.save()? };
    write(&a.out, &doc)?;
    let report = if reports.len() == 1 {
        serde_json::to_string_pretty(&reports[0])
    } else {
        serde_json::to_string_pretty(&reports)
    }
    .map_err(Error::from)?;
    Ok(report + "\n")
}

/// Five trait values; traits without a model are `null`.
#[derive(Debug, Default, Serialize)]
pub struct Prediction {
    pub ope: Option<f64>,
    pub con: Option<f64>,
    pub ext: Option<f64>,
    pub agr: Option<f64>,
    pub neu: Option<f64>,
}

impl Prediction {
    fn set(&mut self, t: Trait, v: f64) {
        let slot = match t {
            Trait::Ope => &mut self.ope,
            Trait::Con => &mut self.con,
            Trait::Ext => &mut self.ext,
            Trait::Agr => &mut self.agr,
            Trait::Neu => &mut self.neu,
        };
        *slot = Some(v);
    }
}

fn predict_one(model: &TrainedModel, counts: &BTreeMap<CategoryPath, u64>) -> likesense::Result<f64> {
    let projected = model.features.taxonomy.project_counts(counts);
    let x = vectorize_for_prediction(&projected, &model.feature_space, model.features.mode)?;
    model.predict(&x)
}

/// Resolves `likes` through the fixture and predicts every trait in `bundle`.
pub fn predict_likes(
    bundle: &ModelBundle,
    likes: &[String],
    fixture: &likesense::ingest::LikeCategoryMap,
) -> CliResult<Prediction> {
    let mut counts: BTreeMap<CategoryPath, u64> = BTreeMap::new();
    for id in likes {
        if let Some(p) = fixture.get(id) {
            *counts.entry(p.clone()).or_insert(0) += 1;
        }
    }
    let resolved: u64 = counts.values().sum();
    eprintln!("resolved {resolved} of {} likes", likes.len());
    if resolved == 0 {
        return Err(Failure { status: ExitStatus::Data, message: "no like could be resolved to a category".into() });
    }
    let mut out = Prediction::default();
    for m in &bundle.models {
        out.set(m.target, predict_one(m, &counts)?);
    }
    Ok(out)
}

pub fn cmd_predict(a: &PredictArgs) -> CliResult<Output> {
    let bundle = ModelBundle::load(&read(&a.model)?)?;
    let likes = parse_like_list(&read(&a.likes)?)?;
    let fixture = parse_category_fixture(&read(&a.categories)?)?;
    let p = predict_likes(&bundle, &likes, &fixture)?;
    Ok(serde_json::to_string_pretty(&p).map_err(Error::from)? + "\n")
}

pub fn cmd_evaluate(a: &EvaluateArgs) -> CliResult<Output> {
    if let Some(config) = &a.config {
        let out = a.out.as_deref().ok_or_else(|| Failure::usage("--config needs --out <dir>"))?;
        return run_config(config, out, a.seed);
    }
    let (Some(model_path), Some(data)) = (&a.model, &a.data) else {
        return Err(Failure::usage("evaluate needs --model and --data, or --config"));
    };
    let bundle = ModelBundle::load(&read(model_path)?)?;
    let (dataset, _) = load_data_dir(data, &ResolverPolicy::Drop)?;
    let mut reports = Vec::new();
    for m in &bundle.models {
        let projected = m.features.taxonomy.project_dataset(&dataset);
        // unseen categories have no column; the rows are rebuilt on the model's space
        let restricted = restrict_to_space(&projected, &m.feature_space, a.min_likes);
        let matrix = build_matrix(&restricted, &m.feature_space, a.min_likes, m.features.mode)?;
        reports.push(evaluate(m, &matrix)?);
    }
    let csv = reports_to_csv(&reports);
    match &a.out {
        Some(path) => {
            write(path, &csv)?;
            Ok(String::new())
        }
        None => Ok(csv),
    }
}

/// Drops categories outside `space` and then users left with fewer than
/// `min_likes` likes.
fn restrict_to_space(
    dataset: &likesense::Dataset,
    space: &likesense::FeatureSpace,
    min_likes: u64,
) -> likesense::Dataset {
    let users = dataset.users().filter_map(|u| {
        let mut u = u.clone();
        u.like_counts.retain(|p, c| *c > 0 && space.contains(p));
        (u.total_likes() >= min_likes.max(1)).then_some(u)
    });
    likesense::Dataset::new(users).expect("ids stay unique")
}

fn run_config(config: &Path, out: &Path, seed: Option<u64>) -> CliResult<Output> {
    let written = run_experiment_file(config, out, seed)?;
    for p in &written {
        eprintln!("wrote {}", p.display());
    }
    Ok(String::new())
}

pub fn cmd_experiment(a: &ExperimentArgs) -> CliResult<Output> {
    run_config(&a.config, &a.out, a.seed)
}

/// Parses `args`, runs the command and prints its output. Returns the exit
/// code.
pub fn main_with_args<I, T>(args: I) -> u8
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitStatus::Usage.code() } else { ExitStatus::Success.code() };
        }
    };
    match run(cli) {
        Ok(out) => {
            print!("{out}");
            ExitStatus::Success.code()
        }
        Err(f) => {
            eprintln!("error: {f}");
            f.status.code()
        }
    }
}
