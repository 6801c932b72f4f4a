//! `pdadsv`: feature extraction, training, evaluation, prediction and
//! serving for the voice screening ensemble.
//!
//! stdout carries machine-readable results; diagnostics go to stderr.
//! Exit codes: 0 ok, 1 data error, 2 configuration error, 3 internal error.

mod config;

use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use pdadsv_core::dataset::{
    parse_dataset_csv, parse_feature_csv, write_feature_csv, ColumnMapping, Dataset, DatasetError,
    ParseOptions,
};
use pdadsv_core::eval::{cross_validate, load_model, save_model, train_final, EvalError, FoldPlan};
use pdadsv_core::features::{decode_wav, extract_features, FeatureError};
use pdadsv_core::gbdt::GbdtError;
use pdadsv_core::FeatureVector32;
use pdadsv_server::{final_text, ServerConfig, ServerError, DEFAULT_BIND, DEFAULT_MAX_UPLOAD_MB};
use serde_json::json;

use config::RunConfig;

#[derive(Parser)]
#[command(
    name = "pdadsv",
    version,
    about = "Voice-based Parkinson's disease screening toolkit"
)]
struct Cli {
    /// Seed for every random choice in the run (default 42).
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Flat key=value file overriding tree., bagging., dsp. and cv. parameters.
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,

    /// role=column file mapping CSV columns to subject, replication, label and features.
    #[arg(long, global = true, value_name = "FILE")]
    columns: Option<PathBuf>,

    /// More log output (-v info, -vv debug).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Compute the 32 acoustic features of a WAV file or of every WAV in a directory.
    Extract {
        /// WAV file or directory of WAV files.
        #[arg(long = "in", value_name = "PATH")]
        input: PathBuf,
        /// Output CSV.
        #[arg(long, value_name = "CSV")]
        out: PathBuf,
    },
    /// Train the four-classifier ensemble on a labelled corpus and save the bundle.
    Train {
        #[arg(long, value_name = "CSV")]
        data: PathBuf,
        /// Output bundle, conventionally `*.pdadsv.json`.
        #[arg(long, value_name = "FILE")]
        out: PathBuf,
        #[command(flatten)]
        grid: GridFlag,
    },
    /// Subject-grouped cross-validation of the full training pipeline.
    Evaluate {
        #[arg(long, value_name = "CSV")]
        data: PathBuf,
        /// Number of folds.
        #[arg(long, default_value_t = 10, conflicts_with = "loso")]
        k: usize,
        /// Leave-one-subject-out instead of k folds.
        #[arg(long)]
        loso: bool,
        #[command(flatten)]
        grid: GridFlag,
        /// Also write the full report as JSON.
        #[arg(long, value_name = "FILE")]
        report_json: Option<PathBuf>,
    },
    /// Classify feature rows with a saved bundle; one JSON line per row.
    Predict {
        #[arg(long, value_name = "FILE")]
        model: PathBuf,
        /// CSV with the 32 feature columns (canonical or corpus names).
        #[arg(long, value_name = "CSV")]
        features: PathBuf,
    },
    /// Run the HTTP inference service.
    Serve {
        /// Model bundle to load at startup; without one, prediction endpoints answer 503.
        #[arg(long, env = "PDADSV_MODEL", value_name = "FILE")]
        model: Option<PathBuf>,
        /// Listen address.
        #[arg(long, env = "PDADSV_BIND", default_value = DEFAULT_BIND, value_name = "HOST:PORT")]
        bind: String,
        /// Largest accepted request body, in MiB.
        #[arg(long, default_value_t = DEFAULT_MAX_UPLOAD_MB, value_name = "MB")]
        max_upload_mb: usize,
    },
}

#[derive(Args)]
struct GridFlag {
    /// Skip the hyperparameter grid and use the configured tree parameters.
    #[arg(long)]
    no_grid: bool,
}

enum CliError {
    Data(String),
    Config(String),
    Internal(String),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Data(_) => 1,
            CliError::Config(_) => 2,
            CliError::Internal(_) => 3,
        }
    }

    fn message(&self) -> &str {
        match self {
            CliError::Data(m) | CliError::Config(m) | CliError::Internal(m) => m,
        }
    }
}

impl From<DatasetError> for CliError {
    fn from(e: DatasetError) -> Self {
        match e {
            DatasetError::InvalidMapping(_) | DatasetError::InvalidFoldCount(_) => {
                CliError::Config(e.to_string())
            }
            _ => CliError::Data(e.to_string()),
        }
    }
}

impl From<EvalError> for CliError {
    fn from(e: EvalError) -> Self {
        match e {
            EvalError::Dataset(d) => d.into(),
            EvalError::Gbdt(GbdtError::InvalidParams(_) | GbdtError::InvalidFractions { .. }) => {
                CliError::Config(e.to_string())
            }
            EvalError::Gbdt(_)
            | EvalError::UnsupportedVersion { .. }
            | EvalError::SchemaViolation { .. }
            | EvalError::FeatureCount { .. }
            | EvalError::NonFiniteFeature { .. }
            | EvalError::EmptyEvaluation
            | EvalError::Io(_) => CliError::Data(e.to_string()),
            EvalError::Ensemble(_) => CliError::Internal(e.to_string()),
        }
    }
}

impl From<ServerError> for CliError {
    fn from(e: ServerError) -> Self {
        match e {
            ServerError::Bind { .. } => CliError::Config(e.to_string()),
            ServerError::Model { .. } => CliError::Data(e.to_string()),
            ServerError::Io(_) => CliError::Internal(e.to_string()),
        }
    }
}

fn open(path: &Path) -> Result<BufReader<File>, CliError> {
    File::open(path)
        .map(BufReader::new)
        .map_err(|e| CliError::Data(format!("cannot open {}: {e}", path.display())))
}

fn create(path: &Path) -> Result<BufWriter<File>, CliError> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| CliError::Data(format!("cannot create {}: {e}", path.display())))
}

fn load_config(path: Option<&Path>) -> Result<RunConfig, CliError> {
    let Some(path) = path else {
        return Ok(RunConfig::default());
    };
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Config(format!("cannot read config {}: {e}", path.display())))?;
    RunConfig::parse(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
}

fn load_mapping(path: Option<&Path>) -> Result<ColumnMapping, CliError> {
    let Some(path) = path else {
        return Ok(ColumnMapping::default());
    };
    let text = std::fs::read_to_string(path).map_err(|e| {
        CliError::Config(format!(
            "cannot read column mapping {}: {e}",
            path.display()
        ))
    })?;
    ColumnMapping::from_config_text(&text).map_err(|e| CliError::Config(e.to_string()))
}

fn load_dataset(path: &Path, mapping: &ColumnMapping) -> Result<Dataset, CliError> {
    let ds = parse_dataset_csv(open(path)?, mapping, ParseOptions::default())?;
    log::info!(
        "{}: {} records, {} subjects",
        path.display(),
        ds.len(),
        ds.n_subjects()
    );
    Ok(ds)
}

fn wav_inputs(input: &Path) -> Result<Vec<PathBuf>, CliError> {
    if input.is_file() {
        return Ok(vec![input.to_path_buf()]);
    }
    let entries = std::fs::read_dir(input)
        .map_err(|e| CliError::Data(format!("cannot read {}: {e}", input.display())))?;
    let mut files: Vec<PathBuf> = entries
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.is_file() && p.extension().is_some_and(|x| x.eq_ignore_ascii_case("wav")))
        .collect();
    files.sort();
    Ok(files)
}

fn extract_one(path: &Path, cfg: &RunConfig) -> Result<FeatureVector32, String> {
    let bytes = std::fs::read(path).map_err(|e| e.to_string())?;
    let clip = decode_wav(&bytes).map_err(|e: FeatureError| e.to_string())?;
    extract_features(&clip, &cfg.dsp).map_err(|e| e.to_string())
}

fn cmd_extract(input: &Path, out: &Path, cfg: &RunConfig) -> Result<(), CliError> {
    let files = wav_inputs(input)?;
    let mut rows = Vec::new();
    let mut failures = 0;
    for path in &files {
        match extract_one(path, cfg) {
            Ok(v) => {
                eprintln!("row {}: {}", rows.len() + 1, path.display());
                rows.push(v);
            }
            Err(e) => {
                eprintln!("error: {}: {e}", path.display());
                failures += 1;
            }
        }
    }
    let mut w = create(out)?;
    write_feature_csv(&mut w, &rows)?;
    w.flush()
        .map_err(|e| CliError::Data(format!("cannot write {}: {e}", out.display())))?;
    eprintln!(
        "{} rows written to {}, {failures} failed",
        rows.len(),
        out.display()
    );
    if failures > 0 {
        return Err(CliError::Data(format!(
            "{failures} of {} files failed",
            files.len()
        )));
    }
    Ok(())
}

fn cmd_train(
    data: &Path,
    out: &Path,
    seed: u64,
    cfg: &RunConfig,
    mapping: &ColumnMapping,
) -> Result<(), CliError> {
    let ds = load_dataset(data, mapping)?;
    let started = Instant::now();
    let model = train_final(&ds, &cfg.eval, seed)?;
    let mut w = create(out)?;
    save_model(&model, &mut w)?;
    eprintln!(
        "trained in {:.1} s, saved to {}",
        started.elapsed().as_secs_f64(),
        out.display()
    );
    println!(
        "{}",
        json!({
            "model_version": model.model_version(),
            "weights": model.weights.as_array(),
            "inner_accuracy": model.metadata.inner_accuracy,
            "n_records": model.metadata.n_records,
            "n_subjects": model.metadata.n_subjects,
        })
    );
    Ok(())
}

fn cmd_evaluate(
    data: &Path,
    plan: FoldPlan,
    report_json: Option<&Path>,
    seed: u64,
    cfg: &RunConfig,
    mapping: &ColumnMapping,
) -> Result<(), CliError> {
    let ds = load_dataset(data, mapping)?;
    let started = Instant::now();
    let report = cross_validate(&ds, plan, seed, &cfg.eval)?;
    eprintln!(
        "cross-validation took {:.1} s",
        started.elapsed().as_secs_f64()
    );
    print!("{}", report.to_text_table());
    if let Some(path) = report_json {
        let mut w = create(path)?;
        w.write_all(report.to_json_pretty().as_bytes())
            .and_then(|_| w.flush())
            .map_err(|e| CliError::Data(format!("cannot write {}: {e}", path.display())))?;
    }
    Ok(())
}

fn cmd_predict(model: &Path, features: &Path) -> Result<(), CliError> {
    let model = load_model(open(model)?)?;
    let rows = parse_feature_csv(open(features)?, None)?;
    let names = pdadsv_core::EnsembleModel::classifier_names();
    let stdout = std::io::stdout();
    let mut out = stdout.lock();
    for (i, row) in rows.iter().enumerate() {
        let p = model
            .predict(row.as_array())
            .map_err(|e| CliError::Data(format!("row {}: {e}", i + 1)))?;
        let line = json!({
            "row": i + 1,
            "final_label": p.final_label,
            "final_text": final_text(p.final_label),
            "votes": p.votes,
            "classifiers": names,
            "tally_pos": p.tally_pos,
            "tally_neg": p.tally_neg,
            "probabilities": p.probabilities,
        });
        writeln!(out, "{line}").map_err(|e| CliError::Internal(e.to_string()))?;
    }
    Ok(())
}

fn cmd_serve(
    model: Option<PathBuf>,
    bind: String,
    max_upload_mb: usize,
    cfg: &RunConfig,
) -> Result<(), CliError> {
    if max_upload_mb == 0 {
        return Err(CliError::Config(
            "--max-upload-mb must be at least 1".into(),
        ));
    }
    let server_cfg = ServerConfig {
        bind,
        model_path: model,
        max_upload_mb,
        dsp: cfg.dsp.clone(),
    };
    let runtime = tokio::runtime::Runtime::new().map_err(|e| CliError::Internal(e.to_string()))?;
    runtime.block_on(pdadsv_server::serve(server_cfg))?;
    Ok(())
}

fn run(cli: Cli) -> Result<(), CliError> {
    let cfg = load_config(cli.config.as_deref())?;
    let seed = cli.seed.or(cfg.seed).unwrap_or(42);
    eprintln!("seed: {seed}");
    let mapping = load_mapping(cli.columns.as_deref())?;
    let with_grid = |no_grid: bool| {
        let mut c = cfg.clone();
        if no_grid {
            c.eval.grid = false;
        }
        c
    };
    match cli.command {
        Command::Extract { input, out } => cmd_extract(&input, &out, &cfg),
        Command::Train { data, out, grid } => {
            cmd_train(&data, &out, seed, &with_grid(grid.no_grid), &mapping)
        }
        Command::Evaluate {
            data,
            k,
            loso,
            grid,
            report_json,
        } => {
            let plan = if loso {
                FoldPlan::LeaveOneSubjectOut
            } else {
                FoldPlan::KFold(k)
            };
            cmd_evaluate(
                &data,
                plan,
                report_json.as_deref(),
                seed,
                &with_grid(grid.no_grid),
                &mapping,
            )
        }
        Command::Predict { model, features } => cmd_predict(&model, &features),
        Command::Serve {
            model,
            bind,
            max_upload_mb,
        } => cmd_serve(model, bind, max_upload_mb, &cfg),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", e.message());
            ExitCode::from(e.exit_code())
        }
    }
}
