//! `idreader` command-line front end.

mod config;

use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use idreader::classifier::{classify, preprocess, train, DocumentClass, EpochStats};
use idreader::evalharness::{breakdown_csv, error_breakdown, evaluate_pipeline, rows_csv, EvalParams};
use idreader::extractor::{read_document, TemplateRecognizer};
use idreader::locator::{locate, LocateResult};
use idreader::raster::{load_image, Quad};
use idreader::synthgen::{gen_dataset, load_examples, read_manifest, DatasetKind, Generator, LayoutRegistry};
use idreader::tensornet::{load_weights, save_weights, Architecture, Network};
use idreader::{Error, Exec};
use serde::Serialize;

use crate::config::{CliConfig, ConfigError};

#[derive(Parser)]
#[command(name = "idreader", version, about = "Locate, classify and read identity documents in photos")]
struct Cli {
    /// JSON configuration file; flags take precedence over its values.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Run on a single thread.
    #[arg(long, global = true)]
    sequential: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic dataset.
    Gen {
        #[arg(long)]
        kind: DatasetKind,
        #[arg(long)]
        count: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
        /// Also write undegraded PNGs of main samples.
        #[arg(long)]
        debug_png: bool,
    },
    /// Train the classifier on a classifier-kind dataset.
    Train {
        #[arg(long)]
        dataset: PathBuf,
        #[arg(long, default_value_t = 239)]
        epochs: usize,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: PathBuf,
        /// Per-epoch statistics as CSV.
        #[arg(long)]
        history: Option<PathBuf>,
    },
    /// Find the document quad in a photo.
    Locate {
        #[arg(long)]
        input: PathBuf,
    },
    /// Locate and classify the document in a photo.
    Classify {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        model: PathBuf,
    },
    /// Locate, classify and read every field.
    Read {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        layouts: Option<PathBuf>,
    },
    /// Score the full pipeline on a main-kind dataset.
    Eval {
        #[arg(long)]
        dataset: PathBuf,
        #[arg(long)]
        model: PathBuf,
        /// Report JSON; per-sample and per-class CSVs are written next to it.
        #[arg(long)]
        report: PathBuf,
        #[arg(long)]
        layouts: Option<PathBuf>,
        /// Add a wall-clock column; makes the output run-dependent.
        #[arg(long)]
        timing: bool,
    },
}

enum Failure {
    Usage(String),
    Io(String),
    Processing(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Usage(_) => 2,
            Failure::Io(_) => 3,
            Failure::Processing(_) => 4,
        }
    }

    fn message(&self) -> &str {
        match self {
            Failure::Usage(m) | Failure::Io(m) | Failure::Processing(m) => m,
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        if e.is_io() {
            Failure::Io(e.to_string())
        } else {
            Failure::Processing(e.to_string())
        }
    }
}

impl From<ConfigError> for Failure {
    fn from(e: ConfigError) -> Self {
        match e {
            ConfigError::Parse(..) => Failure::Usage(e.to_string()),
            _ => Failure::Io(e.to_string()),
        }
    }
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<(), Failure> {
    fs::write(path, bytes).map_err(|e| Failure::Io(format!("cannot write {}: {e}", path.display())))
}

fn print_json(value: &impl Serialize) -> Result<(), Failure> {
    let text = serde_json::to_string_pretty(value).map_err(|e| Failure::Processing(e.to_string()))?;
    let mut out = std::io::stdout().lock();
    writeln!(out, "{text}").map_err(|e| Failure::Io(format!("stdout: {e}")))
}

fn load_model(path: &Path) -> Result<Network<f32>, Failure> {
    Ok(load_weights(path)?)
}

fn layouts(flag: Option<PathBuf>, cfg: &CliConfig) -> Result<LayoutRegistry, Failure> {
    match flag.or_else(|| cfg.layouts.clone()).or_else(|| cfg.generator.layouts.clone()) {
        Some(p) => Ok(LayoutRegistry::load(p)?),
        None => Ok(LayoutRegistry::builtin()),
    }
}

#[derive(Serialize)]
struct GenSummary<'a> {
    kind: DatasetKind,
    count: usize,
    seed: u64,
    out: &'a Path,
}

#[derive(Serialize)]
struct TrainSummary<'a> {
    epochs: usize,
    examples: usize,
    last: Option<EpochStats>,
    model: &'a Path,
}

#[derive(Serialize)]
struct ClassifyResult {
    class: DocumentClass,
    name: &'static str,
    probs: Vec<f64>,
    vertices: Quad,
}

#[derive(Serialize)]
struct EvalSummary {
    n_samples: usize,
    n_located: usize,
    vertex_success_rate: f64,
    classification_accuracy: Option<f64>,
    field_accuracy: Option<f64>,
}

fn run(cli: Cli) -> Result<(), Failure> {
    let mut cfg = match &cli.config {
        Some(p) => CliConfig::load(p)?,
        None => CliConfig::default(),
    };
    let exec = if cli.sequential { Exec::Sequential } else { Exec::Parallel };
    cfg.locator.exec = exec;
    cfg.train.exec = exec;
    match cli.command {
        Command::Gen { kind, count, seed, out, debug_png } => {
            cfg.generator.debug_png |= debug_png;
            let generator = Generator::new(cfg.generator)?;
            gen_dataset(&generator, kind, count, seed, &out, exec)?;
            print_json(&GenSummary { kind, count, seed, out: &out })
        }
        Command::Train { dataset, epochs, seed, out, history } => {
            let data = load_examples(&dataset)?;
            cfg.train.epochs = epochs;
            if let Some(s) = seed {
                cfg.train.seed = s;
            }
            let arch = Architecture::new(cfg.network.blocks, cfg.network.filters);
            let (net, hist) = train(&data, &cfg.train, arch, |s| {
                eprintln!("epoch {}/{}: ce {:.4}, accuracy {:.4}", s.epoch + 1, epochs, s.mean_ce, s.accuracy);
            })?;
            save_weights(&net, &out)?;
            if let Some(h) = history {
                write_file(&h, idreader::classifier::history_csv(&hist).as_bytes())?;
            }
            print_json(&TrainSummary { epochs, examples: data.len(), last: hist.last().copied(), model: &out })
        }
        Command::Locate { input } => {
            let photo = load_image(&input)?;
            print_json(&LocateResult { vertices: locate(&photo, &cfg.locator)? })
        }
        Command::Classify { input, model } => {
            let photo = load_image(&input)?;
            let net = load_model(&model)?;
            let quad = locate(&photo, &cfg.locator)?;
            let (class, probs) = classify(&net, &preprocess(&photo, &quad)?)?;
            print_json(&ClassifyResult { class, name: class.name(), probs, vertices: quad })
        }
        Command::Read { input, model, layouts: flag } => {
            let photo = load_image(&input)?;
            let net = load_model(&model)?;
            let registry = layouts(flag, &cfg)?;
            let readout = read_document(&photo, &net, &registry, &TemplateRecognizer::default(), &cfg.locator, exec)?;
            print_json(&readout)
        }
        Command::Eval { dataset, model, report, layouts: flag, timing } => {
            let manifest = read_manifest(&dataset)?;
            let net = load_model(&model)?;
            let registry = layouts(flag, &cfg)?;
            let params = EvalParams { locator: cfg.locator, criterion: cfg.criterion, timing, exec };
            let r = evaluate_pipeline(&manifest, &dataset, &net, &registry, &TemplateRecognizer::default(), &params)?;
            let json = serde_json::to_string_pretty(&r).map_err(|e| Failure::Processing(e.to_string()))?;
            write_file(&report, json.as_bytes())?;
            write_file(&report.with_extension("rows.csv"), rows_csv(&r)?.as_bytes())?;
            write_file(&report.with_extension("breakdown.csv"), breakdown_csv(&error_breakdown(&r))?.as_bytes())?;
            print_json(&EvalSummary {
                n_samples: r.n_samples,
                n_located: r.n_located,
                vertex_success_rate: r.vertex_success_rate,
                classification_accuracy: r.classification_accuracy,
                field_accuracy: r.field_accuracy,
            })
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("idreader: {}", f.message());
            ExitCode::from(f.code())
        }
    }
}
