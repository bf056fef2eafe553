//! Command-line front end: train a summarization criterion, apply it,
//! evaluate it, and dump feature matrices.
//!
//! Exit codes: 0 success, 2 input validation, 3 model/schema errors,
//! 1 internal.

use std::collections::BTreeSet;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use rand::RngCore;
use serde::Deserialize;

use swarmsum::corpus::{attach_labels, load_corpus, read_labels, Corpus, CorpusFormat};
use swarmsum::error::Error;
use swarmsum::metrics::{FeatureMatrix, COLUMN_NAMES, NUM_METRICS};
use swarmsum::preprocess::{PreprocessConfig, StemmerId};
use swarmsum::pso::LimitRange;
use swarmsum::summarizer::{
    accuracy_curve, evaluate, feature_matrices, load_model, save_model, summarize, train,
    SummarizerModel, TrainOptions,
};
use swarmsum::SummarizationFitness;

const EXIT_INTERNAL: u8 = 1;
const EXIT_INPUT: u8 = 2;
const EXIT_MODEL: u8 = 3;

const CACHE_DIR_ENV: &str = "SWARMSUM_CACHE_DIR";

#[derive(Parser)]
#[command(name = "swarmsum", about = "Trainable extractive summarization", version)]
struct Cli {
    /// JSON config file; command-line flags take precedence over it.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    #[arg(long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Learn a summarization criterion from a labeled corpus.
    Train(TrainArgs),
    /// Apply a trained model to a document.
    Summarize(SummarizeArgs),
    /// Score a trained model against a labeled corpus.
    Evaluate(EvaluateArgs),
    /// Dump a document's feature matrix as CSV.
    Features(FeaturesArgs),
}

#[derive(Args)]
struct TrainArgs {
    #[arg(long)]
    corpus: PathBuf,
    #[arg(long)]
    labels: PathBuf,
    /// Output model file (JSON). Report CSVs are written next to it.
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    ratio: Option<f64>,
    #[arg(long)]
    runs: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    pop_size: Option<usize>,
    #[arg(long)]
    max_ite: Option<usize>,
    #[arg(long)]
    stall_fraction: Option<f64>,
    /// Concurrent training runs.
    #[arg(long)]
    jobs: Option<usize>,
    #[arg(long)]
    cache_dir: Option<PathBuf>,
    /// Write the winning run's per-iteration convergence trace here.
    #[arg(long)]
    trace: Option<PathBuf>,
}

#[derive(Args)]
struct SummarizeArgs {
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    corpus: PathBuf,
    /// Which document to summarize; required when the corpus has several.
    #[arg(long)]
    doc_id: Option<String>,
    #[arg(long)]
    ratio: Option<f64>,
    /// Append each sentence's score (tab separated, 6 decimals).
    #[arg(long)]
    scores: bool,
}

#[derive(Args)]
struct EvaluateArgs {
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    corpus: PathBuf,
    #[arg(long)]
    labels: PathBuf,
    #[arg(long)]
    ratio: Option<f64>,
    /// Write the accuracy-vs-metric-count curve CSV here.
    #[arg(long)]
    curve: Option<PathBuf>,
}

#[derive(Args)]
struct FeaturesArgs {
    #[arg(long)]
    corpus: PathBuf,
    #[arg(long)]
    doc_id: Option<String>,
    /// Dump raw metric values instead of the per-document scaled ones.
    #[arg(long)]
    raw: bool,
    /// Output file; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

/// Optional config file: flag > file > built-in default.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileConfig {
    ratio: Option<f64>,
    runs: Option<usize>,
    seed: Option<u64>,
    pop_size: Option<usize>,
    max_ite: Option<usize>,
    stall_fraction: Option<f64>,
    jobs: Option<usize>,
    cache_dir: Option<PathBuf>,
    stopword_file: Option<PathBuf>,
    abbreviations: Option<Vec<String>>,
    stemmer: Option<StemmerId>,
}

struct CliError {
    code: u8,
    message: String,
}

type CliResult<T> = Result<T, CliError>;

fn input_error(err: impl std::fmt::Display) -> CliError {
    CliError { code: EXIT_INPUT, message: err.to_string() }
}

fn model_error(err: impl std::fmt::Display) -> CliError {
    CliError { code: EXIT_MODEL, message: err.to_string() }
}

fn classify(err: Error) -> CliError {
    let code = match &err {
        Error::SchemaVersion { .. } | Error::SchemaMismatch(_) => EXIT_MODEL,
        Error::Io { .. }
        | Error::Parse { .. }
        | Error::Validation(_)
        | Error::LabelOutOfRange { .. }
        | Error::UnknownDocId(_)
        | Error::EmptyDocument(_)
        | Error::UnlabeledCorpus => EXIT_INPUT,
    };
    CliError { code, message: err.to_string() }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    env_logger::Builder::new()
        .filter_level(match cli.verbose {
            0 => log::LevelFilter::Warn,
            1 => log::LevelFilter::Info,
            _ => log::LevelFilter::Debug,
        })
        .init();

    let file_config = match read_config(cli.config.as_deref()) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {}", e.message);
            return ExitCode::from(e.code);
        }
    };

    let result = match &cli.command {
        Command::Train(args) => cmd_train(args, &file_config),
        Command::Summarize(args) => cmd_summarize(args, &file_config),
        Command::Evaluate(args) => cmd_evaluate(args, &file_config),
        Command::Features(args) => cmd_features(args, &file_config),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", e.message);
            ExitCode::from(e.code)
        }
    }
}

fn read_config(path: Option<&Path>) -> CliResult<FileConfig> {
    let Some(path) = path else {
        return Ok(FileConfig::default());
    };
    let text = std::fs::read_to_string(path)
        .map_err(|e| input_error(format!("cannot read config {}: {e}", path.display())))?;
    serde_json::from_str(&text)
        .map_err(|e| input_error(format!("invalid config {}: {e}", path.display())))
}

fn preprocess_config(file: &FileConfig) -> CliResult<PreprocessConfig> {
    let mut config = PreprocessConfig::default();
    if let Some(path) = &file.stopword_file {
        let text = std::fs::read_to_string(path)
            .map_err(|e| input_error(format!("cannot read stopword file {}: {e}", path.display())))?;
        config.stopwords = text
            .lines()
            .map(|w| w.trim().to_lowercase())
            .filter(|w| !w.is_empty())
            .collect();
    }
    if let Some(abbr) = &file.abbreviations {
        config.abbreviations = abbr.clone();
    }
    if let Some(stemmer) = file.stemmer {
        config.stemmer = stemmer;
    }
    Ok(config)
}

fn cache_dir(flag: Option<&Path>, file: &FileConfig) -> Option<PathBuf> {
    flag.map(Path::to_path_buf)
        .or_else(|| std::env::var_os(CACHE_DIR_ENV).map(PathBuf::from))
        .or_else(|| file.cache_dir.clone())
}

fn load_labeled_corpus(
    corpus_path: &Path,
    labels_path: &Path,
    preprocess: &PreprocessConfig,
) -> CliResult<Corpus> {
    let mut corpus =
        load_corpus(corpus_path, CorpusFormat::JsonLines, preprocess).map_err(classify)?;
    let labels = read_labels(labels_path).map_err(classify)?;
    attach_labels(&mut corpus, &labels).map_err(classify)?;
    Ok(corpus)
}

fn write_file(path: &Path, contents: &str) -> CliResult<()> {
    let tmp = path.with_extension("tmp");
    std::fs::write(&tmp, contents)
        .and_then(|()| std::fs::rename(&tmp, path))
        .map_err(|e| CliError {
            code: EXIT_INTERNAL,
            message: format!("cannot write {}: {e}", path.display()),
        })
}

fn cmd_train(args: &TrainArgs, file: &FileConfig) -> CliResult<()> {
    let preprocess = preprocess_config(file)?;
    let corpus = load_labeled_corpus(&args.corpus, &args.labels, &preprocess)?;

    let seed = args.seed.or(file.seed).unwrap_or_else(|| {
        let seed = rand::thread_rng().next_u64();
        eprintln!("seed: {seed} (pass --seed {seed} to reproduce)");
        seed
    });
    let mut opts = TrainOptions::defaults(seed);
    opts.ratio = args.ratio.or(file.ratio).unwrap_or(opts.ratio);
    opts.runs = args.runs.or(file.runs).unwrap_or(opts.runs);
    opts.jobs = args.jobs.or(file.jobs).unwrap_or(1).max(1);
    opts.collect_traces = args.trace.is_some();
    if let Some(p) = args.pop_size.or(file.pop_size) {
        opts.swarm.pop_size = p;
    }
    if let Some(m) = args.max_ite.or(file.max_ite) {
        opts.swarm.max_ite = m;
    }
    if let Some(s) = args.stall_fraction.or(file.stall_fraction) {
        opts.swarm.stall_fraction = s;
    }
    opts.swarm.validate().map_err(input_error)?;

    let fingerprint = preprocess.fingerprint();
    let matrices = feature_matrices(
        &corpus,
        cache_dir(args.cache_dir.as_deref(), file).as_deref(),
        fingerprint,
    )
    .map_err(classify)?;

    let (model, report) = train(&corpus, &matrices, &opts).map_err(classify)?;
    save_model(&model, &args.out).map_err(classify)?;

    // Report CSVs next to the model file.
    let stem = args.out.file_stem().and_then(|s| s.to_str()).unwrap_or("model");
    let dir = args.out.parent().unwrap_or_else(|| Path::new("."));

    let mut participation = String::from("metric,participation,weight_mean,weight_std\n");
    for (j, name) in COLUMN_NAMES.iter().enumerate() {
        participation.push_str(&format!(
            "{name},{:.6},{:.6},{:.6}\n",
            report.participation[j], report.weight_mean[j], report.weight_std[j]
        ));
    }
    write_file(&dir.join(format!("{stem}.participation.csv")), &participation)?;

    let mut curve = String::from("k,accuracy\n");
    for (k, acc) in report.accuracy_vs_k.iter().enumerate() {
        curve.push_str(&format!("{},{acc:.6}\n", k + 1));
    }
    write_file(&dir.join(format!("{stem}.accuracy_vs_k.csv")), &curve)?;

    let mut runs_csv = String::from("run,best_fitness\n");
    for (r, fit) in report.best_fitness_per_run.iter().enumerate() {
        runs_csv.push_str(&format!("{r},{fit:.9}\n"));
    }
    write_file(&dir.join(format!("{stem}.runs.csv")), &runs_csv)?;

    if let Some(trace_path) = &args.trace {
        let mut trace = String::from("ite,best_fit,mean_fit,w_bin,w_real\n");
        for row in &report.winning_trace {
            trace.push_str(&format!(
                "{},{:.9},{:.9},{:.6},{:.6}\n",
                row.ite, row.best_fit, row.mean_fit, row.w_bin, row.w_real
            ));
        }
        write_file(trace_path, &trace)?;
    }

    println!("best fitness: {:.6}", model.training_meta.final_fitness);
    println!("selected metrics: {}", model.selected.join(", "));
    Ok(())
}

fn resolve_document(corpus: &Corpus, doc_id: Option<&str>) -> CliResult<usize> {
    match doc_id {
        Some(id) => corpus
            .documents
            .iter()
            .position(|d| d.id == id)
            .ok_or_else(|| input_error(format!("document '{id}' not found in corpus"))),
        None if corpus.len() == 1 => Ok(0),
        None => Err(input_error(format!(
            "corpus has {} documents; pick one with --doc-id",
            corpus.len()
        ))),
    }
}

fn load_model_checked(path: &Path) -> CliResult<SummarizerModel> {
    // Any failure to read or parse the model file is a model error, not an
    // input error: the model path was explicitly given as a model.
    load_model(path).map_err(model_error)
}

fn cmd_summarize(args: &SummarizeArgs, file: &FileConfig) -> CliResult<()> {
    let preprocess = preprocess_config(file)?;
    let model = load_model_checked(&args.model)?;
    let corpus =
        load_corpus(&args.corpus, CorpusFormat::JsonLines, &preprocess).map_err(classify)?;
    let idx = resolve_document(&corpus, args.doc_id.as_deref())?;
    let doc = &corpus.documents[idx];
    let matrices = feature_matrices(&corpus, None, preprocess.fingerprint()).map_err(classify)?;
    let ratio = args.ratio.or(file.ratio).unwrap_or(0.10);

    let texts: Vec<String> = doc.sentences.iter().map(|s| s.raw_text.clone()).collect();
    let selected = summarize(&texts, &matrices[idx], &model, ratio).map_err(model_error)?;
    let stdout = std::io::stdout();
    let mut out = stdout.lock();
    for sentence in &selected {
        if args.scores {
            writeln!(out, "{}\t{:.6}", sentence.text, sentence.score).ok();
        } else {
            writeln!(out, "{}", sentence.text).ok();
        }
    }
    Ok(())
}

fn cmd_evaluate(args: &EvaluateArgs, file: &FileConfig) -> CliResult<()> {
    let preprocess = preprocess_config(file)?;
    let model = load_model_checked(&args.model)?;
    let corpus = load_labeled_corpus(&args.corpus, &args.labels, &preprocess)?;
    let matrices = feature_matrices(&corpus, None, preprocess.fingerprint()).map_err(classify)?;
    let ratio = args.ratio.or(file.ratio).unwrap_or(0.10);

    let report = evaluate(&corpus, &matrices, &model, ratio).map_err(classify)?;
    println!("accuracy {:.6}", report.accuracy);
    println!("mean_mcc {:.6}", report.mean_mcc);

    if let Some(curve_path) = &args.curve {
        let labeled: Vec<(FeatureMatrix, BTreeSet<usize>)> = corpus
            .documents
            .iter()
            .zip(&matrices)
            .filter_map(|(d, fm)| d.labels.clone().map(|l| (fm.clone(), l)))
            .collect();
        let fitness = SummarizationFitness::new(labeled, ratio, LimitRange::new(0.0, 6.0))
            .map_err(classify)?;
        let criterion = model.criterion().map_err(model_error)?;
        let curve = accuracy_curve(&fitness, &criterion.weights);
        let mut csv = String::from("k,accuracy\n");
        for (k, acc) in curve.iter().enumerate() {
            csv.push_str(&format!("{},{acc:.6}\n", k + 1));
        }
        write_file(curve_path, &csv)?;
    }
    Ok(())
}

fn cmd_features(args: &FeaturesArgs, file: &FileConfig) -> CliResult<()> {
    let preprocess = preprocess_config(file)?;
    let corpus =
        load_corpus(&args.corpus, CorpusFormat::JsonLines, &preprocess).map_err(classify)?;
    let idx = resolve_document(&corpus, args.doc_id.as_deref())?;
    let matrices = feature_matrices(&corpus, None, preprocess.fingerprint()).map_err(classify)?;
    let fm = &matrices[idx];

    let mut csv = String::from("sentence,");
    csv.push_str(&COLUMN_NAMES.join(","));
    csv.push('\n');
    for row in 0..fm.rows {
        let values = if args.raw { fm.raw_row(row) } else { fm.scaled_row(row) };
        csv.push_str(&row.to_string());
        for value in values.iter().take(NUM_METRICS) {
            csv.push_str(&format!(",{value:.9}"));
        }
        csv.push('\n');
    }
    match &args.out {
        Some(path) => write_file(path, &csv)?,
        None => {
            let stdout = std::io::stdout();
            let mut out = BufWriter::new(stdout.lock());
            out.write_all(csv.as_bytes()).ok();
        }
    }
    Ok(())
}
