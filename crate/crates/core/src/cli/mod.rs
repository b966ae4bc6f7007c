//! The `hsdlab` command line.
//!
//! Exit codes: 0 success, 1 usage error, 2 data or configuration error,
//! 3 runtime failure. Every error is printed to stderr on one line starting
//! with `hsdlab: error[<kind>]:`.

mod config;
mod manifest;

pub use config::{load_config, parse_config_str, ModelSection, RunConfig, TrainSection, VocabSection, SEED_ENV};
pub use manifest::Manifest;

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::corpus::{kfold_split, load_dataset, FoldAssignment, Label};
use crate::error::{Error, ErrorKind, Result};
use crate::eval::{emit_report, ensemble_predict, ensemble_probs, label_at, load_runs, predictions_csv, read_labels, score_pairs, ReportFormat, ReportOptions};
use crate::fsutil::write_atomic;
use crate::model::load_pretrained_vectors;
use crate::pipeline::{encode_samples, from_jsonl, to_jsonl, tokenize_dataset, training_data, vocab_for, TokenizedSample};
use crate::preprocess::{encode_or_unk, EncodedSample, Preprocessor, Vocab};
use crate::train::{load_checkpoint, train_fold_with, Checkpoint};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_DATA: i32 = 2;
pub const EXIT_RUNTIME: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "hsdlab", version, about = "Hate/offensive speech classification with BiLSTM-attention fold ensembles")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Clean and tokenize a CSV into JSON lines.
    Prep(PrepArgs),
    /// Write a seeded k-fold assignment.
    Split(SplitArgs),
    /// Train one model per fold.
    Train(TrainArgs),
    /// Ensemble a trained run over new posts.
    Predict(PredictArgs),
    /// Score a prediction file against gold labels.
    Eval(EvalArgs),
    /// Render a leaderboard table from per-run scores.
    Report(ReportArgs),
}

/// Flags that override fields of the config file.
#[derive(Debug, Default, Args)]
struct Overrides {
    /// JSON run configuration
    #[arg(long, value_name = "PATH")]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    k: Option<usize>,
    #[arg(long)]
    train_csv: Option<PathBuf>,
    #[arg(long)]
    test_csv: Option<PathBuf>,
    #[arg(long)]
    language: Option<String>,
    #[arg(long)]
    id_col: Option<String>,
    #[arg(long)]
    text_col: Option<String>,
    #[arg(long)]
    label_col: Option<String>,
    #[arg(long)]
    emoji_table: Option<PathBuf>,
    #[arg(long)]
    unigram_table: Option<PathBuf>,
    #[arg(long)]
    pretrained_vectors: Option<PathBuf>,
    #[arg(long)]
    epochs: Option<usize>,
    #[arg(long)]
    batch_size: Option<usize>,
    #[arg(long)]
    lr: Option<f64>,
    /// Gradient clipping norm; 0 disables clipping
    #[arg(long)]
    clip_norm: Option<f64>,
    #[arg(long)]
    embed_dim: Option<usize>,
    #[arg(long)]
    hidden_dim: Option<usize>,
    #[arg(long)]
    attention_dim: Option<usize>,
    #[arg(long)]
    dense_dim: Option<usize>,
    #[arg(long)]
    max_len: Option<usize>,
    #[arg(long)]
    dropout: Option<f64>,
    #[arg(long)]
    min_freq: Option<usize>,
    #[arg(long)]
    max_vocab: Option<usize>,
    #[arg(long)]
    out_dir: Option<PathBuf>,
}

impl Overrides {
    fn resolve(&self, env_seed: Option<&str>) -> Result<RunConfig> {
        let mut cfg = match &self.config {
            Some(path) => load_config(path)?,
            None => RunConfig::default(),
        };
        macro_rules! set {
            ($($flag:ident => $($field:ident).+),* $(,)?) => {
                $(if let Some(v) = &self.$flag {
                    cfg.$($field).+ = v.clone().into();
                })*
            };
        }
        set! {
            seed => seed,
            k => k,
            train_csv => train_csv,
            test_csv => test_csv,
            language => language,
            id_col => schema.id,
            text_col => schema.text,
            label_col => schema.label,
            emoji_table => emoji_table,
            unigram_table => unigram_table,
            pretrained_vectors => pretrained_vectors,
            epochs => train.epochs,
            batch_size => train.batch_size,
            lr => train.lr,
            embed_dim => model.embed_dim,
            hidden_dim => model.hidden_dim,
            attention_dim => model.attention_dim,
            dense_dim => model.dense_dim,
            max_len => model.max_len,
            dropout => model.dropout,
            min_freq => vocab.min_freq,
            max_vocab => vocab.max_size,
            out_dir => out_dir,
        }
        if let Some(c) = self.clip_norm {
            cfg.train.clip_norm = (c > 0.0).then_some(c);
        }
        cfg.resolve_seed(env_seed)?;
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Debug, Args)]
struct PrepArgs {
    #[command(flatten)]
    overrides: Overrides,
    /// CSV to clean; defaults to the configured training CSV
    #[arg(long)]
    input: Option<PathBuf>,
    /// Treat the input as unlabeled
    #[arg(long)]
    unlabeled: bool,
    /// Output JSON lines; defaults to <out_dir>/train.tokens.jsonl
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct SplitArgs {
    #[command(flatten)]
    overrides: Overrides,
    /// Number of samples; alternatively counted from --input
    #[arg(long, conflicts_with = "input")]
    n: Option<usize>,
    /// CSV or tokens file whose rows are split
    #[arg(long)]
    input: Option<PathBuf>,
    /// Output path; stdout when omitted
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct TrainArgs {
    #[command(flatten)]
    overrides: Overrides,
    /// Training CSV or tokens file; defaults to the configured training CSV
    #[arg(long)]
    input: Option<PathBuf>,
    /// Existing fold assignment to use instead of splitting
    #[arg(long)]
    folds: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct PredictArgs {
    /// Directory written by `hsdlab train`
    #[arg(long)]
    run: PathBuf,
    /// CSV or tokens file to classify; defaults to the run's test CSV
    #[arg(long)]
    input: Option<PathBuf>,
    #[arg(long, default_value_t = crate::eval::DEFAULT_THRESHOLD)]
    threshold: f64,
    /// Output CSV; stdout when omitted
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct EvalArgs {
    /// CSV with `id` and `label` columns
    #[arg(long)]
    pred: PathBuf,
    /// CSV with `id` and `label` columns
    #[arg(long)]
    gold: PathBuf,
    /// Metrics JSON; stdout when omitted
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct ReportArgs {
    /// `model,language,macro_f1` CSV or JSON list of runs; repeatable
    #[arg(long, required = true)]
    runs: Vec<PathBuf>,
    /// markdown, csv or json
    #[arg(long, default_value = "markdown", value_parser = |s: &str| s.parse::<ReportFormat>().map_err(|e| e.to_string()))]
    format: ReportFormat,
    /// Fixed number of decimals
    #[arg(long)]
    precision: Option<usize>,
    #[arg(long, default_value = "Models")]
    model_header: String,
    #[arg(long)]
    out: Option<PathBuf>,
}

/// Parses `args` (including the program name), runs the command and returns
/// the process exit code.
pub fn run<I, T>(args: I, env_seed: Option<&str>, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let text = e.render().to_string();
            let _ = if e.use_stderr() {
                write!(stderr, "{text}")
            } else {
                write!(stdout, "{text}")
            };
            return code;
        }
    };
    let mut ctx = Context { stdout, stderr, env_seed };
    match ctx.dispatch(cli.command) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            let kind = e.kind();
            let _ = writeln!(ctx.stderr, "hsdlab: error[{}]: {e}", kind.as_str());
            exit_code(kind)
        }
    }
}

pub fn exit_code(kind: ErrorKind) -> i32 {
    match kind {
        ErrorKind::Runtime => EXIT_RUNTIME,
        ErrorKind::Io | ErrorKind::Data | ErrorKind::Config | ErrorKind::Argument | ErrorKind::Checkpoint => EXIT_DATA,
    }
}

/// Entry point for the binary.
pub fn main() -> i32 {
    let env_seed = std::env::var(SEED_ENV).ok();
    run(std::env::args_os(), env_seed.as_deref(), &mut std::io::stdout(), &mut std::io::stderr())
}

struct Context<'a> {
    stdout: &'a mut dyn Write,
    stderr: &'a mut dyn Write,
    env_seed: Option<&'a str>,
}

fn is_tokens_file(path: &Path) -> bool {
    path.extension().is_some_and(|e| e == "jsonl")
}

fn read_tokens_file(path: &Path) -> Result<Vec<TokenizedSample>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    from_jsonl(&text)
}

/// Loads a CSV (cleaning it) or an already tokenized file.
fn load_tokens(cfg: &RunConfig, path: &Path, labeled: bool) -> Result<Vec<TokenizedSample>> {
    if is_tokens_file(path) {
        return read_tokens_file(path);
    }
    let dataset = load_dataset(path, &cfg.schema, labeled)?;
    Ok(tokenize_dataset(&dataset, &cfg.preprocessor()?))
}

fn required_input(explicit: &Option<PathBuf>, configured: &Option<PathBuf>, what: &str) -> Result<PathBuf> {
    explicit
        .clone()
        .or_else(|| configured.clone())
        .ok_or_else(|| Error::Config(format!("no {what} given (use --input or set it in the config)")))
}

fn manifest_path(out: &Path) -> PathBuf {
    let mut name = out.file_name().unwrap_or_default().to_os_string();
    name.push(".manifest.json");
    out.with_file_name(name)
}

impl Context<'_> {
    fn dispatch(&mut self, command: Command) -> Result<()> {
        match command {
            Command::Prep(a) => self.prep(a),
            Command::Split(a) => self.split(a),
            Command::Train(a) => self.train(a),
            Command::Predict(a) => self.predict(a),
            Command::Eval(a) => self.eval(a),
            Command::Report(a) => self.report(a),
        }
    }

    fn emit(&mut self, out: Option<&Path>, text: &str, mut manifest: Manifest) -> Result<()> {
        match out {
            Some(path) => {
                write_atomic(path, text.as_bytes())?;
                manifest.artifact(path.file_name().unwrap_or_default().to_string_lossy(), text.as_bytes());
                manifest.write(&manifest_path(path))
            }
            None => self.stdout.write_all(text.as_bytes()).map_err(|e| Error::io("<stdout>", e)),
        }
    }

    fn prep(&mut self, a: PrepArgs) -> Result<()> {
        let cfg = a.overrides.resolve(self.env_seed)?;
        let input = required_input(&a.input, &cfg.train_csv, "input CSV")?;
        let samples = load_tokens(&cfg, &input, !a.unlabeled)?;
        let out = a.out.unwrap_or_else(|| cfg.out_dir.join("train.tokens.jsonl"));
        let tokens: usize = samples.iter().map(|s| s.tokens.len()).sum();
        let _ = writeln!(self.stderr, "prep: {} posts, {tokens} tokens -> {}", samples.len(), out.display());
        let mut manifest = Manifest::new("prep", Some(&cfg));
        manifest.input(&input)?;
        self.emit(Some(&out), &to_jsonl(&samples), manifest)
    }

    fn split(&mut self, a: SplitArgs) -> Result<()> {
        let cfg = a.overrides.resolve(self.env_seed)?;
        let mut manifest = Manifest::new("split", Some(&cfg));
        let n = match (a.n, &a.input, &cfg.train_csv) {
            (Some(n), _, _) => n,
            (None, Some(path), _) | (None, None, Some(path)) => {
                manifest.input(path)?;
                if is_tokens_file(path) {
                    read_tokens_file(path)?.len()
                } else {
                    load_dataset(path, &cfg.schema, false)?.len()
                }
            }
            (None, None, None) => return Err(Error::Config("split needs --n, --input or a configured train_csv".into())),
        };
        let folds = kfold_split(n, cfg.k, cfg.seed())?;
        self.emit(a.out.as_deref(), &(folds.to_json() + "\n"), manifest)
    }

    fn train(&mut self, a: TrainArgs) -> Result<()> {
        let mut cfg = a.overrides.resolve(self.env_seed)?;
        let input = required_input(&a.input, &cfg.train_csv, "training CSV")?;
        let mut manifest = Manifest::new("train", None);
        manifest.input(&input)?;
        let samples = load_tokens(&cfg, &input, true)?;
        if samples.is_empty() {
            return Err(Error::Data {
                row: 0,
                message: format!("{} has no samples", input.display()),
            });
        }

        let folds = match &a.folds {
            Some(path) => {
                manifest.input(path)?;
                let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
                let folds = FoldAssignment::from_json(&text)?;
                if folds.n() != samples.len() {
                    return Err(Error::Data {
                        row: 0,
                        message: format!("fold file covers {} samples, training data has {}", folds.n(), samples.len()),
                    });
                }
                cfg.k = folds.k;
                cfg.seed = Some(folds.seed);
                folds
            }
            None => kfold_split(samples.len(), cfg.k, cfg.seed())?,
        };

        let vocab = vocab_for(&samples, cfg.vocab.min_freq, cfg.vocab.max_size)?;
        let model_cfg = cfg.model.with_vocab(vocab.len());
        let mut data = training_data(&samples, &vocab, model_cfg.max_len)?;
        if let Some(path) = &cfg.pretrained_vectors {
            manifest.input(path)?;
            let rows = load_pretrained_vectors(&vocab, path, model_cfg.embed_dim)?;
            let _ = writeln!(self.stderr, "train: {} embedding rows from {}", rows.len(), path.display());
            data = data.with_pretrained(rows);
        }
        let train_cfg = cfg.train_config();
        let dir = cfg.out_dir.clone();

        // Custom tables travel with the run so predict cleans text identically.
        let mut saved = cfg.clone();
        for (slot, name) in [(&mut saved.emoji_table, "emoji.tsv"), (&mut saved.unigram_table, "unigrams.tsv")] {
            if let Some(src) = slot.take() {
                manifest.input(&src)?;
                let bytes = std::fs::read(&src).map_err(|e| Error::io(&src, e))?;
                write_atomic(dir.join(name), &bytes)?;
                manifest.artifact(name, &bytes);
                *slot = Some(PathBuf::from(name));
            }
        }
        saved.out_dir = PathBuf::from(".");
        for path in [&mut saved.train_csv, &mut saved.test_csv, &mut saved.pretrained_vectors].into_iter().flatten() {
            *path = std::path::absolute(&*path).map_err(|e| Error::io(&*path, e))?;
        }
        let mut artifacts: Vec<(String, Vec<u8>)> = vec![
            ("config.json".into(), saved.to_json().into_bytes()),
            ("vocab.json".into(), vocab.to_json().into_bytes()),
            ("folds.json".into(), (folds.to_json() + "\n").into_bytes()),
        ];
        for (name, bytes) in &artifacts {
            write_atomic(dir.join(name), bytes)?;
        }

        let _ = writeln!(
            self.stderr,
            "train: {} samples, vocab {}, k={}, seed={}, {} epochs",
            samples.len(),
            vocab.len(),
            folds.k,
            folds.seed,
            train_cfg.epochs
        );
        for fold in 0..folds.k {
            let mut log = String::new();
            let result = train_fold_with(&data, &folds, fold, &model_cfg, &train_cfg, |e| {
                log.push_str(&serde_json::to_string(e).expect("log entry serializes"));
                log.push('\n');
            })?;
            let last = result.log.last().expect("at least one epoch");
            let _ = writeln!(
                self.stderr,
                "train: fold {fold}: train_loss={:.6} val_macro_f1={:.6}",
                last.train_loss, last.val_macro_f1
            );
            let ckpt = result.checkpoint.to_json();
            let ckpt_name = format!("fold-{fold}.ckpt.json");
            let log_name = format!("fold-{fold}.log.jsonl");
            write_atomic(dir.join(&ckpt_name), ckpt.as_bytes())?;
            write_atomic(dir.join(&log_name), log.as_bytes())?;
            artifacts.push((ckpt_name, ckpt.into_bytes()));
            artifacts.push((log_name, log.into_bytes()));
        }
        for (name, bytes) in &artifacts {
            manifest.artifact(name, bytes);
        }
        manifest.config = Some(cfg);
        manifest.write(&dir.join("manifest.json"))
    }

    fn predict(&mut self, a: PredictArgs) -> Result<()> {
        let run = LoadedRun::open(&a.run)?;
        let input = required_input(&a.input, &run.config.test_csv, "input CSV")?;
        let samples = load_tokens(&run.config, &input, false)?;
        let ids: Vec<String> = samples.iter().map(|s| s.id.clone()).collect();
        let encoded = encode_samples(&samples, &run.vocab, run.max_len());
        let preds = ensemble_predict(&run.checkpoints, &ids, &encoded, a.threshold)?;
        let mut manifest = Manifest::new("predict", Some(&run.config));
        manifest.input(&input)?;
        for path in &run.files {
            manifest.input(path)?;
        }
        self.emit(a.out.as_deref(), &predictions_csv(&preds)?, manifest)
    }

    fn eval(&mut self, a: EvalArgs) -> Result<()> {
        let score = score_pairs(&read_labels(&a.pred)?, &read_labels(&a.gold)?)?;
        let m = &score.metrics;
        let _ = writeln!(
            self.stderr,
            "eval: macro-F1 {:.6} (P {:.6}, R {:.6}, accuracy {:.6}) over {} ids",
            m.macro_f1, m.macro_precision, m.macro_recall, m.accuracy, score.matched
        );
        if score.disjoint() > 0 {
            let _ = writeln!(
                self.stderr,
                "eval: warning: {} gold ids without prediction, {} predictions without gold",
                score.missing_predictions, score.unmatched_predictions
            );
        }
        let mut manifest = Manifest::new("eval", None);
        manifest.input(&a.pred)?;
        manifest.input(&a.gold)?;
        let json = serde_json::to_string_pretty(&score)? + "\n";
        self.emit(a.out.as_deref(), &json, manifest)
    }

    fn report(&mut self, a: ReportArgs) -> Result<()> {
        let mut manifest = Manifest::new("report", None);
        let mut runs = Vec::new();
        for path in &a.runs {
            manifest.input(path)?;
            runs.extend(load_runs(path)?);
        }
        let opts = ReportOptions {
            precision: a.precision,
            model_header: a.model_header,
        };
        let text = emit_report(&runs, a.format, &opts)?;
        self.emit(a.out.as_deref(), &text, manifest)
    }
}

/// A trained run directory: resolved config, vocabulary and fold models.
pub struct LoadedRun {
    pub config: RunConfig,
    pub vocab: Vocab,
    pub checkpoints: Vec<Checkpoint>,
    pub preprocessor: Preprocessor,
    files: Vec<PathBuf>,
}

impl LoadedRun {
    pub fn open(dir: &Path) -> Result<Self> {
        let config_path = dir.join("config.json");
        let config = load_config(&config_path)?;
        let vocab_path = dir.join("vocab.json");
        let vocab = Vocab::load(&vocab_path)?;
        let mut files = vec![config_path, vocab_path];
        let mut checkpoints = Vec::with_capacity(config.k);
        if config.k == 0 {
            return Err(Error::Config(format!("{}: k must be at least 1", dir.display())));
        }
        for fold in 0..config.k {
            let path = dir.join(format!("fold-{fold}.ckpt.json"));
            let ckpt = load_checkpoint(&path)?;
            ckpt.verify_vocab(&vocab)?;
            checkpoints.push(ckpt);
            files.push(path);
        }
        Ok(LoadedRun {
            preprocessor: config.preprocessor()?,
            config,
            vocab,
            checkpoints,
            files,
        })
    }

    pub fn max_len(&self) -> usize {
        self.checkpoints[0].model_cfg.max_len
    }

    /// Cleans and classifies raw posts with the fold ensemble.
    pub fn predict_texts(&self, texts: &[&str], threshold: f64) -> Result<Vec<(f64, Label)>> {
        let encoded: Vec<EncodedSample> = texts
            .iter()
            .map(|t| encode_or_unk(&self.preprocessor.clean(t), &self.vocab, self.max_len()))
            .collect();
        let probs = ensemble_probs(&self.checkpoints, &encoded)?;
        Ok(probs.into_iter().map(|p| (p, label_at(p, threshold))).collect())
    }
}
