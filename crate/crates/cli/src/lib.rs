//! `hypsiam` command-line front end.
//!
//! Exit codes: 0 ok, 2 input format / config / I/O, 3 degenerate input
//! (zero diameter), 4 degenerate labels (single class), 5 shape mismatch.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use serde_json::json;
use thiserror::Error;

use hypsiam_core::hyperbolicity::{delta_report, delta_sampled, EXACT_LIMIT};
use hypsiam_core::io::{load_embeddings, load_model, load_pairs, save_history, save_model, save_pairs, RunConfig};
use hypsiam_core::siamese::{evaluate, train, HeadMode};
use hypsiam_core::synthdata::generate;
use hypsiam_core::{Label, Metric, PairSample};

pub const EXIT_OK: i32 = 0;
pub const EXIT_INPUT: i32 = 2;
pub const EXIT_DEGENERATE_INPUT: i32 = 3;
pub const EXIT_DEGENERATE_LABELS: i32 = 4;
pub const EXIT_SHAPE: i32 = 5;

/// Subsample size used when δ must be sampled and `--sample-size` is absent.
pub const DEFAULT_SAMPLE_SIZE: usize = 1000;

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Core(#[from] hypsiam_core::Error),

    #[error("{path}: {source}")]
    File { path: PathBuf, source: hypsiam_core::Error },

    #[error("failed to write output: {0}")]
    Output(#[from] std::io::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        use hypsiam_core::Error as E;
        let core = match self {
            CliError::Core(e) | CliError::File { source: e, .. } => e,
            CliError::Output(_) => return EXIT_INPUT,
        };
        match core {
            E::ZeroDiameter => EXIT_DEGENERATE_INPUT,
            E::SingleClass => EXIT_DEGENERATE_LABELS,
            E::DimensionMismatch { .. } => EXIT_SHAPE,
            _ => EXIT_INPUT,
        }
    }
}

fn at(path: &Path) -> impl FnOnce(hypsiam_core::Error) -> CliError + '_ {
    move |source| CliError::File { path: path.to_path_buf(), source }
}

#[derive(Debug, Parser)]
#[command(name = "hypsiam", version, about = "Hyperbolic Siamese change detection and δ-hyperbolicity")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum MetricArg {
    Euclidean,
    Poincare,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum ModeArg {
    Hyperbolic,
    Euclidean,
}

impl From<ModeArg> for HeadMode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::Hyperbolic => HeadMode::Hyperbolic,
            ModeArg::Euclidean => HeadMode::Euclidean,
        }
    }
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Gromov δ-hyperbolicity of an embedding CSV.
    Delta {
        #[arg(long)]
        input: PathBuf,
        #[arg(long, value_enum, default_value = "euclidean")]
        metric: MetricArg,
        /// Ball curvature for the poincare metric.
        #[arg(long, default_value_t = 1.0)]
        curvature: f64,
        /// Base point of the Gromov products (exact mode only).
        #[arg(long, default_value_t = 0)]
        base_index: usize,
        /// Forces sampling with subsamples of this size.
        #[arg(long)]
        sample_size: Option<usize>,
        #[arg(long, default_value_t = 10)]
        trials: usize,
        #[arg(long, default_value_t = 42)]
        seed: u64,
        /// Also report 2δ / diameter.
        #[arg(long)]
        relative: bool,
        #[arg(long)]
        json: bool,
    },
    /// Writes seeded synthetic train and test pair files.
    Gen {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out_train: PathBuf,
        #[arg(long)]
        out_test: PathBuf,
    },
    /// Trains a model on a pair file.
    Train {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        train: PathBuf,
        #[arg(long)]
        model_out: PathBuf,
        /// Overrides the `mode` key of the config.
        #[arg(long, value_enum)]
        mode: Option<ModeArg>,
        /// History CSV path; defaults to `<model-out>.history.csv`.
        #[arg(long)]
        history_out: Option<PathBuf>,
    },
    /// Accuracy and F1 of a model on a pair file.
    Eval {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        data: PathBuf,
        #[arg(long, default_value_t = 0.5)]
        threshold: f64,
        #[arg(long)]
        json: bool,
    },
}

/// Parses `args` (including the program name), runs the command and returns the exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_INPUT } else { EXIT_OK };
            let target: &mut dyn Write = if e.use_stderr() { err } else { out };
            let _ = write!(target, "{}", e.render());
            return code;
        }
    };
    match execute(cli.command, out) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            e.exit_code()
        }
    }
}

pub fn execute(command: Command, out: &mut dyn Write) -> Result<(), CliError> {
    match command {
        Command::Delta { input, metric, curvature, base_index, sample_size, trials, seed, relative, json } => {
            let opts = DeltaOptions { metric, curvature, base_index, sample_size, trials, seed, relative, json };
            cmd_delta(&input, &opts, out)
        }
        Command::Gen { config, out_train, out_test } => cmd_gen(config.as_deref(), &out_train, &out_test, out),
        Command::Train { config, train, model_out, mode, history_out } => {
            let history_out = history_out.unwrap_or_else(|| default_history_path(&model_out));
            cmd_train(config.as_deref(), &train, &model_out, mode.map(Into::into), &history_out, out)
        }
        Command::Eval { model, data, threshold, json } => cmd_eval(&model, &data, threshold, json, out),
    }
}

/// `<model>.history.csv` next to the model file.
pub fn default_history_path(model: &Path) -> PathBuf {
    let mut name = model.as_os_str().to_owned();
    name.push(".history.csv");
    PathBuf::from(name)
}

fn load_config(path: Option<&Path>) -> Result<RunConfig, CliError> {
    match path {
        Some(p) => RunConfig::from_path(p).map_err(at(p)),
        None => Ok(RunConfig::default()),
    }
}

#[derive(Clone, Debug)]
pub struct DeltaOptions {
    pub metric: MetricArg,
    pub curvature: f64,
    pub base_index: usize,
    pub sample_size: Option<usize>,
    pub trials: usize,
    pub seed: u64,
    pub relative: bool,
    pub json: bool,
}

pub fn cmd_delta(input: &Path, opts: &DeltaOptions, out: &mut dyn Write) -> Result<(), CliError> {
    let emb = load_embeddings(input).map_err(at(input))?;
    let metric = match opts.metric {
        MetricArg::Euclidean => Metric::Euclidean,
        MetricArg::Poincare => Metric::poincare(opts.curvature)?,
    };
    let n = emb.len();
    let sampled = opts.sample_size.is_some() || n > EXACT_LIMIT;

    let (delta, delta_std, rel) = if sampled {
        let k = opts.sample_size.unwrap_or(DEFAULT_SAMPLE_SIZE.min(n));
        let s = delta_sampled(&emb.points, k, opts.trials, opts.seed, &metric)?;
        (s.delta_mean, Some(s.delta_std), s.relative())
    } else {
        if opts.base_index >= n {
            return Err(hypsiam_core::Error::InvalidParameter(format!("base index {} out of range for {n} points", opts.base_index)).into());
        }
        let r = delta_report(&emb.points, opts.base_index, &metric)?;
        (r.delta, None, r.relative().map(|v| (v, 0.0)))
    };
    let rel = match rel {
        Ok(v) => Some(v),
        Err(e) if opts.relative => return Err(e.into()),
        Err(_) => None,
    };

    if opts.json {
        let curvature = matches!(opts.metric, MetricArg::Poincare).then_some(opts.curvature);
        let value = json!({
            "delta": delta,
            "delta_std": delta_std,
            "relative_delta": rel.map(|r| r.0),
            "relative_delta_std": if sampled { rel.map(|r| r.1) } else { None },
            "n": n,
            "metric": metric.name(),
            "curvature": curvature,
            "sampled": sampled,
            "base_index": (!sampled).then_some(opts.base_index),
            "sample_size": sampled.then(|| opts.sample_size.unwrap_or(DEFAULT_SAMPLE_SIZE.min(n))),
            "trials": sampled.then_some(opts.trials),
            "seed": sampled.then_some(opts.seed),
        });
        writeln!(out, "{value}")?;
        return Ok(());
    }

    match delta_std {
        Some(sd) => writeln!(out, "delta={delta:.6} +/- {sd:.6}")?,
        None => writeln!(out, "delta={delta:.6}")?,
    }
    if opts.relative {
        let (r, sd) = rel.expect("relative δ checked above");
        if sampled {
            writeln!(out, "relative_delta={r:.6} +/- {sd:.6}")?;
        } else {
            writeln!(out, "relative_delta={r:.6}")?;
        }
    }
    Ok(())
}

fn summary(pairs: &[PairSample]) -> (usize, f64) {
    let changes = pairs.iter().filter(|p| p.label == Label::Change).count();
    (changes, changes as f64 / pairs.len() as f64)
}

pub fn cmd_gen(config: Option<&Path>, out_train: &Path, out_test: &Path, out: &mut dyn Write) -> Result<(), CliError> {
    let cfg = load_config(config)?;
    let data = generate(&cfg.data, cfg.train_count, cfg.test_count, cfg.change_fraction)?;
    save_pairs(out_train, &data.train).map_err(at(out_train))?;
    save_pairs(out_test, &data.test).map_err(at(out_test))?;
    for (name, pairs) in [("train", &data.train), ("test", &data.test)] {
        let (changes, fraction) = summary(pairs);
        writeln!(out, "{name}: rows={} change={changes} no_change={} change_fraction={fraction:.6}", pairs.len(), pairs.len() - changes)?;
    }
    Ok(())
}

pub fn cmd_train(
    config: Option<&Path>,
    train_path: &Path,
    model_out: &Path,
    mode: Option<HeadMode>,
    history_out: &Path,
    out: &mut dyn Write,
) -> Result<(), CliError> {
    let mut cfg = load_config(config)?.train;
    if let Some(mode) = mode {
        cfg.mode = mode;
    }
    let pairs = load_pairs(train_path).map_err(at(train_path))?;
    let outcome = train(&pairs, &cfg)?;
    save_model(model_out, &outcome.model).map_err(at(model_out))?;
    save_history(history_out, &outcome.history).map_err(at(history_out))?;
    for h in &outcome.history {
        writeln!(out, "epoch={} loss={:.6} accuracy={:.6} f1={:.6}", h.epoch, h.loss, h.accuracy, h.f1)?;
    }
    Ok(())
}

pub fn cmd_eval(model_path: &Path, data: &Path, threshold: f64, as_json: bool, out: &mut dyn Write) -> Result<(), CliError> {
    if !threshold.is_finite() {
        return Err(hypsiam_core::Error::InvalidParameter(format!("threshold must be finite, got {threshold}")).into());
    }
    let model = load_model(model_path).map_err(at(model_path))?;
    let pairs = load_pairs(data).map_err(at(data))?;
    let m = evaluate(&pairs, &model, threshold)?;
    if as_json {
        let c = m.confusion;
        let value = json!({
            "accuracy": m.accuracy,
            "f1": m.f1,
            "loss": m.loss,
            "n": pairs.len(),
            "threshold": threshold,
            "tp": c.tp,
            "fp": c.fp,
            "fn": c.fn_,
            "tn": c.tn,
        });
        writeln!(out, "{value}")?;
    } else {
        writeln!(out, "accuracy={:.4} f1={:.4}", m.accuracy, m.f1)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use hypsiam_core::Error as E;

    fn run_args(args: &[&str]) -> (i32, String, String) {
        let (mut out, mut err) = (Vec::new(), Vec::new());
        let code = run(std::iter::once("hypsiam").chain(args.iter().copied()), &mut out, &mut err);
        (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
    }

    #[test]
    fn exit_codes_follow_error_kind() {
        assert_eq!(CliError::Core(E::ZeroDiameter).exit_code(), EXIT_DEGENERATE_INPUT);
        assert_eq!(CliError::Core(E::SingleClass).exit_code(), EXIT_DEGENERATE_LABELS);
        let shape = CliError::File { path: "x.csv".into(), source: E::DimensionMismatch { expected: 3, got: 2 } };
        assert_eq!(shape.exit_code(), EXIT_SHAPE);
        assert_eq!(CliError::Core(E::Format { line: 4, msg: "bad".into() }).exit_code(), EXIT_INPUT);
        assert_eq!(CliError::Core(E::ZeroNormal).exit_code(), EXIT_INPUT);
        assert_eq!(CliError::Output(std::io::Error::other("closed")).exit_code(), EXIT_INPUT);
    }

    #[test]
    fn file_errors_name_the_path() {
        let e = CliError::File { path: "data/pairs.csv".into(), source: E::Format { line: 7, msg: "label must be 0 or 1".into() } };
        assert_eq!(e.to_string(), "data/pairs.csv: line 7: label must be 0 or 1");
    }

    #[test]
    fn history_path_appends_suffix() {
        assert_eq!(default_history_path(Path::new("out/model.txt")), PathBuf::from("out/model.txt.history.csv"));
        assert_eq!(default_history_path(Path::new("m")), PathBuf::from("m.history.csv"));
    }

    #[test]
    fn help_goes_to_stdout_with_success() {
        let (code, out, err) = run_args(&["--help"]);
        assert_eq!(code, EXIT_OK);
        assert!(out.contains("delta") && out.contains("train"));
        assert!(err.is_empty());
    }

    #[test]
    fn usage_errors_go_to_stderr() {
        let (code, out, err) = run_args(&["frobnicate"]);
        assert_eq!(code, EXIT_INPUT);
        assert!(out.is_empty() && !err.is_empty());
        assert_eq!(run_args(&["delta"]).0, EXIT_INPUT);
    }

    #[test]
    fn missing_input_file_is_an_input_error() {
        let (code, out, err) = run_args(&["delta", "--input", "/nonexistent/points.csv"]);
        assert_eq!(code, EXIT_INPUT);
        assert!(out.is_empty());
        assert!(err.starts_with("error: /nonexistent/points.csv"), "{err}");
    }
}
