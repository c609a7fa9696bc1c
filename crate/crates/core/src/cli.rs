//! Command-line front end. Exit codes: 0 success, 1 usage error,
//! 2 data or format error, 3 numeric failure.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::augment::blend_horizontal;
use crate::calibration::{class_name, compound_top2_eval, reliability_report, BinningMode, DEFAULT_BINS};
use crate::dataio::{
    default_compound_pairs, generate_compound_set, generate_toy_dataset, load_image, load_model, read_predictions,
    save_image, write_bytes, write_predictions, Dataset, LabeledSample, Split, ToyGenConfig,
};
use crate::error::{Error, Result};
use crate::model::MlpModel;
use crate::par::Execution;
use crate::trainer::{predict_batch, train, TrainConfig};

#[derive(Debug, Parser)]
#[command(name = "emorank", version, about = "Confidence-ranked expression classifier toolkit")]
struct Cli {
    /// Run every data-parallel stage sequentially.
    #[arg(long, global = true)]
    sequential: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate the synthetic expression dataset (with compound split).
    GenToy(GenToyArgs),
    /// Train a model and write model file, metrics log and resolved config.
    Train(TrainArgs),
    /// Predict a split and write predictions plus a reliability report.
    Eval(EvalArgs),
    /// Reliability report from an existing predictions CSV.
    Calib(CalibArgs),
    /// Upper half of one image over the lower half of another.
    Synth(SynthArgs),
    /// Top-2 match rates and confidence heatmap on the compound split.
    CompoundEval(CompoundEvalArgs),
}

#[derive(Debug, Args)]
struct GenToyArgs {
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long, default_value_t = 700)]
    n_train: usize,
    #[arg(long, default_value_t = 350)]
    n_eval: usize,
    #[arg(long, default_value_t = 300)]
    n_fr: usize,
    /// Samples per compound pair.
    #[arg(long, default_value_t = 20)]
    n_compound: usize,
    #[arg(long, default_value_t = 0.05)]
    sigma: f64,
    /// Ratio of the rarest to the most frequent training class.
    #[arg(long, default_value_t = 1.0)]
    imbalance: f64,
}

#[derive(Debug, Args)]
struct TrainArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    data: PathBuf,
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    epochs: Option<usize>,
    /// Override any config key, e.g. `--set w_rank=0`.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
}

#[derive(Debug, Args)]
struct EvalArgs {
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    data: PathBuf,
    #[arg(long, default_value = "fer-eval")]
    split: String,
    #[arg(long, default_value_t = DEFAULT_BINS)]
    bins: usize,
    #[arg(long, default_value = "width")]
    mode: String,
    /// Predictions CSV; the reliability report goes next to it.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct CalibArgs {
    #[arg(long)]
    pred: PathBuf,
    #[arg(long, default_value_t = DEFAULT_BINS)]
    bins: usize,
    #[arg(long, default_value = "width")]
    mode: String,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct SynthArgs {
    #[arg(long)]
    a: PathBuf,
    #[arg(long)]
    b: PathBuf,
    #[arg(long)]
    label_a: usize,
    #[arg(long)]
    label_b: usize,
    #[arg(long, default_value_t = 7)]
    classes: usize,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct CompoundEvalArgs {
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    data: PathBuf,
    /// Heatmap CSV.
    #[arg(long)]
    out: PathBuf,
}

/// Path of the reliability report written alongside a predictions file.
pub fn reliability_path(predictions: &Path) -> PathBuf {
    let stem = predictions.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    predictions.with_file_name(format!("{stem}.reliability.csv"))
}

/// Parses `args` (including the program name) and runs the command.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let text = e.render().to_string();
            let _ = if code == 0 { write!(out, "{text}") } else { write!(err, "{text}") };
            return code;
        }
    };
    let exec = if cli.sequential {
        Execution::Sequential
    } else {
        Execution::default()
    };
    match dispatch(cli.command, exec, out) {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            e.exit_code()
        }
    }
}

fn dispatch(cmd: Command, exec: Execution, out: &mut dyn Write) -> Result<()> {
    let lines = match cmd {
        Command::GenToy(a) => gen_toy(a)?,
        Command::Train(a) => train_cmd(a, exec)?,
        Command::Eval(a) => eval_cmd(a, exec)?,
        Command::Calib(a) => calib_cmd(a)?,
        Command::Synth(a) => synth_cmd(a)?,
        Command::CompoundEval(a) => compound_cmd(a, exec)?,
    };
    for line in lines {
        writeln!(out, "{line}").map_err(|e| Error::io("<stdout>", e))?;
    }
    Ok(())
}

fn gen_toy(a: GenToyArgs) -> Result<Vec<String>> {
    let cfg = ToyGenConfig {
        seed: a.seed,
        n_train: a.n_train,
        n_eval: a.n_eval,
        n_fr: a.n_fr,
        sigma: a.sigma,
        imbalance: a.imbalance,
        ..ToyGenConfig::default()
    };
    let mut ds = generate_toy_dataset(&cfg)?;
    let compound = generate_compound_set(&cfg, &default_compound_pairs(cfg.classes), a.n_compound)?;
    ds.manifest.entries.extend(compound.manifest.entries);
    ds.images.extend(compound.images);
    ds.write(&a.out)?;
    let m = &ds.manifest;
    Ok(vec![format!(
        "classes={} train={} fr={} compound={}",
        m.class_count(),
        m.count(Split::FerTrain),
        m.count(Split::Fr),
        m.count(Split::Compound)
    )])
}

fn train_cmd(a: TrainArgs, exec: Execution) -> Result<Vec<String>> {
    let mut cfg = match &a.config {
        Some(p) => TrainConfig::load(p)?,
        None => TrainConfig::default(),
    };
    for kv in &a.overrides {
        let (k, v) = kv
            .split_once('=')
            .ok_or_else(|| Error::Config(format!("--set expects KEY=VALUE, got `{kv}`")))?;
        cfg.set(k.trim(), v)?;
    }
    if let Some(s) = a.seed {
        cfg.seed = s;
    }
    if let Some(e) = a.epochs {
        cfg.epochs = e;
    }
    cfg.validate()?;
    let (outcome, paths) = train(&cfg, &a.data, &a.out, exec)?;
    let mut line = format!("epochs={} model={}", outcome.log.len(), paths.model.display());
    if let Some(last) = outcome.log.last() {
        line.push_str(&format!(" eval_acc={:.4} eval_ece={:.4}", last.eval_acc, last.eval_ece));
    }
    Ok(vec![line])
}

fn load_mlp(path: &Path) -> Result<MlpModel> {
    MlpModel::from_model_file(&load_model(path)?)
}

fn check_input_dims(model: &MlpModel, samples: &[LabeledSample]) -> Result<()> {
    let d = model.dims();
    if let Some(s) = samples.iter().find(|s| s.image.pixels().len() != d.input) {
        let (h, w) = s.image.shape();
        return Err(Error::shape(format!("model expects {} inputs, image `{}` is {h}x{w}", d.input, s.id)));
    }
    Ok(())
}

fn eval_cmd(a: EvalArgs, exec: Execution) -> Result<Vec<String>> {
    let mode: BinningMode = a.mode.parse()?;
    if a.bins == 0 {
        return Err(Error::invalid("--bins must be positive"));
    }
    let split: Split = a.split.parse()?;
    let model = load_mlp(&a.model)?;
    let ds = Dataset::load(&a.data)?;
    let samples = ds.split(split);
    if samples.is_empty() {
        return Err(Error::MissingData(format!("split `{split}` is empty in {}", a.data.display())));
    }
    check_input_dims(&model, &samples)?;
    if ds.class_count() != model.dims().classes {
        return Err(Error::shape(format!(
            "model has {} classes, dataset {}",
            model.dims().classes,
            ds.class_count()
        )));
    }
    let rows = predict_batch(&model, &samples, exec)?;
    write_predictions(&a.out, &rows)?;
    let report = reliability_report(&rows, a.bins, mode)?;
    report.write(&reliability_path(&a.out))?;
    Ok(vec![report.summary_line()])
}

fn calib_cmd(a: CalibArgs) -> Result<Vec<String>> {
    let mode: BinningMode = a.mode.parse()?;
    if a.bins == 0 {
        return Err(Error::invalid("--bins must be positive"));
    }
    let rows = read_predictions(&a.pred)?;
    let report = reliability_report(&rows, a.bins, mode)?;
    report.write(&a.out)?;
    Ok(vec![report.summary_line()])
}

fn synth_cmd(a: SynthArgs) -> Result<Vec<String>> {
    if a.label_a >= a.classes || a.label_b >= a.classes {
        return Err(Error::invalid(format!("labels must be below --classes {}", a.classes)));
    }
    let sample = |path: &Path, label| -> Result<LabeledSample> {
        Ok(LabeledSample {
            id: path.display().to_string(),
            image: load_image(path)?,
            label: Some(label),
        })
    };
    let rec = blend_horizontal(&sample(&a.a, a.label_a)?, &sample(&a.b, a.label_b)?, a.classes)?;
    save_image(&a.out, &rec.image)?;
    Ok(vec![rec.soft_label.iter().map(f64::to_string).collect::<Vec<_>>().join(",")])
}

fn compound_cmd(a: CompoundEvalArgs, exec: Execution) -> Result<Vec<String>> {
    let model = load_mlp(&a.model)?;
    let ds = Dataset::load(&a.data)?;
    let compound = ds.compound();
    if compound.is_empty() {
        return Err(Error::MissingData(format!("no compound split in {}", a.data.display())));
    }
    let (samples, pairs): (Vec<_>, Vec<_>) = compound.into_iter().map(|(s, p)| (s, Some(p))).unzip();
    check_input_dims(&model, &samples)?;
    let rows = predict_batch(&model, &samples, exec)?;
    let result = compound_top2_eval(&rows, &pairs)?;
    let names = &ds.manifest.class_names;
    write_bytes(&a.out, result.heatmap_csv(names).as_bytes())?;
    let mut lines: Vec<String> = result
        .classes
        .iter()
        .zip(&result.counts)
        .zip(&result.match_rates)
        .map(|((&(c1, c2), n), rate)| {
            format!(
                "compound={}+{} n={n} top2={rate:.4}",
                class_name(names, c1),
                class_name(names, c2)
            )
        })
        .collect();
    lines.push(format!("top2_match={:.4}", result.overall_match_rate()));
    Ok(lines)
}
