//! Training configuration, the epoch loop and batch prediction.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::augment::{blend_horizontal, weak_augment, BlendRecord};
use crate::calibration::{accuracy, bin_equal_width, confidence_and_correctness, ece};
use crate::dataio::{read_text, save_model, write_bytes, Dataset, LabeledSample, PredictionRow, Split};
use crate::error::{Error, Result};
use crate::losses::{
    focal_loss, ranking_loss, total_loss, FocalConfig, LossBundle, LossComponents, ObjectiveConfig, RankMode,
    RankingInputs, Target,
};
use crate::model::{MlpModel, ModelDims};
use crate::numcore::{AdamState, SeededRng};
use crate::par::Execution;
use crate::pseudolabel::{
    compute_class_thresholds, pseudo_label_batch, PseudoLabelConfig, ThresholdState, ViewWeights,
};

pub const MODEL_FILE: &str = "model.bin";
pub const METRICS_FILE: &str = "metrics.csv";
pub const RESOLVED_CONFIG_FILE: &str = "config.resolved";
pub const METRICS_HEADER: &str = "epoch,focal_fer,focal_fr,focal_syn,rank,accept_rate,eval_acc,eval_ece";

/// Which samples are blended with each labeled sample.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Pairing {
    FerFr,
    FerFer,
    Both,
    None,
}

impl Pairing {
    pub fn as_str(self) -> &'static str {
        match self {
            Pairing::FerFr => "fer-fr",
            Pairing::FerFer => "fer-fer",
            Pairing::Both => "both",
            Pairing::None => "none",
        }
    }

    fn with_fr(self) -> bool {
        matches!(self, Pairing::FerFr | Pairing::Both)
    }

    fn with_fer(self) -> bool {
        matches!(self, Pairing::FerFer | Pairing::Both)
    }
}

impl FromStr for Pairing {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "fer-fr" => Pairing::FerFr,
            "fer-fer" => Pairing::FerFer,
            "both" => Pairing::Both,
            "none" => Pairing::None,
            _ => return Err(Error::Config(format!("unknown pairing `{s}` (fer-fr|fer-fer|both|none)"))),
        })
    }
}

fn rank_mode_str(m: RankMode) -> &'static str {
    match m {
        RankMode::LabelIndexed => "label",
        RankMode::Top1 => "top1",
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub lr: f64,
    pub batch: usize,
    pub epochs: usize,
    pub delta: f64,
    pub w_rank: f64,
    pub focal: FocalConfig,
    pub pseudo: PseudoLabelConfig,
    pub pairing: Pairing,
    pub seed: u64,
    pub bins: usize,
    pub hidden_dim: usize,
    pub rank_mode: RankMode,
    pub syn_focal: bool,
    pub fr_focal: bool,
    /// Unlabeled samples drawn per step; 0 disables the unlabeled branch.
    pub fr_batch: usize,
    pub crop_pad: usize,
    /// Weak augmentation of labeled training samples.
    pub fer_aug: bool,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            lr: 5e-4,
            batch: 64,
            epochs: 60,
            delta: 0.2,
            w_rank: 1.0,
            focal: FocalConfig::default(),
            pseudo: PseudoLabelConfig::default(),
            pairing: Pairing::FerFr,
            seed: 1,
            bins: 15,
            hidden_dim: 64,
            rank_mode: RankMode::LabelIndexed,
            syn_focal: true,
            fr_focal: true,
            fr_batch: 64,
            crop_pad: 2,
            fer_aug: true,
        }
    }
}

pub const CONFIG_KEYS: [&str; 20] = [
    "lr", "batch", "epochs", "delta", "w_rank", "gamma", "alpha", "beta", "tau0", "lambda_c", "pairing", "seed",
    "bins", "hidden_dim", "rank_mode", "syn_focal", "fr_focal", "fr_batch", "crop_pad", "fer_aug",
];

fn parse_value<T: FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .parse()
        .map_err(|_| Error::Config(format!("invalid value `{value}` for `{key}`")))
}

impl TrainConfig {
    /// Ablation baseline: no ranking term, no blending, no unlabeled data.
    pub fn ablation(mut self) -> Self {
        self.w_rank = 0.0;
        self.pairing = Pairing::None;
        self.fr_batch = 0;
        self
    }

    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let v = value.trim();
        match key {
            "lr" => self.lr = parse_value(key, v)?,
            "batch" => self.batch = parse_value(key, v)?,
            "epochs" => self.epochs = parse_value(key, v)?,
            "delta" => self.delta = parse_value(key, v)?,
            "w_rank" => self.w_rank = parse_value(key, v)?,
            "gamma" => self.focal.gamma = parse_value(key, v)?,
            "alpha" => self.focal.alpha = parse_value(key, v)?,
            "beta" => self.pseudo.beta = parse_value(key, v)?,
            "tau0" => self.pseudo.tau0 = parse_value(key, v)?,
            "lambda_c" => {
                let parts = v
                    .split(',')
                    .map(|p| parse_value::<f64>(key, p.trim()))
                    .collect::<Result<Vec<_>>>()?;
                self.pseudo.lambda_c = if parts.len() == 1 {
                    ViewWeights::Uniform(parts[0])
                } else {
                    ViewWeights::PerClass(parts)
                };
            }
            "pairing" => self.pairing = v.parse()?,
            "seed" => self.seed = parse_value(key, v)?,
            "bins" => self.bins = parse_value(key, v)?,
            "hidden_dim" => self.hidden_dim = parse_value(key, v)?,
            "rank_mode" => {
                self.rank_mode = match v {
                    "label" => RankMode::LabelIndexed,
                    "top1" => RankMode::Top1,
                    _ => return Err(Error::Config(format!("unknown rank_mode `{v}` (label|top1)"))),
                }
            }
            "syn_focal" => self.syn_focal = parse_value(key, v)?,
            "fr_focal" => self.fr_focal = parse_value(key, v)?,
            "fr_batch" => self.fr_batch = parse_value(key, v)?,
            "crop_pad" => self.crop_pad = parse_value(key, v)?,
            "fer_aug" => self.fer_aug = parse_value(key, v)?,
            _ => return Err(Error::Config(format!("unknown config key `{key}`"))),
        }
        Ok(())
    }

    /// `key = value` lines on top of the defaults; `#` starts a comment.
    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = Self::default();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("line {}: expected `key = value`", i + 1)))?;
            cfg.set(k.trim(), v)
                .map_err(|e| Error::Config(format!("line {}: {}", i + 1, config_message(e))))?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = read_text(path)?;
        Self::parse(&text).map_err(|e| Error::Config(format!("{}: {}", path.display(), config_message(e))))
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if !(self.lr > 0.0 && self.lr.is_finite()) {
            return bad(format!("lr must be positive, got {}", self.lr));
        }
        if self.batch == 0 || self.bins == 0 || self.hidden_dim == 0 {
            return bad("batch, bins and hidden_dim must be positive".into());
        }
        if !(self.delta >= 0.0) || !(self.w_rank >= 0.0) {
            return bad("delta and w_rank must be >= 0".into());
        }
        if !(self.pseudo.beta > 0.0 && self.pseudo.beta < 1.0) {
            return bad(format!("beta must lie in (0,1), got {}", self.pseudo.beta));
        }
        if !(0.0..=1.0).contains(&self.pseudo.tau0) {
            return bad(format!("tau0 must lie in [0,1], got {}", self.pseudo.tau0));
        }
        if let ViewWeights::Uniform(w) = self.pseudo.lambda_c {
            if !(0.0..=1.0).contains(&w) {
                return bad(format!("lambda_c must lie in [0,1], got {w}"));
            }
        }
        self.focal.validate().map_err(|e| Error::Config(config_message(e)))
    }

    /// Every key with its effective value, in a fixed order.
    pub fn dump(&self) -> String {
        let lambda = match &self.pseudo.lambda_c {
            ViewWeights::Uniform(w) => w.to_string(),
            ViewWeights::PerClass(v) => v.iter().map(f64::to_string).collect::<Vec<_>>().join(","),
        };
        let values = [
            self.lr.to_string(),
            self.batch.to_string(),
            self.epochs.to_string(),
            self.delta.to_string(),
            self.w_rank.to_string(),
            self.focal.gamma.to_string(),
            self.focal.alpha.to_string(),
            self.pseudo.beta.to_string(),
            self.pseudo.tau0.to_string(),
            lambda,
            self.pairing.as_str().to_string(),
            self.seed.to_string(),
            self.bins.to_string(),
            self.hidden_dim.to_string(),
            rank_mode_str(self.rank_mode).to_string(),
            self.syn_focal.to_string(),
            self.fr_focal.to_string(),
            self.fr_batch.to_string(),
            self.crop_pad.to_string(),
            self.fer_aug.to_string(),
        ];
        CONFIG_KEYS
            .iter()
            .zip(values)
            .fold(String::new(), |mut out, (k, v)| {
                let _ = writeln!(out, "{k} = {v}");
                out
            })
    }

    fn objective(&self) -> ObjectiveConfig {
        ObjectiveConfig {
            w_rank: self.w_rank,
            syn_focal: self.syn_focal,
            fr_focal: self.fr_focal,
        }
    }
}

fn config_message(e: Error) -> String {
    match e {
        Error::Config(m) | Error::InvalidInput(m) => m,
        other => other.to_string(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Partner {
    /// Index into the accepted unlabeled samples of the step.
    Fr(usize),
    /// Index into the labeled mini-batch.
    Fer(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PlannedBlend {
    pub fer: usize,
    pub partner: Partner,
}

/// First candidate at or after `*cursor` (cyclically) whose label differs
/// from `label`; advances the cursor past it.
fn round_robin(labels: &[usize], cursor: &mut usize, label: usize, skip: Option<usize>) -> Option<usize> {
    let n = labels.len();
    (0..n)
        .map(|step| (*cursor + step) % n)
        .find(|&j| labels[j] != label && Some(j) != skip)
        .inspect(|&j| *cursor = j + 1)
}

/// Blend partners for each labeled sample. Samples with no partner of a
/// different class are left unpaired.
pub fn plan_blends(fer_labels: &[usize], fr_labels: &[usize], pairing: Pairing) -> Vec<PlannedBlend> {
    let (mut fr_cursor, mut fer_cursor) = (0, 0);
    let mut plan = Vec::new();
    for (i, &y) in fer_labels.iter().enumerate() {
        if pairing.with_fr() {
            if let Some(j) = round_robin(fr_labels, &mut fr_cursor, y, None) {
                plan.push(PlannedBlend { fer: i, partner: Partner::Fr(j) });
            }
        }
        if pairing.with_fer() {
            if let Some(j) = round_robin(fer_labels, &mut fer_cursor, y, Some(i)) {
                plan.push(PlannedBlend { fer: i, partner: Partner::Fer(j) });
            }
        }
    }
    plan
}

/// Samples used by training, split by role.
#[derive(Debug, Clone)]
pub struct TrainData {
    pub fer: Vec<LabeledSample>,
    pub fr: Vec<LabeledSample>,
    pub eval: Vec<LabeledSample>,
    pub classes: usize,
}

impl TrainData {
    pub fn from_dataset(ds: &Dataset) -> Result<Self> {
        let data = Self {
            fer: ds.split(Split::FerTrain),
            fr: ds.split(Split::Fr),
            eval: ds.split(Split::FerEval),
            classes: ds.class_count(),
        };
        if data.fer.is_empty() {
            return Err(Error::invalid("dataset has no fer-train samples"));
        }
        Ok(data)
    }

    /// Model shape for this data with the given hidden width.
    pub fn dims(&self, hidden: usize) -> ModelDims {
        let (h, w) = self.fer[0].image.shape();
        ModelDims {
            input: h * w,
            hidden,
            classes: self.classes,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EpochLog {
    pub epoch: usize,
    pub losses: LossComponents,
    pub accept_rate: f64,
    pub eval_acc: f64,
    pub eval_ece: f64,
}

impl EpochLog {
    pub fn csv_row(&self) -> String {
        let l = &self.losses;
        format!(
            "{},{:.9},{:.9},{:.9},{:.9},{:.9},{:.9},{:.9}",
            self.epoch, l.focal_fer, l.focal_fr, l.focal_syn, l.rank, self.accept_rate, self.eval_acc, self.eval_ece
        )
    }
}

pub fn metrics_csv(log: &[EpochLog]) -> String {
    let mut out = format!("{METRICS_HEADER}\n");
    for e in log {
        out.push_str(&e.csv_row());
        out.push('\n');
    }
    out
}

#[derive(Debug, Clone)]
pub struct TrainState {
    /// Next epoch to run (0-based).
    pub epoch: usize,
    pub adam: AdamState,
    pub thresholds: ThresholdState,
    pub log: Vec<EpochLog>,
    /// Shuffled unlabeled order and read position, persisted across epochs.
    fr_order: Vec<usize>,
    fr_pos: usize,
}

impl TrainState {
    pub fn new(model: &MlpModel, cfg: &TrainConfig) -> Result<Self> {
        let classes = model.dims().classes;
        let mut thresholds = ThresholdState::constant(classes, cfg.pseudo.tau0);
        thresholds.beta = cfg.pseudo.beta;
        Ok(Self {
            epoch: 0,
            adam: AdamState::new(model.params().len(), cfg.lr)?,
            thresholds,
            log: Vec::new(),
            fr_order: Vec::new(),
            fr_pos: 0,
        })
    }

    /// Next `n` unlabeled indices, reshuffling whenever the order runs out.
    fn draw_fr(&mut self, pool: usize, n: usize, rng: &mut SeededRng) -> Vec<usize> {
        let mut out = Vec::with_capacity(n);
        while out.len() < n.min(pool) {
            if self.fr_pos >= self.fr_order.len() {
                self.fr_order = (0..pool).collect();
                rng.shuffle(&mut self.fr_order);
                self.fr_pos = 0;
            }
            out.push(self.fr_order[self.fr_pos]);
            self.fr_pos += 1;
        }
        out
    }
}

pub fn predict_batch(model: &MlpModel, samples: &[LabeledSample], exec: Execution) -> Result<Vec<PredictionRow>> {
    let images: Vec<_> = samples.iter().map(|s| &s.image).collect();
    let acts = model.forward_images(&images, exec)?;
    Ok(samples
        .iter()
        .zip(acts)
        .map(|(s, a)| PredictionRow {
            id: s.id.clone(),
            label: s.label,
            probs: a.probs,
        })
        .collect())
}

struct StepStats {
    losses: LossComponents,
    drawn: usize,
    accepted: usize,
}

/// One optimizer step on a labeled mini-batch.
fn train_step(
    model: &mut MlpModel,
    state: &mut TrainState,
    data: &TrainData,
    batch: &[usize],
    cfg: &TrainConfig,
    rng: &mut SeededRng,
    exec: Execution,
) -> Result<StepStats> {
    let classes = data.classes;
    let fer: Vec<LabeledSample> = batch
        .iter()
        .map(|&i| {
            let s = &data.fer[i];
            LabeledSample {
                id: s.id.clone(),
                image: if cfg.fer_aug {
                    weak_augment(&s.image, cfg.crop_pad, rng)
                } else {
                    s.image.clone()
                },
                label: s.label,
            }
        })
        .collect();
    let fer_labels: Vec<usize> = fer.iter().map(|s| s.label.expect("labeled split")).collect();

    let fr_idx = if cfg.fr_batch > 0 && !data.fr.is_empty() {
        state.draw_fr(data.fr.len(), cfg.fr_batch, rng)
    } else {
        Vec::new()
    };
    let fr_images: Vec<_> = fr_idx.iter().map(|&i| &data.fr[i].image).collect();
    let pseudo = pseudo_label_batch(&fr_images, &*model, &state.thresholds, rng, &cfg.pseudo, cfg.crop_pad, exec)?;
    let accepted: Vec<LabeledSample> = pseudo
        .into_iter()
        .zip(&fr_idx)
        .filter_map(|((view, agg), &i)| {
            agg.label.map(|y| LabeledSample {
                id: data.fr[i].id.clone(),
                image: view,
                label: Some(y),
            })
        })
        .collect();
    let fr_labels: Vec<usize> = accepted.iter().map(|s| s.label.unwrap()).collect();

    let plan = plan_blends(&fer_labels, &fr_labels, cfg.pairing);
    let blends: Vec<(PlannedBlend, BlendRecord)> = plan
        .iter()
        .map(|&p| {
            let other = match p.partner {
                Partner::Fr(j) => &accepted[j],
                Partner::Fer(j) => &fer[j],
            };
            blend_horizontal(&fer[p.fer], other, classes).map(|b| (p, b))
        })
        .collect::<Result<_>>()?;

    // forward order: labeled, accepted unlabeled, blends
    let (n_fer, n_fr) = (fer.len(), accepted.len());
    let inputs: Vec<&[f64]> = fer
        .iter()
        .chain(&accepted)
        .map(|s| s.image.pixels())
        .chain(blends.iter().map(|(_, b)| b.image.pixels()))
        .collect();
    let acts = model.forward(&inputs, exec)?;
    let fr_at = |j: usize| n_fer + j;
    let syn_at = |k: usize| n_fer + n_fr + k;

    let fer_terms = (0..n_fer)
        .map(|i| focal_loss(&acts[i].logits, Target::Hard(fer_labels[i]), &cfg.focal))
        .collect::<Result<Vec<_>>>()?;
    let fr_terms = if cfg.fr_focal {
        (0..n_fr)
            .map(|j| focal_loss(&acts[fr_at(j)].logits, Target::Hard(fr_labels[j]), &cfg.focal))
            .collect::<Result<Vec<_>>>()?
    } else {
        Vec::new()
    };
    let syn_terms = if cfg.syn_focal {
        blends
            .iter()
            .enumerate()
            .map(|(k, (_, b))| focal_loss(&acts[syn_at(k)].logits, Target::Soft(&b.soft_label), &cfg.focal))
            .collect::<Result<Vec<_>>>()?
    } else {
        Vec::new()
    };
    let partner_at = |p: Partner| match p {
        Partner::Fr(j) => fr_at(j),
        Partner::Fer(j) => j,
    };
    let rank_terms: Vec<LossBundle> = if cfg.w_rank > 0.0 {
        blends
            .iter()
            .enumerate()
            .map(|(k, (p, b))| {
                ranking_loss(&RankingInputs {
                    p_syn: &acts[syn_at(k)].probs,
                    p_fer: &acts[p.fer].probs,
                    p_fr: &acts[partner_at(p.partner)].probs,
                    c1: b.parent_classes.0,
                    c2: b.parent_classes.1,
                    margin: cfg.delta,
                    mode: cfg.rank_mode,
                })
            })
            .collect::<Result<_>>()?
    } else {
        Vec::new()
    };

    let total = total_loss(&fer_terms, &fr_terms, &syn_terms, &rank_terms, &cfg.objective())?;
    if !total.bundle.value.is_finite() {
        return Err(Error::Numeric(format!("non-finite loss at epoch {}", state.epoch)));
    }
    let mut upstream = vec![vec![0.0; classes]; inputs.len()];
    let mut grads = total.bundle.grads.iter();
    let mut add = |target: usize, g: &Vec<f64>| {
        for (u, v) in upstream[target].iter_mut().zip(g) {
            *u += v;
        }
    };
    for i in 0..n_fer {
        add(i, grads.next().unwrap());
    }
    for j in 0..fr_terms.len() {
        add(fr_at(j), grads.next().unwrap());
    }
    for k in 0..syn_terms.len() {
        add(syn_at(k), grads.next().unwrap());
    }
    for k in 0..rank_terms.len() {
        let p = blends[k].0;
        add(syn_at(k), grads.next().unwrap());
        add(p.fer, grads.next().unwrap());
        add(partner_at(p.partner), grads.next().unwrap());
    }
    let param_grads = model.backward(&inputs, &upstream, exec)?;
    if param_grads.iter().any(|g| !g.is_finite()) {
        return Err(Error::Numeric(format!("non-finite gradient at epoch {}", state.epoch)));
    }
    state.adam.step(model.params_mut(), &param_grads)?;
    Ok(StepStats {
        losses: total.components,
        drawn: fr_idx.len(),
        accepted: n_fr,
    })
}

/// Thresholds from the current model, then one pass over shuffled labeled
/// mini-batches, then evaluation. Appends exactly one log entry.
pub fn train_epoch(
    model: &mut MlpModel,
    state: &mut TrainState,
    data: &TrainData,
    cfg: &TrainConfig,
    rng: &mut SeededRng,
    exec: Execution,
) -> Result<()> {
    if data.fer.is_empty() {
        return Err(Error::invalid("training needs labeled samples"));
    }
    let preds = predict_batch(model, &data.fer, exec)?;
    let probs: Vec<_> = preds.into_iter().map(|r| r.probs).collect();
    let labels: Vec<usize> = data.fer.iter().map(|s| s.label.expect("labeled split")).collect();
    state.thresholds = compute_class_thresholds(&probs, &labels, state.epoch, &cfg.pseudo)?;

    let mut order: Vec<usize> = (0..data.fer.len()).collect();
    rng.shuffle(&mut order);
    let mut sum = LossComponents::default();
    let (mut steps, mut drawn, mut accepted) = (0usize, 0usize, 0usize);
    for batch in order.chunks(cfg.batch) {
        let s = train_step(model, state, data, batch, cfg, rng, exec)?;
        sum.focal_fer += s.losses.focal_fer;
        sum.focal_fr += s.losses.focal_fr;
        sum.focal_syn += s.losses.focal_syn;
        sum.rank += s.losses.rank;
        steps += 1;
        drawn += s.drawn;
        accepted += s.accepted;
    }
    let n = steps as f64;
    let losses = LossComponents {
        focal_fer: sum.focal_fer / n,
        focal_fr: sum.focal_fr / n,
        focal_syn: sum.focal_syn / n,
        rank: sum.rank / n,
    };
    let (eval_acc, eval_ece) = evaluate(model, &data.eval, cfg.bins, exec)?;
    state.log.push(EpochLog {
        epoch: state.epoch,
        losses,
        accept_rate: if drawn == 0 { 0.0 } else { accepted as f64 / drawn as f64 },
        eval_acc,
        eval_ece,
    });
    state.epoch += 1;
    Ok(())
}

/// Accuracy and equal-width ECE; NaN when there is nothing to evaluate.
pub fn evaluate(model: &MlpModel, samples: &[LabeledSample], bins: usize, exec: Execution) -> Result<(f64, f64)> {
    if samples.is_empty() {
        return Ok((f64::NAN, f64::NAN));
    }
    let rows = predict_batch(model, samples, exec)?;
    let (conf, correct) = confidence_and_correctness(&rows)?;
    Ok((accuracy(&rows)?, ece(&bin_equal_width(&conf, &correct, bins)?, rows.len())?))
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub model: MlpModel,
    pub log: Vec<EpochLog>,
}

/// Initializes from `cfg.seed` and runs `cfg.epochs` epochs.
pub fn fit(data: &TrainData, cfg: &TrainConfig, exec: Execution) -> Result<TrainOutcome> {
    cfg.validate()?;
    let mut master = SeededRng::new(cfg.seed);
    let mut init_rng = master.fork();
    let mut rng = master.fork();
    let mut model = MlpModel::init(data.dims(cfg.hidden_dim), &mut init_rng)?;
    let mut state = TrainState::new(&model, cfg)?;
    for _ in 0..cfg.epochs {
        train_epoch(&mut model, &mut state, data, cfg, &mut rng, exec)?;
    }
    Ok(TrainOutcome { model, log: state.log })
}

#[derive(Debug, Clone)]
pub struct TrainArtifacts {
    pub model: PathBuf,
    pub metrics: PathBuf,
    pub config: PathBuf,
}

/// Loads the dataset, trains, and writes model, metrics log and resolved config.
pub fn train(cfg: &TrainConfig, data_dir: &Path, out_dir: &Path, exec: Execution) -> Result<(TrainOutcome, TrainArtifacts)> {
    let ds = Dataset::load(data_dir)?;
    let data = TrainData::from_dataset(&ds)?;
    let outcome = fit(&data, cfg, exec)?;
    std::fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    let paths = TrainArtifacts {
        model: out_dir.join(MODEL_FILE),
        metrics: out_dir.join(METRICS_FILE),
        config: out_dir.join(RESOLVED_CONFIG_FILE),
    };
    save_model(&paths.model, &outcome.model.to_model_file())?;
    write_bytes(&paths.metrics, metrics_csv(&outcome.log).as_bytes())?;
    write_bytes(&paths.config, cfg.dump().as_bytes())?;
    Ok((outcome, paths))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataio::{generate_toy_dataset, ToyGenConfig};
    use proptest::prelude::*;

    fn small_data(sigma: f64) -> TrainData {
        let ds = generate_toy_dataset(&ToyGenConfig {
            n_train: 70,
            n_eval: 35,
            n_fr: 40,
            sigma,
            ..ToyGenConfig::default()
        })
        .unwrap();
        TrainData::from_dataset(&ds).unwrap()
    }

    #[test]
    fn config_round_trip_and_errors() {
        let cfg = TrainConfig::parse("lr = 0.001\n# comment\npairing = both  # trailing\nlambda_c = 0.5,0.4,0.5,0.5,0.5,0.5,0.5\n").unwrap();
        assert_eq!(cfg.lr, 0.001);
        assert_eq!(cfg.pairing, Pairing::Both);
        assert_eq!(TrainConfig::parse(&cfg.dump()).unwrap(), cfg);
        let dump = TrainConfig::default().dump();
        for key in CONFIG_KEYS {
            assert!(dump.contains(&format!("{key} = ")), "{key}");
        }
        assert!(matches!(TrainConfig::parse("momentum = 0.9"), Err(Error::Config(_))));
        assert!(matches!(TrainConfig::parse("lr = -1"), Err(Error::Config(_))));
        assert!(matches!(TrainConfig::parse("batch = x"), Err(Error::Config(_))));
        assert!(TrainConfig::parse("epochs = 0").is_ok());
    }

    #[test]
    fn round_robin_pairing() {
        let plan = plan_blends(&[0, 1, 2], &[0, 0, 1], Pairing::FerFr);
        assert_eq!(
            plan,
            vec![
                PlannedBlend { fer: 0, partner: Partner::Fr(2) },
                PlannedBlend { fer: 1, partner: Partner::Fr(0) },
                PlannedBlend { fer: 2, partner: Partner::Fr(1) },
            ]
        );
        assert!(plan_blends(&[3, 3], &[3], Pairing::FerFr).is_empty());
        assert!(plan_blends(&[0, 1], &[], Pairing::FerFr).is_empty());
        assert!(plan_blends(&[0, 1], &[2], Pairing::None).is_empty());
    }

    proptest! {
        #[test]
        fn planned_blends_respect_policy(
            fer in prop::collection::vec(0usize..4, 1..20),
            fr in prop::collection::vec(0usize..4, 0..20),
            which in 0usize..4,
        ) {
            let pairing = [Pairing::FerFr, Pairing::FerFer, Pairing::Both, Pairing::None][which];
            for p in plan_blends(&fer, &fr, pairing) {
                let other = match p.partner {
                    Partner::Fr(j) => { prop_assert!(pairing.with_fr()); fr[j] }
                    Partner::Fer(j) => { prop_assert!(pairing.with_fer() && j != p.fer); fer[j] }
                };
                prop_assert_ne!(fer[p.fer], other);
            }
        }
    }

    #[test]
    fn epoch_appends_one_log_entry_and_is_deterministic() {
        let data = small_data(0.05);
        let cfg = TrainConfig { epochs: 2, batch: 16, fr_batch: 16, ..TrainConfig::default() };
        let a = fit(&data, &cfg, Execution::default()).unwrap();
        let b = fit(&data, &cfg, Execution::Sequential).unwrap();
        assert_eq!(a.log.len(), 2);
        assert_eq!(a.model, b.model);
        assert_eq!(a.log, b.log);
        assert_eq!(a.log[1].epoch, 1);
    }

    #[test]
    fn zero_epochs_keeps_initialization() {
        let data = small_data(0.05);
        let cfg = TrainConfig { epochs: 0, ..TrainConfig::default() };
        let out = fit(&data, &cfg, Execution::default()).unwrap();
        let mut master = SeededRng::new(cfg.seed);
        let init = MlpModel::init(data.dims(64), &mut master.fork()).unwrap();
        assert_eq!(out.model, init);
        assert!(out.log.is_empty());
    }

    #[test]
    fn no_acceptances_reduce_to_labeled_focal() {
        let mut data = small_data(0.05);
        data.fr.clear();
        let full = TrainConfig { epochs: 2, batch: 16, ..TrainConfig::default() };
        let a = fit(&data, &full, Execution::default()).unwrap();
        let b = fit(&data, &full.clone().ablation(), Execution::default()).unwrap();
        assert_eq!(a.model, b.model);
        for e in &a.log {
            assert_eq!((e.accept_rate, e.losses.focal_fr, e.losses.focal_syn, e.losses.rank), (0.0, 0.0, 0.0, 0.0));
        }
    }
}
