//! Acceptance checks. Prints one PASS/FAIL line per criterion and exits
//! non-zero on any failure not listed in `EXPECTED_FAILURES`.

use std::fmt::Write as _;
use std::path::PathBuf;
use std::process::Command;
use std::time::{Duration, Instant};

use emorank::augment::blend_horizontal;
use emorank::calibration::{
    aece, bin_equal_width, compound_top2_eval, ece, mce, reliability_report, BinningMode,
};
use emorank::dataio::{
    default_compound_pairs, generate_compound_set, generate_toy_dataset, Dataset, ImageTensor, LabeledSample,
    PredictionRow, ToyGenConfig,
};
use emorank::losses::{focal_loss, ranking_loss, FocalConfig, RankMode, RankingInputs, Target};
use emorank::model::{MlpModel, ModelDims};
use emorank::numcore::{softmax, ProbVector, SeededRng};
use emorank::par::Execution;
use emorank::pseudolabel::{
    assign_pseudo_label, compute_class_thresholds, scheduled_threshold, PseudoLabelConfig, ThresholdState,
};
use emorank::trainer::{fit, plan_blends, predict_batch, Pairing, TrainConfig, TrainData};

/// Criteria known to fail on this implementation, with the measured reason.
/// A listed criterion that passes is reported as unexpected.
const EXPECTED_FAILURES: &[(u32, &str)] = &[];

const FD_STEP: f64 = 1e-5;
const FD_TOL: f64 = 1e-4;
const RUN_BUDGET: Duration = Duration::from_secs(120);

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

// ---------------------------------------------------------------- 1

fn metric_oracles() -> Outcome {
    let start = Instant::now();
    let conf = [0.6, 0.7, 0.9, 0.95];
    let correct = [false, true, true, true];
    let width = bin_equal_width(&conf, &correct, 2).unwrap();
    let e = ece(&width, 4).unwrap();
    let m = mce(&width).unwrap();
    let a = aece(&conf, &correct, 2).unwrap();

    let mut rng = SeededRng::new(10_000);
    let n = 10_000;
    let mut bc = Vec::with_capacity(n);
    let mut bok = Vec::with_capacity(n);
    for _ in 0..n {
        let c = rng.next_f64();
        bc.push(c);
        bok.push(rng.next_f64() < c);
    }
    let stream = ece(&bin_equal_width(&bc, &bok, 15).unwrap(), n).unwrap();
    let elapsed = start.elapsed();
    let pass = (e - 0.0375).abs() < 1e-9
        && (m - 0.0375).abs() < 1e-9
        && (a - 0.1125).abs() < 1e-9
        && stream < 0.03
        && elapsed < Duration::from_secs(1);
    outcome(
        pass,
        format!("ece={e:.10} mce={m:.10} aece={a:.10} bernoulli_ece={stream:.4} time={elapsed:.2?}"),
    )
}

// ---------------------------------------------------------------- 2

/// Max relative error over coordinates where the analytic value exceeds 1e-8.
fn max_rel_err(analytic: &[f64], numeric: &[f64]) -> f64 {
    analytic
        .iter()
        .zip(numeric)
        .filter(|(a, _)| a.abs() > 1e-8)
        .map(|(a, n)| (a - n).abs() / a.abs().max(n.abs()))
        .fold(0.0, f64::max)
}

fn central_diff(x: &[f64], f: impl Fn(&[f64]) -> f64) -> Vec<f64> {
    let mut buf = x.to_vec();
    (0..x.len())
        .map(|i| {
            buf[i] = x[i] + FD_STEP;
            let up = f(&buf);
            buf[i] = x[i] - FD_STEP;
            let down = f(&buf);
            buf[i] = x[i];
            (up - down) / (2.0 * FD_STEP)
        })
        .collect()
}

fn random_logits(rng: &mut SeededRng, classes: usize, scale: f64) -> Vec<f64> {
    (0..classes).map(|_| scale * rng.normal()).collect()
}

fn focal_check(rng: &mut SeededRng) -> f64 {
    let mut worst: f64 = 0.0;
    for case in 0..100 {
        let classes = 2 + rng.below(7);
        let z = random_logits(rng, classes, 2.0);
        let cfg = FocalConfig {
            gamma: 3.0 * rng.next_f64(),
            alpha: 0.05 + 0.95 * rng.next_f64(),
        };
        let soft: Vec<f64> = {
            let raw: Vec<f64> = (0..classes).map(|_| rng.next_f64()).collect();
            let s: f64 = raw.iter().sum();
            raw.into_iter().map(|v| v / s).collect()
        };
        let hard = rng.below(classes);
        let target = if case % 2 == 0 { Target::Hard(hard) } else { Target::Soft(&soft) };
        let analytic = focal_loss(&z, target, &cfg).unwrap().grads.remove(0);
        let numeric = central_diff(&z, |v| focal_loss(v, target, &cfg).unwrap().value);
        worst = worst.max(max_rel_err(&analytic, &numeric));
    }
    worst
}

fn top_gap(p: &[f64]) -> f64 {
    let mut s = p.to_vec();
    s.sort_by(|a, b| b.total_cmp(a));
    s[0] - s[1]
}

fn ranking_check(rng: &mut SeededRng, mode: RankMode) -> (f64, usize) {
    let mut worst: f64 = 0.0;
    let (mut done, mut active) = (0, 0);
    while done < 100 {
        let classes = 2 + rng.below(7);
        let zs: Vec<Vec<f64>> = (0..3).map(|_| random_logits(rng, classes, 1.5)).collect();
        let c1 = rng.below(classes);
        let c2 = (c1 + 1 + rng.below(classes - 1)) % classes;
        let margin = 0.1 + 0.2 * rng.next_f64();
        let ps: Vec<ProbVector> = zs.iter().map(|z| softmax(z).unwrap()).collect();
        // keep away from hinge kinks and top-1 switches, where no derivative exists
        let (k1, kf, k2, kr) = match mode {
            RankMode::LabelIndexed => (c1, c1, c2, c2),
            RankMode::Top1 => (ps[0].predicted(), ps[1].predicted(), ps[0].predicted(), ps[2].predicted()),
        };
        let h1 = ps[0][k1] - ps[1][kf] + margin;
        let h2 = ps[0][k2] - ps[2][kr] + margin;
        if h1.abs() < 1e-3 || h2.abs() < 1e-3 {
            continue;
        }
        if mode == RankMode::Top1 && ps.iter().any(|p| top_gap(p.as_slice()) < 1e-3) {
            continue;
        }
        let value = |z: &[Vec<f64>]| {
            let p: Vec<ProbVector> = z.iter().map(|v| softmax(v).unwrap()).collect();
            ranking_loss(&RankingInputs {
                p_syn: &p[0],
                p_fer: &p[1],
                p_fr: &p[2],
                c1,
                c2,
                margin,
                mode,
            })
            .unwrap()
        };
        let bundle = value(&zs);
        if bundle.value > 0.0 {
            active += 1;
        }
        for (g, grad) in bundle.grads.iter().enumerate() {
            let numeric = central_diff(&zs[g], |v| {
                let mut z = zs.clone();
                z[g] = v.to_vec();
                value(&z).value
            });
            worst = worst.max(max_rel_err(grad, &numeric));
        }
        done += 1;
    }
    (worst, active)
}

fn model_check(rng: &mut SeededRng) -> f64 {
    let mut worst: f64 = 0.0;
    let mut done = 0;
    let cfg = FocalConfig::default();
    while done < 100 {
        let dims = ModelDims {
            input: 3 + rng.below(8),
            hidden: 2 + rng.below(7),
            classes: 2 + rng.below(4),
        };
        let model = MlpModel::init(dims, &mut rng.fork()).unwrap();
        let mut params = model.params().to_vec();
        // nonzero biases so every parameter group is exercised
        let b1 = dims.input * dims.hidden;
        for p in &mut params[b1..b1 + dims.hidden] {
            *p = 0.3 * rng.normal();
        }
        let model = MlpModel::from_params(dims, params.clone()).unwrap();
        let n = 1 + rng.below(4);
        let xs: Vec<Vec<f64>> = (0..n).map(|_| (0..dims.input).map(|_| rng.next_f64()).collect()).collect();
        let labels: Vec<usize> = (0..n).map(|_| rng.below(dims.classes)).collect();
        // skip instances with a hidden unit near the rectifier kink
        let near_kink = xs.iter().any(|x| {
            (0..dims.hidden).any(|j| {
                let pre: f64 = params[b1 + j] + (0..dims.input).map(|i| x[i] * params[i * dims.hidden + j]).sum::<f64>();
                pre.abs() < 1e-3
            })
        });
        if near_kink {
            continue;
        }
        let refs: Vec<&[f64]> = xs.iter().map(|x| x.as_slice()).collect();
        let objective = |p: &[f64]| {
            let m = MlpModel::from_params(dims, p.to_vec()).unwrap();
            refs.iter()
                .zip(&labels)
                .map(|(x, &y)| focal_loss(&m.forward_one(x).unwrap().logits, Target::Hard(y), &cfg).unwrap().value)
                .sum::<f64>()
        };
        let upstream: Vec<Vec<f64>> = refs
            .iter()
            .zip(&labels)
            .map(|(x, &y)| {
                focal_loss(&model.forward_one(x).unwrap().logits, Target::Hard(y), &cfg)
                    .unwrap()
                    .grads
                    .remove(0)
            })
            .collect();
        let analytic = model.backward(&refs, &upstream, Execution::default()).unwrap();
        let numeric = central_diff(&params, objective);
        worst = worst.max(max_rel_err(&analytic, &numeric));
        done += 1;
    }
    worst
}

fn gradient_checks() -> Outcome {
    let start = Instant::now();
    let mut rng = SeededRng::new(2);
    let focal = focal_check(&mut rng);
    let (label, label_active) = ranking_check(&mut rng, RankMode::LabelIndexed);
    let (top1, top1_active) = ranking_check(&mut rng, RankMode::Top1);
    let model = model_check(&mut rng);
    let elapsed = start.elapsed();
    let pass = [focal, label, top1, model].iter().all(|&e| e < FD_TOL) && elapsed < Duration::from_secs(10);
    outcome(
        pass,
        format!(
            "max rel err focal={focal:.2e} rank_label={label:.2e} ({label_active}/100 active) \
             rank_top1={top1:.2e} ({top1_active}/100 active) model={model:.2e} time={elapsed:.2?}"
        ),
    )
}

// ---------------------------------------------------------------- 3

fn threshold_schedule() -> Outcome {
    let cfg = PseudoLabelConfig::default();
    let probs = vec![ProbVector::new(vec![0.9, 0.05, 0.05]).unwrap(); 3];
    let t0 = compute_class_thresholds(&probs, &[0, 0, 0], 0, &cfg).unwrap();
    let at0 = t0.thresholds[0];
    let fallback = t0.thresholds[1];
    let series: Vec<f64> = (0..=200).map(|t| scheduled_threshold(cfg.beta, t, 0.9)).collect();
    // strict until the epoch sigmoid saturates in double precision
    let strict = series[..=25].windows(2).all(|w| w[0] < w[1]);
    let monotone = series.windows(2).all(|w| w[0] <= w[1]);
    let sup = scheduled_threshold(cfg.beta, 100_000, 0.9);
    let pass = (at0 - 0.43650).abs() < 1e-9
        && strict
        && monotone
        && series.iter().all(|&t| t <= sup)
        && (sup - 0.873).abs() < 1e-9
        && fallback == 0.95;
    outcome(
        pass,
        format!("T(0)={at0:.10} strictly increasing t<=25: {strict} sup={sup:.10} empty-class fallback={fallback}"),
    )
}

// ---------------------------------------------------------------- 4

fn blend_provenance() -> Outcome {
    let mut rng = SeededRng::new(4);
    let classes = 7;
    let mut bad = 0;
    for i in 0..1000 {
        let (h, w) = (2 + rng.below(30), 1 + rng.below(30));
        let img = |rng: &mut SeededRng| ImageTensor::from_fn(h, w, |_, _| rng.next_f64()).unwrap();
        let c1 = rng.below(classes);
        let c2 = (c1 + 1 + rng.below(classes - 1)) % classes;
        let a = LabeledSample { id: format!("a{i}"), image: img(&mut rng), label: Some(c1) };
        let b = LabeledSample { id: format!("b{i}"), image: img(&mut rng), label: Some(c2) };
        let r = blend_horizontal(&a, &b, classes).unwrap();
        let pixels_ok = (0..h).all(|row| {
            (0..w).all(|col| {
                let parent = if row < h / 2 { &a.image } else { &b.image };
                r.image.get(row, col) == parent.get(row, col)
            })
        });
        let label_ok = r.soft_label.iter().enumerate().all(|(c, &v)| {
            if c == c1 || c == c2 {
                v == 0.5
            } else {
                v == 0.0
            }
        });
        if !(pixels_ok && label_ok && r.parent_classes == (c1, c2)) {
            bad += 1;
        }
    }
    outcome(bad == 0, format!("{} / 1000 blends exact", 1000 - bad))
}

// ---------------------------------------------------------------- 5

/// Literal evaluation: argmax over classes of indicator(p > T) * p, with no
/// label when every product is zero. First maximum wins.
fn pseudo_label_oracle(p: &[f64], t: &[f64]) -> Option<usize> {
    let products: Vec<f64> = p.iter().zip(t).map(|(&pc, &tc)| if pc > tc { pc } else { 0.0 }).collect();
    let mut best: Option<usize> = None;
    for c in 0..products.len() {
        if products[c] > 0.0 && best.is_none_or(|b| products[c] > products[b]) {
            best = Some(c);
        }
    }
    best
}

fn pseudo_label_contract() -> Outcome {
    let mut rng = SeededRng::new(5);
    let (mut agree, mut strict, mut accepted) = (0, 0, 0);
    for _ in 0..1000 {
        let classes = 2 + rng.below(7);
        // coarse grid values produce ties and threshold equalities
        let raw: Vec<f64> = (0..classes).map(|_| (1 + rng.below(8)) as f64).collect();
        let s: f64 = raw.iter().sum();
        let p: Vec<f64> = raw.iter().map(|v| v / s).collect();
        let t: Vec<f64> = p
            .iter()
            .map(|&pc| match rng.below(3) {
                0 => pc,
                _ => rng.below(9) as f64 / 8.0,
            })
            .collect();
        let state = ThresholdState { thresholds: t.clone(), ..ThresholdState::constant(classes, 0.95) };
        let got = assign_pseudo_label(ProbVector::new(p.clone()).unwrap(), &state).unwrap().label;
        if got == pseudo_label_oracle(&p, &t) {
            agree += 1;
        }
        match got {
            Some(y) => {
                accepted += 1;
                if p[y] > t[y] {
                    strict += 1;
                }
            }
            None => strict += 1,
        }
    }
    outcome(
        agree == 1000 && strict == 1000,
        format!("oracle agreement {agree}/1000, strict threshold {strict}/1000, accepted {accepted}"),
    )
}

// ---------------------------------------------------------------- 6

/// The unordered pair that ranks first when each pair is compared by its
/// members sorted by (probability desc, index asc).
fn top2_pair_oracle(p: &[f64]) -> (usize, usize) {
    let better = |i: usize, j: usize| p[i] > p[j] || (p[i] == p[j] && i < j);
    let key = |a: usize, b: usize| if better(a, b) { (a, b) } else { (b, a) };
    let mut best = key(0, 1);
    for a in 0..p.len() {
        for b in a + 1..p.len() {
            let cand = key(a, b);
            let wins = better(cand.0, best.0) || (cand.0 == best.0 && better(cand.1, best.1));
            if wins {
                best = cand;
            }
        }
    }
    (best.0.min(best.1), best.0.max(best.1))
}

fn compound_oracle() -> Outcome {
    let mut rng = SeededRng::new(6);
    let classes = 7;
    let mut rows = Vec::new();
    let mut pairs = Vec::new();
    let mut expected = Vec::new();
    for i in 0..1000 {
        let raw: Vec<f64> = (0..classes).map(|_| rng.below(6) as f64).collect();
        let raw = if raw.iter().all(|&v| v == 0.0) { vec![1.0; classes] } else { raw };
        let s: f64 = raw.iter().sum();
        let p: Vec<f64> = raw.iter().map(|v| v / s).collect();
        let c1 = rng.below(classes);
        let c2 = (c1 + 1 + rng.below(classes - 1)) % classes;
        expected.push(top2_pair_oracle(&p) == (c1.min(c2), c1.max(c2)));
        rows.push(PredictionRow { id: format!("r{i}"), label: None, probs: ProbVector::new(p).unwrap() });
        pairs.push(Some((c1, c2)));
    }
    let result = compound_top2_eval(&rows, &pairs).unwrap();
    let agree = result.matches.iter().zip(&expected).filter(|(a, b)| a == b).count();
    let matched = expected.iter().filter(|&&m| m).count();

    let fixture_pairs = default_compound_pairs(classes);
    let fixture: Vec<PredictionRow> = fixture_pairs
        .iter()
        .map(|&(a, b)| {
            let mut p = vec![0.0; classes];
            p[a] = 0.5;
            p[b] = 0.5;
            PredictionRow { id: format!("{a}-{b}"), label: None, probs: ProbVector::new(p).unwrap() }
        })
        .collect();
    let fixture_rate = compound_top2_eval(&fixture, &fixture_pairs.iter().map(|&p| Some(p)).collect::<Vec<_>>())
        .unwrap()
        .overall_match_rate();
    outcome(
        agree == 1000 && fixture_rate == 1.0,
        format!("oracle agreement {agree}/1000 ({matched} matches), 0.5/0.5 fixture rate {fixture_rate:.4}"),
    )
}

// ---------------------------------------------------------------- 7, 8

struct RunResult {
    seed: u64,
    variant: &'static str,
    eval_acc: f64,
    eval_ece: f64,
    eval_aece: f64,
    eval_mce: f64,
    top2: f64,
    seconds: f64,
    model: MlpModel,
    data: TrainData,
}

fn toy_data(seed: u64) -> (TrainData, Dataset) {
    let cfg = ToyGenConfig { seed, ..ToyGenConfig::default() };
    let ds = generate_toy_dataset(&cfg).unwrap();
    let compound = generate_compound_set(&cfg, &default_compound_pairs(cfg.classes), 20).unwrap();
    (TrainData::from_dataset(&ds).unwrap(), compound)
}

fn run(seed: u64, variant: &'static str, cfg: TrainConfig) -> RunResult {
    let (data, compound) = toy_data(seed);
    assert_eq!((data.fer.len(), data.fr.len(), compound.images.len()), (700, 300, 220));
    let start = Instant::now();
    let out = fit(&data, &cfg, Execution::default()).unwrap();
    let seconds = start.elapsed().as_secs_f64();
    let rows = predict_batch(&out.model, &data.eval, Execution::default()).unwrap();
    let report = reliability_report(&rows, cfg.bins, BinningMode::EqualWidth).unwrap();
    let pairs: Vec<_> = compound.compound().into_iter().collect();
    let samples: Vec<LabeledSample> = pairs.iter().map(|(s, _)| s.clone()).collect();
    let crow = predict_batch(&out.model, &samples, Execution::default()).unwrap();
    let top2 = compound_top2_eval(&crow, &pairs.iter().map(|(_, p)| Some(*p)).collect::<Vec<_>>())
        .unwrap()
        .overall_match_rate();
    RunResult {
        seed,
        variant,
        eval_acc: report.accuracy,
        eval_ece: report.ece,
        eval_aece: report.aece,
        eval_mce: report.mce,
        top2,
        seconds,
        model: out.model,
        data,
    }
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    v[v.len() / 2]
}

fn results_path() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../results/directional.csv")
}

fn directional(runs: &[RunResult]) -> Outcome {
    let mut csv = String::from("seed,variant,epochs,eval_acc,eval_ece,eval_aece,eval_mce,compound_top2,train_seconds\n");
    for r in runs {
        let _ = writeln!(
            csv,
            "{},{},60,{:.6},{:.6},{:.6},{:.6},{:.6},{:.2}",
            r.seed, r.variant, r.eval_acc, r.eval_ece, r.eval_aece, r.eval_mce, r.top2, r.seconds
        );
    }
    let path = results_path();
    std::fs::create_dir_all(path.parent().unwrap()).unwrap();
    std::fs::write(&path, csv).unwrap();

    let pick = |variant: &str, f: fn(&RunResult) -> f64| {
        median(runs.iter().filter(|r| r.variant == variant).map(f).collect())
    };
    let (ece_full, ece_abl) = (pick("full", |r| r.eval_ece), pick("ablation", |r| r.eval_ece));
    let (top_full, top_abl) = (pick("full", |r| r.top2), pick("ablation", |r| r.top2));
    let slowest = runs.iter().map(|r| r.seconds).fold(0.0, f64::max);
    let ece_ok = ece_full <= ece_abl;
    let top_ok = top_full >= top_abl;
    let time_ok = slowest < RUN_BUDGET.as_secs_f64();
    outcome(
        ece_ok && top_ok && time_ok,
        format!(
            "median ece full={ece_full:.4} ablation={ece_abl:.4} ({}); median top2 full={top_full:.4} \
             ablation={top_abl:.4} ({}); slowest run {slowest:.1}s",
            if ece_ok { "ok" } else { "not lower" },
            if top_ok { "ok" } else { "not higher" }
        ),
    )
}

fn confidence_ordering(full_seed1: &RunResult) -> Outcome {
    let eval = &full_seed1.data.eval;
    let labels: Vec<usize> = eval.iter().map(|s| s.label.unwrap()).collect();
    let blends: Vec<LabeledSample> = plan_blends(&labels, &labels, Pairing::FerFr)
        .into_iter()
        .map(|p| {
            let other = match p.partner {
                emorank::trainer::Partner::Fr(j) | emorank::trainer::Partner::Fer(j) => &eval[j],
            };
            let r = blend_horizontal(&eval[p.fer], other, full_seed1.data.classes).unwrap();
            LabeledSample { id: format!("syn-{}", p.fer), image: r.image, label: None }
        })
        .collect();
    let mean_conf = |samples: &[LabeledSample]| {
        let rows = predict_batch(&full_seed1.model, samples, Execution::default()).unwrap();
        rows.iter().map(|r| r.probs.confidence()).sum::<f64>() / rows.len() as f64
    };
    let (orig, syn) = (mean_conf(eval), mean_conf(&blends));
    outcome(
        orig > syn,
        format!("mean top-1 confidence fer-eval={orig:.4} synthetic={syn:.4} ({} blends)", blends.len()),
    )
}

// ---------------------------------------------------------------- 9

fn determinism() -> Outcome {
    let bin = env!("CARGO_BIN_EXE_emorank");
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("data");
    let ok = |args: &[&std::ffi::OsStr]| Command::new(bin).args(args).output().unwrap().status.success();
    if !ok(&["gen-toy".as_ref(), "--out".as_ref(), data.as_os_str()]) {
        return outcome(false, "gen-toy failed".into());
    }
    let cfg = dir.path().join("train.cfg");
    std::fs::write(&cfg, "seed = 1\nepochs = 60\n").unwrap();
    let mut outs = Vec::new();
    for name in ["a", "b"] {
        let out = dir.path().join(name);
        let args = ["train".as_ref(), "--config".as_ref(), cfg.as_os_str(), "--data".as_ref(), data.as_os_str(), "--out".as_ref(), out.as_os_str()];
        if !ok(&args) {
            return outcome(false, format!("train run {name} failed"));
        }
        outs.push(out);
    }
    let same = |f: &str| std::fs::read(outs[0].join(f)).unwrap() == std::fs::read(outs[1].join(f)).unwrap();
    let (model, metrics) = (same("model.bin"), same("metrics.csv"));
    let rows = std::fs::read_to_string(outs[0].join("metrics.csv")).unwrap().lines().count() - 1;
    outcome(
        model && metrics && rows == 60,
        format!("model bytes identical: {model}, metrics identical: {metrics} ({rows} epochs)"),
    )
}

fn main() {
    let mut results: Vec<(u32, &str, Outcome)> = vec![
        (1, "metric oracles", metric_oracles()),
        (2, "gradient checks", gradient_checks()),
        (3, "threshold schedule", threshold_schedule()),
        (4, "blend provenance", blend_provenance()),
        (5, "pseudo-label contract", pseudo_label_contract()),
        (6, "compound top-2 oracle", compound_oracle()),
    ];

    let mut runs = Vec::new();
    for seed in [1, 2, 3] {
        let full = TrainConfig { seed, ..TrainConfig::default() };
        runs.push(run(seed, "full", full.clone()));
        runs.push(run(seed, "ablation", full.ablation()));
    }
    results.push((7, "directional experiment", directional(&runs)));
    let seed1 = runs.iter().find(|r| r.seed == 1 && r.variant == "full").unwrap();
    results.push((8, "confidence ordering", confidence_ordering(seed1)));
    results.push((9, "determinism", determinism()));

    let mut unexpected = 0;
    for (id, name, o) in &results {
        let expected = EXPECTED_FAILURES.iter().find(|(e, _)| e == id);
        let status = match (o.pass, expected) {
            (true, None) => "PASS",
            (false, Some(_)) => "FAIL (expected)",
            (false, None) => {
                unexpected += 1;
                "FAIL"
            }
            (true, Some(_)) => {
                unexpected += 1;
                "PASS (listed as expected failure)"
            }
        };
        println!("criterion {id} {status}: {name}: {}", o.detail);
        if let (false, Some((_, why))) = (o.pass, expected) {
            println!("    reason: {why}");
        }
    }
    let passed = results.iter().filter(|r| r.2.pass).count();
    println!("acceptance: {passed}/{} criteria pass, {unexpected} unexpected", results.len());
    if unexpected > 0 {
        std::process::exit(1);
    }
}
