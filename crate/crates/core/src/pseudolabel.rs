//! Class-wise dynamic confidence thresholds and pseudo-label assignment for
//! the unlabeled split.
//!
//! Per class `c` at epoch `t`, the threshold is
//! `beta / (1 + e^-t) * mean_{correct class-c samples} max_k p_k`, falling
//! back to `tau0` when the model has no correct class-c prediction. An
//! unlabeled sample is seen through two weak views whose distributions are
//! interpolated class-wise; its label is the most confident class among those
//! strictly above their thresholds.

use crate::augment::weak_augment;
use crate::dataio::ImageTensor;
use crate::error::{Error, Result};
use crate::model::Classifier;
use crate::numcore::{argmax_tiebreak, ProbVector, SeededRng};
use crate::par::{map_indexed, Execution};

/// Interpolation weight of the first view, per class.
#[derive(Debug, Clone, PartialEq)]
pub enum ViewWeights {
    Uniform(f64),
    PerClass(Vec<f64>),
}

impl ViewWeights {
    fn get(&self, class: usize) -> f64 {
        match self {
            ViewWeights::Uniform(w) => *w,
            ViewWeights::PerClass(v) => v[class],
        }
    }

    fn validate(&self, classes: usize) -> Result<()> {
        let ok = |w: f64| (0.0..=1.0).contains(&w);
        match self {
            ViewWeights::Uniform(w) if ok(*w) => Ok(()),
            ViewWeights::PerClass(v) if v.len() == classes && v.iter().all(|w| ok(*w)) => Ok(()),
            ViewWeights::Uniform(w) => Err(Error::invalid(format!("lambda_c {w} outside [0,1]"))),
            ViewWeights::PerClass(v) => Err(Error::invalid(format!(
                "lambda_c needs {classes} values in [0,1], got {v:?}"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PseudoLabelConfig {
    pub lambda_c: ViewWeights,
    pub beta: f64,
    pub tau0: f64,
}

impl Default for PseudoLabelConfig {
    fn default() -> Self {
        Self {
            lambda_c: ViewWeights::Uniform(0.5),
            beta: 0.97,
            tau0: 0.95,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ThresholdState {
    pub epoch: usize,
    pub beta: f64,
    pub tau0: f64,
    pub thresholds: Vec<f64>,
    /// Mean top-1 confidence over correctly predicted samples of each class.
    pub mean_confidence: Vec<Option<f64>>,
    pub correct_counts: Vec<usize>,
}

impl ThresholdState {
    /// Every class at `value`; handy for fixtures and the pre-training state.
    pub fn constant(classes: usize, value: f64) -> Self {
        Self {
            epoch: 0,
            beta: 0.97,
            tau0: value,
            thresholds: vec![value; classes],
            mean_confidence: vec![None; classes],
            correct_counts: vec![0; classes],
        }
    }
}

pub fn epoch_sigmoid(epoch: usize) -> f64 {
    1.0 / (1.0 + (-(epoch as f64)).exp())
}

/// Threshold from a class's mean confidence.
pub fn scheduled_threshold(beta: f64, epoch: usize, mean_confidence: f64) -> f64 {
    beta * epoch_sigmoid(epoch) * mean_confidence
}

pub fn compute_class_thresholds(
    predictions: &[ProbVector],
    labels: &[usize],
    epoch: usize,
    config: &PseudoLabelConfig,
) -> Result<ThresholdState> {
    if predictions.is_empty() {
        return Err(Error::invalid("threshold computation over an empty dataset"));
    }
    if predictions.len() != labels.len() {
        return Err(Error::shape(format!(
            "{} predictions vs {} labels",
            predictions.len(),
            labels.len()
        )));
    }
    if !(config.beta > 0.0 && config.beta < 1.0) {
        return Err(Error::invalid(format!("beta {} outside (0,1)", config.beta)));
    }
    let classes = predictions[0].len();
    let mut sums = vec![0.0; classes];
    let mut counts = vec![0usize; classes];
    for (p, &y) in predictions.iter().zip(labels) {
        if p.len() != classes || y >= classes {
            return Err(Error::shape("prediction/label class count mismatch"));
        }
        if p.predicted() == y {
            sums[y] += p.confidence();
            counts[y] += 1;
        }
    }
    let mean_confidence: Vec<Option<f64>> = sums
        .iter()
        .zip(&counts)
        .map(|(&s, &n)| (n > 0).then(|| s / n as f64))
        .collect();
    let thresholds = mean_confidence
        .iter()
        .map(|m| match m {
            Some(m) => scheduled_threshold(config.beta, epoch, *m),
            None => config.tau0,
        })
        .collect();
    Ok(ThresholdState {
        epoch,
        beta: config.beta,
        tau0: config.tau0,
        thresholds,
        mean_confidence,
        correct_counts: counts,
    })
}

/// Class-wise interpolation of two views' distributions. Renormalizes only
/// when non-uniform weights break the unit sum.
pub fn aggregate_probs(p_a: &ProbVector, p_b: &ProbVector, config: &PseudoLabelConfig) -> Result<ProbVector> {
    if p_a.len() != p_b.len() {
        return Err(Error::shape(format!("views have {} and {} classes", p_a.len(), p_b.len())));
    }
    config.lambda_c.validate(p_a.len())?;
    let mut out: Vec<f64> = (0..p_a.len())
        .map(|c| {
            let w = config.lambda_c.get(c);
            w * p_a[c] + (1.0 - w) * p_b[c]
        })
        .collect();
    if let ViewWeights::PerClass(_) = config.lambda_c {
        let s: f64 = out.iter().sum();
        if s <= 0.0 {
            return Err(Error::Numeric("aggregated distribution has zero mass".into()));
        }
        out.iter_mut().for_each(|v| *v /= s);
    }
    ProbVector::new(out)
}

#[derive(Debug, Clone, PartialEq)]
pub struct AggregatedPrediction {
    pub probs: ProbVector,
    pub label: Option<usize>,
}

impl AggregatedPrediction {
    pub fn accepted(&self) -> bool {
        self.label.is_some()
    }
}

pub fn assign_pseudo_label(probs: ProbVector, thresholds: &ThresholdState) -> Result<AggregatedPrediction> {
    if probs.len() != thresholds.thresholds.len() {
        return Err(Error::shape(format!(
            "{} classes vs {} thresholds",
            probs.len(),
            thresholds.thresholds.len()
        )));
    }
    let masked: Vec<f64> = probs
        .as_slice()
        .iter()
        .zip(&thresholds.thresholds)
        .map(|(&p, &t)| if p > t { p } else { 0.0 })
        .collect();
    let any = probs
        .as_slice()
        .iter()
        .zip(&thresholds.thresholds)
        .any(|(p, t)| p > t);
    let label = if any { Some(argmax_tiebreak(&masked)?) } else { None };
    Ok(AggregatedPrediction { probs, label })
}

/// Two weak views per image, interpolated and thresholded. Each image gets
/// its own child RNG drawn up front, so results do not depend on scheduling.
pub fn pseudo_label_batch<M: Classifier>(
    images: &[&ImageTensor],
    model: &M,
    thresholds: &ThresholdState,
    rng: &mut SeededRng,
    config: &PseudoLabelConfig,
    crop_pad: usize,
    exec: Execution,
) -> Result<Vec<(ImageTensor, AggregatedPrediction)>> {
    let seeds: Vec<SeededRng> = images.iter().map(|_| rng.fork()).collect();
    map_indexed(exec, images.len(), |i| {
        let mut r = seeds[i].clone();
        let view_a = weak_augment(images[i], crop_pad, &mut r);
        let view_b = weak_augment(images[i], crop_pad, &mut r);
        let p_a = model.predict(&view_a)?;
        let p_b = model.predict(&view_b)?;
        let agg = aggregate_probs(&p_a, &p_b, config)?;
        Ok((view_a, assign_pseudo_label(agg, thresholds)?))
    })
    .into_iter()
    .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pv(v: &[f64]) -> ProbVector {
        ProbVector::new(v.to_vec()).unwrap()
    }

    fn thresholds(t: &[f64]) -> ThresholdState {
        ThresholdState {
            thresholds: t.to_vec(),
            ..ThresholdState::constant(t.len(), 0.95)
        }
    }

    /// Predictions whose correct class-0 samples all carry confidence `conf`.
    fn fixture(conf: f64) -> (Vec<ProbVector>, Vec<usize>) {
        let rest = (1.0 - conf) / 2.0;
        (vec![pv(&[conf, rest, rest]); 4], vec![0; 4])
    }

    #[test]
    fn threshold_schedule_examples() {
        let cfg = PseudoLabelConfig::default();
        let (p, y) = fixture(0.9);
        let s = compute_class_thresholds(&p, &y, 0, &cfg).unwrap();
        assert!((s.thresholds[0] - 0.4365).abs() < 1e-12);
        let s = compute_class_thresholds(&p, &y, 60, &cfg).unwrap();
        assert!((s.thresholds[0] - 0.873).abs() < 1e-10);
        // classes 1 and 2 have no correct predictions
        assert_eq!(s.thresholds[1], 0.95);
        assert_eq!(s.thresholds[2], 0.95);
        assert!(compute_class_thresholds(&[], &[], 0, &cfg).is_err());
    }

    #[test]
    fn threshold_stays_below_beta() {
        let cfg = PseudoLabelConfig::default();
        let (p, y) = fixture(1.0);
        for t in 0..100 {
            let s = compute_class_thresholds(&p, &y, t, &cfg).unwrap();
            assert!(s.thresholds[0] > 0.0 && s.thresholds[0] <= cfg.beta);
        }
    }

    #[test]
    fn aggregate_examples() {
        let cfg = PseudoLabelConfig::default();
        let out = aggregate_probs(&pv(&[0.6, 0.4]), &pv(&[0.2, 0.8]), &cfg).unwrap();
        assert!((out[0] - 0.4).abs() < 1e-15 && (out[1] - 0.6).abs() < 1e-15);
        let p = pv(&[0.1, 0.7, 0.2]);
        for w in [0.0, 0.3, 0.5, 1.0] {
            let cfg = PseudoLabelConfig { lambda_c: ViewWeights::Uniform(w), ..Default::default() };
            let out = aggregate_probs(&p, &p, &cfg).unwrap();
            for c in 0..3 {
                assert!((out[c] - p[c]).abs() < 1e-15);
            }
        }
        let cfg = PseudoLabelConfig { lambda_c: ViewWeights::Uniform(1.0), ..Default::default() };
        assert_eq!(aggregate_probs(&pv(&[0.6, 0.4]), &pv(&[0.2, 0.8]), &cfg).unwrap(), pv(&[0.6, 0.4]));
        assert!(aggregate_probs(&pv(&[0.5, 0.5]), &pv(&[1.0]), &cfg).is_err());
    }

    #[test]
    fn per_class_weights_renormalize() {
        let cfg = PseudoLabelConfig {
            lambda_c: ViewWeights::PerClass(vec![1.0, 0.0]),
            ..Default::default()
        };
        let out = aggregate_probs(&pv(&[0.6, 0.4]), &pv(&[0.2, 0.8]), &cfg).unwrap();
        // raw (0.6, 0.8) / 1.4
        assert!((out[0] - 0.6 / 1.4).abs() < 1e-15);
    }

    #[test]
    fn assignment_examples() {
        let a = assign_pseudo_label(pv(&[0.5, 0.3, 0.2]), &thresholds(&[0.4, 0.45, 0.5])).unwrap();
        assert_eq!(a.label, Some(0));
        let a = assign_pseudo_label(pv(&[0.3, 0.3, 0.4]), &thresholds(&[0.5, 0.5, 0.5])).unwrap();
        assert_eq!(a.label, None);
        assert!(!a.accepted());
        let a = assign_pseudo_label(pv(&[0.6, 0.35, 0.05]), &thresholds(&[0.5, 0.3, 0.9])).unwrap();
        assert_eq!(a.label, Some(0));
        // equality rejects
        let a = assign_pseudo_label(pv(&[0.5, 0.5]), &thresholds(&[0.5, 0.5])).unwrap();
        assert_eq!(a.label, None);
    }

    struct Fixed(ProbVector);

    impl Classifier for Fixed {
        fn class_count(&self) -> usize {
            self.0.len()
        }
        fn predict(&self, _: &ImageTensor) -> Result<ProbVector> {
            Ok(self.0.clone())
        }
    }

    #[test]
    fn batch_labeling() {
        let img = ImageTensor::filled(6, 6, 0.3).unwrap();
        let imgs = vec![&img; 5];
        let model = Fixed(ProbVector::one_hot(7, 3));
        let cfg = PseudoLabelConfig::default();
        let mut rng = SeededRng::new(1);
        let th = ThresholdState::constant(7, 0.95);
        let out = pseudo_label_batch(&imgs, &model, &th, &mut rng, &cfg, 2, Execution::default()).unwrap();
        assert!(out.iter().all(|(_, a)| a.label == Some(3)));

        let th = ThresholdState::constant(7, 1.0);
        let out = pseudo_label_batch(&imgs, &model, &th, &mut rng, &cfg, 2, Execution::default()).unwrap();
        assert!(out.iter().all(|(_, a)| !a.accepted()));
    }
}
