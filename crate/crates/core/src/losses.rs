//! Focal classification loss, the confidence margin ranking loss, and the
//! combined training objective. All gradients are analytic and taken with
//! respect to logits.

use crate::error::{Error, Result};
use crate::numcore::{argmax_tiebreak, log_softmax, softmax, ProbVector};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FocalConfig {
    pub gamma: f64,
    pub alpha: f64,
}

impl Default for FocalConfig {
    fn default() -> Self {
        Self {
            gamma: 2.0,
            alpha: 0.25,
        }
    }
}

impl FocalConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.gamma >= 0.0) || !(self.alpha > 0.0 && self.alpha <= 1.0) {
            return Err(Error::invalid(format!(
                "focal gamma must be >= 0 and alpha in (0,1], got {} / {}",
                self.gamma, self.alpha
            )));
        }
        Ok(())
    }
}

/// A loss value and its gradient with respect to each input logit vector.
#[derive(Debug, Clone, PartialEq)]
pub struct LossBundle {
    pub value: f64,
    pub grads: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, Copy)]
pub enum Target<'a> {
    Hard(usize),
    /// Label distribution; must sum to 1.
    Soft(&'a [f64]),
}

/// `-alpha (1-p)^gamma ln p` and `p * d/dp` of it, for one class.
fn focal_term(p: f64, one_minus_p: f64, log_p: f64, cfg: &FocalConfig) -> (f64, f64) {
    let FocalConfig { gamma, alpha } = *cfg;
    let weight = one_minus_p.powf(gamma);
    let value = -alpha * weight * log_p;
    let focus = if gamma == 0.0 || one_minus_p == 0.0 {
        0.0
    } else {
        gamma * one_minus_p.powf(gamma - 1.0) * p * log_p
    };
    (value, alpha * (focus - weight))
}

pub fn focal_loss(logits: &[f64], target: Target<'_>, cfg: &FocalConfig) -> Result<LossBundle> {
    let probs = softmax(logits)?;
    let log_p = log_softmax(logits)?;
    let p = probs.as_slice();
    let classes = p.len();
    let hard;
    let weights: &[f64] = match target {
        Target::Hard(t) => {
            if t >= classes {
                return Err(Error::invalid(format!("target {t} >= class count {classes}")));
            }
            let mut y = vec![0.0; classes];
            y[t] = 1.0;
            hard = y;
            &hard
        }
        Target::Soft(y) => {
            if y.len() != classes {
                return Err(Error::shape(format!("soft label length {} vs {classes} logits", y.len())));
            }
            if (y.iter().sum::<f64>() - 1.0).abs() > 1e-9 || y.iter().any(|v| *v < 0.0) {
                return Err(Error::invalid("soft label must be a distribution"));
            }
            y
        }
    };
    let total: f64 = p.iter().sum();
    let mut value = 0.0;
    let mut q = vec![0.0; classes];
    for c in 0..classes {
        if weights[c] == 0.0 {
            continue;
        }
        // 1 - p_c as the mass of the other classes, exact near p_c = 1
        let one_minus = (total - p[c]).max(0.0);
        let (v, qc) = focal_term(p[c], one_minus, log_p[c], cfg);
        value += weights[c] * v;
        q[c] = weights[c] * qc;
    }
    let q_sum: f64 = q.iter().sum();
    let grad = (0..classes).map(|j| q[j] - p[j] * q_sum).collect();
    Ok(LossBundle {
        value,
        grads: vec![grad],
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RankMode {
    /// Hinges on the synthetic sample's confidence in each parent's class.
    LabelIndexed,
    /// Hinges on top-1 confidences regardless of class.
    Top1,
}

#[derive(Debug, Clone)]
pub struct RankingInputs<'a> {
    pub p_syn: &'a ProbVector,
    /// First parent (labeled expression sample), class `c1`.
    pub p_fer: &'a ProbVector,
    /// Second parent (pseudo-labeled or second labeled sample), class `c2`.
    pub p_fr: &'a ProbVector,
    pub c1: usize,
    pub c2: usize,
    pub margin: f64,
    pub mode: RankMode,
}

/// `d p_k / d z` for a softmax output `p`, accumulated as `grad += sign * (.)`.
fn add_prob_grad(grad: &mut [f64], p: &[f64], k: usize, sign: f64) {
    for (j, g) in grad.iter_mut().enumerate() {
        let delta = if j == k { 1.0 } else { 0.0 };
        *g += sign * p[k] * (delta - p[j]);
    }
}

/// `max(0, syn - reference + margin)`.
pub fn margin_hinge(syn: f64, reference: f64, margin: f64) -> f64 {
    (syn - reference + margin).max(0.0)
}

/// Sum of two hinges; grads are `[d/dz_syn, d/dz_fer, d/dz_fr]`.
pub fn ranking_loss(inp: &RankingInputs<'_>) -> Result<LossBundle> {
    let classes = inp.p_syn.len();
    if inp.p_fer.len() != classes || inp.p_fr.len() != classes {
        return Err(Error::shape("ranking inputs differ in class count"));
    }
    if inp.c1 == inp.c2 {
        return Err(Error::invalid(format!("ranking needs distinct classes, both are {}", inp.c1)));
    }
    if inp.c1 >= classes || inp.c2 >= classes {
        return Err(Error::invalid("ranking class index out of range"));
    }
    let (syn, fer, fr) = (inp.p_syn.as_slice(), inp.p_fer.as_slice(), inp.p_fr.as_slice());
    let (k_syn1, k_fer, k_syn2, k_fr) = match inp.mode {
        RankMode::LabelIndexed => (inp.c1, inp.c1, inp.c2, inp.c2),
        RankMode::Top1 => {
            let s = argmax_tiebreak(syn)?;
            (s, argmax_tiebreak(fer)?, s, argmax_tiebreak(fr)?)
        }
    };
    let mut g_syn = vec![0.0; classes];
    let mut g_fer = vec![0.0; classes];
    let mut g_fr = vec![0.0; classes];
    let mut value = 0.0;

    let h1 = syn[k_syn1] - fer[k_fer] + inp.margin;
    if h1 > 0.0 {
        value += h1;
        add_prob_grad(&mut g_syn, syn, k_syn1, 1.0);
        add_prob_grad(&mut g_fer, fer, k_fer, -1.0);
    }
    let h2 = syn[k_syn2] - fr[k_fr] + inp.margin;
    if h2 > 0.0 {
        value += h2;
        add_prob_grad(&mut g_syn, syn, k_syn2, 1.0);
        add_prob_grad(&mut g_fr, fr, k_fr, -1.0);
    }
    Ok(LossBundle {
        value,
        grads: vec![g_syn, g_fer, g_fr],
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ObjectiveConfig {
    pub w_rank: f64,
    /// Soft-label focal loss on synthetic blends.
    pub syn_focal: bool,
    /// Focal loss on accepted pseudo-labeled samples.
    pub fr_focal: bool,
}

impl Default for ObjectiveConfig {
    fn default() -> Self {
        Self {
            w_rank: 1.0,
            syn_focal: true,
            fr_focal: true,
        }
    }
}

/// Per-group means of the objective's terms (0 for empty or disabled groups).
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct LossComponents {
    pub focal_fer: f64,
    pub focal_fr: f64,
    pub focal_syn: f64,
    pub rank: f64,
}

/// Multiplier applied to every term (and its gradient) of each group.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct GroupScales {
    pub fer: f64,
    pub fr: f64,
    pub syn: f64,
    pub rank: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TotalLoss {
    /// Total value; `grads` lists every term's scaled gradients in the
    /// order fer, fr, syn, rank (three vectors per ranking term).
    pub bundle: LossBundle,
    pub components: LossComponents,
    pub scales: GroupScales,
}

pub fn total_loss(
    fer: &[LossBundle],
    fr: &[LossBundle],
    syn: &[LossBundle],
    rank: &[LossBundle],
    cfg: &ObjectiveConfig,
) -> Result<TotalLoss> {
    if fer.is_empty() {
        return Err(Error::invalid("objective needs at least one labeled term"));
    }
    if !(cfg.w_rank >= 0.0) {
        return Err(Error::invalid("w_rank must be >= 0"));
    }
    let mean = |terms: &[LossBundle]| {
        if terms.is_empty() {
            0.0
        } else {
            terms.iter().map(|t| t.value).sum::<f64>() / terms.len() as f64
        }
    };
    let inv = |n: usize| if n == 0 { 0.0 } else { 1.0 / n as f64 };
    let scales = GroupScales {
        fer: inv(fer.len()),
        fr: if cfg.fr_focal { inv(fr.len()) } else { 0.0 },
        syn: if cfg.syn_focal { inv(syn.len()) } else { 0.0 },
        rank: cfg.w_rank * inv(rank.len()),
    };
    let components = LossComponents {
        focal_fer: mean(fer),
        focal_fr: if cfg.fr_focal { mean(fr) } else { 0.0 },
        focal_syn: if cfg.syn_focal { mean(syn) } else { 0.0 },
        rank: mean(rank),
    };
    let value = components.focal_fer + components.focal_fr + components.focal_syn + cfg.w_rank * components.rank;
    let mut grads = Vec::new();
    for (terms, s) in [(fer, scales.fer), (fr, scales.fr), (syn, scales.syn), (rank, scales.rank)] {
        for t in terms {
            grads.extend(t.grads.iter().map(|g| g.iter().map(|x| x * s).collect()));
        }
    }
    Ok(TotalLoss {
        bundle: LossBundle { value, grads },
        components,
        scales,
    })
}
