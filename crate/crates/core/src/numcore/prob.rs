use std::cmp::Ordering;

use crate::error::{Error, Result};

/// Tolerance on the unit-sum invariant of a [`ProbVector`].
const SUM_TOL: f64 = 1e-9;

/// A probability distribution over classes.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbVector(Vec<f64>);

impl ProbVector {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        Self::with_tolerance(values, SUM_TOL)
    }

    /// As [`ProbVector::new`] with a caller-chosen sum tolerance, for values
    /// read back from reduced-precision text.
    pub fn with_tolerance(values: Vec<f64>, tol: f64) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::invalid("empty probability vector"));
        }
        if let Some(i) = values
            .iter()
            .position(|v| !v.is_finite() || *v < 0.0 || *v > 1.0)
        {
            return Err(Error::invalid(format!(
                "probability {} at index {i} outside [0,1]",
                values[i]
            )));
        }
        let sum: f64 = values.iter().sum();
        if (sum - 1.0).abs() > tol {
            return Err(Error::invalid(format!("probabilities sum to {sum}, not 1")));
        }
        Ok(Self(values))
    }

    pub fn uniform(classes: usize) -> Self {
        Self(vec![1.0 / classes as f64; classes])
    }

    pub fn one_hot(classes: usize, index: usize) -> Self {
        let mut v = vec![0.0; classes];
        v[index] = 1.0;
        Self(v)
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Top-1 confidence.
    pub fn confidence(&self) -> f64 {
        self.0.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    /// Predicted class, lowest index on ties.
    pub fn predicted(&self) -> usize {
        argmax_tiebreak(&self.0).expect("ProbVector is never empty")
    }
}

impl std::ops::Index<usize> for ProbVector {
    type Output = f64;
    fn index(&self, i: usize) -> &f64 {
        &self.0[i]
    }
}

/// Numerically stable softmax (max-subtracted).
pub fn softmax(logits: &[f64]) -> Result<ProbVector> {
    if logits.is_empty() {
        return Err(Error::invalid("softmax of empty vector"));
    }
    if logits.iter().any(|v| !v.is_finite()) {
        return Err(Error::invalid("softmax input is not finite"));
    }
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut out: Vec<f64> = logits.iter().map(|&z| (z - max).exp()).collect();
    let sum: f64 = out.iter().sum();
    for v in &mut out {
        *v /= sum;
    }
    Ok(ProbVector(out))
}

/// `ln softmax(logits)`, exact in the tails where softmax underflows.
pub fn log_softmax(logits: &[f64]) -> Result<Vec<f64>> {
    if logits.is_empty() {
        return Err(Error::invalid("log_softmax of empty vector"));
    }
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let lse = max + logits.iter().map(|&z| (z - max).exp()).sum::<f64>().ln();
    Ok(logits.iter().map(|&z| z - lse).collect())
}

/// Vector-Jacobian product through softmax: given `g = dL/dp`, returns
/// `dL/dz_j = p_j (g_j - Σ_c g_c p_c)`.
pub fn softmax_jacobian_vjp(probs: &[f64], upstream: &[f64]) -> Vec<f64> {
    let dot: f64 = probs.iter().zip(upstream).map(|(p, g)| p * g).sum();
    probs
        .iter()
        .zip(upstream)
        .map(|(p, g)| p * (g - dot))
        .collect()
}

/// Index of the maximum value, lowest index on ties.
pub fn argmax_tiebreak(v: &[f64]) -> Result<usize> {
    if v.is_empty() {
        return Err(Error::invalid("argmax of empty vector"));
    }
    let mut best = 0;
    for (i, &x) in v.iter().enumerate().skip(1) {
        if x > v[best] {
            best = i;
        }
    }
    Ok(best)
}

/// The `k` largest entries as `(index, value)`, descending, ties by ascending index.
pub fn top_k(v: &[f64], k: usize) -> Result<Vec<(usize, f64)>> {
    if k == 0 || k > v.len() {
        return Err(Error::invalid(format!(
            "top_k: k={k} outside 1..={}",
            v.len()
        )));
    }
    let mut idx: Vec<usize> = (0..v.len()).collect();
    idx.sort_by(|&a, &b| {
        v[b].partial_cmp(&v[a])
            .unwrap_or(Ordering::Equal)
            .then(a.cmp(&b))
    });
    Ok(idx.into_iter().take(k).map(|i| (i, v[i])).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn softmax_examples() {
        let p = softmax(&[0.0, 0.0, 0.0]).unwrap();
        for &x in p.as_slice() {
            assert!((x - 1.0 / 3.0).abs() < 1e-15);
        }
        let p = softmax(&[2f64.ln(), 0.0]).unwrap();
        assert!((p[0] - 2.0 / 3.0).abs() < 1e-15);
        assert!((p[1] - 1.0 / 3.0).abs() < 1e-15);
        let p = softmax(&[1000.0, 0.0]).unwrap();
        assert!((p[0] - 1.0).abs() < 1e-15 && p[1] < 1e-300);
        assert!(softmax(&[]).is_err());
    }

    #[test]
    fn argmax_examples() {
        assert_eq!(argmax_tiebreak(&[0.2, 0.5, 0.3]).unwrap(), 1);
        assert_eq!(argmax_tiebreak(&[0.5, 0.5]).unwrap(), 0);
        assert_eq!(argmax_tiebreak(&[0.1, 0.2, 0.7]).unwrap(), 2);
        assert!(argmax_tiebreak(&[]).is_err());
    }

    #[test]
    fn top_k_examples() {
        assert_eq!(top_k(&[0.1, 0.6, 0.3], 2).unwrap(), vec![(1, 0.6), (2, 0.3)]);
        assert_eq!(top_k(&[0.4, 0.4, 0.2], 2).unwrap(), vec![(0, 0.4), (1, 0.4)]);
        assert_eq!(top_k(&[0.25; 4], 1).unwrap(), vec![(0, 0.25)]);
        assert!(top_k(&[0.5, 0.5], 0).is_err());
        assert!(top_k(&[0.5, 0.5], 3).is_err());
    }

    #[test]
    fn prob_vector_validation() {
        assert!(ProbVector::new(vec![0.5, 0.4]).is_err());
        assert!(ProbVector::new(vec![1.5, -0.5]).is_err());
        assert!(ProbVector::new(vec![]).is_err());
        assert!(ProbVector::new(vec![0.25, 0.75]).is_ok());
    }

    proptest! {
        #[test]
        fn shift_invariance(v in prop::collection::vec(-50.0f64..50.0, 1..12), c in -100.0f64..100.0) {
            let a = softmax(&v).unwrap();
            let shifted: Vec<f64> = v.iter().map(|x| x + c).collect();
            let b = softmax(&shifted).unwrap();
            for (x, y) in a.as_slice().iter().zip(b.as_slice()) {
                prop_assert!((x - y).abs() < 1e-12);
            }
        }

        #[test]
        fn sums_to_one(v in prop::collection::vec(-700.0f64..700.0, 1..20)) {
            let p = softmax(&v).unwrap();
            prop_assert!((p.as_slice().iter().sum::<f64>() - 1.0).abs() < 1e-9);
        }

        #[test]
        fn argmax_preserved(v in prop::collection::vec(-30.0f64..30.0, 1..12)) {
            let p = softmax(&v).unwrap();
            prop_assert_eq!(argmax_tiebreak(p.as_slice()).unwrap(), argmax_tiebreak(&v).unwrap());
        }

        #[test]
        fn top_k_sorted(v in prop::collection::vec(0.0f64..1.0, 1..12), k in 1usize..12) {
            let k = k.min(v.len());
            let t = top_k(&v, k).unwrap();
            prop_assert_eq!(t.len(), k);
            for w in t.windows(2) {
                prop_assert!(w[0].1 > w[1].1 || (w[0].1 == w[1].1 && w[0].0 < w[1].0));
            }
        }
    }
}
