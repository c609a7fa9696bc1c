//! Two-layer rectifier network with a softmax head and hand-derived
//! backpropagation.
//!
//! Parameters live in one flat vector laid out as `W1 (D x Dh)`, `b1`,
//! `W2 (Dh x C)`, `b2`, all row-major; this is also the order of the weights
//! in a model file.

use crate::dataio::{ImageTensor, ModelFile};
use crate::error::{Error, Result};
use crate::numcore::{softmax, ProbVector, SeededRng};
use crate::par::{map_indexed, sum_vectors, Execution};

/// Anything that maps an image to a class distribution.
pub trait Classifier: Sync {
    fn class_count(&self) -> usize;
    fn predict(&self, image: &ImageTensor) -> Result<ProbVector>;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ModelDims {
    pub input: usize,
    pub hidden: usize,
    pub classes: usize,
}

impl ModelDims {
    pub fn param_count(&self) -> usize {
        self.input * self.hidden + self.hidden + self.hidden * self.classes + self.classes
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MlpModel {
    dims: ModelDims,
    params: Vec<f64>,
}

/// Forward pass of one sample.
#[derive(Debug, Clone, PartialEq)]
pub struct Activation {
    /// Post-rectifier hidden units.
    pub hidden: Vec<f64>,
    pub logits: Vec<f64>,
    pub probs: ProbVector,
}

impl MlpModel {
    pub fn zeros(dims: ModelDims) -> Result<Self> {
        if dims.input == 0 || dims.hidden == 0 || dims.classes == 0 {
            return Err(Error::invalid(format!("model dims must be positive: {dims:?}")));
        }
        Ok(Self {
            dims,
            params: vec![0.0; dims.param_count()],
        })
    }

    /// Glorot-uniform weights, zero biases.
    pub fn init(dims: ModelDims, rng: &mut SeededRng) -> Result<Self> {
        let mut m = Self::zeros(dims)?;
        let (w1, _, w2, _) = m.offsets();
        let s1 = (6.0 / (dims.input + dims.hidden) as f64).sqrt();
        let s2 = (6.0 / (dims.hidden + dims.classes) as f64).sqrt();
        for i in w1.0..w1.1 {
            m.params[i] = s1 * (2.0 * rng.next_f64() - 1.0);
        }
        for i in w2.0..w2.1 {
            m.params[i] = s2 * (2.0 * rng.next_f64() - 1.0);
        }
        Ok(m)
    }

    pub fn from_params(dims: ModelDims, params: Vec<f64>) -> Result<Self> {
        let m = Self::zeros(dims)?;
        if params.len() != m.params.len() {
            return Err(Error::shape(format!(
                "{dims:?} needs {} parameters, got {}",
                m.params.len(),
                params.len()
            )));
        }
        if params.iter().any(|p| !p.is_finite()) {
            return Err(Error::Numeric("non-finite model parameter".into()));
        }
        Ok(Self { dims, params })
    }

    pub fn dims(&self) -> ModelDims {
        self.dims
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [f64] {
        &mut self.params
    }

    /// `[start, end)` ranges of W1, b1, W2, b2.
    fn offsets(&self) -> ((usize, usize), (usize, usize), (usize, usize), (usize, usize)) {
        let ModelDims { input, hidden, classes } = self.dims;
        let a = input * hidden;
        let b = a + hidden;
        let c = b + hidden * classes;
        let d = c + classes;
        ((0, a), (a, b), (b, c), (c, d))
    }

    pub fn forward_one(&self, x: &[f64]) -> Result<Activation> {
        let ModelDims { input, hidden, classes } = self.dims;
        if x.len() != input {
            return Err(Error::shape(format!("input has {} values, model expects {input}", x.len())));
        }
        let (w1, b1, w2, b2) = self.offsets();
        let w1 = &self.params[w1.0..w1.1];
        let w2 = &self.params[w2.0..w2.1];
        let mut h = self.params[b1.0..b1.1].to_vec();
        for (i, &xi) in x.iter().enumerate() {
            if xi == 0.0 {
                continue;
            }
            for (hj, &w) in h.iter_mut().zip(&w1[i * hidden..(i + 1) * hidden]) {
                *hj += xi * w;
            }
        }
        for v in &mut h {
            *v = v.max(0.0);
        }
        let mut logits = self.params[b2.0..b2.1].to_vec();
        for (j, &hj) in h.iter().enumerate() {
            if hj == 0.0 {
                continue;
            }
            for (z, &w) in logits.iter_mut().zip(&w2[j * classes..(j + 1) * classes]) {
                *z += hj * w;
            }
        }
        let probs = softmax(&logits)
            .map_err(|_| Error::Numeric("non-finite logits".into()))?;
        Ok(Activation { hidden: h, logits, probs })
    }

    pub fn forward(&self, batch: &[&[f64]], exec: Execution) -> Result<Vec<Activation>> {
        map_indexed(exec, batch.len(), |i| self.forward_one(batch[i]))
            .into_iter()
            .collect()
    }

    pub fn forward_images(&self, images: &[&ImageTensor], exec: Execution) -> Result<Vec<Activation>> {
        let xs: Vec<&[f64]> = images.iter().map(|im| im.pixels()).collect();
        self.forward(&xs, exec)
    }

    /// Gradient of `Σ_i <upstream_i, logits_i>` with respect to the parameters.
    pub fn backward(&self, batch: &[&[f64]], upstream: &[Vec<f64>], exec: Execution) -> Result<Vec<f64>> {
        let ModelDims { input, hidden, classes } = self.dims;
        if batch.len() != upstream.len() {
            return Err(Error::shape(format!("{} inputs vs {} upstream gradients", batch.len(), upstream.len())));
        }
        for (x, g) in batch.iter().zip(upstream) {
            if x.len() != input || g.len() != classes {
                return Err(Error::shape("backward input or upstream gradient has wrong length"));
            }
        }
        let (w1r, b1r, w2r, b2r) = self.offsets();
        let w2 = &self.params[w2r.0..w2r.1];
        let n_params = self.params.len();
        Ok(sum_vectors(exec, batch.len(), n_params, |i, acc| {
            let g = &upstream[i];
            if g.iter().all(|v| *v == 0.0) {
                return;
            }
            let x = batch[i];
            let act = self.forward_one(x).expect("validated shapes");
            for (c, &gc) in g.iter().enumerate() {
                acc[b2r.0 + c] += gc;
            }
            let mut g_hidden = vec![0.0; hidden];
            for j in 0..hidden {
                let hj = act.hidden[j];
                let row = &w2[j * classes..(j + 1) * classes];
                if hj > 0.0 {
                    let grad_row = &mut acc[w2r.0 + j * classes..w2r.0 + (j + 1) * classes];
                    for (a, &gc) in grad_row.iter_mut().zip(g) {
                        *a += hj * gc;
                    }
                    g_hidden[j] = row.iter().zip(g).map(|(w, gc)| w * gc).sum();
                }
            }
            for (j, &gh) in g_hidden.iter().enumerate() {
                acc[b1r.0 + j] += gh;
            }
            for (k, &xk) in x.iter().enumerate() {
                if xk == 0.0 {
                    continue;
                }
                let grad_row = &mut acc[w1r.0 + k * hidden..w1r.0 + (k + 1) * hidden];
                for (a, &gh) in grad_row.iter_mut().zip(&g_hidden) {
                    *a += xk * gh;
                }
            }
        }))
    }

    pub fn to_model_file(&self) -> ModelFile {
        let d = self.dims;
        ModelFile {
            dims: vec![d.input as u32, d.hidden as u32, d.classes as u32],
            weights: self.params.iter().map(|&p| p as f32).collect(),
        }
    }

    pub fn from_model_file(file: &ModelFile) -> Result<Self> {
        let [input, hidden, classes] = file.dims[..] else {
            return Err(Error::shape(format!(
                "expected a two-layer model (3 dims), file declares {:?}",
                file.dims
            )));
        };
        let dims = ModelDims {
            input: input as usize,
            hidden: hidden as usize,
            classes: classes as usize,
        };
        Self::from_params(dims, file.weights.iter().map(|&w| w as f64).collect())
    }
}

impl Classifier for MlpModel {
    fn class_count(&self) -> usize {
        self.dims.classes
    }

    fn predict(&self, image: &ImageTensor) -> Result<ProbVector> {
        Ok(self.forward_one(image.pixels())?.probs)
    }
}
