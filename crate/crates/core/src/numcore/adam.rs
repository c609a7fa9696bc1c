use crate::error::{Error, Result};

pub const ADAM_BETA1: f64 = 0.9;
pub const ADAM_BETA2: f64 = 0.999;
pub const ADAM_EPSILON: f64 = 1e-8;

/// Bias-corrected Adam optimizer state over a flat parameter vector.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    pub step: u64,
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    first_moment: Vec<f64>,
    second_moment: Vec<f64>,
}

impl AdamState {
    pub fn new(n_params: usize, lr: f64) -> Result<Self> {
        Self::with_betas(n_params, lr, ADAM_BETA1, ADAM_BETA2, ADAM_EPSILON)
    }

    pub fn with_betas(n_params: usize, lr: f64, beta1: f64, beta2: f64, epsilon: f64) -> Result<Self> {
        if !(lr > 0.0) || !(epsilon > 0.0) {
            return Err(Error::invalid("Adam lr and epsilon must be positive"));
        }
        if !(0.0..1.0).contains(&beta1) || beta1 == 0.0 || !(0.0..1.0).contains(&beta2) || beta2 == 0.0 {
            return Err(Error::invalid("Adam betas must lie in (0,1)"));
        }
        Ok(Self {
            step: 0,
            lr,
            beta1,
            beta2,
            epsilon,
            first_moment: vec![0.0; n_params],
            second_moment: vec![0.0; n_params],
        })
    }

    pub fn first_moment(&self) -> &[f64] {
        &self.first_moment
    }

    pub fn second_moment(&self) -> &[f64] {
        &self.second_moment
    }

    /// One Adam update of `params` in place.
    pub fn step(&mut self, params: &mut [f64], grads: &[f64]) -> Result<()> {
        let n = self.first_moment.len();
        if params.len() != n || grads.len() != n {
            return Err(Error::shape(format!(
                "adam state holds {n} parameters; got params {} and grads {}",
                params.len(),
                grads.len()
            )));
        }
        self.step += 1;
        let t = self.step as i32;
        let c1 = 1.0 - self.beta1.powi(t);
        let c2 = 1.0 - self.beta2.powi(t);
        for i in 0..n {
            let g = grads[i];
            let m = self.beta1 * self.first_moment[i] + (1.0 - self.beta1) * g;
            let v = self.beta2 * self.second_moment[i] + (1.0 - self.beta2) * g * g;
            self.first_moment[i] = m;
            self.second_moment[i] = v;
            let m_hat = m / c1;
            let v_hat = v / c2;
            params[i] -= self.lr * m_hat / (v_hat.sqrt() + self.epsilon);
        }
        Ok(())
    }
}
