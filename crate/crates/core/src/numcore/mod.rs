//! Small deterministic numeric kernel: dense matrices, probability vectors
//! and softmax machinery, top-k selection, a seeded RNG, and Adam.

mod adam;
mod matrix;
mod prob;
mod rng;

pub use adam::{AdamState, ADAM_BETA1, ADAM_BETA2, ADAM_EPSILON};
pub use matrix::Matrix;
pub use prob::{argmax_tiebreak, log_softmax, softmax, softmax_jacobian_vjp, top_k, ProbVector};
pub use rng::SeededRng;
