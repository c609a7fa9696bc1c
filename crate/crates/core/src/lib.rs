//! Training and evaluation pipeline for confidence-ranked facial expression
//! classification at desk scale.
//!
//! The crate covers the full loop: a procedural toy face generator, weak
//! augmentations and half-face blending, class-wise dynamic pseudo-labeling
//! of an unlabeled split, focal + margin ranking losses with analytic
//! gradients, a two-layer softmax classifier trained with Adam, and the
//! calibration / compound Top-2 evaluation suite.

pub mod augment;
pub mod calibration;
pub mod cli;
pub mod dataio;
pub mod error;
pub mod losses;
pub mod model;
pub mod numcore;
pub mod par;
pub mod pseudolabel;
pub mod trainer;

pub use error::{Error, Result};
