//! Measure how vision models treat the local neighborhood of an image.
//!
//! A *frame* is a set of `k` perturbation directions at one image. Pushing
//! the frame through the first layers of a model by finite differences gives
//! a neural frame, one `n_i × k` matrix per tapped layer, whose stable rank
//! and frame CKA summarize how the model stretches or collapses those
//! directions.

pub mod analysis;
pub mod error;
pub mod frame;
pub mod image_ops;
pub mod linalg;
pub mod report;
pub mod runtime;
pub mod seed;

pub use error::{Error, Result};
