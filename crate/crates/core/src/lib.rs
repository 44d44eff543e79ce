//! Similarity-based clustering and co-clustering matrix completion for
//! recommender systems where a few users and items are information-rich and
//! the rest are information-sparse.
//!
//! Modules, bottom up:
//!
//! * [`ratings`]: sparse rating matrices, loaders, quantization, train/test
//!   masks and flip noise.
//! * [`synth`]: block-model instances, the observation model and the
//!   recovery thresholds.
//! * [`similarity`]: co-rating, similarity and normalized similarity.
//! * [`algorithms`]: UCR, ICR, CoR, their hybrid variants and a top-k
//!   baseline.
//! * [`eval`]: metrics, the hide-and-predict protocol and phase sweeps.

pub mod algorithms;
pub mod error;
pub mod eval;
pub mod ratings;
pub mod seed;
pub mod similarity;
pub mod synth;

pub use error::{Error, Result};
