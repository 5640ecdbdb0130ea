//! Exact and floating-point matrices, matrix norms and distance functions.

mod exact;
mod norm;
mod real;

pub use exact::{inverse_unimodular, mat_mul, ExactMatrix};
pub use norm::{distance, norm_eval, pnorm, DistanceFunction, NormSpec, RepresentationTag};
pub use real::RealMatrix;
