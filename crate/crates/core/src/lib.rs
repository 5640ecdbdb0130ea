//! Volume asymptotics of norm balls in semisimple groups and counting of
//! lattice orbits.
//!
//! The crate is organized bottom-up:
//!
//! - [`matgroup`]: exact and real matrices, norms, distance functions.
//! - [`lattice`]: exact enumeration of Γ_T and orbit statistics.
//! - [`rootsys`]: root and weight data, growth exponents, balancedness.
//! - [`volume`]: Haar volumes in Cartan coordinates, asymptotic constants,
//!   skew balls, limit ratios and the Riemannian exponents.
//! - [`density`]: limiting densities and orbit-integral predictions.
//! - [`audit`]: numeric auditors for the counting hypotheses.
//! - [`experiments`]: scenario configs, runners and manifests.

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod audit;
pub mod density;
pub mod error;
pub mod experiments;
pub mod lattice;
pub mod matgroup;
pub mod numeric;
pub mod rootsys;
pub mod volume;

pub use error::{Error, Result};
pub use matgroup::{DistanceFunction, ExactMatrix, NormSpec, RealMatrix};
pub use rootsys::GroupSpec;
