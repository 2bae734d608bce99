//! Canonical (degenerate) U- and V-statistics over weakly dependent samples.
//!
//! Kernels are handled through their expansion in a uniformly bounded
//! orthonormal basis containing the constant function. A V-statistic then
//! collapses to a coefficient-weighted sum of products of normalized partial
//! sums `S_n(i)`, which costs `O(n * #indices)` instead of `O(n^m)`.
//! U-statistics follow from the same partial sums after removing diagonal
//! index sets by inclusion-exclusion over set partitions.
//!
//! The crate also evaluates the exponential tail bounds available for these
//! statistics under φ-mixing, with every constant logged in a trace, and
//! ships a reproducible Monte Carlo harness that checks empirical tails
//! against those envelopes.

// Parameter checks are written as `!(x > 0.0)` so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod basis;
pub mod bounds;
mod error;
pub mod kernels;
pub mod mc;
pub mod measure;
pub mod mixing;
pub mod numeric;
pub mod rng;
pub mod stats;
pub mod tensor;

pub use basis::{OrthonormalBasis, OrthonormalityReport};
pub use bounds::{BoundCertificate, Condition, Envelope};
pub use error::{Error, Result};
pub use kernels::Kernel;
pub use mc::{TailCurve, TailKind};
pub use measure::{Measure, Quadrature};
pub use mixing::{MarkovChain, MixingProcess, PhiAggregates, PhiProfile};
pub use stats::{Sample, StatKind};
pub use tensor::CoefficientTensor;

/// Library version embedded in every emitted artifact.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
