//! Exponential tail bounds for canonical statistics and their constants.

mod certificate;
mod constants;
mod tails;

use serde::{Deserialize, Serialize};

pub use certificate::{BoundCertificate, Scope};
pub use constants::{
    b_of_f, bell, gamma_ratio_sup, moment_constants, moment_bound, Decay, MomentConstants,
};
pub use tails::{
    dedecker_bound, dedecker_denominator, e_to_inv_e, exponent, hoeffding_1963_bound, k_of_x,
    majorant_power, majorant_threshold, stretched_exp_series, tail_bound_a, tail_bound_a_integer,
    tail_bound_b, tail_bound_b_majorant, u_statistic_regime_check, IntegerMomentBound,
    RegimeCheck, INTEGER_N_CAP,
};

/// Which inequality a certificate instantiates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Condition {
    /// Summable coefficients, `φ(k) ≤ c0 exp(-c1 k²)`.
    #[serde(alias = "A")]
    A,
    /// `(1-ε)`-summable coefficients, `Σ φ(k) < ∞`.
    #[serde(alias = "B")]
    B,
    /// Partial sums of bounded φ-mixing variables.
    Dedecker,
    /// Bounded kernels of iid samples.
    #[serde(rename = "hoeffding1963")]
    Hoeffding1963,
}

/// One constant of a certificate and the formula it came from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceEntry {
    pub name: String,
    pub value: f64,
    pub source: String,
}

impl TraceEntry {
    pub fn new(name: impl Into<String>, value: f64, source: impl Into<String>) -> Self {
        TraceEntry {
            name: name.into(),
            value,
            source: source.into(),
        }
    }
}

/// A theoretical upper bound on a tail probability as a function of the threshold.
pub trait Envelope: Send + Sync {
    fn bound(&self, x: f64) -> f64;
    fn label(&self) -> String;
}

/// `factor · inner`, used to build deliberately wrong envelopes.
pub struct ScaledEnvelope<'a> {
    pub inner: &'a dyn Envelope,
    pub factor: f64,
}

impl Envelope for ScaledEnvelope<'_> {
    fn bound(&self, x: f64) -> f64 {
        self.factor * self.inner.bound(x)
    }

    fn label(&self) -> String {
        format!("{} x {:e}", self.inner.label(), self.factor)
    }
}

/// A constant envelope.
pub struct ConstantEnvelope(pub f64);

impl Envelope for ConstantEnvelope {
    fn bound(&self, _x: f64) -> f64 {
        self.0
    }

    fn label(&self) -> String {
        format!("constant {}", self.0)
    }
}
