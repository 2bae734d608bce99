//! Stationary φ-mixing processes, their mixing coefficients, and checks of
//! the coefficient/mixing conditions used by the tail bounds.

mod markov;
mod phi;
mod process;

use serde::{Deserialize, Serialize};

pub use markov::{phi_brute_force, phi_markov_exact, MarkovChain};
pub use phi::{PhiAggregates, PhiKind, PhiProfile, PHI_NEGLIGIBLE};
pub use process::{AcStatus, DriverMap, MixingProcess};

use crate::bounds::Condition;
use crate::error::{Error, Result};
use crate::tensor::CoefficientTensor;

const MAX_DECAY_CHECK: usize = 1_000_000;

/// Parameters of a condition check.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "condition")]
pub enum ConditionParams {
    /// `φ(k) ≤ c0 · exp(-c1 k²)`.
    A { c0: f64, c1: f64 },
    /// `Σ |f|^{1-ε} < ∞` and `Σ φ(k) < ∞`.
    B { epsilon: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConditionReport {
    pub condition: Condition,
    pub passed: bool,
    /// `Σ|f|` under A, `Σ|f|^{1-ε}` under B.
    pub coefficient_sum: f64,
    /// First lag violating the decay envelope.
    pub witness: Option<usize>,
    /// Last lag examined by the decay check.
    pub checked_up_to: usize,
    pub aggregates: Option<PhiAggregates>,
    pub phi_kind: PhiKind,
    pub ac: AcStatus,
    pub message: String,
}

/// Checks condition A or B for a process and a finite tensor.
pub fn check_condition(
    process: &MixingProcess,
    tensor: &CoefficientTensor,
    params: ConditionParams,
) -> Result<ConditionReport> {
    let profile = process.phi_profile();
    match params {
        ConditionParams::A { c0, c1 } => {
            if !(c1 > 0.0 && c0 > 0.0 && c0.is_finite() && c1.is_finite()) {
                return Err(Error::InvalidParameter(format!(
                    "condition A needs c0 > 0 and c1 > 0, got c0={c0}, c1={c1}"
                )));
            }
            let coefficient_sum = tensor.norm_sum(1.0);
            let seq_chunk = 256;
            let mut witness = None;
            let mut checked = 0;
            'outer: while checked < MAX_DECAY_CHECK {
                let values = phi_window(profile, checked + 1, seq_chunk);
                for (offset, phi) in values.into_iter().enumerate() {
                    let k = checked + 1 + offset;
                    let envelope = c0 * (-c1 * (k as f64).powi(2)).exp();
                    if phi > envelope * (1.0 + 1e-12) {
                        witness = Some(k);
                        checked = k;
                        break 'outer;
                    }
                    if phi < PHI_NEGLIGIBLE && envelope < PHI_NEGLIGIBLE {
                        checked = k;
                        break 'outer;
                    }
                }
                checked += seq_chunk;
            }
            let passed = witness.is_none() && coefficient_sum.is_finite();
            let message = match witness {
                Some(k) => format!(
                    "φ({k}) = {:e} exceeds c0·exp(-c1·k²) = {:e}",
                    process.phi_upper(k),
                    c0 * (-c1 * (k as f64).powi(2)).exp()
                ),
                None => format!("φ(k) ≤ c0·exp(-c1·k²) for k = 1..{checked}; Σ|f| = {coefficient_sum}"),
            };
            Ok(ConditionReport {
                condition: Condition::A,
                passed,
                coefficient_sum,
                witness,
                checked_up_to: checked,
                aggregates: profile.aggregates().ok(),
                phi_kind: profile.kind(),
                ac: process.ac_status().clone(),
                message,
            })
        }
        ConditionParams::B { epsilon } => {
            if !(epsilon > 0.0 && epsilon < 1.0) {
                return Err(Error::InvalidParameter(format!("ε must lie in (0, 1), got {epsilon}")));
            }
            let coefficient_sum = tensor.norm_sum(1.0 - epsilon);
            let aggregates = profile.aggregates();
            let (passed, message, aggregates) = match aggregates {
                Ok(a) => (
                    coefficient_sum.is_finite() && a.sum_phi.is_finite(),
                    format!(
                        "c = Σ|f|^(1-ε) = {coefficient_sum}; Σφ = {} (tail ≤ {:e})",
                        a.sum_phi, a.tail_phi
                    ),
                    Some(a),
                ),
                Err(e) => (false, e.to_string(), None),
            };
            Ok(ConditionReport {
                condition: Condition::B,
                passed,
                coefficient_sum,
                witness: None,
                checked_up_to: aggregates.map_or(0, |a| a.explicit_terms),
                aggregates,
                phi_kind: profile.kind(),
                ac: process.ac_status().clone(),
                message,
            })
        }
    }
}

/// `φ(start), …, φ(start + len - 1)`.
fn phi_window(profile: &PhiProfile, start: usize, len: usize) -> Vec<f64> {
    match profile {
        PhiProfile::Markov { .. } => profile.sequence(start + len - 1).split_off(start - 1),
        _ => (start..start + len).map(|k| profile.phi(k)).collect(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measure::Measure;

    fn cos_tensor() -> CoefficientTensor {
        CoefficientTensor::from_entries(2, [(vec![1, 1], 1.0), (vec![2, 2], 1.0)]).unwrap()
    }

    #[test]
    fn window_process_satisfies_a() {
        let p = MixingProcess::m_dependent(2, DriverMap::SumMod, Measure::Uniform).unwrap();
        let r = check_condition(&p, &cos_tensor(), ConditionParams::A { c0: 4f64.exp(), c1: 1.0 }).unwrap();
        assert!(r.passed, "{r:?}");
        assert_eq!(r.coefficient_sum, 2.0);
        assert!(r.ac.satisfied);
    }

    #[test]
    fn geometric_chain_fails_a_with_witness() {
        let p = MixingProcess::markov(MarkovChain::two_state(0.5).unwrap());
        let r = check_condition(&p, &cos_tensor(), ConditionParams::A { c0: 1.0, c1: 1.0 }).unwrap();
        assert!(!r.passed);
        let k = r.witness.unwrap();
        assert!(p.phi_upper(k) > (-(k as f64).powi(2)).exp());
        // A generous c0 delays the witness but cannot remove it.
        let r = check_condition(&p, &cos_tensor(), ConditionParams::A { c0: 1e6, c1: 0.1 }).unwrap();
        assert!(!r.passed && r.witness.unwrap() > k);
    }

    #[test]
    fn geometric_chain_satisfies_b() {
        let p = MixingProcess::markov(MarkovChain::two_state(0.5).unwrap());
        let r = check_condition(&p, &cos_tensor(), ConditionParams::B { epsilon: 0.5 }).unwrap();
        assert!(r.passed);
        assert_eq!(r.coefficient_sum, 2.0);
        assert!((r.aggregates.unwrap().sum_phi - 0.5).abs() < 1e-12);
    }

    #[test]
    fn invalid_parameters() {
        let p = MixingProcess::iid(Measure::Uniform);
        assert!(check_condition(&p, &cos_tensor(), ConditionParams::A { c0: 1.0, c1: 0.0 }).is_err());
        assert!(check_condition(&p, &cos_tensor(), ConditionParams::B { epsilon: 1.0 }).is_err());
        let r = check_condition(&p, &cos_tensor(), ConditionParams::A { c0: 1.0, c1: 1.0 }).unwrap();
        assert!(r.passed);
    }
}
