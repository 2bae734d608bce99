//! Bound certificates: every constant of a tail bound together with the
//! formula that produced it.

use serde::{Deserialize, Serialize};

use super::constants::{b_of_f, check_epsilon, moment_constants, Decay};
use super::tails::{self, INTEGER_N_CAP};
use super::{Condition, Envelope, TraceEntry};
use crate::error::{Error, Result};
use crate::mixing::PhiAggregates;
use crate::tensor::CoefficientTensor;

/// Parameters that only some certificate kinds carry.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Scope {
    /// Bound on `P(|V_n| > x)` (and on `P(|U_n| > x)` where it applies).
    Series { coefficient_scale: f64, moment_cap: usize },
    /// Bound on `P(|Σ Y_j - n E Y| > t)` for `|Y| ≤ C`.
    PartialSum { n: usize, denominator: f64 },
    /// Bound on `P(U - EU ≥ t)` for a kernel with values in `[a, b]`.
    Bounded { n: usize, a: f64, b: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundCertificate {
    pub condition: Condition,
    pub m: usize,
    pub basis_bound: f64,
    pub bf: Option<f64>,
    pub c1: f64,
    pub c2: Option<f64>,
    pub c_tilde: Option<f64>,
    pub epsilon: Option<f64>,
    pub c_norm: Option<f64>,
    pub phi_aggregates: Option<PhiAggregates>,
    pub phi_eff: Option<f64>,
    pub x0: f64,
    pub decay: Option<Decay>,
    pub scope: Scope,
    pub trace: Vec<TraceEntry>,
}

impl BoundCertificate {
    /// Certificate for `P(|V_n| > x)` under summable coefficients and
    /// Gaussian-type mixing decay. `moment_cap` bounds the moment orders the
    /// integer-order variant may use; the decay envelope of `c2` covers every
    /// depth `d ≤ 2 m moment_cap`.
    pub fn condition_a(
        tensor: &CoefficientTensor,
        basis_bound: f64,
        aggregates: &PhiAggregates,
        decay: Option<Decay>,
        moment_cap: usize,
    ) -> Result<Self> {
        let m = tensor.order();
        let bf = b_of_f(tensor, basis_bound, Condition::A, None)?;
        let coefficient_sum = tensor.norm_sum(1.0);
        let moment_cap = moment_cap.clamp(1, INTEGER_N_CAP);
        let constants = moment_constants(aggregates, decay, 2 * m * moment_cap)?;
        let mut trace = vec![
            TraceEntry::new("C", basis_bound, "uniform bound sup_{i,t} |e_i(t)|"),
            TraceEntry::new("sum_abs_f", coefficient_sum, "Σ|f_i|"),
            TraceEntry::new("B(f)", bf, "(C^m Σ|f_i|)^(2/m)"),
        ];
        trace.extend(constants.trace);
        let c2 = 1.0 / (std::f64::consts::E * constants.c_tilde);
        trace.push(TraceEntry::new(
            "C2",
            c2,
            "1/(e·c̃): minimum of εm·ln(c̃B(f)mε) over ε, attained at ε = 1/(c̃B(f)me)",
        ));
        trace.push(TraceEntry::new("C1", 1.0, "moment method needs no prefactor"));
        trace.push(TraceEntry::new("x0", 0.0, "bound valid for all x ≥ 0"));
        Ok(BoundCertificate {
            condition: Condition::A,
            m,
            basis_bound,
            bf: Some(bf),
            c1: 1.0,
            c2: Some(c2),
            c_tilde: Some(constants.c_tilde),
            epsilon: None,
            c_norm: Some(coefficient_sum),
            phi_aggregates: Some(*aggregates),
            phi_eff: Some(aggregates.phi_eff()),
            x0: 0.0,
            decay,
            scope: Scope::Series {
                coefficient_scale: basis_bound.powi(m as i32) * coefficient_sum,
                moment_cap,
            },
            trace,
        })
    }

    /// Certificate for `P(|V_n| > x)` under `(1-ε)`-summable coefficients and
    /// summable φ, using `φ_eff = 1 + Σφ(k)`.
    pub fn condition_b(
        tensor: &CoefficientTensor,
        basis_bound: f64,
        epsilon: f64,
        aggregates: &PhiAggregates,
    ) -> Result<Self> {
        let eps = check_epsilon(Some(epsilon))?;
        let m = tensor.order();
        let bf = b_of_f(tensor, basis_bound, Condition::B, Some(eps))?;
        let c_norm = tensor.norm_sum(1.0 - eps);
        let phi_eff = aggregates.phi_eff();
        if !phi_eff.is_finite() {
            return Err(Error::InvalidParameter("Σφ diverges".into()));
        }
        let gamma = 2.0 * eps / (m as f64 * (1.0 - eps));
        let e = std::f64::consts::E;
        let c2 = 1.0 / (16.0 * e * phi_eff);
        let factor = if gamma >= 1.0 {
            2.0
        } else {
            tails::majorant_power(gamma) as f64 + 2.0
        };
        let c1 = m as f64 * tails::e_to_inv_e() * factor;
        let x0 = tails::majorant_threshold(m, eps, c_norm, basis_bound, phi_eff);
        let trace = vec![
            TraceEntry::new("C", basis_bound, "uniform bound sup_{i,t} |e_i(t)|"),
            TraceEntry::new("epsilon", eps, "coefficient summability exponent"),
            TraceEntry::new("c", c_norm, "Σ|f_i|^(1-ε)"),
            TraceEntry::new("B(f)", bf, "C²·c^(2/(m(1-ε)))"),
            TraceEntry::new(
                "phi_eff",
                phi_eff,
                format!(
                    "φ(0) + Σ_{{k≥1}} φ(k) with φ(0) = 1; explicit terms {} plus certified tail {:e}",
                    aggregates.explicit_terms, aggregates.tail_phi
                ),
            ),
            TraceEntry::new("gamma", gamma, "2ε/(m(1-ε))"),
            TraceEntry::new("C2", c2, "1/(16e·φ_eff), so that K(x) = C2·x^(2/m)/B(f)"),
            TraceEntry::new(
                "C1",
                c1,
                "reconstructed: m·e^(1/e)·(l+2) with l = ⌊1/γ - 1⌋ + 1 (2m·e^(1/e) when γ ≥ 1); \
                 valid for x ≥ x0",
            ),
            TraceEntry::new("x0", x0, "x^(2/m) = ε^(-1)·8m(1-ε)e·C²·φ_eff·c^(2/(m(1-ε)))"),
        ];
        Ok(BoundCertificate {
            condition: Condition::B,
            m,
            basis_bound,
            bf: Some(bf),
            c1,
            c2: Some(c2),
            c_tilde: None,
            epsilon: Some(eps),
            c_norm: Some(c_norm),
            phi_aggregates: Some(*aggregates),
            phi_eff: Some(phi_eff),
            x0,
            decay: None,
            scope: Scope::Series {
                coefficient_scale: basis_bound.powi(m as i32) * tensor.norm_sum(1.0),
                moment_cap: INTEGER_N_CAP,
            },
            trace,
        })
    }

    /// Certificate for centered partial sums of `n` terms bounded by `C`;
    /// `phi[k-1] = φ(k)` for `k = 1..n-1`.
    pub fn dedecker(n: usize, basis_bound: f64, phi: &[f64]) -> Result<Self> {
        let denominator = tails::dedecker_denominator(n, phi)?;
        let trace = vec![
            TraceEntry::new("C", basis_bound, "almost-sure bound on each summand"),
            TraceEntry::new(
                "D_n",
                denominator,
                "n·φ(0) + Σ_{k=1}^{n-1} (n-k)·φ(k) with φ(0) = 1",
            ),
            TraceEntry::new("C1", tails::e_to_inv_e(), "e^(1/e)"),
            TraceEntry::new("C2", 1.0 / (16.0 * std::f64::consts::E), "1/(16e), exponent t²/(C²·D_n)"),
        ];
        Ok(BoundCertificate {
            condition: Condition::Dedecker,
            m: 1,
            basis_bound,
            bf: None,
            c1: tails::e_to_inv_e(),
            c2: Some(1.0 / (16.0 * std::f64::consts::E)),
            c_tilde: None,
            epsilon: None,
            c_norm: None,
            phi_aggregates: None,
            phi_eff: Some(denominator / n as f64),
            x0: 0.0,
            decay: None,
            scope: Scope::PartialSum { n, denominator },
            trace,
        })
    }

    /// Certificate for `P(U - EU ≥ t)` with iid data and a kernel in `[a, b]`.
    pub fn hoeffding_1963(n: usize, m: usize, a: f64, b: f64) -> Result<Self> {
        tails::hoeffding_1963_bound(0.0, n, m, a, b)?;
        let k = (n / m) as f64;
        let c2 = 2.0 * k / ((b - a) * (b - a));
        let trace = vec![
            TraceEntry::new("k", k, "⌊n/m⌋ disjoint blocks"),
            TraceEntry::new("C2", c2, "2k/(b-a)², exponent in t²"),
            TraceEntry::new("C1", 1.0, "no prefactor"),
        ];
        Ok(BoundCertificate {
            condition: Condition::Hoeffding1963,
            m,
            basis_bound: 0.0,
            bf: None,
            c1: 1.0,
            c2: Some(c2),
            c_tilde: None,
            epsilon: None,
            c_norm: None,
            phi_aggregates: None,
            phi_eff: None,
            x0: 0.0,
            decay: None,
            scope: Scope::Bounded { n, a, b },
            trace,
        })
    }

    /// The tail bound at `x`, capped at 1.
    pub fn bound(&self, x: f64) -> f64 {
        match (&self.condition, &self.scope) {
            (Condition::A, _) => tails::tail_bound_a(
                x,
                self.m,
                self.bf.expect("A certificates carry B(f)"),
                self.c_tilde.expect("A certificates carry c̃"),
            ),
            (Condition::B, _) => tails::tail_bound_b(
                x,
                self.m,
                self.epsilon.expect("B certificates carry ε"),
                self.c_norm.expect("B certificates carry c"),
                self.basis_bound,
                self.phi_eff.expect("B certificates carry φ_eff"),
            ),
            (Condition::Dedecker, Scope::PartialSum { denominator, .. }) => {
                if x <= 0.0 {
                    1.0
                } else {
                    tails::dedecker_bound(x, self.basis_bound, *denominator).unwrap_or(1.0)
                }
            }
            (Condition::Hoeffding1963, Scope::Bounded { n, a, b }) => {
                tails::hoeffding_1963_bound(x.max(0.0), *n, self.m, *a, *b).unwrap_or(1.0)
            }
            _ => 1.0,
        }
    }

    /// Integer-moment-order variant under A; `None` for other conditions.
    pub fn bound_integer_moment(&self, x: f64) -> Option<f64> {
        match (&self.condition, &self.scope) {
            (Condition::A, Scope::Series { coefficient_scale, moment_cap }) => Some(
                tails::tail_bound_a_integer(
                    x,
                    self.m,
                    *coefficient_scale,
                    self.c_tilde?,
                    *moment_cap,
                )
                .bound,
            ),
            _ => None,
        }
    }

    /// Closed-form majorant under B inside its regime.
    pub fn bound_majorant(&self, x: f64) -> Option<f64> {
        if self.condition != Condition::B {
            return None;
        }
        tails::tail_bound_b_majorant(
            x,
            self.m,
            self.epsilon?,
            self.c_norm?,
            self.basis_bound,
            self.phi_eff?,
        )
    }

    /// `x^{2/m} / B(f)` for the series conditions.
    pub fn exponent(&self, x: f64) -> Option<f64> {
        self.bf.map(|bf| tails::exponent(x, self.m, bf))
    }

    pub fn trace_value(&self, name: &str) -> Option<f64> {
        self.trace.iter().find(|e| e.name == name).map(|e| e.value)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("certificate serializes")
    }
}

impl Envelope for BoundCertificate {
    fn bound(&self, x: f64) -> f64 {
        BoundCertificate::bound(self, x)
    }

    fn label(&self) -> String {
        format!("{:?}", self.condition)
    }
}
