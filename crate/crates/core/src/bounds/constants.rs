//! Kernel scale `B(f)` and the moment-bound constants `c2`, `c3`, `c̃`.

use serde::{Deserialize, Serialize};
use statrs::function::gamma::ln_gamma;

use super::{Condition, TraceEntry};
use crate::error::{Error, Result};
use crate::mixing::PhiAggregates;
use crate::tensor::CoefficientTensor;

/// `B(f)`: `(C^m Σ|f|)^{2/m}` under A, `C² (Σ|f|^{1-ε})^{2/(m(1-ε))}` under B.
pub fn b_of_f(
    tensor: &CoefficientTensor,
    basis_bound: f64,
    condition: Condition,
    epsilon: Option<f64>,
) -> Result<f64> {
    if tensor.is_empty() {
        return Err(Error::InvalidParameter("B(f) of the zero kernel is degenerate".into()));
    }
    let m = tensor.order() as f64;
    match condition {
        Condition::A => Ok((basis_bound.powf(m) * tensor.norm_sum(1.0)).powf(2.0 / m)),
        Condition::B => {
            let eps = check_epsilon(epsilon)?;
            let c = tensor.norm_sum(1.0 - eps);
            Ok(basis_bound.powi(2) * c.powf(2.0 / (m * (1.0 - eps))))
        }
        other => Err(Error::InvalidParameter(format!("B(f) is defined for A and B, not {other:?}"))),
    }
}

pub(crate) fn check_epsilon(epsilon: Option<f64>) -> Result<f64> {
    match epsilon {
        Some(e) if e > 0.0 && e < 1.0 => Ok(e),
        Some(e) => Err(Error::InvalidParameter(format!("ε must lie in (0, 1), got {e}"))),
        None => Err(Error::InvalidParameter("condition B needs ε".into())),
    }
}

/// `sup_{t>0} Γ(t) / t^{t-4}` and its maximizer.
///
/// Log-grid scan of `(0, 50]` followed by golden-section refinement of
/// `ln Γ(t) - (t - 4) ln t` around the best grid point.
pub fn gamma_ratio_sup() -> (f64, f64) {
    let g = |t: f64| ln_gamma(t) - (t - 4.0) * t.ln();
    let (lo, hi, steps) = (1e-6_f64.ln(), 50f64.ln(), 20_000);
    let grid = |i: usize| (lo + (hi - lo) * i as f64 / steps as f64).exp();
    let best = (0..=steps)
        .max_by(|&a, &b| g(grid(a)).total_cmp(&g(grid(b))))
        .expect("non-empty grid");
    let (mut a, mut b) = (grid(best.saturating_sub(1)), grid((best + 1).min(steps)));
    let phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - phi * (b - a);
    let mut d = a + phi * (b - a);
    for _ in 0..200 {
        if g(c) > g(d) {
            b = d;
        } else {
            a = c;
        }
        c = b - phi * (b - a);
        d = a + phi * (b - a);
        if (b - a).abs() < 1e-14 * b {
            break;
        }
    }
    let t = 0.5 * (a + b);
    (t, g(t).exp())
}

/// Mixing-decay parameters `φ(k) ≤ c0 exp(-c1 k²)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Decay {
    pub c0: f64,
    pub c1: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MomentConstants {
    pub c2: f64,
    pub c3: f64,
    pub c_tilde: f64,
    pub trace: Vec<TraceEntry>,
}

/// `c2 = max(1, 4 Σφ^{1/2}, max_{2 ≤ d ≤ max_depth} c0 c3 / c1^{(d-1)/2})`,
/// `c̃ = 8 c2`. The decay term enters only when `decay` is given; it is
/// monotone in `d`, so the maximum sits at an end of the range.
pub fn moment_constants(
    aggregates: &PhiAggregates,
    decay: Option<Decay>,
    max_depth: usize,
) -> Result<MomentConstants> {
    if !aggregates.sum_sqrt_phi.is_finite() {
        return Err(Error::InvalidParameter("Σφ^{1/2} diverges".into()));
    }
    let (t_star, c3) = gamma_ratio_sup();
    let mut trace = vec![TraceEntry::new(
        "c3",
        c3,
        format!("sup_t Γ(t)/t^(t-4), attained near t = {t_star:.6}"),
    )];
    let sqrt_term = 4.0 * aggregates.sum_sqrt_phi;
    trace.push(TraceEntry::new(
        "4*sum_sqrt_phi",
        sqrt_term,
        format!(
            "4·Σφ(k)^(1/2), {} explicit terms plus certified tail {:e}",
            aggregates.explicit_terms, aggregates.tail_sqrt_phi
        ),
    ));
    let mut c2 = 1f64.max(sqrt_term);
    if let Some(Decay { c0, c1 }) = decay {
        if !(c0 > 0.0 && c1 > 0.0) {
            return Err(Error::InvalidParameter("decay needs c0 > 0 and c1 > 0".into()));
        }
        let depth = if c1 >= 1.0 { 2 } else { max_depth.max(2) };
        let envelope = (c0.ln() + c3.ln() - 0.5 * (depth as f64 - 1.0) * c1.ln()).exp();
        trace.push(TraceEntry::new(
            "decay_envelope",
            envelope,
            format!("c0·c3/c1^((d-1)/2) maximized over 2 ≤ d ≤ {max_depth}, at d = {depth}"),
        ));
        c2 = c2.max(envelope);
    }
    trace.push(TraceEntry::new("c2", c2, "max(1, 4·Σφ^(1/2), decay envelope)"));
    let c_tilde = 8.0 * c2;
    trace.push(TraceEntry::new("c_tilde", c_tilde, "8·c2"));
    Ok(MomentConstants {
        c2,
        c3,
        c_tilde,
        trace,
    })
}

/// `(c̃ C² m N)^{mN}`, the bound on `|E S_n(i_1)⋯S_n(i_{2mN})|`.
pub fn moment_bound(m: usize, n: usize, basis_bound: f64, c_tilde: f64) -> f64 {
    let mn = (m * n) as f64;
    (c_tilde * basis_bound * basis_bound * mn).powf(mn)
}

/// Bell numbers: the count of set partitions of an `m`-set.
pub fn bell(m: usize) -> u64 {
    let mut row = vec![1u64];
    for _ in 0..m {
        let mut next = vec![*row.last().expect("non-empty")];
        for v in &row {
            next.push(next.last().expect("non-empty") + v);
        }
        row = next;
    }
    row[0]
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cos_tensor() -> CoefficientTensor {
        CoefficientTensor::from_entries(2, [(vec![1, 1], 1.0), (vec![2, 2], 1.0)]).unwrap()
    }

    #[test]
    fn b_of_f_values() {
        let t = cos_tensor();
        let c = std::f64::consts::SQRT_2;
        assert!((b_of_f(&t, c, Condition::A, None).unwrap() - 4.0).abs() < 1e-14);
        assert!((b_of_f(&t, c, Condition::B, Some(0.5)).unwrap() - 8.0).abs() < 1e-13);
        assert!(b_of_f(&CoefficientTensor::empty(2), c, Condition::A, None).is_err());
        assert!(b_of_f(&t, c, Condition::B, None).is_err());
        assert!(b_of_f(&t, c, Condition::Dedecker, None).is_err());
    }

    #[test]
    fn b_of_f_homogeneity() {
        let t = CoefficientTensor::from_entries(3, [(vec![1, 2, 3], 0.7), (vec![2, 2, 1], -1.3)]).unwrap();
        for lambda in [0.1, 3.0, 10.0] {
            let s = t.scaled(lambda);
            for (cond, eps) in [(Condition::A, None), (Condition::B, Some(0.3))] {
                let ratio = b_of_f(&s, 1.3, cond, eps).unwrap() / b_of_f(&t, 1.3, cond, eps).unwrap();
                assert!((ratio / lambda.powf(2.0 / 3.0) - 1.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn gamma_ratio_supremum() {
        // Independent value from a bounded scalar minimizer on (0.5, 20).
        let (t, c3) = gamma_ratio_sup();
        assert!((c3 - 6.217_920_460_867_67).abs() < 1e-9, "{c3}");
        assert!((t - 3.476_218_7).abs() < 1e-5, "{t}");
    }

    #[test]
    fn constants_for_reference_profiles() {
        let zero = PhiAggregates {
            sum_phi: 0.0,
            sum_sqrt_phi: 0.0,
            explicit_terms: 0,
            tail_phi: 0.0,
            tail_sqrt_phi: 0.0,
        };
        let iid = moment_constants(&zero, None, 2).unwrap();
        assert_eq!((iid.c2, iid.c_tilde), (1.0, 8.0));

        let window = PhiAggregates {
            sum_phi: 2.0,
            sum_sqrt_phi: 2.0,
            explicit_terms: 2,
            ..zero
        };
        let w = moment_constants(&window, None, 2).unwrap();
        assert_eq!(w.c2, 8.0);
        let with_decay = moment_constants(&window, Some(Decay { c0: 4f64.exp(), c1: 1.0 }), 8).unwrap();
        assert!((with_decay.c2 - 4f64.exp() * with_decay.c3).abs() < 1e-9);
        for name in ["c3", "c2", "c_tilde", "decay_envelope"] {
            assert!(with_decay.trace.iter().any(|e| e.name == name), "{name}");
        }

        let bad = PhiAggregates {
            sum_sqrt_phi: f64::INFINITY,
            ..zero
        };
        assert!(moment_constants(&bad, None, 2).is_err());
    }

    #[test]
    fn slow_decay_uses_deepest_level() {
        let zero = PhiAggregates {
            sum_phi: 0.0,
            sum_sqrt_phi: 0.0,
            explicit_terms: 0,
            tail_phi: 0.0,
            tail_sqrt_phi: 0.0,
        };
        let shallow = moment_constants(&zero, Some(Decay { c0: 1.0, c1: 0.5 }), 4).unwrap();
        let deep = moment_constants(&zero, Some(Decay { c0: 1.0, c1: 0.5 }), 8).unwrap();
        assert!(deep.c2 > shallow.c2);
    }

    #[test]
    fn moment_bound_monotone() {
        assert_eq!(moment_bound(1, 1, 1.0, 8.0), 8.0);
        assert!(moment_bound(2, 1, 1.0, 8.0) < moment_bound(2, 2, 1.0, 8.0));
        assert!(moment_bound(1, 1, 1.0, 8.0) < moment_bound(1, 1, 1.5, 8.0));
        assert!(moment_bound(1, 1, 1.0, 8.0) < moment_bound(1, 1, 1.0, 9.0));
    }

    #[test]
    fn bell_numbers() {
        let expected = [1, 1, 2, 5, 15, 52, 203];
        for (m, &b) in expected.iter().enumerate() {
            assert_eq!(bell(m), b);
        }
    }
}
