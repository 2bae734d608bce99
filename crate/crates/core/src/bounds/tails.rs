//! Tail bounds as plain functions of their constants.

use std::f64::consts::E;

use serde::{Deserialize, Serialize};
use statrs::function::gamma::{gamma_ur, ln_gamma};

use crate::error::{Error, Result};

/// Series terms summed before falling back to the integral remainder bound.
const MAX_SERIES_TERMS: usize = 10_000_000;
const SERIES_RELATIVE_REMAINDER: f64 = 1e-15;
pub const INTEGER_N_CAP: usize = 1_000_000;

/// `e^{1/e}`.
pub fn e_to_inv_e() -> f64 {
    (1.0 / E).exp()
}

/// `min(1, exp(-x^{2/m} / (e c̃ B(f))))`.
pub fn tail_bound_a(x: f64, m: usize, bf: f64, c_tilde: f64) -> f64 {
    if x <= 0.0 {
        return 1.0;
    }
    (-exponent(x, m, bf) / (E * c_tilde)).exp().min(1.0)
}

/// `x^{2/m} / B(f)`, the scale-free part of both exponents.
pub fn exponent(x: f64, m: usize, bf: f64) -> f64 {
    x.powf(2.0 / m as f64) / bf
}

/// Moment-method bound at an integer moment order.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IntegerMomentBound {
    pub bound: f64,
    pub moment_order: usize,
}

/// `min_{1 ≤ N ≤ n_max} A^{2N} (c̃ m N)^{mN} / x^{2N}` with `A = C^m Σ|f|`.
///
/// The log objective `2N ln(A/x) + mN ln(c̃ m N)` is convex in `N`, so the
/// integer optimum is the floor or ceiling of the stationary point
/// `N* = (x/A)^{2/m} / (e c̃ m)`.
pub fn tail_bound_a_integer(
    x: f64,
    m: usize,
    coefficient_scale: f64,
    c_tilde: f64,
    n_max: usize,
) -> IntegerMomentBound {
    if x <= 0.0 || n_max == 0 {
        return IntegerMomentBound {
            bound: 1.0,
            moment_order: 1,
        };
    }
    let mf = m as f64;
    let log_obj = |n: usize| {
        let nf = n as f64;
        2.0 * nf * (coefficient_scale / x).ln() + mf * nf * (c_tilde * mf * nf).ln()
    };
    let star = (x / coefficient_scale).powf(2.0 / mf) / (E * c_tilde * mf);
    let clamp = |v: f64| -> usize {
        if !(v >= 1.0) {
            1
        } else if v >= n_max as f64 {
            n_max
        } else {
            v as usize
        }
    };
    let lo = clamp(star.floor());
    let hi = clamp(star.ceil());
    let (n, value) = [lo, hi]
        .into_iter()
        .map(|n| (n, log_obj(n)))
        .min_by(|a, b| a.1.total_cmp(&b.1))
        .expect("two candidates");
    IntegerMomentBound {
        bound: value.exp().min(1.0),
        moment_order: n,
    }
}

/// `K(x) = x^{2/m} / (16 e C² φ c^{2/(m(1-ε))})` and `γ = 2ε / (m(1-ε))`.
pub fn k_of_x(x: f64, m: usize, epsilon: f64, c_norm: f64, basis_bound: f64, phi_sum: f64) -> (f64, f64) {
    let mf = m as f64;
    let k = x.max(0.0).powf(2.0 / mf)
        / (16.0 * E * basis_bound.powi(2) * phi_sum * c_norm.powf(2.0 / (mf * (1.0 - epsilon))));
    let gamma = 2.0 * epsilon / (mf * (1.0 - epsilon));
    (k, gamma)
}

/// `Σ_{i>terms} exp(-K i^γ) ≤ ∫_{terms}^∞ exp(-K t^γ) dt
///  = γ^{-1} K^{-1/γ} Γ(1/γ) Q(1/γ, K terms^γ)`.
fn series_remainder(k: f64, gamma: f64, terms: usize) -> f64 {
    let a = 1.0 / gamma;
    let q = gamma_ur(a, k * (terms as f64).powf(gamma));
    if q <= 0.0 {
        return 0.0;
    }
    (-gamma.ln() - a * k.ln() + ln_gamma(a) + q.ln()).exp()
}

/// `Σ_{i≥1} exp(-K i^γ)`, summed until the certified remainder falls below
/// `1e-15` of the partial sum. Returns early once the sum exceeds `cap`.
pub fn stretched_exp_series(k: f64, gamma: f64, cap: f64) -> f64 {
    let mut sum = crate::numeric::CompensatedSum::new();
    let mut terms = 0;
    while terms < MAX_SERIES_TERMS {
        terms += 1;
        sum.add((-k * (terms as f64).powf(gamma)).exp());
        let partial = sum.value();
        if partial >= cap {
            return partial;
        }
        // The remainder check is comparatively costly; space it out.
        if terms <= 64 || terms % 64 == 0 {
            let rem = series_remainder(k, gamma, terms);
            if rem <= SERIES_RELATIVE_REMAINDER * partial {
                return partial;
            }
        }
    }
    sum.value() + series_remainder(k, gamma, terms)
}

/// `min(1, m e^{1/e} Σ_{i≥1} exp(-K(x) i^γ))`.
pub fn tail_bound_b(x: f64, m: usize, epsilon: f64, c_norm: f64, basis_bound: f64, phi_sum: f64) -> f64 {
    let (k, gamma) = k_of_x(x, m, epsilon, c_norm, basis_bound, phi_sum);
    if !(k > 0.0) {
        return 1.0;
    }
    let prefactor = m as f64 * e_to_inv_e();
    (prefactor * stretched_exp_series(k, gamma, 1.0 / prefactor)).min(1.0)
}

/// `l = ⌊1/γ - 1⌋ + 1`, the integer exponent dominating `u^{1/γ - 1}` on `u ≥ 1`.
pub fn majorant_power(gamma: f64) -> usize {
    (1.0 / gamma - 1.0).floor() as usize + 1
}

/// Closed-form majorant of `m e^{1/e} Σ exp(-K i^γ)`: `2 m e^{1/e} e^{-K}` for
/// `γ ≥ 1`, `(l + 2) m e^{1/e} e^{-K}` otherwise. `None` outside its regime
/// `γK ≥ 1` (and `K ≥ l` when `γ < 1`).
pub fn tail_bound_b_majorant(
    x: f64,
    m: usize,
    epsilon: f64,
    c_norm: f64,
    basis_bound: f64,
    phi_sum: f64,
) -> Option<f64> {
    let (k, gamma) = k_of_x(x, m, epsilon, c_norm, basis_bound, phi_sum);
    if gamma * k < 1.0 {
        return None;
    }
    let factor = if gamma >= 1.0 {
        2.0
    } else {
        let l = majorant_power(gamma);
        if k < l as f64 {
            return None;
        }
        l as f64 + 2.0
    };
    Some(m as f64 * e_to_inv_e() * factor * (-k).exp())
}

/// Smallest `x` with `x^{2/m} ≥ ε^{-1} 8 m (1-ε) e C² φ c^{2/(m(1-ε))}`.
pub fn majorant_threshold(m: usize, epsilon: f64, c_norm: f64, basis_bound: f64, phi_sum: f64) -> f64 {
    let mf = m as f64;
    let rhs = 8.0 * mf * (1.0 - epsilon) * E * basis_bound.powi(2) * phi_sum
        * c_norm.powf(2.0 / (mf * (1.0 - epsilon)))
        / epsilon;
    rhs.powf(mf / 2.0)
}

/// `n φ(0) + Σ_{k=1}^{n-1} (n-k) φ(k)` with `φ(0) = 1`; `phi[k-1] = φ(k)`.
pub fn dedecker_denominator(n: usize, phi: &[f64]) -> Result<f64> {
    if n < 2 {
        return Err(Error::InvalidParameter(format!("need n ≥ 2, got {n}")));
    }
    if phi.len() < n - 1 {
        return Err(Error::InvalidParameter(format!(
            "need φ(1..{}) but got {} values",
            n - 1,
            phi.len()
        )));
    }
    let mut acc = crate::numeric::CompensatedSum::new();
    acc.add(n as f64);
    for k in 1..n {
        acc.add((n - k) as f64 * phi[k - 1]);
    }
    Ok(acc.value())
}

/// `min(1, e^{1/e} exp(-t² / (16 C² e D_n)))` for the centered partial sum.
pub fn dedecker_bound(t: f64, basis_bound: f64, denominator: f64) -> Result<f64> {
    if !(t > 0.0) {
        return Err(Error::InvalidParameter(format!("t must be positive, got {t}")));
    }
    Ok((e_to_inv_e() * (-t * t / (16.0 * basis_bound.powi(2) * E * denominator)).exp()).min(1.0))
}

/// `exp(-2 ⌊n/m⌋ t² / (b-a)²)` for `P(U - EU ≥ t)` with a kernel in `[a, b]`.
pub fn hoeffding_1963_bound(t: f64, n: usize, m: usize, a: f64, b: f64) -> Result<f64> {
    if !(b > a) {
        return Err(Error::InvalidParameter(format!("need b > a, got a={a}, b={b}")));
    }
    if m == 0 || n < m {
        return Err(Error::SampleTooSmall { n, m });
    }
    if t < 0.0 {
        return Err(Error::InvalidParameter(format!("t must be nonnegative, got {t}")));
    }
    let k = (n / m) as f64;
    Ok((-2.0 * k * t * t / ((b - a) * (b - a))).exp())
}

/// Outcome of the finite-`n` comparison behind the U-statistic bound under B.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegimeCheck {
    pub alpha: f64,
    pub satisfied: bool,
    /// Block sizes `k ≥ 2` whose centered exponent is weaker than `α^{2/m}`.
    pub failing_block_sizes: Vec<usize>,
}

/// For `α = x c^{-1} max|f|^{-ε} / Bell(m)` checks, for every block size
/// `2 ≤ k ≤ m`, that `α^{k/m} > C^k n^{1-k/2}` and
/// `(α^{k/m} - C^k n^{1-k/2})² n^{k-1} / C^{2(k-1)} ≥ α^{2/m}`, i.e. that the
/// diagonal terms of the U-statistic decomposition are already dominated at
/// this `n`.
pub fn u_statistic_regime_check(
    x: f64,
    n: usize,
    m: usize,
    epsilon: f64,
    c_norm: f64,
    max_abs_coefficient: f64,
    basis_bound: f64,
) -> RegimeCheck {
    let mf = m as f64;
    let nf = n as f64;
    let alpha = x / c_norm * max_abs_coefficient.powf(-epsilon) / super::constants::bell(m) as f64;
    let target = alpha.powf(2.0 / mf);
    let failing: Vec<usize> = (2..=m)
        .filter(|&k| {
            let kf = k as f64;
            let shift = basis_bound.powf(kf) * nf.powf(1.0 - kf / 2.0);
            let lead = alpha.powf(kf / mf);
            if lead <= shift {
                return true;
            }
            let lhs = (lead - shift).powi(2) * nf.powf(kf - 1.0) / basis_bound.powf(2.0 * (kf - 1.0));
            lhs < target
        })
        .collect();
    RegimeCheck {
        alpha,
        satisfied: failing.is_empty(),
        failing_block_sizes: failing,
    }
}
