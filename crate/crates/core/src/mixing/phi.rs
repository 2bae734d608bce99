//! φ-coefficient profiles and their certified aggregates.

use serde::{Deserialize, Serialize};

use super::markov::MarkovChain;
use crate::error::{Error, Result};
use crate::numeric::CompensatedSum;

/// Values below this are treated as the end of the explicit sum.
pub const PHI_NEGLIGIBLE: f64 = 1e-15;
const MAX_EXPLICIT_TERMS: usize = 1_000_000;

/// Whether `phi(k)` is the coefficient itself or only an upper bound.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PhiKind {
    Exact,
    UpperBound,
}

/// The sequence `φ(1), φ(2), …` of a process.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "kind")]
pub enum PhiProfile {
    /// `φ ≡ 0`.
    Independent,
    /// `φ(k) = 1` for `k ≤ window`, `0` beyond.
    Window { window: usize },
    /// `φ(k) = max_x TV(P^k(x, ·), π)`.
    Markov { chain: MarkovChain },
    /// Explicit values `φ(1..=K)`, extended geometrically with the ratio of
    /// the last two values.
    Table { values: Vec<f64> },
}

/// `Σ φ(k)` and `Σ φ(k)^{1/2}` over `k ≥ 1`, each an explicit partial sum
/// plus a certified tail majorant.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhiAggregates {
    pub sum_phi: f64,
    pub sum_sqrt_phi: f64,
    pub explicit_terms: usize,
    pub tail_phi: f64,
    pub tail_sqrt_phi: f64,
}

impl PhiAggregates {
    /// `1 + Σ_{k≥1} φ(k)`, i.e. the sum including `φ(0) = 1`.
    pub fn phi_eff(&self) -> f64 {
        1.0 + self.sum_phi
    }
}

impl PhiProfile {
    pub fn kind(&self) -> PhiKind {
        match self {
            PhiProfile::Independent | PhiProfile::Markov { .. } => PhiKind::Exact,
            PhiProfile::Window { .. } | PhiProfile::Table { .. } => PhiKind::UpperBound,
        }
    }

    /// `φ(k)`, with `φ(0) = 1`.
    pub fn phi(&self, k: usize) -> f64 {
        if k == 0 {
            return 1.0;
        }
        match self {
            PhiProfile::Independent => 0.0,
            PhiProfile::Window { window } => {
                if k <= *window {
                    1.0
                } else {
                    0.0
                }
            }
            PhiProfile::Markov { chain } => super::markov::phi_markov_exact(chain, k),
            PhiProfile::Table { values } => table_phi(values, k),
        }
    }

    /// `φ(1), …, φ(len)`, computed incrementally.
    pub fn sequence(&self, len: usize) -> Vec<f64> {
        match self {
            PhiProfile::Markov { chain } => {
                let mut out = Vec::with_capacity(len);
                let mut pk = chain.power(0);
                for _ in 0..len {
                    pk = chain.next_power(&pk);
                    out.push(chain.worst_tv_to_stationary(&pk));
                }
                out
            }
            _ => (1..=len).map(|k| self.phi(k)).collect(),
        }
    }

    /// Sums to the first `K*` with `φ(K*) < 1e-15` and adds a tail majorant.
    pub fn aggregates(&self) -> Result<PhiAggregates> {
        match self {
            PhiProfile::Independent => Ok(PhiAggregates {
                sum_phi: 0.0,
                sum_sqrt_phi: 0.0,
                explicit_terms: 0,
                tail_phi: 0.0,
                tail_sqrt_phi: 0.0,
            }),
            PhiProfile::Window { window } => Ok(PhiAggregates {
                sum_phi: *window as f64,
                sum_sqrt_phi: *window as f64,
                explicit_terms: *window,
                tail_phi: 0.0,
                tail_sqrt_phi: 0.0,
            }),
            PhiProfile::Markov { chain } => markov_aggregates(chain),
            PhiProfile::Table { values } => table_aggregates(values),
        }
    }
}

fn table_ratio(values: &[f64]) -> f64 {
    match values {
        [.., a, b] if *a > 0.0 => b / a,
        _ => 0.0,
    }
}

fn table_phi(values: &[f64], k: usize) -> f64 {
    match values.get(k - 1) {
        Some(v) => *v,
        None => match values.last() {
            Some(&last) => last * table_ratio(values).powi((k - values.len()) as i32),
            None => 0.0,
        },
    }
}

fn table_aggregates(values: &[f64]) -> Result<PhiAggregates> {
    if let Some(v) = values.iter().find(|v| !(v.is_finite() && (0.0..=1.0).contains(*v))) {
        return Err(Error::InvalidParameter(format!("φ value {v} outside [0, 1]")));
    }
    let mut sum = CompensatedSum::new();
    let mut sqrt_sum = CompensatedSum::new();
    for v in values {
        sum.add(*v);
        sqrt_sum.add(v.sqrt());
    }
    let last = values.last().copied().unwrap_or(0.0);
    let r = table_ratio(values);
    let (tail_phi, tail_sqrt_phi) = if last == 0.0 {
        (0.0, 0.0)
    } else if r < 1.0 {
        (last * r / (1.0 - r), (last * r).sqrt() / (1.0 - r.sqrt()))
    } else {
        return Err(Error::InvalidParameter(format!(
            "φ table does not decay (last ratio {r}); aggregates diverge"
        )));
    };
    Ok(PhiAggregates {
        sum_phi: sum.value() + tail_phi,
        sum_sqrt_phi: sqrt_sum.value() + tail_sqrt_phi,
        explicit_terms: values.len(),
        tail_phi,
        tail_sqrt_phi,
    })
}

/// The row-to-row distance `d̄(k) = max_{x,y} TV(P^k(x,·), P^k(y,·))` bounds
/// `φ(k)` from above and is submultiplicative, so for `k > qK`,
/// `φ(k) ≤ d̄(K)^q` and `Σ_{k>K} φ(k) ≤ K d̄(K) / (1 - d̄(K))`.
fn markov_aggregates(chain: &MarkovChain) -> Result<PhiAggregates> {
    let mut sum = CompensatedSum::new();
    let mut sqrt_sum = CompensatedSum::new();
    let mut pk = chain.power(0);
    for k in 1..=MAX_EXPLICIT_TERMS {
        pk = chain.next_power(&pk);
        let phi = chain.worst_tv_to_stationary(&pk);
        sum.add(phi);
        sqrt_sum.add(phi.sqrt());
        let dbar = chain.worst_tv_between_rows(&pk);
        if phi < PHI_NEGLIGIBLE || k == MAX_EXPLICIT_TERMS {
            if dbar >= 1.0 {
                break;
            }
            let kf = k as f64;
            let tail_phi = kf * dbar / (1.0 - dbar);
            let tail_sqrt_phi = kf * dbar.sqrt() / (1.0 - dbar.sqrt());
            return Ok(PhiAggregates {
                sum_phi: sum.value() + tail_phi,
                sum_sqrt_phi: sqrt_sum.value() + tail_sqrt_phi,
                explicit_terms: k,
                tail_phi,
                tail_sqrt_phi,
            });
        }
    }
    Err(Error::InvalidParameter(
        "φ aggregates could not be certified: chain mixes too slowly".into(),
    ))
}
