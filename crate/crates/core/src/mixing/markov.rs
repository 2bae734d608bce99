//! Finite stationary Markov chains and their uniform mixing coefficients.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const ROW_SUM_TOLERANCE: f64 = 1e-12;
/// Work budget above which `phi_brute_force` stops enumerating unions of
/// past atoms and takes the supremum over single atoms.
const SUBSET_WORK_LIMIT: f64 = 6.7e7;
const ATOM_LIMIT: usize = 10_000;

/// Irreducible, aperiodic transition matrix with its stationary law.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Vec<f64>>", into = "Vec<Vec<f64>>")]
pub struct MarkovChain {
    transition: Vec<Vec<f64>>,
    stationary: Vec<f64>,
}

impl TryFrom<Vec<Vec<f64>>> for MarkovChain {
    type Error = Error;
    fn try_from(p: Vec<Vec<f64>>) -> Result<Self> {
        MarkovChain::new(p)
    }
}

impl From<MarkovChain> for Vec<Vec<f64>> {
    fn from(c: MarkovChain) -> Self {
        c.transition
    }
}

impl MarkovChain {
    pub fn new(transition: Vec<Vec<f64>>) -> Result<Self> {
        let d = transition.len();
        if d < 2 {
            return Err(Error::InvalidChain(format!("need at least 2 states, got {d}")));
        }
        for (x, row) in transition.iter().enumerate() {
            if row.len() != d {
                return Err(Error::InvalidChain(format!(
                    "row {x} has {} entries, expected {d}",
                    row.len()
                )));
            }
            if let Some(v) = row.iter().find(|v| !(v.is_finite() && **v >= 0.0)) {
                return Err(Error::InvalidChain(format!("row {x} has invalid entry {v}")));
            }
            let s: f64 = crate::numeric::compensated_sum(row.iter().copied());
            if (s - 1.0).abs() > ROW_SUM_TOLERANCE {
                return Err(Error::InvalidChain(format!("row {x} sums to {s}")));
            }
        }

        let support: Vec<Vec<bool>> = transition
            .iter()
            .map(|r| r.iter().map(|&v| v > 0.0).collect())
            .collect();
        // (I + P)^{d-1} > 0 iff irreducible.
        let mut lazy = support.clone();
        for (x, row) in lazy.iter_mut().enumerate() {
            row[x] = true;
        }
        if !all_positive(&bool_power(&lazy, d - 1)) {
            return Err(Error::InvalidChain(
                "chain is reducible: some state cannot reach another".into(),
            ));
        }
        // Wielandt: a primitive matrix has P^{(d-1)^2+1} > 0.
        if !all_positive(&bool_power(&support, (d - 1) * (d - 1) + 1)) {
            return Err(Error::InvalidChain(
                "chain is periodic: no power of the transition matrix is positive".into(),
            ));
        }

        let stationary = solve_stationary(&transition)?;
        Ok(MarkovChain {
            transition,
            stationary,
        })
    }

    /// Symmetric two-state chain with second eigenvalue `lambda`.
    pub fn two_state(lambda: f64) -> Result<Self> {
        let stay = (1.0 + lambda) / 2.0;
        MarkovChain::new(vec![vec![stay, 1.0 - stay], vec![1.0 - stay, stay]])
    }

    pub fn states(&self) -> usize {
        self.transition.len()
    }

    pub fn transition(&self) -> &[Vec<f64>] {
        &self.transition
    }

    pub fn stationary(&self) -> &[f64] {
        &self.stationary
    }

    /// `P^k`.
    pub fn power(&self, k: usize) -> Vec<Vec<f64>> {
        let d = self.states();
        let mut out = identity(d);
        for _ in 0..k {
            out = mat_mul(&out, &self.transition);
        }
        out
    }

    pub(crate) fn next_power(&self, current: &[Vec<f64>]) -> Vec<Vec<f64>> {
        mat_mul(current, &self.transition)
    }

    /// `max_x TV(row_x, π)` for a `k`-step matrix.
    pub(crate) fn worst_tv_to_stationary(&self, pk: &[Vec<f64>]) -> f64 {
        pk.iter()
            .map(|row| total_variation(row, &self.stationary))
            .fold(0.0, f64::max)
    }

    /// `max_{x,y} TV(row_x, row_y)`, which is submultiplicative in `k`.
    pub(crate) fn worst_tv_between_rows(&self, pk: &[Vec<f64>]) -> f64 {
        let mut worst = 0.0_f64;
        for (i, a) in pk.iter().enumerate() {
            for b in &pk[i + 1..] {
                worst = worst.max(total_variation(a, b));
            }
        }
        worst
    }

    /// Draws the next state from row `x` with a uniform variate `u ∈ [0, 1)`.
    pub(crate) fn step(&self, x: usize, u: f64) -> usize {
        inverse_cdf(&self.transition[x], u)
    }
}

pub(crate) fn inverse_cdf(p: &[f64], u: f64) -> usize {
    let mut acc = 0.0;
    for (i, &pi) in p.iter().enumerate() {
        acc += pi;
        if u < acc {
            return i;
        }
    }
    // Rounding left a gap below 1: take the last state with positive mass.
    p.iter().rposition(|&v| v > 0.0).unwrap_or(p.len() - 1)
}

fn identity(d: usize) -> Vec<Vec<f64>> {
    (0..d)
        .map(|i| (0..d).map(|j| if i == j { 1.0 } else { 0.0 }).collect())
        .collect()
}

fn mat_mul(a: &[Vec<f64>], b: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let d = b.len();
    a.iter()
        .map(|row| {
            (0..d)
                .map(|j| crate::numeric::compensated_sum((0..d).map(|k| row[k] * b[k][j])))
                .collect()
        })
        .collect()
}

fn bool_power(m: &[Vec<bool>], k: usize) -> Vec<Vec<bool>> {
    let d = m.len();
    let mut out: Vec<Vec<bool>> = (0..d).map(|i| (0..d).map(|j| i == j).collect()).collect();
    for _ in 0..k {
        out = (0..d)
            .map(|i| (0..d).map(|j| (0..d).any(|l| out[i][l] && m[l][j])).collect())
            .collect();
    }
    out
}

fn all_positive(m: &[Vec<bool>]) -> bool {
    m.iter().flatten().all(|&b| b)
}

pub(crate) fn total_variation(a: &[f64], b: &[f64]) -> f64 {
    0.5 * crate::numeric::compensated_sum(a.iter().zip(b).map(|(x, y)| (x - y).abs()))
}

/// Solves `π P = π`, `Σ π = 1` by LU on the system with one balance
/// equation replaced by the normalization.
fn solve_stationary(p: &[Vec<f64>]) -> Result<Vec<f64>> {
    let d = p.len();
    let mut a = DMatrix::<f64>::zeros(d, d);
    for i in 0..d {
        for j in 0..d {
            a[(i, j)] = p[j][i] - if i == j { 1.0 } else { 0.0 };
        }
    }
    for j in 0..d {
        a[(d - 1, j)] = 1.0;
    }
    let mut rhs = DVector::<f64>::zeros(d);
    rhs[d - 1] = 1.0;
    let pi = a
        .lu()
        .solve(&rhs)
        .ok_or_else(|| Error::InvalidChain("stationary system is singular".into()))?;
    let mut pi: Vec<f64> = pi.iter().map(|v| v.max(0.0)).collect();
    let total: f64 = pi.iter().sum();
    pi.iter_mut().for_each(|v| *v /= total);
    if pi.iter().any(|&v| v <= 0.0) {
        return Err(Error::InvalidChain("stationary law has a zero entry".into()));
    }
    Ok(pi)
}

/// `φ(k) = max_x TV(P^k(x, ·), π)`; `φ(0) = 1` by convention.
pub fn phi_markov_exact(chain: &MarkovChain, k: usize) -> f64 {
    if k == 0 {
        return 1.0;
    }
    chain.worst_tv_to_stationary(&chain.power(k))
}

/// Enumerated uniform mixing coefficient on finite cylinder horizons.
///
/// Past events are unions of atoms of `(X_1, …, X_p)`, future events are
/// unions of atoms of `(X_{p+k}, …, X_{p+k+f-1})`. For a fixed past event `A`
/// the supremum over future events is `TV(P(· | A), P(·))`, attained by the
/// atoms where the conditional mass exceeds the unconditional one. Unions of
/// past atoms are enumerated exhaustively when affordable; otherwise the
/// supremum is taken over single atoms, which is exact because
/// `P(· | A)` is a mixture of `P(· | a)`, `a ∈ A`, and TV is convex.
pub fn phi_brute_force(chain: &MarkovChain, k: usize, past: usize, future: usize) -> Result<f64> {
    if k == 0 || past == 0 || future == 0 {
        return Err(Error::InvalidParameter(
            "lag and horizons must be positive".into(),
        ));
    }
    let d = chain.states();
    let atoms = |h: usize| -> Result<usize> {
        u32::try_from(h)
            .ok()
            .and_then(|h| d.checked_pow(h))
            .filter(|&n| n <= ATOM_LIMIT)
            .ok_or_else(|| {
                Error::HorizonTooLarge(format!("{d}^{h} atoms exceed the limit of {ATOM_LIMIT}"))
            })
    };
    let n_past = atoms(past)?;
    let n_future = atoms(future)?;
    let p = chain.transition();
    let pi = chain.stationary();
    let pk = chain.power(k);

    let decode = |mut code: usize, len: usize| -> Vec<usize> {
        let mut out = vec![0; len];
        for slot in out.iter_mut().rev() {
            *slot = code % d;
            code /= d;
        }
        out
    };
    let path_weight = |x: &[usize]| -> f64 { x.windows(2).map(|w| p[w[0]][w[1]]).product() };

    let past_prob: Vec<f64> = (0..n_past)
        .map(|a| {
            let x = decode(a, past);
            pi[x[0]] * path_weight(&x)
        })
        .collect();
    let past_last: Vec<usize> = (0..n_past).map(|a| a % d).collect();
    let future_first: Vec<usize> = (0..n_future).map(|b| decode(b, future)[0]).collect();
    let future_weight: Vec<f64> = (0..n_future).map(|b| path_weight(&decode(b, future))).collect();
    let future_prob: Vec<f64> = (0..n_future)
        .map(|b| pi[future_first[b]] * future_weight[b])
        .collect();
    let conditional = |a: usize, b: usize| pk[past_last[a]][future_first[b]] * future_weight[b];

    let exhaustive = n_past < 63
        && (2f64).powi(n_past as i32) * (n_past * n_future) as f64 <= SUBSET_WORK_LIMIT;
    let mut best = 0.0_f64;
    if exhaustive {
        let mut joint = vec![0.0; n_future];
        for mask in 1u64..(1u64 << n_past) {
            let members: Vec<usize> = (0..n_past).filter(|a| mask >> a & 1 == 1).collect();
            let pa: f64 = members.iter().map(|&a| past_prob[a]).sum();
            if pa <= 0.0 {
                continue;
            }
            for (b, slot) in joint.iter_mut().enumerate() {
                *slot = members.iter().map(|&a| past_prob[a] * conditional(a, b)).sum::<f64>() / pa;
            }
            best = best.max(total_variation(&joint, &future_prob));
        }
    } else {
        let mut row = vec![0.0; n_future];
        for (a, &pa) in past_prob.iter().enumerate().take(n_past) {
            if pa <= 0.0 {
                continue;
            }
            for (b, slot) in row.iter_mut().enumerate() {
                *slot = conditional(a, b);
            }
            best = best.max(total_variation(&row, &future_prob));
        }
    }
    Ok(best)
}
