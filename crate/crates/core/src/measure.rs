//! Reference distributions on the two supported state spaces and the
//! quadrature used to integrate against them.
//!
//! Points are plain `f64` values. On a finite alphabet `{0, …, d-1}` a
//! symbol `x` is encoded as the float `x as f64`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const PROBABILITY_SUM_TOLERANCE: f64 = 1e-12;

/// Reference distribution `F` of the state space.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "kind")]
pub enum Measure {
    /// Lebesgue measure on `[0, 1]`.
    Uniform,
    /// Probability vector on the alphabet `{0, …, d-1}`.
    Finite { probabilities: Vec<f64> },
}

impl Measure {
    pub fn finite(probabilities: Vec<f64>) -> Result<Self> {
        validate_probabilities(&probabilities)?;
        Ok(Measure::Finite { probabilities })
    }

    /// Alphabet size, or `None` for the continuum.
    pub fn alphabet_size(&self) -> Option<usize> {
        match self {
            Measure::Uniform => None,
            Measure::Finite { probabilities } => Some(probabilities.len()),
        }
    }

    pub fn contains(&self, point: f64) -> bool {
        match self {
            Measure::Uniform => (0.0..=1.0).contains(&point),
            Measure::Finite { probabilities } => {
                point.fract() == 0.0 && point >= 0.0 && (point as usize) < probabilities.len()
            }
        }
    }

    /// Integration nodes and weights. Finite alphabets ignore `quadrature`
    /// and return every symbol with its probability, so sums are exact.
    pub fn nodes(&self, quadrature: &Quadrature) -> Vec<(f64, f64)> {
        match self {
            Measure::Uniform => quadrature.nodes(),
            Measure::Finite { probabilities } => probabilities
                .iter()
                .enumerate()
                .map(|(x, &p)| (x as f64, p))
                .collect(),
        }
    }

    /// Points at which conditional expectations are probed: 64 uniform
    /// points on `[0, 1]` (endpoints included) or the full alphabet.
    pub fn default_grid(&self) -> Vec<f64> {
        match self {
            Measure::Uniform => crate::numeric::linspace(0.0, 1.0, 64),
            Measure::Finite { probabilities } => {
                (0..probabilities.len()).map(|x| x as f64).collect()
            }
        }
    }

    pub fn integrate(&self, quadrature: &Quadrature, f: impl Fn(f64) -> f64) -> f64 {
        crate::numeric::compensated_sum(self.nodes(quadrature).into_iter().map(|(t, w)| w * f(t)))
    }

    pub fn describe(&self) -> String {
        match self {
            Measure::Uniform => "uniform[0,1]".to_string(),
            Measure::Finite { probabilities } => format!("finite{probabilities:?}"),
        }
    }
}

pub(crate) fn validate_probabilities(p: &[f64]) -> Result<()> {
    if p.len() < 2 {
        return Err(Error::InvalidProbabilities(format!(
            "alphabet size must be at least 2, got {}",
            p.len()
        )));
    }
    if let Some((i, &v)) = p.iter().enumerate().find(|(_, v)| !(**v > 0.0) || !v.is_finite()) {
        return Err(Error::InvalidProbabilities(format!(
            "probability of symbol {i} is {v}, must be positive"
        )));
    }
    let total = crate::numeric::compensated_sum(p.iter().copied());
    if (total - 1.0).abs() > PROBABILITY_SUM_TOLERANCE {
        return Err(Error::InvalidProbabilities(format!(
            "probabilities sum to {total}, not 1"
        )));
    }
    Ok(())
}

/// Composite Gauss–Legendre rule on `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Quadrature {
    pub panels: usize,
    pub order: usize,
}

impl Default for Quadrature {
    /// 1024 panels of 4 nodes: 4096 nodes in total.
    fn default() -> Self {
        Quadrature {
            panels: 1024,
            order: 4,
        }
    }
}

impl Quadrature {
    pub fn new(panels: usize, order: usize) -> Self {
        assert!(panels >= 1 && order >= 1, "quadrature needs at least one node");
        Quadrature { panels, order }
    }

    /// 128 nodes; used where integrands are evaluated inside nested sums.
    pub fn coarse() -> Self {
        Quadrature::new(32, 4)
    }

    pub fn len(&self) -> usize {
        self.panels * self.order
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn nodes(&self) -> Vec<(f64, f64)> {
        let (x, w) = gauss_legendre(self.order);
        let h = 1.0 / self.panels as f64;
        let mut out = Vec::with_capacity(self.len());
        for p in 0..self.panels {
            let left = p as f64 * h;
            for (xi, wi) in x.iter().zip(&w) {
                out.push((left + 0.5 * h * (xi + 1.0), 0.5 * h * wi));
            }
        }
        out
    }
}

/// Gauss–Legendre nodes and weights on `[-1, 1]` by Newton iteration on `P_n`.
fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre_with_derivative(n, x);
        if d != 0.0 {
            dp = d;
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    (nodes, weights)
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, x);
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let k = k as f64;
        let p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}
