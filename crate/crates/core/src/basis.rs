//! Uniformly bounded orthonormal bases of `L2(F)` that contain `e_0 ≡ 1`.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::measure::{validate_probabilities, Measure, Quadrature};

type BasisFn = Arc<dyn Fn(usize, f64) -> f64 + Send + Sync>;

#[derive(Clone)]
enum BasisKind {
    /// `e_{2k-1} = √2 cos(2πkt)`, `e_{2k} = √2 sin(2πkt)`.
    Trig,
    /// `values[i][x]` is `e_i` at symbol `x`.
    Table(Vec<Vec<f64>>),
    Custom(BasisFn),
}

/// An indexed family `{e_i}` with a uniform bound `C` and its reference measure.
///
/// Immutable after construction.
#[derive(Clone)]
pub struct OrthonormalBasis {
    kind: BasisKind,
    measure: Measure,
    bound: f64,
    max_index: Option<usize>,
}

impl fmt::Debug for OrthonormalBasis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let kind = match &self.kind {
            BasisKind::Trig => "trig",
            BasisKind::Table(_) => "table",
            BasisKind::Custom(_) => "custom",
        };
        f.debug_struct("OrthonormalBasis")
            .field("kind", &kind)
            .field("measure", &self.measure)
            .field("bound", &self.bound)
            .field("max_index", &self.max_index)
            .finish()
    }
}

impl OrthonormalBasis {
    /// Trigonometric basis on `[0, 1]` under the uniform law. `C = √2`.
    pub fn trig() -> Self {
        OrthonormalBasis {
            kind: BasisKind::Trig,
            measure: Measure::Uniform,
            bound: std::f64::consts::SQRT_2,
            max_index: None,
        }
    }

    /// Gram–Schmidt basis of `L2(p)` on the alphabet `{0, …, d-1}`.
    ///
    /// Input order is `1, δ_0, δ_1, …, δ_{d-2}`; each function is normalized so
    /// that its first non-zero value is positive.
    pub fn finite(probabilities: &[f64]) -> Result<Self> {
        validate_probabilities(probabilities)?;
        let d = probabilities.len();
        let inner = |a: &[f64], b: &[f64]| -> f64 {
            crate::numeric::compensated_sum((0..d).map(|x| probabilities[x] * a[x] * b[x]))
        };

        let mut values: Vec<Vec<f64>> = Vec::with_capacity(d);
        values.push(vec![1.0; d]);
        for j in 0..d - 1 {
            let mut v = vec![0.0; d];
            v[j] = 1.0;
            // Two passes of modified Gram–Schmidt keep the Gram defect at rounding level.
            for _ in 0..2 {
                for e in &values {
                    let c = inner(&v, e);
                    for x in 0..d {
                        v[x] -= c * e[x];
                    }
                }
            }
            let norm = inner(&v, &v).sqrt();
            if !(norm > 1e-14) {
                return Err(Error::InvalidProbabilities(format!(
                    "Gram–Schmidt degenerated at symbol {j}"
                )));
            }
            v.iter_mut().for_each(|x| *x /= norm);
            if let Some(first) = v.iter().find(|x| x.abs() > 1e-14) {
                if *first < 0.0 {
                    v.iter_mut().for_each(|x| *x = -*x);
                }
            }
            values.push(v);
        }

        let bound = values
            .iter()
            .flatten()
            .fold(0.0_f64, |acc, v| acc.max(v.abs()));
        Ok(OrthonormalBasis {
            kind: BasisKind::Table(values),
            measure: Measure::Finite {
                probabilities: probabilities.to_vec(),
            },
            bound,
            max_index: Some(d - 1),
        })
    }

    /// Wraps an arbitrary evaluator. Nothing is checked; use
    /// [`OrthonormalBasis::check_orthonormality`] to validate it.
    pub fn custom(
        measure: Measure,
        bound: f64,
        max_index: Option<usize>,
        evaluate: impl Fn(usize, f64) -> f64 + Send + Sync + 'static,
    ) -> Self {
        OrthonormalBasis {
            kind: BasisKind::Custom(Arc::new(evaluate)),
            measure,
            bound,
            max_index,
        }
    }

    /// `e_index(point)`.
    ///
    /// For finite alphabets `point` must be a valid symbol; this is not
    /// checked beyond slice indexing.
    #[inline]
    pub fn evaluate(&self, index: usize, point: f64) -> f64 {
        match &self.kind {
            BasisKind::Trig => {
                if index == 0 {
                    return 1.0;
                }
                let k = index.div_ceil(2) as f64;
                let arg = std::f64::consts::TAU * k * point;
                if index % 2 == 1 {
                    std::f64::consts::SQRT_2 * arg.cos()
                } else {
                    std::f64::consts::SQRT_2 * arg.sin()
                }
            }
            BasisKind::Table(values) => values[index][point as usize],
            BasisKind::Custom(f) => f(index, point),
        }
    }

    /// The uniform bound `C` with `sup_{i,t} |e_i(t)| ≤ C`.
    pub fn bound(&self) -> f64 {
        self.bound
    }

    pub fn measure(&self) -> &Measure {
        &self.measure
    }

    /// Largest usable index, `None` when unbounded.
    pub fn max_index(&self) -> Option<usize> {
        self.max_index
    }

    pub fn check_index(&self, index: usize) -> Result<()> {
        match self.max_index {
            Some(max) if index > max => Err(Error::IndexOutOfRange { index, max }),
            _ => Ok(()),
        }
    }

    /// Maximal Gram defect `max |⟨e_i, e_j⟩ - δ_ij|` over `i, j ≤ max_index`.
    pub fn check_orthonormality(
        &self,
        max_index: usize,
        tolerance: f64,
        quadrature: &Quadrature,
    ) -> Result<OrthonormalityReport> {
        self.check_index(max_index)?;
        let nodes = self.measure.nodes(quadrature);
        let table: Vec<Vec<f64>> = (0..=max_index)
            .map(|i| nodes.iter().map(|&(t, _)| self.evaluate(i, t)).collect())
            .collect();
        if let Some(i) = table.iter().position(|row| row.iter().any(|v| !v.is_finite())) {
            return Err(Error::NonFinite(format!("basis function {i} at a quadrature node")));
        }

        let mut max_defect = 0.0_f64;
        let mut worst = (0, 0);
        for i in 0..=max_index {
            for j in i..=max_index {
                let gram = crate::numeric::compensated_sum(
                    nodes
                        .iter()
                        .enumerate()
                        .map(|(k, &(_, w))| w * table[i][k] * table[j][k]),
                );
                if !gram.is_finite() {
                    return Err(Error::NonFinite(format!("Gram entry ({i}, {j})")));
                }
                let defect = (gram - if i == j { 1.0 } else { 0.0 }).abs();
                if defect > max_defect {
                    max_defect = defect;
                    worst = (i, j);
                }
            }
        }
        Ok(OrthonormalityReport {
            max_index,
            max_defect,
            worst_pair: worst,
            tolerance,
            passed: max_defect <= tolerance,
        })
    }

    /// `max_{1 ≤ i ≤ max_index} |E e_i(X*)|`.
    pub fn mean_defect(&self, max_index: usize, quadrature: &Quadrature) -> Result<f64> {
        self.check_index(max_index)?;
        let mut worst = 0.0_f64;
        for i in 1..=max_index {
            let mean = self.measure.integrate(quadrature, |t| self.evaluate(i, t));
            if !mean.is_finite() {
                return Err(Error::NonFinite(format!("mean of basis function {i}")));
            }
            worst = worst.max(mean.abs());
        }
        Ok(worst)
    }

    /// Matrix form of a finite-alphabet basis; `None` for other bases.
    pub fn to_table(&self) -> Option<FiniteBasisTable> {
        match (&self.kind, &self.measure) {
            (BasisKind::Table(values), Measure::Finite { probabilities }) => {
                Some(FiniteBasisTable {
                    probabilities: probabilities.clone(),
                    values: values.clone(),
                })
            }
            _ => None,
        }
    }
}

/// Serialized finite-alphabet basis: `values[i][x] = e_i(x)` plus the law.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FiniteBasisTable {
    pub probabilities: Vec<f64>,
    pub values: Vec<Vec<f64>>,
}

impl FiniteBasisTable {
    /// Rebuilds a basis, re-checking shape, `e_0 ≡ 1` and orthonormality.
    pub fn into_basis(self) -> Result<OrthonormalBasis> {
        validate_probabilities(&self.probabilities)?;
        let d = self.probabilities.len();
        if self.values.len() != d || self.values.iter().any(|r| r.len() != d) {
            return Err(Error::InvalidParameter(format!(
                "basis table must be {d}x{d}"
            )));
        }
        if self.values[0].iter().any(|&v| v != 1.0) {
            return Err(Error::InvalidParameter("row 0 must be the constant 1".into()));
        }
        let bound = self.values.iter().flatten().fold(0.0_f64, |a, v| a.max(v.abs()));
        let basis = OrthonormalBasis {
            kind: BasisKind::Table(self.values),
            measure: Measure::Finite {
                probabilities: self.probabilities,
            },
            bound,
            max_index: Some(d - 1),
        };
        let report = basis.check_orthonormality(d - 1, 1e-10, &Quadrature::default())?;
        if !report.passed {
            return Err(Error::InvalidParameter(format!(
                "basis table is not orthonormal (defect {:e})",
                report.max_defect
            )));
        }
        Ok(basis)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OrthonormalityReport {
    pub max_index: usize,
    pub max_defect: f64,
    pub worst_pair: (usize, usize),
    pub tolerance: f64,
    pub passed: bool,
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::SQRT_2;

    #[test]
    fn trig_basis_values() {
        let b = OrthonormalBasis::trig();
        assert_eq!(b.evaluate(0, 0.37), 1.0);
        assert!((b.evaluate(1, 0.0) - 2f64.sqrt()).abs() < 1e-15);
        assert_eq!(b.evaluate(2, 0.0), 0.0);
        assert!((b.evaluate(2, 0.25) - SQRT_2).abs() < 1e-15);
        assert_eq!(b.bound(), SQRT_2);
        assert_eq!(b.max_index(), None);
    }

    #[test]
    fn trig_cross_product_integrates_to_zero() {
        // Independent rule: composite Simpson with 10^5 intervals.
        let b = OrthonormalBasis::trig();
        let n = 100_000;
        let h = 1.0 / n as f64;
        let f = |t: f64| b.evaluate(1, t) * b.evaluate(2, t);
        let mut s = f(0.0) + f(1.0);
        for k in 1..n {
            s += if k % 2 == 1 { 4.0 } else { 2.0 } * f(k as f64 * h);
        }
        let simpson = s * h / 3.0;
        assert!(simpson.abs() < 1e-12);
        let gl = Measure::Uniform.integrate(&Quadrature::default(), f);
        assert!(gl.abs() < 1e-12);
    }

    #[test]
    fn trig_orthonormal_up_to_index_8() {
        let report = OrthonormalBasis::trig()
            .check_orthonormality(8, 1e-10, &Quadrature::default())
            .unwrap();
        assert!(report.passed, "{report:?}");
        assert!(report.max_defect <= 1e-10);
    }

    #[test]
    fn two_point_gram_schmidt() {
        let b = OrthonormalBasis::finite(&[0.5, 0.5]).unwrap();
        assert_eq!(b.max_index(), Some(1));
        assert!((b.evaluate(1, 0.0) - 1.0).abs() < 1e-15);
        assert!((b.evaluate(1, 1.0) + 1.0).abs() < 1e-15);
        assert!((b.bound() - 1.0).abs() < 1e-15);
        let mean = 0.5 * b.evaluate(1, 0.0) + 0.5 * b.evaluate(1, 1.0);
        assert!(mean.abs() < 1e-15);
    }

    #[test]
    fn four_point_gram_matrix_is_identity() {
        // Dense Gram matrix computed directly from the table.
        let p = [0.25; 4];
        let b = OrthonormalBasis::finite(&p).unwrap();
        for i in 0..4 {
            for j in 0..4 {
                let g: f64 = (0..4)
                    .map(|x| p[x] * b.evaluate(i, x as f64) * b.evaluate(j, x as f64))
                    .sum();
                let expected = if i == j { 1.0 } else { 0.0 };
                assert!((g - expected).abs() < 1e-12, "({i},{j}) = {g}");
            }
        }
    }

    #[test]
    fn nonuniform_three_point_basis() {
        let b = OrthonormalBasis::finite(&[0.2, 0.3, 0.5]).unwrap();
        let report = b.check_orthonormality(2, 1e-12, &Quadrature::default()).unwrap();
        assert!(report.passed, "{report:?}");
        assert!(b.mean_defect(2, &Quadrature::default()).unwrap() < 1e-12);
        for i in 1..3 {
            let first = (0..3).map(|x| b.evaluate(i, x as f64)).find(|v| v.abs() > 1e-14);
            assert!(first.unwrap() > 0.0);
        }
    }

    #[test]
    fn finite_basis_rejects_bad_probabilities() {
        assert!(OrthonormalBasis::finite(&[0.5, 0.0, 0.5]).is_err());
        assert!(OrthonormalBasis::finite(&[0.6, 0.6]).is_err());
        assert!(OrthonormalBasis::finite(&[1.0]).is_err());
    }

    #[test]
    fn misscaled_basis_fails_check() {
        let trig = OrthonormalBasis::trig();
        let doubled = OrthonormalBasis::custom(Measure::Uniform, 2.0 * SQRT_2, Some(8), move |i, t| {
            let v = trig.evaluate(i, t);
            if i == 1 {
                2.0 * v
            } else {
                v
            }
        });
        let report = doubled.check_orthonormality(8, 1e-10, &Quadrature::default()).unwrap();
        assert!(!report.passed);
        assert!(report.max_defect >= 3.0 - 1e-9);
        assert_eq!(report.worst_pair, (1, 1));
    }

    #[test]
    fn non_finite_evaluations_are_reported() {
        let bad = OrthonormalBasis::custom(Measure::Uniform, 1.0, Some(2), |i, t| {
            if i == 2 {
                1.0 / (t - t)
            } else {
                1.0
            }
        });
        assert!(matches!(
            bad.check_orthonormality(2, 1e-10, &Quadrature::coarse()),
            Err(Error::NonFinite(_))
        ));
    }

    #[test]
    fn index_beyond_alphabet_is_rejected() {
        let b = OrthonormalBasis::finite(&[0.5, 0.5]).unwrap();
        assert_eq!(
            b.check_orthonormality(2, 1e-12, &Quadrature::default()).unwrap_err(),
            Error::IndexOutOfRange { index: 2, max: 1 }
        );
    }

    #[test]
    fn trig_mean_zero_and_bound_sweep() {
        use rand::{Rng, SeedableRng};
        let b = OrthonormalBasis::trig();
        assert!(b.mean_defect(16, &Quadrature::default()).unwrap() < 1e-10);
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        for _ in 0..100_000 {
            let i = rng.random_range(0..64usize);
            let t: f64 = rng.random();
            assert!(b.evaluate(i, t).abs() <= b.bound() + 1e-12);
        }
    }

    #[test]
    fn table_round_trip() {
        let b = OrthonormalBasis::finite(&[0.1, 0.2, 0.3, 0.4]).unwrap();
        let table = b.to_table().unwrap();
        let json = serde_json::to_string(&table).unwrap();
        let back: FiniteBasisTable = serde_json::from_str(&json).unwrap();
        let rebuilt = back.into_basis().unwrap();
        for i in 0..4 {
            for x in 0..4 {
                assert_eq!(b.evaluate(i, x as f64), rebuilt.evaluate(i, x as f64));
            }
        }
        assert!(OrthonormalBasis::trig().to_table().is_none());
    }
}
