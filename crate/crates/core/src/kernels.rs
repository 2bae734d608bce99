//! Kernels of order `m`, their series expansion, and canonicality.
//!
//! A kernel is canonical when every one-coordinate conditional expectation
//! `E_{X*_k} f(X*_1, …, X*_m)` vanishes. Kernels assembled from a
//! [`CoefficientTensor`] are canonical by construction since every basis
//! function except `e_0` has zero mean.

use std::fmt;
use std::sync::Arc;

use crate::basis::OrthonormalBasis;
use crate::error::{Error, Result};
use crate::measure::{Measure, Quadrature};
use crate::numeric::{compensated_sum, for_each_tuple, CompensatedSum};
use crate::tensor::CoefficientTensor;

/// Coefficients with `|f| < COEFFICIENT_DROP_THRESHOLD` are discarded by
/// [`coefficients_from_kernel`].
pub const COEFFICIENT_DROP_THRESHOLD: f64 = 1e-12;

type KernelFn = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;

/// A finite series expansion together with the basis it refers to.
#[derive(Debug, Clone)]
pub struct Expansion {
    pub tensor: CoefficientTensor,
    pub basis: OrthonormalBasis,
}

#[derive(Clone)]
pub struct Kernel {
    order: usize,
    measure: Measure,
    eval: KernelFn,
    expansion: Option<Arc<Expansion>>,
}

impl fmt::Debug for Kernel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Kernel")
            .field("order", &self.order)
            .field("measure", &self.measure)
            .field("expansion", &self.expansion.as_ref().map(|e| e.tensor.len()))
            .finish()
    }
}

impl Kernel {
    /// Kernel given by an explicit evaluator; `f` receives exactly `order` points.
    pub fn new(
        order: usize,
        measure: Measure,
        f: impl Fn(&[f64]) -> f64 + Send + Sync + 'static,
    ) -> Self {
        assert!(order >= 1, "kernel order must be positive");
        Kernel {
            order,
            measure,
            eval: Arc::new(f),
            expansion: None,
        }
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn measure(&self) -> &Measure {
        &self.measure
    }

    pub fn expansion(&self) -> Option<&Expansion> {
        self.expansion.as_deref()
    }

    #[inline]
    pub fn eval(&self, points: &[f64]) -> f64 {
        debug_assert_eq!(points.len(), self.order);
        (self.eval)(points)
    }

    /// `factor · f`, keeping the expansion in sync.
    pub fn scaled(&self, factor: f64) -> Kernel {
        let inner = self.eval.clone();
        Kernel {
            order: self.order,
            measure: self.measure.clone(),
            eval: Arc::new(move |t| factor * inner(t)),
            expansion: self.expansion.as_ref().map(|e| {
                Arc::new(Expansion {
                    tensor: e.tensor.scaled(factor),
                    basis: e.basis.clone(),
                })
            }),
        }
    }
}

/// The finite series `Σ f_{i…} e_{i_1}(t_1)⋯e_{i_m}(t_m)` as a kernel.
pub fn kernel_from_coefficients(
    tensor: &CoefficientTensor,
    basis: &OrthonormalBasis,
) -> Result<Kernel> {
    if let Some(max) = tensor.max_index() {
        basis.check_index(max)?;
    }
    let expansion = Arc::new(Expansion {
        tensor: tensor.clone(),
        basis: basis.clone(),
    });
    let inner = expansion.clone();
    Ok(Kernel {
        order: tensor.order(),
        measure: basis.measure().clone(),
        eval: Arc::new(move |t| evaluate_series(&inner.tensor, &inner.basis, t)),
        expansion: Some(expansion),
    })
}

fn evaluate_series(tensor: &CoefficientTensor, basis: &OrthonormalBasis, t: &[f64]) -> f64 {
    let mut acc = CompensatedSum::new();
    for (index, coef) in tensor.iter() {
        let product: f64 = index
            .iter()
            .zip(t)
            .map(|(&i, &x)| basis.evaluate(i, x))
            .product();
        acc.add(coef * product);
    }
    acc.value()
}

/// Expansion coefficients `E[f(X*) ∏ e_{i_k}(X*_k)]` for all multi-indices
/// with components in `1..=max_index`, by tensor-product quadrature.
///
/// The quadrature node count applies per axis, so the cost grows like
/// `nodes^m`.
pub fn coefficients_from_kernel(
    kernel: &Kernel,
    basis: &OrthonormalBasis,
    max_index: usize,
    quadrature: &Quadrature,
) -> Result<CoefficientTensor> {
    if kernel.measure() != basis.measure() {
        return Err(Error::MeasureMismatch(format!(
            "kernel measure {} vs basis measure {}",
            kernel.measure().describe(),
            basis.measure().describe()
        )));
    }
    basis.check_index(max_index)?;
    let m = kernel.order();
    let nodes = basis.measure().nodes(quadrature);
    let n_nodes = nodes.len();
    // weighted[i - 1][node] = w · e_i(t)
    let weighted: Vec<Vec<f64>> = (1..=max_index)
        .map(|i| nodes.iter().map(|&(t, w)| w * basis.evaluate(i, t)).collect())
        .collect();
    let stride = max_index;
    let mut dense = vec![0.0; stride.pow(m as u32)];

    let mut point = vec![0.0; m];
    let mut fvals = vec![0.0; n_nodes];
    let mut failure = None;
    for_each_tuple(n_nodes, m - 1, |outer| {
        if failure.is_some() {
            return;
        }
        for (slot, &node) in outer.iter().enumerate() {
            point[slot] = nodes[node].0;
        }
        for (node, fv) in fvals.iter_mut().enumerate() {
            point[m - 1] = nodes[node].0;
            *fv = kernel.eval(&point);
        }
        if fvals.iter().any(|v| !v.is_finite()) {
            failure = Some(Error::NonFinite(format!("kernel at quadrature node {point:?}")));
            return;
        }
        let inner: Vec<f64> = weighted
            .iter()
            .map(|row| row.iter().zip(&fvals).map(|(a, b)| a * b).sum())
            .collect();
        for_each_tuple(stride, m - 1, |head| {
            let weight: f64 = head
                .iter()
                .zip(outer)
                .map(|(&i, &node)| weighted[i][node])
                .product();
            let base = head.iter().fold(0, |acc, &i| acc * stride + i) * stride;
            for (j, g) in inner.iter().enumerate() {
                dense[base + j] += weight * g;
            }
        });
    });
    if let Some(e) = failure {
        return Err(e);
    }

    let mut entries = Vec::new();
    for_each_tuple(stride, m, |idx| {
        let flat = idx.iter().fold(0, |acc, &i| acc * stride + i);
        let value = dense[flat];
        if value.abs() >= COEFFICIENT_DROP_THRESHOLD {
            entries.push((idx.iter().map(|i| i + 1).collect::<Vec<_>>(), value));
        }
    });
    CoefficientTensor::from_entries(m, entries)
}

/// `max_k max_grid |E_{X*_k} f|`: the largest one-slot conditional
/// expectation with the remaining coordinates ranging over `grid`.
pub fn canonicality_defect(kernel: &Kernel, grid: &[f64], quadrature: &Quadrature) -> Result<f64> {
    let m = kernel.order();
    let nodes = kernel.measure().nodes(quadrature);
    let mut point = vec![0.0; m];
    let mut worst = 0.0_f64;
    let mut failure = None;
    for slot in 0..m {
        for_each_tuple(grid.len(), m - 1, |free| {
            if failure.is_some() {
                return;
            }
            let mut g = free.iter();
            for (k, p) in point.iter_mut().enumerate() {
                if k != slot {
                    *p = grid[*g.next().expect("free coordinate")];
                }
            }
            let mut acc = CompensatedSum::new();
            for &(t, w) in &nodes {
                point[slot] = t;
                acc.add(w * kernel.eval(&point));
            }
            let e = acc.value();
            if !e.is_finite() {
                failure = Some(Error::NonFinite(format!(
                    "conditional expectation in slot {slot} at {point:?}"
                )));
                return;
            }
            worst = worst.max(e.abs());
        });
    }
    match failure {
        Some(e) => Err(e),
        None => Ok(worst),
    }
}

/// [`canonicality_defect`] on the measure's default grid with the default quadrature.
pub fn canonicality_defect_default(kernel: &Kernel) -> Result<f64> {
    canonicality_defect(kernel, &kernel.measure().default_grid(), &Quadrature::default())
}

/// Top-order Hoeffding projection `∏_k (I - E_k) f` with [`Quadrature::coarse`].
pub fn hoeffding_project(kernel: &Kernel) -> Result<Kernel> {
    hoeffding_project_with(kernel, &Quadrature::coarse())
}

/// Top-order Hoeffding projection
/// `π f(t) = Σ_{S ⊆ {1..m}} (-1)^{|S|} (E_S f)(t)`, where `E_S` integrates out
/// the coordinates in `S`.
///
/// The full expectation `E_{1..m} f` is computed once; every other term is
/// integrated on demand, so one evaluation costs `O((1 + nodes)^m)`.
pub fn hoeffding_project_with(kernel: &Kernel, quadrature: &Quadrature) -> Result<Kernel> {
    let m = kernel.order();
    let nodes = Arc::new(kernel.measure().nodes(quadrature));

    let mut full = CompensatedSum::new();
    let mut point = vec![0.0; m];
    for_each_tuple(nodes.len(), m, |tuple| {
        let mut w = 1.0;
        for (k, &node) in tuple.iter().enumerate() {
            point[k] = nodes[node].0;
            w *= nodes[node].1;
        }
        full.add(w * kernel.eval(&point));
    });
    let full = full.value();
    if !full.is_finite() {
        return Err(Error::NonFinite("full expectation of the kernel".into()));
    }
    let sign_full = if m.is_multiple_of(2) { 1.0 } else { -1.0 };

    let inner = kernel.clone();
    let quad_nodes = nodes.clone();
    let projected = move |t: &[f64]| -> f64 {
        let mut total = CompensatedSum::new();
        let mut point = t.to_vec();
        // Proper subsets S of the coordinates, encoded as bitmasks.
        for mask in 0u32..(1u32 << m) - 1 {
            let slots: Vec<usize> = (0..m).filter(|k| mask & (1 << k) != 0).collect();
            let sign = if slots.len().is_multiple_of(2) { 1.0 } else { -1.0 };
            let mut term = CompensatedSum::new();
            for_each_tuple(quad_nodes.len(), slots.len(), |tuple| {
                let mut w = 1.0;
                for (&slot, &node) in slots.iter().zip(tuple) {
                    point[slot] = quad_nodes[node].0;
                    w *= quad_nodes[node].1;
                }
                term.add(w * inner.eval(&point));
            });
            for &slot in &slots {
                point[slot] = t[slot];
            }
            total.add(sign * term.value());
        }
        total.add(sign_full * full);
        total.value()
    };

    let out = Kernel {
        order: m,
        measure: kernel.measure().clone(),
        eval: Arc::new(projected),
        expansion: None,
    };
    // Probe a few points so that integrand blow-ups surface here.
    let probes: Vec<f64> = {
        let grid = kernel.measure().default_grid();
        let step = (grid.len() / 4).max(1);
        grid.into_iter().step_by(step).collect()
    };
    for &p in &probes {
        let v = out.eval(&vec![p; m]);
        if !v.is_finite() {
            return Err(Error::NonFinite(format!("projected kernel at {p}")));
        }
    }
    Ok(out)
}

/// `Σ |f|^p` over the non-zero coefficients, for `p ∈ (0, 1]`.
pub fn coefficient_norm(tensor: &CoefficientTensor, p: f64) -> Result<f64> {
    if !(p > 0.0 && p <= 1.0) {
        return Err(Error::InvalidParameter(format!("norm exponent {p} not in (0, 1]")));
    }
    Ok(tensor.norm_sum(p))
}

/// Mean of `f` under the product law; zero for canonical kernels.
pub fn full_expectation(kernel: &Kernel, quadrature: &Quadrature) -> f64 {
    let m = kernel.order();
    let nodes = kernel.measure().nodes(quadrature);
    let mut point = vec![0.0; m];
    let mut terms = Vec::new();
    for_each_tuple(nodes.len(), m, |tuple| {
        let mut w = 1.0;
        for (k, &node) in tuple.iter().enumerate() {
            point[k] = nodes[node].0;
            w *= nodes[node].1;
        }
        terms.push(w * kernel.eval(&point));
    });
    compensated_sum(terms)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use std::f64::consts::{SQRT_2, TAU};

    fn cos_tensor() -> CoefficientTensor {
        CoefficientTensor::from_entries(2, [(vec![1, 1], 1.0), (vec![2, 2], 1.0)]).unwrap()
    }

    fn cos_kernel() -> Kernel {
        Kernel::new(2, Measure::Uniform, |t| 2.0 * (TAU * (t[0] - t[1])).cos())
    }

    #[test]
    fn series_matches_trig_identity() {
        let k = kernel_from_coefficients(&cos_tensor(), &OrthonormalBasis::trig()).unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        for _ in 0..100 {
            let (s, t): (f64, f64) = (rng.random(), rng.random());
            let expected = 2.0 * (TAU * (s - t)).cos();
            assert!((k.eval(&[s, t]) - expected).abs() < 1e-12);
        }
    }

    #[test]
    fn empty_and_single_term_kernels() {
        let basis = OrthonormalBasis::trig();
        let zero = kernel_from_coefficients(&CoefficientTensor::empty(2), &basis).unwrap();
        assert_eq!(zero.eval(&[0.3, 0.9]), 0.0);
        let single =
            kernel_from_coefficients(&CoefficientTensor::from_entries(1, [(vec![1], 1.0)]).unwrap(), &basis)
                .unwrap();
        for t in [0.0, 0.1, 0.77] {
            assert!((single.eval(&[t]) - SQRT_2 * (TAU * t).cos()).abs() < 1e-15);
        }
    }

    #[test]
    fn out_of_range_index_is_rejected() {
        let basis = OrthonormalBasis::finite(&[0.5, 0.5]).unwrap();
        let t = CoefficientTensor::from_entries(1, [(vec![2], 1.0)]).unwrap();
        assert_eq!(
            kernel_from_coefficients(&t, &basis).unwrap_err(),
            Error::IndexOutOfRange { index: 2, max: 1 }
        );
    }

    #[test]
    fn expansion_recovers_cosine_kernel() {
        let basis = OrthonormalBasis::trig();
        let t = coefficients_from_kernel(&cos_kernel(), &basis, 4, &Quadrature::default()).unwrap();
        assert_eq!(t.len(), 2, "{t:?}");
        assert!((t.get(&[1, 1]) - 1.0).abs() < 1e-9);
        assert!((t.get(&[2, 2]) - 1.0).abs() < 1e-9);
    }

    #[test]
    fn expansion_of_zero_and_product_kernels() {
        let basis = OrthonormalBasis::trig();
        let q = Quadrature::new(64, 4);
        let zero = Kernel::new(2, Measure::Uniform, |_| 0.0);
        assert!(coefficients_from_kernel(&zero, &basis, 4, &q).unwrap().is_empty());

        let b = basis.clone();
        let product = Kernel::new(2, Measure::Uniform, move |t| b.evaluate(1, t[0]) * b.evaluate(2, t[1]));
        let coefs = coefficients_from_kernel(&product, &basis, 4, &q).unwrap();
        assert_eq!(coefs.len(), 1);
        assert!((coefs.get(&[1, 2]) - 1.0).abs() < 1e-9);
    }

    #[test]
    fn expansion_rejects_measure_mismatch() {
        let finite = OrthonormalBasis::finite(&[0.5, 0.5]).unwrap();
        assert!(matches!(
            coefficients_from_kernel(&cos_kernel(), &finite, 1, &Quadrature::coarse()),
            Err(Error::MeasureMismatch(_))
        ));
    }

    #[test]
    fn finite_alphabet_round_trip_order_three() {
        let basis = OrthonormalBasis::finite(&[0.2, 0.3, 0.1, 0.4]).unwrap();
        let tensor = CoefficientTensor::from_entries(
            3,
            [(vec![1, 2, 3], 0.7), (vec![3, 3, 1], -1.2), (vec![2, 1, 1], 0.05)],
        )
        .unwrap();
        let k = kernel_from_coefficients(&tensor, &basis).unwrap();
        let back = coefficients_from_kernel(&k, &basis, 3, &Quadrature::default()).unwrap();
        assert_eq!(back.len(), tensor.len());
        for (idx, v) in tensor.iter() {
            assert!((back.get(idx) - v).abs() < 1e-9);
        }
    }

    #[test]
    fn defect_examples() {
        let grid = Measure::Uniform.default_grid();
        let q = Quadrature::default();
        let canonical = kernel_from_coefficients(&cos_tensor(), &OrthonormalBasis::trig()).unwrap();
        assert!(canonicality_defect(&canonical, &grid, &q).unwrap() <= 1e-10);

        let st = Kernel::new(2, Measure::Uniform, |t| t[0] * t[1]);
        assert!((canonicality_defect(&st, &grid, &q).unwrap() - 0.5).abs() < 1e-13);

        let one = Kernel::new(2, Measure::Uniform, |_| 1.0);
        assert!((canonicality_defect(&one, &grid, &q).unwrap() - 1.0).abs() < 1e-13);
    }

    #[test]
    fn projection_of_product_kernel() {
        let st = Kernel::new(2, Measure::Uniform, |t| t[0] * t[1]);
        let p = hoeffding_project(&st).unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        for _ in 0..50 {
            let (s, t): (f64, f64) = (rng.random(), rng.random());
            assert!((p.eval(&[s, t]) - (s - 0.5) * (t - 0.5)).abs() < 1e-13);
        }
    }

    #[test]
    fn projection_fixes_canonical_kernels_and_kills_constants() {
        let k = cos_kernel();
        let p = hoeffding_project(&k).unwrap();
        for (s, t) in [(0.1, 0.9), (0.33, 0.5), (0.0, 1.0), (0.72, 0.18)] {
            assert!((p.eval(&[s, t]) - k.eval(&[s, t])).abs() < 1e-10);
        }
        let c = Kernel::new(3, Measure::Uniform, |_| 4.2);
        let pc = hoeffding_project(&c).unwrap();
        assert!(pc.eval(&[0.2, 0.4, 0.6]).abs() < 1e-12);
    }

    #[test]
    fn projection_on_finite_alphabet_is_exact() {
        let m = Measure::finite(vec![0.2, 0.5, 0.3]).unwrap();
        let k = Kernel::new(2, m.clone(), |t| (t[0] + 1.0) * (2.0 * t[1] - t[0]).powi(2));
        let p = hoeffding_project(&k).unwrap();
        let d = canonicality_defect(&p, &m.default_grid(), &Quadrature::default()).unwrap();
        assert!(d < 1e-13, "{d}");
    }

    #[test]
    fn projection_reports_non_finite_kernels() {
        let k = Kernel::new(1, Measure::Uniform, |t| 1.0 / (t[0] - t[0]));
        assert!(matches!(hoeffding_project(&k), Err(Error::NonFinite(_))));
    }

    #[test]
    fn norm_exponent_must_be_in_unit_interval() {
        let t = cos_tensor();
        assert_eq!(coefficient_norm(&t, 1.0).unwrap(), 2.0);
        assert_eq!(coefficient_norm(&t, 0.5).unwrap(), 2.0);
        assert!(coefficient_norm(&t, 0.0).is_err());
        assert!(coefficient_norm(&t, 1.5).is_err());
    }

    #[test]
    fn scaled_kernel_keeps_expansion() {
        let k = kernel_from_coefficients(&cos_tensor(), &OrthonormalBasis::trig()).unwrap();
        let k3 = k.scaled(3.0);
        assert_eq!(k3.expansion().unwrap().tensor.get(&[1, 1]), 3.0);
        assert!((k3.eval(&[0.1, 0.2]) - 3.0 * k.eval(&[0.1, 0.2])).abs() < 1e-14);
    }
}
