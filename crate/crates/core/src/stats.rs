//! U- and V-statistics: direct `O(n^m)` sums and series evaluation.
//!
//! With `S_n(i) = n^{-1/2} Σ_j e_i(x_j)` the V-statistic of a finite tensor is
//! `Σ f_{i…} S_n(i_1)⋯S_n(i_m)`. For the U-statistic the off-diagonal sum over
//! pairwise distinct `j_1, …, j_m` is recovered by Möbius inversion on the
//! lattice of set partitions of `{1, …, m}`: each partition contributes
//! `∏_B (-1)^{|B|-1} (|B|-1)!` times the product of mixed power sums
//! `S_n(i_B) = n^{-|B|/2} Σ_j ∏_{k∈B} e_{i_k}(x_j)` over its blocks.

use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};

use crate::basis::OrthonormalBasis;
use crate::error::{Error, Result};
use crate::kernels::Kernel;
use crate::measure::Measure;
use crate::numeric::{compensated_sum, CompensatedSum};
use crate::tensor::CoefficientTensor;

/// Which statistic to evaluate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum StatKind {
    U,
    V,
}

/// Where a sample came from.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Provenance {
    pub process: String,
    pub seed: u64,
}

/// Observations `x_1, …, x_n`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Sample {
    pub points: Vec<f64>,
    pub provenance: Option<Provenance>,
}

impl Sample {
    pub fn new(points: Vec<f64>) -> Self {
        Sample {
            points,
            provenance: None,
        }
    }

    pub fn with_provenance(points: Vec<f64>, process: impl Into<String>, seed: u64) -> Self {
        Sample {
            points,
            provenance: Some(Provenance {
                process: process.into(),
                seed,
            }),
        }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Checks that every point lies in the support of `measure`.
    pub fn validate(&self, measure: &Measure) -> Result<()> {
        match self.points.iter().position(|&x| !measure.contains(x)) {
            Some(j) => Err(Error::InvalidParameter(format!(
                "sample point {j} ({}) is outside {}",
                self.points[j],
                measure.describe()
            ))),
            None => Ok(()),
        }
    }

    /// Parses one point per line; blank lines and `#` comments are skipped.
    pub fn parse(text: &str) -> Result<Self> {
        let mut points = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let v: f64 = line.parse().map_err(|_| {
                Error::InvalidParameter(format!("line {}: cannot parse {line:?}", lineno + 1))
            })?;
            points.push(v);
        }
        Ok(Sample::new(points))
    }

    /// One point per line, shortest round-trip representation.
    pub fn to_text(&self) -> String {
        let mut out = String::with_capacity(self.points.len() * 20);
        for p in &self.points {
            out.push_str(&format!("{p:?}\n"));
        }
        out
    }
}

/// Caps for the direct evaluators, which exist as oracles.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct NaiveLimits {
    pub max_order: usize,
    pub max_n: usize,
}

impl Default for NaiveLimits {
    fn default() -> Self {
        NaiveLimits {
            max_order: 4,
            max_n: 200,
        }
    }
}

impl NaiveLimits {
    pub fn allows(&self, n: usize, m: usize) -> bool {
        n <= self.max_n && m <= self.max_order
    }

    fn check(&self, n: usize, m: usize) -> Result<()> {
        if m > self.max_order {
            return Err(Error::NaiveLimit(format!("order {m} > {}", self.max_order)));
        }
        if n > self.max_n {
            return Err(Error::NaiveLimit(format!("sample size {n} > {}", self.max_n)));
        }
        Ok(())
    }
}

fn naive_sum(kernel: &Kernel, sample: &Sample, distinct_only: bool) -> f64 {
    let m = kernel.order();
    let x = &sample.points;
    let mut point = vec![0.0; m];
    let mut acc = CompensatedSum::new();
    crate::numeric::for_each_tuple(x.len(), m, |j| {
        if distinct_only && (1..m).any(|a| j[..a].contains(&j[a])) {
            return;
        }
        for (p, &jj) in point.iter_mut().zip(j) {
            *p = x[jj];
        }
        acc.add(kernel.eval(&point));
    });
    acc.value()
}

/// `n^{-m/2} Σ_{j ∈ {1..n}^m} f(x_{j_1}, …, x_{j_m})`.
pub fn v_statistic_naive(kernel: &Kernel, sample: &Sample) -> Result<f64> {
    v_statistic_naive_with(kernel, sample, NaiveLimits::default())
}

pub fn v_statistic_naive_with(kernel: &Kernel, sample: &Sample, limits: NaiveLimits) -> Result<f64> {
    let (n, m) = (sample.len(), kernel.order());
    if n == 0 {
        return Err(Error::EmptySample);
    }
    limits.check(n, m)?;
    Ok(naive_sum(kernel, sample, false) * (n as f64).powf(-(m as f64) / 2.0))
}

/// `n^{-m/2} Σ` over pairwise distinct index tuples; zero when `n < m`.
pub fn u_statistic_naive(kernel: &Kernel, sample: &Sample) -> Result<f64> {
    u_statistic_naive_with(kernel, sample, NaiveLimits::default())
}

pub fn u_statistic_naive_with(kernel: &Kernel, sample: &Sample, limits: NaiveLimits) -> Result<f64> {
    let (n, m) = (sample.len(), kernel.order());
    if n < m {
        return Ok(0.0);
    }
    limits.check(n, m)?;
    Ok(naive_sum(kernel, sample, true) * (n as f64).powf(-(m as f64) / 2.0))
}

/// `(n-m)!/n! Σ_{distinct} f`, the average over ordered distinct tuples.
pub fn u_hoeffding_normalized(kernel: &Kernel, sample: &Sample) -> Result<f64> {
    u_hoeffding_normalized_with(kernel, sample, NaiveLimits::default())
}

pub fn u_hoeffding_normalized_with(
    kernel: &Kernel,
    sample: &Sample,
    limits: NaiveLimits,
) -> Result<f64> {
    let (n, m) = (sample.len(), kernel.order());
    if n < m {
        return Err(Error::SampleTooSmall { n, m });
    }
    limits.check(n, m)?;
    let falling: f64 = (0..m).map(|k| (n - k) as f64).product();
    Ok(naive_sum(kernel, sample, true) / falling)
}

/// A normalized partial sum; `constant_index` flags use of `e_0 ≡ 1`, which
/// never appears in a canonical expansion.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PartialSum {
    pub value: f64,
    pub constant_index: bool,
}

/// `S_n(i) = n^{-1/2} Σ_j e_i(x_j)`.
pub fn s_n(index: usize, basis: &OrthonormalBasis, sample: &Sample) -> Result<PartialSum> {
    if sample.is_empty() {
        return Err(Error::EmptySample);
    }
    basis.check_index(index)?;
    let n = sample.len() as f64;
    let sum = compensated_sum(sample.points.iter().map(|&x| basis.evaluate(index, x)));
    Ok(PartialSum {
        value: sum / n.sqrt(),
        constant_index: index == 0,
    })
}

/// `S_n(i_1, …, i_k) = n^{-k/2} Σ_j e_{i_1}(x_j)⋯e_{i_k}(x_j)`.
pub fn mixed_power_sum(indices: &[usize], basis: &OrthonormalBasis, sample: &Sample) -> Result<f64> {
    if indices.is_empty() {
        return Err(Error::InvalidParameter("mixed power sum needs k ≥ 1".into()));
    }
    if sample.is_empty() {
        return Err(Error::EmptySample);
    }
    for &i in indices {
        basis.check_index(i)?;
    }
    let n = sample.len() as f64;
    let sum = compensated_sum(
        sample
            .points
            .iter()
            .map(|&x| indices.iter().map(|&i| basis.evaluate(i, x)).product::<f64>()),
    );
    Ok(sum * n.powf(-(indices.len() as f64) / 2.0))
}

/// Basis evaluations `e_i(x_j)` for the indices of one tensor and one sample.
///
/// Built once per sample, then read-only.
#[derive(Debug, Clone)]
pub struct SeriesCache {
    n: usize,
    slot: BTreeMap<usize, usize>,
    values: Vec<Vec<f64>>,
    sums: Vec<f64>,
}

impl SeriesCache {
    pub fn build(indices: &[usize], basis: &OrthonormalBasis, sample: &Sample) -> Result<Self> {
        if sample.is_empty() {
            return Err(Error::EmptySample);
        }
        let n = sample.len();
        let norm = (n as f64).sqrt();
        let mut slot = BTreeMap::new();
        let mut values = Vec::with_capacity(indices.len());
        let mut sums = Vec::with_capacity(indices.len());
        for &i in indices {
            if slot.contains_key(&i) {
                continue;
            }
            basis.check_index(i)?;
            let row: Vec<f64> = sample.points.iter().map(|&x| basis.evaluate(i, x)).collect();
            sums.push(compensated_sum(row.iter().copied()) / norm);
            slot.insert(i, values.len());
            values.push(row);
        }
        Ok(SeriesCache {
            n,
            slot,
            values,
            sums,
        })
    }

    pub fn for_tensor(tensor: &CoefficientTensor, basis: &OrthonormalBasis, sample: &Sample) -> Result<Self> {
        SeriesCache::build(&tensor.distinct_indices(), basis, sample)
    }

    /// Cached `S_n(i)`.
    pub fn s(&self, index: usize) -> f64 {
        self.sums[self.slot[&index]]
    }

    fn mixed(&self, indices: &[usize]) -> f64 {
        if indices.len() == 1 {
            return self.s(indices[0]);
        }
        let rows: Vec<&[f64]> = indices.iter().map(|i| self.values[self.slot[i]].as_slice()).collect();
        let sum = compensated_sum((0..self.n).map(|j| rows.iter().map(|r| r[j]).product::<f64>()));
        sum * (self.n as f64).powf(-(indices.len() as f64) / 2.0)
    }

    pub fn v_statistic(&self, tensor: &CoefficientTensor) -> f64 {
        let mut acc = CompensatedSum::new();
        for (index, coef) in tensor.iter() {
            acc.add(coef * index.iter().map(|&i| self.s(i)).product::<f64>());
        }
        acc.value()
    }

    pub fn u_statistic(&self, tensor: &CoefficientTensor) -> f64 {
        let m = tensor.order();
        if self.n < m {
            return 0.0;
        }
        let partitions = set_partitions(m);
        let mut mixed_cache: HashMap<Vec<usize>, f64> = HashMap::new();
        let mut acc = CompensatedSum::new();
        for (index, coef) in tensor.iter() {
            let mut diag = CompensatedSum::new();
            for p in &partitions {
                let mut product = p.weight;
                for block in &p.blocks {
                    let mut key: Vec<usize> = block.iter().map(|&k| index[k]).collect();
                    key.sort_unstable();
                    let v = *mixed_cache.entry(key).or_insert_with_key(|k| self.mixed(k));
                    product *= v;
                }
                diag.add(product);
            }
            acc.add(coef * diag.value());
        }
        acc.value()
    }
}

/// `Σ f_{i…} S_n(i_1)⋯S_n(i_m)` with cached partial sums.
pub fn v_statistic_series(
    tensor: &CoefficientTensor,
    basis: &OrthonormalBasis,
    sample: &Sample,
) -> Result<f64> {
    Ok(SeriesCache::for_tensor(tensor, basis, sample)?.v_statistic(tensor))
}

/// U-statistic of a finite tensor via diagonal inclusion–exclusion; zero when `n < m`.
pub fn u_statistic_series(
    tensor: &CoefficientTensor,
    basis: &OrthonormalBasis,
    sample: &Sample,
) -> Result<f64> {
    if sample.len() < tensor.order() {
        return Ok(0.0);
    }
    Ok(SeriesCache::for_tensor(tensor, basis, sample)?.u_statistic(tensor))
}

/// A set partition of `{0, …, m-1}` with its Möbius weight relative to the
/// finest partition.
#[derive(Debug, Clone, PartialEq)]
pub struct Partition {
    pub blocks: Vec<Vec<usize>>,
    pub weight: f64,
}

/// All set partitions of `{0, …, m-1}` (Bell(m) of them), generated from
/// restricted growth strings.
pub fn set_partitions(m: usize) -> Vec<Partition> {
    fn recurse(k: usize, m: usize, labels: &mut Vec<usize>, out: &mut Vec<Partition>) {
        if k == m {
            let n_blocks = labels.iter().max().map_or(0, |x| x + 1);
            let mut blocks = vec![Vec::new(); n_blocks];
            for (elem, &b) in labels.iter().enumerate() {
                blocks[b].push(elem);
            }
            let weight = blocks
                .iter()
                .map(|b| {
                    let size = b.len();
                    let fact: f64 = (1..size).map(|x| x as f64).product();
                    if size % 2 == 1 {
                        fact
                    } else {
                        -fact
                    }
                })
                .product();
            out.push(Partition { blocks, weight });
            return;
        }
        let next = labels.iter().max().map_or(0, |x| x + 1);
        for b in 0..=next {
            labels.push(b);
            recurse(k + 1, m, labels, out);
            labels.pop();
        }
    }
    let mut out = Vec::new();
    recurse(0, m, &mut Vec::with_capacity(m), &mut out);
    out
}
