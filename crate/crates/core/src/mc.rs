//! Monte Carlo tail estimation and envelope verification.
//!
//! Replication `r` draws its sample from the stream keyed by
//! `(master seed, process id)` with stream index `r`; workers only add up
//! integer counts, so results do not depend on the number of workers.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::function::beta::{beta_reg, inv_beta_reg};
use statrs::function::gamma::ln_gamma;

use crate::basis::OrthonormalBasis;
use crate::bounds::Envelope;
use crate::error::{Error, Result};
use crate::kernels::Kernel;
use crate::mixing::MixingProcess;
use crate::numeric::CompensatedSum;
use crate::stats::{self, NaiveLimits, Sample, SeriesCache, StatKind};

/// One-sided confidence level of the reported upper limits.
pub const CONFIDENCE_LEVEL: f64 = 0.99;

/// Which exceedance event is counted.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TailKind {
    /// `|s| > x`.
    Abs,
    /// `s ≥ x`.
    Upper,
}

impl TailKind {
    fn exceeds(self, s: f64, x: f64) -> bool {
        match self {
            TailKind::Abs => s.abs() > x,
            TailKind::Upper => s >= x,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurveMeta {
    pub process: String,
    pub statistic: String,
    pub n: usize,
    pub master_seed: u64,
    pub tail: TailKind,
}

/// Empirical exceedance frequencies on a threshold grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TailCurve {
    pub stat_kind: StatKind,
    pub x_grid: Vec<f64>,
    pub counts: Vec<u64>,
    pub reps: u64,
    pub estimates: Vec<f64>,
    pub ci_upper: Vec<f64>,
    pub bound: Option<Vec<f64>>,
    pub meta: CurveMeta,
}

/// Exact one-sided upper confidence limit for a binomial proportion:
/// the `level` quantile of `Beta(k + 1, n - k)`, or 1 when `k = n`.
pub fn clopper_pearson_upper(k: u64, n: u64, level: f64) -> f64 {
    assert!(n > 0 && k <= n, "need 0 ≤ k ≤ n, n > 0");
    if k == n {
        return 1.0;
    }
    let (a, b) = ((k + 1) as f64, (n - k) as f64);
    // inv_beta_reg loses about 7 digits for tiny quantiles; polish with Newton.
    let ln_beta = ln_gamma(a) + ln_gamma(b) - ln_gamma(a + b);
    let mut p = inv_beta_reg(a, b, level).clamp(f64::MIN_POSITIVE, 1.0);
    for _ in 0..8 {
        if p >= 1.0 {
            break;
        }
        let density = ((a - 1.0) * p.ln() + (b - 1.0) * (-p).ln_1p() - ln_beta).exp();
        if !(density > 0.0 && density.is_finite()) {
            break;
        }
        let step = (beta_reg(a, b, p) - level) / density;
        let next = (p - step).clamp(0.5 * p, 0.5 * (1.0 + p));
        if (next - p).abs() <= 1e-15 * p {
            p = next;
            break;
        }
        p = next;
    }
    p.clamp(0.0, 1.0)
}

/// Smallest bound a run of `reps` replications can confirm: the upper
/// limit at zero exceedances. Grid points with a lower bound are reported
/// as violations even when no exceedance occurs.
pub fn detection_floor(reps: u64) -> f64 {
    clopper_pearson_upper(0, reps, CONFIDENCE_LEVEL)
}

fn validate_grid(grid: &[f64]) -> Result<()> {
    if grid.is_empty() {
        return Err(Error::GridMismatch("threshold grid is empty".into()));
    }
    if grid.iter().any(|x| !(x.is_finite() && *x >= 0.0)) {
        return Err(Error::GridMismatch("thresholds must be finite and nonnegative".into()));
    }
    if grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::GridMismatch("thresholds must be strictly increasing".into()));
    }
    Ok(())
}

fn thread_pool(workers: usize) -> Result<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| Error::InvalidParameter(format!("cannot start worker pool: {e}")))
}

/// Settings shared by every Monte Carlo routine.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RunSettings {
    pub n: usize,
    pub reps: u64,
    pub master_seed: u64,
    pub workers: usize,
}

/// Counts exceedances of `statistic(sample)` over `reps` replications.
pub fn run_experiment<F>(
    process: &MixingProcess,
    settings: RunSettings,
    grid: &[f64],
    tail: TailKind,
    stat_kind: StatKind,
    statistic_name: &str,
    statistic: F,
) -> Result<TailCurve>
where
    F: Fn(&Sample) -> Result<f64> + Sync,
{
    validate_grid(grid)?;
    if settings.reps == 0 {
        return Err(Error::InvalidParameter("need at least one replication".into()));
    }
    let pid = crate::rng::process_id(process.id());
    let pool = thread_pool(settings.workers)?;
    let counts = pool.install(|| {
        (0..settings.reps)
            .into_par_iter()
            .try_fold(
                || vec![0u64; grid.len()],
                |mut acc, r| -> Result<Vec<u64>> {
                    let mut rng = crate::rng::replication(settings.master_seed, pid, r);
                    let sample = Sample::new(process.sample_points(&mut rng, settings.n));
                    let s = statistic(&sample)?;
                    if !s.is_finite() {
                        return Err(Error::NonFinite(format!("statistic in replication {r}")));
                    }
                    for (slot, &x) in acc.iter_mut().zip(grid) {
                        if tail.exceeds(s, x) {
                            *slot += 1;
                        } else {
                            // Increasing grid: no larger threshold is exceeded either.
                            break;
                        }
                    }
                    Ok(acc)
                },
            )
            .try_reduce(
                || vec![0u64; grid.len()],
                |mut a, b| {
                    a.iter_mut().zip(&b).for_each(|(x, y)| *x += y);
                    Ok(a)
                },
            )
    })?;
    let reps = settings.reps;
    let estimates = counts.iter().map(|&c| c as f64 / reps as f64).collect();
    let ci_upper = counts
        .iter()
        .map(|&c| clopper_pearson_upper(c, reps, CONFIDENCE_LEVEL))
        .collect();
    Ok(TailCurve {
        stat_kind,
        x_grid: grid.to_vec(),
        counts,
        reps,
        estimates,
        ci_upper,
        bound: None,
        meta: CurveMeta {
            process: process.id().to_string(),
            statistic: statistic_name.to_string(),
            n: settings.n,
            master_seed: settings.master_seed,
            tail,
        },
    })
}

/// Tail curve of `|U_n|` or `|V_n|` for a kernel. Kernels with a finite
/// expansion use the series path; others fall back to direct summation
/// within the default naive limits.
pub fn run_tail_experiment(
    process: &MixingProcess,
    kernel: &Kernel,
    stat_kind: StatKind,
    settings: RunSettings,
    grid: &[f64],
) -> Result<TailCurve> {
    let name = match stat_kind {
        StatKind::U => "U_n",
        StatKind::V => "V_n",
    };
    match kernel.expansion() {
        Some(expansion) => {
            let (tensor, basis) = (&expansion.tensor, &expansion.basis);
            let indices = tensor.distinct_indices();
            run_experiment(process, settings, grid, TailKind::Abs, stat_kind, name, |sample| {
                if sample.is_empty() {
                    return Err(Error::EmptySample);
                }
                let cache = SeriesCache::build(&indices, basis, sample)?;
                Ok(match stat_kind {
                    StatKind::V => cache.v_statistic(tensor),
                    StatKind::U => cache.u_statistic(tensor),
                })
            })
        }
        None => {
            let limits = NaiveLimits::default();
            if !limits.allows(settings.n, kernel.order()) {
                return Err(Error::NaiveLimit(format!(
                    "kernel has no finite expansion and n={}, m={} exceed the direct-summation limits",
                    settings.n,
                    kernel.order()
                )));
            }
            run_experiment(process, settings, grid, TailKind::Abs, stat_kind, name, |sample| {
                match stat_kind {
                    StatKind::V => stats::v_statistic_naive(kernel, sample),
                    StatKind::U => stats::u_statistic_naive(kernel, sample),
                }
            })
        }
    }
}

impl TailCurve {
    /// Evaluates `envelope` on the grid and stores it as the bound column.
    pub fn with_bound(mut self, envelope: &dyn Envelope) -> Self {
        self.bound = Some(self.x_grid.iter().map(|&x| envelope.bound(x)).collect());
        self
    }

    /// CSV with a provenance comment line and the header
    /// `x,count,estimate,ci_upper,bound`; reals use 17 significant digits.
    pub fn to_csv(&self, config_hash: &str) -> String {
        let mut out = format!(
            "# config_hash={config_hash} master_seed={} version={} process={} statistic={} n={} reps={}\n",
            self.meta.master_seed,
            crate::VERSION,
            self.meta.process,
            self.meta.statistic,
            self.meta.n,
            self.reps
        );
        out.push_str("x,count,estimate,ci_upper,bound\n");
        for i in 0..self.x_grid.len() {
            let bound = self
                .bound
                .as_ref()
                .map(|b| format!("{:.16e}", b[i]))
                .unwrap_or_default();
            out.push_str(&format!(
                "{:.16e},{},{:.16e},{:.16e},{}\n",
                self.x_grid[i], self.counts[i], self.estimates[i], self.ci_upper[i], bound
            ));
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    pub x: f64,
    pub count: u64,
    pub estimate: f64,
    pub ci_upper: f64,
    pub bound: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnvelopeReport {
    pub points: usize,
    pub violations: Vec<Violation>,
    /// `max estimate / bound` over grid points with a positive bound.
    pub max_ratio: f64,
    pub max_ratio_x: Option<f64>,
    /// Grid points whose bound lies below [`detection_floor`].
    pub unresolvable: Vec<f64>,
    pub passed: bool,
}

/// Flags every grid point whose upper confidence limit exceeds the stored bound.
pub fn verify_envelope(curve: &TailCurve) -> Result<EnvelopeReport> {
    let bound = curve
        .bound
        .as_ref()
        .ok_or_else(|| Error::GridMismatch("curve has no bound column".into()))?;
    let len = curve.x_grid.len();
    if bound.len() != len || curve.counts.len() != len || curve.ci_upper.len() != len {
        return Err(Error::GridMismatch(format!(
            "grid has {len} points but bound has {}",
            bound.len()
        )));
    }
    let mut violations = Vec::new();
    let mut max_ratio = 0.0_f64;
    let mut max_ratio_x = None;
    let floor = detection_floor(curve.reps);
    let unresolvable = (0..len)
        .filter(|&i| bound[i] < floor)
        .map(|i| curve.x_grid[i])
        .collect();
    #[allow(clippy::needless_range_loop)]
    for i in 0..len {
        if curve.ci_upper[i] > bound[i] {
            violations.push(Violation {
                x: curve.x_grid[i],
                count: curve.counts[i],
                estimate: curve.estimates[i],
                ci_upper: curve.ci_upper[i],
                bound: bound[i],
            });
        }
        if bound[i] > 0.0 {
            let ratio = curve.estimates[i] / bound[i];
            if ratio > max_ratio || max_ratio_x.is_none() {
                max_ratio = max_ratio.max(ratio);
                max_ratio_x = Some(curve.x_grid[i]);
            }
        }
    }
    Ok(EnvelopeReport {
        points: len,
        passed: violations.is_empty(),
        violations,
        max_ratio,
        max_ratio_x,
        unresolvable,
    })
}

/// Monte Carlo mean of `∏_j S_n(i_j)` with its standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MomentEstimate {
    pub estimate: f64,
    pub std_error: f64,
    pub reps: u64,
}

pub fn estimate_mixed_moment(
    process: &MixingProcess,
    basis: &OrthonormalBasis,
    indices: &[usize],
    settings: RunSettings,
) -> Result<MomentEstimate> {
    if indices.is_empty() || !indices.len().is_multiple_of(2) {
        return Err(Error::InvalidParameter(format!(
            "need an even, nonzero number of indices, got {}",
            indices.len()
        )));
    }
    if settings.reps < 100 {
        return Err(Error::InvalidParameter(format!(
            "need at least 100 replications, got {}",
            settings.reps
        )));
    }
    let pid = crate::rng::process_id(process.id());
    let pool = thread_pool(settings.workers)?;
    let values: Vec<f64> = pool.install(|| {
        (0..settings.reps)
            .into_par_iter()
            .map(|r| -> Result<f64> {
                let mut rng = crate::rng::replication(settings.master_seed, pid, r);
                let sample = Sample::new(process.sample_points(&mut rng, settings.n));
                let cache = SeriesCache::build(indices, basis, &sample)?;
                Ok(indices.iter().map(|&i| cache.s(i)).product())
            })
            .collect::<Result<Vec<f64>>>()
    })?;
    let reps = values.len() as f64;
    let mean: f64 = values.iter().copied().collect::<CompensatedSum>().value() / reps;
    let var: f64 = values
        .iter()
        .map(|v| (v - mean).powi(2))
        .collect::<CompensatedSum>()
        .value()
        / (reps - 1.0);
    Ok(MomentEstimate {
        estimate: mean,
        std_error: (var / reps).sqrt(),
        reps: settings.reps,
    })
}
