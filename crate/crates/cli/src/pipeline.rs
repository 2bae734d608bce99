//! Builds library objects from a [`Config`] and runs experiments.

use anyhow::{anyhow, bail, Context, Result};
use canonstat::bounds::Decay;
use canonstat::kernels::{full_expectation, kernel_from_coefficients};
use canonstat::mc::{self, EnvelopeReport, RunSettings, TailCurve};
use canonstat::mixing::{check_condition, ConditionParams, ConditionReport, DriverMap};
use canonstat::stats::{self, SeriesCache};
use canonstat::{
    BoundCertificate, CoefficientTensor, Condition, Kernel, MarkovChain, Measure, MixingProcess,
    OrthonormalBasis, PhiProfile, Quadrature, Sample, StatKind,
};
use serde::Serialize;

use crate::config::{
    BasisKind, BoundSpec, ChainSpec, Config, ExperimentSpec, KernelFunction, ProcessSpec, Statistic,
};

fn measure_from(alphabet: &Option<Vec<f64>>) -> Result<Measure> {
    Ok(match alphabet {
        None => Measure::Uniform,
        Some(p) => Measure::finite(p.clone()).context("process.alphabet")?,
    })
}

fn chain_from(spec: &ChainSpec) -> Result<MarkovChain> {
    match (&spec.transition, spec.lambda) {
        (Some(t), None) => MarkovChain::new(t.clone()).context("process.transition"),
        (None, Some(l)) => MarkovChain::two_state(l).context("process.lambda"),
        _ => bail!("process: give exactly one of `transition`, `lambda`"),
    }
}

pub fn build_process(config: &Config) -> Result<MixingProcess> {
    Ok(match &config.process {
        ProcessSpec::Iid { alphabet } => MixingProcess::iid(measure_from(alphabet)?),
        ProcessSpec::MDependent { window, alphabet } => {
            MixingProcess::m_dependent(*window, DriverMap::SumMod, measure_from(alphabet)?)
                .context("process.window")?
        }
        ProcessSpec::Markov { chain } => MixingProcess::markov(chain_from(chain)?),
        ProcessSpec::JitteredMarkov { chain } => {
            MixingProcess::jittered_markov(chain_from(chain)?).context("process.transition")?
        }
    })
}

pub fn build_basis(config: &Config, process: &MixingProcess) -> Result<OrthonormalBasis> {
    match config.basis.kind {
        BasisKind::Trig => {
            if config.basis.probabilities.is_some() {
                bail!("basis.probabilities applies to finite bases only");
            }
            if process.stationary_law() != &Measure::Uniform {
                bail!("basis.kind = \"trig\" needs a process with uniform marginal; use \"finite\"");
            }
            Ok(OrthonormalBasis::trig())
        }
        BasisKind::Finite => {
            let p = match (&config.basis.probabilities, process.stationary_law()) {
                (Some(p), _) => p.clone(),
                (None, Measure::Finite { probabilities }) => probabilities.clone(),
                (None, Measure::Uniform) => bail!("basis.probabilities is required for a uniform-marginal process"),
            };
            OrthonormalBasis::finite(&p).context("basis.probabilities")
        }
    }
}

/// Tensor, or `None` for function kernels.
pub fn build_tensor(config: &Config) -> Result<Option<CoefficientTensor>> {
    let kernel = config.kernel.as_ref().ok_or_else(|| anyhow!("missing [kernel] section"))?;
    match (&kernel.entries, kernel.function) {
        (Some(entries), None) => {
            let order = match (kernel.order, entries.first()) {
                (Some(m), _) => m,
                (None, Some(e)) => e.index.len(),
                (None, None) => bail!("kernel.entries is empty and kernel.order is not given"),
            };
            let tensor =
                CoefficientTensor::from_entries(order, entries.iter().map(|e| (e.index.clone(), e.value)))
                    .context("kernel.entries")?;
            Ok(Some(tensor))
        }
        (None, Some(_)) => Ok(None),
        _ => bail!("kernel: give exactly one of `tensor`, `entries`, `function`"),
    }
}

pub fn build_kernel(config: &Config, basis: &OrthonormalBasis) -> Result<Kernel> {
    if let Some(tensor) = build_tensor(config)? {
        return kernel_from_coefficients(&tensor, basis).context("kernel.entries");
    }
    let function = config
        .kernel
        .as_ref()
        .and_then(|k| k.function)
        .expect("build_tensor checked the kernel section");
    if basis.measure() != &Measure::Uniform {
        bail!("kernel.function kernels are defined on [0, 1]");
    }
    Ok(match function {
        KernelFunction::Product => Kernel::new(2, Measure::Uniform, |t| t[0] * t[1]),
        KernelFunction::ExpSum => Kernel::new(2, Measure::Uniform, |t| (t[0] + t[1]).exp()),
    })
}

fn require_tensor(config: &Config) -> Result<CoefficientTensor> {
    build_tensor(config)?.ok_or_else(|| anyhow!("this command needs a coefficient tensor (kernel.entries or kernel.tensor)"))
}

/// Gaussian-type decay envelope: from the config, or the exact one for
/// processes with finitely many nonzero φ.
fn decay_for(bound: &BoundSpec, process: &MixingProcess) -> Result<Decay> {
    match (bound.c0, bound.c1) {
        (Some(c0), Some(c1)) => Ok(Decay { c0, c1 }),
        (None, None) => match process.phi_profile() {
            PhiProfile::Independent => Ok(Decay { c0: 1.0, c1: 1.0 }),
            PhiProfile::Window { window } => Ok(Decay {
                c0: ((window * window) as f64).exp(),
                c1: 1.0,
            }),
            _ => bail!("bound.c0 and bound.c1 are required: φ of this process has no default Gaussian envelope"),
        },
        _ => bail!("bound: give both `c0` and `c1` or neither"),
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct CertifiedBound {
    pub certificate: BoundCertificate,
    pub condition_report: Option<ConditionReport>,
}

pub fn build_certificate(config: &Config, process: &MixingProcess, basis: &OrthonormalBasis) -> Result<CertifiedBound> {
    let bound = config.bound.as_ref().ok_or_else(|| anyhow!("missing [bound] section"))?;
    let c = basis.bound();
    match bound.condition {
        Condition::A => {
            let tensor = require_tensor(config)?;
            let decay = decay_for(bound, process)?;
            let report = check_condition(process, &tensor, ConditionParams::A { c0: decay.c0, c1: decay.c1 })?;
            if !report.passed {
                bail!("condition A fails for this process: {}", report.message);
            }
            let aggregates = process.phi_profile().aggregates()?;
            let cap = bound.moment_cap.unwrap_or(canonstat::bounds::INTEGER_N_CAP);
            let certificate = BoundCertificate::condition_a(&tensor, c, &aggregates, Some(decay), cap)?;
            Ok(CertifiedBound {
                certificate,
                condition_report: Some(report),
            })
        }
        Condition::B => {
            let tensor = require_tensor(config)?;
            let epsilon = bound.epsilon.ok_or_else(|| anyhow!("bound.epsilon is required for condition B"))?;
            let report = check_condition(process, &tensor, ConditionParams::B { epsilon })?;
            if !report.passed {
                bail!("condition B fails for this process: {}", report.message);
            }
            let aggregates = process.phi_profile().aggregates()?;
            let certificate = BoundCertificate::condition_b(&tensor, c, epsilon, &aggregates)?;
            Ok(CertifiedBound {
                certificate,
                condition_report: Some(report),
            })
        }
        Condition::Dedecker => {
            let tensor = require_tensor(config)?;
            if tensor.order() != 1 {
                bail!("the partial-sum bound needs an order-one tensor, got order {}", tensor.order());
            }
            let n = experiment(config)?.n;
            let phi: Vec<f64> = (1..n).map(|k| process.phi_upper(k)).collect();
            let summand_bound = c * tensor.norm_sum(1.0);
            Ok(CertifiedBound {
                certificate: BoundCertificate::dedecker(n, summand_bound, &phi)?,
                condition_report: None,
            })
        }
        Condition::Hoeffding1963 => {
            if !matches!(process.phi_profile(), PhiProfile::Independent) {
                bail!("the bounded-kernel inequality needs an iid process");
            }
            let (a, b) = match (bound.a, bound.b) {
                (Some(a), Some(b)) => (a, b),
                _ => bail!("bound.a and bound.b (kernel range) are required for hoeffding1963"),
            };
            let m = build_kernel(config, basis)?.order();
            let n = experiment(config)?.n;
            Ok(CertifiedBound {
                certificate: BoundCertificate::hoeffding_1963(n, m, a, b)?,
                condition_report: None,
            })
        }
    }
}

pub fn experiment(config: &Config) -> Result<&ExperimentSpec> {
    config.experiment.as_ref().ok_or_else(|| anyhow!("missing [experiment] section"))
}

/// Runs the configured Monte Carlo experiment on `workers` threads.
pub fn run_curve(config: &Config, workers: usize) -> Result<TailCurve> {
    let exp = experiment(config)?;
    let process = build_process(config)?;
    let basis = build_basis(config, &process)?;
    let grid = exp.grid.points()?;
    let settings = RunSettings {
        n: exp.n,
        reps: exp.reps,
        master_seed: exp.seed,
        workers,
    };
    let curve = match exp.statistic {
        Statistic::V | Statistic::U => {
            let kernel = build_kernel(config, &basis)?;
            let kind = if exp.statistic == Statistic::V { StatKind::V } else { StatKind::U };
            if exp.tail_kind() != canonstat::TailKind::Abs {
                bail!("experiment.tail must be \"abs\" for U and V statistics");
            }
            mc::run_tail_experiment(&process, &kernel, kind, settings, &grid)?
        }
        Statistic::PartialSum => {
            let tensor = require_tensor(config)?;
            if tensor.order() != 1 {
                bail!("statistic \"partial-sum\" needs an order-one tensor");
            }
            let indices = tensor.distinct_indices();
            let root_n = (exp.n as f64).sqrt();
            mc::run_experiment(&process, settings, &grid, exp.tail_kind(), StatKind::V, "sum_j f(X_j)", |s| {
                Ok(root_n * SeriesCache::build(&indices, &basis, s)?.v_statistic(&tensor))
            })?
        }
        Statistic::UHoeffding => {
            let kernel = build_kernel(config, &basis)?;
            let mean = full_expectation(&kernel, &Quadrature::default());
            mc::run_experiment(&process, settings, &grid, exp.tail_kind(), StatKind::U, "U - EU", |s| {
                Ok(stats::u_hoeffding_normalized(&kernel, s)? - mean)
            })?
        }
    };
    Ok(curve)
}

#[derive(Debug, Clone, Serialize)]
pub struct Verification {
    pub certified: CertifiedBound,
    pub curve: TailCurve,
    pub report: EnvelopeReport,
}

/// Certificate, Monte Carlo curve and envelope check.
pub fn verify(config: &Config, workers: usize) -> Result<Verification> {
    let process = build_process(config)?;
    let basis = build_basis(config, &process)?;
    let certified = build_certificate(config, &process, &basis)?;
    let curve = run_curve(config, workers)?.with_bound(&certified.certificate);
    let report = mc::verify_envelope(&curve)?;
    Ok(Verification {
        certified,
        curve,
        report,
    })
}

/// `{n, m, v_naive?, v_series, u_naive?, u_series}` for a sample.
#[derive(Debug, Clone, Serialize)]
pub struct StatEvaluation {
    pub n: usize,
    pub m: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub v_naive: Option<f64>,
    pub v_series: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub u_naive: Option<f64>,
    pub u_series: f64,
}

pub fn evaluate_statistics(tensor: &CoefficientTensor, basis: &OrthonormalBasis, sample: &Sample) -> Result<StatEvaluation> {
    sample.validate(basis.measure()).context("sample")?;
    let kernel = kernel_from_coefficients(tensor, basis)?;
    let limits = stats::NaiveLimits::default();
    let naive_ok = limits.allows(sample.len(), tensor.order());
    Ok(StatEvaluation {
        n: sample.len(),
        m: tensor.order(),
        v_naive: if naive_ok { Some(stats::v_statistic_naive(&kernel, sample)?) } else { None },
        v_series: stats::v_statistic_series(tensor, basis, sample)?,
        u_naive: if naive_ok { Some(stats::u_statistic_naive(&kernel, sample)?) } else { None },
        u_series: stats::u_statistic_series(tensor, basis, sample)?,
    })
}
