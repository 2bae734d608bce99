//! Experiment configuration files (TOML).

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use canonstat::mc::TailKind;
use canonstat::tensor::TensorEntry;
use canonstat::Condition;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    pub process: ProcessSpec,
    #[serde(default)]
    pub basis: BasisSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kernel: Option<KernelSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bound: Option<BoundSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub experiment: Option<ExperimentSpec>,
    #[serde(default)]
    pub output: OutputSpec,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum ProcessSpec {
    /// Independent draws; uniform on `[0, 1]` unless `alphabet` is given.
    Iid {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        alphabet: Option<Vec<f64>>,
    },
    /// Window-sum map of `window + 1` consecutive iid drivers.
    MDependent {
        window: usize,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        alphabet: Option<Vec<f64>>,
    },
    Markov {
        #[serde(flatten)]
        chain: ChainSpec,
    },
    /// Chain with uniform stationary law embedded in `[0, 1]` by uniform jitter.
    JitteredMarkov {
        #[serde(flatten)]
        chain: ChainSpec,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChainSpec {
    /// Row-stochastic transition matrix.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub transition: Option<Vec<Vec<f64>>>,
    /// Symmetric two-state chain with second eigenvalue `lambda`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lambda: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BasisKind {
    #[default]
    Trig,
    Finite,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BasisSpec {
    #[serde(default)]
    pub kind: BasisKind,
    /// Reference law of a finite basis; defaults to the process marginal.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub probabilities: Option<Vec<f64>>,
    /// Largest index examined by `basis check`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_index: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum KernelFunction {
    /// `f(s, t) = s t`.
    Product,
    /// `f(s, t) = exp(s + t)`.
    ExpSum,
}

/// Exactly one of `tensor`, `entries`, `function`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KernelSpec {
    /// Tensor JSON file, relative to the config file.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tensor: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub order: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub entries: Option<Vec<TensorEntry>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub function: Option<KernelFunction>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoundSpec {
    pub condition: Condition,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub epsilon: Option<f64>,
    /// Decay envelope `φ(k) ≤ c0 exp(-c1 k²)`; derived for independent and
    /// finite-window processes when omitted.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub c0: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub c1: Option<f64>,
    /// Largest moment order of the integer-order variant.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub moment_cap: Option<usize>,
    /// Kernel range for the bounded-kernel inequality.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub a: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub b: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Statistic {
    /// `V_n` of the tensor.
    V,
    /// `U_n` of the tensor.
    U,
    /// `Σ_j Σ_i f_i e_i(X_j)` for an order-one tensor.
    PartialSum,
    /// Average of the kernel over distinct index tuples minus its mean.
    UHoeffding,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Spacing {
    Linear,
    Geometric,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub min: f64,
    pub max: f64,
    pub count: usize,
    pub spacing: Spacing,
}

impl GridSpec {
    pub fn points(&self) -> Result<Vec<f64>> {
        if self.count == 0 {
            bail!("experiment.grid.count must be positive");
        }
        if !(self.min >= 0.0 && self.max >= self.min && self.max.is_finite()) {
            bail!("experiment.grid needs 0 ≤ min ≤ max, got min={}, max={}", self.min, self.max);
        }
        Ok(match self.spacing {
            Spacing::Linear => canonstat::numeric::linspace(self.min, self.max, self.count),
            Spacing::Geometric => {
                if self.min <= 0.0 {
                    bail!("experiment.grid.min must be positive for geometric spacing");
                }
                canonstat::numeric::geomspace(self.min, self.max, self.count)
            }
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSpec {
    pub statistic: Statistic,
    pub n: usize,
    pub reps: u64,
    #[serde(default)]
    pub seed: u64,
    /// Defaults to `abs`, or `upper` for `u-hoeffding`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tail: Option<TailKind>,
    pub grid: GridSpec,
}

impl ExperimentSpec {
    pub fn tail_kind(&self) -> TailKind {
        self.tail.unwrap_or(match self.statistic {
            Statistic::UHoeffding => TailKind::Upper,
            _ => TailKind::Abs,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dir: Option<PathBuf>,
}

/// Command-line values that take precedence over the file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    pub condition: Option<Condition>,
    pub n: Option<usize>,
    pub reps: Option<u64>,
}

impl Config {
    pub fn parse(text: &str) -> Result<Self> {
        Ok(toml::from_str(text)?)
    }

    /// Reads a config, inlines any tensor file and applies overrides.
    pub fn load(path: &Path, overrides: &Overrides) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
        let mut config =
            Config::parse(&text).with_context(|| format!("malformed config {}", path.display()))?;
        config.inline_tensor(path.parent().unwrap_or(Path::new(".")))?;
        config.apply(overrides)?;
        Ok(config)
    }

    fn inline_tensor(&mut self, base: &Path) -> Result<()> {
        let Some(kernel) = self.kernel.as_mut() else {
            return Ok(());
        };
        if let Some(rel) = kernel.tensor.take() {
            if kernel.entries.is_some() || kernel.function.is_some() {
                bail!("kernel: give exactly one of `tensor`, `entries`, `function`");
            }
            let path = base.join(&rel);
            let text =
                std::fs::read_to_string(&path).with_context(|| format!("kernel.tensor: reading {}", path.display()))?;
            let tensor = canonstat::CoefficientTensor::from_json(&text)
                .with_context(|| format!("kernel.tensor: parsing {}", path.display()))?;
            kernel.order = Some(tensor.order());
            kernel.entries = Some(tensor.to_entries());
        }
        Ok(())
    }

    pub fn apply(&mut self, overrides: &Overrides) -> Result<()> {
        if let Some(dir) = &overrides.out {
            self.output.dir = Some(dir.clone());
        }
        if let Some(condition) = overrides.condition {
            match self.bound.as_mut() {
                Some(bound) => bound.condition = condition,
                None => {
                    self.bound = Some(BoundSpec {
                        condition,
                        epsilon: None,
                        c0: None,
                        c1: None,
                        moment_cap: None,
                        a: None,
                        b: None,
                    })
                }
            }
        }
        if overrides.seed.is_some() || overrides.n.is_some() || overrides.reps.is_some() {
            let Some(exp) = self.experiment.as_mut() else {
                bail!("--seed, --n and --reps need an [experiment] section");
            };
            if let Some(seed) = overrides.seed {
                exp.seed = seed;
            }
            if let Some(n) = overrides.n {
                exp.n = n;
            }
            if let Some(reps) = overrides.reps {
                exp.reps = reps;
            }
        }
        Ok(())
    }

    /// SHA-256 of the effective configuration without the output location.
    pub fn hash(&self) -> String {
        let mut canonical = self.clone();
        canonical.output = OutputSpec::default();
        let json = serde_json::to_string(&canonical).expect("config serializes");
        Sha256::digest(json.as_bytes()).iter().map(|b| format!("{b:02x}")).collect()
    }

    pub fn master_seed(&self) -> u64 {
        self.experiment.as_ref().map_or(0, |e| e.seed)
    }
}
