//! Seeded simulators of stationary φ-mixing sequences.

use std::fmt;
use std::sync::Arc;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::markov::{inverse_cdf, MarkovChain};
use super::phi::{PhiKind, PhiProfile};
use crate::error::{Error, Result};
use crate::measure::Measure;
use crate::rng::StreamRng;
use crate::stats::Sample;

/// Map from a window of iid drivers to one observation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DriverMap {
    /// Fractional part of the window sum (uniform drivers) or the window sum
    /// modulo the alphabet size (finite drivers).
    SumMod,
}

/// Whether joint laws of distinct-index tuples are dominated by the product law.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AcStatus {
    pub satisfied: bool,
    pub note: String,
}

type PostMap = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

#[derive(Clone)]
enum Generator {
    Iid(Measure),
    Window {
        window: usize,
        driver: Measure,
        map: DriverMap,
    },
    Markov(MarkovChain),
    /// `(Z_j + U_j) / d` for a chain `Z` with uniform stationary law and iid
    /// uniform `U_j`.
    Jittered(MarkovChain),
    Mapped {
        parent: Box<MixingProcess>,
        map: PostMap,
    },
}

/// Stationary sequence simulator with its φ profile and dependence metadata.
///
/// Immutable; sampling is a pure function of `(seed, n)`.
#[derive(Clone)]
pub struct MixingProcess {
    id: String,
    generator: Generator,
    law: Measure,
    phi: PhiProfile,
    ac: AcStatus,
}

impl fmt::Debug for MixingProcess {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("MixingProcess")
            .field("id", &self.id)
            .field("law", &self.law)
            .field("phi", &self.phi)
            .field("ac", &self.ac)
            .finish()
    }
}

impl MixingProcess {
    pub fn iid(law: Measure) -> Self {
        MixingProcess {
            id: format!("iid:{}", law.describe()),
            generator: Generator::Iid(law.clone()),
            law,
            phi: PhiProfile::Independent,
            ac: AcStatus {
                satisfied: true,
                note: "independent coordinates: joint law equals the product law".into(),
            },
        }
    }

    /// `X_j = map(ξ_j, …, ξ_{j+window})` for iid drivers `ξ`.
    pub fn m_dependent(window: usize, map: DriverMap, driver: Measure) -> Result<Self> {
        if window == 0 {
            return Err(Error::InvalidParameter("window must be positive".into()));
        }
        let law = match (&driver, map) {
            (Measure::Uniform, DriverMap::SumMod) => Measure::Uniform,
            (Measure::Finite { probabilities }, DriverMap::SumMod) => {
                let mut law = probabilities.clone();
                for _ in 0..window {
                    law = cyclic_convolution(&law, probabilities);
                }
                let total: f64 = law.iter().sum();
                law.iter_mut().for_each(|v| *v /= total);
                Measure::finite(law)?
            }
        };
        let note = match &driver {
            Measure::Uniform => {
                "for distinct indices the joint law of (X_j) has a bounded density: each \
                 window sum mod 1 is uniform given the other drivers"
            }
            Measure::Finite { .. } => {
                "finite alphabet with positive marginal masses: every joint law is dominated \
                 by the product law"
            }
        };
        Ok(MixingProcess {
            id: format!("m-dependent:{window}:{map:?}:{}", driver.describe()),
            generator: Generator::Window { window, driver, map },
            law,
            phi: PhiProfile::Window { window },
            ac: AcStatus {
                satisfied: true,
                note: note.into(),
            },
        })
    }

    /// Stationary chain started from its stationary law.
    pub fn markov(chain: MarkovChain) -> Self {
        let law = Measure::Finite {
            probabilities: chain.stationary().to_vec(),
        };
        MixingProcess {
            id: format!("markov:{:?}", chain.transition()),
            generator: Generator::Markov(chain.clone()),
            law,
            phi: PhiProfile::Markov { chain },
            ac: AcStatus {
                satisfied: true,
                note: "finite alphabet with all stationary masses positive: joint laws are \
                       dominated by the product law"
                    .into(),
            },
        }
    }

    /// Chain embedded in `[0, 1]`: `X_j = (Z_j + U_j) / d`. The marginal is
    /// uniform when the stationary law of `Z` is uniform. φ equals that of
    /// `Z`, since `(Z_j, U_j)` is a Markov chain whose future depends on the
    /// past through `Z` only and `X_j` is a function of it.
    pub fn jittered_markov(chain: MarkovChain) -> Result<Self> {
        let d = chain.states() as f64;
        if chain.stationary().iter().any(|&p| (p * d - 1.0).abs() > 1e-12) {
            return Err(Error::InvalidChain(
                "jittered embedding needs a uniform stationary law (doubly stochastic matrix)"
                    .into(),
            ));
        }
        Ok(MixingProcess {
            id: format!("jittered-markov:{:?}", chain.transition()),
            generator: Generator::Jittered(chain.clone()),
            law: Measure::Uniform,
            phi: PhiProfile::Markov { chain },
            ac: AcStatus {
                satisfied: true,
                note: "joint density w.r.t. the uniform product law is piecewise constant and \
                       bounded"
                    .into(),
            },
        })
    }

    /// `(g(X_j))` with the parent's φ profile: a coordinatewise map cannot
    /// enlarge the generated σ-fields.
    pub fn mapped(
        parent: MixingProcess,
        name: &str,
        law: Measure,
        map: impl Fn(f64) -> f64 + Send + Sync + 'static,
    ) -> Self {
        MixingProcess {
            id: format!("{}|{name}", parent.id),
            phi: parent.phi.clone(),
            ac: AcStatus {
                satisfied: parent.ac.satisfied,
                note: format!("inherited from parent: {}", parent.ac.note),
            },
            generator: Generator::Mapped {
                parent: Box::new(parent),
                map: Arc::new(map),
            },
            law,
        }
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn stationary_law(&self) -> &Measure {
        &self.law
    }

    pub fn phi_profile(&self) -> &PhiProfile {
        &self.phi
    }

    pub fn phi_kind(&self) -> PhiKind {
        self.phi.kind()
    }

    /// `φ(k)` or its upper bound.
    pub fn phi_upper(&self, k: usize) -> f64 {
        self.phi.phi(k)
    }

    pub fn ac_status(&self) -> &AcStatus {
        &self.ac
    }

    /// `n` consecutive observations drawn from the stream seeded by `seed`.
    pub fn sample(&self, seed: u64, n: usize) -> Sample {
        let mut rng = crate::rng::seeded(seed);
        Sample::with_provenance(self.sample_points(&mut rng, n), self.id.clone(), seed)
    }

    /// Draws sequentially, so a longer sample extends a shorter one.
    pub fn sample_points(&self, rng: &mut StreamRng, n: usize) -> Vec<f64> {
        match &self.generator {
            Generator::Iid(law) => (0..n).map(|_| draw(law, rng)).collect(),
            Generator::Window { window, driver, map } => {
                let mut drivers: Vec<f64> = (0..*window).map(|_| draw(driver, rng)).collect();
                let mut out = Vec::with_capacity(n);
                for _ in 0..n {
                    drivers.push(draw(driver, rng));
                    let w = &drivers[drivers.len() - window - 1..];
                    out.push(apply_driver_map(*map, driver, w));
                }
                out
            }
            Generator::Markov(chain) => {
                markov_path(chain, rng, n).into_iter().map(|x| x as f64).collect()
            }
            Generator::Jittered(chain) => {
                let d = chain.states() as f64;
                let mut out = Vec::with_capacity(n);
                let mut state = None;
                for _ in 0..n {
                    let z = next_state(chain, state, rng);
                    state = Some(z);
                    let u: f64 = rng.random();
                    out.push((z as f64 + u) / d);
                }
                out
            }
            Generator::Mapped { parent, map } => {
                parent.sample_points(rng, n).into_iter().map(|x| map(x)).collect()
            }
        }
    }
}

fn draw(law: &Measure, rng: &mut StreamRng) -> f64 {
    match law {
        Measure::Uniform => rng.random(),
        Measure::Finite { probabilities } => inverse_cdf(probabilities, rng.random()) as f64,
    }
}

fn next_state(chain: &MarkovChain, state: Option<usize>, rng: &mut StreamRng) -> usize {
    let u: f64 = rng.random();
    match state {
        None => inverse_cdf(chain.stationary(), u),
        Some(x) => chain.step(x, u),
    }
}

fn markov_path(chain: &MarkovChain, rng: &mut StreamRng, n: usize) -> Vec<usize> {
    let mut out = Vec::with_capacity(n);
    let mut state = None;
    for _ in 0..n {
        let z = next_state(chain, state, rng);
        state = Some(z);
        out.push(z);
    }
    out
}

fn apply_driver_map(map: DriverMap, driver: &Measure, window: &[f64]) -> f64 {
    match (map, driver) {
        (DriverMap::SumMod, Measure::Uniform) => window.iter().sum::<f64>().fract(),
        (DriverMap::SumMod, Measure::Finite { probabilities }) => {
            let d = probabilities.len();
            (window.iter().map(|&x| x as usize).sum::<usize>() % d) as f64
        }
    }
}

fn cyclic_convolution(a: &[f64], b: &[f64]) -> Vec<f64> {
    let d = a.len();
    let mut out = vec![0.0; d];
    for (i, &ai) in a.iter().enumerate() {
        for (j, &bj) in b.iter().enumerate() {
            out[(i + j) % d] += ai * bj;
        }
    }
    out
}
