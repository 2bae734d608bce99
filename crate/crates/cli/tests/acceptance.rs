//! Acceptance suite: one line per criterion, nonzero exit if any fails.
//!
//! Run with `cargo test -p canonstat-cli --test acceptance`.

use std::f64::consts::{E, SQRT_2};
use std::path::PathBuf;
use std::time::Instant;

use anyhow::{ensure, Result};
use canonstat::bounds::{
    hoeffding_1963_bound, moment_constants, moment_bound, majorant_threshold, Decay,
};
use canonstat::kernels::{canonicality_defect, hoeffding_project, kernel_from_coefficients};
use canonstat::mc::{estimate_mixed_moment, RunSettings};
use canonstat::mixing::{phi_brute_force, phi_markov_exact, DriverMap};
use canonstat::stats::{u_statistic_naive, u_statistic_series, v_statistic_naive, v_statistic_series};
use canonstat::{
    BoundCertificate, CoefficientTensor, Kernel, MarkovChain, Measure, MixingProcess, OrthonormalBasis,
    PhiProfile, Quadrature,
};
use canonstat_cli::config::{Config, Overrides};
use canonstat_cli::pipeline;
use rand::Rng;

struct Outcome {
    passed: bool,
    detail: String,
}

fn outcome(passed: bool, detail: impl Into<String>) -> Result<Outcome> {
    Ok(Outcome {
        passed,
        detail: detail.into(),
    })
}

fn config_path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("configs").join(name)
}

fn load(name: &str) -> Result<Config> {
    Config::load(&config_path(name), &Overrides::default())
}

/// Every simulator shipped with the library, paired with a basis for its marginal.
fn shipped_processes() -> Vec<(MixingProcess, OrthonormalBasis)> {
    let trig = OrthonormalBasis::trig();
    let three_state = MarkovChain::new(vec![
        vec![0.5, 0.3, 0.2],
        vec![0.1, 0.6, 0.3],
        vec![0.3, 0.3, 0.4],
    ])
    .unwrap();
    let with_finite = |p: MixingProcess| {
        let law = match p.stationary_law() {
            Measure::Finite { probabilities } => probabilities.clone(),
            Measure::Uniform => unreachable!("finite-alphabet process"),
        };
        (p, OrthonormalBasis::finite(&law).unwrap())
    };
    vec![
        (MixingProcess::iid(Measure::Uniform), trig.clone()),
        (
            MixingProcess::m_dependent(2, DriverMap::SumMod, Measure::Uniform).unwrap(),
            trig.clone(),
        ),
        (
            MixingProcess::jittered_markov(MarkovChain::two_state(0.5).unwrap()).unwrap(),
            trig,
        ),
        with_finite(MixingProcess::iid(Measure::finite(vec![0.1, 0.6, 0.3]).unwrap())),
        with_finite(
            MixingProcess::m_dependent(1, DriverMap::SumMod, Measure::finite(vec![0.2, 0.3, 0.5]).unwrap())
                .unwrap(),
        ),
        with_finite(MixingProcess::markov(MarkovChain::two_state(0.5).unwrap())),
        with_finite(MixingProcess::markov(three_state)),
    ]
}

fn random_tensor(rng: &mut impl Rng, orders: &[usize], max_index: usize) -> CoefficientTensor {
    loop {
        let m = orders[rng.random_range(0..orders.len())];
        let len = rng.random_range(1..=10);
        let entries: Vec<(Vec<usize>, f64)> = (0..len)
            .map(|_| {
                let index = (0..m).map(|_| rng.random_range(1..=max_index)).collect();
                (index, rng.random_range(-2.0..=2.0))
            })
            .collect();
        let t = CoefficientTensor::from_entries(m, entries).unwrap();
        if !t.is_empty() {
            return t;
        }
    }
}

fn series_naive_v() -> Result<Outcome> {
    let mut rng = canonstat::rng::seeded(1);
    let processes = shipped_processes();
    let (mut cases, mut worst) = (0, 0.0_f64);
    for t in 0..50 {
        for (p, (process, basis)) in processes.iter().enumerate() {
            let max_index = basis.max_index().unwrap_or(4).min(4);
            let tensor = random_tensor(&mut rng, &[1, 2, 3], max_index);
            let kernel = kernel_from_coefficients(&tensor, basis)?;
            for n in [5, 20, 50] {
                let sample = process.sample(1000 * t + 10 * p as u64 + n as u64, n);
                let naive = v_statistic_naive(&kernel, &sample)?;
                let series = v_statistic_series(&tensor, basis, &sample)?;
                worst = worst.max((series - naive).abs() / (1.0 + naive.abs()));
                cases += 1;
            }
        }
    }
    outcome(
        worst <= 1e-9,
        format!("{cases} cases over {} processes, max |series - naive|/(1+|naive|) = {worst:.2e}", processes.len()),
    )
}

fn diagonal_decomposition() -> Result<Outcome> {
    let mut rng = canonstat::rng::seeded(2);
    let processes = shipped_processes();
    let (mut cases, mut worst) = (0, 0.0_f64);
    for t in 0..50 {
        let (process, basis) = &processes[t % processes.len()];
        let max_index = basis.max_index().unwrap_or(4).min(4);
        let tensor = random_tensor(&mut rng, &[2, 3], max_index);
        let kernel = kernel_from_coefficients(&tensor, basis)?;
        for n in [2, 3, 7, 15] {
            let sample = process.sample(7000 + 100 * t as u64 + n as u64, n);
            let naive = u_statistic_naive(&kernel, &sample)?;
            let series = u_statistic_series(&tensor, basis, &sample)?;
            worst = worst.max((series - naive).abs() / (1.0 + naive.abs()));
            cases += 1;
        }
    }
    outcome(worst <= 1e-9, format!("{cases} cases, max relative gap {worst:.2e}"))
}

fn canonicality() -> Result<Outcome> {
    let grid = Measure::Uniform.default_grid();
    let quadrature = Quadrature::default();
    let mut details = Vec::new();
    let mut passed = true;
    let kernels = [
        ("s*t", Kernel::new(2, Measure::Uniform, |t| t[0] * t[1])),
        ("exp(s+t)", Kernel::new(2, Measure::Uniform, |t| (t[0] + t[1]).exp())),
    ];
    for (name, f) in kernels {
        let projected = hoeffding_project(&f)?;
        let defect = canonicality_defect(&projected, &grid, &quadrature)?;
        let twice = hoeffding_project(&projected)?;
        let mut drift = 0.0_f64;
        for &s in &grid {
            for &t in &grid {
                drift = drift.max((twice.eval(&[s, t]) - projected.eval(&[s, t])).abs());
            }
        }
        passed &= defect <= 1e-8 && drift <= 1e-9;
        details.push(format!("{name}: defect {defect:.2e}, idempotence {drift:.2e}"));
    }
    outcome(passed, details.join("; "))
}

fn envelope(config: &str) -> Result<(Outcome, pipeline::Verification)> {
    let cfg = load(config)?;
    let v = pipeline::verify(&cfg, 1)?;
    let r = &v.report;
    let bounds = v.curve.bound.as_ref().expect("bound attached");
    let below_one = bounds.iter().all(|&b| b < 1.0);
    let detail = format!(
        "{} points, {} reps, {} violations, {} unresolvable, bound < 1 on grid: {below_one}, max estimate/bound {:.3e}",
        r.points,
        v.curve.reps,
        r.violations.len(),
        r.unresolvable.len(),
        r.max_ratio
    );
    Ok((
        Outcome {
            passed: r.passed && below_one,
            detail,
        },
        v,
    ))
}

fn condition_a_envelope() -> Result<Outcome> {
    Ok(envelope("mdep-cos-a.toml")?.0)
}

fn condition_b_envelope() -> Result<Outcome> {
    let (mut out, v) = envelope("markov-cos-b.toml")?;
    let x0 = majorant_threshold(2, 0.5, 2.0, SQRT_2, 1.0);
    let x0_ok = (x0 - 128.0 * E).abs() <= 1e-9;
    out.passed &= x0_ok && v.certified.certificate.epsilon == Some(0.5);
    out.detail.push_str(&format!("; x0 = {x0:.12} (128e = {:.12})", 128.0 * E));
    Ok(out)
}

fn partial_sum_envelope() -> Result<Outcome> {
    let (mut out, v) = envelope("markov-sum-dedecker.toml")?;
    let d = v.certified.certificate.trace_value("D_n").unwrap_or(f64::NAN);
    out.detail.push_str(&format!("; D_n = {d:.6} with φ(0) = 1"));
    Ok(out)
}

fn bounded_kernel_envelope() -> Result<Outcome> {
    let (mut out, _) = envelope("iid-product-hoeffding.toml")?;
    let spot = hoeffding_1963_bound(0.1, 100, 1, 0.0, 1.0)?;
    out.passed &= (spot - (-2.0f64).exp()).abs() <= 1e-9;
    out.detail.push_str(&format!("; spot value t=0.1, n=100, m=1: {spot:.9}"));
    Ok(out)
}

fn moment_check() -> Result<Outcome> {
    let trig = OrthonormalBasis::trig();
    let window = MixingProcess::m_dependent(2, DriverMap::SumMod, Measure::Uniform)?;
    let jittered = MixingProcess::jittered_markov(MarkovChain::two_state(0.5)?)?;
    let window_constants = moment_constants(
        &window.phi_profile().aggregates()?,
        Some(Decay { c0: 4f64.exp(), c1: 1.0 }),
        6,
    )?;
    let jittered_constants = moment_constants(&jittered.phi_profile().aggregates()?, None, 6)?;
    let mut cases = 0;
    let mut worst = 0.0_f64;
    for (process, constants) in [(&window, &window_constants), (&jittered, &jittered_constants)] {
        for len in [2usize, 4, 6] {
            let tuples = 1usize << len;
            for code in 0..tuples {
                let indices: Vec<usize> = (0..len).map(|b| 1 + ((code >> b) & 1)).collect();
                let settings = RunSettings {
                    n: 200,
                    reps: 10_000,
                    master_seed: 8 + code as u64,
                    workers: 1,
                };
                let est = estimate_mixed_moment(process, &trig, &indices, settings)?;
                let bound = moment_bound(1, len / 2, trig.bound(), constants.c_tilde);
                ensure!(
                    est.estimate.abs() <= bound + 3.0 * est.std_error,
                    "{indices:?} on {}: |{}| exceeds {bound}",
                    process.id(),
                    est.estimate
                );
                worst = worst.max(est.estimate.abs() / bound);
                cases += 1;
            }
        }
    }
    outcome(true, format!("{cases} index tuples, max |estimate|/bound = {worst:.3e}"))
}

fn scale_invariance() -> Result<Outcome> {
    let tensor = CoefficientTensor::from_entries(2, [(vec![1, 1], 1.0), (vec![2, 2], 1.0), (vec![1, 3], -0.4)])?;
    let window = PhiProfile::Window { window: 2 }.aggregates()?;
    let markov = PhiProfile::Markov {
        chain: MarkovChain::two_state(0.5)?,
    }
    .aggregates()?;
    let mut worst = 0.0_f64;
    for lambda in [0.1, 3.0, 10.0] {
        let scaled = tensor.scaled(lambda);
        let pairs = [
            (
                BoundCertificate::condition_a(&tensor, SQRT_2, &window, None, 10)?,
                BoundCertificate::condition_a(&scaled, SQRT_2, &window, None, 10)?,
            ),
            (
                BoundCertificate::condition_b(&tensor, SQRT_2, 0.5, &markov)?,
                BoundCertificate::condition_b(&scaled, SQRT_2, 0.5, &markov)?,
            ),
        ];
        for (base, other) in &pairs {
            for x in [0.5, 7.0, 300.0] {
                let (e1, e2) = (base.exponent(x).unwrap(), other.exponent(lambda * x).unwrap());
                worst = worst.max((e1 - e2).abs() / e1);
            }
        }
    }
    outcome(worst <= 1e-12, format!("max relative exponent gap {worst:.2e} over λ ∈ {{0.1, 3, 10}}"))
}

fn phi_oracle() -> Result<Outcome> {
    let chains = [
        MarkovChain::two_state(0.5)?,
        MarkovChain::new(vec![vec![0.9, 0.1], vec![0.4, 0.6]])?,
        MarkovChain::new(vec![vec![0.5, 0.3, 0.2], vec![0.1, 0.6, 0.3], vec![0.3, 0.3, 0.4]])?,
        MarkovChain::new(vec![vec![0.2, 0.8, 0.0], vec![0.0, 0.3, 0.7], vec![0.6, 0.0, 0.4]])?,
    ];
    let mut worst = 0.0_f64;
    let mut cases = 0;
    for chain in &chains {
        for k in 1..=3 {
            let exact = phi_markov_exact(chain, k);
            for past in 1..=3 {
                for future in 1..=3 {
                    worst = worst.max((phi_brute_force(chain, k, past, future)? - exact).abs());
                    cases += 1;
                }
            }
        }
    }
    let phi1 = phi_markov_exact(&chains[0], 1);
    outcome(
        worst <= 1e-12 && phi1 == 0.25,
        format!("{cases} cases, max |exact - brute| = {worst:.2e}; λ = 0.5 chain φ(1) = {phi1}"),
    )
}

fn reproducibility() -> Result<Outcome> {
    let dir = tempfile::tempdir()?;
    let config = config_path("mdep-cos-a.toml");
    let mut files = Vec::new();
    for workers in ["1", "3", "1"] {
        let out = dir.path().join(format!("run-{}", files.len()));
        let status = canonstat_cli::run_cli([
            "canonstat",
            "verify",
            "--config",
            config.to_str().unwrap(),
            "--workers",
            workers,
            "--out",
            out.to_str().unwrap(),
        ])?;
        ensure!(status == 0, "verify exited with {status}");
        files.push((
            std::fs::read(out.join("curve.csv"))?,
            std::fs::read(out.join("report.json"))?,
            std::fs::read(out.join("certificate.json"))?,
        ));
    }
    let identical = files.windows(2).all(|w| w[0] == w[1]);
    outcome(
        identical,
        format!("3 runs with 1, 3, 1 workers: curve.csv, report.json, certificate.json byte-identical = {identical}"),
    )
}

type Criterion = (&'static str, fn() -> Result<Outcome>);

fn main() {
    let criteria: [Criterion; 11] = [
        ("series/naive V equivalence", series_naive_v),
        ("diagonal decomposition of U", diagonal_decomposition),
        ("canonical projection", canonicality),
        ("condition A envelope", condition_a_envelope),
        ("condition B envelope", condition_b_envelope),
        ("partial-sum envelope", partial_sum_envelope),
        ("bounded-kernel envelope", bounded_kernel_envelope),
        ("mixed moment bound", moment_check),
        ("exponent scale invariance", scale_invariance),
        ("φ-coefficient oracle", phi_oracle),
        ("worker-count reproducibility", reproducibility),
    ];
    let mut failures = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let (passed, detail) = match check() {
            Ok(o) => (o.passed, o.detail),
            Err(e) => (false, format!("error: {e:#}")),
        };
        if !passed {
            failures += 1;
        }
        println!(
            "criterion {:>2} {} {name}: {detail} ({:.1} s)",
            i + 1,
            if passed { "PASS" } else { "FAIL" },
            start.elapsed().as_secs_f64()
        );
    }
    println!("acceptance: {} of {} criteria passed", criteria.len() - failures, criteria.len());
    if failures > 0 {
        std::process::exit(1);
    }
}
