//! Subcommand implementations and artifact writing.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use canonstat::kernels::{canonicality_defect_default, full_expectation, hoeffding_project};
use canonstat::{Condition, Envelope, Quadrature, Sample};
use serde::Serialize;
use serde_json::{json, Value};

use crate::config::Config;
use crate::pipeline::{self, build_basis, build_kernel, build_process, build_tensor};
use crate::Common;

/// Default directory of multi-artifact commands.
pub const DEFAULT_OUT_DIR: &str = "canonstat-out";

const ORTHONORMALITY_TOLERANCE: f64 = 1e-10;

fn load(common: &Common) -> Result<Config> {
    Config::load(&common.config, &common.overrides())
}

/// JSON artifact with the provenance header fields first.
fn stamped(config: &Config, body: impl Serialize) -> Result<String> {
    let mut out = serde_json::Map::new();
    out.insert("config_hash".into(), json!(config.hash()));
    out.insert("master_seed".into(), json!(config.master_seed()));
    out.insert("version".into(), json!(canonstat::VERSION));
    match serde_json::to_value(body)? {
        Value::Object(map) => out.extend(map),
        other => {
            out.insert("result".into(), other);
        }
    }
    Ok(serde_json::to_string_pretty(&Value::Object(out))? + "\n")
}

/// Writes `name` under the output directory, or prints it when there is none.
fn emit(config: &Config, name: &str, contents: &str) -> Result<()> {
    match &config.output.dir {
        Some(dir) => write_file(dir, name, contents),
        None => {
            print!("{contents}");
            Ok(())
        }
    }
}

fn write_file(dir: &Path, name: &str, contents: &str) -> Result<()> {
    std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let path = dir.join(name);
    std::fs::write(&path, contents).with_context(|| format!("writing {}", path.display()))
}

fn out_dir(config: &Config) -> PathBuf {
    config.output.dir.clone().unwrap_or_else(|| PathBuf::from(DEFAULT_OUT_DIR))
}

pub fn basis_check(common: &Common) -> Result<i32> {
    let config = load(common)?;
    let process = build_process(&config)?;
    let basis = build_basis(&config, &process)?;
    let max_index = config
        .basis
        .max_index
        .or(basis.max_index())
        .unwrap_or(8);
    let quadrature = Quadrature::default();
    let report = basis.check_orthonormality(max_index, ORTHONORMALITY_TOLERANCE, &quadrature)?;
    let body = json!({
        "measure": basis.measure().describe(),
        "bound": basis.bound(),
        "max_usable_index": basis.max_index(),
        "orthonormality": report,
        "max_mean_defect": basis.mean_defect(max_index, &quadrature)?,
        "table": basis.to_table(),
    });
    emit(&config, "basis.json", &stamped(&config, body)?)?;
    Ok(if report.passed { 0 } else { 1 })
}

pub fn kernel_analyze(common: &Common) -> Result<i32> {
    let config = load(common)?;
    let process = build_process(&config)?;
    let basis = build_basis(&config, &process)?;
    let kernel = build_kernel(&config, &basis)?;
    let body = match build_tensor(&config)? {
        Some(tensor) => json!({
            "m": tensor.order(),
            "entries": tensor.len(),
            "distinct_indices": tensor.distinct_indices(),
            "sum_abs": tensor.norm_sum(1.0),
            "sum_sqrt_abs": tensor.norm_sum(0.5),
            "canonical_defect": canonicality_defect_default(&kernel)?,
        }),
        None => {
            let projected = hoeffding_project(&kernel)?;
            json!({
                "m": kernel.order(),
                "mean": full_expectation(&kernel, &Quadrature::default()),
                "canonical_defect": canonicality_defect_default(&kernel)?,
                "projected_canonical_defect": canonicality_defect_default(&projected)?,
            })
        }
    };
    emit(&config, "kernel.json", &stamped(&config, body)?)?;
    Ok(0)
}

pub fn stat_eval(common: &Common, sample_path: &Path) -> Result<i32> {
    let config = load(common)?;
    let process = build_process(&config)?;
    let basis = build_basis(&config, &process)?;
    let tensor = build_tensor(&config)?
        .context("stat eval needs a coefficient tensor (kernel.entries or kernel.tensor)")?;
    let text = std::fs::read_to_string(sample_path)
        .with_context(|| format!("reading sample {}", sample_path.display()))?;
    let sample = Sample::parse(&text).with_context(|| format!("parsing sample {}", sample_path.display()))?;
    let eval = pipeline::evaluate_statistics(&tensor, &basis, &sample)?;
    emit(&config, "stat.json", &stamped(&config, eval)?)?;
    Ok(0)
}

pub fn bound_compute(common: &Common) -> Result<i32> {
    let config = load(common)?;
    let process = build_process(&config)?;
    let basis = build_basis(&config, &process)?;
    let certified = pipeline::build_certificate(&config, &process, &basis)?;
    emit(&config, "certificate.json", &stamped(&config, certified)?)?;
    Ok(0)
}

/// Columns `bound_A, bound_B, dedecker, hoeffding`; a column is empty when
/// its inequality does not apply to the configuration.
pub fn bound_curve(common: &Common) -> Result<i32> {
    let config = load(common)?;
    let process = build_process(&config)?;
    let basis = build_basis(&config, &process)?;
    let grid = pipeline::experiment(&config)?.grid.points()?;
    let columns: Vec<Option<Vec<f64>>> = [Condition::A, Condition::B, Condition::Dedecker, Condition::Hoeffding1963]
        .into_iter()
        .map(|condition| {
            let mut variant = config.clone();
            if let Some(bound) = variant.bound.as_mut() {
                bound.condition = condition;
            }
            variant.bound.as_ref()?;
            let cert = pipeline::build_certificate(&variant, &process, &basis).ok()?;
            Some(grid.iter().map(|&x| cert.certificate.bound(x)).collect())
        })
        .collect();
    let mut csv = provenance_line(&config);
    csv.push_str("x,bound_A,bound_B,dedecker,hoeffding\n");
    for (i, x) in grid.iter().enumerate() {
        write!(csv, "{x:.16e}")?;
        for col in &columns {
            match col {
                Some(values) => write!(csv, ",{:.16e}", values[i])?,
                None => csv.push(','),
            }
        }
        csv.push('\n');
    }
    emit(&config, "bound_curve.csv", &csv)?;
    Ok(0)
}

fn provenance_line(config: &Config) -> String {
    format!(
        "# config_hash={} master_seed={} version={}\n",
        config.hash(),
        config.master_seed(),
        canonstat::VERSION
    )
}

pub fn mc_run(common: &Common) -> Result<i32> {
    let config = load(common)?;
    if config.bound.is_some() {
        return verify_with(&config, common.workers, false);
    }
    let curve = pipeline::run_curve(&config, common.workers)?;
    let dir = out_dir(&config);
    write_file(&dir, "curve.csv", &curve.to_csv(&config.hash()))?;
    write_file(&dir, "curve.json", &stamped(&config, &curve)?)?;
    eprintln!("mc run: {} replications, {} grid points, no bound configured", curve.reps, curve.x_grid.len());
    Ok(0)
}

pub fn verify(common: &Common) -> Result<i32> {
    let config = load(common)?;
    verify_with(&config, common.workers, true)
}

fn verify_with(config: &Config, workers: usize, write_certificate: bool) -> Result<i32> {
    let result = pipeline::verify(config, workers)?;
    let dir = out_dir(config);
    if write_certificate {
        write_file(&dir, "certificate.json", &stamped(config, &result.certified)?)?;
    }
    write_file(&dir, "curve.csv", &result.curve.to_csv(&config.hash()))?;
    let report = json!({
        "bound": result.certified.certificate.label(),
        "reps": result.curve.reps,
        "n": result.curve.meta.n,
        "envelope": result.report,
    });
    write_file(&dir, "report.json", &stamped(config, report)?)?;
    let r = &result.report;
    eprintln!(
        "{}: {} grid points, {} violations, max estimate/bound {:.3e}{}",
        if write_certificate { "verify" } else { "mc run" },
        r.points,
        r.violations.len(),
        r.max_ratio,
        r.max_ratio_x.map(|x| format!(" at x = {x:.6e}")).unwrap_or_default()
    );
    Ok(if r.passed { 0 } else { 1 })
}
