//! Trial execution and result files.

use std::fs;
use std::io::Write;
use std::path::Path;
use std::time::Instant;

use dvqls_core::estimator::{grad_cost, local_cost};
use dvqls_core::metrics::{self, Lemma1Check};
use dvqls_core::optimizer::{self, Network, RunSetup, Variant};
use dvqls_core::{seed, ProblemInstance, RunRecord};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::ExperimentConfig;
use crate::error::{HarnessError, Result};

pub const CSV_HEADER: [&str; 5] = ["iteration", "residual", "consensus_error", "param_consensus_error", "wall_time_s"];

/// Runs `trials` independent trials with seeds `seed, seed + 1, ...` in
/// parallel. Results come back in seed order.
pub fn run_trials(problem: &ProblemInstance, setup: &RunSetup, seed: u64, trials: usize, wall_time: bool) -> Result<Vec<Vec<RunRecord>>> {
    (0..trials as u64)
        .into_par_iter()
        .map(|k| {
            let s = seed.wrapping_add(k);
            let records = if wall_time {
                let start = Instant::now();
                optimizer::run_with_clock(problem, setup, s, &mut || start.elapsed().as_secs_f64())
            } else {
                optimizer::run(problem, setup, s)
            };
            log::info!("trial seed {s}: {} records", records.as_ref().map_or(0, Vec::len));
            records.map_err(HarnessError::from)
        })
        .collect()
}

pub fn write_trial_csv(path: &Path, records: &[RunRecord]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(CSV_HEADER)?;
    for r in records {
        w.write_record(&[
            r.iteration.to_string(),
            format!("{:e}", r.residual),
            format!("{:e}", r.consensus_error),
            format!("{:e}", r.param_consensus_error),
            format!("{:e}", r.wall_time),
        ])?;
    }
    w.flush().map_err(|e| HarnessError::io(path, e))
}

/// Mean and population standard deviation of one metric across trials.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Band {
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub seeds: Vec<u64>,
    pub iterations: Vec<usize>,
    pub residual: Band,
    pub consensus_error: Band,
    pub param_consensus_error: Band,
    pub final_residuals: Vec<f64>,
}

/// Trials that stopped early are padded with their last record.
fn band(trials: &[Vec<RunRecord>], len: usize, metric: impl Fn(&RunRecord) -> f64) -> Band {
    let n = trials.len() as f64;
    let (mut mean, mut std) = (Vec::with_capacity(len), Vec::with_capacity(len));
    for t in 0..len {
        let values: Vec<f64> = trials.iter().map(|r| metric(&r[t.min(r.len() - 1)])).collect();
        let mu = values.iter().sum::<f64>() / n;
        let var = values.iter().map(|v| (v - mu).powi(2)).sum::<f64>() / n;
        mean.push(mu);
        std.push(var.sqrt());
    }
    Band { mean, std }
}

pub fn summarize(trials: &[Vec<RunRecord>]) -> Summary {
    let len = trials.iter().map(Vec::len).max().unwrap_or(0);
    Summary {
        seeds: trials.iter().filter_map(|r| r.first().map(|x| x.seed)).collect(),
        iterations: (0..len).collect(),
        residual: band(trials, len, |r| r.residual),
        consensus_error: band(trials, len, |r| r.consensus_error),
        param_consensus_error: band(trials, len, |r| r.param_consensus_error),
        final_residuals: trials.iter().filter_map(|r| r.last().map(|x| x.residual)).collect(),
    }
}

fn create_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| HarnessError::io(dir, e))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let file = fs::File::create(path).map_err(|e| HarnessError::io(path, e))?;
    let mut w = std::io::BufWriter::new(file);
    serde_json::to_writer_pretty(&mut w, value)?;
    w.write_all(b"\n").and_then(|_| w.flush()).map_err(|e| HarnessError::io(path, e))
}

/// Runs every trial of `cfg` and writes `trial_XXX.csv` files, the
/// resolved `config.toml` and `summary.json` into `out`.
pub fn run_experiment(cfg: &ExperimentConfig, out: &Path) -> Result<Summary> {
    let (problem, setup) = cfg.build()?;
    let trials = run_trials(&problem, &setup, cfg.seed, cfg.num_trials, cfg.record_wall_time)?;
    create_dir(out)?;
    for (k, records) in trials.iter().enumerate() {
        write_trial_csv(&out.join(format!("trial_{k:03}.csv")), records)?;
    }
    let resolved = out.join("config.toml");
    fs::write(&resolved, cfg.to_toml()?).map_err(|e| HarnessError::io(&resolved, e))?;
    let summary = summarize(&trials);
    write_json(&out.join("summary.json"), &summary)?;
    Ok(summary)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VariantResult {
    pub variant: String,
    pub label: String,
    pub summary: Summary,
}

/// Runs the configured experiment once per optimizer variant. Each variant
/// gets its own subdirectory; `comparison.csv` holds the mean residual
/// trajectories side by side.
pub fn compare_variants(cfg: &ExperimentConfig, out: &Path) -> Result<Vec<VariantResult>> {
    let mut results = Vec::new();
    for variant in Variant::ALL {
        let mut c = cfg.clone();
        c.optimizer.variant = variant.key().into();
        let summary = run_experiment(&c, &out.join(variant.key()))?;
        results.push(VariantResult { variant: variant.key().into(), label: variant.label().into(), summary });
    }
    let path = out.join("comparison.csv");
    let mut w = csv::Writer::from_path(&path)?;
    let mut header = vec!["iteration".to_string()];
    for r in &results {
        header.push(format!("{}_mean", r.variant));
        header.push(format!("{}_std", r.variant));
    }
    w.write_record(&header)?;
    let len = results.iter().map(|r| r.summary.iterations.len()).max().unwrap_or(0);
    for t in 0..len {
        let mut row = vec![t.to_string()];
        for r in &results {
            let b = &r.summary.residual;
            let k = t.min(b.mean.len().saturating_sub(1));
            row.push(format!("{:e}", b.mean.get(k).copied().unwrap_or(f64::NAN)));
            row.push(format!("{:e}", b.std.get(k).copied().unwrap_or(f64::NAN)));
        }
        w.write_record(&row)?;
    }
    w.flush().map_err(|e| HarnessError::io(&path, e))?;
    Ok(results)
}

/// Human-readable table of final residuals per variant.
pub fn comparison_table(results: &[VariantResult]) -> String {
    let mut s = format!("{:<24} {:>14} {:>14} {:>14}\n", "variant", "initial", "final mean", "final std");
    for r in results {
        let b = &r.summary.residual;
        let last = b.mean.len().saturating_sub(1);
        s.push_str(&format!("{:<24} {:>14.6e} {:>14.6e} {:>14.6e}\n", r.label, b.mean[0], b.mean[last], b.std[last]));
    }
    s
}

/// Auxiliary-variable reduction check on `samples` random stacked vectors `x`.
pub fn check_lemma1(problem: &ProblemInstance, seed: u64, samples: usize) -> Result<Vec<Lemma1Check>> {
    let dim = problem.grid_size << problem.block_qubits;
    (0..samples as u64)
        .map(|k| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed::derive(&[seed, k]));
            let x: Vec<f64> = (0..dim).map(|_| rng.random_range(-1.0..1.0)).collect();
            Ok(metrics::lemma1_check(problem, &x)?)
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GradCheck {
    pub row: usize,
    pub col: usize,
    pub components: usize,
    /// Largest `|g − fd| / max(1, |fd|)` over the agent's components.
    pub max_error: f64,
}

/// Compares every agent's analytic gradient with central differences of
/// its exact local cost at the initial iterate.
pub fn gradcheck(problem: &ProblemInstance, setup: &RunSetup, seed: u64, step: f64) -> Result<Vec<GradCheck>> {
    let mut exact = *setup;
    exact.mode = dvqls_core::EstimatorMode::Exact;
    let net = Network::initialize(problem, &exact, seed)?;
    let m = problem.grid_size;
    let mut out = Vec::with_capacity(m * m);
    for row in 0..m {
        for col in 0..m {
            let inputs = net.local_inputs(problem, row, col)?;
            let analytic = grad_cost(&inputs, exact.mode)?;
            let mut fd = Vec::with_capacity(analytic.component_count());
            let shifted = |sign: f64, idx: usize| -> Result<f64> {
                let mut inp = inputs.clone();
                let mut k = idx;
                let p = inp.own_x.dim();
                if k < p {
                    bump(&mut inp.own_x, k, sign * step);
                } else {
                    k -= p;
                    for z in inp.neighbor_z.values_mut() {
                        if k < z.dim() {
                            bump(z, k, sign * step);
                            break;
                        }
                        k -= z.dim();
                    }
                }
                Ok(local_cost(&inp, exact.mode)?)
            };
            for idx in 0..analytic.component_count() {
                fd.push((shifted(1.0, idx)? - shifted(-1.0, idx)?) / (2.0 * step));
            }
            let max_error = analytic.flatten().iter().zip(&fd).map(|(g, f)| (g - f).abs() / f.abs().max(1.0)).fold(0.0, f64::max);
            out.push(GradCheck { row, col, components: fd.len(), max_error });
        }
    }
    Ok(out)
}

fn bump(p: &mut dvqls_core::AugmentedParams, k: usize, delta: f64) {
    if k < p.angles.len() {
        p.angles[k] += delta;
    } else {
        p.norm_scale += delta;
    }
}
