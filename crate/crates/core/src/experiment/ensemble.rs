use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::Serialize;
use serde_json::json;

use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};

use super::config::ExperimentConfig;
use super::fit::fit_power_law;
use crate::dynamics::{integrate, IntegrateOptions};
use crate::error::{Error, Result};
use crate::lattice::{DiffusionTrace, LatticeState};
use crate::potential::Potential;

/// File stem of the trace for `seed`.
pub fn trace_stem(seed: u64) -> String {
    format!("trace_seed{seed}")
}

/// Integrates the configured initial datum for one disorder realization.
pub fn run_seed(cfg: &ExperimentConfig, seed: u64) -> Result<DiffusionTrace> {
    let params = cfg.model_params()?;
    let pot = Potential::sample(seed, cfg.radius)?;
    let q0 = LatticeState::delta(cfg.radius, cfg.initial_site)?;
    let grid = cfg.sample_grid()?;
    let options = IntegrateOptions {
        boundary_fraction: Some(cfg.boundary_fraction),
        ..IntegrateOptions::new(cfg.tail_j0)
    };
    let (trace, _) = integrate(&q0, &pot, &params, cfg.t_final, &grid, &options)?;
    Ok(trace)
}

/// Loads a finished trace for `seed` if its sidecar carries `hash`.
fn completed_trace(dir: &Path, seed: u64, hash: &str) -> Option<DiffusionTrace> {
    let stem = trace_stem(seed);
    let text = std::fs::read_to_string(dir.join(format!("{stem}.json"))).ok()?;
    let sidecar: serde_json::Value = serde_json::from_str(&text).ok()?;
    if sidecar["trajectory_hash"].as_str() != Some(hash) {
        return None;
    }
    DiffusionTrace::load(dir, &stem).ok()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SeedFailure {
    pub seed: u64,
    pub error: String,
    pub numerical: bool,
}

#[derive(Debug, Clone)]
pub struct EnsembleRun {
    /// Successful traces in seed-list order.
    pub traces: Vec<DiffusionTrace>,
    pub failures: Vec<SeedFailure>,
    /// Seeds whose traces were already on disk.
    pub reused: Vec<u64>,
    pub output_dir: PathBuf,
}

impl EnsembleRun {
    pub fn stats(&self) -> Result<EnsembleStats> {
        EnsembleStats::from_traces(&self.traces)
    }
}

/// Runs every seed on a bounded worker pool, writing `trace_seed<seed>.csv`
/// and its JSON sidecar as each one finishes.
///
/// Seeds with a finished trace for the same trajectory settings are loaded
/// instead of recomputed, so an interrupted run can simply be restarted. A
/// failing seed is recorded and the rest of the ensemble continues; the
/// summary `ensemble.json` is written once all seeds are done.
pub fn run_ensemble(cfg: &ExperimentConfig) -> Result<EnsembleRun> {
    cfg.validate()?;
    let dir = cfg.output_dir.clone();
    std::fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
    let hash = cfg.trajectory_hash();
    let seeds = cfg.seeds.seeds();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.workers)
        .build()
        .map_err(|e| Error::InvalidParameter(format!("worker pool: {e}")))?;

    // each seed writes only its own files; aggregation happens afterwards
    let outcomes: Vec<(u64, Result<(DiffusionTrace, bool)>)> = pool.install(|| {
        seeds
            .par_iter()
            .map(|&seed| {
                if let Some(trace) = completed_trace(&dir, seed, &hash) {
                    return (seed, Ok((trace, true)));
                }
                let out = run_seed(cfg, seed).and_then(|trace| {
                    let sidecar = json!({
                        "metadata": trace.metadata,
                        "trajectory_hash": hash,
                        "initial_site": cfg.initial_site,
                        "samples": trace.len(),
                    });
                    trace.save(&dir, &trace_stem(seed), &sidecar)?;
                    Ok((trace, false))
                });
                (seed, out)
            })
            .collect()
    });

    let mut run = EnsembleRun {
        traces: Vec::new(),
        failures: Vec::new(),
        reused: Vec::new(),
        output_dir: dir.clone(),
    };
    for (seed, outcome) in outcomes {
        match outcome {
            Ok((trace, reused)) => {
                if reused {
                    run.reused.push(seed);
                }
                run.traces.push(trace);
            }
            Err(e) => run.failures.push(SeedFailure {
                seed,
                numerical: e.is_numerical(),
                error: e.to_string(),
            }),
        }
    }
    let summary = json!({
        "config_hash": cfg.hash(),
        "trajectory_hash": hash,
        "completed": run.traces.iter().map(|t| t.metadata.seed).collect::<Vec<_>>(),
        "reused": run.reused,
        "failures": run.failures,
    });
    let path = dir.join("ensemble.json");
    let text = serde_json::to_string_pretty(&summary).map_err(|e| Error::parse("ensemble summary", e.to_string()))?;
    std::fs::write(&path, text).map_err(|e| Error::io(&path, e))?;
    Ok(run)
}

/// Loads every `trace_seed*.csv` with a sidecar from `dir`, ordered by seed.
pub fn load_traces(dir: &Path) -> Result<Vec<DiffusionTrace>> {
    let mut seeds = Vec::new();
    for entry in std::fs::read_dir(dir).map_err(|e| Error::io(dir, e))? {
        let name = entry.map_err(|e| Error::io(dir, e))?.file_name();
        let name = name.to_string_lossy();
        if let Some(seed) = name.strip_prefix("trace_seed").and_then(|r| r.strip_suffix(".json")) {
            if let Ok(seed) = seed.parse::<u64>() {
                seeds.push(seed);
            }
        }
    }
    seeds.sort_unstable();
    seeds
        .iter()
        .map(|&s| DiffusionTrace::load(dir, &trace_stem(s)))
        .collect()
}

/// Order statistics of `D(t)` across seeds on a shared sample grid.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EnsembleStats {
    pub times: Vec<f64>,
    pub median: Vec<f64>,
    pub q25: Vec<f64>,
    pub q75: Vec<f64>,
    pub mean: Vec<f64>,
    pub traces: usize,
}

/// Linear-interpolation quantile of sorted data.
pub fn quantile(sorted: &[f64], p: f64) -> f64 {
    let h = (sorted.len() - 1) as f64 * p;
    let (lo, hi) = (h.floor() as usize, h.ceil() as usize);
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

impl EnsembleStats {
    pub fn from_traces(traces: &[DiffusionTrace]) -> Result<Self> {
        let first = traces
            .first()
            .ok_or_else(|| Error::InsufficientData("no traces".into()))?;
        let times = first.sample_times.clone();
        if let Some(t) = traces.iter().find(|t| t.sample_times != times) {
            return Err(Error::InvalidParameter(format!(
                "trace for seed {} uses a different sample grid",
                t.metadata.seed
            )));
        }
        let n = times.len();
        let mut stats = Self {
            times,
            median: Vec::with_capacity(n),
            q25: Vec::with_capacity(n),
            q75: Vec::with_capacity(n),
            mean: Vec::with_capacity(n),
            traces: traces.len(),
        };
        let mut column = Vec::with_capacity(traces.len());
        for i in 0..n {
            column.clear();
            column.extend(traces.iter().map(|t| t.diffusion_values[i]));
            column.sort_by(f64::total_cmp);
            stats.q25.push(quantile(&column, 0.25));
            stats.median.push(quantile(&column, 0.5));
            stats.q75.push(quantile(&column, 0.75));
            stats.mean.push(column.iter().sum::<f64>() / column.len() as f64);
        }
        Ok(stats)
    }
}

/// Exponent of the median curve with its seed-bootstrap spread.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BootstrapKappa {
    pub kappa: f64,
    /// Standard deviation of `κ` over resampled seed sets.
    pub stderr: f64,
    pub resamples: usize,
}

impl BootstrapKappa {
    /// `|κ − target| ≤ sigmas·stderr`.
    pub fn consistent_with(&self, target: f64, sigmas: f64) -> bool {
        (self.kappa - target).abs() <= sigmas * self.stderr
    }
}

/// Refits the median curve on `resamples` draws of the seeds with
/// replacement. The regression stderr of a single fit only measures scatter
/// about one curve (and its residuals are strongly correlated); this spread
/// is the uncertainty from the choice of disorder realizations.
pub fn bootstrap_kappa(
    traces: &[DiffusionTrace],
    t_min: f64,
    t_max: f64,
    resamples: usize,
    seed: u64,
) -> Result<BootstrapKappa> {
    if traces.len() < 2 || resamples < 2 {
        return Err(Error::InsufficientData(format!(
            "bootstrap needs at least 2 traces and 2 resamples (got {}, {resamples})",
            traces.len()
        )));
    }
    let fit_median = |set: &[DiffusionTrace]| -> Result<f64> {
        let stats = EnsembleStats::from_traces(set)?;
        Ok(fit_power_law(&stats.times, &stats.median, t_min, t_max)?.kappa)
    };
    let kappa = fit_median(traces)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = traces.len() as u64;
    let mut draws = Vec::with_capacity(resamples);
    let mut set = Vec::with_capacity(traces.len());
    for _ in 0..resamples {
        set.clear();
        set.extend((0..n).map(|_| traces[(rng.next_u64() % n) as usize].clone()));
        draws.push(fit_median(&set)?);
    }
    let mean = draws.iter().sum::<f64>() / resamples as f64;
    let var = draws.iter().map(|k| (k - mean).powi(2)).sum::<f64>() / (resamples - 1) as f64;
    Ok(BootstrapKappa {
        kappa,
        stderr: var.sqrt(),
        resamples,
    })
}
