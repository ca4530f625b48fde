use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::Command;

use super::ensemble::EnsembleStats;
use super::fit::{fit_power_law, PowerLawFit};
use crate::error::{Error, Result};
use crate::lattice::DiffusionTrace;

pub const AGGREGATE_CSV: &str = "diffusion_ensemble.csv";
pub const PLOT_SCRIPT: &str = "plot_diffusion.py";
pub const PLOT_IMAGE: &str = "diffusion.png";

const SCRIPT: &str = r#"#!/usr/bin/env python3
# Renders the ensemble diffusion figure from diffusion_ensemble.csv.
import csv
import math
import os
import sys

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt

here = os.path.dirname(os.path.abspath(sys.argv[0]))
rows = []
with open(os.path.join(here, "diffusion_ensemble.csv")) as f:
    for row in csv.DictReader(f):
        rows.append({k: float(v) for k, v in row.items()})
rows = [r for r in rows if r["t"] > 0 and r["median"] > 0]
t = [r["t"] for r in rows]

fig, ax = plt.subplots(figsize=(6, 4.5))
ax.fill_between(t, [r["q25"] for r in rows], [r["q75"] for r in rows], alpha=0.3, label="interquartile")
ax.plot(t, [r["median"] for r in rows], lw=1.5, label="median D(t)")
fit = [(r["t"], r["fit"]) for r in rows if not math.isnan(r["fit"])]
if fit:
    ax.plot([p[0] for p in fit], [p[1] for p in fit], "k--", lw=1, label="power-law fit")
ax.set_xscale("log")
ax.set_yscale("log")
ax.set_xlabel("t")
ax.set_ylabel("D(t)")
ax.legend()
fig.tight_layout()
fig.savefig(os.path.join(here, "diffusion.png"), dpi=150)
"#;

#[derive(Debug, Clone)]
pub struct PlotOutput {
    pub csv: PathBuf,
    pub script: PathBuf,
    pub stats: EnsembleStats,
    /// Fit of the median over the requested window, when it has enough data.
    pub fit: Option<PowerLawFit>,
}

/// Writes the aggregated `t, median, q25, q75, mean, fit` table and the
/// plotting script into `outdir`. The `fit` column is `NaN` outside
/// `[t_min, t_max]` or when the median cannot be fitted.
pub fn emit_plots(traces: &[DiffusionTrace], outdir: &Path, t_min: f64, t_max: f64) -> Result<PlotOutput> {
    let stats = EnsembleStats::from_traces(traces)?;
    let fit = fit_power_law(&stats.times, &stats.median, t_min, t_max).ok();
    std::fs::create_dir_all(outdir).map_err(|e| Error::io(outdir, e))?;

    let csv = outdir.join(AGGREGATE_CSV);
    let mut out = Vec::new();
    writeln!(out, "t,median,q25,q75,mean,fit").expect("in-memory write");
    for i in 0..stats.times.len() {
        let t = stats.times[i];
        let line = match fit {
            Some(f) if t >= t_min && t <= t_max => f.predict(t),
            _ => f64::NAN,
        };
        writeln!(
            out,
            "{:e},{:e},{:e},{:e},{:e},{:e}",
            t, stats.median[i], stats.q25[i], stats.q75[i], stats.mean[i], line
        )
        .expect("in-memory write");
    }
    std::fs::write(&csv, out).map_err(|e| Error::io(&csv, e))?;

    let script = outdir.join(PLOT_SCRIPT);
    std::fs::write(&script, SCRIPT).map_err(|e| Error::io(&script, e))?;
    Ok(PlotOutput {
        csv,
        script,
        stats,
        fit,
    })
}

/// Runs the bundled script with `python3`. Returns the image path, or the
/// interpreter's complaint when python or matplotlib is unavailable.
pub fn render_plots(outdir: &Path) -> std::result::Result<PathBuf, String> {
    let status = Command::new("python3")
        .arg(outdir.join(PLOT_SCRIPT))
        .output()
        .map_err(|e| format!("python3 not runnable: {e}"))?;
    if !status.status.success() {
        return Err(String::from_utf8_lossy(&status.stderr).trim().to_string());
    }
    Ok(outdir.join(PLOT_IMAGE))
}
