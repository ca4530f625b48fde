use serde::Serialize;

use crate::error::{Error, Result};
use crate::lattice::DiffusionTrace;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TailRate {
    pub j0: usize,
    /// Interior sample times where the derivative was estimated.
    pub times: Vec<f64>,
    pub rates: Vec<f64>,
    /// Largest `|d/dt Σ_{|k|>j0} |q_k|²|`.
    pub max_rate: f64,
    pub max_rate_time: f64,
    /// `j0^{−3/κ}`.
    pub bound: f64,
}

impl TailRate {
    /// Whether the largest observed rate sits under `j0^{−3/κ}`. This is a
    /// diagnostic in the original variables, not a theorem check.
    pub fn within_bound(&self) -> bool {
        self.max_rate <= self.bound
    }

    /// Largest rate over samples with `t ≥ t_min`.
    pub fn max_rate_after(&self, t_min: f64) -> f64 {
        self.times
            .iter()
            .zip(&self.rates)
            .filter(|(t, _)| **t >= t_min)
            .fold(0.0, |m, (_, r)| m.max(r.abs()))
    }
}

/// Second-order derivative at `x1` from three unevenly spaced samples.
fn central_difference(x: [f64; 3], y: [f64; 3]) -> f64 {
    let (h0, h1) = (x[1] - x[0], x[2] - x[1]);
    (-h1 / (h0 * (h0 + h1))) * y[0] + ((h1 - h0) / (h0 * h1)) * y[1] + (h0 / (h1 * (h0 + h1))) * y[2]
}

/// Estimates `d/dt` of the recorded tail mass on the trace's sample grid
/// and compares its maximum with `j0^{−3/κ}`.
///
/// The trace must have been recorded with tail index `j0`; the caller
/// passes it explicitly so a mismatch is visible at the call site.
pub fn tail_rate_check(trace: &DiffusionTrace, j0: usize, kappa: f64) -> Result<TailRate> {
    if trace.len() < 3 {
        return Err(Error::InsufficientData(format!(
            "tail rate needs at least 3 samples, trace has {}",
            trace.len()
        )));
    }
    if !(kappa > 0.0) {
        return Err(Error::InvalidParameter(format!("kappa = {kappa} must be positive")));
    }
    if j0 == 0 {
        return Err(Error::InvalidParameter("tail index j0 must be positive".into()));
    }
    let t = &trace.sample_times;
    let y = &trace.tail_values;
    if t.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidParameter(
            "trace times are not strictly increasing".into(),
        ));
    }
    let mut times = Vec::with_capacity(t.len() - 2);
    let mut rates = Vec::with_capacity(t.len() - 2);
    for i in 1..t.len() - 1 {
        times.push(t[i]);
        rates.push(central_difference(
            [t[i - 1], t[i], t[i + 1]],
            [y[i - 1], y[i], y[i + 1]],
        ));
    }
    let (max_rate, max_rate_time) =
        times.iter().zip(&rates).fold(
            (0.0f64, times[0]),
            |(m, at), (&ti, r)| if r.abs() > m { (r.abs(), ti) } else { (m, at) },
        );
    Ok(TailRate {
        j0,
        times,
        rates,
        max_rate,
        max_rate_time,
        bound: (j0 as f64).powf(-3.0 / kappa),
    })
}
