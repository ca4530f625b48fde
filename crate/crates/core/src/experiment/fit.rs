use serde::Serialize;

use crate::error::{Error, Result};

pub const MIN_FIT_POINTS: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PowerLawFit {
    /// Slope of `ln D` against `ln t`.
    pub kappa: f64,
    pub stderr: f64,
    /// `ln` of the prefactor `c` in `D ≈ c·t^κ`.
    pub ln_prefactor: f64,
    pub r2: f64,
    pub points: usize,
}

impl PowerLawFit {
    pub fn predict(&self, t: f64) -> f64 {
        (self.ln_prefactor + self.kappa * t.ln()).exp()
    }

    /// `|κ − target| ≤ sigmas·stderr`.
    pub fn consistent_with(&self, target: f64, sigmas: f64) -> bool {
        (self.kappa - target).abs() <= sigmas * self.stderr
    }
}

/// Ordinary least squares of `ln D` on `ln t` over samples with
/// `t_min ≤ t ≤ t_max`.
///
/// Exactly constant data gives `κ = 0`, `stderr = 0` and `r² = 1`.
pub fn fit_power_law(times: &[f64], values: &[f64], t_min: f64, t_max: f64) -> Result<PowerLawFit> {
    if times.len() != values.len() {
        return Err(Error::InvalidParameter(format!(
            "{} times against {} values",
            times.len(),
            values.len()
        )));
    }
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for (&t, &d) in times.iter().zip(values) {
        if t < t_min || t > t_max {
            continue;
        }
        if !(d > 0.0 && d.is_finite()) || t <= 0.0 {
            return Err(Error::InsufficientData(format!(
                "non-positive sample D({t}) = {d} in the fit window"
            )));
        }
        xs.push(t.ln());
        ys.push(d.ln());
    }
    // centring on the first sample makes exactly constant data exactly flat
    let y0 = ys.first().copied().unwrap_or(0.0);
    ys.iter_mut().for_each(|y| *y -= y0);
    let n = xs.len();
    if n < MIN_FIT_POINTS {
        return Err(Error::InsufficientData(format!(
            "{n} samples in [{t_min}, {t_max}], need at least {MIN_FIT_POINTS}"
        )));
    }
    let nf = n as f64;
    let mx = xs.iter().sum::<f64>() / nf;
    let my = ys.iter().sum::<f64>() / nf;
    let (mut sxx, mut sxy, mut syy) = (0.0, 0.0, 0.0);
    for (x, y) in xs.iter().zip(&ys) {
        let (dx, dy) = (x - mx, y - my);
        sxx += dx * dx;
        sxy += dx * dy;
        syy += dy * dy;
    }
    if sxx <= 0.0 {
        return Err(Error::InsufficientData("all fit samples share one time".into()));
    }
    let kappa = sxy / sxx;
    let intercept = my - kappa * mx;
    let sse: f64 = xs
        .iter()
        .zip(&ys)
        .map(|(x, y)| (y - intercept - kappa * x).powi(2))
        .sum();
    let stderr = (sse.max(0.0) / (nf - 2.0) / sxx).sqrt();
    let r2 = if syy > 0.0 { 1.0 - sse / syy } else { 1.0 };
    Ok(PowerLawFit {
        kappa,
        stderr,
        ln_prefactor: y0 + intercept,
        r2,
        points: n,
    })
}
