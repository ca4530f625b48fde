//! Lattice wavefunctions on a finite window and the observables built on them.
//!
//! A [`LatticeState`] lives on the sites `-W..=W` and is identically zero
//! outside. Storage is one dense contiguous array indexed by `site + W`.

mod io;
mod trace;

pub use trace::{DiffusionTrace, TraceMetadata};

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Complex amplitudes `q_j` on the window `[-W, W]`.
#[derive(Debug, Clone, PartialEq)]
pub struct LatticeState {
    radius: usize,
    amplitudes: Vec<Complex64>,
    time: f64,
}

impl LatticeState {
    pub fn zeros(radius: usize) -> Self {
        Self {
            radius,
            amplitudes: vec![Complex64::new(0.0, 0.0); 2 * radius + 1],
            time: 0.0,
        }
    }

    /// Unit mass on a single site.
    pub fn delta(radius: usize, site: i64) -> Result<Self> {
        let mut state = Self::zeros(radius);
        state.set(site, Complex64::new(1.0, 0.0))?;
        Ok(state)
    }

    pub fn from_amplitudes(radius: usize, amplitudes: Vec<Complex64>) -> Result<Self> {
        if amplitudes.len() != 2 * radius + 1 {
            return Err(Error::InvalidParameter(format!(
                "expected {} amplitudes for radius {radius}, got {}",
                2 * radius + 1,
                amplitudes.len()
            )));
        }
        Ok(Self {
            radius,
            amplitudes,
            time: 0.0,
        })
    }

    /// Builds a state from `(site, amplitude)` pairs; unlisted sites are zero.
    pub fn from_sites<I>(radius: usize, sites: I) -> Result<Self>
    where
        I: IntoIterator<Item = (i64, Complex64)>,
    {
        let mut state = Self::zeros(radius);
        for (site, value) in sites {
            state.set(site, value)?;
        }
        Ok(state)
    }

    pub fn radius(&self) -> usize {
        self.radius
    }

    pub fn len(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.amplitudes.is_empty()
    }

    pub fn time(&self) -> f64 {
        self.time
    }

    pub fn set_time(&mut self, time: f64) {
        self.time = time;
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    pub fn amplitudes_mut(&mut self) -> &mut [Complex64] {
        &mut self.amplitudes
    }

    pub fn into_amplitudes(self) -> Vec<Complex64> {
        self.amplitudes
    }

    /// Sites of the window in storage order.
    pub fn sites(&self) -> impl Iterator<Item = i64> + '_ {
        let w = self.radius as i64;
        -w..=w
    }

    pub fn index_of(&self, site: i64) -> Option<usize> {
        let w = self.radius as i64;
        (-w..=w).contains(&site).then(|| (site + w) as usize)
    }

    /// Amplitude at `site`; zero outside the window.
    pub fn get(&self, site: i64) -> Complex64 {
        self.index_of(site).map(|i| self.amplitudes[i]).unwrap_or_default()
    }

    pub fn set(&mut self, site: i64, value: Complex64) -> Result<()> {
        let idx = self
            .index_of(site)
            .ok_or_else(|| Error::InvalidParameter(format!("site {site} outside window radius {}", self.radius)))?;
        self.amplitudes[idx] = value;
        Ok(())
    }

    /// `(site, q_site)` pairs.
    pub fn iter(&self) -> impl Iterator<Item = (i64, Complex64)> + '_ {
        self.sites().zip(self.amplitudes.iter().copied())
    }

    /// ℓ² mass `Σ |q_j|²`.
    pub fn l2_mass(&self) -> f64 {
        self.amplitudes.iter().map(|a| a.norm_sqr()).sum()
    }

    /// Second moment `Σ j² |q_j|²`.
    pub fn diffusion_moment(&self) -> f64 {
        self.iter().map(|(j, a)| (j * j) as f64 * a.norm_sqr()).sum()
    }

    /// `Σ |j|^{2s} |q_j|²`, with the origin contributing only when `s == 0`.
    pub fn sobolev_norm_sq(&self, s: f64) -> Result<f64> {
        if !(s >= 0.0) {
            return Err(Error::InvalidParameter(format!(
                "Sobolev index must be non-negative, got {s}"
            )));
        }
        Ok(sobolev_sum(self.iter(), s))
    }

    /// Mass beyond `|k| > j0`.
    pub fn tail_mass(&self, j0: usize) -> Result<f64> {
        if j0 == 0 || j0 > self.radius {
            return Err(Error::InvalidParameter(format!(
                "tail cutoff j0 = {j0} must satisfy 0 < j0 <= W = {}",
                self.radius
            )));
        }
        let j0 = j0 as i64;
        Ok(self
            .iter()
            .filter(|(j, _)| j.abs() > j0)
            .map(|(_, a)| a.norm_sqr())
            .sum())
    }

    /// Mass on the outermost `width` sites at each end of the window.
    pub fn edge_mass(&self, width: usize) -> f64 {
        let width = width.min(self.radius + 1);
        let n = self.amplitudes.len();
        let left: f64 = self.amplitudes[..width].iter().map(|a| a.norm_sqr()).sum();
        let right: f64 = self.amplitudes[n - width..].iter().map(|a| a.norm_sqr()).sum();
        if 2 * width > n {
            // windows smaller than two edge layers overlap; count once
            self.l2_mass()
        } else {
            left + right
        }
    }
}

fn sobolev_sum(iter: impl Iterator<Item = (i64, Complex64)>, s: f64) -> f64 {
    iter.map(|(j, a)| {
        let weight = if j == 0 {
            if s == 0.0 {
                1.0
            } else {
                0.0
            }
        } else {
            (j.unsigned_abs() as f64).powf(2.0 * s)
        };
        weight * a.norm_sqr()
    })
    .sum()
}

/// Left- and right-hand sides of a tame convolution inequality.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TameCheck {
    pub lhs: f64,
    pub rhs: f64,
}

impl TameCheck {
    pub fn holds(&self) -> bool {
        self.lhs <= self.rhs
    }
}

/// Testing constant `C(s) = 2^{s+1}` used on the right-hand side of the tame
/// inequalities. It is a convention for the oracle, not a sharp constant.
pub fn tame_constant(s: f64) -> f64 {
    2f64.powf(s + 1.0)
}

/// Discrete convolution `(p*q)_j = Σ_i p_{j-i} q_i` on the window of radius
/// `W_p + W_q`.
pub fn convolve(p: &LatticeState, q: &LatticeState) -> LatticeState {
    let radius = p.radius + q.radius;
    let mut out = vec![Complex64::new(0.0, 0.0); 2 * radius + 1];
    // index(p) + index(q) = index(out) because the offsets add up
    for (i, &a) in p.amplitudes.iter().enumerate() {
        if a == Complex64::new(0.0, 0.0) {
            continue;
        }
        for (k, &b) in q.amplitudes.iter().enumerate() {
            out[i + k] += a * b;
        }
    }
    LatticeState {
        radius,
        amplitudes: out,
        time: 0.0,
    }
}

/// `‖p*q‖_{H^s}` against `C(s)(‖p‖_{H^s}‖q‖_{H^1} + ‖p‖_{H^1}‖q‖_{H^s})`.
///
/// With the homogeneous weight `|j|^{2s}` mass at the origin is invisible to
/// the right-hand side, so the inequality only holds for states vanishing at
/// `j = 0`.
pub fn convolution_tame_check(p: &LatticeState, q: &LatticeState, s: f64) -> Result<TameCheck> {
    let conv = convolve(p, q);
    let lhs = conv.sobolev_norm_sq(s)?.sqrt();
    let ps = p.sobolev_norm_sq(s)?.sqrt();
    let p1 = p.sobolev_norm_sq(1.0)?.sqrt();
    let qs = q.sobolev_norm_sq(s)?.sqrt();
    let q1 = q.sobolev_norm_sq(1.0)?.sqrt();
    Ok(TameCheck {
        lhs,
        rhs: tame_constant(s) * (ps * q1 + p1 * qs),
    })
}

/// `‖q*q‖_{H^s}` against `C(s) j0^{1-s} ‖q‖_{H^s}²` for states vanishing on
/// `[-j0, j0]`.
pub fn tail_tame_check(q: &LatticeState, j0: usize, s: f64) -> Result<TameCheck> {
    let j0i = j0 as i64;
    if q.iter().any(|(j, a)| j.abs() <= j0i && a != Complex64::new(0.0, 0.0)) {
        return Err(Error::InvalidParameter(format!("state must vanish on [-{j0}, {j0}]")));
    }
    let conv = convolve(q, q);
    let lhs = conv.sobolev_norm_sq(s)?.sqrt();
    let qs = q.sobolev_norm_sq(s)?;
    Ok(TameCheck {
        lhs,
        rhs: tame_constant(s) * (j0 as f64).powf(1.0 - s) * qs,
    })
}
