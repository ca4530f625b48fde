//! Time integration of
//!
//! ```text
//! i dq_j/dt = ε (q_{j-1} + q_{j+1}) + v_j q_j + δ |q_j|² q_j
//! ```
//!
//! by Strang splitting into the exactly solvable onsite flow and the pure
//! hopping flow, together with exact solutions of the two decoupled limits.

mod integrate;
mod linear;
mod propagator;

pub use integrate::{integrate, log_grid, IntegrateOptions};
pub use linear::{exact_linear_solution, LinearPropagator, DENSE_RADIUS_LIMIT};
pub use propagator::{bessel_j_sequence, StrangPropagator};

use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::LatticeState;
use crate::potential::Potential;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Boundary {
    /// Hard zero outside the window.
    Dirichlet,
    /// Site `W` couples to site `-W`.
    Periodic,
}

impl fmt::Display for Boundary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Boundary::Dirichlet => "dirichlet",
            Boundary::Periodic => "periodic",
        })
    }
}

impl FromStr for Boundary {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "dirichlet" => Ok(Boundary::Dirichlet),
            "periodic" => Ok(Boundary::Periodic),
            other => Err(Error::InvalidParameter(format!("unknown boundary '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    pub epsilon: f64,
    pub delta: f64,
    pub dt: f64,
    pub boundary: Boundary,
}

impl Default for ModelParams {
    fn default() -> Self {
        Self {
            epsilon: 0.1,
            delta: 0.1,
            dt: 0.01,
            boundary: Boundary::Periodic,
        }
    }
}

impl ModelParams {
    pub fn new(epsilon: f64, delta: f64, dt: f64, boundary: Boundary) -> Result<Self> {
        let p = Self {
            epsilon,
            delta,
            dt,
            boundary,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.epsilon >= 0.0 && self.epsilon.is_finite()) {
            return Err(Error::InvalidParameter(format!("epsilon = {}", self.epsilon)));
        }
        if !(self.delta >= 0.0 && self.delta.is_finite()) {
            return Err(Error::InvalidParameter(format!("delta = {}", self.delta)));
        }
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::InvalidParameter(format!("dt = {}", self.dt)));
        }
        Ok(())
    }
}

fn check_window(state: &LatticeState, pot: &Potential) -> Result<()> {
    if state.radius() != pot.radius() {
        return Err(Error::WindowMismatch {
            state: state.radius(),
            potential: pot.radius(),
        });
    }
    Ok(())
}

/// Neighbour sum `q_{j-1} + q_{j+1}` at dense index `i`.
#[inline]
fn neighbour_sum(q: &[Complex64], i: usize, boundary: Boundary) -> Complex64 {
    let n = q.len();
    let zero = Complex64::new(0.0, 0.0);
    let (left, right) = match boundary {
        Boundary::Dirichlet => (
            if i > 0 { q[i - 1] } else { zero },
            if i + 1 < n { q[i + 1] } else { zero },
        ),
        Boundary::Periodic => (q[(i + n - 1) % n], q[(i + 1) % n]),
    };
    left + right
}

/// `dq_j/dt = -i [ε(q_{j-1}+q_{j+1}) + v_j q_j + δ|q_j|² q_j]`.
pub fn rhs(state: &LatticeState, pot: &Potential, params: &ModelParams) -> Result<Vec<Complex64>> {
    check_window(state, pot)?;
    let q = state.amplitudes();
    let v = pot.values();
    let minus_i = Complex64::new(0.0, -1.0);
    Ok((0..q.len())
        .map(|i| {
            let hop = neighbour_sum(q, i, params.boundary) * params.epsilon;
            let onsite = q[i] * (v[i] + params.delta * q[i].norm_sqr());
            minus_i * (hop + onsite)
        })
        .collect())
}

/// `H = ½(Σ v_j|q_j|² + ε Σ (q̄_j q_{j+1} + c.c.) + ½ δ Σ |q_j|⁴)`.
pub fn hamiltonian_energy(state: &LatticeState, pot: &Potential, params: &ModelParams) -> Result<f64> {
    check_window(state, pot)?;
    Ok(energy_of(state.amplitudes(), pot.values(), params))
}

pub(crate) fn energy_of(q: &[Complex64], v: &[f64], params: &ModelParams) -> f64 {
    let n = q.len();
    let mut onsite = 0.0;
    let mut quartic = 0.0;
    let mut hop = 0.0;
    for i in 0..n {
        let m = q[i].norm_sqr();
        onsite += v[i] * m;
        quartic += m * m;
        if i + 1 < n {
            hop += 2.0 * (q[i].conj() * q[i + 1]).re;
        }
    }
    if params.boundary == Boundary::Periodic && n > 2 {
        hop += 2.0 * (q[n - 1].conj() * q[0]).re;
    }
    0.5 * (onsite + params.epsilon * hop + 0.5 * params.delta * quartic)
}

/// One step `A(dt/2) B(dt) A(dt/2)`.
///
/// Builds a fresh propagator; loops should hold a [`StrangPropagator`].
pub fn step_strang(state: &LatticeState, pot: &Potential, params: &ModelParams) -> Result<LatticeState> {
    check_window(state, pot)?;
    let mut prop = StrangPropagator::new(pot, params, params.dt);
    let mut out = state.clone();
    prop.step(out.amplitudes_mut());
    out.set_time(state.time() + params.dt);
    Ok(out)
}

/// `q_j(t) = exp(-i(v_j + δ|q_j(0)|²) t) q_j(0)`.
pub fn exact_onsite_solution(q0: &LatticeState, pot: &Potential, delta: f64, t: f64) -> Result<LatticeState> {
    check_window(q0, pot)?;
    let amps = q0
        .amplitudes()
        .iter()
        .zip(pot.values())
        .map(|(&q, &v)| {
            let phase = -(v + delta * q.norm_sqr()) * t;
            q * Complex64::from_polar(1.0, phase)
        })
        .collect();
    let mut out = LatticeState::from_amplitudes(q0.radius(), amps)?;
    out.set_time(q0.time() + t);
    Ok(out)
}

/// ℓ² distance between two states on one window.
pub fn l2_distance(a: &LatticeState, b: &LatticeState) -> f64 {
    a.amplitudes()
        .iter()
        .zip(b.amplitudes())
        .map(|(x, y)| (x - y).norm_sqr())
        .sum::<f64>()
        .sqrt()
}
