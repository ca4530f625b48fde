use num_complex::Complex64;
use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::lattice::{tail_tame_check, tame_constant, LatticeState};

/// Largest window the suite draws.
pub const TAME_MAX_RADIUS: usize = 256;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TameCase {
    pub radius: usize,
    pub support: usize,
    pub lhs: f64,
    pub rhs: f64,
    pub holds: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TameSuite {
    pub j0: usize,
    pub s: f64,
    pub constant: f64,
    pub cases: Vec<TameCase>,
}

impl TameSuite {
    pub fn all_hold(&self) -> bool {
        self.cases.iter().all(|c| c.holds)
    }

    /// Largest `lhs / rhs`.
    pub fn worst_ratio(&self) -> f64 {
        self.cases.iter().map(|c| c.lhs / c.rhs).fold(0.0, f64::max)
    }
}

fn unit(rng: &mut ChaCha8Rng) -> f64 {
    (rng.next_u64() >> 11) as f64 / (1u64 << 53) as f64
}

/// A random state on a random window `j0 < W ≤ 256`, vanishing on
/// `[−j0, j0]`, with a random sparse or dense support outside it.
pub fn random_tail_state(rng: &mut ChaCha8Rng, j0: usize) -> Result<LatticeState> {
    if j0 + 1 > TAME_MAX_RADIUS {
        return Err(Error::InvalidParameter(format!(
            "j0 = {j0} leaves no room below radius {TAME_MAX_RADIUS}"
        )));
    }
    let radius = j0 + 1 + (rng.next_u64() % (TAME_MAX_RADIUS - j0) as u64) as usize;
    let fill = 0.05 + 0.95 * unit(rng);
    let mut sites = Vec::new();
    for j in (j0 as i64 + 1)..=radius as i64 {
        for site in [j, -j] {
            if unit(rng) < fill {
                // heavy-tailed magnitudes exercise both ends of the weight
                let mag = (-6.0 * unit(rng)).exp();
                let phase = std::f64::consts::TAU * unit(rng);
                sites.push((site, Complex64::from_polar(mag, phase)));
            }
        }
    }
    if sites.is_empty() {
        sites.push((radius as i64, Complex64::new(1.0, 0.0)));
    }
    LatticeState::from_sites(radius, sites)
}

/// Checks `‖q*q‖_{H^s} ≤ C(s) j0^{1−s} ‖q‖²_{H^s}` by direct summation on
/// `count` random states drawn from `seed`.
pub fn tame_suite(count: usize, seed: u64, j0: usize, s: f64) -> Result<TameSuite> {
    if !(s >= 1.0) {
        return Err(Error::InvalidParameter(format!("tame check needs s >= 1, got {s}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut cases = Vec::with_capacity(count);
    for _ in 0..count {
        let q = random_tail_state(&mut rng, j0)?;
        let check = tail_tame_check(&q, j0, s)?;
        cases.push(TameCase {
            radius: q.radius(),
            support: q.iter().filter(|(_, a)| a.norm_sqr() > 0.0).count(),
            lhs: check.lhs,
            rhs: check.rhs,
            holds: check.holds(),
        });
    }
    Ok(TameSuite {
        j0,
        s,
        constant: tame_constant(s),
        cases,
    })
}
