use num_complex::Complex64;

use super::{Coefficient, FormalHamiltonian, Monomial};
use crate::error::{Error, Result};
use crate::potential::Potential;

/// `H₁ = D₁ + Z₁ + R₁` over the potential's window with `δ = ε`.
#[derive(Debug, Clone, PartialEq)]
pub struct InitialHamiltonian {
    /// `½ Σ v_j |q_j|²`, with `∂_{v_j} = ½`.
    pub d: FormalHamiltonian,
    /// `(ε/4) Σ |q_j|⁴`.
    pub z: FormalHamiltonian,
    /// `(ε/2) Σ (q̄_j q_{j+1} + q_j q̄_{j+1})` over bonds inside the window.
    pub r: FormalHamiltonian,
}

impl InitialHamiltonian {
    pub fn total(&self) -> FormalHamiltonian {
        self.d.sum(&self.z).sum(&self.r)
    }
}

pub fn initial_hamiltonian(pot: &Potential, epsilon: f64) -> Result<InitialHamiltonian> {
    if !(epsilon > 0.0 && epsilon.is_finite()) {
        return Err(Error::InvalidParameter(format!("epsilon = {epsilon} must be positive")));
    }
    let w = pot.radius() as i32;
    let mut d = FormalHamiltonian::new();
    let mut z = FormalHamiltonian::new();
    let mut r = FormalHamiltonian::new();
    let half = Complex64::new(0.5, 0.0);
    for (j, v) in pot.iter() {
        let j = j as i32;
        d.insert(
            Monomial::action(j),
            Coefficient::with_derivatives(Complex64::new(0.5 * v, 0.0), [(j, half)]),
        );
        z.insert(Monomial::single(j, 2, 2), Coefficient::real(epsilon / 4.0));
        if j < w {
            r.insert(Monomial::hop(j, j + 1), Coefficient::real(epsilon / 2.0));
            r.insert(Monomial::hop(j + 1, j), Coefficient::real(epsilon / 2.0));
        }
    }
    Ok(InitialHamiltonian { d, z, r })
}

/// Factor `(δ/ε)^{1/2}`: if `q` solves the lattice equation with nonlinearity
/// `δ`, then `(δ/ε)^{1/2} q` solves it with nonlinearity `ε`, which is the
/// normalization used by the formal iteration.
pub fn amplitude_rescaling(epsilon: f64, delta: f64) -> Result<f64> {
    if !(epsilon > 0.0 && delta > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "rescaling needs epsilon > 0 and delta > 0 (got {epsilon}, {delta})"
        )));
    }
    Ok((delta / epsilon).sqrt())
}
