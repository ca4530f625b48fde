use num_complex::Complex64;

use super::FormalHamiltonian;
use crate::error::{Error, Result};
use crate::lattice::LatticeState;

/// Classical fourth-order Runge–Kutta for `q̇ = f(q)` over `[0, t]`.
pub fn rk4(field: impl Fn(&[Complex64]) -> Vec<Complex64>, q0: &[Complex64], t: f64, steps: usize) -> Vec<Complex64> {
    let h = t / steps.max(1) as f64;
    let mut q = q0.to_vec();
    let axpy = |q: &[Complex64], k: &[Complex64], a: f64| -> Vec<Complex64> {
        q.iter().zip(k).map(|(x, y)| x + y * a).collect()
    };
    for _ in 0..steps.max(1) {
        let k1 = field(&q);
        let k2 = field(&axpy(&q, &k1, h / 2.0));
        let k3 = field(&axpy(&q, &k2, h / 2.0));
        let k4 = field(&axpy(&q, &k3, h));
        for i in 0..q.len() {
            q[i] += (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]) * (h / 6.0);
        }
    }
    q
}

/// Lattice dynamics of a formal Hamiltonian, `q̇ = −2i ∂H/∂q̄`, up to time `t`.
pub fn hamiltonian_flow(h: &FormalHamiltonian, state: &LatticeState, t: f64, steps: usize) -> Result<LatticeState> {
    let r = state.radius();
    let q = rk4(
        |q| {
            h.conj_gradient(r, q)
                .into_iter()
                .map(|g| Complex64::new(0.0, -2.0) * g)
                .collect()
        },
        state.amplitudes(),
        t,
        steps,
    );
    let mut out = LatticeState::from_amplitudes(r, q)?;
    out.set_time(state.time() + t);
    Ok(out)
}

/// Time-`t` map of the generator flow `q̇ = i ∂F/∂q̄`, under which
/// `d/dt G(q(t)) = {G, F}(q(t))`.
pub fn generator_flow(f: &FormalHamiltonian, state: &LatticeState, t: f64, steps: usize) -> Result<LatticeState> {
    let r = state.radius();
    let q = rk4(
        |q| {
            f.conj_gradient(r, q)
                .into_iter()
                .map(|g| Complex64::new(0.0, 1.0) * g)
                .collect()
        },
        state.amplitudes(),
        t,
        steps,
    );
    let mut out = LatticeState::from_amplitudes(r, q)?;
    out.set_time(state.time());
    Ok(out)
}

/// `Γ(q̃) = X_{F_1} ∘ … ∘ X_{F_M}(q̃)` with time-1 generator flows (the last
/// generator acts first).
pub fn conjugate_state(generators: &[FormalHamiltonian], state: &LatticeState, steps: usize) -> Result<LatticeState> {
    if steps == 0 {
        return Err(Error::InvalidParameter("flow needs at least one step".into()));
    }
    let mut q = state.clone();
    for f in generators.iter().rev() {
        q = generator_flow(f, &q, 1.0, steps)?;
    }
    Ok(q)
}
