use serde::Serialize;

use crate::error::{Error, Result};
use crate::normal_form::{NormalFormSchedule, NormalFormState};

/// `⌊j̄0 / (5 ln j̄0)⌋` independent trials in `[j̄0, 2j̄0]`.
pub fn dyadic_trials(j0_bar: f64) -> u64 {
    (j0_bar / (5.0 * j0_bar.ln())).floor() as u64
}

/// `1 − (1 − p)^{⌊j̄0/(5 ln j̄0)⌋}`.
pub fn dyadic_success(j0_bar: f64, p_single: f64) -> Result<f64> {
    if !(j0_bar >= 10.0) {
        return Err(Error::InvalidParameter(format!("j0_bar = {j0_bar} below 10")));
    }
    if !(0.0..=1.0).contains(&p_single) {
        return Err(Error::InvalidParameter(format!(
            "probability {p_single} outside [0, 1]"
        )));
    }
    if p_single == 1.0 {
        return Ok(1.0);
    }
    let m = dyadic_trials(j0_bar) as f64;
    Ok(-(m * (-p_single).ln_1p()).exp_m1())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DyadicCheck {
    pub j0_bar: f64,
    pub ln_epsilon: f64,
    /// `j̄0^{−6ε^{1/1000}}`.
    pub p_single: f64,
    pub trials: u64,
    pub success: f64,
    /// `1 − e^{−√j̄0}`.
    pub floor: f64,
    /// `ln` of the failure probability `(1 − p)^m`, compared against `−√j̄0`.
    pub ln_failure: f64,
    pub holds: bool,
}

/// `1 − (1 − p)^m > 1 − e^{−√j̄0}` for `p = j̄0^{−6ε^{1/1000}}`, decided as
/// `m ln(1 − p) < −√j̄0` so that the comparison survives when both sides
/// round to 1. `ε` enters through `ln ε` to reach the regime `ε ≪ 10⁻³⁰⁸`
/// where the inequality starts to hold.
pub fn dyadic_check(j0_bar: f64, ln_epsilon: f64) -> Result<DyadicCheck> {
    let a = (ln_epsilon / 1000.0).exp();
    let p_single = (-6.0 * a * j0_bar.ln()).exp();
    let success = dyadic_success(j0_bar, p_single)?;
    let trials = dyadic_trials(j0_bar);
    let ln_failure = if p_single == 1.0 {
        f64::NEG_INFINITY
    } else {
        trials as f64 * (-p_single).ln_1p()
    };
    Ok(DyadicCheck {
        j0_bar,
        ln_epsilon,
        p_single,
        trials,
        success,
        floor: -(-j0_bar.sqrt()).exp_m1(),
        ln_failure,
        holds: ln_failure < -j0_bar.sqrt(),
    })
}

/// Largest `ln ε` for which [`dyadic_check`] holds at `j̄0`: the inequality
/// needs `p > 1 − e^{−√j̄0/m}`, i.e. `ε^{1/1000} < −ln p* / (6 ln j̄0)`.
pub fn dyadic_ln_epsilon_threshold(j0_bar: f64) -> f64 {
    let m = dyadic_trials(j0_bar) as f64;
    let p_star = -(-j0_bar.sqrt() / m).exp_m1();
    let a = -p_star.ln() / (6.0 * j0_bar.ln());
    1000.0 * a.ln()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct JacobianCheck {
    /// `Σ_{r=1}^{M} ε_r`, the bound on `sup_l |∂(v_{sj} − v_j)/∂v_l|`.
    pub epsilon_sum: f64,
    pub sqrt_epsilon: f64,
    /// `(1 − √ε)^{ln j0}`, the claimed lower bound on `|det ∂V_s/∂V|`.
    pub det_lower: f64,
    pub holds: bool,
}

/// `Σ_{r≤M} ε_r ≤ √ε` on the schedule.
pub fn jacobian_bound(sched: &NormalFormSchedule) -> JacobianCheck {
    let epsilon_sum: f64 = (1..=sched.m).map(|r| sched.step(r).epsilon).sum();
    let sqrt_epsilon = sched.epsilon.sqrt();
    JacobianCheck {
        epsilon_sum,
        sqrt_epsilon,
        det_lower: (1.0 - sqrt_epsilon).powf((sched.j0 as f64).ln()),
        holds: epsilon_sum <= sqrt_epsilon,
    }
}

/// `sup_{j,l} |∂v_{sj}/∂v_l − δ_{jl}|` read off the carried derivatives of a
/// normal-form state.
pub fn frequency_jacobian_defect(state: &NormalFormState) -> f64 {
    let mut worst = 0.0f64;
    for (n, c) in state.d.iter() {
        let j = n.min_site();
        for &(l, d) in c.derivatives() {
            let target = if l == j { 1.0 } else { 0.0 };
            worst = worst.max((2.0 * d - target).norm());
        }
        if c.derivative(j) == Default::default() {
            worst = worst.max(1.0);
        }
    }
    worst
}
