use serde::Serialize;

use crate::error::{Error, Result};

/// Iteration cap for the `ε_s` recurrence.
pub const MAX_SCHEDULE_STEPS: usize = 10_000;

/// Which recurrence drives the schedule.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ScheduleProfile {
    /// `ε_s = ε_{s−1}^{3/2} + j0^{−τ/2} ε_{s−1}` and
    /// `N_s = ln j0 − 20 ln ε_s / ln ε`, exactly.
    Paper,
    /// Desk-scale relaxation: the `j0^{−τ/2} ε_{s−1}` term (which only
    /// becomes negligible for astronomically large `j0`) is dropped and the
    /// elimination window is kept at least `⌈½ ln j0⌉` wide.
    Desk,
}

impl std::str::FromStr for ScheduleProfile {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "paper" => Ok(Self::Paper),
            "desk" => Ok(Self::Desk),
            _ => Err(Error::InvalidParameter(format!("unknown schedule profile '{s}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ScheduleStep {
    pub s: usize,
    pub epsilon: f64,
    pub delta: f64,
    /// `N_s` as a real number.
    pub window: f64,
    /// Sites `||j| − j0| ≤ halfwidth` form `A(j0, N_s)`.
    pub halfwidth: i64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NormalFormSchedule {
    pub epsilon: f64,
    pub tau: f64,
    pub j0: u64,
    pub kappa: f64,
    pub profile: ScheduleProfile,
    /// Entries for `s = 1, …, M + 1`.
    pub steps: Vec<ScheduleStep>,
    /// Number of normal-form steps.
    pub m: usize,
}

/// `δ_s = Π_{j=1}^{s−1} (1 − 1/(5 j²))`.
pub fn delta_s(s: usize) -> f64 {
    (1..s).map(|j| 1.0 - 0.2 / (j as f64 * j as f64)).product()
}

/// `lim δ_s = sin(π/√5) / (π/√5)` from the product formula for the sine.
pub fn delta_limit() -> f64 {
    let x = std::f64::consts::PI / 5f64.sqrt();
    x.sin() / x
}

/// `N_s = ln j0 − 20 ln ε_s / ln ε`.
pub fn window_width(j0: u64, epsilon: f64, epsilon_s: f64) -> f64 {
    (j0 as f64).ln() - 20.0 * epsilon_s.ln() / epsilon.ln()
}

impl NormalFormSchedule {
    pub fn build(epsilon: f64, tau: f64, j0: u64, kappa: f64, profile: ScheduleProfile) -> Result<Self> {
        if !(epsilon > 0.0 && epsilon < 1.0) {
            return Err(Error::InvalidParameter(format!("epsilon = {epsilon} outside (0, 1)")));
        }
        if !(tau > 0.0 && tau < 0.01) {
            return Err(Error::InvalidParameter(format!("tau = {tau} outside (0, 1/100)")));
        }
        if !(kappa > 0.0 && kappa.is_finite()) {
            return Err(Error::InvalidParameter(format!("kappa = {kappa} must be positive")));
        }
        if j0 < 2 {
            return Err(Error::InvalidParameter(format!("j0 = {j0} must be at least 2")));
        }
        let lnj0 = (j0 as f64).ln();
        let target = (-3.0 / kappa * lnj0).exp();
        let damping = (-tau / 2.0 * lnj0).exp();
        let floor = (0.5 * lnj0).ceil();
        let rate = match profile {
            ScheduleProfile::Paper => epsilon.sqrt() + damping,
            ScheduleProfile::Desk => epsilon.sqrt(),
        };
        if rate >= 1.0 {
            return Err(Error::ScheduleDiverges(format!(
                "ε^(1/2) + j0^(-τ/2) = {rate:.6} ≥ 1, so ε_s never decreases (ε = {epsilon}, τ = {tau}, j0 = {j0})"
            )));
        }
        let entry = |s: usize, eps_s: f64| {
            let mut window = window_width(j0, epsilon, eps_s);
            if profile == ScheduleProfile::Desk {
                window = window.max(floor);
            }
            ScheduleStep {
                s,
                epsilon: eps_s,
                delta: delta_s(s),
                window,
                halfwidth: window.ceil() as i64,
            }
        };
        let mut steps = vec![entry(1, epsilon)];
        let mut eps_s = epsilon;
        for s in 2..=MAX_SCHEDULE_STEPS + 1 {
            eps_s = match profile {
                ScheduleProfile::Paper => eps_s.powf(1.5) + damping * eps_s,
                ScheduleProfile::Desk => eps_s.powf(1.5),
            };
            steps.push(entry(s, eps_s));
            if eps_s <= target {
                return Ok(Self {
                    epsilon,
                    tau,
                    j0,
                    kappa,
                    profile,
                    steps,
                    m: s - 1,
                });
            }
        }
        Err(Error::ScheduleDiverges(format!(
            "ε_s = {eps_s:.3e} still above j0^(-3/κ) = {target:.3e} after {MAX_SCHEDULE_STEPS} steps"
        )))
    }

    /// Entry for step `s` (`1 ≤ s ≤ M + 1`).
    pub fn step(&self, s: usize) -> &ScheduleStep {
        &self.steps[s - 1]
    }

    /// `j0^{−3/κ}`.
    pub fn target(&self) -> f64 {
        (-3.0 / self.kappa * (self.j0 as f64).ln()).exp()
    }

    /// `γ_s = ε_s^{1/100}`.
    pub fn gamma(&self, s: usize) -> f64 {
        self.step(s).epsilon.powf(0.01)
    }

    /// Diameter cutoff `10 ln ε_{s+1} / ln ε` for monomials removed at step `s`.
    pub fn diameter_cut(&self, s: usize) -> f64 {
        10.0 * self.step(s + 1).epsilon.ln() / self.epsilon.ln()
    }

    /// Degree cutoff `10 / κ`.
    pub fn degree_cut(&self) -> f64 {
        10.0 / self.kappa
    }

    /// `M / ln ln j0`, the constant in `M ≤ C ln ln j0` (infinite when
    /// `ln ln j0 ≤ 0`).
    pub fn lnln_constant(&self) -> f64 {
        let ll = (self.j0 as f64).ln().ln();
        if ll > 0.0 {
            self.m as f64 / ll
        } else {
            f64::INFINITY
        }
    }

    /// Whether `N_M ≥ ½ ln j0`, the window condition closing the theorem.
    pub fn final_window_ok(&self) -> bool {
        self.step(self.m).window >= 0.5 * (self.j0 as f64).ln()
    }
}

/// Largest `ε` (to relative precision `1e-6`) for which the schedule reaches
/// `j0^{−3/κ}`; `None` if even `ε = 1e-300` fails.
pub fn epsilon_threshold(tau: f64, j0: u64, kappa: f64, profile: ScheduleProfile) -> Option<f64> {
    let ok = |e: f64| NormalFormSchedule::build(e, tau, j0, kappa, profile).is_ok();
    let (mut lo, mut hi) = (1e-300f64.ln(), 0.0f64);
    if !ok(lo.exp()) {
        return None;
    }
    while hi - lo > 1e-6 {
        let mid = 0.5 * (lo + hi);
        if ok(mid.exp()) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Some(lo.exp())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn first_entries() {
        let s = NormalFormSchedule::build(1e-4, 0.005, 10_000, 1.0, ScheduleProfile::Paper).unwrap();
        assert_eq!(s.step(1).delta, 1.0);
        assert_eq!(s.step(2).delta, 0.8);
        let e2 = 1e-4f64.powf(1.5) + 10_000f64.powf(-0.0025) * 1e-4;
        assert!((s.step(2).epsilon - e2).abs() < 1e-17);
        assert!(s.step(s.m + 1).epsilon <= s.target());
        assert!(s.step(s.m).epsilon > s.target());
        assert!((s.step(1).window - (10_000f64.ln() - 20.0)).abs() < 1e-12);
    }

    #[test]
    fn delta_limit_matches_long_product() {
        let direct = delta_s(100_001);
        assert!((direct - delta_limit()).abs() < 1e-5);
        assert!((delta_limit() - 0.701_998).abs() < 1e-6);
    }

    #[test]
    fn divergent_parameters_are_diagnosed() {
        let err = NormalFormSchedule::build(0.05, 0.009, 40, 1.0, ScheduleProfile::Paper).unwrap_err();
        assert!(matches!(err, Error::ScheduleDiverges(_)));
        assert!(err.to_string().starts_with("epsilon above threshold: ε^(1/2)"));
        let desk = NormalFormSchedule::build(0.05, 0.009, 40, 1.0, ScheduleProfile::Desk).unwrap();
        assert_eq!(desk.m, 4);
        assert!(desk.steps.iter().all(|e| e.halfwidth == 2));
    }

    #[test]
    fn small_target_gives_single_step() {
        let s = NormalFormSchedule::build(1e-4, 0.009, 40, 100.0, ScheduleProfile::Paper).unwrap();
        assert_eq!(s.m, 1);
    }

    #[test]
    fn threshold_brackets_success() {
        let e0 = epsilon_threshold(0.009, 10_000, 1.0, ScheduleProfile::Paper).unwrap();
        assert!(NormalFormSchedule::build(e0, 0.009, 10_000, 1.0, ScheduleProfile::Paper).is_ok());
        assert!(NormalFormSchedule::build(e0 * 1.01, 0.009, 10_000, 1.0, ScheduleProfile::Paper).is_err());
    }

    proptest! {
        #[test]
        fn monotone_sequences(eps in 1e-6f64..0.2, tau in 0.001f64..0.0099, lj in 2.0f64..9.0, kappa in 0.5f64..4.0) {
            let j0 = 10f64.powf(lj) as u64;
            if let Ok(s) = NormalFormSchedule::build(eps, tau, j0, kappa, ScheduleProfile::Paper) {
                for w in s.steps.windows(2) {
                    prop_assert!(w[1].epsilon < w[0].epsilon);
                    prop_assert!(w[1].delta < w[0].delta);
                    // ln ε_s / ln ε grows, so N_s shrinks
                    prop_assert!(w[1].window < w[0].window);
                }
                prop_assert!(s.steps.iter().all(|e| e.delta > 0.70 && e.delta <= 1.0));
                prop_assert!(s.step(s.m).delta >= 0.5);
            }
        }
    }
}
