use std::time::Instant;

use serde::Serialize;

use super::homological::{
    frequency, homological_residual, select_removable, solve_homological, window_norm, HomologicalResidual,
};
use super::lie::{factorial, lie_series, LieOptions, LieStats};
use super::NormalFormSchedule;
use crate::algebra::{initial_hamiltonian, triple_norm_of, FormalHamiltonian, Monomial, TameWindow};
use crate::error::{Error, Result};
use crate::potential::Potential;

/// Multiplicative slack on "bound holds" checks.
pub const BOUND_SLACK: f64 = 1e-8;

/// What to do when a numerically evaluated bound fails.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum BoundPolicy {
    /// Abort with [`Error::BoundViolation`].
    Enforce,
    /// Record the failure in the report and continue.
    Record,
}

impl std::str::FromStr for BoundPolicy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "enforce" => Ok(Self::Enforce),
            "record" => Ok(Self::Record),
            _ => Err(Error::InvalidParameter(format!("unknown bound policy '{s}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NormalFormConfig {
    pub order_cap: usize,
    /// Lie series stop when the last term is below `floor_factor · ε_{s+1}`.
    pub floor_factor: f64,
    pub degree_cap: u32,
    /// Coefficients below `prune_factor · ε_{s+1}` are dropped (and counted).
    pub prune_factor: f64,
    /// Per-bracket pair budget for the Lie series.
    pub pair_budget: usize,
    pub policy: BoundPolicy,
}

impl NormalFormConfig {
    /// Order cap `⌈10/κ⌉ + 4`, degree cap `⌈10/κ⌉`, floor `ε_{s+1}·10⁻³`,
    /// pruning below `ε_{s+1}·10⁻¹²`, fifty million bracket pairs.
    pub fn new(kappa: f64) -> Self {
        let cut = (10.0 / kappa).ceil() as u32;
        Self {
            order_cap: cut as usize + 4,
            floor_factor: 1e-3,
            degree_cap: cut,
            prune_factor: 1e-12,
            pair_budget: 50_000_000,
            policy: BoundPolicy::Enforce,
        }
    }
}

/// `H_s = D_s + Z_s + R_s` together with the generators applied so far.
#[derive(Debug, Clone, PartialEq)]
pub struct NormalFormState {
    pub s: usize,
    /// `½ Σ v_{sj} |q_j|²`.
    pub d: FormalHamiltonian,
    /// Resonant terms of degree at least 4.
    pub z: FormalHamiltonian,
    /// Non-resonant terms.
    pub r: FormalHamiltonian,
    /// `F_1, …, F_{s−1}`.
    pub generators: Vec<FormalHamiltonian>,
}

impl NormalFormState {
    pub fn initial(pot: &Potential, epsilon: f64) -> Result<Self> {
        let h = initial_hamiltonian(pot, epsilon)?;
        Ok(Self {
            s: 1,
            d: h.d,
            z: h.z,
            r: h.r,
            generators: Vec::new(),
        })
    }

    pub fn total(&self) -> FormalHamiltonian {
        self.d.sum(&self.z).sum(&self.r)
    }

    /// `v_{sj}`.
    pub fn frequency(&self, site: i32) -> f64 {
        frequency(&self.d, site).value.re
    }

    /// Sorts every monomial of `h` into the diagonal, resonant and
    /// non-resonant parts.
    pub fn split(h: &FormalHamiltonian) -> (FormalHamiltonian, FormalHamiltonian, FormalHamiltonian) {
        let (d, rest) = h.partition(|n, _| n.is_action());
        let (z, r) = rest.partition(|n, _| n.is_resonant());
        (d, z, r)
    }
}

/// One numerically evaluated inequality `value ≤ bound`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundCheck {
    pub label: String,
    pub value: f64,
    pub bound: f64,
    /// `value / bound`; the inequality holds when this is at most `1 + 10⁻⁸`.
    pub ratio: f64,
    pub holds: bool,
    /// The monomial attaining the worst ratio.
    pub witness: Option<String>,
}

impl BoundCheck {
    pub fn new(label: impl Into<String>, value: f64, bound: f64, witness: Option<&Monomial>) -> Self {
        let ratio = if bound > 0.0 {
            value / bound
        } else if value > 0.0 {
            f64::INFINITY
        } else {
            0.0
        };
        Self {
            label: label.into(),
            value,
            bound,
            ratio,
            holds: ratio <= 1.0 + BOUND_SLACK,
            witness: witness.map(|n| n.to_string()),
        }
    }

    /// `1 − ratio`: non-negative exactly when the bound holds (up to slack).
    pub fn margin(&self) -> f64 {
        1.0 - self.ratio
    }
}

/// `j0^{δ(2−|n|)τ} ε^{δ max(Δ(n),1)}`.
pub fn decay_bound(n: &Monomial, w: &TameWindow, epsilon: f64, delta: f64) -> f64 {
    let j0 = w.j0 as f64;
    j0.powf(delta * (2.0 - n.degree() as f64) * w.tau) * epsilon.powf(delta * n.diameter().max(1) as f64)
}

/// Worst `|||H(n)||| / bound(n)` over `h`.
pub fn per_monomial_check(label: &str, h: &FormalHamiltonian, w: &TameWindow, epsilon: f64, delta: f64) -> BoundCheck {
    let mut worst: Option<(f64, f64, f64, &Monomial)> = None;
    for (n, c) in h.iter() {
        let v = triple_norm_of(n, c, w);
        let b = decay_bound(n, w, epsilon, delta);
        let r = v / b;
        if worst.is_none_or(|x| r > x.0) {
            worst = Some((r, v, b, n));
        }
    }
    match worst {
        Some((_, v, b, n)) => BoundCheck::new(label, v, b, Some(n)),
        None => BoundCheck::new(label, 0.0, 1.0, None),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StepReport {
    pub s: usize,
    pub epsilon_s: f64,
    pub epsilon_next: f64,
    pub delta_s: f64,
    pub window: f64,
    pub halfwidth: i64,
    pub gamma: f64,
    pub targeted: usize,
    pub generator_norm: f64,
    pub d_terms: usize,
    pub z_terms: usize,
    pub r_terms: usize,
    pub max_degree: u32,
    pub homological: HomologicalResidual,
    pub lie: LieStats,
    pub frequency_shift: f64,
    /// Largest shift at sites with `||j| − j0| > ln j0`.
    pub frequency_shift_off_window: f64,
    pub entry_checks: Vec<BoundCheck>,
    pub exit_checks: Vec<BoundCheck>,
    pub wall_seconds: f64,
}

impl StepReport {
    pub fn checks(&self) -> impl Iterator<Item = &BoundCheck> {
        self.entry_checks.iter().chain(&self.exit_checks)
    }

    pub fn min_margin(&self) -> f64 {
        self.checks().map(BoundCheck::margin).fold(f64::INFINITY, f64::min)
    }
}

fn enforce(policy: BoundPolicy, checks: &[BoundCheck]) -> Result<()> {
    if policy == BoundPolicy::Enforce {
        if let Some(c) = checks.iter().find(|c| !c.holds) {
            return Err(Error::BoundViolation(format!(
                "{}: {:.6e} > {:.6e} at {}",
                c.label,
                c.value,
                c.bound,
                c.witness.as_deref().unwrap_or("-")
            )));
        }
    }
    Ok(())
}

/// Entry hypotheses at step `s` (with `δ_0 = 1`).
pub fn entry_checks(state: &NormalFormState, sched: &NormalFormSchedule, w: &TameWindow) -> Vec<BoundCheck> {
    let s = state.s;
    let step = sched.step(s);
    let delta_prev = if s == 1 { 1.0 } else { sched.step(s - 1).delta };
    let (rn, rw) = window_norm(&state.r, w, step.halfwidth);
    vec![
        per_monomial_check(&format!("entry Z_{s}(n)"), &state.z, w, sched.epsilon, delta_prev),
        per_monomial_check(&format!("entry R_{s}(n)"), &state.r, w, sched.epsilon, delta_prev),
        BoundCheck::new(format!("entry |||calR_{s}|||"), rn, step.epsilon, rw.as_ref()),
    ]
}

/// One application of the iterative lemma: `H_{s+1} = H_s ∘ X_{F_s}`.
pub fn normal_form_step(
    state: &NormalFormState,
    sched: &NormalFormSchedule,
    w: &TameWindow,
    cfg: &NormalFormConfig,
) -> Result<(NormalFormState, StepReport)> {
    let started = Instant::now();
    let s = state.s;
    if s > sched.m {
        return Err(Error::InvalidParameter(format!("step {s} beyond M = {}", sched.m)));
    }
    let step = *sched.step(s);
    let next = *sched.step(s + 1);
    let entry = entry_checks(state, sched, w);
    enforce(cfg.policy, &entry)?;

    let (rt, rest_r) = select_removable(&state.r, sched, s);
    let gamma = sched.gamma(s);
    let f = solve_homological(&rt, &state.d, gamma)?;
    let homological = homological_residual(&f, &state.d, &rt);

    let opts = LieOptions {
        order_cap: cfg.order_cap,
        floor: cfg.floor_factor * next.epsilon,
        degree_cap: Some(cfg.degree_cap),
        prune_floor: cfg.prune_factor * next.epsilon,
        pair_budget: cfg.pair_budget,
    };
    // D∘X_F + R̃∘X_F = D + Σ_{k≥1} k/(k+1)! R̃^{(k)} because {D, F} = −R̃
    let (removed, mut lie) = lie_series(&rt, &f, |k| k as f64 / factorial(k + 1), &opts, w)?;
    let (rest, rest_stats) = lie_series(&state.z.sum(&rest_r), &f, |k| 1.0 / factorial(k), &opts, w)?;
    lie.absorb(&rest_stats);
    let mut h = state.d.sum(&removed).sum(&rest);
    let (n, m) = h.truncate_degree(cfg.degree_cap);
    lie.dropped_by_degree += n;
    lie.dropped_max = lie.dropped_max.max(m);
    let (n, m) = h.prune(cfg.prune_factor * next.epsilon);
    lie.pruned += n;
    lie.pruned_max = lie.pruned_max.max(m);
    let (d, z, r) = NormalFormState::split(&h);

    let mut generators = state.generators.clone();
    generators.push(f.clone());
    let out = NormalFormState {
        s: s + 1,
        d,
        z,
        r,
        generators,
    };

    let lnj0 = w.ln_j0();
    let mut shift = 0.0f64;
    let mut shift_off = 0.0f64;
    for site in state.d.monomials().chain(out.d.monomials()).map(|n| n.min_site()) {
        let dv = (out.frequency(site) - state.frequency(site)).abs();
        shift = shift.max(dv);
        if ((site.abs() as f64) - w.j0 as f64).abs() > lnj0 {
            shift_off = shift_off.max(dv);
        }
    }

    let f_norm = crate::algebra::triple_norm_sup(&f, w);
    let f_witness = f
        .iter()
        .max_by(|a, b| triple_norm_of(a.0, a.1, w).total_cmp(&triple_norm_of(b.0, b.1, w)))
        .map(|e| e.0.clone());
    let (rn, rw) = window_norm(&out.r, w, next.halfwidth);
    let targeted = out.r.filter(|n, _| rt.contains(n));
    let (tn, tw) = window_norm(&targeted, w, i64::MAX / 4);
    let exit = vec![
        BoundCheck::new(
            format!("|||F_{s}||| <= eps_{s}^(9/10)"),
            f_norm,
            step.epsilon.powf(0.9),
            f_witness.as_ref(),
        ),
        per_monomial_check(&format!("exit Z_{}(n)", s + 1), &out.z, w, sched.epsilon, step.delta),
        per_monomial_check(&format!("exit R_{}(n)", s + 1), &out.r, w, sched.epsilon, step.delta),
        BoundCheck::new(format!("exit |||calR_{}|||", s + 1), rn, next.epsilon, rw.as_ref()),
        BoundCheck::new(
            format!("targeted R_{}(n) <= eps_{}", s + 1, s + 1),
            tn,
            next.epsilon,
            tw.as_ref(),
        ),
    ];
    let report = StepReport {
        s,
        epsilon_s: step.epsilon,
        epsilon_next: next.epsilon,
        delta_s: step.delta,
        window: step.window,
        halfwidth: step.halfwidth,
        gamma,
        targeted: rt.len(),
        generator_norm: f_norm,
        d_terms: out.d.len(),
        z_terms: out.z.len(),
        r_terms: out.r.len(),
        max_degree: h.max_degree(),
        homological,
        lie,
        frequency_shift: shift,
        frequency_shift_off_window: shift_off,
        entry_checks: entry,
        exit_checks: exit,
        wall_seconds: started.elapsed().as_secs_f64(),
    };
    enforce(cfg.policy, &report.exit_checks)?;
    Ok((out, report))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunReport {
    pub seed: u64,
    pub radius: usize,
    pub schedule: NormalFormSchedule,
    pub steps: Vec<StepReport>,
    /// The theorem's closing bounds on `H_{M+1}`.
    pub final_checks: Vec<BoundCheck>,
    pub wall_seconds: f64,
}

impl RunReport {
    pub fn all_hold(&self) -> bool {
        self.steps
            .iter()
            .flat_map(StepReport::checks)
            .chain(&self.final_checks)
            .all(|c| c.holds)
    }

    pub fn min_margin(&self) -> f64 {
        self.steps
            .iter()
            .flat_map(StepReport::checks)
            .chain(&self.final_checks)
            .map(BoundCheck::margin)
            .fold(f64::INFINITY, f64::min)
    }
}

/// Closing bounds: `Z̃`, `R̃` with exponent `½`, and the residual over
/// `A(j0, ½ ln j0)` against `j0^{−3/κ}`.
pub fn final_checks(state: &NormalFormState, sched: &NormalFormSchedule, w: &TameWindow) -> Vec<BoundCheck> {
    let half = (0.5 * w.ln_j0()).ceil() as i64;
    let (rn, rw) = window_norm(&state.r, w, half);
    vec![
        per_monomial_check("final Z(n)", &state.z, w, sched.epsilon, 0.5),
        per_monomial_check("final R(n)", &state.r, w, sched.epsilon, 0.5),
        BoundCheck::new("final |||calR||| <= j0^(-3/kappa)", rn, sched.target(), rw.as_ref()),
    ]
}

/// Runs all `M` steps from the initial Hamiltonian, calling `on_step` after
/// each one (reports of completed steps survive a later abort this way).
pub fn run_normal_form_with(
    pot: &Potential,
    sched: &NormalFormSchedule,
    w: &TameWindow,
    cfg: &NormalFormConfig,
    mut on_step: impl FnMut(&StepReport, &NormalFormState),
) -> Result<(NormalFormState, RunReport)> {
    let started = Instant::now();
    if w.j0 != sched.j0 {
        return Err(Error::InvalidParameter(format!(
            "window j0 = {} differs from schedule j0 = {}",
            w.j0, sched.j0
        )));
    }
    if (w.j0 as f64 + 2.0 * w.ln_j0()) > pot.radius() as f64 {
        return Err(Error::InvalidParameter(format!(
            "potential radius {} does not cover A(j0, 2 ln j0) for j0 = {}",
            pot.radius(),
            w.j0
        )));
    }
    let mut state = NormalFormState::initial(pot, sched.epsilon)?;
    let mut steps = Vec::with_capacity(sched.m);
    for _ in 0..sched.m {
        let (next, report) = normal_form_step(&state, sched, w, cfg)?;
        on_step(&report, &next);
        steps.push(report);
        state = next;
    }
    let final_checks = final_checks(&state, sched, w);
    enforce(cfg.policy, &final_checks)?;
    let report = RunReport {
        seed: pot.seed(),
        radius: pot.radius(),
        schedule: sched.clone(),
        steps,
        final_checks,
        wall_seconds: started.elapsed().as_secs_f64(),
    };
    Ok((state, report))
}

pub fn run_normal_form(
    pot: &Potential,
    sched: &NormalFormSchedule,
    w: &TameWindow,
    cfg: &NormalFormConfig,
) -> Result<(NormalFormState, RunReport)> {
    run_normal_form_with(pot, sched, w, cfg, |_, _| {})
}

/// Scans seeds `start, start+1, …` for a potential on which every step's
/// homological solve passes the non-resonance test, returning the first
/// seed and the number of seeds tried.
pub fn find_nonresonant_seed(
    radius: usize,
    sched: &NormalFormSchedule,
    w: &TameWindow,
    cfg: &NormalFormConfig,
    start: u64,
    attempts: u64,
) -> Result<(u64, u64)> {
    let cfg = NormalFormConfig {
        policy: BoundPolicy::Record,
        ..*cfg
    };
    for seed in start..start + attempts {
        let pot = Potential::sample(seed, radius)?;
        match run_normal_form(&pot, sched, w, &cfg) {
            Ok(_) => return Ok((seed, seed - start + 1)),
            Err(Error::Resonance { .. }) => continue,
            Err(e) => return Err(e),
        }
    }
    Err(Error::InsufficientData(format!(
        "no non-resonant seed in [{start}, {})",
        start + attempts
    )))
}
