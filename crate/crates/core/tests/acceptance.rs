//! End-to-end acceptance suite: prints one PASS/FAIL line per criterion with
//! the supporting numbers indented below it.
//!
//! `cargo test --release --test acceptance`; set `ACCEPTANCE_ONLY=1,4,7` to
//! run a subset. The process exits non-zero only when a check fails that is
//! not a known gap (known gaps still print FAIL).

use std::time::Instant;

use num_complex::Complex64;
use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};

use nlam::algebra::{
    conjugate_state, hamiltonian_flow, initial_hamiltonian, poisson_bracket, Coefficient, FormalHamiltonian, Monomial,
    TameWindow,
};
use nlam::dynamics::{exact_linear_solution, exact_onsite_solution, hamiltonian_energy, l2_distance, StrangPropagator};
use nlam::experiment::{
    bootstrap_kappa, fit_power_law, run_ensemble, run_seed, tame_suite, BootstrapKappa, EnsembleRun, ExperimentConfig,
    PowerLawFit,
};
use nlam::measure::{
    dyadic_check, dyadic_ln_epsilon_threshold, resonance_census, resonant_probability_mc, single_site_resonant_measure,
    McConfig, SIGMA_SLACK,
};
use nlam::normal_form::{
    delta_limit, delta_s, epsilon_threshold, lie_transform, run_normal_form_with, solve_homological, BoundPolicy,
    LieOptions, NormalFormConfig, NormalFormSchedule, NormalFormState, ScheduleProfile, StepReport,
};
use nlam::potential::nonresonance_threshold;
use nlam::{Boundary, Error, LatticeState, ModelParams, Potential, Result};

// criterion 1
const MASS_DRIFT_TOL: f64 = 1e-10;
const ENERGY_DRIFT_TOL: f64 = 1e-4;
// criterion 2
const ONSITE_TOL: f64 = 1e-12;
const LINEAR_TOL: f64 = 1e-6;
const CONVERGENCE_RATIO: (f64, f64) = (3.5, 4.5);
// criterion 3
const JACOBI_TOL: f64 = 1e-12;
const NUMERIC_BRACKET_TOL: f64 = 1e-6;
// criterion 4
const HOMOLOGICAL_TOL: f64 = 1e-14;
// criterion 5
const NF_RUNTIME_LIMIT: f64 = 600.0;
// criterion 6
const CONJUGATION_TOL: f64 = 1e-4;
// criterion 7
const DELTA_LIMIT_TARGET: f64 = 0.7214;
const DELTA_LIMIT_TOL: f64 = 1e-4;
const DUAL_ROUTE_TOL: f64 = 1e-6;
// criteria 8 and 9
const SIGMAS: f64 = 3.0;
const BOOTSTRAP_RESAMPLES: usize = 400;

struct Check {
    name: String,
    pass: bool,
    detail: String,
    /// Documented as unattainable; prints FAIL without failing the run.
    known_gap: bool,
}

fn check(name: &str, pass: bool, detail: String) -> Check {
    Check {
        name: name.into(),
        pass,
        detail,
        known_gap: false,
    }
}

fn gap(name: &str, pass: bool, detail: String) -> Check {
    Check {
        known_gap: true,
        ..check(name, pass, detail)
    }
}

#[derive(Default)]
struct Outcome {
    checks: Vec<Check>,
    info: Vec<String>,
}

impl Outcome {
    fn push(&mut self, c: Check) {
        self.checks.push(c);
    }

    fn note(&mut self, line: String) {
        self.info.push(line);
    }
}

fn unit(rng: &mut ChaCha8Rng) -> f64 {
    (rng.next_u64() >> 11) as f64 / (1u64 << 53) as f64
}

fn random_state(rng: &mut ChaCha8Rng, radius: usize, scale: f64) -> Result<LatticeState> {
    let amps = (0..2 * radius + 1)
        .map(|_| Complex64::new(scale * (2.0 * unit(rng) - 1.0), scale * (2.0 * unit(rng) - 1.0)))
        .collect();
    LatticeState::from_amplitudes(radius, amps)
}

fn strang(pot: &Potential, params: &ModelParams, q0: &LatticeState, steps: usize) -> Result<LatticeState> {
    let mut prop = StrangPropagator::new(pot, params, params.dt);
    let mut q = q0.amplitudes().to_vec();
    prop.advance(&mut q, steps);
    LatticeState::from_amplitudes(q0.radius(), q)
}

fn conservation() -> Result<Outcome> {
    let mut out = Outcome::default();
    let radius = 512;
    let pot = Potential::sample(1, radius)?;
    let params = ModelParams::new(0.1, 0.1, 0.01, Boundary::Dirichlet)?;
    let start = LatticeState::delta(radius, 0)?;
    let (m0, e0) = (start.l2_mass(), hamiltonian_energy(&start, &pot, &params)?);
    let mut prop = StrangPropagator::new(&pot, &params, params.dt);
    let mut q = start.amplitudes().to_vec();
    let (chunk, chunks, energy_chunks) = (1000, 1000, 100);
    let (mut mass_drift, mut energy_drift) = (0.0f64, 0.0f64);
    for c in 1..=chunks {
        prop.advance(&mut q, chunk);
        let state = LatticeState::from_amplitudes(radius, q.clone())?;
        mass_drift = mass_drift.max((state.l2_mass() - m0).abs() / m0);
        if c <= energy_chunks {
            let e = hamiltonian_energy(&state, &pot, &params)?;
            energy_drift = energy_drift.max((e - e0).abs() / e0.abs());
        }
    }
    out.push(check(
        "mass drift over 1e6 steps",
        mass_drift <= MASS_DRIFT_TOL,
        format!("{mass_drift:.3e} <= {MASS_DRIFT_TOL:e}"),
    ));
    out.push(check(
        "energy drift up to T = 1e3",
        energy_drift <= ENERGY_DRIFT_TOL,
        format!("{energy_drift:.3e} <= {ENERGY_DRIFT_TOL:e}"),
    ));
    Ok(out)
}

fn oracles() -> Result<Outcome> {
    let mut out = Outcome::default();
    let mut rng = ChaCha8Rng::seed_from_u64(2);

    let pot = Potential::sample(2, 64)?;
    let q0 = random_state(&mut rng, 64, 0.7)?;
    let params = ModelParams::new(0.0, 0.1, 0.01, Boundary::Dirichlet)?;
    let err = l2_distance(
        &strang(&pot, &params, &q0, 10_000)?,
        &exact_onsite_solution(&q0, &pot, 0.1, 100.0)?,
    );
    out.push(check(
        "eps = 0 against the onsite solution at T = 100",
        err <= ONSITE_TOL,
        format!("{err:.3e} <= {ONSITE_TOL:e}"),
    ));

    let pot = Potential::sample(3, 256)?;
    let q0 = LatticeState::delta(256, 0)?;
    let params = ModelParams::new(0.1, 0.0, 1e-3, Boundary::Dirichlet)?;
    let err = l2_distance(
        &strang(&pot, &params, &q0, 10_000)?,
        &exact_linear_solution(&q0, &pot, 0.1, 10.0)?,
    );
    out.push(check(
        "delta = 0 against dense diagonalization (dt 1e-3, T 10, W 256)",
        err <= LINEAR_TOL,
        format!("{err:.3e} <= {LINEAR_TOL:e}"),
    ));

    // second order: halving dt divides the error by four
    let pot = Potential::sample(4, 64)?;
    let q0 = random_state(&mut rng, 64, 0.8)?;
    let run = |dt: f64| -> Result<LatticeState> {
        let params = ModelParams::new(0.1, 0.1, dt, Boundary::Dirichlet)?;
        strang(&pot, &params, &q0, (1.0 / dt).round() as usize)
    };
    let reference = run(1e-4)?;
    let errs = [0.1, 0.05, 0.025]
        .iter()
        .map(|&dt| run(dt).map(|q| l2_distance(&q, &reference)))
        .collect::<Result<Vec<_>>>()?;
    let ratios = [errs[0] / errs[1], errs[1] / errs[2]];
    let ok = ratios
        .iter()
        .all(|r| (CONVERGENCE_RATIO.0..=CONVERGENCE_RATIO.1).contains(r));
    out.push(check(
        "dt-convergence ratios",
        ok,
        format!(
            "errors {:.3e}, {:.3e}, {:.3e} at dt 0.1/0.05/0.025, ratios {:.3}, {:.3} in [{}, {}]",
            errs[0], errs[1], errs[2], ratios[0], ratios[1], CONVERGENCE_RATIO.0, CONVERGENCE_RATIO.1
        ),
    ));
    Ok(out)
}

/// Up to five monomials of degree at most four on `sites`.
fn random_hamiltonian(rng: &mut ChaCha8Rng, sites: &[i32]) -> FormalHamiltonian {
    let mut h = FormalHamiltonian::new();
    for _ in 0..1 + rng.next_u64() % 5 {
        let degree = 1 + rng.next_u64() % 4;
        let mut exps: Vec<(i32, u8, u8)> = sites.iter().map(|&s| (s, 0, 0)).collect();
        for _ in 0..degree {
            let slot = (rng.next_u64() % (2 * sites.len() as u64)) as usize;
            let e = &mut exps[slot / 2];
            if slot % 2 == 0 {
                e.1 += 1;
            } else {
                e.2 += 1;
            }
        }
        let n = Monomial::new(exps).expect("degree >= 1");
        let c = Complex64::new(2.0 * unit(rng) - 1.0, 2.0 * unit(rng) - 1.0);
        h.add_term(n, &Coefficient::new(c));
    }
    h
}

fn shift(h: &FormalHamiltonian, by: i32) -> FormalHamiltonian {
    let mut out = FormalHamiltonian::new();
    for (n, c) in h.iter() {
        let moved = Monomial::new(n.factors().iter().map(|f| (f.site + by, f.n, f.nbar))).expect("nonempty");
        out.insert(moved, c.clone());
    }
    out
}

fn max_abs(h: &FormalHamiltonian) -> f64 {
    h.iter().map(|(_, c)| c.value.norm()).fold(0.0, f64::max)
}

/// `{H, G}(q)` from central differences of the Wirtinger derivatives
/// `∂_q = ½(∂_x − i∂_y)`, `∂_q̄ = ½(∂_x + i∂_y)`; also returns
/// `Σ_k (|∂_q H| + |∂_q̄ H|)(|∂_q G| + |∂_q̄ G|)` as a scale.
fn numeric_bracket(h: &FormalHamiltonian, g: &FormalHamiltonian, q: &LatticeState) -> (Complex64, f64) {
    let step = 1e-5;
    let partials = |f: &FormalHamiltonian, idx: usize| -> (Complex64, Complex64) {
        let eval = |d: Complex64| {
            let mut p = q.clone();
            p.amplitudes_mut()[idx] += d;
            f.evaluate(&p)
        };
        let dx = (eval(Complex64::new(step, 0.0)) - eval(Complex64::new(-step, 0.0))) / (2.0 * step);
        let dy = (eval(Complex64::new(0.0, step)) - eval(Complex64::new(0.0, -step))) / (2.0 * step);
        let i = Complex64::i();
        (0.5 * (dx - i * dy), 0.5 * (dx + i * dy))
    };
    let (mut total, mut scale) = (Complex64::new(0.0, 0.0), 0.0);
    for idx in 0..q.len() {
        let (hq, hqb) = partials(h, idx);
        let (gq, gqb) = partials(g, idx);
        total += Complex64::i() * (hq * gqb - hqb * gq);
        scale += (hq.norm() + hqb.norm()) * (gq.norm() + gqb.norm());
    }
    (total, scale)
}

fn bracket_algebra() -> Result<Outcome> {
    let mut out = Outcome::default();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let sites = [-1, 0, 1];
    let neg = Complex64::new(-1.0, 0.0);
    let (mut antisym, mut bilinear, mut jacobi) = (0usize, 0usize, 0.0f64);
    let mut general = 0.0f64;
    let cases = 100;
    for _ in 0..cases {
        let a = random_hamiltonian(&mut rng, &sites);
        let b = random_hamiltonian(&mut rng, &sites);
        let k = random_hamiltonian(&mut rng, &sites);
        if poisson_bracket(&a, &b) != poisson_bracket(&b, &a).scaled(neg) {
            antisym += 1;
        }

        let ab = poisson_bracket(&poisson_bracket(&a, &b), &k);
        let bk = poisson_bracket(&poisson_bracket(&b, &k), &a);
        let ka = poisson_bracket(&poisson_bracket(&k, &a), &b);
        jacobi = jacobi.max(max_abs(&ab.sum(&bk).sum(&ka)));

        // dyadic scalars on disjoint blocks: every output coefficient is one
        // correctly rounded sum, scaled by a power of two
        let ea = (rng.next_u64() % 7) as i32 - 3;
        let eb = (rng.next_u64() % 7) as i32 - 3;
        let (sa, sb) = (
            Complex64::new(2f64.powi(ea), 0.0),
            Complex64::new(-(2f64.powi(eb)), 0.0),
        );
        let b_far = shift(&b, 10);
        let g = k.sum(&shift(&k, 10));
        let lhs = poisson_bracket(&a.scaled(sa).sum(&b_far.scaled(sb)), &g);
        let rhs = poisson_bracket(&a, &g)
            .scaled(sa)
            .sum(&poisson_bracket(&b_far, &g).scaled(sb));
        if lhs != rhs {
            bilinear += 1;
        }

        let (x, y) = (Complex64::new(0.3, -1.1), Complex64::new(-0.7, 0.2));
        let lhs = poisson_bracket(&a.scaled(x).sum(&b.scaled(y)), &k);
        let rhs = poisson_bracket(&a, &k)
            .scaled(x)
            .sum(&poisson_bracket(&b, &k).scaled(y));
        general = general.max(max_abs(&lhs.difference(&rhs)) / (1.0 + max_abs(&lhs)));
    }
    out.push(check(
        "antisymmetry exact",
        antisym == 0,
        format!("{antisym}/{cases} mismatches"),
    ));
    out.push(check(
        "bilinearity exact (dyadic scalars)",
        bilinear == 0,
        format!("{bilinear}/{cases} mismatches"),
    ));
    out.push(check(
        "Jacobi residual",
        jacobi <= JACOBI_TOL,
        format!("max |coefficient| {jacobi:.3e} <= {JACOBI_TOL:e}"),
    ));
    out.note(format!(
        "bilinearity with general complex scalars: relative defect {general:.3e}"
    ));

    let mut worst = 0.0f64;
    for _ in 0..5 {
        let h = random_hamiltonian(&mut rng, &sites);
        let g = random_hamiltonian(&mut rng, &sites);
        let q = random_state(&mut rng, 1, 0.8)?;
        let symbolic = poisson_bracket(&h, &g).evaluate(&q);
        // the algebra drops constant terms, so compare modulo {H, G}(0)
        let (at_q, scale) = numeric_bracket(&h, &g, &q);
        let (at_zero, _) = numeric_bracket(&h, &g, &LatticeState::zeros(1));
        let numeric = at_q - at_zero;
        worst = worst.max((symbolic - numeric).norm() / symbolic.norm().max(scale).max(f64::MIN_POSITIVE));
    }
    out.push(check(
        "numeric vs symbolic bracket at 5 states",
        worst <= NUMERIC_BRACKET_TOL,
        format!("relative {worst:.3e} <= {NUMERIC_BRACKET_TOL:e}"),
    ));
    Ok(out)
}

struct DeskRun {
    epsilon: f64,
    seed: Option<u64>,
    reports: Vec<StepReport>,
    outcome: Result<nlam::normal_form::RunReport>,
    seconds: f64,
    skipped: u64,
}

/// Scans seeds upward from 0 for a potential on which the first solve
/// passes the non-resonance test, and records every completed step.
fn desk_run(epsilon: f64, radius: usize) -> Result<DeskRun> {
    let sched = NormalFormSchedule::build(epsilon, 0.009, 40, 1.0, ScheduleProfile::Desk)?;
    let window = TameWindow::new(0.009, 40)?;
    let cfg = NormalFormConfig {
        policy: BoundPolicy::Record,
        ..NormalFormConfig::new(1.0)
    };
    let started = Instant::now();
    for seed in 0..200 {
        let pot = Potential::sample(seed, radius)?;
        let mut reports = Vec::new();
        let result = run_normal_form_with(&pot, &sched, &window, &cfg, |r, _| reports.push(r.clone()));
        match result {
            Err(Error::Resonance { .. }) if reports.is_empty() => continue,
            r => {
                return Ok(DeskRun {
                    epsilon,
                    seed: Some(seed),
                    reports,
                    outcome: r.map(|(_, report)| report),
                    seconds: started.elapsed().as_secs_f64(),
                    skipped: seed,
                })
            }
        }
    }
    Ok(DeskRun {
        epsilon,
        seed: None,
        reports: Vec::new(),
        outcome: Err(Error::InsufficientData("no non-resonant seed in [0, 200)".into())),
        seconds: started.elapsed().as_secs_f64(),
        skipped: 200,
    })
}

fn homological(runs: &[DeskRun]) -> Outcome {
    let mut out = Outcome::default();
    let (mut worst, mut unmatched, mut terms, mut steps) = (0.0f64, 0usize, 0usize, 0usize);
    for run in runs {
        for r in &run.reports {
            worst = worst.max(r.homological.max_relative);
            unmatched += r.homological.unmatched;
            terms += r.homological.terms;
            steps += 1;
        }
        out.note(format!(
            "eps {:.0e}: seed {:?}, {} completed steps",
            run.epsilon,
            run.seed,
            run.reports.len()
        ));
    }
    out.push(check(
        "termwise {F_s, D_s} = R~_s on every desk step",
        steps > 0 && worst <= HOMOLOGICAL_TOL && unmatched == 0,
        format!("{steps} steps, {terms} terms, max relative {worst:.3e} <= {HOMOLOGICAL_TOL:e}, {unmatched} unmatched"),
    ));
    out
}

fn elimination_checks(run: &DeskRun, out: &mut Outcome, primary: bool) {
    let tag = format!("eps {:.0e}", run.epsilon);
    let mut targeted_ok = !run.reports.is_empty();
    for r in &run.reports {
        for c in r.checks() {
            out.note(format!(
                "{tag} step {} {:<36} {:.3e} vs {:.3e} margin {:+.3} {}",
                r.s,
                c.label,
                c.value,
                c.bound,
                c.margin(),
                if c.holds { "ok" } else { "VIOLATED" }
            ));
        }
        let targeted: Vec<_> = r
            .exit_checks
            .iter()
            .filter(|c| c.label.starts_with("targeted"))
            .collect();
        targeted_ok &= !targeted.is_empty() && targeted.iter().all(|c| c.holds);
    }
    let (final_ok, detail) = match &run.outcome {
        Ok(report) => {
            let last = report.final_checks.last().expect("final checks");
            for c in &report.final_checks {
                out.note(format!("{tag} {:<43} {:.3e} vs {:.3e}", c.label, c.value, c.bound));
            }
            (
                last.holds,
                format!(
                    "|||R~||| {:.3e} vs j0^(-3/kappa) {:.3e}, {:.1}s",
                    last.value, last.bound, run.seconds
                ),
            )
        }
        Err(e) => (
            false,
            format!("aborted after {} steps: {e} ({:.1}s)", run.reports.len(), run.seconds),
        ),
    };
    let seed = format!("seed {:?} ({} resonant seeds skipped)", run.seed, run.skipped);
    if primary {
        out.push(gap(
            "targeted coefficients <= eps_{s+1} every step",
            targeted_ok && run.outcome.is_ok(),
            format!("{seed}, {} steps completed", run.reports.len()),
        ));
        out.push(gap("final window residual", final_ok, detail));
        out.push(check(
            "runtime",
            run.seconds <= NF_RUNTIME_LIMIT,
            format!("{:.1}s <= {NF_RUNTIME_LIMIT}s", run.seconds),
        ));
    } else {
        out.note(format!(
            "{tag} reference run: targeted {} final {} ({seed}; {detail})",
            if targeted_ok { "ok" } else { "VIOLATED" },
            if final_ok { "ok" } else { "VIOLATED" }
        ));
    }
}

fn elimination(runs: &[DeskRun]) -> Outcome {
    let mut out = Outcome::default();
    for (i, run) in runs.iter().enumerate() {
        elimination_checks(run, &mut out, i == 0);
    }
    out
}

fn conjugation() -> Result<Outcome> {
    let mut out = Outcome::default();
    let epsilon = 0.05;
    let values = vec![0.05, 0.6, 0.15, 0.9, 0.35, 0.75, 0.25, 0.95, 0.5];
    let pot = Potential::from_values(4, values)?;
    let h = initial_hamiltonian(&pot, epsilon)?.total();
    let w = TameWindow::new(0.009, 40)?;
    let opts = LieOptions {
        order_cap: 40,
        floor: 1e-17,
        degree_cap: Some(6),
        prune_floor: 1e-22,
        pair_budget: usize::MAX,
    };

    // F1 removes the hops, F2 the non-resonant quartic terms that remain
    let (d, _, r) = NormalFormState::split(&h);
    let f1 = solve_homological(&r, &d, 0.0)?;
    let (h1, s1) = lie_transform(&h, &f1, &opts, &w)?;
    let (d1, _, r1) = NormalFormState::split(&h1);
    let quartic = r1.filter(|n, _| n.degree() == 4);
    let f2 = solve_homological(&quartic, &d1, 0.0)?;
    let (h2, s2) = lie_transform(&h1, &f2, &opts, &w)?;
    out.note(format!(
        "F1 {} terms ({} Lie orders), F2 {} terms ({} orders); H' has {} terms, degree <= {}",
        f1.len(),
        s1.orders,
        f2.len(),
        s2.orders,
        h2.len(),
        h2.max_degree()
    ));

    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let q_tilde = random_state(&mut rng, 4, 0.15)?;
    let gens = [f1, f2];
    let start = conjugate_state(&gens, &q_tilde, 200)?;
    let params = ModelParams::new(epsilon, epsilon, 1e-4, Boundary::Dirichlet)?;
    let mut prop = StrangPropagator::new(&pot, &params, params.dt);
    let mut q = start.amplitudes().to_vec();
    let mut normal = q_tilde.clone();
    let (mut worst, mut unconjugated) = (0.0f64, 0.0f64);
    let samples = 10;
    for _ in 0..samples {
        prop.advance(&mut q, 10_000 / samples);
        normal = hamiltonian_flow(&h2, &normal, 1.0 / samples as f64, 100)?;
        let original = LatticeState::from_amplitudes(4, q.clone())?;
        let conjugated = conjugate_state(&gens, &normal, 200)?;
        worst = worst.max(l2_distance(&original, &conjugated));
        unconjugated = unconjugated.max(l2_distance(&original, &normal));
    }
    out.note(format!("same comparison without Gamma: {unconjugated:.3e}"));
    out.push(check(
        "Phi_H^t(Gamma q) = Gamma(Phi_H'^t q) on 9 sites, t in [0, 1]",
        worst <= CONJUGATION_TOL,
        format!(
            "max l2 distance {worst:.3e} <= {CONJUGATION_TOL:e} (|q| = {:.3})",
            start.l2_mass().sqrt()
        ),
    ));
    Ok(out)
}

fn schedule() -> Result<Outcome> {
    let mut out = Outcome::default();
    let decreasing = (1..2000).all(|s| delta_s(s + 1) < delta_s(s));
    out.push(check(
        "delta_s strictly decreasing (s < 2000)",
        decreasing,
        String::new(),
    ));

    // independent route: the plain product up to j = 10^6
    let direct: f64 = (1..=1_000_000u64).map(|j| 1.0 - 1.0 / (5.0 * (j * j) as f64)).product();
    let lim = delta_limit();
    out.push(check(
        "closed-form limit agrees with the direct product",
        (direct - lim).abs() <= DUAL_ROUTE_TOL,
        format!("{lim:.7} vs {direct:.7}"),
    ));
    out.push(gap(
        "limit equals 0.7214",
        (direct - DELTA_LIMIT_TARGET).abs() <= DELTA_LIMIT_TOL,
        format!("{direct:.6} vs {DELTA_LIMIT_TARGET} +- {DELTA_LIMIT_TOL:e}"),
    ));

    let (mut built, mut diverged, mut delta_ok, mut target_ok, mut c_max) = (0, 0, true, true, 0.0f64);
    for profile in [ScheduleProfile::Paper, ScheduleProfile::Desk] {
        for tau in [0.001, 0.009, 0.05] {
            let (mut c_row, mut m_row) = (0.0f64, 0usize);
            for epsilon in [1e-3, 1e-4, 1e-6, 1e-9, 1e-12] {
                for j0 in [40u64, 100, 1_000, 10_000, 1_000_000] {
                    for kappa in [0.5, 1.0, 2.0] {
                        let Ok(sched) = NormalFormSchedule::build(epsilon, tau, j0, kappa, profile) else {
                            diverged += 1;
                            continue;
                        };
                        built += 1;
                        delta_ok &= sched.step(sched.m).delta >= 0.5;
                        target_ok &= sched.steps.last().expect("M + 1 entries").epsilon <= sched.target();
                        c_row = c_row.max(sched.lnln_constant());
                        m_row = m_row.max(sched.m);
                    }
                }
            }
            c_max = c_max.max(c_row);
            out.note(format!(
                "{profile:?} tau {tau}: max M {m_row}, max M / ln ln j0 {c_row:.2}"
            ));
        }
    }
    out.push(check(
        "delta_M >= 1/2",
        delta_ok,
        format!("{built} schedules ({diverged} parameter sets above threshold)"),
    ));
    out.push(check(
        "eps_{M+1} <= j0^(-3/kappa)",
        target_ok,
        format!("M <= C ln ln j0 with empirical C = {c_max:.3}"),
    ));

    out.note("eps_0(kappa) threshold, paper profile, tau = 0.009:".into());
    for j0 in [40u64, 1_000, 10_000, 1_000_000, 1_000_000_000] {
        let row: Vec<String> = [0.5, 1.0, 2.0]
            .iter()
            .map(|&k| match epsilon_threshold(0.009, j0, k, ScheduleProfile::Paper) {
                Some(e) => format!("kappa {k}: {e:.4e}"),
                None => format!("kappa {k}: none"),
            })
            .collect();
        out.note(format!("  j0 = {j0:>10}  {}", row.join("  ")));
    }
    Ok(out)
}

fn measure() -> Result<Outcome> {
    let mut out = Outcome::default();
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut worst_z = 0.0f64;
    for trial in 0..20u64 {
        let site = (rng.next_u64() % 100) as i32 - 50;
        let a = (rng.next_u64() % 5) as u8;
        let b = (a + 1 + (rng.next_u64() % 4) as u8) % 5;
        let gamma = 0.05 + 0.95 * unit(&mut rng);
        let n = Monomial::single(site, a, b);
        let c = a as f64 - b as f64;
        let exact = single_site_resonant_measure(c, 0.0, nonresonance_threshold(gamma, 0, c.abs() as u64));
        let mc = resonant_probability_mc(&n, gamma, 100_000, trial)?;
        worst_z = worst_z.max((mc.estimate() - exact).abs() / mc.stderr().max(1e-12));
    }
    out.push(check(
        "single active coordinate vs closed form (20 configs, 1e5 samples)",
        worst_z < SIGMAS,
        format!("worst |z| {worst_z:.2} < {SIGMAS}"),
    ));

    let sched = NormalFormSchedule::build(1e-3, 0.009, 50, 1.0, ScheduleProfile::Desk)?;
    let census = resonance_census(&sched, &McConfig::default())?;
    let violations = census
        .cells
        .iter()
        .filter(|c| c.union.estimate() + c.tail_bound > c.bound + SIGMA_SLACK * c.union.stderr())
        .count();
    let worst = census
        .cells
        .iter()
        .map(|c| (c.union.estimate() + c.tail_bound) / c.bound)
        .fold(0.0, f64::max);
    out.push(check(
        "union estimates within eps^(1/200), eps_s^(1/125)",
        violations == 0,
        format!(
            "{} cells (j0 50, eps 1e-3, M {}), worst (estimate + tail)/bound {worst:.3}, {violations} violations",
            census.cells.len(),
            census.m
        ),
    ));
    out.push(check(
        "nonresonant measure >= j0^(-6 eps^(1/1000)) - 3 sigma",
        census.holds(),
        format!(
            "{:.4e} (tail {:.1e}) vs {:.4e}",
            census.nonresonant.estimate(),
            census.tail_bound,
            census.lower_bound
        ),
    ));

    let ln_eps = 1e-3f64.ln();
    let mut all = true;
    let mut parts = Vec::new();
    for j0_bar in [1e3, 1e4, 1e5] {
        let d = dyadic_check(j0_bar, ln_eps)?;
        all &= d.holds;
        parts.push(format!(
            "j0 {j0_bar:.0e}: success {:.2e} vs {:.6}, needs ln eps < {:.0}",
            d.success,
            d.floor,
            dyadic_ln_epsilon_threshold(j0_bar)
        ));
    }
    out.push(gap("dyadic success inequality at eps = 1e-3", all, parts.join("; ")));
    Ok(out)
}

fn ensemble(cfg: &ExperimentConfig) -> Result<(EnsembleRun, PowerLawFit, BootstrapKappa)> {
    let run = run_ensemble(cfg)?;
    let stats = run.stats()?;
    let fit = fit_power_law(&stats.times, &stats.median, cfg.fit_t_min, cfg.fit_t_max)?;
    let boot = bootstrap_kappa(&run.traces, cfg.fit_t_min, cfg.fit_t_max, BOOTSTRAP_RESAMPLES, 9)?;
    Ok((run, fit, boot))
}

fn diffusion() -> Result<Outcome> {
    let mut out = Outcome::default();
    let dir = tempfile::tempdir().map_err(|e| Error::Io {
        path: std::env::temp_dir(),
        source: e,
    })?;
    let mut cfg = ExperimentConfig::default();
    cfg.set("seeds", "0..20")?;
    cfg.output_dir = dir.path().join("nonlinear");
    let (run, fit, boot) = ensemble(&cfg)?;
    let per_seed: Vec<f64> = run
        .traces
        .iter()
        .filter_map(|t| fit_power_law(&t.sample_times, &t.diffusion_values, cfg.fit_t_min, cfg.fit_t_max).ok())
        .map(|f| f.kappa)
        .collect();
    let mean = per_seed.iter().sum::<f64>() / per_seed.len().max(1) as f64;
    out.note(format!(
        "nonlinear eps = delta = {}: median kappa_fit {:.4} +- {:.4} (seed bootstrap; regression {:.4}, R2 {:.3}); per-seed mean {mean:.4} over {}",
        cfg.epsilon,
        fit.kappa,
        boot.stderr,
        fit.stderr,
        fit.r2,
        per_seed.len()
    ));
    out.push(check(
        "ensemble completed",
        run.failures.is_empty() && run.traces.len() == 20,
        format!("{} traces, {} failures", run.traces.len(), run.failures.len()),
    ));

    let again = run_seed(&cfg, 0)?;
    let first = run.traces.iter().find(|t| t.metadata.seed == 0).expect("seed 0 ran");
    let bits = |v: &[f64]| v.iter().map(|x| x.to_bits()).collect::<Vec<_>>();
    let identical = bits(&again.diffusion_values) == bits(&first.diffusion_values)
        && bits(&again.tail_values) == bits(&first.tail_values)
        && bits(&again.energy_values) == bits(&first.energy_values)
        && bits(&again.l2_values) == bits(&first.l2_values);
    out.push(check("bit-identical rerun of seed 0", identical, String::new()));

    let mut control = cfg.clone();
    control.delta = 0.0;
    control.output_dir = dir.path().join("linear");
    let (crun, cfit, cboot) = ensemble(&control)?;
    out.push(check(
        "linear control kappa_fit consistent with 0",
        crun.failures.is_empty() && cboot.consistent_with(0.0, SIGMAS),
        format!(
            "{:.4} +- {:.4} seed bootstrap ({BOOTSTRAP_RESAMPLES} resamples), {SIGMAS} sigma",
            cboot.kappa, cboot.stderr
        ),
    ));
    out.note(format!(
        "control regression stderr {:.4} ({:.2} sigma from 0), R2 {:.3}",
        cfit.stderr,
        cfit.kappa.abs() / cfit.stderr,
        cfit.r2
    ));
    Ok(out)
}

fn tame() -> Result<Outcome> {
    let mut out = Outcome::default();
    for (j0, s) in [(30usize, 1.0), (30, 1.5), (30, 2.0), (30, 3.0), (100, 2.0)] {
        let suite = tame_suite(100, j0 as u64, j0, s)?;
        let fails = suite.cases.iter().filter(|c| !c.holds).count();
        out.push(check(
            &format!("j0 {j0}, s {s}"),
            suite.all_hold(),
            format!(
                "100 states, C(s) = {:.4}, worst lhs/rhs {:.4}, {fails} failures",
                suite.constant,
                suite.worst_ratio()
            ),
        ));
    }
    Ok(out)
}

fn report(id: u32, title: &str, started: Instant, outcome: Result<Outcome>) -> bool {
    let secs = started.elapsed().as_secs_f64();
    let outcome = outcome.unwrap_or_else(|e| Outcome {
        checks: vec![check("run", false, format!("error: {e}"))],
        info: Vec::new(),
    });
    let pass = outcome.checks.iter().all(|c| c.pass);
    let gaps = outcome.checks.iter().filter(|c| !c.pass && c.known_gap).count();
    let suffix = if gaps > 0 {
        format!(" ({gaps} known gap{})", if gaps > 1 { "s" } else { "" })
    } else {
        String::new()
    };
    println!(
        "criterion {id:>2} {}: {title} [{secs:.1}s]{suffix}",
        if pass { "PASS" } else { "FAIL" }
    );
    for c in &outcome.checks {
        let mark = match (c.pass, c.known_gap) {
            (true, _) => "ok",
            (false, true) => "GAP",
            (false, false) => "FAIL",
        };
        println!(
            "    [{mark}] {}{}{}",
            c.name,
            if c.detail.is_empty() { "" } else { ": " },
            c.detail
        );
    }
    for line in &outcome.info {
        println!("      {line}");
    }
    outcome.checks.iter().all(|c| c.pass || c.known_gap)
}

fn main() {
    let only: Option<Vec<u32>> = std::env::var("ACCEPTANCE_ONLY")
        .ok()
        .map(|s| s.split(',').filter_map(|x| x.trim().parse().ok()).collect());
    let wanted = |id: u32| only.as_ref().is_none_or(|v| v.contains(&id));
    let mut ok = true;
    let mut run = |id: u32, title: &str, f: &dyn Fn() -> Result<Outcome>| {
        if wanted(id) {
            let started = Instant::now();
            ok &= report(id, title, started, f());
        }
    };
    run(1, "conservation", &conservation);
    run(2, "oracle equivalence", &oracles);
    run(3, "bracket algebra", &bracket_algebra);

    if wanted(4) || wanted(5) {
        let started = Instant::now();
        let runs: Result<Vec<DeskRun>> = [(0.05, 128), (1e-3, 128), (1e-4, 128)]
            .iter()
            .map(|&(e, r)| desk_run(e, r))
            .collect();
        match runs {
            Ok(runs) => {
                // both criteria share the three desk runs and report their time
                if wanted(4) {
                    ok &= report(4, "homological identity", started, Ok(homological(&runs)));
                }
                if wanted(5) {
                    ok &= report(5, "normal-form elimination", started, Ok(elimination(&runs)));
                }
            }
            Err(e) => {
                for (id, title) in [(4, "homological identity"), (5, "normal-form elimination")] {
                    if wanted(id) {
                        ok &= report(id, title, started, Err(Error::InvalidParameter(e.to_string())));
                    }
                }
            }
        }
    }

    let mut run = |id: u32, title: &str, f: &dyn Fn() -> Result<Outcome>| {
        if wanted(id) {
            let started = Instant::now();
            ok &= report(id, title, started, f());
        }
    };
    run(6, "conjugation oracle", &conjugation);
    run(7, "schedule properties", &schedule);
    run(8, "measure suite", &measure);
    run(9, "diffusion experiment", &diffusion);
    run(10, "tame inequality", &tame);

    if !ok {
        eprintln!("acceptance: a check outside the known gaps failed");
        std::process::exit(1);
    }
}
