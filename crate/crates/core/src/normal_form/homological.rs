use num_complex::Complex64;
use serde::Serialize;

use super::NormalFormSchedule;
use crate::algebra::{poisson_bracket, Coefficient, FormalHamiltonian, Monomial, TameWindow};
use crate::error::{Error, Result};
use crate::potential::nonresonance_threshold;

/// `v_{sj} = 2 D(|q_j|²)` with its `v`-gradient.
pub fn frequency(d: &FormalHamiltonian, site: i32) -> Coefficient {
    d.get(&Monomial::action(site))
        .map(|c| c.scaled(Complex64::new(2.0, 0.0)))
        .unwrap_or_default()
}

/// The small divisor `d(n) = Σ (n_j − n'_j) v_{sj}` and its `v`-gradient.
pub fn divisor(d: &FormalHamiltonian, n: &Monomial) -> (f64, Vec<(i32, f64)>) {
    let mut value = 0.0;
    let mut grad: Vec<(i32, f64)> = Vec::new();
    for f in n.factors() {
        let k = f.n as i32 - f.nbar as i32;
        if k == 0 {
            continue;
        }
        let v = frequency(d, f.site);
        value += k as f64 * v.value.re;
        for &(l, g) in v.derivatives() {
            match grad.iter_mut().find(|e| e.0 == l) {
                Some(e) => e.1 += k as f64 * g.re,
                None => grad.push((l, k as f64 * g.re)),
            }
        }
    }
    grad.retain(|e| e.1 != 0.0);
    grad.sort_by_key(|e| e.0);
    (value, grad)
}

/// Splits `R` into the part removed at step `s` and the rest.
///
/// Targeted monomials are non-resonant and meet `A(j0, N_s)`; from `s = 2`
/// on they must also satisfy `Δ(n) ≤ 10 ln ε_{s+1}/ln ε` and `|n| ≤ 10/κ`.
pub fn select_removable(
    r: &FormalHamiltonian,
    sched: &NormalFormSchedule,
    s: usize,
) -> (FormalHamiltonian, FormalHamiltonian) {
    let step = sched.step(s);
    let (dcut, ncut) = (sched.diameter_cut(s), sched.degree_cut());
    r.partition(|n, _| {
        !n.is_resonant()
            && n.touches_window(sched.j0 as i64, step.halfwidth)
            && (s == 1 || (n.diameter() as f64 <= dcut && n.degree() as f64 <= ncut))
    })
}

/// Solves `{F, D} = R̃` coefficientwise: `F(n) = 2 R̃(n) / (i d(n))`.
///
/// `D = ½ Σ v_{sj} |q_j|²` gives `{F, D}(n) = (i/2) d(n) F(n)`, hence the
/// factor 2. Every divisor vector `k = n − n'` must satisfy the
/// `γ`-non-resonance condition; the first failure aborts with `k`, its
/// divisor and the threshold.
pub fn solve_homological(rt: &FormalHamiltonian, d: &FormalHamiltonian, gamma: f64) -> Result<FormalHamiltonian> {
    let mut f = FormalHamiltonian::new();
    for (n, c) in rt.sorted() {
        if n.is_resonant() {
            return Err(Error::InvalidParameter(format!(
                "resonant monomial {n} cannot be removed"
            )));
        }
        let k = n.divisor_vector();
        let (dv, dgrad) = divisor(d, n);
        let threshold = nonresonance_threshold(gamma, k.diameter(), k.l1_norm());
        if !(dv.abs() >= threshold) {
            return Err(Error::Resonance {
                k: k.to_string(),
                divisor: dv,
                threshold,
            });
        }
        // 2/(i d) = −2i/d
        let inv = Complex64::new(0.0, -2.0 / dv);
        let mut out = Coefficient::new(c.value * inv);
        for &(j, dc) in c.derivatives() {
            out.add_derivative(j, dc * inv);
        }
        for &(l, g) in &dgrad {
            out.add_derivative(l, -c.value * inv * (g / dv));
        }
        f.insert(n.clone(), out);
    }
    Ok(f)
}

/// Termwise comparison of `{F, D}` (through the bracket) with `R̃`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HomologicalResidual {
    /// Largest `|{F,D}(n) − R̃(n)|` over values and derivatives, relative to
    /// the size of the terms that enter `{F,D}(n)`.
    pub max_relative: f64,
    /// Monomials present in exactly one of the two sides.
    pub unmatched: usize,
    pub terms: usize,
}

pub fn homological_residual(
    f: &FormalHamiltonian,
    d: &FormalHamiltonian,
    rt: &FormalHamiltonian,
) -> HomologicalResidual {
    let lf = poisson_bracket(f, d);
    let mut worst = 0.0f64;
    let mut unmatched = 0;
    for (n, want) in rt.iter() {
        let Some(got) = lf.get(n) else {
            unmatched += 1;
            continue;
        };
        let fc = f.get(n).cloned().unwrap_or_default();
        let (dv, dgrad) = divisor(d, n);
        let dmax = dgrad.iter().map(|e| e.1.abs()).fold(0.0, f64::max);
        let scale = want
            .magnitude()
            .max(0.5 * dv.abs() * fc.magnitude())
            .max(0.5 * dmax * fc.value.norm());
        let mut diff = (got.value - want.value).norm();
        for &(j, x) in got.derivatives() {
            diff = diff.max((x - want.derivative(j)).norm());
        }
        for &(j, x) in want.derivatives() {
            diff = diff.max((x - got.derivative(j)).norm());
        }
        worst = worst.max(diff / scale);
    }
    unmatched += lf.monomials().filter(|n| !rt.contains(n)).count();
    HomologicalResidual {
        max_relative: worst,
        unmatched,
        terms: rt.len(),
    }
}

/// Largest `γ`-margin `|d(n)| / threshold` deficit check used by callers
/// that only want to know whether a solve would succeed.
pub fn first_resonance(rt: &FormalHamiltonian, d: &FormalHamiltonian, gamma: f64) -> Option<(Monomial, f64, f64)> {
    rt.sorted().into_iter().find_map(|(n, _)| {
        let k = n.divisor_vector();
        let (dv, _) = divisor(d, n);
        let threshold = nonresonance_threshold(gamma, k.diameter(), k.l1_norm());
        (!(dv.abs() >= threshold)).then(|| (n.clone(), dv, threshold))
    })
}

/// `|||·|||` of the part of `h` meeting `A(j0, halfwidth)`.
pub fn window_norm(h: &FormalHamiltonian, w: &TameWindow, halfwidth: i64) -> (f64, Option<Monomial>) {
    let mut best = (0.0, None);
    for (n, c) in h.iter() {
        if n.touches_window(w.j0 as i64, halfwidth) {
            let x = crate::algebra::triple_norm_of(n, c, w);
            if x > best.0 {
                best = (x, Some(n.clone()));
            }
        }
    }
    best
}
