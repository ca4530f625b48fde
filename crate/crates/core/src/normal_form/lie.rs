use num_complex::Complex64;
use serde::Serialize;

use crate::algebra::{
    bracket_pairs, bracket_pairs_capped, poisson_bracket_capped, triple_norm_sup, FormalHamiltonian, TameWindow,
};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LieOptions {
    pub order_cap: usize,
    /// Stop once the last added term has `|||·||| ≤ floor`.
    pub floor: f64,
    pub degree_cap: Option<u32>,
    pub prune_floor: f64,
    /// Abort before a bracket that would visit more site-sharing pairs than
    /// this (its output size and memory are bounded by the pair count).
    pub pair_budget: usize,
}

impl Default for LieOptions {
    fn default() -> Self {
        Self {
            order_cap: 14,
            floor: 0.0,
            degree_cap: None,
            prune_floor: 1e-30,
            pair_budget: usize::MAX,
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize)]
pub struct LieStats {
    pub orders: usize,
    pub last_norm: f64,
    /// Ratio of the last two term norms.
    pub ratio: f64,
    /// Geometric estimate `last · q / (1 − q)` of the discarded tail
    /// (infinite when the terms are not decreasing, zero when the series
    /// terminated).
    pub tail_bound: f64,
    /// Bracket pairs skipped because their output exceeds the degree cap.
    pub skipped_pairs: usize,
    pub dropped_by_degree: usize,
    pub dropped_max: f64,
    pub pruned: usize,
    pub pruned_max: f64,
}

impl LieStats {
    pub(crate) fn absorb(&mut self, other: &LieStats) {
        self.orders = self.orders.max(other.orders);
        self.last_norm = self.last_norm.max(other.last_norm);
        self.ratio = self.ratio.max(other.ratio);
        self.tail_bound += other.tail_bound;
        self.skipped_pairs += other.skipped_pairs;
        self.dropped_by_degree += other.dropped_by_degree;
        self.dropped_max = self.dropped_max.max(other.dropped_max);
        self.pruned += other.pruned;
        self.pruned_max = self.pruned_max.max(other.pruned_max);
    }
}

/// `H ∘ X_F = Σ_k H^{(k)}/k!` with `H^{(k)} = {H^{(k−1)}, F}`, truncated.
pub fn lie_transform(
    h: &FormalHamiltonian,
    f: &FormalHamiltonian,
    opts: &LieOptions,
    w: &TameWindow,
) -> Result<(FormalHamiltonian, LieStats)> {
    lie_series(h, f, |k| 1.0 / factorial(k), opts, w)
}

pub(crate) fn factorial(k: usize) -> f64 {
    (1..=k).map(|i| i as f64).product()
}

/// `Σ_k weight(k) H^{(k)}` with the same truncation rules as [`lie_transform`].
pub(crate) fn lie_series(
    h: &FormalHamiltonian,
    f: &FormalHamiltonian,
    weight: impl Fn(usize) -> f64,
    opts: &LieOptions,
    w: &TameWindow,
) -> Result<(FormalHamiltonian, LieStats)> {
    let mut stats = LieStats::default();
    let w0 = weight(0);
    let mut out = if w0 == 1.0 {
        h.clone()
    } else {
        h.scaled(Complex64::new(w0, 0.0))
    };
    if f.is_empty() || h.is_empty() {
        return Ok((out, stats));
    }
    let mut term = h.clone();
    let mut prev = f64::NAN;
    let mut growing = 0;
    for k in 1..=opts.order_cap.max(1) {
        let pairs = bracket_pairs_capped(&term, f, opts.degree_cap);
        stats.skipped_pairs += bracket_pairs(&term, f) - pairs;
        if pairs > opts.pair_budget {
            return Err(Error::SeriesGrowth(format!(
                "order {k} bracket would visit {pairs} monomial pairs, over the budget of {}",
                opts.pair_budget
            )));
        }
        term = poisson_bracket_capped(&term, f, opts.degree_cap);
        let (n, m) = term.prune(opts.prune_floor / weight(k).max(f64::MIN_POSITIVE));
        stats.pruned += n;
        stats.pruned_max = stats.pruned_max.max(m * weight(k));
        stats.orders = k;
        if term.is_empty() {
            stats.last_norm = 0.0;
            stats.tail_bound = 0.0;
            return Ok((out, stats));
        }
        let wk = weight(k);
        out.add_scaled(&term, Complex64::new(wk, 0.0));
        let norm = triple_norm_sup(&term, w) * wk;
        if norm > prev {
            growing += 1;
            if growing >= 3 {
                return Err(Error::SeriesGrowth(format!(
                    "term norm increased for 3 consecutive orders (order {k}: {norm:.3e})"
                )));
            }
        } else {
            growing = 0;
        }
        stats.ratio = if prev > 0.0 { norm / prev } else { 0.0 };
        stats.last_norm = norm;
        prev = norm;
        if norm <= opts.floor {
            break;
        }
    }
    let q = stats.ratio;
    stats.tail_bound = if q < 1.0 {
        stats.last_norm * q / (1.0 - q)
    } else {
        f64::INFINITY
    };
    Ok((out, stats))
}
