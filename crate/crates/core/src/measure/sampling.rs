use rayon::prelude::*;
use serde::Serialize;

use crate::algebra::Monomial;
use crate::error::{Error, Result};
use crate::potential::{nonresonance_threshold, sample_sites_uniform};

/// Samples per parallel work unit.
const SAMPLE_CHUNK: u64 = 512;

pub const MIN_SAMPLES: u64 = 1_000;

/// A Monte-Carlo frequency with its binomial standard error.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct McEstimate {
    pub hits: u64,
    pub samples: u64,
}

impl McEstimate {
    pub fn estimate(&self) -> f64 {
        self.hits as f64 / self.samples as f64
    }

    /// `sqrt(p(1 − p)/N)`.
    pub fn stderr(&self) -> f64 {
        let p = self.estimate();
        (p * (1.0 - p) / self.samples as f64).sqrt()
    }

    pub fn complement(&self) -> Self {
        Self {
            hits: self.samples - self.hits,
            samples: self.samples,
        }
    }
}

/// A divisor class compiled against a fixed list of sample sites.
#[derive(Debug, Clone)]
pub(crate) struct CompiledClass {
    coeffs: Vec<(usize, f64)>,
    pub(crate) threshold: f64,
}

impl CompiledClass {
    /// `|Σ c_j v_j| < γ / (max(Δ,1)² |c|^{Δ+2})` with `c = n − n'`.
    pub(crate) fn new(n: &Monomial, gamma: f64, sites: &[i64]) -> Self {
        let c = n.divisor_vector();
        let coeffs = c
            .iter()
            .map(|(j, cj)| (sites.binary_search(&j).expect("site list covers the class"), cj as f64))
            .collect();
        Self {
            coeffs,
            threshold: nonresonance_threshold(gamma, c.diameter(), c.l1_norm()),
        }
    }

    #[inline]
    pub(crate) fn hit(&self, v: &[f64]) -> bool {
        let d: f64 = self.coeffs.iter().map(|&(i, c)| c * v[i]).sum();
        d.abs() < self.threshold
    }
}

/// Sorted, deduplicated support of all classes.
pub(crate) fn class_sites<'a>(classes: impl IntoIterator<Item = &'a Monomial>) -> Vec<i64> {
    let mut sites: Vec<i64> = classes
        .into_iter()
        .flat_map(|m| m.divisor_vector().iter().map(|(j, _)| j).collect::<Vec<_>>())
        .collect();
    sites.sort_unstable();
    sites.dedup();
    sites
}

/// Runs `body(sample, v, acc)` over `samples` i.i.d. potentials, where `v`
/// holds the site values for `sites`, and sums the per-chunk accumulators.
///
/// Sample `i` always sees the same potential regardless of chunking, so
/// every estimator built on this shares its random numbers.
pub(crate) fn sample_reduce<A, F>(
    sites: &[i64],
    samples: u64,
    seed: u64,
    zero: impl Fn() -> A + Sync,
    body: F,
    add: impl Fn(A, A) -> A + Sync + Send,
) -> A
where
    A: Send,
    F: Fn(&[f64], &mut A) + Sync,
{
    let chunks = samples.div_ceil(SAMPLE_CHUNK);
    (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut acc = zero();
            for i in c * SAMPLE_CHUNK..((c + 1) * SAMPLE_CHUNK).min(samples) {
                let v = sample_sites_uniform(seed, i, sites);
                body(&v, &mut acc);
            }
            acc
        })
        .reduce(&zero, add)
}

/// Fraction of uniform potentials on which `n` is resonant at level `γ`.
pub fn resonant_probability_mc(n: &Monomial, gamma: f64, samples: u64, seed: u64) -> Result<McEstimate> {
    if n.is_resonant() {
        return Err(Error::InvalidParameter(format!("monomial {n} is resonant")));
    }
    if samples < MIN_SAMPLES {
        return Err(Error::InvalidParameter(format!(
            "need at least {MIN_SAMPLES} samples, got {samples}"
        )));
    }
    let sites = class_sites([n]);
    let class = CompiledClass::new(n, gamma, &sites);
    let hits = sample_reduce(
        &sites,
        samples,
        seed,
        || 0u64,
        |v, acc| *acc += class.hit(v) as u64,
        |a, b| a + b,
    );
    Ok(McEstimate { hits, samples })
}

/// Union and per-class hit counts over shared samples.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct UnionMc {
    pub union: McEstimate,
    pub per_class_hits: Vec<u64>,
}

impl UnionMc {
    /// `Σ_n P̂(ℜ(n))`, which dominates the union estimate sample by sample.
    pub fn per_class_sum(&self) -> f64 {
        self.per_class_hits.iter().sum::<u64>() as f64 / self.union.samples as f64
    }
}

/// Monte-Carlo measure of `⋃_n ℜ(n)` at level `γ`.
pub fn union_probability_mc(classes: &[Monomial], gamma: f64, samples: u64, seed: u64) -> Result<UnionMc> {
    if samples < MIN_SAMPLES {
        return Err(Error::InvalidParameter(format!(
            "need at least {MIN_SAMPLES} samples, got {samples}"
        )));
    }
    if let Some(n) = classes.iter().find(|n| n.is_resonant()) {
        return Err(Error::InvalidParameter(format!("monomial {n} is resonant")));
    }
    let sites = class_sites(classes);
    let compiled: Vec<CompiledClass> = classes.iter().map(|n| CompiledClass::new(n, gamma, &sites)).collect();
    let zero = || (0u64, vec![0u64; compiled.len()]);
    let (union, per_class_hits) = sample_reduce(
        &sites,
        samples,
        seed,
        zero,
        |v, acc| {
            let mut any = false;
            for (i, c) in compiled.iter().enumerate() {
                if c.hit(v) {
                    acc.1[i] += 1;
                    any = true;
                }
            }
            acc.0 += any as u64;
        },
        |mut a, b| {
            a.0 += b.0;
            a.1.iter_mut().zip(b.1).for_each(|(x, y)| *x += y);
            a
        },
    );
    Ok(UnionMc {
        union: McEstimate { hits: union, samples },
        per_class_hits,
    })
}

/// Exact length of `{v ∈ [0, 1] : |c v + offset| < η}`.
pub fn single_site_resonant_measure(c: f64, offset: f64, eta: f64) -> f64 {
    if eta <= 0.0 {
        return 0.0;
    }
    if c == 0.0 {
        return if offset.abs() < eta { 1.0 } else { 0.0 };
    }
    let (a, b) = ((-eta - offset) / c, (eta - offset) / c);
    let (lo, hi) = (a.min(b).max(0.0), a.max(b).min(1.0));
    (hi - lo).max(0.0)
}
