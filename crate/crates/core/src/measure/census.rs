use std::collections::BTreeMap;

use serde::Serialize;

use super::enumerate::{measure_window, split_classes};
use super::sampling::{class_sites, sample_reduce, union_probability_mc, CompiledClass, McEstimate, MIN_SAMPLES};
use crate::error::{Error, Result};
use crate::normal_form::NormalFormSchedule;

/// Number of standard errors allowed when comparing an estimate to a bound.
pub const SIGMA_SLACK: f64 = 3.0;

/// `ε^{1/200}` for `s = 1`, `ε_s^{1/125}` afterwards.
pub fn union_bound(sched: &NormalFormSchedule, s: usize) -> f64 {
    if s == 1 {
        sched.epsilon.powf(1.0 / 200.0)
    } else {
        sched.step(s).epsilon.powf(1.0 / 125.0)
    }
}

/// `j0^{−6 ε^{1/1000}}`.
pub fn nonresonant_lower_bound(j0: u64, epsilon: f64) -> f64 {
    (-6.0 * epsilon.powf(1e-3) * (j0 as f64).ln()).exp()
}

/// Monte-Carlo settings shared by the union and census estimators.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct McConfig {
    pub samples: u64,
    pub seed: u64,
    /// Largest analytic bound allowed for the unsampled tail of one cell.
    pub tail_tolerance: f64,
}

impl Default for McConfig {
    fn default() -> Self {
        Self {
            samples: 100_000,
            seed: 0,
            tail_tolerance: 1e-4,
        }
    }
}

impl McConfig {
    fn validate(&self) -> Result<()> {
        if self.samples < MIN_SAMPLES {
            return Err(Error::InvalidParameter(format!(
                "need at least {MIN_SAMPLES} samples, got {}",
                self.samples
            )));
        }
        if !(self.tail_tolerance >= 0.0) {
            return Err(Error::InvalidParameter(format!(
                "tail tolerance {} is negative",
                self.tail_tolerance
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct UnionEstimate {
    pub k: i64,
    pub s: usize,
    pub classes: u128,
    pub sampled_classes: usize,
    pub gamma: f64,
    /// Union over the sampled classes.
    pub union: McEstimate,
    /// Analytic bound on the unsampled classes.
    pub tail_bound: f64,
    /// `Σ_n P̂(ℜ_s(n))` over the sampled classes.
    pub per_class_sum: f64,
    pub bound: f64,
    /// `P̂ + tail ≤ bound + 3σ`.
    pub holds: bool,
}

impl UnionEstimate {
    /// Upper estimate including the tail.
    pub fn upper(&self) -> f64 {
        self.union.estimate() + self.tail_bound
    }
}

/// Monte-Carlo measure of `⋃ ℜ_s(n)` over the classes of
/// [`enumerate_constrained`]`(k, s)` at `γ_s = ε_s^{1/100}`, against the
/// analytic bound.
pub fn union_measure_bound(k: i64, s: usize, sched: &NormalFormSchedule, cfg: &McConfig) -> Result<UnionEstimate> {
    cfg.validate()?;
    let split = split_classes(k, s, sched, cfg.tail_tolerance)?;
    let gamma = sched.gamma(s);
    let bound = union_bound(sched, s);
    let (union, per_class_sum) = if split.head.is_empty() {
        (
            McEstimate {
                hits: 0,
                samples: cfg.samples,
            },
            0.0,
        )
    } else {
        let mc = union_probability_mc(&split.head, gamma, cfg.samples, cfg.seed)?;
        (mc.union, mc.per_class_sum())
    };
    Ok(UnionEstimate {
        k,
        s,
        classes: split.total,
        sampled_classes: split.head.len(),
        gamma,
        union,
        tail_bound: split.tail_bound,
        per_class_sum,
        bound,
        holds: union.estimate() + split.tail_bound <= bound + SIGMA_SLACK * union.stderr(),
    })
}

/// One `(k, s)` cell of the census.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CensusCell {
    pub k: i64,
    pub s: usize,
    pub classes: u128,
    pub sampled_classes: usize,
    pub union: McEstimate,
    pub tail_bound: f64,
    pub bound: f64,
}

/// Per-site summary: classes over all steps, the measure of the union over
/// `s ≤ M`, and the summed analytic bound `ε^{1/200} + Σ_{s≥2} ε_s^{1/125}`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SiteSummary {
    pub classes: u128,
    pub union: McEstimate,
    pub tail_bound: f64,
    pub bound: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ResonanceCensus {
    pub j0: u64,
    pub kappa: f64,
    pub epsilon: f64,
    pub tau: f64,
    pub m: usize,
    pub config: McConfig,
    pub cells: Vec<CensusCell>,
    pub per_k: BTreeMap<i64, SiteSummary>,
    /// Samples avoiding every sampled class: an upper estimate of `mes(𝒮)`.
    pub nonresonant: McEstimate,
    /// Sum of the cell tails; `mes(𝒮) ≥ P̂ − tail` up to sampling error.
    pub tail_bound: f64,
    pub lower_bound: f64,
}

impl ResonanceCensus {
    /// `P̂(𝒮) − tail`.
    pub fn conservative_estimate(&self) -> f64 {
        self.nonresonant.estimate() - self.tail_bound
    }

    /// `mes(𝒮) ≥ j0^{−6ε^{1/1000}} − 3σ`, with the tail charged against the
    /// estimate.
    pub fn holds(&self) -> bool {
        self.conservative_estimate() >= self.lower_bound - SIGMA_SLACK * self.nonresonant.stderr()
    }

    /// One row per `(k, s)` cell.
    pub fn write_csv<W: std::io::Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(
            out,
            "k,s,classes,sampled_classes,hits,samples,estimate,stderr,tail_bound,bound"
        )?;
        for c in &self.cells {
            writeln!(
                out,
                "{},{},{},{},{},{},{:e},{:e},{:e},{:e}",
                c.k,
                c.s,
                c.classes,
                c.sampled_classes,
                c.union.hits,
                c.union.samples,
                c.union.estimate(),
                c.union.stderr(),
                c.tail_bound,
                c.bound
            )?;
        }
        Ok(())
    }
}

/// Samples every cell `(k, s)` with `||k| − j0| < ln j0`, `1 ≤ s ≤ M` on
/// shared potentials and records the full intersection `𝒮`.
pub fn resonance_census(sched: &NormalFormSchedule, cfg: &McConfig) -> Result<ResonanceCensus> {
    cfg.validate()?;
    let window = measure_window(sched);
    let mut keys = Vec::new();
    let mut splits = Vec::new();
    for &k in &window {
        for s in 1..=sched.m {
            keys.push((k, s));
            splits.push(split_classes(k, s, sched, cfg.tail_tolerance)?);
        }
    }
    let sites = class_sites(splits.iter().flat_map(|sp| &sp.head));
    let cells: Vec<Vec<CompiledClass>> = splits
        .iter()
        .zip(&keys)
        .map(|(split, &(_, s))| {
            let gamma = sched.gamma(s);
            let mut compiled: Vec<CompiledClass> = split
                .head
                .iter()
                .map(|n| CompiledClass::new(n, gamma, &sites))
                .collect();
            // widest thresholds first so a hit ends the scan early
            compiled.sort_by(|a, b| b.threshold.total_cmp(&a.threshold));
            compiled
        })
        .collect();
    let site_index: BTreeMap<i64, usize> = window.iter().enumerate().map(|(i, &k)| (k, i)).collect();
    let site_of_cell: Vec<usize> = keys.iter().map(|(k, _)| site_index[k]).collect();

    // accumulator: per-cell hits, per-site hits, samples avoiding everything
    let zero = || (vec![0u64; cells.len()], vec![0u64; window.len()], 0u64);
    let (cell_hits, site_hits, clean) = sample_reduce(
        &sites,
        cfg.samples,
        cfg.seed,
        zero,
        |v, acc| {
            let mut site_hit = vec![false; window.len()];
            for (i, cell) in cells.iter().enumerate() {
                if cell.iter().any(|c| c.hit(v)) {
                    acc.0[i] += 1;
                    site_hit[site_of_cell[i]] = true;
                }
            }
            let mut any = false;
            for (h, hit) in acc.1.iter_mut().zip(&site_hit) {
                *h += *hit as u64;
                any |= hit;
            }
            acc.2 += !any as u64;
        },
        |mut a, b| {
            a.0.iter_mut().zip(b.0).for_each(|(x, y)| *x += y);
            a.1.iter_mut().zip(b.1).for_each(|(x, y)| *x += y);
            a.2 += b.2;
            a
        },
    );

    let samples = cfg.samples;
    let cells: Vec<CensusCell> = keys
        .iter()
        .zip(&splits)
        .zip(&cell_hits)
        .map(|((&(k, s), split), &hits)| CensusCell {
            k,
            s,
            classes: split.total,
            sampled_classes: split.head.len(),
            union: McEstimate { hits, samples },
            tail_bound: split.tail_bound,
            bound: union_bound(sched, s),
        })
        .collect();
    let summed_bound: f64 = (1..=sched.m).map(|s| union_bound(sched, s)).sum();
    let per_k = window
        .iter()
        .zip(&site_hits)
        .map(|(&k, &hits)| {
            let mine = cells.iter().filter(|c| c.k == k);
            let classes = mine.clone().map(|c| c.classes).sum();
            let tail_bound = mine.map(|c| c.tail_bound).sum();
            (
                k,
                SiteSummary {
                    classes,
                    union: McEstimate { hits, samples },
                    tail_bound,
                    bound: summed_bound,
                },
            )
        })
        .collect();
    Ok(ResonanceCensus {
        j0: sched.j0,
        kappa: sched.kappa,
        epsilon: sched.epsilon,
        tau: sched.tau,
        m: sched.m,
        config: *cfg,
        tail_bound: cells.iter().map(|c| c.tail_bound).sum(),
        cells,
        per_k,
        nonresonant: McEstimate { hits: clean, samples },
        lower_bound: nonresonant_lower_bound(sched.j0, sched.epsilon),
    })
}

/// `mes(𝒮)` by Monte Carlo (tail charged against it) together with
/// `j0^{−6ε^{1/1000}}`.
pub fn nonresonant_measure(sched: &NormalFormSchedule, cfg: &McConfig) -> Result<(f64, f64, f64)> {
    let census = resonance_census(sched, cfg)?;
    Ok((
        census.conservative_estimate(),
        census.nonresonant.stderr(),
        census.lower_bound,
    ))
}
