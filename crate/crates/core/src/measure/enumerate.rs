use serde::Serialize;

use crate::algebra::Monomial;
use crate::error::{Error, Result};
use crate::normal_form::NormalFormSchedule;
use crate::potential::nonresonance_threshold;

/// Cutoffs `(Δ_max, |n|_max)` on the divisor classes measured at step `s`:
/// `Δ ≤ 10 ln ε_s / ln ε` and `|n| ≤ 10/κ`, both rounded down.
pub fn class_cutoffs(sched: &NormalFormSchedule, s: usize) -> (u64, u64) {
    // the ratio is exactly 10 at s = 1; keep tiny roundoff from losing a site
    let diameter = (10.0 * sched.step(s).epsilon.ln() / sched.epsilon.ln() + 1e-9).floor();
    let degree = (10.0 / sched.kappa + 1e-9).floor();
    (diameter.max(0.0) as u64, degree.max(0.0) as u64)
}

/// Whether `k` lies in the measured window `||k| − j0| < ln j0`.
pub fn in_measure_window(sched: &NormalFormSchedule, k: i64) -> bool {
    ((k.abs() - sched.j0 as i64) as f64).abs() < (sched.j0 as f64).ln()
}

/// Sites `k` with `||k| − j0| < ln j0`, ascending.
pub fn measure_window(sched: &NormalFormSchedule) -> Vec<i64> {
    let j0 = sched.j0 as i64;
    let reach = (sched.j0 as f64).ln().ceil() as i64;
    let mut sites: Vec<i64> = (j0 - reach..=j0 + reach)
        .flat_map(|j| [-j, j])
        .filter(|&k| in_measure_window(sched, k))
        .collect();
    sites.sort_unstable();
    sites.dedup();
    sites
}

/// Divisor classes `c = n − n'` with top site `j_+ = k` allowed at step `s`.
///
/// Only gauge-invariant classes (`Σ c_j = 0`) occur in the Hamiltonian, so
/// the enumeration runs over nonzero integer vectors on `[k − Δ_max, k]` with
/// `c_k ≠ 0`, `Σ c_j = 0` and `Σ |c_j| ≤ |n|_max`. Each class is returned as
/// its lowest-degree representative `q^{c₊} q̄^{c₋}`.
pub fn enumerate_constrained(k: i64, s: usize, sched: &NormalFormSchedule) -> Result<Vec<Monomial>> {
    enumerate_constrained_check(k, s, sched)?;
    let (diameter, degree) = class_cutoffs(sched, s);
    Ok(enumerate_classes(k, diameter, degree))
}

fn enumerate_constrained_check(k: i64, s: usize, sched: &NormalFormSchedule) -> Result<()> {
    if !in_measure_window(sched, k) {
        return Err(Error::InvalidParameter(format!(
            "site {k} outside ||k| - j0| < ln j0 for j0 = {}",
            sched.j0
        )));
    }
    if s == 0 || s > sched.m {
        return Err(Error::InvalidParameter(format!("step {s} outside 1..={}", sched.m)));
    }
    Ok(())
}

/// The enumeration behind [`enumerate_constrained`] with explicit cutoffs.
pub fn enumerate_classes(k: i64, diameter: u64, degree: u64) -> Vec<Monomial> {
    class_groups(diameter, degree)
        .iter()
        .flat_map(|g| enumerate_group(k, g.diameter, g.degree))
        .collect()
}

/// The classes of one `(k, s)` cell split into a head that is sampled and a
/// tail whose union is bounded analytically.
///
/// Every class has a coordinate with `|c_j| ≥ 1`; conditioning on the others
/// leaves an interval of length at most `2η` in `v_j`, so the tail's union
/// has measure at most `Σ 2η N` over the tail groups.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassSplit {
    pub head: Vec<Monomial>,
    pub total: u128,
    pub tail_classes: u128,
    pub tail_bound: f64,
}

/// Splits the cell `(k, s)` at `γ_s`, moving the smallest-threshold groups to
/// the tail while their bound stays within `tail_tolerance`.
pub fn split_classes(k: i64, s: usize, sched: &NormalFormSchedule, tail_tolerance: f64) -> Result<ClassSplit> {
    enumerate_constrained_check(k, s, sched)?;
    let (diameter, degree) = class_cutoffs(sched, s);
    let gamma = sched.gamma(s);
    let mut groups = class_groups(diameter, degree);
    groups.sort_by(|a, b| {
        a.threshold(gamma)
            .total_cmp(&b.threshold(gamma))
            .then(b.count.cmp(&a.count))
    });
    let total = groups.iter().map(|g| g.count).sum();
    let mut tail_bound = 0.0;
    let mut tail_classes = 0;
    let mut first_head = 0;
    for g in &groups {
        let bound = (2.0 * g.threshold(gamma)).min(1.0) * g.count as f64;
        if tail_bound + bound > tail_tolerance {
            break;
        }
        tail_bound += bound;
        tail_classes += g.count;
        first_head += 1;
    }
    let head = groups[first_head..]
        .iter()
        .flat_map(|g| enumerate_group(k, g.diameter, g.degree))
        .collect();
    Ok(ClassSplit {
        head,
        total,
        tail_classes,
        tail_bound,
    })
}

/// Classes with top site `k` sharing one threshold: exact diameter `Δ` and
/// exact `|c| = l`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct ClassGroup {
    pub diameter: u64,
    pub degree: u64,
    pub count: u128,
}

impl ClassGroup {
    /// `γ / (max(Δ,1)² l^{Δ+2})`, shared by every class in the group.
    pub fn threshold(&self, gamma: f64) -> f64 {
        nonresonance_threshold(gamma, self.diameter, self.degree)
    }
}

/// Sizes of all nonempty groups within the cutoffs, by dynamic programming
/// over `(Σ|c_j|, Σ c_j)`; nothing is enumerated.
pub fn class_groups(diameter: u64, degree: u64) -> Vec<ClassGroup> {
    let budget = degree as usize;
    let width = 2 * budget + 1;
    let mut out = Vec::new();
    // a zero-sum class needs two sites, so Δ ≥ 1 and l is even
    for d in 1..=diameter {
        // table[l1][sum + budget]
        let mut table = vec![vec![0u128; width]; budget + 1];
        table[0][budget] = 1;
        for pos in 0..=d {
            let endpoint = pos == 0 || pos == d;
            let mut next = vec![vec![0u128; width]; budget + 1];
            for l1 in 0..=budget {
                for (si, &cnt) in table[l1].iter().enumerate() {
                    if cnt == 0 {
                        continue;
                    }
                    let sum = si as i64 - budget as i64;
                    for c in -(budget as i64)..=budget as i64 {
                        let nl = l1 + c.unsigned_abs() as usize;
                        if (c == 0 && endpoint) || nl > budget {
                            continue;
                        }
                        let ns = sum + c;
                        if ns.unsigned_abs() as usize > budget {
                            continue;
                        }
                        next[nl][(ns + budget as i64) as usize] += cnt;
                    }
                }
            }
            table = next;
        }
        for (l, row) in table.iter().enumerate() {
            if row[budget] > 0 {
                out.push(ClassGroup {
                    diameter: d,
                    degree: l as u64,
                    count: row[budget],
                });
            }
        }
    }
    out
}

/// All classes of one group, as lowest-degree representatives.
pub fn enumerate_group(k: i64, diameter: u64, degree: u64) -> Vec<Monomial> {
    let mut out = Vec::new();
    if diameter == 0 || degree < 2 {
        return out;
    }
    let mut entries = vec![0i64; diameter as usize + 1];
    fill(&mut entries, 0, degree as i64, 0, k, &mut out);
    out
}

/// Assigns `entries[pos..]` (offsets below the top site) with exactly
/// `budget` absolute weight left and emits zero-sum classes.
fn fill(entries: &mut [i64], pos: usize, budget: i64, sum: i64, k: i64, out: &mut Vec<Monomial>) {
    let last = entries.len() - 1;
    if pos > last {
        if sum == 0 && budget == 0 {
            let factors = entries.iter().enumerate().filter(|(_, &c)| c != 0).map(|(off, &c)| {
                let site = (k - off as i64) as i32;
                (site, c.max(0) as u8, (-c).max(0) as u8)
            });
            out.push(Monomial::new(factors).expect("nonzero class"));
        }
        return;
    }
    // the bottom endpoint still needs weight, and the sum must close
    if sum.abs() > budget || (pos < last && budget < 1) {
        return;
    }
    let endpoint = pos == 0 || pos == last;
    for c in -budget..=budget {
        if c == 0 && endpoint {
            continue;
        }
        entries[pos] = c;
        fill(entries, pos + 1, budget - c.abs(), sum + c, k, out);
    }
    entries[pos] = 0;
}
