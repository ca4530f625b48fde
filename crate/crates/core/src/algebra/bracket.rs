use num_complex::Complex64;
use rayon::prelude::*;
use rustc_hash::FxHashMap;
use smallvec::SmallVec;

use super::{Coefficient, ExactSum, FormalHamiltonian, Monomial};

/// Terms per parallel chunk; smaller brackets run on the calling thread.
const PARALLEL_CHUNK: usize = 256;

#[derive(Default)]
struct Accumulator {
    re: ExactSum,
    im: ExactSum,
    derivatives: SmallVec<[(i32, ExactSum, ExactSum); 2]>,
}

impl Accumulator {
    /// Adds `i·z`.
    fn add_times_i(&mut self, z: Complex64) {
        self.re.add(-z.im);
        self.im.add(z.re);
    }

    fn add_derivative_times_i(&mut self, site: i32, z: Complex64) {
        let slot = match self.derivatives.iter().position(|e| e.0 == site) {
            Some(p) => p,
            None => {
                self.derivatives.push((site, ExactSum::new(), ExactSum::new()));
                self.derivatives.len() - 1
            }
        };
        self.derivatives[slot].1.add(-z.im);
        self.derivatives[slot].2.add(z.re);
    }

    fn merge(&mut self, other: Accumulator) {
        self.re.merge(&other.re);
        self.im.merge(&other.im);
        for (j, re, im) in other.derivatives {
            match self.derivatives.iter_mut().find(|e| e.0 == j) {
                Some(e) => {
                    e.1.merge(&re);
                    e.2.merge(&im);
                }
                None => self.derivatives.push((j, re, im)),
            }
        }
    }

    fn finish(self) -> Coefficient {
        Coefficient::with_derivatives(
            Complex64::new(self.re.value(), self.im.value()),
            self.derivatives
                .into_iter()
                .map(|(j, re, im)| (j, Complex64::new(re.value(), im.value()))),
        )
    }
}

type Partial = FxHashMap<Monomial, Accumulator>;

/// `{H, G} = i Σ_{n,m} H(n) G(m) Σ_k (n_k m'_k − n'_k m_k) q^{n+m−e_k−e'_k}`,
/// with `v`-derivatives carried by the product rule.
///
/// Every contribution is accumulated exactly and rounded once, so
/// `{H,G} = −{G,H}` holds bit for bit and the result does not depend on how
/// the work is split across threads.
pub fn poisson_bracket(h: &FormalHamiltonian, g: &FormalHamiltonian) -> FormalHamiltonian {
    poisson_bracket_capped(h, g, None)
}

/// `{H, G}` restricted to output degree `≤ max_degree`: pairs with
/// `|n| + |m| − 2 > max_degree` are skipped, so the result equals the
/// truncated full bracket bit for bit.
pub fn poisson_bracket_capped(
    h: &FormalHamiltonian,
    g: &FormalHamiltonian,
    max_degree: Option<u32>,
) -> FormalHamiltonian {
    let limit = max_degree.map_or(u32::MAX, |c| c.saturating_add(2));
    if h.is_empty() || g.is_empty() {
        return FormalHamiltonian::new();
    }
    // iterate the smaller operand, index the larger one by site
    let h_is_outer = h.len() <= g.len();
    let (outer, inner) = if h_is_outer { (h, g) } else { (g, h) };
    let inner_terms: Vec<(&Monomial, &Coefficient)> = inner.iter().collect();
    let mut by_site: FxHashMap<i32, Vec<usize>> = FxHashMap::default();
    for (idx, (m, _)) in inner_terms.iter().enumerate() {
        for site in m.support() {
            by_site.entry(site).or_default().push(idx);
        }
    }
    let outer_terms: Vec<(&Monomial, &Coefficient)> = outer.iter().collect();

    let work = |chunk: &[(&Monomial, &Coefficient)]| -> Partial {
        let mut acc = Partial::default();
        for &(a, ca) in chunk {
            for site in a.support() {
                let Some(partners) = by_site.get(&site) else { continue };
                for &idx in partners {
                    let (b, cb) = inner_terms[idx];
                    if a.degree() + b.degree() > limit {
                        continue;
                    }
                    let ((n, cn), (m, cm)) = if h_is_outer {
                        ((a, ca), (b, cb))
                    } else {
                        ((b, cb), (a, ca))
                    };
                    let Some((out, weight)) = n.bracket_term(m, site) else {
                        continue;
                    };
                    let w = weight as f64;
                    let slot = acc.entry(out).or_default();
                    slot.add_times_i(cn.value * cm.value * w);
                    for &(j, d) in cm.derivatives() {
                        slot.add_derivative_times_i(j, cn.value * d * w);
                    }
                    for &(j, d) in cn.derivatives() {
                        slot.add_derivative_times_i(j, cm.value * d * w);
                    }
                }
            }
        }
        acc
    };

    let merged = if outer_terms.len() <= PARALLEL_CHUNK {
        work(&outer_terms)
    } else {
        outer_terms
            .par_chunks(PARALLEL_CHUNK)
            .map(work)
            .reduce(Partial::default, |mut a, b| {
                for (k, v) in b {
                    match a.get_mut(&k) {
                        Some(slot) => slot.merge(v),
                        None => {
                            a.insert(k, v);
                        }
                    }
                }
                a
            })
    };
    merged
        .into_iter()
        .map(|(n, acc)| (n, acc.finish()))
        .filter(|(_, c)| !c.is_zero())
        .collect()
}

/// Number of site-sharing monomial pairs `{H, G}` visits, an upper bound on
/// the number of contributions it accumulates.
pub fn bracket_pairs(h: &FormalHamiltonian, g: &FormalHamiltonian) -> usize {
    bracket_pairs_capped(h, g, None)
}

/// Pairs [`poisson_bracket_capped`] visits with the same cap.
pub fn bracket_pairs_capped(h: &FormalHamiltonian, g: &FormalHamiltonian, max_degree: Option<u32>) -> usize {
    let limit = max_degree.map_or(u32::MAX, |c| c.saturating_add(2));
    let (outer, inner) = if h.len() <= g.len() { (h, g) } else { (g, h) };
    // per site, counts of inner monomials by degree
    let mut per_site: FxHashMap<i32, Vec<usize>> = FxHashMap::default();
    for m in inner.monomials() {
        let d = m.degree() as usize;
        for site in m.support() {
            let counts = per_site.entry(site).or_default();
            if counts.len() <= d {
                counts.resize(d + 1, 0);
            }
            counts[d] += 1;
        }
    }
    outer
        .monomials()
        .flat_map(|m| m.support().map(move |site| (m.degree(), site)))
        .map(|(d, site)| {
            per_site.get(&site).map_or(0, |counts| {
                let top = limit.saturating_sub(d).min(counts.len().saturating_sub(1) as u32) as usize;
                if limit < d {
                    0
                } else {
                    counts[..=top].iter().sum()
                }
            })
        })
        .sum()
}
