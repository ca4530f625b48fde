use std::fmt;
use std::str::FromStr;

use smallvec::SmallVec;

use crate::error::{Error, Result};
use crate::potential::IntegerVector;

/// One factor `q_j^{n_j} q̄_j^{n'_j}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Factor {
    pub site: i32,
    pub n: u8,
    pub nbar: u8,
}

/// `Π_j q_j^{n_j} q̄_j^{n'_j}`, stored as factors sorted by site with no
/// all-zero entries. Equality and hashing act on this canonical form.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Monomial {
    factors: SmallVec<[Factor; 4]>,
}

impl Monomial {
    /// Canonicalizes arbitrary `(site, n, n')` entries: repeated sites are
    /// merged, zero factors dropped. The constant monomial is rejected.
    pub fn new<I: IntoIterator<Item = (i32, u8, u8)>>(entries: I) -> Result<Self> {
        let mut factors: SmallVec<[Factor; 4]> = SmallVec::new();
        for (site, n, nbar) in entries {
            match factors.iter_mut().find(|f| f.site == site) {
                Some(f) => {
                    f.n = f.n.checked_add(n).ok_or_else(overflow)?;
                    f.nbar = f.nbar.checked_add(nbar).ok_or_else(overflow)?;
                }
                None => factors.push(Factor { site, n, nbar }),
            }
        }
        factors.retain(|f| f.n != 0 || f.nbar != 0);
        if factors.is_empty() {
            return Err(Error::InvalidParameter("monomial of degree zero".into()));
        }
        factors.sort_unstable();
        Ok(Self { factors })
    }

    /// `|q_j|²`.
    pub fn action(site: i32) -> Self {
        Self::single(site, 1, 1)
    }

    /// `q_j^n q̄_j^{n'}` on one site (`n + n' > 0`).
    pub fn single(site: i32, n: u8, nbar: u8) -> Self {
        assert!(n + nbar > 0, "degree-zero monomial");
        let mut factors = SmallVec::new();
        factors.push(Factor { site, n, nbar });
        Self { factors }
    }

    /// `q_a q̄_b` for `a ≠ b`.
    pub fn hop(a: i32, b: i32) -> Self {
        Self::new([(a, 1, 0), (b, 0, 1)]).expect("nonzero degree")
    }

    pub(crate) fn from_sorted(factors: SmallVec<[Factor; 4]>) -> Self {
        debug_assert!(!factors.is_empty());
        debug_assert!(factors.windows(2).all(|w| w[0].site < w[1].site));
        debug_assert!(factors.iter().all(|f| f.n != 0 || f.nbar != 0));
        Self { factors }
    }

    pub fn factors(&self) -> &[Factor] {
        &self.factors
    }

    pub fn exponent(&self, site: i32) -> (u8, u8) {
        self.factors
            .binary_search_by_key(&site, |f| f.site)
            .map(|i| (self.factors[i].n, self.factors[i].nbar))
            .unwrap_or((0, 0))
    }

    /// `|n| = Σ (n_j + n'_j)`.
    pub fn degree(&self) -> u32 {
        self.factors.iter().map(|f| f.n as u32 + f.nbar as u32).sum()
    }

    pub fn min_site(&self) -> i32 {
        self.factors[0].site
    }

    pub fn max_site(&self) -> i32 {
        self.factors[self.factors.len() - 1].site
    }

    /// `Δ(n)`, the diameter of the support.
    pub fn diameter(&self) -> u32 {
        (self.max_site() - self.min_site()) as u32
    }

    pub fn support(&self) -> impl Iterator<Item = i32> + '_ {
        self.factors.iter().map(|f| f.site)
    }

    /// `n_j = n'_j` everywhere: a function of the actions only.
    pub fn is_resonant(&self) -> bool {
        self.factors.iter().all(|f| f.n == f.nbar)
    }

    /// `|q_j|²` for some `j`.
    pub fn is_action(&self) -> bool {
        self.factors.len() == 1 && self.factors[0].n == 1 && self.factors[0].nbar == 1
    }

    /// Swaps `q` and `q̄`.
    pub fn conjugate(&self) -> Self {
        Self {
            factors: self
                .factors
                .iter()
                .map(|f| Factor {
                    site: f.site,
                    n: f.nbar,
                    nbar: f.n,
                })
                .collect(),
        }
    }

    /// `k = n − n'`.
    pub fn divisor_vector(&self) -> IntegerVector {
        IntegerVector::from_entries(self.factors.iter().map(|f| (f.site as i64, f.n as i64 - f.nbar as i64)))
    }

    /// `Σ_j (n_j − n'_j) v_j` for frequencies looked up by site.
    pub fn divisor(&self, mut v: impl FnMut(i32) -> f64) -> f64 {
        self.factors
            .iter()
            .filter(|f| f.n != f.nbar)
            .map(|f| (f.n as f64 - f.nbar as f64) * v(f.site))
            .sum()
    }

    /// `j_+(n) = max{j : n_j ≠ n'_j}`.
    pub fn j_plus(&self) -> Option<i32> {
        self.factors.iter().rev().find(|f| f.n != f.nbar).map(|f| f.site)
    }

    /// Whether the support meets `A(j0, N) = {j : ||j| − j0| ≤ N}`.
    pub fn touches_window(&self, j0: i64, n: i64) -> bool {
        self.factors.iter().any(|f| ((f.site as i64).abs() - j0).abs() <= n)
    }

    /// The monomial `n + m − e_k − e'_k` produced at site `k` by the bracket,
    /// together with the integer weight `n_k m'_k − n'_k m_k`. `None` when the
    /// weight vanishes.
    pub(crate) fn bracket_term(&self, other: &Monomial, k: i32) -> Option<(Monomial, i32)> {
        let (nk, nbk) = self.exponent(k);
        let (mk, mbk) = other.exponent(k);
        let weight = nk as i32 * mbk as i32 - nbk as i32 * mk as i32;
        if weight == 0 {
            return None;
        }
        // weight ≠ 0 forces n_k + m_k ≥ 1 and n'_k + m'_k ≥ 1
        assert!(nk + mk >= 1 && nbk + mbk >= 1, "negative exponent in bracket");
        let mut out: SmallVec<[Factor; 4]> = SmallVec::with_capacity(self.factors.len() + other.factors.len());
        let (a, b) = (&self.factors, &other.factors);
        let (mut i, mut j) = (0, 0);
        while i < a.len() || j < b.len() {
            let f = if j >= b.len() || (i < a.len() && a[i].site < b[j].site) {
                i += 1;
                a[i - 1]
            } else if i >= a.len() || b[j].site < a[i].site {
                j += 1;
                b[j - 1]
            } else {
                i += 1;
                j += 1;
                Factor {
                    site: a[i - 1].site,
                    n: a[i - 1].n + b[j - 1].n,
                    nbar: a[i - 1].nbar + b[j - 1].nbar,
                }
            };
            let f = if f.site == k {
                Factor {
                    site: k,
                    n: f.n - 1,
                    nbar: f.nbar - 1,
                }
            } else {
                f
            };
            if f.n != 0 || f.nbar != 0 {
                out.push(f);
            }
        }
        if out.is_empty() {
            return None;
        }
        Some((Monomial::from_sorted(out), weight))
    }
}

fn overflow() -> Error {
    Error::InvalidParameter("monomial exponent overflow".into())
}

/// Canonical text form: `site:n:n'` factors joined by commas, e.g. `-1:1:0,0:0:1`.
impl fmt::Display for Monomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, x) in self.factors.iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            write!(f, "{}:{}:{}", x.site, x.n, x.nbar)?;
        }
        Ok(())
    }
}

impl FromStr for Monomial {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::parse("monomial", format!("cannot parse '{s}'"));
        let mut entries = Vec::new();
        for part in s.trim().split(',') {
            let mut it = part.split(':');
            let site = it.next().and_then(|x| x.trim().parse().ok()).ok_or_else(bad)?;
            let n = it.next().and_then(|x| x.trim().parse().ok()).ok_or_else(bad)?;
            let nbar = it.next().and_then(|x| x.trim().parse().ok()).ok_or_else(bad)?;
            if it.next().is_some() {
                return Err(bad());
            }
            entries.push((site, n, nbar));
        }
        let m = Monomial::new(entries)?;
        if m.to_string() != s.trim() {
            return Err(Error::parse("monomial", format!("'{s}' is not in canonical form")));
        }
        Ok(m)
    }
}
