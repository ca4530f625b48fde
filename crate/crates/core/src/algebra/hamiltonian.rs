use std::io::{BufRead, Write};

use num_complex::Complex64;
use rustc_hash::FxHashMap;

use super::{Coefficient, Monomial};
use crate::error::{Error, Result};
use crate::lattice::LatticeState;

/// A formal power series `Σ_n H(n) Π_j q_j^{n_j} q̄_j^{n'_j}` with finitely many
/// stored terms. Exactly-zero coefficients are never stored.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct FormalHamiltonian {
    terms: FxHashMap<Monomial, Coefficient>,
}

impl FormalHamiltonian {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn get(&self, n: &Monomial) -> Option<&Coefficient> {
        self.terms.get(n)
    }

    pub fn contains(&self, n: &Monomial) -> bool {
        self.terms.contains_key(n)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Monomial, &Coefficient)> {
        self.terms.iter()
    }

    pub fn monomials(&self) -> impl Iterator<Item = &Monomial> {
        self.terms.keys()
    }

    /// Terms in canonical monomial order.
    pub fn sorted(&self) -> Vec<(&Monomial, &Coefficient)> {
        let mut v: Vec<_> = self.terms.iter().collect();
        v.sort_unstable_by(|a, b| a.0.cmp(b.0));
        v
    }

    /// Replaces the coefficient of `n` (a zero coefficient removes it).
    pub fn insert(&mut self, n: Monomial, c: Coefficient) {
        if c.is_zero() {
            self.terms.remove(&n);
        } else {
            self.terms.insert(n, c);
        }
    }

    /// Adds `c` to the coefficient of `n`.
    pub fn add_term(&mut self, n: Monomial, c: &Coefficient) {
        use std::collections::hash_map::Entry;
        match self.terms.entry(n) {
            Entry::Occupied(mut e) => {
                e.get_mut().add_assign(c);
                if e.get().is_zero() {
                    e.remove();
                }
            }
            Entry::Vacant(e) => {
                if !c.is_zero() {
                    e.insert(c.clone());
                }
            }
        }
    }

    pub fn remove(&mut self, n: &Monomial) -> Option<Coefficient> {
        self.terms.remove(n)
    }

    /// `self += a · other`.
    pub fn add_scaled(&mut self, other: &FormalHamiltonian, a: Complex64) {
        for (n, c) in &other.terms {
            let slot = self.terms.entry(n.clone()).or_default();
            slot.add_assign(&c.scaled(a));
        }
        self.terms.retain(|_, c| !c.is_zero());
    }

    pub fn scaled(&self, a: Complex64) -> Self {
        let mut out = Self::new();
        out.add_scaled(self, a);
        out
    }

    pub fn sum(&self, other: &FormalHamiltonian) -> Self {
        let mut out = self.clone();
        out.add_scaled(other, Complex64::new(1.0, 0.0));
        out
    }

    pub fn difference(&self, other: &FormalHamiltonian) -> Self {
        let mut out = self.clone();
        out.add_scaled(other, Complex64::new(-1.0, 0.0));
        out
    }

    /// Splits into the terms satisfying `keep` and the rest.
    pub fn partition(&self, mut keep: impl FnMut(&Monomial, &Coefficient) -> bool) -> (Self, Self) {
        let (mut a, mut b) = (Self::new(), Self::new());
        for (n, c) in &self.terms {
            if keep(n, c) {
                a.terms.insert(n.clone(), c.clone());
            } else {
                b.terms.insert(n.clone(), c.clone());
            }
        }
        (a, b)
    }

    pub fn filter(&self, keep: impl FnMut(&Monomial, &Coefficient) -> bool) -> Self {
        self.partition(keep).0
    }

    /// Removes terms whose value and derivatives are all below `floor` in
    /// magnitude; returns how many were removed and the largest removed magnitude.
    pub fn prune(&mut self, floor: f64) -> (usize, f64) {
        let mut count = 0;
        let mut largest = 0.0f64;
        self.terms.retain(|_, c| {
            let m = c.magnitude();
            if m < floor {
                count += 1;
                largest = largest.max(m);
                false
            } else {
                true
            }
        });
        (count, largest)
    }

    /// Drops monomials of degree above `cap`; returns how many and the
    /// largest dropped coefficient magnitude.
    pub fn truncate_degree(&mut self, cap: u32) -> (usize, f64) {
        let mut count = 0;
        let mut largest = 0.0f64;
        self.terms.retain(|n, c| {
            if n.degree() > cap {
                count += 1;
                largest = largest.max(c.magnitude());
                false
            } else {
                true
            }
        });
        (count, largest)
    }

    pub fn max_degree(&self) -> u32 {
        self.terms.keys().map(Monomial::degree).max().unwrap_or(0)
    }

    /// Largest deviation from `H(n') = conj(H(n))` over stored terms, relative
    /// to the coefficient size.
    pub fn reality_defect(&self) -> f64 {
        let mut worst = 0.0f64;
        for (n, c) in &self.terms {
            let partner = self.terms.get(&n.conjugate()).cloned().unwrap_or_default().conj();
            let scale = c.magnitude().max(partner.magnitude());
            let mut diff = (c.value - partner.value).norm();
            for &(j, d) in c.derivatives() {
                diff = diff.max((d - partner.derivative(j)).norm());
            }
            for &(j, d) in partner.derivatives() {
                diff = diff.max((d - c.derivative(j)).norm());
            }
            worst = worst.max(diff / scale);
        }
        worst
    }

    /// `Σ_n H(n) Π q^n q̄^{n'}` at a lattice state (sites outside the window
    /// count as zero amplitude).
    pub fn evaluate(&self, state: &LatticeState) -> Complex64 {
        let lookup = |j: i32| state.get(j as i64);
        self.sorted()
            .into_iter()
            .map(|(n, c)| c.value * monomial_value(n, lookup))
            .sum()
    }

    /// `∂H/∂q̄_j` for every site of a window of the given radius, evaluated at
    /// the amplitudes `q` (indexed from `−radius`).
    pub fn conj_gradient(&self, radius: usize, q: &[Complex64]) -> Vec<Complex64> {
        let w = radius as i32;
        let lookup = |j: i32| {
            if j.abs() <= w {
                q[(j + w) as usize]
            } else {
                Complex64::default()
            }
        };
        let mut out = vec![Complex64::default(); q.len()];
        for (n, c) in &self.terms {
            for f in n.factors() {
                if f.nbar == 0 || f.site.abs() > w {
                    continue;
                }
                let mut prod = c.value * f.nbar as f64;
                for g in n.factors() {
                    let z = lookup(g.site);
                    let nbar = if g.site == f.site { g.nbar - 1 } else { g.nbar };
                    prod *= z.powu(g.n as u32) * z.conj().powu(nbar as u32);
                }
                out[(f.site + w) as usize] += prod;
            }
        }
        out
    }

    /// Writes one line per term in canonical order:
    /// `monomial re im [site:dre:dim ...]`.
    pub fn write_dump<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        for (n, c) in self.sorted() {
            write!(out, "{n} {:e} {:e}", c.value.re, c.value.im)?;
            for &(j, d) in c.derivatives() {
                write!(out, " {j}:{:e}:{:e}", d.re, d.im)?;
            }
            writeln!(out)?;
        }
        Ok(())
    }

    pub fn dump_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_dump(&mut buf).expect("writing to memory");
        String::from_utf8(buf).expect("dump is ASCII")
    }

    pub fn read_dump<R: BufRead>(input: R) -> Result<Self> {
        let mut h = Self::new();
        for (lineno, line) in input.lines().enumerate() {
            let line = line.map_err(|e| Error::parse("hamiltonian dump", e.to_string()))?;
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let bad = |what: &str| Error::parse("hamiltonian dump", format!("line {}: {what}", lineno + 1));
            let mut parts = line.split_whitespace();
            let n: Monomial = parts.next().ok_or_else(|| bad("missing monomial"))?.parse()?;
            let re: f64 = parts
                .next()
                .and_then(|x| x.parse().ok())
                .ok_or_else(|| bad("bad real part"))?;
            let im: f64 = parts
                .next()
                .and_then(|x| x.parse().ok())
                .ok_or_else(|| bad("bad imaginary part"))?;
            let mut c = Coefficient::new(Complex64::new(re, im));
            for entry in parts {
                let mut it = entry.split(':');
                let j: i32 = it
                    .next()
                    .and_then(|x| x.parse().ok())
                    .ok_or_else(|| bad("bad derivative site"))?;
                let dre: f64 = it
                    .next()
                    .and_then(|x| x.parse().ok())
                    .ok_or_else(|| bad("bad derivative"))?;
                let dim: f64 = it
                    .next()
                    .and_then(|x| x.parse().ok())
                    .ok_or_else(|| bad("bad derivative"))?;
                c.add_derivative(j, Complex64::new(dre, dim));
            }
            if h.contains(&n) {
                return Err(bad("duplicate monomial"));
            }
            h.insert(n, c);
        }
        Ok(h)
    }
}

impl FromIterator<(Monomial, Coefficient)> for FormalHamiltonian {
    fn from_iter<I: IntoIterator<Item = (Monomial, Coefficient)>>(iter: I) -> Self {
        let mut h = Self::new();
        for (n, c) in iter {
            h.add_term(n, &c);
        }
        h
    }
}

/// `Π q_j^{n_j} q̄_j^{n'_j}`.
pub fn monomial_value(n: &Monomial, lookup: impl Fn(i32) -> Complex64) -> Complex64 {
    n.factors().iter().fold(Complex64::new(1.0, 0.0), |acc, f| {
        let z = lookup(f.site);
        acc * z.powu(f.n as u32) * z.conj().powu(f.nbar as u32)
    })
}
