//! Random site frequencies and the γ-non-resonance test.
//!
//! Site values are drawn from a ChaCha8 stream keyed by `(seed, site)`: the
//! seed selects the key and the zig-zag encoded site selects the stream. A
//! site's value therefore never depends on the window it was sampled in.

use std::collections::BTreeMap;
use std::fmt;
use std::io::Write;

use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};

use crate::error::{Error, Result};

pub const GENERATOR_ID: &str = "chacha8-site-stream/v1";

/// Uniform `[0, 1)` value for `site` under `seed`.
pub fn site_uniform(seed: u64, site: i64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(zigzag(site));
    unit_f64(rng.next_u64())
}

/// Uniform `[0, 1)` value for `(sample, site)`: a random-access stream used
/// by the Monte-Carlo estimators so every estimator sees the same potential
/// for a given sample index.
pub fn sample_site_uniform(seed: u64, sample: u64, site: i64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(sample);
    rng.set_word_pos(2 * zigzag(site) as u128);
    unit_f64(rng.next_u64())
}

/// [`sample_site_uniform`] for every site in `sites`, reusing one stream.
pub fn sample_sites_uniform(seed: u64, sample: u64, sites: &[i64]) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(sample);
    sites
        .iter()
        .map(|&j| {
            rng.set_word_pos(2 * zigzag(j) as u128);
            unit_f64(rng.next_u64())
        })
        .collect()
}

pub(crate) fn zigzag(site: i64) -> u64 {
    ((site << 1) ^ (site >> 63)) as u64
}

fn unit_f64(bits: u64) -> f64 {
    (bits >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

/// Site frequencies `v_j ∈ [0, 1]` on the window `[-W, W]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Potential {
    radius: usize,
    values: Vec<f64>,
    seed: u64,
    generator_id: String,
}

impl Potential {
    pub fn sample(seed: u64, radius: usize) -> Result<Self> {
        if radius < 1 {
            return Err(Error::InvalidParameter(
                "potential window radius must be at least 1".into(),
            ));
        }
        let w = radius as i64;
        let values = (-w..=w).map(|j| site_uniform(seed, j)).collect();
        Ok(Self {
            radius,
            values,
            seed,
            generator_id: GENERATOR_ID.to_string(),
        })
    }

    /// A deterministic potential from explicit values (tests, audits).
    pub fn from_values(radius: usize, values: Vec<f64>) -> Result<Self> {
        if values.len() != 2 * radius + 1 {
            return Err(Error::InvalidParameter(format!(
                "expected {} values, got {}",
                2 * radius + 1,
                values.len()
            )));
        }
        if let Some(v) = values.iter().find(|v| !(0.0..=1.0).contains(*v)) {
            return Err(Error::InvalidParameter(format!("value {v} outside [0, 1]")));
        }
        Ok(Self {
            radius,
            values,
            seed: 0,
            generator_id: "explicit".into(),
        })
    }

    pub fn radius(&self) -> usize {
        self.radius
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn generator_id(&self) -> &str {
        &self.generator_id
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn get(&self, site: i64) -> Option<f64> {
        let w = self.radius as i64;
        (-w..=w).contains(&site).then(|| self.values[(site + w) as usize])
    }

    pub fn iter(&self) -> impl Iterator<Item = (i64, f64)> + '_ {
        let w = self.radius as i64;
        (-w..=w).zip(self.values.iter().copied())
    }

    /// CSV audit dump with header `site,value`.
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "# seed={} generator={}", self.seed, self.generator_id)?;
        writeln!(out, "site,value")?;
        for (j, v) in self.iter() {
            writeln!(out, "{j},{v:e}")?;
        }
        Ok(())
    }

    /// Signed small divisor `Σ_j k_j v_j`.
    pub fn small_divisor(&self, k: &IntegerVector) -> Result<f64> {
        if k.is_zero() {
            return Err(Error::InvalidParameter(
                "small divisor needs a nonzero integer vector".into(),
            ));
        }
        let mut sum = 0.0;
        for (&j, &kj) in &k.entries {
            let v = self
                .get(j)
                .ok_or_else(|| Error::InvalidParameter(format!("site {j} outside potential window")))?;
            sum += kj as f64 * v;
        }
        Ok(sum)
    }

    /// `|Σ k_j v_j| ≥ γ / (max(Δ(k),1)² |k|^{Δ(k)+2})`.
    pub fn check_nonresonance(&self, k: &IntegerVector, gamma: f64) -> Result<bool> {
        let divisor = self.small_divisor(k)?;
        Ok(divisor.abs() >= nonresonance_threshold(gamma, k.diameter(), k.l1_norm()))
    }
}

/// The threshold `γ / (max(Δ,1)² · |k|^{Δ+2})`.
///
/// `Δ = 0` is regularized to 1 in the squared factor; the exponent keeps the
/// raw diameter.
pub fn nonresonance_threshold(gamma: f64, diameter: u64, order: u64) -> f64 {
    let d = diameter.max(1) as f64;
    gamma / (d * d * (order as f64).powi(diameter as i32 + 2))
}

/// A finitely supported integer vector `k ∈ Z^Z`.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct IntegerVector {
    entries: BTreeMap<i64, i64>,
}

impl IntegerVector {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_entries<I: IntoIterator<Item = (i64, i64)>>(entries: I) -> Self {
        let mut k = Self::new();
        for (site, value) in entries {
            k.accumulate(site, value);
        }
        k
    }

    pub fn accumulate(&mut self, site: i64, value: i64) {
        let entry = self.entries.entry(site).or_insert(0);
        *entry += value;
        if *entry == 0 {
            self.entries.remove(&site);
        }
    }

    pub fn get(&self, site: i64) -> i64 {
        self.entries.get(&site).copied().unwrap_or(0)
    }

    pub fn is_zero(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (i64, i64)> + '_ {
        self.entries.iter().map(|(&j, &k)| (j, k))
    }

    /// Diameter of the support, 0 for single-site vectors.
    pub fn diameter(&self) -> u64 {
        match (self.entries.keys().next(), self.entries.keys().next_back()) {
            (Some(lo), Some(hi)) => (hi - lo) as u64,
            _ => 0,
        }
    }

    /// `|k| = Σ |k_j|`.
    pub fn l1_norm(&self) -> u64 {
        self.entries.values().map(|k| k.unsigned_abs()).sum()
    }

    /// Largest site with a nonzero entry.
    pub fn top_site(&self) -> Option<i64> {
        self.entries.keys().next_back().copied()
    }

    pub fn sum(&self) -> i64 {
        self.entries.values().sum()
    }
}

impl std::ops::Add for &IntegerVector {
    type Output = IntegerVector;

    fn add(self, rhs: &IntegerVector) -> IntegerVector {
        let mut out = self.clone();
        for (j, k) in rhs.iter() {
            out.accumulate(j, k);
        }
        out
    }
}

impl fmt::Display for IntegerVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[")?;
        for (i, (j, k)) in self.iter().enumerate() {
            if i > 0 {
                write!(f, " ")?;
            }
            write!(f, "{j}:{k:+}")?;
        }
        write!(f, "]")
    }
}
