use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use super::{Boundary, ModelParams};
use crate::potential::Potential;

/// Below this the phase `exp(-ix)` is summed as a Taylor series through
/// `x⁹`; the first dropped term is `x¹⁰/10! < 3e-20`.
const TAYLOR_PHASE_LIMIT: f64 = 5e-2;

/// Chebyshev terms are dropped once `(z/2)^k / k!` (an upper bound on
/// `|J_k(z)|`) falls below this.
const CHEBYSHEV_CUTOFF: f64 = 1e-18;

/// Amplitudes at the edge of the occupied band with both components below
/// this are set to zero, so the band edge never runs through subnormals.
const FLUSH_LIMIT: f64 = 1e-290;

#[inline]
fn phase(x: f64) -> Complex64 {
    if x.abs() < TAYLOR_PHASE_LIMIT {
        let x2 = x * x;
        let cos = 1.0 - x2 * (0.5 - x2 * (1.0 / 24.0 - x2 * (1.0 / 720.0 - x2 * (1.0 / 40320.0))));
        let sin = x * (1.0 - x2 * (1.0 / 6.0 - x2 * (1.0 / 120.0 - x2 * (1.0 / 5040.0 - x2 * (1.0 / 362880.0)))));
        Complex64::new(cos, -sin)
    } else {
        let (s, c) = x.sin_cos();
        Complex64::new(c, -s)
    }
}

/// `J_0(z), …, J_{kmax}(z)` by Miller's backward recurrence, normalised with
/// `J_0 + 2 Σ J_{2k} = 1`.
pub fn bessel_j_sequence(z: f64, kmax: usize) -> Vec<f64> {
    let sign = if z < 0.0 { -1.0 } else { 1.0 };
    let z = z.abs();
    if z == 0.0 {
        let mut out = vec![0.0; kmax + 1];
        out[0] = 1.0;
        return out;
    }
    let mut start = kmax + 20 + (1.5 * z) as usize;
    if start % 2 == 1 {
        start += 1;
    }
    let mut f = vec![0.0; start + 2];
    f[start] = 1e-300;
    for k in (1..=start).rev() {
        f[k - 1] = 2.0 * k as f64 / z * f[k] - f[k + 1];
        if f[k - 1].abs() > 1e250 {
            for x in f[k - 1..].iter_mut() {
                *x *= 1e-250;
            }
        }
    }
    let mut norm = f[0];
    for k in (2..=start).step_by(2) {
        norm += 2.0 * f[k];
    }
    f.truncate(kmax + 1);
    let mut s = 1.0;
    for x in f.iter_mut() {
        *x = *x / norm * s;
        s *= sign;
    }
    f
}

fn chebyshev_order(z: f64) -> usize {
    // smallest k whose successor's bound is below the cutoff
    let half = z.abs() / 2.0;
    let mut bound = 1.0;
    let mut k = 0usize;
    loop {
        let next = bound * half / (k + 1) as f64;
        if next < CHEBYSHEV_CUTOFF && (k as f64) >= z.abs() {
            return k.max(1);
        }
        bound = next;
        k += 1;
    }
}

enum Hopping {
    Identity,
    Fourier {
        forward: Arc<dyn Fft<f64>>,
        inverse: Arc<dyn Fft<f64>>,
        multiplier: Vec<Complex64>,
        scale: f64,
        scratch: Vec<Complex64>,
    },
    Chebyshev {
        coefficients: Vec<Complex64>,
        periodic: bool,
        prev: Vec<Complex64>,
        cur: Vec<Complex64>,
        next: Vec<Complex64>,
        acc: Vec<Complex64>,
    },
}

impl Hopping {
    fn new(n: usize, epsilon: f64, h: f64, boundary: Boundary) -> Self {
        if epsilon == 0.0 || n < 2 {
            return Hopping::Identity;
        }
        match boundary {
            Boundary::Periodic if n > 2 => {
                let mut planner = FftPlanner::new();
                let forward = planner.plan_fft_forward(n);
                let inverse = planner.plan_fft_inverse(n);
                let multiplier = (0..n)
                    .map(|p| {
                        let theta = 2.0 * std::f64::consts::PI * p as f64 / n as f64;
                        Complex64::from_polar(1.0, -2.0 * epsilon * theta.cos() * h)
                    })
                    .collect();
                let len = forward.get_inplace_scratch_len().max(inverse.get_inplace_scratch_len());
                Hopping::Fourier {
                    forward,
                    inverse,
                    multiplier,
                    scale: n as f64,
                    scratch: vec![Complex64::new(0.0, 0.0); len],
                }
            }
            _ => Self::chebyshev(n, epsilon, h, false),
        }
    }

    /// `exp(-i h ε A)` with `A` the adjacency matrix, expanded in Chebyshev
    /// polynomials of `S = A/2` (spectrum in `[-1, 1]`).
    fn chebyshev(n: usize, epsilon: f64, h: f64, periodic: bool) -> Self {
        let z = 2.0 * epsilon * h;
        let order = chebyshev_order(z);
        let j = bessel_j_sequence(z, order);
        let mut ipow = Complex64::new(1.0, 0.0);
        let coefficients = j
            .iter()
            .enumerate()
            .map(|(k, &jk)| {
                let c = ipow * jk * if k == 0 { 1.0 } else { 2.0 };
                ipow *= Complex64::new(0.0, -1.0);
                c
            })
            .collect();
        let zero = vec![Complex64::new(0.0, 0.0); n];
        Hopping::Chebyshev {
            coefficients,
            periodic,
            prev: zero.clone(),
            cur: zero.clone(),
            next: zero.clone(),
            acc: zero,
        }
    }

    /// Applies the hopping flow given that `q` vanishes outside `band`
    /// (inclusive), returning a band that contains the result's support.
    fn apply(&mut self, q: &mut [Complex64], band: (usize, usize)) -> (usize, usize) {
        let n = q.len();
        match self {
            Hopping::Identity => band,
            Hopping::Fourier {
                forward,
                inverse,
                multiplier,
                scale,
                scratch,
            } => {
                forward.process_with_scratch(q, scratch);
                // dividing (not multiplying by a rounded 1/N) keeps the
                // normalisation error unbiased
                for (x, m) in q.iter_mut().zip(multiplier.iter()) {
                    *x = *x * m / *scale;
                }
                inverse.process_with_scratch(q, scratch);
                (0, n - 1)
            }
            Hopping::Chebyshev {
                coefficients,
                periodic,
                prev,
                cur,
                next,
                acc,
            } => {
                let periodic = *periodic;
                // φ_k is supported within band ± k, so without wrap-around the
                // recurrence can run on that slice with zero ends exactly
                let reach = coefficients.len() - 1;
                let (lo, hi) = if periodic {
                    (0, n - 1)
                } else {
                    (band.0.saturating_sub(reach), (band.1 + reach).min(n - 1))
                };
                let q = &mut q[lo..=hi];
                let m = q.len();
                let (mut prev, mut cur, mut next, acc) = (&mut prev[..m], &mut cur[..m], &mut next[..m], &mut acc[..m]);
                prev.copy_from_slice(q);
                let c0 = coefficients[0];
                for (a, x) in acc.iter_mut().zip(q.iter()) {
                    *a = c0 * x;
                }
                chebyshev_term(prev, None, cur, acc, coefficients[1], 0.5, periodic);
                for &c in coefficients.iter().skip(2) {
                    chebyshev_term(cur, Some(prev), next, acc, c, 1.0, periodic);
                    std::mem::swap(&mut prev, &mut cur);
                    std::mem::swap(&mut cur, &mut next);
                }
                q.copy_from_slice(acc);
                (lo, hi)
            }
        }
    }
}

fn sub_at_single(sub: Option<&[Complex64]>) -> Complex64 {
    sub.map_or(Complex64::new(0.0, 0.0), |s| s[0])
}

/// `out = f · (x_{i-1} + x_{i+1}) − sub_i` and `acc += c · out`, one pass.
#[inline]
fn chebyshev_term(
    x: &[Complex64],
    sub: Option<&[Complex64]>,
    out: &mut [Complex64],
    acc: &mut [Complex64],
    c: Complex64,
    f: f64,
    periodic: bool,
) {
    let n = x.len();
    let zero = Complex64::new(0.0, 0.0);
    if n == 1 {
        out[0] = -sub_at_single(sub);
        acc[0] += c * out[0];
        return;
    }
    let (first_left, last_right) = if periodic { (x[n - 1], x[0]) } else { (zero, zero) };
    let sub_at = |i: usize| sub.map_or(zero, |s| s[i]);
    out[0] = (first_left + x[1]) * f - sub_at(0);
    acc[0] += c * out[0];
    match sub {
        Some(s) => {
            for i in 1..n - 1 {
                let y = (x[i - 1] + x[i + 1]) * f - s[i];
                out[i] = y;
                acc[i] += c * y;
            }
        }
        None => {
            for i in 1..n - 1 {
                let y = (x[i - 1] + x[i + 1]) * f;
                out[i] = y;
                acc[i] += c * y;
            }
        }
    }
    out[n - 1] = (x[n - 2] + last_right) * f - sub_at(n - 1);
    acc[n - 1] += c * out[n - 1];
}

/// Reusable Strang stepper for a fixed potential, parameter set and step `h`.
///
/// `h` may be negative (backward integration). The onsite phase
/// `(v_j + δ|q_j|²) h` is evaluated afresh at every site and step rather than
/// multiplied in from a precomputed unit number: a fixed multiplier carries a
/// fixed modulus rounding that would bias the mass over millions of steps.
pub struct StrangPropagator {
    h: f64,
    delta: f64,
    potential: Vec<f64>,
    hopping: Hopping,
}

impl StrangPropagator {
    pub fn new(pot: &Potential, params: &ModelParams, h: f64) -> Self {
        let v = pot.values();
        Self {
            h,
            delta: params.delta,
            potential: v.to_vec(),
            hopping: Hopping::new(v.len(), params.epsilon, h, params.boundary),
        }
    }

    /// Same as [`new`](Self::new) but forces the Chebyshev hopping route,
    /// used to cross-check it against the Fourier route.
    pub fn with_chebyshev(pot: &Potential, params: &ModelParams, h: f64) -> Self {
        let mut p = Self::new(pot, params, h);
        if params.epsilon != 0.0 {
            p.hopping = Hopping::chebyshev(
                pot.values().len(),
                params.epsilon,
                h,
                params.boundary == Boundary::Periodic,
            );
        }
        p
    }

    pub fn step_size(&self) -> f64 {
        self.h
    }

    #[inline]
    fn onsite(&self, q: &mut [Complex64], h: f64, band: (usize, usize)) {
        let dh = self.delta * h;
        let (lo, hi) = band;
        for (x, &v) in q[lo..=hi].iter_mut().zip(&self.potential[lo..=hi]) {
            *x *= phase(v * h + dh * x.norm_sqr());
        }
    }

    /// One step `A(h/2) B(h) A(h/2)`.
    pub fn step(&mut self, q: &mut [Complex64]) {
        self.advance(q, 1);
    }

    /// `steps` consecutive Strang steps. Adjacent half onsite steps are fused
    /// into one: the onsite flow keeps every `|q_j|` fixed, so
    /// `A(h/2) A(h/2) = A(h)` exactly. Without hopping the whole run collapses
    /// to the single rotation `A(steps · h)` for the same reason.
    pub fn advance(&mut self, q: &mut [Complex64], steps: usize) {
        if steps == 0 {
            return;
        }
        let Some(mut band) = trim(q, (0, q.len() - 1)) else {
            return;
        };
        if matches!(self.hopping, Hopping::Identity) {
            self.onsite(q, self.h * steps as f64, band);
            return;
        }
        self.onsite(q, self.h / 2.0, band);
        for i in 0..steps {
            band = self.hopping.apply(q, band);
            band = match trim(q, band) {
                Some(b) => b,
                None => return,
            };
            if i + 1 < steps {
                self.onsite(q, self.h, band);
            }
        }
        self.onsite(q, self.h / 2.0, band);
    }
}

#[inline]
fn negligible(z: Complex64) -> bool {
    z.re.abs() < FLUSH_LIMIT && z.im.abs() < FLUSH_LIMIT
}

/// Shrinks `band` past negligible edge amplitudes (zeroing them); `None` when
/// nothing is left.
fn trim(q: &mut [Complex64], band: (usize, usize)) -> Option<(usize, usize)> {
    let (mut lo, mut hi) = band;
    while lo <= hi && negligible(q[lo]) {
        q[lo] = Complex64::new(0.0, 0.0);
        lo += 1;
    }
    if lo > hi {
        return None;
    }
    while negligible(q[hi]) {
        q[hi] = Complex64::new(0.0, 0.0);
        hi -= 1;
    }
    Some((lo, hi))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bessel_series(z: f64, k: usize) -> f64 {
        // Σ_m (-1)^m (z/2)^{2m+k} / (m! (m+k)!)
        let half = z / 2.0;
        let mut term = half.powi(k as i32) / (1..=k).map(|x| x as f64).product::<f64>();
        let mut sum = term;
        for m in 1..60 {
            term *= -half * half / (m as f64 * (m + k) as f64);
            sum += term;
        }
        sum
    }

    #[test]
    fn bessel_matches_power_series() {
        for &z in &[1e-4, 2e-3, 0.1, 1.0, 3.7, 8.0] {
            let seq = bessel_j_sequence(z, 12);
            for (k, &jk) in seq.iter().enumerate() {
                let want = bessel_series(z, k);
                let err = (jk - want).abs();
                assert!(err <= 1e-13 * want.abs() + 1e-17, "z={z} k={k}: {jk} vs {want}");
            }
        }
        let neg = bessel_j_sequence(-0.7, 5);
        let pos = bessel_j_sequence(0.7, 5);
        for k in 0..=5 {
            let s = if k % 2 == 0 { 1.0 } else { -1.0 };
            assert_eq!(neg[k], s * pos[k]);
        }
    }

    #[test]
    fn taylor_phase_matches_sincos() {
        for &x in &[0.0, 1e-8, 3e-4, -5e-3, 9.99e-3, 0.0499, -0.0499, 0.5] {
            let p = phase(x);
            let want = Complex64::from_polar(1.0, -x);
            assert!((p - want).norm() < 2e-16, "x = {x}");
        }
    }

    #[test]
    fn chebyshev_agrees_with_fourier_on_a_ring() {
        let pot = Potential::sample(2, 30).unwrap();
        let params = ModelParams::new(0.3, 0.2, 0.05, Boundary::Periodic).unwrap();
        let q0: Vec<Complex64> = (0..61)
            .map(|i| Complex64::new((i as f64 * 0.37).sin(), (i as f64 * 0.11).cos()))
            .collect();
        let mut a = q0.clone();
        let mut b = q0;
        StrangPropagator::new(&pot, &params, 0.05).advance(&mut a, 50);
        StrangPropagator::with_chebyshev(&pot, &params, 0.05).advance(&mut b, 50);
        let err: f64 = a.iter().zip(&b).map(|(x, y)| (x - y).norm_sqr()).sum::<f64>().sqrt();
        assert!(err < 1e-12, "{err}");
    }

    #[test]
    fn fused_advance_equals_repeated_steps() {
        let pot = Potential::sample(2, 10).unwrap();
        let params = ModelParams::new(0.1, 0.5, 0.02, Boundary::Dirichlet).unwrap();
        let q0: Vec<Complex64> = (0..21)
            .map(|i| Complex64::new(1.0 / (1.0 + i as f64), 0.1 * i as f64))
            .collect();
        let mut a = q0.clone();
        let mut b = q0;
        let mut p = StrangPropagator::new(&pot, &params, 0.02);
        p.advance(&mut a, 40);
        for _ in 0..40 {
            p.step(&mut b);
        }
        let err: f64 = a.iter().zip(&b).map(|(x, y)| (x - y).norm_sqr()).sum::<f64>().sqrt();
        assert!(err < 1e-13, "{err}");
    }
}
