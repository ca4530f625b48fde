use super::{Coefficient, FormalHamiltonian, Monomial};
use crate::error::{Error, Result};

/// Weight parameters `(τ, j0)` of the tame norms and the windows
/// `A(j0, N) = {j : ||j| − j0| ≤ N}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TameWindow {
    pub tau: f64,
    pub j0: u64,
}

impl TameWindow {
    /// Accepts `0 < τ < 1/100` and any `j0 ≥ 1`; desk-scale tests run far
    /// below the production size (see [`TameWindow::is_production`]).
    pub fn new(tau: f64, j0: u64) -> Result<Self> {
        if !(tau > 0.0 && tau < 0.01) {
            return Err(Error::InvalidParameter(format!("tau = {tau} outside (0, 1/100)")));
        }
        if j0 == 0 {
            return Err(Error::InvalidParameter("j0 must be positive".into()));
        }
        Ok(Self { tau, j0 })
    }

    /// `j0 ≥ 10⁴`.
    pub fn is_production(&self) -> bool {
        self.j0 >= 10_000
    }

    /// `j0^{(2−d)τ}` for a monomial of degree `d`.
    pub fn weight(&self, degree: u32) -> f64 {
        (self.j0 as f64).powf((2.0 - degree as f64) * self.tau)
    }

    pub fn ln_j0(&self) -> f64 {
        (self.j0 as f64).ln()
    }

    /// Integer half-width used for `A(j0, N)`: real widths are rounded up.
    pub fn halfwidth(n: f64) -> i64 {
        n.ceil() as i64
    }

    pub fn in_window(&self, site: i64, n: f64) -> bool {
        (site.abs() - self.j0 as i64).abs() <= Self::halfwidth(n)
    }

    pub fn touches(&self, m: &Monomial, n: f64) -> bool {
        m.touches_window(self.j0 as i64, Self::halfwidth(n))
    }
}

/// `j0^{(2−|n|)τ} |H(n)|` (zero when `n` is absent).
pub fn tame_norm(h: &FormalHamiltonian, w: &TameWindow, n: &Monomial) -> f64 {
    h.get(n).map_or(0.0, |c| w.weight(n.degree()) * c.value.norm())
}

/// `j0^{(2−|n|)τ} sup_j |∂_{v_j} H(n)|`.
pub fn lipschitz_norm(h: &FormalHamiltonian, w: &TameWindow, n: &Monomial) -> f64 {
    h.get(n).map_or(0.0, |c| w.weight(n.degree()) * c.max_derivative())
}

pub fn triple_norm(h: &FormalHamiltonian, w: &TameWindow, n: &Monomial) -> f64 {
    h.get(n).map_or(0.0, |c| triple_norm_of(n, c, w))
}

pub fn triple_norm_of(n: &Monomial, c: &Coefficient, w: &TameWindow) -> f64 {
    w.weight(n.degree()) * (c.value.norm() + c.max_derivative())
}

/// `sup_n |||H(n)|||`.
pub fn triple_norm_sup(h: &FormalHamiltonian, w: &TameWindow) -> f64 {
    h.iter().map(|(n, c)| triple_norm_of(n, c, w)).fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_complex::Complex64;

    #[test]
    fn window_validation() {
        assert!(TameWindow::new(0.0, 10).is_err());
        assert!(TameWindow::new(0.01, 10).is_err());
        assert!(TameWindow::new(0.005, 0).is_err());
        let w = TameWindow::new(0.005, 10_000).unwrap();
        assert!(w.is_production());
        assert!(w.in_window(-10_003, 2.1));
        assert!(!w.in_window(9_996, 3.0));
    }

    #[test]
    fn norms_on_single_terms() {
        let w = TameWindow::new(0.005, 10_000).unwrap();
        let mut h = FormalHamiltonian::new();
        let quad = Monomial::action(3);
        h.insert(
            quad.clone(),
            Coefficient::with_derivatives(Complex64::new(0.7, 0.0), [(3, Complex64::new(1.0, 0.0))]),
        );
        assert_eq!(tame_norm(&h, &w, &quad), 0.7);
        assert_eq!(lipschitz_norm(&h, &w, &quad), 1.0);
        assert_eq!(triple_norm(&h, &w, &quad), 1.7);
        let quart = Monomial::single(0, 2, 2);
        let eps = 0.01;
        h.insert(quart.clone(), Coefficient::real(eps / 4.0));
        let want = eps / 4.0 * 10f64.powf(-0.04);
        assert!((tame_norm(&h, &w, &quart) - want).abs() < 1e-17);
        assert_eq!(lipschitz_norm(&h, &w, &quart), 0.0);
        assert_eq!(triple_norm(&h, &w, &quart), tame_norm(&h, &w, &quart));
        assert_eq!(tame_norm(&h, &w, &Monomial::action(99)), 0.0);
        assert_eq!(triple_norm_sup(&h, &w), 1.7);
    }
}
