use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;

use super::{check_window, Boundary};
use crate::error::{Error, Result};
use crate::lattice::LatticeState;
use crate::potential::Potential;

/// Largest window radius accepted by the dense eigensolver.
pub const DENSE_RADIUS_LIMIT: usize = 2048;

/// `exp(-i t H₀)` for `(H₀ q)_j = ε(q_{j-1} + q_{j+1}) + v_j q_j`, from one
/// dense symmetric eigendecomposition reused for every `t`.
pub struct LinearPropagator {
    radius: usize,
    eigenvalues: DVector<f64>,
    eigenvectors: DMatrix<f64>,
}

impl LinearPropagator {
    pub fn new(pot: &Potential, epsilon: f64, boundary: Boundary) -> Result<Self> {
        let radius = pot.radius();
        if radius > DENSE_RADIUS_LIMIT {
            return Err(Error::WindowTooLarge {
                radius,
                limit: DENSE_RADIUS_LIMIT,
            });
        }
        let n = 2 * radius + 1;
        let mut h = DMatrix::<f64>::zeros(n, n);
        for (i, &v) in pot.values().iter().enumerate() {
            h[(i, i)] = v;
            if i + 1 < n {
                h[(i, i + 1)] = epsilon;
                h[(i + 1, i)] = epsilon;
            }
        }
        if boundary == Boundary::Periodic && n > 2 {
            h[(0, n - 1)] += epsilon;
            h[(n - 1, 0)] += epsilon;
        }
        let eig = SymmetricEigen::new(h);
        Ok(Self {
            radius,
            eigenvalues: eig.eigenvalues,
            eigenvectors: eig.eigenvectors,
        })
    }

    pub fn eigenvalues(&self) -> &[f64] {
        self.eigenvalues.as_slice()
    }

    /// Applies `exp(-i t H₀)` to `q0`.
    pub fn apply(&self, q0: &LatticeState, t: f64) -> Result<LatticeState> {
        if q0.radius() != self.radius {
            return Err(Error::WindowMismatch {
                state: q0.radius(),
                potential: self.radius,
            });
        }
        let u = &self.eigenvectors;
        let re = DVector::from_iterator(q0.len(), q0.amplitudes().iter().map(|z| z.re));
        let im = DVector::from_iterator(q0.len(), q0.amplitudes().iter().map(|z| z.im));
        let cr = u.tr_mul(&re);
        let ci = u.tr_mul(&im);
        let mut rr = DVector::zeros(q0.len());
        let mut ri = DVector::zeros(q0.len());
        for k in 0..q0.len() {
            let z = Complex64::new(cr[k], ci[k]) * Complex64::from_polar(1.0, -self.eigenvalues[k] * t);
            rr[k] = z.re;
            ri[k] = z.im;
        }
        let out_re = u * rr;
        let out_im = u * ri;
        let amps = (0..q0.len()).map(|i| Complex64::new(out_re[i], out_im[i])).collect();
        let mut out = LatticeState::from_amplitudes(self.radius, amps)?;
        out.set_time(q0.time() + t);
        Ok(out)
    }
}

/// One-shot dense solve of the linear model (Dirichlet window).
pub fn exact_linear_solution(q0: &LatticeState, pot: &Potential, epsilon: f64, t: f64) -> Result<LatticeState> {
    check_window(q0, pot)?;
    LinearPropagator::new(pot, epsilon, Boundary::Dirichlet)?.apply(q0, t)
}
