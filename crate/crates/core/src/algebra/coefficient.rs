use num_complex::Complex64;
use smallvec::SmallVec;

/// A complex coefficient together with its sparse gradient with respect to
/// the on-site potential values `v_j` of the original lattice.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Coefficient {
    pub value: Complex64,
    derivatives: SmallVec<[(i32, Complex64); 2]>,
}

impl Coefficient {
    pub fn new(value: Complex64) -> Self {
        Self {
            value,
            derivatives: SmallVec::new(),
        }
    }

    pub fn real(value: f64) -> Self {
        Self::new(Complex64::new(value, 0.0))
    }

    /// Builds a coefficient from `(site, ∂_{v_site})` pairs; repeated sites are
    /// summed and zero entries dropped.
    pub fn with_derivatives<I: IntoIterator<Item = (i32, Complex64)>>(value: Complex64, derivatives: I) -> Self {
        let mut c = Self::new(value);
        for (j, d) in derivatives {
            c.add_derivative(j, d);
        }
        c
    }

    pub fn derivative(&self, site: i32) -> Complex64 {
        self.derivatives
            .binary_search_by_key(&site, |e| e.0)
            .map(|i| self.derivatives[i].1)
            .unwrap_or_default()
    }

    /// Nonzero `(site, ∂_{v_site})` entries, sorted by site.
    pub fn derivatives(&self) -> &[(i32, Complex64)] {
        &self.derivatives
    }

    pub fn add_derivative(&mut self, site: i32, d: Complex64) {
        match self.derivatives.binary_search_by_key(&site, |e| e.0) {
            Ok(i) => {
                self.derivatives[i].1 += d;
                if self.derivatives[i].1 == Complex64::default() {
                    self.derivatives.remove(i);
                }
            }
            Err(i) => {
                if d != Complex64::default() {
                    self.derivatives.insert(i, (site, d));
                }
            }
        }
    }

    /// `sup_j |∂_{v_j}|`.
    pub fn max_derivative(&self) -> f64 {
        self.derivatives.iter().map(|(_, d)| d.norm()).fold(0.0, f64::max)
    }

    /// Largest of `|value|` and the derivative magnitudes.
    pub fn magnitude(&self) -> f64 {
        self.value.norm().max(self.max_derivative())
    }

    pub fn is_zero(&self) -> bool {
        self.value == Complex64::default() && self.derivatives.is_empty()
    }

    pub fn scaled(&self, a: Complex64) -> Self {
        let mut out = Self::new(self.value * a);
        for &(j, d) in &self.derivatives {
            out.add_derivative(j, d * a);
        }
        out
    }

    pub fn conj(&self) -> Self {
        Self {
            value: self.value.conj(),
            derivatives: self.derivatives.iter().map(|&(j, d)| (j, d.conj())).collect(),
        }
    }

    pub fn add_assign(&mut self, other: &Coefficient) {
        self.value += other.value;
        for &(j, d) in &other.derivatives {
            self.add_derivative(j, d);
        }
    }
}
