use nalgebra::{Complex, DMatrix};
use twofloat::TwoFloat;

use crate::error::{Error, Result, Violation};
use crate::fock::{Element, ModeLayout, ModeTransform, Polarization, Temporal};

/// Symplectic-condition tolerance for element matrices.
pub const SYMPLECTIC_TOL: f64 = 1e-12;

/// Tolerance on the smallest eigenvalue of `σ + iΩ/2`.
pub const PHYSICALITY_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq)]
pub enum Operation {
    /// Passive element of the interferometer.
    Linear(Element),
    /// Pure loss with transmission `eta` on one mode.
    Loss { mode: usize, eta: f64 },
}

/// Zero-mean Gaussian state in `xxpp` ordering with vacuum covariance `I/2`.
///
/// The excess `A = σ − I/2` is stored instead of `σ`: every detection
/// quantity is a function of `I + A_T`, and the excess stays accurate at
/// small brightness where `σ` would be dominated by the vacuum part.
/// Entries are kept in double-double precision. Coincidence probabilities
/// cancel down to `O(μ^{N/2})` while single entries are `O(μ)`, so
/// per-entry `f64` rounding would set a noise floor near `1e-16 μ`.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianState {
    layout: ModeLayout,
    excess: DMatrix<TwoFloat>,
}

fn dd(x: f64) -> TwoFloat {
    TwoFloat::from(x)
}

impl GaussianState {
    pub fn vacuum(layout: ModeLayout) -> Self {
        let k = layout.len();
        Self { layout, excess: DMatrix::from_element(2 * k, 2 * k, dd(0.0)) }
    }

    /// Two-mode squeezed vacuum with mean photon number `mu` per mode,
    /// injected into the matched `H` and `V` arm modes.
    pub fn squeezed_source(layout: ModeLayout, mu: f64) -> Result<Self> {
        if !(mu >= 0.0 && mu.is_finite()) {
            return Err(Error::Invalid(vec![Violation::new("mu", format!("must be finite and non-negative, got {mu}"))]));
        }
        let mut st = Self::vacuum(layout);
        let k = st.layout.len();
        let h = st.layout.arm(Polarization::H, Temporal::Matched).expect("arm H");
        let v = st.layout.arm(Polarization::V, Temporal::Matched).expect("arm V");
        let c = (dd(mu) * (dd(mu) + 1.0)).sqrt();
        let a = &mut st.excess;
        for q in [h, v] {
            a[(q, q)] = dd(mu);
            a[(q + k, q + k)] = dd(mu);
        }
        a[(h, v)] = c;
        a[(v, h)] = c;
        a[(h + k, v + k)] = -c;
        a[(v + k, h + k)] = -c;
        Ok(st)
    }

    pub fn layout(&self) -> &ModeLayout {
        &self.layout
    }

    /// Excess covariance in double-double precision.
    pub fn excess_dd(&self) -> &DMatrix<TwoFloat> {
        &self.excess
    }

    /// Excess covariance rounded to `f64`.
    pub fn excess(&self) -> DMatrix<f64> {
        self.excess.map(|x| x.hi() + x.lo())
    }

    pub fn covariance(&self) -> DMatrix<f64> {
        let n = self.excess.nrows();
        self.excess() + DMatrix::identity(n, n) * 0.5
    }

    /// Mean photon number of one mode: `(σ_xx + σ_pp − 1)/2`.
    pub fn mean_photons(&self, mode: usize) -> f64 {
        let k = self.layout.len();
        let n = (self.excess[(mode, mode)] + self.excess[(mode + k, mode + k)]) * 0.5;
        n.hi() + n.lo()
    }

    fn omega(k: usize) -> DMatrix<f64> {
        let mut w = DMatrix::zeros(2 * k, 2 * k);
        for i in 0..k {
            w[(i, i + k)] = 1.0;
            w[(i + k, i)] = -1.0;
        }
        w
    }

    /// Smallest eigenvalue of the Hermitian matrix `σ + iΩ/2`; physical
    /// states have it non-negative.
    pub fn uncertainty_margin(&self) -> f64 {
        let k = self.layout.len();
        let sigma = self.covariance();
        let w = Self::omega(k);
        let h = DMatrix::from_fn(2 * k, 2 * k, |r, c| Complex::new(sigma[(r, c)], 0.5 * w[(r, c)]));
        h.symmetric_eigenvalues().iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn check_physical(&self) -> Result<()> {
        let margin = self.uncertainty_margin();
        if margin < -PHYSICALITY_TOL {
            return Err(Error::InvalidCovariance { row: 0, pivot: margin });
        }
        Ok(())
    }

    /// Symplectic eigenvalues in ascending order; all equal `1/2` for a pure state.
    pub fn symplectic_eigenvalues(&self) -> Vec<f64> {
        let k = self.layout.len();
        let m = Self::omega(k) * self.covariance();
        let mut nus: Vec<f64> = m.complex_eigenvalues().iter().map(|z| z.im.abs()).collect();
        nus.sort_by(f64::total_cmp);
        nus.chunks(2).map(|p| 0.5 * (p[0] + p[1])).collect()
    }

    /// `det(2σ)`; one for pure states.
    pub fn purity(&self) -> f64 {
        1.0 / (self.covariance() * 2.0).determinant().sqrt()
    }

    pub fn apply(&mut self, op: &Operation) -> Result<()> {
        match op {
            Operation::Linear(element) => {
                for t in element.transforms(&self.layout)? {
                    self.apply_transform(&t, element)?;
                }
                Ok(())
            }
            Operation::Loss { mode, eta } => {
                if !(0.0..=1.0).contains(eta) {
                    return Err(Error::Invalid(vec![Violation::new("eta", format!("efficiency out of range [0, 1]: {eta}"))]));
                }
                let k = self.layout.len();
                let s = dd(*eta).sqrt();
                for q in [*mode, mode + k] {
                    self.excess.row_mut(q).iter_mut().for_each(|x| *x *= s);
                    self.excess.column_mut(q).iter_mut().for_each(|x| *x *= s);
                }
                Ok(())
            }
        }
    }

    /// Local symplectic update `A → S A Sᵀ` on the rows and columns touched
    /// by the transform.
    fn apply_transform(&mut self, t: &ModeTransform, element: &Element) -> Result<()> {
        let k = self.layout.len();
        let l = t.modes.len();
        let u = &t.matrix;
        let s = DMatrix::from_fn(2 * l, 2 * l, |r, c| {
            let (rr, cc) = (r % l, c % l);
            match (r < l, c < l) {
                (true, true) | (false, false) => u[(rr, cc)].re,
                (true, false) => -u[(rr, cc)].im,
                (false, true) => u[(rr, cc)].im,
            }
        });
        let w = Self::omega(l);
        let deviation = (&s * &w * s.transpose() - &w).amax();
        if deviation > SYMPLECTIC_TOL {
            return Err(Error::NonSymplectic { element: element.to_string(), deviation });
        }
        let idx: Vec<usize> = t.modes.iter().copied().chain(t.modes.iter().map(|m| m + k)).collect();
        let n = self.excess.nrows();
        let sdd = s.map(dd);
        let mut rows = DMatrix::from_element(2 * l, n, dd(0.0));
        for (a, &ia) in idx.iter().enumerate() {
            rows.row_mut(a).copy_from(&self.excess.row(ia));
        }
        let rows = &sdd * rows;
        for (a, &ia) in idx.iter().enumerate() {
            self.excess.row_mut(ia).copy_from(&rows.row(a));
        }
        let mut cols = DMatrix::from_element(n, 2 * l, dd(0.0));
        for (a, &ia) in idx.iter().enumerate() {
            cols.column_mut(a).copy_from(&self.excess.column(ia));
        }
        let cols = cols * sdd.transpose();
        for (a, &ia) in idx.iter().enumerate() {
            self.excess.column_mut(ia).copy_from(&cols.column(a));
        }
        Ok(())
    }
}
