//! Threshold-click coincidence probabilities by inclusion–exclusion over
//! vacuum projections.
//!
//! For detectors with dark-count probability `dc` the all-click probability is
//!
//! `P = dc^N + Σ_{T≠∅} (−1)^{|T|} (1−dc)^{|T|} y_T`,  `y_T = det(I + A_T)^{−1/2} − 1`,
//!
//! where `A_T` is the excess covariance restricted to the modes of subset `T`.
//! At low brightness the terms cancel over many orders of magnitude, so the
//! pivots, determinants and sums are carried in double-double arithmetic and
//! `y_T` is formed without `exp`/`ln`: with `δ = det − 1` and `s = √(1+δ)`,
//! `y_T = −δ / (s (1+s))`.

use nalgebra::DMatrix;
use twofloat::TwoFloat;

use super::state::{GaussianState, Operation};
use crate::error::{Error, Result, Violation};
use crate::fock::ModeLayout;
use crate::types::DetectionScheme;

type Dd = TwoFloat;

/// Pivots of `I + A_T` at or below this are treated as a broken covariance.
const MIN_PIVOT: f64 = 1e-300;

/// Bonferroni bracketing slack: absolute plus relative to `P`.
const BONFERRONI_ABS: f64 = 1e-18;
const BONFERRONI_REL: f64 = 1e-12;

fn dd(x: f64) -> Dd {
    Dd::from(x)
}

/// Double-double quotient by three-term long division. `TwoFloat`'s own
/// division leaves a relative residual near `1e-17`, which is above the
/// noise the inclusion–exclusion sum can tolerate.
fn div(a: Dd, b: Dd) -> Dd {
    let q1 = a.hi() / b.hi();
    let r = a - b * q1;
    let q2 = r.hi() / b.hi();
    let r = r - b * q2;
    let q3 = r.hi() / b.hi();
    Dd::new_add(q1, q2) + q3
}

/// LDLᵀ factorization of `I + A_T`, grown and shrunk one row at a time.
///
/// Stores `d_j = D_j − 1` and the running `det − 1`, which stay accurate
/// when `A_T` is tiny.
struct IncrementalLdl<'a> {
    a: &'a DMatrix<Dd>,
    rows: Vec<usize>,
    /// `L[j][k] · D_k` for `k < j`.
    ld: Vec<Vec<Dd>>,
    pivot: Vec<Dd>,
    det_m1: Vec<Dd>,
}

impl<'a> IncrementalLdl<'a> {
    fn new(a: &'a DMatrix<Dd>) -> Self {
        Self { a, rows: Vec::new(), ld: Vec::new(), pivot: Vec::new(), det_m1: Vec::new() }
    }

    fn len(&self) -> usize {
        self.rows.len()
    }

    fn push(&mut self, idx: usize) -> Result<()> {
        let j = self.rows.len();
        let mut lj = Vec::with_capacity(j);
        let mut ldj = Vec::with_capacity(j);
        for k in 0..j {
            let mut acc = self.a[(idx, self.rows[k])];
            for p in 0..k {
                acc -= lj[p] * self.ld[k][p];
            }
            let big_d = self.pivot[k] + 1.0;
            let l = div(acc, big_d);
            lj.push(l);
            ldj.push(acc);
        }
        let mut d = self.a[(idx, idx)];
        for k in 0..j {
            d -= lj[k] * ldj[k];
        }
        let big_d = d + 1.0;
        if !(big_d.hi() > MIN_PIVOT) {
            return Err(Error::InvalidCovariance { row: idx, pivot: big_d.hi() });
        }
        let prev = self.det_m1.last().copied().unwrap_or_else(|| dd(0.0));
        self.det_m1.push(prev + d + prev * d);
        self.rows.push(idx);
        self.ld.push(ldj);
        self.pivot.push(d);
        Ok(())
    }

    fn truncate(&mut self, len: usize) {
        self.rows.truncate(len);
        self.ld.truncate(len);
        self.pivot.truncate(len);
        self.det_m1.truncate(len);
    }

    /// `det(I + A_T)^{−1/2} − 1` for the current rows.
    fn vacuum_excess(&self) -> Dd {
        let delta = self.det_m1.last().copied().unwrap_or_else(|| dd(0.0));
        let s = (delta + 1.0).sqrt();
        -div(delta, s * (s + 1.0))
    }
}

/// Threshold detectors with a common efficiency and dark-count probability.
#[derive(Debug, Clone, PartialEq)]
pub struct DetectorBank {
    /// Modes seen by each detector.
    pub detectors: Vec<Vec<usize>>,
    pub eta: f64,
    pub dc: f64,
}

impl DetectorBank {
    /// Detectors on the splitter-tree ports of `scheme`.
    pub fn for_scheme(layout: &ModeLayout, scheme: DetectionScheme, eta: f64, dc: f64) -> Result<Self> {
        let mut v = Vec::new();
        if !(0.0..=1.0).contains(&eta) {
            v.push(Violation::new("eta", format!("efficiency out of range [0, 1]: {eta}")));
        }
        if !(0.0..1.0).contains(&dc) {
            v.push(Violation::new("dc", format!("dark-count probability out of range [0, 1): {dc}")));
        }
        if !v.is_empty() {
            return Err(Error::Invalid(v));
        }
        let ports = layout.detectors(scheme).ok_or_else(|| Error::UnsupportedScheme {
            scheme,
            reason: "layout has fewer output ports than detectors".into(),
        })?;
        let detectors = ports.iter().map(|&(c, p)| layout.detector_modes(c, p)).collect();
        Ok(Self { detectors, eta, dc })
    }

    pub fn len(&self) -> usize {
        self.detectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.detectors.is_empty()
    }

    /// Applies the detector efficiency as loss on every detected mode.
    pub fn apply_losses(&self, state: &mut GaussianState) -> Result<()> {
        for modes in &self.detectors {
            for &mode in modes {
                state.apply(&Operation::Loss { mode, eta: self.eta })?;
            }
        }
        Ok(())
    }
}

/// Row indices (x then p quadratures) of a detector in the excess matrix.
fn detector_rows(state: &GaussianState, modes: &[usize]) -> Vec<usize> {
    let k = state.layout().len();
    modes.iter().copied().chain(modes.iter().map(|m| m + k)).collect()
}

fn push_detector(ldl: &mut IncrementalLdl<'_>, rows: &[usize]) -> Result<()> {
    rows.iter().try_for_each(|&r| ldl.push(r))
}

/// Per-order sums of `y_T`, visiting subsets depth-first so each one
/// extends its parent's factorization by one detector block.
fn subset_sums(state: &GaussianState, bank: &DetectorBank, sums: &mut [Dd]) -> Result<()> {
    let rows: Vec<Vec<usize>> = bank.detectors.iter().map(|d| detector_rows(state, d)).collect();
    let mut ldl = IncrementalLdl::new(state.excess_dd());
    fn visit(start: usize, order: usize, rows: &[Vec<usize>], ldl: &mut IncrementalLdl<'_>, sums: &mut [Dd]) -> Result<()> {
        for d in start..rows.len() {
            let base = ldl.len();
            push_detector(ldl, &rows[d])?;
            sums[order + 1] += ldl.vacuum_excess();
            visit(d + 1, order + 1, rows, ldl, sums)?;
            ldl.truncate(base);
        }
        Ok(())
    }
    visit(0, 0, &rows, &mut ldl, sums)
}

fn binomial(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64).round()
}

/// All-click coincidence probability of `bank` on `state`.
///
/// Detector losses must already be applied (see [`DetectorBank::apply_losses`]).
/// Partial sums of the inclusion–exclusion series are checked against the
/// Bonferroni inequalities.
pub fn click_coincidence(state: &GaussianState, bank: &DetectorBank) -> Result<f64> {
    let n = bank.len();
    let mut sums = vec![dd(0.0); n + 1];
    subset_sums(state, bank, &mut sums)?;
    let q = dd(1.0) - bank.dc;
    let mut total = dd(bank.dc).powi(n as i32);
    let mut qs = dd(1.0);
    let mut sign = 1.0;
    for s in sums.iter().skip(1) {
        qs *= q;
        sign = -sign;
        total += qs * *s * sign;
    }

    // Bonferroni: the series through an odd order bounds P from below,
    // through an even order from above.
    let p = total.hi() + total.lo();
    let tol = BONFERRONI_ABS + BONFERRONI_REL * p.abs();
    let mut partial = dd(0.0);
    let mut qs = dd(1.0);
    let mut sign = 1.0;
    for (order, s) in sums.iter().enumerate() {
        let ones = dd(binomial(n, order)) + if order > 0 { *s } else { dd(0.0) };
        partial += qs * ones * sign;
        qs *= q;
        sign = -sign;
        let gap = (partial - total).hi();
        let ok = if order % 2 == 1 { gap <= tol } else { gap >= -tol };
        if !ok {
            return Err(Error::Bonferroni { order, partial: partial.hi(), total: p });
        }
    }

    if !(-tol..=1.0 + tol).contains(&p) {
        return Err(Error::ProbabilityRange { value: p, context: format!("{n}-detector coincidence") });
    }
    Ok(p.clamp(0.0, 1.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fock::{Polarization, Temporal, TemporalModes};

    fn thermal(layout: ModeLayout, mu: f64) -> GaussianState {
        let mut st = GaussianState::squeezed_source(layout, mu).unwrap();
        let v = st.layout().arm(Polarization::V, Temporal::Matched).unwrap();
        st.apply(&Operation::Loss { mode: v, eta: 0.0 }).unwrap();
        st
    }

    #[test]
    fn ldl_matches_direct_determinant() {
        let a = DMatrix::from_row_slice(3, 3, &[0.3, 0.1, -0.05, 0.1, 0.2, 0.02, -0.05, 0.02, 0.4]);
        let add = a.map(dd);
        let mut ldl = IncrementalLdl::new(&add);
        for r in 0..3 {
            ldl.push(r).unwrap();
        }
        let det = (DMatrix::identity(3, 3) + &a).determinant();
        let y = ldl.vacuum_excess();
        assert!((y.hi() - (det.powf(-0.5) - 1.0)).abs() < 1e-15);
        ldl.truncate(1);
        assert!((ldl.vacuum_excess().hi() - (1.3f64.powf(-0.5) - 1.0)).abs() < 1e-15);
    }

    #[test]
    fn long_division_is_double_double_accurate() {
        let mut worst = 0.0f64;
        for k in 1..200 {
            let x = k as f64 * 0.37;
            let a = Dd::new_add(x.sin(), 1e-17 * x.cos());
            let b = Dd::new_add(1.0 + 1e-5 * x, 1e-17 * x.sin());
            let r = div(a, b) * b - a;
            worst = worst.max((r.hi() / a.hi()).abs());
        }
        assert!(worst < 1e-30, "{worst:e}");
    }

    #[test]
    fn broken_covariance_reports_pivot() {
        let a = DMatrix::from_row_slice(2, 2, &[-1.5, 0.0, 0.0, 0.1]).map(dd);
        let mut ldl = IncrementalLdl::new(&a);
        assert!(matches!(ldl.push(0), Err(Error::InvalidCovariance { row: 0, .. })));
    }

    #[test]
    fn thermal_click_probability() {
        // Reduced mode of a squeezed pair is thermal: P(click) = 1 − 1/(n̄+1).
        let scheme = DetectionScheme::new(1, 0);
        let layout = ModeLayout::for_scheme(scheme, TemporalModes::Pair);
        let st = thermal(layout.clone(), 0.6);
        let h = layout.arm(Polarization::H, Temporal::Matched).unwrap();
        let bank = DetectorBank { detectors: vec![vec![h]], eta: 1.0, dc: 0.0 };
        let p = click_coincidence(&st, &bank).unwrap();
        assert!((p - (1.0 - 1.0 / 1.6)).abs() < 1e-15);
    }

    #[test]
    fn dark_counts_alone_at_zero_brightness() {
        let scheme = DetectionScheme::new(2, 2);
        let layout = ModeLayout::for_scheme(scheme, TemporalModes::Pair);
        let st = GaussianState::squeezed_source(layout.clone(), 0.0).unwrap();
        let bank = DetectorBank::for_scheme(&layout, scheme, 0.2, 1e-3).unwrap();
        let p = click_coincidence(&st, &bank).unwrap();
        assert!((p - 1e-12).abs() < 1e-26, "{p}");
    }

    #[test]
    fn bank_rejects_bad_detectors() {
        let scheme = DetectionScheme::new(1, 1);
        let layout = ModeLayout::for_scheme(scheme, TemporalModes::Pair);
        let err = DetectorBank::for_scheme(&layout, scheme, 1.5, 1.0).unwrap_err();
        assert!(matches!(err, Error::Invalid(v) if v.len() == 2));
    }
}
