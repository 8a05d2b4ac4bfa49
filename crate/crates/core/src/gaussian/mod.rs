//! Squeezed-vacuum source with all multi-pair contributions, detector loss
//! and dark counts.
//!
//! The source is a two-mode squeezed vacuum in the matched `H`/`V` arm
//! modes. The interferometer acts as a passive symplectic map on the
//! covariance; detector efficiency is pure loss on the detected modes and the
//! coincidence probability follows from vacuum projections (see [`detect`]).
//! The single-detector `1/0` scheme blocks the `V` partner before the
//! interferometer.

pub mod detect;
mod state;

pub use detect::{click_coincidence, DetectorBank};
pub use state::{GaussianState, Operation, PHYSICALITY_TOL, SYMPLECTIC_TOL};

use rayon::prelude::*;

use crate::analytic::indistinguishability;
use crate::error::Result;
use crate::fock::{InterferometerCircuit, Polarization, Temporal, TemporalModes};
use crate::types::{DetectionScheme, PatternScan, ScanMode, ScanPoint, Validated, DEFAULT_MAX_PHOTONS};

/// Source brightness, detector split and detector parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MultipairModel {
    pub scheme: DetectionScheme,
    /// Mean photon number per mode of the squeezed pair.
    pub mu: f64,
    pub eta: f64,
    pub dc: f64,
}

impl MultipairModel {
    pub fn new(scheme: DetectionScheme, mu: f64, eta: f64, dc: f64) -> Self {
        Self { scheme, mu, eta, dc }
    }

    /// Output state just before detection, detector losses included.
    pub fn state(&self, i: f64, phi: f64, temporal: TemporalModes) -> Result<(GaussianState, DetectorBank)> {
        self.scheme.check(DEFAULT_MAX_PHOTONS)?;
        let circuit = InterferometerCircuit::noon(self.scheme, i, phi, temporal);
        let bank = DetectorBank::for_scheme(&circuit.layout, self.scheme, self.eta, self.dc)?;
        let mut st = GaussianState::squeezed_source(circuit.layout.clone(), self.mu)?;
        if self.scheme.photons() == 1 {
            let v = circuit.layout.arm(Polarization::V, Temporal::Matched).expect("arm V");
            st.apply(&Operation::Loss { mode: v, eta: 0.0 })?;
        }
        for e in circuit.elements {
            st.apply(&Operation::Linear(e))?;
        }
        bank.apply_losses(&mut st)?;
        Ok((st, bank))
    }

    /// All-click probability at indistinguishability `i` and phase `phi`.
    pub fn probability(&self, i: f64, phi: f64, temporal: TemporalModes) -> Result<f64> {
        let (st, bank) = self.state(i, phi, temporal)?;
        click_coincidence(&st, &bank)
    }

    /// Probability averaged over a uniform phase grid of `samples` points in
    /// `[0, π)` at zero delay; removes the fringe for scaling studies.
    pub fn phase_averaged(&self, samples: usize) -> Result<f64> {
        let total = (0..samples)
            .map(|k| self.probability(1.0, k as f64 * std::f64::consts::PI / samples as f64, TemporalModes::Single))
            .sum::<Result<f64>>()?;
        Ok(total / samples as f64)
    }
}

/// Gaussian-engine scan. Fine scans sit at zero delay and use the
/// single-temporal-mode layout; coarse scans carry the orthogonal mode.
pub fn multipair_pattern(bundle: &Validated) -> Result<PatternScan> {
    let Validated { spec, scheme, scan } = *bundle;
    let model = MultipairModel::new(scheme, spec.mu, scan.eta, scan.dc);
    let temporal = match scan.mode {
        ScanMode::CoarsePath => TemporalModes::Pair,
        ScanMode::FinePhase => TemporalModes::Single,
    };
    let (probe, _) = model.state(1.0, 0.0, temporal)?;
    probe.check_physical()?;
    let points = scan
        .grid()
        .par_iter()
        .map(|&x| {
            let (tau, phi) = scan.delay_and_phase(x, spec.omega0);
            let i = match scan.mode {
                ScanMode::CoarsePath => indistinguishability(tau, spec.delta_omega),
                ScanMode::FinePhase => 1.0,
            };
            let p = model.probability(i, phi, temporal)?;
            Ok(ScanPoint { delay: scan.recorded_delay(x), probability: p, counts: None })
        })
        .collect::<Result<Vec<_>>>()?;
    PatternScan::new(scheme, scan.mode.delay_unit(), points)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_layout_agrees_at_zero_delay() {
        for scheme in DetectionScheme::reference_set() {
            let m = MultipairModel::new(scheme, 0.02, 0.2, 1e-4);
            for phi in [0.0, 0.3, 1.2] {
                let a = m.probability(1.0, phi, TemporalModes::Single).unwrap();
                let b = m.probability(1.0, phi, TemporalModes::Pair).unwrap();
                assert!((a - b).abs() <= 1e-10 * a, "{scheme}: {a} vs {b}");
            }
        }
    }

    #[test]
    fn dark_count_floor_at_zero_brightness() {
        for scheme in DetectionScheme::reference_set() {
            let p = MultipairModel::new(scheme, 0.0, 0.2, 1e-4).probability(1.0, 0.0, TemporalModes::Single).unwrap();
            let want = 1e-4f64.powi(scheme.photons() as i32);
            assert!((p - want).abs() <= 1e-12 * want, "{scheme}");
        }
    }

    #[test]
    fn efficiency_and_dark_counts_raise_rates() {
        let scheme = DetectionScheme::new(2, 2);
        let p = |eta, dc| MultipairModel::new(scheme, 0.01, eta, dc).phase_averaged(8).unwrap();
        assert!(p(0.2, 1e-4) < p(0.4, 1e-4));
        assert!(p(0.4, 1e-4) < p(0.8, 1e-4));
        assert!(p(0.2, 1e-5) < p(0.2, 1e-4));
    }

    #[test]
    fn low_brightness_approaches_fock_oracle() {
        let scheme = DetectionScheme::new(3, 1);
        let mu = 1e-4;
        let m = MultipairModel::new(scheme, mu, 1.0, 0.0);
        let reg = crate::fock::registration_efficiency(scheme).unwrap();
        for phi in [0.2, 0.9] {
            let p = m.probability(0.6, phi, TemporalModes::Pair).unwrap();
            let want = crate::fock::oracle_probability(scheme, 0.6, phi).unwrap() * reg * mu * mu;
            assert!((p / want - 1.0).abs() < 1e-2, "{p} vs {want}");
        }
    }
}
