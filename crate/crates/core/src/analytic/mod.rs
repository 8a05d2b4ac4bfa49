//! Closed-form detection probabilities and the indistinguishability envelope.

mod harmonic;
mod reconstruct;

use std::sync::Arc;

use rayon::prelude::*;

pub use harmonic::{FormOrigin, HarmonicForm, HarmonicTerm};
pub use reconstruct::{fit_form, six_photon_form, Ansatz, FIT_TOLERANCE};

use crate::error::{Error, Result};
use crate::types::{DetectionScheme, PatternScan, ScanMode, ScanPoint, Validated};

const FWHM_GAUSS: f64 = 2.354_820_045_030_949_3; // 2·√(2 ln 2)

/// Squared overlap of a wavepacket with its copy delayed by `tau`:
/// `I(τ) = exp[−(Δω τ)²/2]`, normalized so that `I(0) = 1`.
pub fn indistinguishability(tau: f64, delta_omega: f64) -> f64 {
    (-0.5 * (delta_omega * tau).powi(2)).exp()
}

/// Δω for which the `I(τ)` envelope has the given FWHM in seconds.
pub fn delta_omega_for_two_photon_fwhm(fwhm: f64) -> f64 {
    FWHM_GAUSS / fwhm
}

/// FWHM (s) of the `I(τ)` envelope followed by two-photon fringes.
pub fn two_photon_fwhm(delta_omega: f64) -> f64 {
    FWHM_GAUSS / delta_omega
}

/// FWHM (s) of the `√I(τ)` envelope followed by single-photon fringes.
pub fn one_photon_fwhm(delta_omega: f64) -> f64 {
    std::f64::consts::SQRT_2 * FWHM_GAUSS / delta_omega
}

/// Closed-form probabilities for `m + n ≤ 4`. Mirrored splits reuse the
/// expression of their mirror image; for a single photon the mirror flips
/// the sign of the fringe.
pub fn closed_form(scheme: DetectionScheme, i: f64, phi: f64) -> Result<f64> {
    let c = |k: f64| (k * phi).cos();
    let p = match (scheme.m, scheme.n) {
        (1, 0) => 0.5 * (1.0 + i.sqrt() * c(1.0)),
        (0, 1) => 0.5 * (1.0 - i.sqrt() * c(1.0)),
        (1, 1) => 0.5 * (1.0 + i * c(2.0)),
        (2, 0) | (0, 2) => 0.25 * (1.0 - i * c(2.0)),
        (2, 2) => (12.0 - 4.0 * i + 3.0 * i * i + 12.0 * i * c(2.0) + 9.0 * i * i * c(4.0)) / 32.0,
        (3, 1) | (1, 3) => (4.0 - i * i - 3.0 * i * i * c(4.0)) / 16.0,
        (4, 0) | (0, 4) => (4.0 + 4.0 * i + i * i - 12.0 * i * c(2.0) + 3.0 * i * i * c(4.0)) / 64.0,
        _ => {
            return Err(Error::UnsupportedScheme {
                scheme,
                reason: "closed forms cover m + n <= 4".into(),
            })
        }
    };
    Ok(p)
}

/// Closed form of `m + n ≤ 4` schemes as a [`HarmonicForm`].
pub fn closed_harmonic_form(scheme: DetectionScheme) -> Result<HarmonicForm> {
    use HarmonicTerm as T;
    let half_amp = |sign: f64| T { order: 1, amplitude_poly: vec![0.0, sign * 0.5] };
    let terms = match (scheme.m, scheme.n) {
        (1, 0) => vec![T::in_i(0, &[0.5]), half_amp(1.0)],
        (0, 1) => vec![T::in_i(0, &[0.5]), half_amp(-1.0)],
        (1, 1) => vec![T::in_i(0, &[0.5]), T::in_i(2, &[0.0, 0.5])],
        (2, 0) | (0, 2) => vec![T::in_i(0, &[0.25]), T::in_i(2, &[0.0, -0.25])],
        (2, 2) => vec![
            T::in_i(0, &[12.0 / 32.0, -4.0 / 32.0, 3.0 / 32.0]),
            T::in_i(2, &[0.0, 12.0 / 32.0]),
            T::in_i(4, &[0.0, 0.0, 9.0 / 32.0]),
        ],
        (3, 1) | (1, 3) => vec![T::in_i(0, &[0.25, 0.0, -1.0 / 16.0]), T::in_i(4, &[0.0, 0.0, -3.0 / 16.0])],
        (4, 0) | (0, 4) => vec![
            T::in_i(0, &[4.0 / 64.0, 4.0 / 64.0, 1.0 / 64.0]),
            T::in_i(2, &[0.0, -12.0 / 64.0]),
            T::in_i(4, &[0.0, 0.0, 3.0 / 64.0]),
        ],
        _ => {
            return Err(Error::UnsupportedScheme {
                scheme,
                reason: "closed forms cover m + n <= 4".into(),
            })
        }
    };
    Ok(HarmonicForm::new(scheme, FormOrigin::ClosedForm, terms))
}

/// Harmonic form for any supported scheme: transcribed closed forms up to
/// four photons, oracle reconstructions for six.
pub fn form(scheme: DetectionScheme) -> Result<Arc<HarmonicForm>> {
    scheme.check(crate::types::DEFAULT_MAX_PHOTONS)?;
    if scheme.photons() <= 4 {
        closed_harmonic_form(scheme).map(Arc::new)
    } else {
        six_photon_form(scheme)
    }
}

/// Analytic probability for any supported scheme.
pub fn probability(scheme: DetectionScheme, i: f64, phi: f64) -> Result<f64> {
    if scheme.photons() <= 4 {
        closed_form(scheme, i, phi)
    } else {
        Ok(form(scheme)?.evaluate(i, phi))
    }
}

/// Evaluates the analytic model over the scan grid.
///
/// Coarse scans use `I = I(τ)` and `φ = ω₀τ`. Fine scans sweep φ at zero
/// delay with `I = 1`, the same convention as the Gaussian fast path.
pub fn pattern(bundle: &Validated) -> Result<PatternScan> {
    let Validated { spec, scheme, scan } = *bundle;
    scheme.check(crate::types::DEFAULT_MAX_PHOTONS)?;
    let form = if scheme.photons() > 4 { Some(form(scheme)?) } else { None };
    let points = scan
        .grid()
        .par_iter()
        .map(|&x| {
            let (tau, phi) = scan.delay_and_phase(x, spec.omega0);
            let i = match scan.mode {
                ScanMode::CoarsePath => indistinguishability(tau, spec.delta_omega),
                ScanMode::FinePhase => 1.0,
            };
            let p = match &form {
                Some(f) => f.evaluate(i, phi),
                None => closed_form(scheme, i, phi)?,
            };
            Ok(ScanPoint { delay: scan.recorded_delay(x), probability: p.clamp(0.0, 1.0), counts: None })
        })
        .collect::<Result<Vec<_>>>()?;
    PatternScan::new(scheme, scan.mode.delay_unit(), points)
}

#[cfg(test)]
mod tests {
    use std::f64::consts::PI;

    use super::*;
    use crate::types::{validate, ScanConfig, SourceSpec};

    fn s(m: u32, n: u32) -> DetectionScheme {
        DetectionScheme::new(m, n)
    }

    #[test]
    fn envelope_values() {
        let dw = 1.33e12;
        assert_eq!(indistinguishability(0.0, dw), 1.0);
        let half = (2.0 * 2f64.ln()).sqrt() / dw;
        assert!((indistinguishability(half, dw) - 0.5).abs() < 1e-15);
        assert!((indistinguishability(-half, dw) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn calibration_from_two_photon_width() {
        let dw = delta_omega_for_two_photon_fwhm(1.77e-12);
        assert!((dw - 1.33e12).abs() / 1.33e12 < 2e-3, "{dw}");
        assert!((two_photon_fwhm(dw) - 1.77e-12).abs() < 1e-24);
        assert!((one_photon_fwhm(dw) / two_photon_fwhm(dw) - 2f64.sqrt()).abs() < 1e-14);
    }

    #[test]
    fn spot_values_at_full_overlap() {
        for (sch, want) in [(s(2, 0), 0.0), (s(1, 1), 1.0), (s(2, 2), 1.0), (s(3, 1), 0.0), (s(4, 0), 0.0)] {
            assert!((closed_form(sch, 1.0, 0.0).unwrap() - want).abs() < 1e-12, "{sch}");
        }
    }

    #[test]
    fn distinguishable_baselines() {
        for (sch, want) in [(s(1, 1), 0.5), (s(2, 0), 0.25), (s(2, 2), 0.375), (s(3, 1), 0.25), (s(4, 0), 0.0625)] {
            for phi in [0.0, 0.4, 2.0, 5.5] {
                assert!((closed_form(sch, 0.0, phi).unwrap() - want).abs() < 1e-12, "{sch}");
            }
        }
    }

    #[test]
    fn six_photon_closed_form_unsupported() {
        assert!(matches!(closed_form(s(3, 3), 1.0, 0.0), Err(Error::UnsupportedScheme { .. })));
    }

    #[test]
    fn two_photon_complementarity() {
        for i in [0.0, 0.2, 0.6, 1.0] {
            for k in 0..16 {
                let phi = k as f64 * PI / 7.0;
                let total = closed_form(s(1, 1), i, phi).unwrap() + 2.0 * closed_form(s(2, 0), i, phi).unwrap();
                assert!((total - 1.0).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn harmonic_forms_match_closed_forms() {
        for sch in [s(1, 0), s(0, 1), s(1, 1), s(2, 0), s(0, 2), s(2, 2), s(3, 1), s(1, 3), s(4, 0), s(0, 4)] {
            let f = closed_harmonic_form(sch).unwrap();
            for i in [0.0, 0.25, 0.5, 0.75, 1.0] {
                for k in 0..17 {
                    let phi = k as f64 * PI / 8.0;
                    let want = closed_form(sch, i, phi).unwrap();
                    assert!((f.evaluate(i, phi) - want).abs() < 1e-14, "{sch} I={i} phi={phi}");
                }
            }
        }
    }

    #[test]
    fn no_fringes_without_overlap() {
        for sch in [s(1, 0), s(1, 1), s(2, 2), s(3, 1), s(4, 0)] {
            let f = closed_harmonic_form(sch).unwrap();
            let (lo, hi) = f.extrema(0.0);
            assert!(hi - lo < 1e-15, "{sch}");
        }
    }

    #[test]
    fn single_photon_fringe_period() {
        let v = validate(SourceSpec::telecom(), s(1, 0), ScanConfig::fine_default()).unwrap();
        let scan = pattern(&v).unwrap();
        let p = scan.probabilities();
        let d = scan.delays();
        // Maxima at φ = 0, 2π, 4π.
        let peaks: Vec<f64> = (1..p.len() - 1).filter(|&k| p[k] > p[k - 1] && p[k] >= p[k + 1]).map(|k| d[k]).collect();
        assert_eq!(peaks.len(), 1);
        assert!((peaks[0] - 2.0 * PI).abs() < 0.07);
        assert!((p[0] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn two_photon_envelopes_coincide() {
        let spec = SourceSpec::telecom();
        let scan = ScanConfig::coarse_span(1e-3, 4001);
        let a = pattern(&validate(spec, s(1, 1), scan).unwrap()).unwrap();
        let b = pattern(&validate(spec, s(2, 0), scan).unwrap()).unwrap();
        // Both fringe amplitudes are I(τ)/2 and I(τ)/4 about their means:
        // scaled to unit baseline they trace the same envelope.
        for (pa, pb) in a.points().iter().zip(b.points()) {
            let ea = (pa.probability - 0.5) / 0.5;
            let eb = (0.25 - pb.probability) / 0.25;
            assert!((ea - eb).abs() < 1e-12);
        }
    }

    #[test]
    fn probabilities_bounded() {
        for sch in [s(1, 0), s(1, 1), s(2, 0), s(2, 2), s(3, 1), s(4, 0)] {
            for a in 0..=20 {
                let i = a as f64 / 20.0;
                for k in 0..=64 {
                    let p = closed_form(sch, i, k as f64 * PI / 16.0).unwrap();
                    assert!((-1e-15..=1.0 + 1e-15).contains(&p), "{sch} {i} {p}");
                }
            }
        }
    }
}
