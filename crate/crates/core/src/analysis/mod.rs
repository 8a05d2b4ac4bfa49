//! Envelope shape, coherence length/time and visibility of interference scans.

mod envelope;
mod spectrum;

pub use envelope::{
    baseline, classify_envelopes, envelopes, fwhm, require_contrast, EnvelopeOptions, Envelopes, Pchip,
    MIN_POINTS_PER_PERIOD,
};
pub use spectrum::{
    dominant_harmonic, fringe_frequency, fringe_harmonics, significant_harmonics, uniform_step, visibility, TrigFit,
    DEFAULT_MAX_HARMONIC, MIN_FRINGE_CYCLES,
};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result, Violation};
use crate::types::{DelayUnit, DetectionScheme, EnvelopeStats, PatternScan, Shape, SPEED_OF_LIGHT};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AnalysisOptions {
    /// Relative excursion difference still classified as symmetric.
    pub symmetric_tolerance: f64,
    /// Relative amplitude at which a harmonic counts as present.
    pub harmonic_presence: f64,
    /// Fraction of the scan (both ends together) averaged for the baseline.
    pub baseline_fraction: f64,
    /// Carrier angular frequency; enables the sampling check against the
    /// scheme's fastest harmonic.
    pub omega0: Option<f64>,
    /// Highest harmonic fitted to fine scans.
    pub max_harmonic: usize,
}

impl Default for AnalysisOptions {
    fn default() -> Self {
        Self {
            symmetric_tolerance: 0.15,
            harmonic_presence: 0.1,
            baseline_fraction: 0.10,
            omega0: None,
            max_harmonic: DEFAULT_MAX_HARMONIC,
        }
    }
}

impl AnalysisOptions {
    pub fn with_omega0(self, omega0: f64) -> Self {
        Self { omega0: Some(omega0), ..self }
    }

    fn envelope_options(&self, scan: &PatternScan) -> EnvelopeOptions {
        EnvelopeOptions {
            baseline_fraction: self.baseline_fraction,
            finest_period: finest_period(scan.scheme(), scan.delay_unit(), self.omega0),
        }
    }
}

/// Period of the fastest harmonic `cos(Nφ)` an `N`-photon scheme can show.
/// In path units this needs the carrier frequency.
pub fn finest_period(scheme: DetectionScheme, unit: DelayUnit, omega0: Option<f64>) -> Option<f64> {
    let k = f64::from(scheme.photons().max(1));
    match unit {
        DelayUnit::PhaseRadians => Some(std::f64::consts::TAU / k),
        DelayUnit::PathMeters => omega0.map(|w| std::f64::consts::TAU * SPEED_OF_LIGHT / (w * k)),
    }
}

/// Envelopes of a scan under the given options.
pub fn scan_envelopes(scan: &PatternScan, opts: &AnalysisOptions) -> Result<Envelopes> {
    envelopes(scan, &opts.envelope_options(scan))
}

/// Envelope shape class of a coarse scan.
pub fn classify(scan: &PatternScan, opts: &AnalysisOptions) -> Result<Shape> {
    classify_envelopes(&scan_envelopes(scan, opts)?, opts.symmetric_tolerance)
}

/// Envelope statistics from a coarse scan, a fine scan, or both.
///
/// The coherence length is the FWHM of the upper envelope for bump and
/// symmetric patterns and of the lower envelope for dips; the coherence time
/// is that length over `c`. Visibility comes from the fine scan.
pub fn metrics(coarse: Option<&PatternScan>, fine: Option<&PatternScan>, opts: &AnalysisOptions) -> Result<EnvelopeStats> {
    if coarse.is_none() && fine.is_none() {
        return Err(Error::MissingScan("coarse or fine analysis"));
    }
    let mut stats = EnvelopeStats::default();
    if let Some(scan) = coarse {
        if scan.delay_unit() != DelayUnit::PathMeters {
            return Err(Error::Invalid(vec![Violation::new("coarse", "coarse scan must be recorded in path meters")]));
        }
        let env = scan_envelopes(scan, opts)?;
        let shape = classify_envelopes(&env, opts.symmetric_tolerance)?;
        let upper = env.upper_fwhm();
        let lower = env.lower_fwhm();
        let length = match shape {
            Shape::Dip => lower.as_ref().map_err(clone_unresolved)?,
            Shape::Bump | Shape::Symmetric => upper.as_ref().map_err(clone_unresolved)?,
        };
        stats.coherence_length = Some(*length);
        stats.coherence_time = Some(*length / SPEED_OF_LIGHT);
        stats.upper_fwhm = upper.ok();
        stats.lower_fwhm = lower.ok();
        stats.shape = Some(shape);
        stats.baseline = Some(env.baseline);
    }
    if let Some(scan) = fine {
        require_contrast(scan)?;
        stats.visibility = Some(visibility(scan)?);
    }
    Ok(stats)
}

fn clone_unresolved(e: &Error) -> Error {
    Error::Unresolved(e.to_string())
}

/// Measured envelope parameters for the ten reference detection schemes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReferenceRow {
    pub scheme: DetectionScheme,
    pub shape: Shape,
    /// Meters.
    pub coherence_length: f64,
    /// Seconds.
    pub coherence_time: f64,
    pub visibility: f64,
    pub origin: String,
}

const REFERENCE_CSV: &str = include_str!("../../data/experimental_patterns.csv");

#[derive(Deserialize)]
struct RawRow {
    scheme: String,
    shape: String,
    coherence_length_mm: f64,
    coherence_time_ps: f64,
    visibility: f64,
    origin: String,
}

/// Embedded measured values, one row per scheme.
pub fn reference_rows() -> Vec<ReferenceRow> {
    csv::Reader::from_reader(REFERENCE_CSV.as_bytes())
        .deserialize::<RawRow>()
        .map(|r| {
            let r = r.expect("embedded reference table is well formed");
            ReferenceRow {
                scheme: r.scheme.parse().expect("scheme"),
                shape: r.shape.parse().expect("shape"),
                coherence_length: r.coherence_length_mm * 1e-3,
                coherence_time: r.coherence_time_ps * 1e-12,
                visibility: r.visibility,
                origin: r.origin,
            }
        })
        .collect()
}

pub fn reference_row(scheme: DetectionScheme) -> Option<ReferenceRow> {
    reference_rows().into_iter().find(|r| r.scheme == scheme)
}
