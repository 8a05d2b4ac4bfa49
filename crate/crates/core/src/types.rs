//! Shared domain types and input validation.
//!
//! Units: angular frequencies in rad/s, delays in seconds, optical path in
//! meters, phases in radians. The only phase–delay link is `φ = ω₀τ`, and a
//! positive delay means the V arm of the interferometer is the longer one.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result, Violation};

/// Speed of light in vacuum, m/s (exact).
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// Largest photon number accepted unless a caller explicitly raises the limit.
pub const DEFAULT_MAX_PHOTONS: u32 = 6;

/// Minimum ratio ω₀/Δω for the narrowband treatment of the envelope.
pub const MIN_BANDWIDTH_RATIO: f64 = 10.0;

/// Photon source: central frequency, bandwidth, pair rate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SourceSpec {
    /// Central angular frequency ω₀ (rad/s).
    pub omega0: f64,
    /// Spectral width Δω (rad/s).
    pub delta_omega: f64,
    /// Mean photon pairs per pulse μ.
    pub mu: f64,
    /// Pulses per second.
    pub rep_rate: f64,
}

impl SourceSpec {
    /// Degenerate 1584 nm source, Δω calibrated so that the two-photon
    /// envelope has a 1.77 ps FWHM, 76 MHz pulses, μ = 0.01.
    pub fn telecom() -> Self {
        Self {
            omega0: omega_from_wavelength(1584e-9),
            delta_omega: crate::analytic::delta_omega_for_two_photon_fwhm(1.77e-12),
            mu: 0.01,
            rep_rate: 76e6,
        }
    }

    pub fn with_mu(self, mu: f64) -> Self {
        Self { mu, ..self }
    }

    /// Vacuum wavelength of the central frequency, meters.
    pub fn wavelength(&self) -> f64 {
        2.0 * std::f64::consts::PI * SPEED_OF_LIGHT / self.omega0
    }

    fn collect_violations(&self, out: &mut Vec<Violation>) {
        positive(out, "omega0", self.omega0);
        positive(out, "delta_omega", self.delta_omega);
        positive(out, "rep_rate", self.rep_rate);
        if !self.mu.is_finite() || self.mu < 0.0 {
            out.push(Violation::new("mu", format!("mean pair number must be finite and >= 0, got {}", self.mu)));
        }
        if self.omega0 > 0.0 && self.delta_omega > 0.0 && self.omega0 / self.delta_omega <= MIN_BANDWIDTH_RATIO {
            out.push(Violation::new(
                "delta_omega",
                format!(
                    "narrowband assumption violated: omega0/delta_omega = {:.3} must exceed {MIN_BANDWIDTH_RATIO}",
                    self.omega0 / self.delta_omega
                ),
            ));
        }
    }
}

impl Default for SourceSpec {
    fn default() -> Self {
        Self::telecom()
    }
}

pub fn omega_from_wavelength(wavelength: f64) -> f64 {
    2.0 * std::f64::consts::PI * SPEED_OF_LIGHT / wavelength
}

fn positive(out: &mut Vec<Violation>, field: &'static str, value: f64) {
    if !value.is_finite() || value <= 0.0 {
        out.push(Violation::new(field, format!("must be finite and > 0, got {value}")));
    }
}

/// Detector split: `m` threshold detectors behind channel 1, `n` behind channel 2.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct DetectionScheme {
    pub m: u32,
    pub n: u32,
}

impl DetectionScheme {
    pub const fn new(m: u32, n: u32) -> Self {
        Self { m, n }
    }

    /// Total photon number N = m + n.
    pub fn photons(&self) -> u32 {
        self.m + self.n
    }

    /// Photon pairs behind an N ≥ 2 coincidence.
    pub fn pairs(&self) -> u32 {
        self.photons() / 2
    }

    pub fn mirrored(&self) -> Self {
        Self { m: self.n, n: self.m }
    }

    /// Checks the scheme against the photon-number limit and the pair parity rule.
    pub fn check(&self, max_photons: u32) -> Result<()> {
        let mut v = Vec::new();
        self.collect_violations(max_photons, &mut v);
        if v.is_empty() {
            Ok(())
        } else {
            Err(Error::Invalid(v))
        }
    }

    fn collect_violations(&self, max_photons: u32, out: &mut Vec<Violation>) {
        let n = self.photons();
        if n == 0 {
            out.push(Violation::new("scheme", "at least one detector is required"));
        } else if n > max_photons {
            out.push(Violation::new(
                "scheme",
                format!("{n} detectors exceed the configured limit of {max_photons}"),
            ));
        }
        if n >= 2 && n % 2 == 1 {
            out.push(Violation::new(
                "scheme",
                format!("odd photon number {n} unsupported for SPDC post-selection"),
            ));
        }
    }

    /// Every scheme measured with up to six detectors, in display order.
    pub fn reference_set() -> [DetectionScheme; 10] {
        [(1, 0), (1, 1), (2, 0), (2, 2), (3, 1), (4, 0), (3, 3), (4, 2), (5, 1), (6, 0)]
            .map(|(m, n)| DetectionScheme::new(m, n))
    }
}

impl fmt::Display for DetectionScheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.m, self.n)
    }
}

impl FromStr for DetectionScheme {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        let (m, n) = s
            .trim()
            .split_once('/')
            .ok_or_else(|| format!("expected scheme as m/n, got {s:?}"))?;
        let parse = |t: &str| t.trim().parse::<u32>().map_err(|e| format!("bad detector count {t:?}: {e}"));
        Ok(Self::new(parse(m)?, parse(n)?))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ScanMode {
    /// Grid in meters of motor travel; τ = multiplier·x / c.
    CoarsePath,
    /// Grid in radians of phase; φ is used directly.
    FinePhase,
}

impl ScanMode {
    pub fn delay_unit(&self) -> DelayUnit {
        match self {
            ScanMode::CoarsePath => DelayUnit::PathMeters,
            ScanMode::FinePhase => DelayUnit::PhaseRadians,
        }
    }
}

impl fmt::Display for ScanMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ScanMode::CoarsePath => "coarse",
            ScanMode::FinePhase => "fine",
        })
    }
}

impl FromStr for ScanMode {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s.trim() {
            "coarse" | "coarse-path" => Ok(ScanMode::CoarsePath),
            "fine" | "fine-phase" => Ok(ScanMode::FinePhase),
            other => Err(format!("unknown scan mode {other:?} (expected coarse or fine)")),
        }
    }
}

/// Unit of the delay column of a [`PatternScan`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DelayUnit {
    /// Optical path difference in meters.
    PathMeters,
    /// Interferometer phase φ in radians.
    PhaseRadians,
}

impl DelayUnit {
    pub fn as_str(&self) -> &'static str {
        match self {
            DelayUnit::PathMeters => "path_m",
            DelayUnit::PhaseRadians => "phase_rad",
        }
    }
}

impl fmt::Display for DelayUnit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for DelayUnit {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s.trim() {
            "path_m" => Ok(DelayUnit::PathMeters),
            "phase_rad" => Ok(DelayUnit::PhaseRadians),
            other => Err(format!("unknown delay unit {other:?}")),
        }
    }
}

/// Delay sweep plus the per-detector model parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScanConfig {
    pub mode: ScanMode,
    /// First grid value; `None` centers the grid on zero delay.
    pub start: Option<f64>,
    pub step: f64,
    pub count: usize,
    /// Optical path change per unit of motor travel (coarse mode only).
    pub path_multiplier: f64,
    /// Total efficiency per detector.
    pub eta: f64,
    /// Dark-count probability per detector and gate.
    pub dc: f64,
    /// Seconds of accumulation per point, used for count sampling.
    pub integration_time: f64,
}

impl ScanConfig {
    /// Motor scan: 1000 steps of 2 μm centered on zero delay.
    pub fn coarse_default() -> Self {
        Self {
            mode: ScanMode::CoarsePath,
            start: None,
            step: 2e-6,
            count: 1000,
            path_multiplier: 1.0,
            eta: 0.2,
            dc: 1e-4,
            integration_time: 1.0,
        }
    }

    /// Piezo scan: φ from 0 to 4π inclusive, 200 points.
    pub fn fine_default() -> Self {
        Self {
            mode: ScanMode::FinePhase,
            start: Some(0.0),
            step: 4.0 * std::f64::consts::PI / 199.0,
            count: 200,
            ..Self::coarse_default()
        }
    }

    /// A coarse scan spanning `[-half_range, half_range]` of optical path with
    /// `count` points.
    pub fn coarse_span(half_range: f64, count: usize) -> Self {
        Self {
            start: Some(-half_range),
            step: 2.0 * half_range / (count - 1) as f64,
            count,
            ..Self::coarse_default()
        }
    }

    pub fn with_detectors(self, eta: f64, dc: f64) -> Self {
        Self { eta, dc, ..self }
    }

    pub fn start_value(&self) -> f64 {
        self.start.unwrap_or(-self.step * (self.count.saturating_sub(1)) as f64 / 2.0)
    }

    /// Raw grid values in the configured unit.
    pub fn grid(&self) -> Vec<f64> {
        let start = self.start_value();
        (0..self.count).map(|i| start + i as f64 * self.step).collect()
    }

    /// Physical delay τ (s) and phase φ (rad) for a raw grid value.
    pub fn delay_and_phase(&self, grid_value: f64, omega0: f64) -> (f64, f64) {
        match self.mode {
            ScanMode::CoarsePath => {
                let tau = self.path_multiplier * grid_value / SPEED_OF_LIGHT;
                (tau, omega0 * tau)
            }
            ScanMode::FinePhase => (grid_value / omega0, grid_value),
        }
    }

    /// Value stored in the delay column of a scan: optical path for coarse
    /// scans, phase for fine scans.
    pub fn recorded_delay(&self, grid_value: f64) -> f64 {
        match self.mode {
            ScanMode::CoarsePath => self.path_multiplier * grid_value,
            ScanMode::FinePhase => grid_value,
        }
    }

    fn collect_violations(&self, out: &mut Vec<Violation>) {
        positive(out, "step", self.step);
        if self.count < 2 {
            out.push(Violation::new("count", format!("at least 2 grid points are required, got {}", self.count)));
        }
        if let Some(start) = self.start {
            if !start.is_finite() {
                out.push(Violation::new("start", format!("must be finite, got {start}")));
            }
        }
        positive(out, "path_multiplier", self.path_multiplier);
        if !(0.0..=1.0).contains(&self.eta) {
            out.push(Violation::new("eta", format!("efficiency out of range [0, 1]: {}", self.eta)));
        }
        if !(0.0..1.0).contains(&self.dc) {
            out.push(Violation::new("dc", format!("dark-count probability out of range [0, 1): {}", self.dc)));
        }
        positive(out, "integration_time", self.integration_time);
    }
}

/// A source, a detector split and a scan that passed validation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Validated {
    pub spec: SourceSpec,
    pub scheme: DetectionScheme,
    pub scan: ScanConfig,
}

impl Validated {
    /// Re-runs validation; identical output for an already validated bundle.
    pub fn revalidate(self) -> Result<Self> {
        validate(self.spec, self.scheme, self.scan)
    }
}

/// Validates all inputs with the default six-photon limit.
pub fn validate(spec: SourceSpec, scheme: DetectionScheme, scan: ScanConfig) -> Result<Validated> {
    validate_with_limit(spec, scheme, scan, DEFAULT_MAX_PHOTONS)
}

/// Validates all inputs and reports every violated invariant at once.
pub fn validate_with_limit(
    spec: SourceSpec,
    scheme: DetectionScheme,
    mut scan: ScanConfig,
    max_photons: u32,
) -> Result<Validated> {
    let mut violations = Vec::new();
    spec.collect_violations(&mut violations);
    scheme.collect_violations(max_photons, &mut violations);
    scan.collect_violations(&mut violations);
    if !violations.is_empty() {
        return Err(Error::Invalid(violations));
    }
    scan.start = Some(scan.start_value());
    Ok(Validated { spec, scheme, scan })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScanPoint {
    pub delay: f64,
    pub probability: f64,
    pub counts: Option<u64>,
}

/// Ordered series of detection probabilities over a delay grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PatternScan {
    scheme: DetectionScheme,
    delay_unit: DelayUnit,
    points: Vec<ScanPoint>,
}

impl PatternScan {
    /// Builds a scan; delays must be finite and strictly monotonic and every
    /// probability must lie in [0, 1].
    pub fn new(scheme: DetectionScheme, delay_unit: DelayUnit, points: Vec<ScanPoint>) -> Result<Self> {
        if points.len() < 2 {
            return Err(Error::Invalid(vec![Violation::new("points", "a scan needs at least 2 points")]));
        }
        let mut v = Vec::new();
        let increasing = points[1].delay > points[0].delay;
        for (i, w) in points.windows(2).enumerate() {
            let ok = if increasing { w[1].delay > w[0].delay } else { w[1].delay < w[0].delay };
            if !ok || !w[1].delay.is_finite() || !w[0].delay.is_finite() {
                v.push(Violation::new("delay", format!("not strictly monotonic at point {}", i + 1)));
                break;
            }
        }
        for (i, p) in points.iter().enumerate() {
            if !(0.0..=1.0).contains(&p.probability) {
                v.push(Violation::new("probability", format!("{} at point {i} is outside [0, 1]", p.probability)));
                break;
            }
        }
        if !v.is_empty() {
            return Err(Error::Invalid(v));
        }
        Ok(Self { scheme, delay_unit, points })
    }

    /// Builds a scan from parallel delay and probability columns.
    pub fn from_columns(scheme: DetectionScheme, delay_unit: DelayUnit, delays: &[f64], probabilities: &[f64]) -> Result<Self> {
        let points = delays
            .iter()
            .zip(probabilities)
            .map(|(&delay, &probability)| ScanPoint { delay, probability, counts: None })
            .collect();
        Self::new(scheme, delay_unit, points)
    }

    pub fn scheme(&self) -> DetectionScheme {
        self.scheme
    }

    pub fn delay_unit(&self) -> DelayUnit {
        self.delay_unit
    }

    pub fn points(&self) -> &[ScanPoint] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn delays(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.delay).collect()
    }

    pub fn probabilities(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.probability).collect()
    }

    /// Attaches sampled counts, one per point.
    pub fn with_counts(mut self, counts: &[u64]) -> Self {
        for (p, &c) in self.points.iter_mut().zip(counts) {
            p.counts = Some(c);
        }
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Shape {
    Symmetric,
    Dip,
    Bump,
}

impl fmt::Display for Shape {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Shape::Symmetric => "symmetric",
            Shape::Dip => "dip",
            Shape::Bump => "bump",
        })
    }
}

impl FromStr for Shape {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s.trim() {
            "symmetric" | "sym." | "sym" => Ok(Shape::Symmetric),
            "dip" => Ok(Shape::Dip),
            "bump" => Ok(Shape::Bump),
            other => Err(format!("unknown shape {other:?}")),
        }
    }
}

/// Envelope metrics of an interference pattern. Fields are absent when the
/// scan they derive from was not supplied.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct EnvelopeStats {
    pub shape: Option<Shape>,
    /// FWHM of the upper envelope above baseline, in the coarse scan's unit.
    pub upper_fwhm: Option<f64>,
    /// FWHM of the lower envelope below baseline, in the coarse scan's unit.
    pub lower_fwhm: Option<f64>,
    /// Meters of optical path.
    pub coherence_length: Option<f64>,
    /// Seconds; always `coherence_length / c`.
    pub coherence_time: Option<f64>,
    pub visibility: Option<f64>,
    pub baseline: Option<f64>,
}
