//! Run configuration in TOML.
//!
//! All keys are top level and optional; missing keys take the defaults of
//! [`SourceSpec::telecom`] and of [`ScanConfig::coarse_default`] or
//! [`ScanConfig::fine_default`], depending on `mode`.
//!
//! | key                | unit / form              |
//! |--------------------|--------------------------|
//! | `omega0`           | rad/s                    |
//! | `wavelength`       | m (alternative to `omega0`) |
//! | `delta_omega`      | rad/s                    |
//! | `mu`               | mean pairs per pulse     |
//! | `rep_rate`         | pulses/s                 |
//! | `scheme`           | `"m/n"`                  |
//! | `mode`             | `"coarse"` or `"fine"`   |
//! | `start`            | m (coarse) or rad (fine); omitted centers the grid |
//! | `step`             | m (coarse) or rad (fine) |
//! | `count`            | grid points              |
//! | `path_multiplier`  | optical path per unit of motor travel |
//! | `eta`              | detector efficiency      |
//! | `dc`               | dark-count probability per gate |
//! | `integration_time` | s per point              |
//! | `max_photons`      | detector-count limit (default 6) |
//!
//! Unknown keys, wrong types and violated invariants are reported with the
//! line they occur on.

use std::ops::Range;

use serde::{Deserialize, Serialize};
use toml::Spanned;

use crate::error::{Error, Result};
use crate::types::{
    omega_from_wavelength, validate_with_limit, DetectionScheme, ScanConfig, ScanMode, SourceSpec, Validated,
    DEFAULT_MAX_PHOTONS,
};

/// A fully resolved run configuration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub spec: SourceSpec,
    pub scheme: Option<DetectionScheme>,
    pub scan: ScanConfig,
    pub max_photons: u32,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self { spec: SourceSpec::telecom(), scheme: None, scan: ScanConfig::coarse_default(), max_photons: DEFAULT_MAX_PHOTONS }
    }
}

impl RunConfig {
    /// Default configuration for a scan mode.
    pub fn for_mode(mode: ScanMode) -> Self {
        let scan = match mode {
            ScanMode::CoarsePath => ScanConfig::coarse_default(),
            ScanMode::FinePhase => ScanConfig::fine_default(),
        };
        Self { scan, ..Self::default() }
    }

    /// Validates against a scheme, which overrides the configured one when given.
    pub fn validate(&self, scheme: Option<DetectionScheme>) -> Result<Validated> {
        let scheme = scheme.or(self.scheme).ok_or_else(|| Error::Config {
            line: None,
            message: "no detection scheme given (set `scheme = \"m/n\"` or pass one explicitly)".into(),
        })?;
        validate_with_limit(self.spec, scheme, self.scan, self.max_photons)
    }

    /// Flat `key = value` pairs in the config-file vocabulary, in schema order.
    pub fn entries(&self) -> Vec<(&'static str, String)> {
        let mut out = vec![
            ("omega0", num(self.spec.omega0)),
            ("delta_omega", num(self.spec.delta_omega)),
            ("mu", num(self.spec.mu)),
            ("rep_rate", num(self.spec.rep_rate)),
        ];
        if let Some(s) = self.scheme {
            out.push(("scheme", format!("\"{s}\"")));
        }
        out.push(("mode", format!("\"{}\"", self.scan.mode)));
        if let Some(start) = self.scan.start {
            out.push(("start", num(start)));
        }
        out.extend([
            ("step", num(self.scan.step)),
            ("count", self.scan.count.to_string()),
            ("path_multiplier", num(self.scan.path_multiplier)),
            ("eta", num(self.scan.eta)),
            ("dc", num(self.scan.dc)),
            ("integration_time", num(self.scan.integration_time)),
            ("max_photons", self.max_photons.to_string()),
        ]);
        out
    }

    /// TOML text that parses back to this configuration.
    pub fn to_toml(&self) -> String {
        self.entries().into_iter().map(|(k, v)| format!("{k} = {v}\n")).collect()
    }
}

/// Shortest round-trip decimal that TOML reads as a float.
fn num(x: f64) -> String {
    let s = format!("{x:?}");
    if s.contains(['.', 'e', 'E', 'i', 'N']) {
        s
    } else {
        format!("{s}.0")
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    omega0: Option<Spanned<f64>>,
    wavelength: Option<Spanned<f64>>,
    delta_omega: Option<Spanned<f64>>,
    mu: Option<Spanned<f64>>,
    rep_rate: Option<Spanned<f64>>,
    scheme: Option<Spanned<String>>,
    mode: Option<Spanned<String>>,
    start: Option<Spanned<f64>>,
    step: Option<Spanned<f64>>,
    count: Option<Spanned<i64>>,
    path_multiplier: Option<Spanned<f64>>,
    eta: Option<Spanned<f64>>,
    dc: Option<Spanned<f64>>,
    integration_time: Option<Spanned<f64>>,
    max_photons: Option<Spanned<i64>>,
}

struct Lines<'a>(&'a str);

impl Lines<'_> {
    fn of(&self, span: Range<usize>) -> usize {
        self.0[..span.start.min(self.0.len())].matches('\n').count() + 1
    }

    fn error<T>(&self, span: Range<usize>, message: impl Into<String>) -> Result<T> {
        Err(Error::Config { line: Some(self.of(span)), message: message.into() })
    }
}

fn take<T: Clone>(v: &Option<Spanned<T>>) -> Option<T> {
    v.as_ref().map(|s| s.get_ref().clone())
}

/// Parses and validates configuration text. The scheme may be left out and
/// supplied later through [`RunConfig::validate`].
pub fn parse(text: &str) -> Result<RunConfig> {
    parse_with_mode(text, None)
}

/// Like [`parse`], with the scan mode forced before mode-dependent defaults
/// are applied.
pub fn parse_with_mode(text: &str, mode: Option<ScanMode>) -> Result<RunConfig> {
    let lines = Lines(text);
    let raw: RawConfig = toml::from_str(text).map_err(|e| Error::Config {
        line: e.span().map(|s| lines.of(s)),
        message: e.message().to_string(),
    })?;

    let mode = match (&raw.mode, mode) {
        (_, Some(forced)) => forced,
        (Some(m), None) => match m.get_ref().parse::<ScanMode>() {
            Ok(mode) => mode,
            Err(msg) => return lines.error(m.span(), msg),
        },
        (None, None) => ScanMode::CoarsePath,
    };
    let mut cfg = RunConfig::for_mode(mode);

    let scheme = match &raw.scheme {
        Some(s) => match s.get_ref().parse::<DetectionScheme>() {
            Ok(sch) => Some(sch),
            Err(msg) => return lines.error(s.span(), msg),
        },
        None => None,
    };
    cfg.scheme = scheme;

    if let (Some(a), Some(_)) = (&raw.omega0, &raw.wavelength) {
        return lines.error(a.span(), "give either omega0 or wavelength, not both");
    }
    if let Some(w) = take(&raw.omega0) {
        cfg.spec.omega0 = w;
    }
    if let Some(l) = &raw.wavelength {
        if !(*l.get_ref() > 0.0) || !l.get_ref().is_finite() {
            return lines.error(l.span(), format!("wavelength must be finite and > 0, got {}", l.get_ref()));
        }
        cfg.spec.omega0 = omega_from_wavelength(*l.get_ref());
    }
    cfg.spec.delta_omega = take(&raw.delta_omega).unwrap_or(cfg.spec.delta_omega);
    cfg.spec.mu = take(&raw.mu).unwrap_or(cfg.spec.mu);
    cfg.spec.rep_rate = take(&raw.rep_rate).unwrap_or(cfg.spec.rep_rate);

    if let Some(start) = take(&raw.start) {
        cfg.scan.start = Some(start);
    }
    cfg.scan.step = take(&raw.step).unwrap_or(cfg.scan.step);
    if let Some(c) = &raw.count {
        match usize::try_from(*c.get_ref()) {
            Ok(n) => cfg.scan.count = n,
            Err(_) => return lines.error(c.span(), format!("count must be a non-negative integer, got {}", c.get_ref())),
        }
    }
    // A fine scan without explicit start/step keeps its 0..4π grid when only
    // the point count changes.
    if mode == ScanMode::FinePhase && raw.step.is_none() && raw.count.is_some() && cfg.scan.count >= 2 {
        cfg.scan.step = 4.0 * std::f64::consts::PI / (cfg.scan.count - 1) as f64;
    }
    cfg.scan.path_multiplier = take(&raw.path_multiplier).unwrap_or(cfg.scan.path_multiplier);
    cfg.scan.eta = take(&raw.eta).unwrap_or(cfg.scan.eta);
    cfg.scan.dc = take(&raw.dc).unwrap_or(cfg.scan.dc);
    cfg.scan.integration_time = take(&raw.integration_time).unwrap_or(cfg.scan.integration_time);
    if let Some(m) = &raw.max_photons {
        match u32::try_from(*m.get_ref()) {
            Ok(n) if n >= 1 => cfg.max_photons = n,
            _ => return lines.error(m.span(), format!("max_photons must be a positive integer, got {}", m.get_ref())),
        }
    }

    // Report semantic violations at the line of the offending key; the
    // scheme is only checked when present.
    let probe = cfg.scheme.unwrap_or(DetectionScheme::new(1, 0));
    if let Err(Error::Invalid(violations)) = validate_with_limit(cfg.spec, probe, cfg.scan, cfg.max_photons) {
        let v = &violations[0];
        let span = match v.field {
            "omega0" => raw.omega0.as_ref().or(raw.wavelength.as_ref()).map(Spanned::span),
            "delta_omega" => raw.delta_omega.as_ref().map(Spanned::span),
            "mu" => raw.mu.as_ref().map(Spanned::span),
            "rep_rate" => raw.rep_rate.as_ref().map(Spanned::span),
            "scheme" => raw.scheme.as_ref().map(Spanned::span),
            "start" => raw.start.as_ref().map(Spanned::span),
            "step" => raw.step.as_ref().map(Spanned::span),
            "count" => raw.count.as_ref().map(Spanned::span),
            "path_multiplier" => raw.path_multiplier.as_ref().map(Spanned::span),
            "eta" => raw.eta.as_ref().map(Spanned::span),
            "dc" => raw.dc.as_ref().map(Spanned::span),
            "integration_time" => raw.integration_time.as_ref().map(Spanned::span),
            _ => None,
        };
        let message = violations.iter().map(|v| v.to_string()).collect::<Vec<_>>().join("; ");
        return Err(Error::Config { line: span.map(|s| lines.of(s)), message });
    }
    Ok(cfg)
}

/// Reads and parses a configuration file.
pub fn load(path: impl AsRef<std::path::Path>) -> Result<RunConfig> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse(&text)
}
