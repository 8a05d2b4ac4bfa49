//! Upper/lower fringe envelopes, baseline and envelope widths.

use super::spectrum::{fringe_frequency, uniform_step, MIN_FRINGE_CYCLES};
use crate::error::{Error, Result};
use crate::types::{PatternScan, Shape};

/// Fewest samples per fringe period accepted for envelope extraction.
pub const MIN_POINTS_PER_PERIOD: f64 = 8.0;

/// Envelopes evaluated on the scan's own delay grid.
#[derive(Debug, Clone, PartialEq)]
pub struct Envelopes {
    pub delays: Vec<f64>,
    pub upper: Vec<f64>,
    pub lower: Vec<f64>,
    /// Mean of the outermost points of the scan.
    pub baseline: f64,
    /// Fundamental fringe period, in delay units.
    pub period: f64,
}

/// Fraction of the scan (split between both ends) used for the baseline.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnvelopeOptions {
    pub baseline_fraction: f64,
    /// Shortest fringe period the scan can contain, in delay units. When set,
    /// the sampling check uses it instead of the detected fringe, which
    /// catches scans too coarse to show their fastest harmonic.
    pub finest_period: Option<f64>,
}

impl Default for EnvelopeOptions {
    fn default() -> Self {
        Self { baseline_fraction: 0.10, finest_period: None }
    }
}

/// Monotone piecewise-cubic Hermite interpolant (Fritsch–Carlson slopes).
#[derive(Debug, Clone, PartialEq)]
pub struct Pchip {
    x: Vec<f64>,
    y: Vec<f64>,
    d: Vec<f64>,
}

impl Pchip {
    /// `x` must be strictly increasing with at least two points.
    pub fn new(x: Vec<f64>, y: Vec<f64>) -> Self {
        let n = x.len();
        let h: Vec<f64> = x.windows(2).map(|w| w[1] - w[0]).collect();
        let delta: Vec<f64> = (0..n - 1).map(|i| (y[i + 1] - y[i]) / h[i]).collect();
        let mut d = vec![0.0; n];
        if n == 2 {
            d[0] = delta[0];
            d[1] = delta[0];
        } else {
            for i in 1..n - 1 {
                if delta[i - 1] * delta[i] > 0.0 {
                    let w1 = 2.0 * h[i] + h[i - 1];
                    let w2 = h[i] + 2.0 * h[i - 1];
                    d[i] = (w1 + w2) / (w1 / delta[i - 1] + w2 / delta[i]);
                }
            }
            d[0] = Self::end_slope(h[0], h[1], delta[0], delta[1]);
            d[n - 1] = Self::end_slope(h[n - 2], h[n - 3], delta[n - 2], delta[n - 3]);
        }
        Self { x, y, d }
    }

    fn end_slope(h0: f64, h1: f64, d0: f64, d1: f64) -> f64 {
        let s = ((2.0 * h0 + h1) * d0 - h0 * d1) / (h0 + h1);
        if s * d0 <= 0.0 {
            0.0
        } else if d0 * d1 <= 0.0 && s.abs() > 3.0 * d0.abs() {
            3.0 * d0
        } else {
            s
        }
    }

    /// Value at `t`; constant beyond the end knots.
    pub fn eval(&self, t: f64) -> f64 {
        let n = self.x.len();
        if t <= self.x[0] {
            return self.y[0];
        }
        if t >= self.x[n - 1] {
            return self.y[n - 1];
        }
        let i = self.x.partition_point(|&v| v <= t) - 1;
        let h = self.x[i + 1] - self.x[i];
        let s = (t - self.x[i]) / h;
        let (s2, s3) = (s * s, s * s * s);
        let h00 = 2.0 * s3 - 3.0 * s2 + 1.0;
        let h10 = s3 - 2.0 * s2 + s;
        let h01 = -2.0 * s3 + 3.0 * s2;
        let h11 = s3 - s2;
        h00 * self.y[i] + h10 * h * self.d[i] + h01 * self.y[i + 1] + h11 * h * self.d[i + 1]
    }
}

fn vertex(x: &[f64], y: &[f64], i: usize) -> (f64, f64) {
    if i == 0 || i + 1 == y.len() {
        return (x[i], y[i]);
    }
    let (ym, y0, yp) = (y[i - 1], y[i], y[i + 1]);
    let den = ym - 2.0 * y0 + yp;
    if den == 0.0 {
        return (x[i], y0);
    }
    let off = 0.5 * (ym - yp) / den;
    let h = x[i + 1] - x[i];
    (x[i] + off * h, y0 - 0.25 * (ym - yp) * off)
}

/// Extremum knots, one per fringe period.
fn knots(x: &[f64], y: &[f64], period_samples: f64, upper: bool) -> (Vec<f64>, Vec<f64>) {
    let n = y.len();
    let better = |a: f64, b: f64| if upper { a > b } else { a < b };
    let is_local = |i: usize| {
        let left = i == 0 || !better(y[i - 1], y[i]);
        let right = i + 1 == n || !better(y[i + 1], y[i]);
        left && right
    };
    let windows = (n as f64 / period_samples).floor() as usize;
    let mut kx = Vec::with_capacity(windows);
    let mut ky = Vec::with_capacity(windows);
    for w in 0..windows {
        let a = (w as f64 * period_samples).round() as usize;
        let b = (((w + 1) as f64 * period_samples).round() as usize).min(n);
        let pick = (a..b).filter(|&i| is_local(i)).reduce(|p, q| if better(y[q], y[p]) { q } else { p });
        if let Some(i) = pick {
            let (vx, vy) = vertex(x, y, i);
            if kx.last().map_or(true, |&last| vx > last) {
                kx.push(vx);
                ky.push(vy);
            }
        }
    }
    (kx, ky)
}

fn spread(y: &[f64]) -> (f64, f64) {
    y.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)))
}

/// Checks that a scan is not constant.
pub fn require_contrast(scan: &PatternScan) -> Result<()> {
    let (lo, hi) = spread(&scan.probabilities());
    if hi - lo <= 1e-12 * hi.abs().max(f64::MIN_POSITIVE) {
        return Err(Error::DegenerateScan(format!("scan is flat at {hi}")));
    }
    Ok(())
}

/// Mean of the outermost `fraction` of points, half from each end.
pub fn baseline(y: &[f64], fraction: f64) -> f64 {
    let k = ((y.len() as f64 * fraction / 2.0).round() as usize).max(1);
    let k = k.min(y.len() / 2).max(1);
    let sum: f64 = y[..k].iter().chain(&y[y.len() - k..]).sum();
    sum / (2 * k) as f64
}

/// Upper and lower envelopes from per-period extrema joined by monotone
/// cubic interpolation.
pub fn envelopes(scan: &PatternScan, opts: &EnvelopeOptions) -> Result<Envelopes> {
    require_contrast(scan)?;
    let x = scan.delays();
    let y = scan.probabilities();
    let step = uniform_step(&x)?.abs();
    let n = y.len();

    if let Some(finest) = opts.finest_period {
        let per = finest / step;
        if per < MIN_POINTS_PER_PERIOD {
            return Err(Error::InsufficientSampling(format!(
                "fastest fringe has period {finest:e} but step is {step:e}: {per:.2} points per period, \
                 need at least {MIN_POINTS_PER_PERIOD} (step <= {:e})",
                finest / MIN_POINTS_PER_PERIOD
            )));
        }
    }
    let f = fringe_frequency(&y)?;
    let period_samples = 1.0 / f;
    if period_samples < MIN_POINTS_PER_PERIOD {
        return Err(Error::InsufficientSampling(format!(
            "{period_samples:.2} points per fringe period, need at least {MIN_POINTS_PER_PERIOD} (step <= {:e})",
            period_samples * step / MIN_POINTS_PER_PERIOD
        )));
    }
    let periods = n as f64 / period_samples;
    if periods < MIN_FRINGE_CYCLES {
        return Err(Error::InsufficientSampling(format!(
            "scan covers {periods:.2} fringe periods, need at least {MIN_FRINGE_CYCLES}"
        )));
    }

    let mut curves = Vec::with_capacity(2);
    for upper in [true, false] {
        let (kx, ky) = knots(&x, &y, period_samples, upper);
        if kx.len() < 2 {
            return Err(Error::InsufficientSampling("fewer than two fringe extrema found".into()));
        }
        let interp = Pchip::new(kx, ky);
        curves.push(x.iter().map(|&t| interp.eval(t)).collect::<Vec<f64>>());
    }
    let lower = curves.pop().expect("lower");
    let upper = curves.pop().expect("upper");
    Ok(Envelopes {
        delays: x,
        upper,
        lower,
        baseline: baseline(&y, opts.baseline_fraction),
        period: period_samples * step,
    })
}

impl Envelopes {
    /// Height of the upper envelope's peak above baseline.
    pub fn upper_excursion(&self) -> f64 {
        spread(&self.upper).1 - self.baseline
    }

    /// Depth of the lower envelope's trough below baseline.
    pub fn lower_excursion(&self) -> f64 {
        self.baseline - spread(&self.lower).0
    }

    /// FWHM of `upper − baseline`.
    pub fn upper_fwhm(&self) -> Result<f64> {
        let h: Vec<f64> = self.upper.iter().map(|u| u - self.baseline).collect();
        fwhm(&self.delays, &h).ok_or_else(|| Error::Unresolved("upper envelope has no resolved half maximum".into()))
    }

    /// FWHM of `baseline − lower`.
    pub fn lower_fwhm(&self) -> Result<f64> {
        let h: Vec<f64> = self.lower.iter().map(|l| self.baseline - l).collect();
        fwhm(&self.delays, &h).ok_or_else(|| Error::Unresolved("lower envelope has no resolved half maximum".into()))
    }
}

/// Width at half height of the tallest peak of `h`, by linear interpolation
/// of the crossings on either side.
pub fn fwhm(x: &[f64], h: &[f64]) -> Option<f64> {
    let (ipk, &peak) = h.iter().enumerate().max_by(|a, b| a.1.total_cmp(b.1))?;
    if !(peak > 0.0) {
        return None;
    }
    let half = 0.5 * peak;
    let cross = |i: usize, j: usize| x[i] + (half - h[i]) * (x[j] - x[i]) / (h[j] - h[i]);
    let left = (1..=ipk).rev().find(|&i| h[i - 1] < half).map(|i| cross(i - 1, i))?;
    let right = (ipk..h.len() - 1).find(|&i| h[i + 1] < half).map(|i| cross(i, i + 1))?;
    Some(right - left)
}

/// Shape class from envelope excursions.
///
/// With `U` the upper excursion and `L` the lower one: symmetric when
/// `|U − L| ≤ tolerance · max(U, L)`, otherwise bump if `U > L` and dip if
/// `L > U`.
pub fn classify_envelopes(env: &Envelopes, tolerance: f64) -> Result<Shape> {
    let (u, l) = (env.upper_excursion(), env.lower_excursion());
    let scale = u.max(l);
    if !(scale > 0.0) {
        return Err(Error::DegenerateScan("envelopes do not leave the baseline".into()));
    }
    Ok(if (u - l).abs() <= tolerance * scale {
        Shape::Symmetric
    } else if u > l {
        Shape::Bump
    } else {
        Shape::Dip
    })
}
