//! Fringe frequency detection and harmonic content.

use nalgebra::{DMatrix, DVector};
use rustfft::num_complex::Complex;
use rustfft::FftPlanner;

use crate::error::{Error, Result};
use crate::types::{DelayUnit, PatternScan};

/// Fewest fringe cycles over the scan that count as a fringe rather than
/// envelope structure.
pub const MIN_FRINGE_CYCLES: f64 = 5.0;

/// Sub-harmonics up to this divisor are considered as the fundamental.
const MAX_SUBHARMONIC: usize = 6;

/// Relative peak height that makes a sub-harmonic the fundamental.
const SUBHARMONIC_PRESENCE: f64 = 0.1;

/// Relative spread of grid steps accepted as a uniform grid.
const UNIFORM_TOL: f64 = 1e-6;

/// Grid step of a uniformly sampled scan.
pub fn uniform_step(delays: &[f64]) -> Result<f64> {
    let n = delays.len();
    let step = (delays[n - 1] - delays[0]) / (n - 1) as f64;
    let worst = delays.windows(2).map(|w| ((w[1] - w[0]) - step).abs()).fold(0.0, f64::max);
    if worst > UNIFORM_TOL * step.abs() {
        return Err(Error::InsufficientSampling(format!(
            "delay grid must be uniform (step {step:e}, deviation {worst:e})"
        )));
    }
    Ok(step)
}

fn magnitudes(y: &[f64], len: usize) -> Vec<f64> {
    let mean = y.iter().sum::<f64>() / y.len() as f64;
    let mut buf: Vec<Complex<f64>> = y.iter().map(|&v| Complex::new(v - mean, 0.0)).collect();
    buf.resize(len, Complex::new(0.0, 0.0));
    FftPlanner::new().plan_fft_forward(len).process(&mut buf);
    buf[..len / 2 + 1].iter().map(|c| c.norm()).collect()
}

fn refine_peak(mags: &[f64], k: usize) -> f64 {
    if k == 0 || k + 1 >= mags.len() {
        return k as f64;
    }
    let (a, b, c) = (mags[k - 1], mags[k], mags[k + 1]);
    let den = a - 2.0 * b + c;
    if den.abs() < f64::MIN_POSITIVE {
        k as f64
    } else {
        k as f64 + 0.5 * (a - c) / den
    }
}

/// Fundamental fringe frequency in cycles per sample.
///
/// Takes the strongest spectral peak with at least [`MIN_FRINGE_CYCLES`]
/// cycles across the scan, then moves to the lowest sub-harmonic `f/d`
/// (`d ≤ 6`) whose peak is at least a tenth as strong, so that a pattern
/// whose second harmonic dominates still reports its fundamental.
pub fn fringe_frequency(y: &[f64]) -> Result<f64> {
    let n = y.len();
    let len = (4 * n).next_power_of_two();
    let mags = magnitudes(y, len);
    let lo = (MIN_FRINGE_CYCLES * len as f64 / n as f64).ceil() as usize;
    if lo >= mags.len() {
        return Err(Error::InsufficientSampling(format!("{n} points cannot resolve {MIN_FRINGE_CYCLES} fringe periods")));
    }
    let (kmax, &peak) = mags[lo..]
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(b.1))
        .map(|(i, m)| (i + lo, m))
        .expect("non-empty band");
    if !(peak > 0.0) {
        return Err(Error::DegenerateScan("no fringe in spectrum".into()));
    }
    let f = refine_peak(&mags, kmax);
    let mut best = f;
    for d in 2..=MAX_SUBHARMONIC {
        let target = f / d as f64;
        let centre = target.round() as usize;
        if centre < lo {
            break;
        }
        let (a, b) = (centre.saturating_sub(2), (centre + 2).min(mags.len() - 1));
        if let Some((k, &m)) = mags[a..=b].iter().enumerate().max_by(|x, y| x.1.total_cmp(y.1)) {
            let k = k + a;
            if m >= SUBHARMONIC_PRESENCE * peak && k > 0 {
                best = refine_peak(&mags, k);
            }
        }
    }
    Ok(best / len as f64)
}

/// Coefficients of a least-squares trigonometric fit
/// `c₀ + Σ_k (a_k cos kx + b_k sin kx)` over `k = 1..=order`.
#[derive(Debug, Clone, PartialEq)]
pub struct TrigFit {
    pub mean: f64,
    pub cos: Vec<f64>,
    pub sin: Vec<f64>,
}

impl TrigFit {
    pub fn fit(x: &[f64], y: &[f64], order: usize) -> Result<Self> {
        let cols = 2 * order + 1;
        if x.len() < cols {
            return Err(Error::InsufficientSampling(format!(
                "harmonic fit to order {order} needs at least {cols} points, got {}",
                x.len()
            )));
        }
        let design = DMatrix::from_fn(x.len(), cols, |r, c| match c {
            0 => 1.0,
            c if c % 2 == 1 => (((c + 1) / 2) as f64 * x[r]).cos(),
            c => ((c / 2) as f64 * x[r]).sin(),
        });
        let rhs = DVector::from_column_slice(y);
        let sol = design
            .svd(true, true)
            .solve(&rhs, 1e-12)
            .map_err(|e| Error::DegenerateScan(format!("harmonic fit failed: {e}")))?;
        Ok(Self {
            mean: sol[0],
            cos: (0..order).map(|k| sol[2 * k + 1]).collect(),
            sin: (0..order).map(|k| sol[2 * k + 2]).collect(),
        })
    }

    pub fn order(&self) -> usize {
        self.cos.len()
    }

    /// Magnitude of harmonic `k`; index 0 is the mean.
    pub fn amplitudes(&self) -> Vec<f64> {
        std::iter::once(self.mean.abs())
            .chain(self.cos.iter().zip(&self.sin).map(|(a, b)| a.hypot(*b)))
            .collect()
    }

    pub fn evaluate(&self, x: f64) -> f64 {
        self.mean
            + self
                .cos
                .iter()
                .zip(&self.sin)
                .enumerate()
                .map(|(k, (a, b))| {
                    let kx = (k + 1) as f64 * x;
                    a * kx.cos() + b * kx.sin()
                })
                .sum::<f64>()
    }

    fn derivatives(&self, x: f64) -> (f64, f64) {
        let mut d1 = 0.0;
        let mut d2 = 0.0;
        for (k, (a, b)) in self.cos.iter().zip(&self.sin).enumerate() {
            let k = (k + 1) as f64;
            let (s, c) = (k * x).sin_cos();
            d1 += k * (-a * s + b * c);
            d2 += -k * k * (a * c + b * s);
        }
        (d1, d2)
    }

    /// Minimum and maximum over one period, found by dense sampling and
    /// Newton refinement.
    pub fn extrema(&self) -> (f64, f64) {
        let samples = 64 * self.order().max(1);
        let grid: Vec<f64> = (0..samples).map(|j| j as f64 * std::f64::consts::TAU / samples as f64).collect();
        let polish = |mut x: f64| {
            for _ in 0..20 {
                let (d1, d2) = self.derivatives(x);
                if d2 == 0.0 {
                    break;
                }
                let dx = d1 / d2;
                x -= dx;
                if dx.abs() < 1e-15 {
                    break;
                }
            }
            self.evaluate(x)
        };
        let vals: Vec<f64> = grid.iter().map(|&x| self.evaluate(x)).collect();
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for j in 0..samples {
            let (prev, next) = (vals[(j + samples - 1) % samples], vals[(j + 1) % samples]);
            if vals[j] >= prev && vals[j] >= next {
                hi = hi.max(polish(grid[j]).max(vals[j]));
            }
            if vals[j] <= prev && vals[j] <= next {
                lo = lo.min(polish(grid[j]).min(vals[j]));
            }
        }
        (lo, hi)
    }
}

/// Default highest harmonic fitted to fine scans.
pub const DEFAULT_MAX_HARMONIC: usize = 24;

fn require_phase(scan: &PatternScan) -> Result<()> {
    if scan.delay_unit() != DelayUnit::PhaseRadians {
        return Err(Error::InsufficientSampling("harmonic analysis needs a fine scan in phase radians".into()));
    }
    let d = scan.delays();
    if d[d.len() - 1] - d[0] < std::f64::consts::TAU * (1.0 - 1e-9) {
        return Err(Error::InsufficientSampling("fine scan must span at least one full 2π period".into()));
    }
    Ok(())
}

fn fit_order(scan: &PatternScan, max_order: usize) -> usize {
    max_order.min((scan.len() - 1) / 4)
}

/// Harmonic amplitudes `|c_k|`, `k = 0..=max_order`, of a fine phase scan.
pub fn fringe_harmonics(scan: &PatternScan, max_order: usize) -> Result<Vec<f64>> {
    require_phase(scan)?;
    let order = fit_order(scan, max_order);
    let fit = TrigFit::fit(&scan.delays(), &scan.probabilities(), order)?;
    let mut amps = fit.amplitudes();
    amps.resize(max_order + 1, 0.0);
    Ok(amps)
}

/// Strongest non-constant harmonic; ties go to the lower order.
pub fn dominant_harmonic(amplitudes: &[f64]) -> Option<usize> {
    let peak = amplitudes.iter().skip(1).copied().fold(0.0, f64::max);
    if peak <= 0.0 {
        return None;
    }
    (1..amplitudes.len()).find(|&k| amplitudes[k] >= peak * (1.0 - 1e-9))
}

/// Harmonics whose amplitude is at least `presence` times the dominant one.
pub fn significant_harmonics(amplitudes: &[f64], presence: f64) -> Vec<usize> {
    let peak = amplitudes.iter().skip(1).copied().fold(0.0, f64::max);
    (1..amplitudes.len()).filter(|&k| peak > 0.0 && amplitudes[k] >= presence * peak).collect()
}

/// Parabolic vertex through three equally spaced samples.
fn vertex(ym: f64, y0: f64, yp: f64) -> f64 {
    let den = ym - 2.0 * y0 + yp;
    if den == 0.0 {
        y0
    } else {
        y0 - (ym - yp).powi(2) / (8.0 * den)
    }
}

/// Fringe visibility `(max − min)/(max + min)`.
///
/// Fine scans spanning a full period use the extrema of a harmonic fit;
/// other scans use sampled extrema with parabolic refinement.
pub fn visibility(scan: &PatternScan) -> Result<f64> {
    let y = scan.probabilities();
    let (lo, hi) = if require_phase(scan).is_ok() && scan.len() >= 9 {
        let fit = TrigFit::fit(&scan.delays(), &y, fit_order(scan, DEFAULT_MAX_HARMONIC))?;
        fit.extrema()
    } else {
        let (imax, imin) = (argext(&y, f64::gt), argext(&y, f64::lt));
        let refine = |i: usize| {
            if i == 0 || i + 1 == y.len() {
                y[i]
            } else {
                vertex(y[i - 1], y[i], y[i + 1])
            }
        };
        (refine(imin), refine(imax))
    };
    if !(hi + lo > 0.0) {
        return Err(Error::DegenerateScan("fringe extrema sum to zero".into()));
    }
    Ok(((hi - lo) / (hi + lo)).clamp(0.0, 1.0))
}

fn argext(y: &[f64], better: fn(&f64, &f64) -> bool) -> usize {
    let mut best = 0;
    for i in 1..y.len() {
        if better(&y[i], &y[best]) {
            best = i;
        }
    }
    best
}
