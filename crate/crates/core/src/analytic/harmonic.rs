//! Harmonic representation `P(I, φ) = Σₖ cₖ(I) cos(kφ)` of a detection
//! probability, with each coefficient a polynomial in `√I`.
//!
//! Plain-text format, one harmonic per line:
//!
//! ```text
//! # comment
//! scheme 2/2
//! origin closed-form
//! k=0: +3/8 -1/8*I +3/32*I^2
//! k=2: +3/8*I
//! k=4: +9/32*I^2
//! ```
//!
//! Coefficients are written as dyadic fractions when exact, otherwise as
//! round-trip decimals. Powers of `I` may be half-integers (`I^1/2`).

use std::fmt::{self, Write as _};
use std::str::FromStr;

use crate::types::DetectionScheme;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum FormOrigin {
    /// Transcribed closed-form expression.
    ClosedForm,
    /// Reconstructed by an exact linear fit to the Fock-space oracle.
    Reconstructed,
}

impl FormOrigin {
    fn as_str(&self) -> &'static str {
        match self {
            FormOrigin::ClosedForm => "closed-form",
            FormOrigin::Reconstructed => "reconstructed",
        }
    }
}

/// One harmonic `c(I) cos(order·φ)`.
#[derive(Debug, Clone, PartialEq)]
pub struct HarmonicTerm {
    pub order: u32,
    /// `c(I) = Σ_p amplitude_poly[p] · I^(p/2)`.
    pub amplitude_poly: Vec<f64>,
}

impl HarmonicTerm {
    /// Term whose coefficient is a polynomial in `I` (integer powers only).
    pub fn in_i(order: u32, i_poly: &[f64]) -> Self {
        let mut amplitude_poly = vec![0.0; 2 * i_poly.len().max(1) - 1];
        for (p, &c) in i_poly.iter().enumerate() {
            amplitude_poly[2 * p] = c;
        }
        Self { order, amplitude_poly }
    }

    pub fn coefficient(&self, indistinguishability: f64) -> f64 {
        let s = indistinguishability.max(0.0).sqrt();
        self.amplitude_poly.iter().rev().fold(0.0, |acc, &c| acc * s + c)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct HarmonicForm {
    pub scheme: DetectionScheme,
    pub origin: FormOrigin,
    terms: Vec<HarmonicTerm>,
}

impl HarmonicForm {
    pub fn new(scheme: DetectionScheme, origin: FormOrigin, mut terms: Vec<HarmonicTerm>) -> Self {
        terms.sort_by_key(|t| t.order);
        let mut merged: Vec<HarmonicTerm> = Vec::with_capacity(terms.len());
        for t in terms {
            match merged.last_mut() {
                Some(last) if last.order == t.order => {
                    if last.amplitude_poly.len() < t.amplitude_poly.len() {
                        last.amplitude_poly.resize(t.amplitude_poly.len(), 0.0);
                    }
                    for (a, b) in last.amplitude_poly.iter_mut().zip(&t.amplitude_poly) {
                        *a += b;
                    }
                }
                _ => merged.push(t),
            }
        }
        for t in &mut merged {
            while t.amplitude_poly.len() > 1 && t.amplitude_poly.last() == Some(&0.0) {
                t.amplitude_poly.pop();
            }
        }
        Self { scheme, origin, terms: merged }
    }

    pub fn terms(&self) -> &[HarmonicTerm] {
        &self.terms
    }

    pub fn orders(&self) -> Vec<u32> {
        self.terms.iter().map(|t| t.order).collect()
    }

    /// Largest power of `I` appearing in any coefficient.
    pub fn max_i_power(&self) -> f64 {
        self.terms
            .iter()
            .filter_map(|t| t.amplitude_poly.iter().rposition(|&c| c != 0.0))
            .max()
            .map_or(0.0, |p| p as f64 / 2.0)
    }

    pub fn coefficient(&self, order: u32, indistinguishability: f64) -> f64 {
        self.terms
            .iter()
            .find(|t| t.order == order)
            .map_or(0.0, |t| t.coefficient(indistinguishability))
    }

    pub fn evaluate(&self, indistinguishability: f64, phi: f64) -> f64 {
        self.terms
            .iter()
            .map(|t| t.coefficient(indistinguishability) * (t.order as f64 * phi).cos())
            .sum()
    }

    /// Exact minimum and maximum over φ at fixed `I`.
    ///
    /// The cosine series is rewritten as a polynomial in `x = cos φ` through
    /// Chebyshev polynomials; extrema lie at `x = ±1` or at real roots of the
    /// derivative inside (-1, 1), which are isolated by sign changes and
    /// refined by bisection.
    pub fn extrema(&self, indistinguishability: f64) -> (f64, f64) {
        let max_order = self.terms.last().map_or(0, |t| t.order) as usize;
        let mut poly = vec![0.0; max_order + 1];
        let mut prev = vec![1.0];
        let mut cur = vec![0.0, 1.0];
        for k in 0..=max_order {
            let tk = match k {
                0 => prev.clone(),
                1 => cur.clone(),
                _ => {
                    let mut next = vec![0.0; k + 1];
                    for (i, &c) in cur.iter().enumerate() {
                        next[i + 1] += 2.0 * c;
                    }
                    for (i, &c) in prev.iter().enumerate() {
                        next[i] -= c;
                    }
                    prev = std::mem::replace(&mut cur, next);
                    cur.clone()
                }
            };
            let c = self.coefficient(k as u32, indistinguishability);
            for (i, &t) in tk.iter().enumerate() {
                poly[i] += c * t;
            }
        }
        let eval = |p: &[f64], x: f64| p.iter().rev().fold(0.0, |acc, &c| acc * x + c);
        let deriv: Vec<f64> = poly.iter().enumerate().skip(1).map(|(i, &c)| i as f64 * c).collect();

        let mut candidates = vec![-1.0, 1.0];
        const SPLITS: usize = 4096;
        let grid: Vec<f64> = (0..=SPLITS).map(|i| -1.0 + 2.0 * i as f64 / SPLITS as f64).collect();
        for w in grid.windows(2) {
            let (mut a, mut b) = (w[0], w[1]);
            let (fa, fb) = (eval(&deriv, a), eval(&deriv, b));
            candidates.push(a);
            if fa == 0.0 || fa.signum() == fb.signum() {
                continue;
            }
            let sa = fa.signum();
            for _ in 0..200 {
                let mid = 0.5 * (a + b);
                if mid <= a || mid >= b {
                    break;
                }
                if eval(&deriv, mid).signum() == sa {
                    a = mid;
                } else {
                    b = mid;
                }
            }
            candidates.push(0.5 * (a + b));
        }
        candidates.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &x| {
            let v = eval(&poly, x);
            (lo.min(v), hi.max(v))
        })
    }

    /// Fringe visibility `(max − min)/(max + min)` over φ at fixed `I`.
    pub fn visibility(&self, indistinguishability: f64) -> f64 {
        let (lo, hi) = self.extrema(indistinguishability);
        (hi - lo) / (hi + lo)
    }

    pub fn to_text(&self) -> String {
        self.to_string()
    }
}

fn dyadic(c: f64) -> Option<(i64, u64)> {
    let mut den = 1u64;
    while den <= 1 << 16 {
        let num = (c * den as f64).round();
        if (num / den as f64 - c).abs() <= 1e-11 {
            return Some((num as i64, den));
        }
        den *= 2;
    }
    None
}

fn write_coefficient(out: &mut String, c: f64) {
    match dyadic(c) {
        Some((num, 1)) => write!(out, "{num:+}"),
        Some((num, den)) => write!(out, "{num:+}/{den}"),
        None => write!(out, "{c:+}"),
    }
    .expect("write to string");
}

impl fmt::Display for HarmonicForm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "# P(I, phi) = sum_k c_k(I) cos(k phi)")?;
        if self.origin == FormOrigin::Reconstructed {
            writeln!(f, "# reconstructed numerically from the Fock-space oracle")?;
        }
        writeln!(f, "scheme {}", self.scheme)?;
        writeln!(f, "origin {}", self.origin.as_str())?;
        for t in &self.terms {
            let mut line = format!("k={}:", t.order);
            let mut any = false;
            for (p, &c) in t.amplitude_poly.iter().enumerate() {
                if c == 0.0 || dyadic(c) == Some((0, 1)) {
                    continue;
                }
                any = true;
                line.push(' ');
                write_coefficient(&mut line, c);
                match (p % 2, p / 2) {
                    (0, 0) => {}
                    (0, 1) => line.push_str("*I"),
                    (0, q) => write!(line, "*I^{q}").expect("write to string"),
                    (_, _) => write!(line, "*I^{p}/2").expect("write to string"),
                }
            }
            if !any {
                line.push_str(" +0");
            }
            writeln!(f, "{line}")?;
        }
        Ok(())
    }
}

fn parse_number(s: &str) -> Result<f64, String> {
    match s.split_once('/') {
        Some((num, den)) => {
            let num: f64 = num.parse().map_err(|e| format!("bad numerator {num:?}: {e}"))?;
            let den: f64 = den.parse().map_err(|e| format!("bad denominator {den:?}: {e}"))?;
            Ok(num / den)
        }
        None => s.parse().map_err(|e| format!("bad number {s:?}: {e}")),
    }
}

fn parse_term(token: &str) -> Result<(usize, f64), String> {
    let (coef, power) = match token.split_once("*I") {
        None => (token, 0),
        Some((coef, "")) => (coef, 2),
        Some((coef, rest)) => {
            let exp = rest.strip_prefix('^').ok_or_else(|| format!("bad power in {token:?}"))?;
            let twice = match exp.split_once('/') {
                Some((num, "2")) => num.parse::<usize>().map_err(|e| format!("bad power {exp:?}: {e}"))?,
                Some(_) => return Err(format!("only half-integer powers allowed, got {exp:?}")),
                None => 2 * exp.parse::<usize>().map_err(|e| format!("bad power {exp:?}: {e}"))?,
            };
            (coef, twice)
        }
    };
    Ok((power, parse_number(coef.trim_start_matches('+'))?))
}

impl FromStr for HarmonicForm {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let mut scheme = None;
        let mut origin = FormOrigin::ClosedForm;
        let mut terms = Vec::new();
        for (lineno, raw) in s.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let ctx = |e: String| format!("line {}: {e}", lineno + 1);
            if let Some(rest) = line.strip_prefix("scheme ") {
                scheme = Some(rest.parse::<DetectionScheme>().map_err(ctx)?);
            } else if let Some(rest) = line.strip_prefix("origin ") {
                origin = match rest.trim() {
                    "closed-form" => FormOrigin::ClosedForm,
                    "reconstructed" => FormOrigin::Reconstructed,
                    other => return Err(ctx(format!("unknown origin {other:?}"))),
                };
            } else if let Some(rest) = line.strip_prefix("k=") {
                let (order, body) = rest.split_once(':').ok_or_else(|| ctx("missing ':'".into()))?;
                let order: u32 = order.trim().parse().map_err(|e| ctx(format!("bad order: {e}")))?;
                let mut poly = Vec::new();
                for token in body.split_whitespace() {
                    let (p, c) = parse_term(token).map_err(ctx)?;
                    if poly.len() <= p {
                        poly.resize(p + 1, 0.0);
                    }
                    poly[p] += c;
                }
                terms.push(HarmonicTerm { order, amplitude_poly: poly });
            } else {
                return Err(ctx(format!("unrecognized line {line:?}")));
            }
        }
        let scheme = scheme.ok_or("missing scheme line")?;
        Ok(HarmonicForm::new(scheme, origin, terms))
    }
}
