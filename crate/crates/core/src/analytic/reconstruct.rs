//! Exact reconstruction of harmonic forms from oracle evaluations.
//!
//! The ansatz fixes which harmonics appear and the polynomial degree in `I`
//! of their coefficients. Unknowns are determined by a square linear solve on
//! a tensor grid of Chebyshev nodes in `I` and in the reduced phase, then the
//! fitted form is checked against the oracle on an independent grid.

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use nalgebra::{DMatrix, DVector};

use super::harmonic::{FormOrigin, HarmonicForm, HarmonicTerm};
use crate::error::{Error, Result};
use crate::fock;
use crate::types::DetectionScheme;

/// Maximum absolute deviation allowed between a fitted form and the oracle.
pub const FIT_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Ansatz {
    /// Harmonic orders `k` of `cos(kφ)`.
    pub orders: Vec<u32>,
    /// Degree of each coefficient as a polynomial in `I`.
    pub degree: u32,
}

impl Ansatz {
    /// Even cosines up to `6φ` with cubic coefficients: the structure a
    /// three-pair interferometer admits.
    pub fn six_photon() -> Self {
        Self { orders: vec![0, 2, 4, 6], degree: 3 }
    }
}

fn gcd(a: u32, b: u32) -> u32 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

fn verification_grid() -> (Vec<f64>, Vec<f64>) {
    let is: Vec<f64> = [0.0, 0.07, 0.19, 0.33, 0.41, 0.58, 0.66, 0.83, 0.95, 1.0].to_vec();
    let phis = (0..=24).map(|k| k as f64 * std::f64::consts::PI / 12.0 + 0.013).collect();
    (is, phis)
}

/// Fits `ansatz` to `oracle(I, φ)` and verifies the result.
pub fn fit_form<F>(scheme: DetectionScheme, ansatz: &Ansatz, oracle: F) -> Result<HarmonicForm>
where
    F: Fn(f64, f64) -> Result<f64>,
{
    let orders = &ansatz.orders;
    let h = orders.len();
    let d = ansatz.degree as usize + 1;
    let g = orders.iter().fold(0, |acc, &k| gcd(acc, k)).max(1);

    let i_nodes: Vec<f64> = (0..d)
        .map(|j| 0.5 * (1.0 - ((j as f64 + 0.5) * std::f64::consts::PI / d as f64).cos()))
        .collect();
    let phi_nodes: Vec<f64> = (0..h)
        .map(|j| (j as f64 + 0.5) * std::f64::consts::PI / (h as f64 * g as f64))
        .collect();

    let unknowns = h * d;
    let mut design = DMatrix::<f64>::zeros(unknowns, unknowns);
    let mut rhs = DVector::<f64>::zeros(unknowns);
    for (a, &i) in i_nodes.iter().enumerate() {
        for (b, &phi) in phi_nodes.iter().enumerate() {
            let row = a * h + b;
            rhs[row] = oracle(i, phi)?;
            for (ki, &k) in orders.iter().enumerate() {
                let c = (k as f64 * phi).cos();
                for p in 0..d {
                    design[(row, ki * d + p)] = c * i.powi(p as i32);
                }
            }
        }
    }
    let solution = design.lu().solve(&rhs).ok_or(Error::SingularFit(scheme))?;

    let terms = orders
        .iter()
        .enumerate()
        .map(|(ki, &k)| HarmonicTerm::in_i(k, &solution.as_slice()[ki * d..(ki + 1) * d]))
        .collect();
    let form = HarmonicForm::new(scheme, FormOrigin::Reconstructed, terms);

    let (is, phis) = verification_grid();
    let mut residual: f64 = 0.0;
    for &i in &is {
        for &phi in &phis {
            residual = residual.max((form.evaluate(i, phi) - oracle(i, phi)?).abs());
        }
    }
    if residual > FIT_TOLERANCE {
        return Err(Error::FitResidual { scheme, residual, tolerance: FIT_TOLERANCE });
    }
    Ok(form)
}

type CacheKey = (DetectionScheme, Ansatz);

fn cache() -> &'static Mutex<HashMap<CacheKey, Arc<HarmonicForm>>> {
    static CACHE: OnceLock<Mutex<HashMap<CacheKey, Arc<HarmonicForm>>>> = OnceLock::new();
    CACHE.get_or_init(Default::default)
}

/// Reconstructed form for a six-photon split, derived once per process.
pub fn six_photon_form(scheme: DetectionScheme) -> Result<Arc<HarmonicForm>> {
    if scheme.photons() != 6 {
        return Err(Error::UnsupportedScheme { scheme, reason: "six-photon reconstruction needs m + n = 6".into() });
    }
    let key = (scheme, Ansatz::six_photon());
    let mut guard = cache().lock().expect("form cache poisoned");
    if let Some(hit) = guard.get(&key) {
        return Ok(Arc::clone(hit));
    }
    let form = Arc::new(fit_form(scheme, &key.1, |i, phi| fock::oracle_probability(scheme, i, phi))?);
    guard.insert(key, Arc::clone(&form));
    Ok(form)
}
