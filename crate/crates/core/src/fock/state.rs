use std::collections::{BTreeMap, HashMap};

use super::circuit::{Complex64, InterferometerCircuit, ModeTransform};
use super::layout::{Channel, ModeLayout, Polarization, Temporal};
use crate::error::{Error, Result, Violation};
use crate::types::DetectionScheme;

/// Norm tolerance checked after every element.
pub const NORM_TOL: f64 = 1e-12;

/// Amplitudes below this are dropped after each transform.
const PRUNE: f64 = 1e-300;

fn factorial(n: u8) -> f64 {
    (1..=n as u32).map(f64::from).product()
}

/// Sparse Fock-basis state over a fixed number of modes.
#[derive(Debug, Clone, PartialEq)]
pub struct FockState {
    modes: usize,
    amplitudes: BTreeMap<Vec<u8>, Complex64>,
}

impl FockState {
    pub fn vacuum(modes: usize) -> Self {
        let mut amplitudes = BTreeMap::new();
        amplitudes.insert(vec![0; modes], Complex64::new(1.0, 0.0));
        Self { modes, amplitudes }
    }

    pub fn modes(&self) -> usize {
        self.modes
    }

    pub fn amplitudes(&self) -> &BTreeMap<Vec<u8>, Complex64> {
        &self.amplitudes
    }

    pub fn amplitude(&self, occupation: &[u8]) -> Complex64 {
        self.amplitudes.get(occupation).copied().unwrap_or_default()
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amplitudes.values().map(|a| a.norm_sqr()).sum()
    }

    pub fn scaled(mut self, factor: f64) -> Self {
        for a in self.amplitudes.values_mut() {
            *a *= factor;
        }
        self
    }

    /// Applies `a_mode†` without normalizing.
    pub fn create(&self, mode: usize) -> Self {
        let amplitudes = self
            .amplitudes
            .iter()
            .map(|(occ, &a)| {
                let mut occ = occ.clone();
                occ[mode] += 1;
                let scale = f64::from(occ[mode]).sqrt();
                (occ, a * scale)
            })
            .collect();
        Self { modes: self.modes, amplitudes }
    }

    /// `(a_H† a_V†)^k / k! |0⟩` in the matched arm modes, the `k`-pair term
    /// of the down-converted field. The `1/k!` weight makes the state
    /// `|k, k⟩` exactly; the norm is checked rather than assumed.
    pub fn build_input(layout: &ModeLayout, pairs: u32) -> Result<Self> {
        if !(1..=3).contains(&pairs) {
            return Err(Error::Invalid(vec![Violation::new("pairs", format!("{pairs} outside 1..=3"))]));
        }
        let h = layout.arm(Polarization::H, Temporal::Matched).expect("arm H");
        let v = layout.arm(Polarization::V, Temporal::Matched).expect("arm V");
        let mut st = Self::vacuum(layout.len());
        for _ in 0..pairs {
            st = st.create(h).create(v);
        }
        let st = st.scaled(1.0 / factorial(pairs as u8));
        let norm = st.norm_sqr();
        if (norm - 1.0).abs() > NORM_TOL {
            return Err(Error::NormDrift { element: format!("{pairs}-pair input"), norm });
        }
        Ok(st)
    }

    /// One `H` photon with its partner blocked.
    pub fn single_photon(layout: &ModeLayout) -> Self {
        let h = layout.arm(Polarization::H, Temporal::Matched).expect("arm H");
        Self::vacuum(layout.len()).create(h)
    }

    /// Substitutes `a_i† → Σ_j M[j,i] a_j†` into every basis state.
    pub fn apply(&self, t: &ModeTransform) -> Self {
        let local = t.modes.len();
        let mut out: HashMap<Vec<u8>, Complex64> = HashMap::new();
        for (occ, &amp) in &self.amplitudes {
            let mut base = occ.clone();
            let mut weight = amp;
            let mut creations = Vec::new();
            for (li, &m) in t.modes.iter().enumerate() {
                weight /= factorial(occ[m]).sqrt();
                creations.extend(std::iter::repeat(li).take(occ[m] as usize));
                base[m] = 0;
            }
            // Polynomial in the touched creation operators, keyed by local occupation.
            let mut poly: HashMap<Vec<u8>, Complex64> = HashMap::new();
            poly.insert(vec![0; local], weight);
            for &li in &creations {
                let mut next: HashMap<Vec<u8>, Complex64> = HashMap::with_capacity(poly.len() * local);
                for (mono, c) in &poly {
                    for lj in 0..local {
                        let u = t.matrix[(lj, li)];
                        if u.norm_sqr() == 0.0 {
                            continue;
                        }
                        let mut m = mono.clone();
                        m[lj] += 1;
                        *next.entry(m).or_default() += c * u;
                    }
                }
                poly = next;
            }
            for (mono, c) in poly {
                let mut full = base.clone();
                let mut scale = 1.0;
                for (lj, &m) in t.modes.iter().enumerate() {
                    full[m] = mono[lj];
                    scale *= factorial(mono[lj]);
                }
                *out.entry(full).or_default() += c * scale.sqrt();
            }
        }
        let amplitudes = out.into_iter().filter(|(_, a)| a.norm_sqr() > PRUNE).collect();
        Self { modes: self.modes, amplitudes }
    }

    /// Runs the circuit; norm is checked after every element.
    pub fn evolve(&self, circuit: &InterferometerCircuit) -> Result<Self> {
        if self.modes != circuit.layout.len() {
            return Err(Error::DimensionMismatch { state: self.modes, circuit: circuit.layout.len() });
        }
        let mut st = self.clone();
        for (element, t) in circuit.transforms()? {
            st = st.apply(&t);
            let norm = st.norm_sqr();
            if (norm - 1.0).abs() > NORM_TOL {
                return Err(Error::NormDrift { element: element.to_string(), norm });
            }
        }
        Ok(st)
    }

    /// Sum of `|amplitude|²` over basis states accepted by `pred`.
    pub fn probability_where<F: Fn(&[u8]) -> bool>(&self, pred: F) -> f64 {
        self.amplitudes.iter().filter(|(occ, _)| pred(occ)).map(|(_, a)| a.norm_sqr()).sum()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DetectionModel {
    /// Lossless on/off detectors on the splitter-tree ports.
    Threshold,
    /// Exact photon numbers per channel, ignoring the splitter trees.
    NumberResolving,
}

/// Probability that `scheme` registers on an evolved state.
pub fn click_probability(state: &FockState, layout: &ModeLayout, scheme: DetectionScheme, model: DetectionModel) -> Result<f64> {
    if state.modes() != layout.len() {
        return Err(Error::DimensionMismatch { state: state.modes(), circuit: layout.len() });
    }
    match model {
        DetectionModel::Threshold => {
            let detectors = layout.detectors(scheme).ok_or_else(|| Error::UnsupportedScheme {
                scheme,
                reason: "layout has fewer output ports than detectors".into(),
            })?;
            let groups: Vec<Vec<usize>> = detectors.iter().map(|&(c, p)| layout.detector_modes(c, p)).collect();
            Ok(state.probability_where(|occ| groups.iter().all(|g| g.iter().any(|&k| occ[k] > 0))))
        }
        DetectionModel::NumberResolving => {
            let channel_modes = |c: Channel| -> Vec<usize> {
                (0..layout.ports(c)).flat_map(|p| layout.detector_modes(c, p)).collect()
            };
            let (c1, c2) = (channel_modes(Channel::One), channel_modes(Channel::Two));
            let count = |occ: &[u8], ks: &[usize]| ks.iter().map(|&k| occ[k] as u32).sum::<u32>();
            Ok(state.probability_where(|occ| count(occ, &c1) == scheme.m && count(occ, &c2) == scheme.n))
        }
    }
}
