//! Exact Fock-space simulation of the interferometer for a fixed photon number.
//!
//! Each polarization arm carries a matched and an orthogonal temporal mode;
//! the delay moves a fraction `1 − I` of the `V` amplitude into the
//! orthogonal mode. Probabilities are computed for threshold detectors on
//! balanced splitter trees and normalized by the tree registration
//! efficiency, which recovers the channel-level photon-number probability.

mod circuit;
mod layout;
mod state;

pub use circuit::{Complex64, Element, InterferometerCircuit, ModeTransform, UNITARITY_TOL};
pub use layout::{Channel, Mode, ModeLayout, Polarization, Spatial, Temporal, TemporalModes};
pub use state::{click_probability, DetectionModel, FockState, NORM_TOL};

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::analytic::indistinguishability;
use crate::types::{DetectionScheme, PatternScan, ScanMode, ScanPoint, Validated, DEFAULT_MAX_PHOTONS};

fn input_state(scheme: DetectionScheme, layout: &ModeLayout) -> Result<FockState> {
    if scheme.photons() == 1 {
        Ok(FockState::single_photon(layout))
    } else {
        FockState::build_input(layout, scheme.pairs())
    }
}

/// Evolved output state of the interferometer for `scheme`'s photon number.
pub fn output_state(scheme: DetectionScheme, i: f64, phi: f64) -> Result<(FockState, ModeLayout)> {
    scheme.check(DEFAULT_MAX_PHOTONS)?;
    let circuit = InterferometerCircuit::noon(scheme, i, phi, TemporalModes::Pair);
    let st = input_state(scheme, &circuit.layout)?.evolve(&circuit)?;
    Ok((st, circuit.layout))
}

/// Probability that `m` photons entering channel 1 and `n` entering channel 2
/// fire every detector of the splitter trees: `m!/m^m · n!/n^n`, obtained by
/// propagating the photons through the trees.
pub fn registration_efficiency(scheme: DetectionScheme) -> Result<f64> {
    let layout = ModeLayout::for_scheme(scheme, TemporalModes::Single);
    let mut st = FockState::vacuum(layout.len());
    for (ch, count) in [(Channel::One, scheme.m), (Channel::Two, scheme.n)] {
        let port = layout.output(ch, 0, Temporal::Matched).expect("port 0");
        for _ in 0..count {
            st = st.create(port);
        }
    }
    let norm = st.norm_sqr().sqrt();
    let st = st.scaled(1.0 / norm);
    let circuit = InterferometerCircuit {
        layout: layout.clone(),
        elements: vec![Element::SplitterTree(Channel::One), Element::SplitterTree(Channel::Two)],
    };
    let out = st.evolve(&circuit)?;
    click_probability(&out, &layout, scheme, DetectionModel::Threshold)
}

/// Threshold coincidence probability on the splitter trees, unnormalized.
pub fn click_rate(scheme: DetectionScheme, i: f64, phi: f64) -> Result<f64> {
    let (st, layout) = output_state(scheme, i, phi)?;
    click_probability(&st, &layout, scheme, DetectionModel::Threshold)
}

/// Oracle value comparable with the analytic probability `P_mn(I, φ)`.
pub fn oracle_probability(scheme: DetectionScheme, i: f64, phi: f64) -> Result<f64> {
    if !matches!(scheme.photons(), 1 | 2 | 4 | 6) {
        return Err(Error::UnsupportedScheme { scheme, reason: "oracle covers N = 1, 2, 4, 6".into() });
    }
    Ok(click_rate(scheme, i, phi)? / registration_efficiency(scheme)?)
}

/// Oracle evaluation over a scan grid, with the conventions of
/// [`crate::analytic::pattern`].
pub fn oracle_pattern(bundle: &Validated) -> Result<PatternScan> {
    let Validated { spec, scheme, scan } = *bundle;
    let reg = registration_efficiency(scheme)?;
    oracle_probability(scheme, 1.0, 0.0)?;
    let points = scan
        .grid()
        .par_iter()
        .map(|&x| {
            let (tau, phi) = scan.delay_and_phase(x, spec.omega0);
            let i = match scan.mode {
                ScanMode::CoarsePath => indistinguishability(tau, spec.delta_omega),
                ScanMode::FinePhase => 1.0,
            };
            let p = click_rate(scheme, i, phi)? / reg;
            Ok(ScanPoint { delay: scan.recorded_delay(x), probability: p.clamp(0.0, 1.0), counts: None })
        })
        .collect::<Result<Vec<_>>>()?;
    PatternScan::new(scheme, scan.mode.delay_unit(), points)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OracleSample {
    pub scheme: DetectionScheme,
    pub indistinguishability: f64,
    pub phase: f64,
    pub probability: f64,
}

/// Oracle values on the tensor grid `schemes × is × phis`.
pub fn oracle_grid(schemes: &[DetectionScheme], is: &[f64], phis: &[f64]) -> Result<Vec<OracleSample>> {
    let jobs: Vec<(DetectionScheme, f64, f64)> = schemes
        .iter()
        .flat_map(|&s| is.iter().flat_map(move |&i| phis.iter().map(move |&p| (s, i, p))))
        .collect();
    jobs.par_iter()
        .map(|&(scheme, i, phase)| {
            Ok(OracleSample { scheme, indistinguishability: i, phase, probability: oracle_probability(scheme, i, phase)? })
        })
        .collect()
}
