use std::f64::consts::TAU;

use noon_core::analysis::visibility;
use noon_core::analytic::{self, closed_form};
use noon_core::fock::{Channel, Element, ModeLayout, TemporalModes};
use noon_core::gaussian::{multipair_pattern, GaussianState, MultipairModel, Operation};
use noon_core::{validate, DetectionScheme, ScanConfig, SourceSpec};
use proptest::prelude::*;

fn s(m: u32, n: u32) -> DetectionScheme {
    DetectionScheme::new(m, n)
}

fn pair_schemes() -> Vec<DetectionScheme> {
    DetectionScheme::reference_set().into_iter().filter(|x| x.photons() > 1).collect()
}

#[test]
fn zero_phase_is_identity() {
    let layout = ModeLayout::for_scheme(s(1, 1), TemporalModes::Single);
    let mut st = GaussianState::squeezed_source(layout.clone(), 0.3).unwrap();
    let before = st.covariance();
    st.apply(&Operation::Linear(Element::Phase(0.0))).unwrap();
    assert!((st.covariance() - before).amax() < 1e-15);
}

#[test]
fn full_loss_leaves_vacuum() {
    let layout = ModeLayout::for_scheme(s(2, 2), TemporalModes::Pair);
    let mut st = GaussianState::squeezed_source(layout.clone(), 0.5).unwrap();
    for mode in 0..layout.len() {
        st.apply(&Operation::Loss { mode, eta: 0.0 }).unwrap();
    }
    assert!(st.excess().amax() < 1e-15);
    assert!((st.purity() - 1.0).abs() < 1e-12);
}

#[test]
fn passive_circuit_preserves_photon_number() {
    let model = MultipairModel::new(s(3, 3), 0.2, 1.0, 0.0);
    let (st, _) = model.state(0.6, 1.1, TemporalModes::Pair).unwrap();
    let total: f64 = (0..st.layout().len()).map(|k| st.mean_photons(k)).sum();
    assert!((total - 0.4).abs() < 1e-12, "{total}");
    st.check_physical().unwrap();
}

#[test]
fn dark_limits() {
    for scheme in pair_schemes() {
        let p = MultipairModel::new(scheme, 0.0, 0.5, 0.0).probability(1.0, 0.4, TemporalModes::Single).unwrap();
        assert!(p.abs() < 1e-300, "{scheme}");
        let p = MultipairModel::new(scheme, 0.1, 0.0, 0.0).probability(1.0, 0.4, TemporalModes::Single).unwrap();
        assert!(p.abs() < 1e-300, "{scheme}");
        let dc = 1e-2;
        let p = MultipairModel::new(scheme, 0.0, 0.5, dc).probability(1.0, 0.4, TemporalModes::Single).unwrap();
        let want = dc.powi(scheme.photons() as i32);
        assert!(((p - want) / want).abs() < 1e-12, "{scheme}: {p:e}");
    }
}

#[test]
fn matches_high_precision_reference() {
    // 50-digit evaluation of the same vacuum-projection sum.
    let p = MultipairModel::new(s(4, 2), 1e-4, 0.2, 0.0).probability(1.0, 0.3, TemporalModes::Single).unwrap();
    let want = 6.251906472423679e-19;
    assert!(((p - want) / want).abs() < 1e-12, "{p:e}");
}

#[test]
fn low_gain_shape_follows_closed_forms() {
    let (mu, eta) = (1e-3, 1.0);
    for scheme in DetectionScheme::reference_set().into_iter().filter(|x| (2..=4).contains(&x.photons())) {
        let model = MultipairModel::new(scheme, mu, eta, 0.0);
        let phis: Vec<f64> = (0..24).map(|k| TAU * k as f64 / 24.0).collect();
        let g: Vec<f64> = phis.iter().map(|&p| model.probability(1.0, p, TemporalModes::Single).unwrap()).collect();
        let a: Vec<f64> = phis.iter().map(|&p| closed_form(scheme, 1.0, p).unwrap()).collect();
        let (gm, am) = (g.iter().cloned().fold(0.0, f64::max), a.iter().cloned().fold(0.0, f64::max));
        for (x, y) in g.iter().zip(&a) {
            assert!((x / gm - y / am).abs() <= 0.02, "{scheme}: {} vs {}", x / gm, y / am);
        }
    }
}

#[test]
fn two_photon_fringe_visibility_survives_modest_gain() {
    let spec = SourceSpec::telecom().with_mu(0.01);
    let scan = ScanConfig::fine_default().with_detectors(0.2, 0.0);
    let bundle = validate(spec, s(1, 1), scan).unwrap();
    let v = visibility(&multipair_pattern(&bundle).unwrap()).unwrap();
    let want = analytic::form(s(1, 1)).unwrap().visibility(1.0);
    assert!((v - want).abs() <= 0.02, "{v}");
}

#[test]
fn detector_bank_covers_tree_outputs() {
    let model = MultipairModel::new(s(4, 2), 0.1, 0.5, 0.0);
    let (st, bank) = model.state(1.0, 0.0, TemporalModes::Single).unwrap();
    assert_eq!(bank.len(), 6);
    assert_eq!(st.layout().ports(Channel::Two), 2);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn probability_in_unit_interval(mu in 0.0f64..2.0, eta in 0.0f64..=1.0, dc in 0.0f64..0.5, phi in -TAU..TAU, idx in 0usize..9) {
        let scheme = pair_schemes()[idx];
        let p = MultipairModel::new(scheme, mu, eta, dc).probability(1.0, phi, TemporalModes::Single).unwrap();
        prop_assert!((0.0..=1.0).contains(&p));
    }

    #[test]
    fn dark_counts_never_lower_coincidences(mu in 1e-3f64..0.5, eta in 0.05f64..=1.0, dc in 0.0f64..0.1, extra in 1e-4f64..0.1, phi in -TAU..TAU, idx in 0usize..9) {
        let scheme = pair_schemes()[idx];
        let a = MultipairModel::new(scheme, mu, eta, dc).probability(1.0, phi, TemporalModes::Single).unwrap();
        let b = MultipairModel::new(scheme, mu, eta, dc + extra).probability(1.0, phi, TemporalModes::Single).unwrap();
        prop_assert!(b >= a * (1.0 - 1e-9));
    }

    #[test]
    fn efficiency_never_lowers_coincidences(mu in 1e-3f64..0.5, eta in 0.05f64..0.9, extra in 0.01f64..0.1, phi in -TAU..TAU, idx in 0usize..9) {
        let scheme = pair_schemes()[idx];
        let a = MultipairModel::new(scheme, mu, eta, 0.0).probability(1.0, phi, TemporalModes::Single).unwrap();
        let b = MultipairModel::new(scheme, mu, eta + extra, 0.0).probability(1.0, phi, TemporalModes::Single).unwrap();
        prop_assert!(b >= a * (1.0 - 1e-9));
    }

    #[test]
    fn matched_layouts_agree_at_full_overlap(mu in 1e-3f64..0.5, eta in 0.1f64..=1.0, dc in 0.0f64..0.05, phi in -TAU..TAU, idx in 0usize..9) {
        let model = MultipairModel::new(pair_schemes()[idx], mu, eta, dc);
        let a = model.probability(1.0, phi, TemporalModes::Single).unwrap();
        let b = model.probability(1.0, phi, TemporalModes::Pair).unwrap();
        prop_assert!((a - b).abs() <= 1e-10 * a.max(1e-300) + 1e-300);
    }
}
