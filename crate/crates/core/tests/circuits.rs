use std::f64::consts::PI;

use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use w_expander::bounds;
use w_expander::circuit::{
    build_hm, build_lossy, build_optimal, compile, extract_coefficients, CircuitSpec,
    CompiledCircuit, Element,
};
use w_expander::expansion::{
    eta_closed_form, eta_via_engine, verify_exact_w, Condition, WExpansionProblem,
};
use w_expander::fock::{check_unitary, ModeUnitary, Polarization};

const WIDTH: usize = 4;

fn element() -> impl Strategy<Value = Element> {
    let pair = (1..=WIDTH, 1..=WIDTH).prop_filter("distinct modes", |(a, b)| a != b);
    prop_oneof![
        (pair.clone(), 0.0..=1.0f64, 0.0..=1.0f64).prop_map(|(modes, t_h, t_v)| Element::Pdbs {
            modes,
            t_h,
            t_v
        }),
        (pair, 0.0..=1.0f64).prop_map(|(modes, t)| Element::Bs { modes, t }),
        (
            1..=WIDTH,
            0.0..2.0 * PI,
            prop::option::of(prop_oneof![Just(Polarization::H), Just(Polarization::V)])
        )
            .prop_map(|(mode, phase, polarization)| Element::PhaseShifter {
                mode,
                phase,
                polarization
            }),
        (1..=WIDTH, -PI..PI).prop_map(|(mode, theta)| Element::rotation(mode, theta)),
    ]
}

fn lossless_spec(elements: Vec<Element>) -> CircuitSpec {
    CircuitSpec {
        n: 2,
        width: WIDTH,
        elements,
        output_modes: vec![1, 3, 4],
        label: "random".into(),
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(96))]

    #[test]
    fn compiled_circuits_are_unitary(elements in prop::collection::vec(element(), 0..12), loss in prop::option::of((1..=WIDTH, 0.0..=1.0f64, 0.0..=1.0f64))) {
        let mut spec = lossless_spec(elements);
        if let Some((mode, t_h, t_v)) = loss {
            spec.elements.push(Element::Loss { mode, t_h, t_v });
        }
        let c = compile(&spec).unwrap();
        prop_assert_eq!(c.spatial_modes, WIDTH + spec.loss_count());
        prop_assert!(check_unitary(&c.unitary, 1e-12).is_empty());
    }

    #[test]
    fn compilation_is_a_homomorphism(a in prop::collection::vec(element(), 0..8), b in prop::collection::vec(element(), 0..8)) {
        let first = compile(&lossless_spec(a.clone())).unwrap();
        let second = compile(&lossless_spec(b.clone())).unwrap();
        let mut joined = a;
        joined.extend(b);
        let whole = compile(&lossless_spec(joined)).unwrap();
        let product = second.unitary.after(&first.unitary).unwrap();
        let diff = (whole.unitary.matrix() - product.matrix()).iter().map(|z| z.norm()).fold(0.0, f64::max);
        prop_assert!(diff < 1e-12);
    }

    #[test]
    fn json_round_trip(elements in prop::collection::vec(element(), 0..10)) {
        let spec = lossless_spec(elements);
        let back = CircuitSpec::from_json(&spec.to_json()).unwrap();
        prop_assert_eq!(back, spec);
    }
}

fn random_circuit(n: usize, rng: &mut ChaCha8Rng) -> CompiledCircuit {
    let u = ModeUnitary::haar_random(n + 2, rng);
    CompiledCircuit::from_unitary(n, u, (1..=n + 1).collect()).unwrap()
}

#[test]
fn closed_form_matches_engine_on_random_unitaries() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for n in 1..=4 {
        for _ in 0..50 {
            let c = random_circuit(n, &mut rng);
            let closed = eta_closed_form(&extract_coefficients(&c), n);
            let engine = eta_via_engine(&c);
            assert!(closed.max_deviation(&engine) < 1e-12, "n = {n}");
        }
    }
}

#[test]
fn random_unitaries_are_not_expanders() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    for n in 1..=3 {
        let c = random_circuit(n, &mut rng);
        let r = verify_exact_w(&WExpansionProblem::new(2, c).unwrap(), 1e-10).unwrap();
        assert!(!r.exact_w);
        assert_eq!(r.p_suc, 0.0);
        assert!(!r.violations.is_empty());
    }
}

#[test]
fn builders_reach_their_bounds() {
    for n in 1..=5 {
        for w in [2, 3, 7] {
            let pre = bounds::success_prefactor(n, w).unwrap();
            let mut cases = vec![
                (build_optimal(n).unwrap(), bounds::p_max(n, w).unwrap()),
                (build_lossy(n).unwrap(), bounds::p_lossy(n, w).unwrap()),
            ];
            for m in 1..=n {
                cases.push((build_hm(n, m).unwrap(), pre * bounds::h_m(n, m).unwrap()));
            }
            for (spec, target) in cases {
                let r = verify_exact_w(
                    &WExpansionProblem::new(w, compile(&spec).unwrap()).unwrap(),
                    1e-10,
                )
                .unwrap();
                assert!(r.exact_w, "{}: {:?}", spec.label, r.worst_violation());
                assert!(
                    (r.p_suc - target).abs() < 1e-12,
                    "{}: {} vs {target}",
                    spec.label,
                    r.p_suc
                );
                for i in 0..=n {
                    assert!((r.p_suc_from_eta_i(i).unwrap() - r.p_suc).abs() < 1e-12);
                }
            }
        }
    }
}

#[test]
fn couplings_of_builders_match_bound_points() {
    let n = 4;
    for m in 1..=n {
        let k = extract_coefficients(&compile(&build_hm(n, m).unwrap()).unwrap());
        let p = bounds::DistributionVector::new(k.couplings()).unwrap();
        assert!((p.sum() - 1.0).abs() < 1e-12);
        assert!((bounds::h_of(&p) - bounds::h_m(n, m).unwrap()).abs() < 1e-12);
    }
    let k = extract_coefficients(&compile(&build_lossy(n).unwrap()).unwrap());
    let p = bounds::DistributionVector::new(k.couplings()).unwrap();
    assert!((p.sum() - (1.0 - 1.0 / 25.0)).abs() < 1e-12);
}

#[test]
fn balanced_splitter_is_rejected() {
    let spec = CircuitSpec {
        n: 1,
        width: 2,
        elements: vec![Element::Pdbs {
            modes: (1, 2),
            t_h: 0.5,
            t_v: 0.5,
        }],
        output_modes: vec![1, 2],
        label: "50/50".into(),
    };
    let r = verify_exact_w(
        &WExpansionProblem::new(2, compile(&spec).unwrap()).unwrap(),
        1e-10,
    )
    .unwrap();
    assert!(!r.exact_w);
    // HOM: the H pair never separates, so eta_0 vanishes
    assert!(r.eta.eta0.norm() < 1e-15);
    assert!(r
        .violations
        .iter()
        .any(|v| v.condition == Condition::ZeroSuccess));
}

#[test]
fn dropping_the_phase_breaks_the_optimal_circuit() {
    let mut spec = build_optimal(2).unwrap();
    spec.elements
        .retain(|e| !matches!(e, Element::PhaseShifter { .. }));
    let r = verify_exact_w(
        &WExpansionProblem::new(2, compile(&spec).unwrap()).unwrap(),
        1e-10,
    )
    .unwrap();
    assert!(!r.exact_w);
    assert!(r
        .violations
        .iter()
        .any(|v| v.condition == Condition::EtaMismatch));
}

#[test]
fn polarization_independent_loss_and_phase_preserve_exactness() {
    let mut spec = build_optimal(3).unwrap();
    let base = verify_exact_w(
        &WExpansionProblem::new(3, compile(&spec).unwrap()).unwrap(),
        1e-10,
    )
    .unwrap();
    spec.elements.push(Element::Loss {
        mode: 3,
        t_h: 0.5,
        t_v: 0.5,
    });
    spec.elements.push(Element::PhaseShifter {
        mode: 2,
        phase: 1.0,
        polarization: None,
    });
    let r = verify_exact_w(
        &WExpansionProblem::new(3, compile(&spec).unwrap()).unwrap(),
        1e-10,
    )
    .unwrap();
    assert!(r.exact_w);
    assert!((r.p_suc - 0.5 * base.p_suc).abs() < 1e-12);
}
