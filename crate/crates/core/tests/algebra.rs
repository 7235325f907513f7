use proptest::prelude::*;
use qdiff_core::decoder::{decode, mle_initial_state, InitialEstimate};
use qdiff_core::ensembles::{random_mixed, random_pure, SourceEnsemble};
use qdiff_core::forward::simulate_member;
use qdiff_core::pauli::{self, multiply, PauliString, PauliVector};
use qdiff_core::rng::stream;
use qdiff_core::states::{fidelity, trace_distance_pure, DensityMatrix};
use qdiff_core::{Pauli, SchedulePolicy};

fn string_strategy(n: usize) -> impl Strategy<Value = PauliString> {
    prop::collection::vec(0usize..4, n).prop_map(|digits| {
        let axes: Vec<Pauli> = digits.into_iter().map(|d| Pauli::ALL[d]).collect();
        PauliString::from_axes(&axes)
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn products_match_dense_matrices(a in string_strategy(3), b in string_strategy(3)) {
        let ab = multiply(&a, &b).unwrap();
        prop_assert!((ab.matrix() - a.matrix() * b.matrix()).norm() < 1e-14);
    }

    #[test]
    fn commutation_matches_dense_check(a in string_strategy(3), b in string_strategy(3)) {
        let comm = a.matrix() * b.matrix() - b.matrix() * a.matrix();
        prop_assert_eq!(a.commutes_with(&b), comm.norm() < 1e-12);
    }

    #[test]
    fn labels_round_trip(a in string_strategy(4)) {
        prop_assert_eq!(PauliString::parse(&a.label()).unwrap(), a);
    }

    #[test]
    fn expansion_round_trips(seed in any::<u64>()) {
        let rho = random_mixed(2, &mut stream(seed, 0));
        let z = PauliVector::expand(&rho).unwrap();
        prop_assert!((z.contract() - &rho).norm() < 1e-13);
        prop_assert!((z.get(&PauliString::identity(2)) - 1.0).abs() < 1e-13);
    }

    #[test]
    fn fidelity_is_symmetric_and_bounded(s1 in any::<u64>(), s2 in any::<u64>()) {
        let a = DensityMatrix::new(random_mixed(2, &mut stream(s1, 0))).unwrap();
        let b = DensityMatrix::new(random_mixed(2, &mut stream(s2, 0))).unwrap();
        let ab = fidelity(&a, &b).unwrap();
        prop_assert!((ab - fidelity(&b, &a).unwrap()).abs() < 1e-8);
        prop_assert!((0.0..=1.0).contains(&ab));
        prop_assert!((fidelity(&a, &a).unwrap() - 1.0).abs() < 1e-8);
    }

    #[test]
    fn decoded_series_reproduces_simulated_states(seed in any::<u64>()) {
        let psi = random_pure(2, &mut stream(seed, 0));
        let policy = SchedulePolicy::uniform(seed);
        let mut rng = stream(seed, 1);
        let (states, record) =
            qdiff_core::forward::simulate_with_states(&psi, &policy, 1.0, 0.01, 50, &mut rng).unwrap();
        let decoded = decode(&record, InitialEstimate::Known, &psi, 2).unwrap();
        for (a, b) in decoded.states.iter().zip(&states) {
            prop_assert!(trace_distance_pure(a, b).unwrap() < 1e-6);
        }
    }
}

#[test]
fn all_strings_are_enumerated_once() {
    let all = pauli::enumerate_all(3).unwrap();
    assert_eq!(all.len(), 64);
    let mut sorted = all.clone();
    sorted.sort();
    sorted.dedup();
    assert_eq!(sorted.len(), 64);
    assert_eq!(pauli::strings_up_to_weight(3, 2).len(), 9 + 27);
}

#[test]
fn maximum_likelihood_estimate_converges_with_record_length() {
    let source = SourceEnsemble::near_zero(1, 0.2);
    let policy = SchedulePolicy::uniform(2);
    let mut short = 0.0;
    let mut long = 0.0;
    for id in 0..200u64 {
        let psi = source.sample(&mut stream(5, id)).unwrap();
        for (steps, acc) in [(50usize, &mut short), (1000, &mut long)] {
            let (_, record) = simulate_member(&psi, &policy, 1.0, 0.01, steps, id).unwrap();
            let est = mle_initial_state(&record).unwrap();
            *acc += psi.overlap(&est.state).norm_sqr() / 200.0;
        }
    }
    assert!(long > short, "{short} {long}");
}
