use proptest::prelude::*;
use qdiff_core::ensembles::random_pure;
use qdiff_core::linalg::{self, CMat};
use qdiff_core::pauli::{self, PauliVector};
use qdiff_core::reverse_learn::*;
use qdiff_core::rng::stream;
use qdiff_core::states::trace_distance_pure;
use qdiff_core::PureState;
use rand::Rng;

fn random_eta(n: usize, scale: f64, rng: &mut impl Rng) -> PauliVector {
    let mut eta = PauliVector::new(n);
    for p in pauli::strings_up_to_weight(n, n) {
        eta.set(p, scale * (2.0 * rng.random::<f64>() - 1.0));
    }
    eta
}

fn expectations(psi: &PureState) -> PauliVector {
    let n = psi.n();
    let mut strings = vec![qdiff_core::PauliString::identity(n)];
    strings.extend(pauli::strings_up_to_weight(n, n));
    PauliVector::from_state(psi.as_slice(), &strings).unwrap()
}

#[test]
fn commutator_identity_holds_on_random_instances() {
    let mut rng = stream(11, 0);
    for i in 0..100 {
        let n = 1 + i % 2;
        let eta = random_eta(n, 1.0, &mut rng);
        let z = expectations(&random_pure(n, &mut rng));
        let rho = z.contract();
        let h = hamiltonian(&eta);
        let direct = (&h * &rho - &rho * &h) * (-linalg::I);
        let via_coefficients = score_from_hamiltonian(&eta, &z).unwrap().contract();
        let err = linalg::frobenius_sq(&(direct - via_coefficients)).sqrt();
        assert!(err < 1e-10, "instance {i}: {err}");
    }
}

#[test]
fn frobenius_form_equals_infidelity() {
    let mut rng = stream(12, 0);
    for _ in 0..100 {
        let n = 2;
        let v = linalg::expm_i_hermitian(&hamiltonian(&random_eta(n, 1.0, &mut rng)), 0.3);
        let a = random_pure(n, &mut rng);
        let b = random_pure(n, &mut rng);
        assert!((infidelity(&v, &a, &b) - frobenius_loss(&v, &a, &b)).abs() < 1e-12);
    }
}

#[test]
fn linearization_remainder_is_second_order() {
    let mut rng = stream(13, 0);
    let eta = random_eta(2, 1.0, &mut rng);
    let z = expectations(&random_pure(2, &mut rng));
    let dts: [f64; 5] = [1e-2, 3e-3, 1e-3, 3e-4, 1e-4];
    let pts: Vec<(f64, f64)> =
        dts.iter().map(|&dt| (dt.ln(), linearization_residual(&eta, &z, dt).unwrap().ln())).collect();
    let m = pts.len() as f64;
    let (sx, sy) = pts.iter().fold((0.0, 0.0), |(a, b), (x, y)| (a + x, b + y));
    let (mx, my) = (sx / m, sy / m);
    let slope = pts.iter().map(|(x, y)| (x - mx) * (y - my)).sum::<f64>()
        / pts.iter().map(|(x, _)| (x - mx) * (x - mx)).sum::<f64>();
    assert!((slope - 2.0).abs() < 0.2, "slope {slope}");
}

#[test]
fn pair_gradient_matches_finite_differences() {
    let mut rng = stream(14, 0);
    let n = 2;
    let strings = pauli::strings_up_to_weight(n, 2);
    let basis: Vec<CMat> = strings.iter().map(|p| p.matrix()).collect();
    let eta: Vec<f64> = (0..basis.len()).map(|_| rng.random::<f64>() - 0.5).collect();
    let a = random_pure(n, &mut rng);
    let b = random_pure(n, &mut rng);
    let dt = 0.7;
    let (_, grad) = pair_loss_grad(&eta, &basis, a.as_slice(), b.as_slice(), dt);
    let h = 1e-6;
    for j in 0..eta.len() {
        let mut up = eta.clone();
        let mut dn = eta.clone();
        up[j] += h;
        dn[j] -= h;
        let fd = (pair_loss_grad(&up, &basis, a.as_slice(), b.as_slice(), dt).0
            - pair_loss_grad(&dn, &basis, a.as_slice(), b.as_slice(), dt).0)
            / (2.0 * h);
        assert!((fd - grad[j]).abs() < 1e-7, "component {j}: {fd} vs {}", grad[j]);
    }
}

#[test]
fn model_gradient_matches_finite_differences() {
    let mut rng = stream(15, 0);
    let n = 2;
    let mut model = ControlModel::new(n, 0.05, 1.0, 6, 2, 3);
    for v in model.theta.iter_mut() {
        *v += 0.3 * (rng.random::<f64>() - 0.5);
    }
    let batch: Vec<TrainingPair> = (0..4)
        .map(|k| {
            let psi_next = random_pure(n, &mut rng);
            TrainingPair {
                z_next: expectations(&psi_next),
                psi_t: random_pure(n, &mut rng),
                psi_next,
                t: 0.1 * k as f64,
            }
        })
        .collect();
    let (_, grad) = loss_gradient(&model, &batch);
    let h = 1e-6;
    for j in (0..model.theta.len()).step_by(7) {
        let mut up = model.clone();
        let mut dn = model.clone();
        up.theta[j] += h;
        dn.theta[j] -= h;
        let fd = (infidelity_loss(&up, &batch).unwrap() - infidelity_loss(&dn, &batch).unwrap()) / (2.0 * h);
        assert!((fd - grad[j]).abs() < 1e-7 * (1.0 + fd.abs()), "parameter {j}: {fd} vs {}", grad[j]);
    }
}

#[test]
fn wasserstein_matches_permutation_search() {
    let mut rng = stream(16, 0);
    let perms = [[0, 1, 2], [0, 2, 1], [1, 0, 2], [1, 2, 0], [2, 0, 1], [2, 1, 0]];
    for _ in 0..20 {
        let a: Vec<PureState> = (0..3).map(|_| random_pure(1, &mut rng)).collect();
        let b: Vec<PureState> = (0..3).map(|_| random_pure(1, &mut rng)).collect();
        let best = perms
            .iter()
            .map(|p| (0..3).map(|i| trace_distance_pure(&a[i], &b[p[i]]).unwrap()).sum::<f64>() / 3.0)
            .fold(f64::INFINITY, f64::min);
        assert!((wasserstein1(&a, &b).unwrap() - best).abs() < 1e-12);
    }
}

#[test]
fn training_reduces_loss_on_a_small_set() {
    let source = qdiff_core::ensembles::SourceEnsemble::near_zero(1, 0.2);
    let policy = qdiff_core::SchedulePolicy::uniform(5);
    let (pairs, records) =
        simulate_training_set(&source, &policy, 1.0, 0.01, 100, 16, 9, qdiff_core::decoder::InitialEstimate::Known, 1)
            .unwrap();
    assert_eq!(records.len(), 16);
    assert_eq!(pairs.len(), 1600);
    let mut model = ControlModel::new(1, 0.01, 1.0, 16, 1, 2);
    let cfg = TrainConfig { epochs: 5, batch_size: 64, ..Default::default() };
    let report = train(&mut model, &pairs, &cfg).unwrap();
    assert!(report.final_loss < report.initial_loss);
}

fn state_strategy(n: usize) -> impl Strategy<Value = PureState> {
    any::<u64>().prop_map(move |seed| random_pure(n, &mut stream(seed, 0)))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn wasserstein_is_a_metric(
        a in prop::collection::vec(state_strategy(1), 4),
        b in prop::collection::vec(state_strategy(1), 4),
        c in prop::collection::vec(state_strategy(1), 4),
    ) {
        let ab = wasserstein1(&a, &b).unwrap();
        let ba = wasserstein1(&b, &a).unwrap();
        let ac = wasserstein1(&a, &c).unwrap();
        let cb = wasserstein1(&c, &b).unwrap();
        prop_assert!(wasserstein1(&a, &a).unwrap().abs() < 1e-7);
        prop_assert!(ab >= 0.0);
        prop_assert!((ab - ba).abs() < 1e-12);
        prop_assert!(ab <= ac + cb + 1e-12);
    }

    #[test]
    fn generated_unitaries_are_unitary(seed in any::<u64>(), scale in 0.0f64..3.0) {
        let mut rng = stream(seed, 1);
        let v = linalg::expm_i_hermitian(&hamiltonian(&random_eta(2, scale, &mut rng)), 0.1);
        let err = linalg::frobenius_sq(&(&v * v.adjoint() - CMat::identity(4, 4))).sqrt();
        prop_assert!(err < 1e-12);
    }

    #[test]
    fn infidelity_lies_in_unit_interval(a in state_strategy(2), b in state_strategy(2), seed in any::<u64>()) {
        let v = linalg::expm_i_hermitian(&hamiltonian(&random_eta(2, 1.0, &mut stream(seed, 2))), 0.2);
        let l = infidelity(&v, &a, &b);
        prop_assert!((-1e-12..=1.0 + 1e-12).contains(&l));
    }
}
