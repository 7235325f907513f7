//! Acceptance suite: one PASS/FAIL line per criterion.
//!
//! Criteria marked as reference reproductions are reported but do not set
//! the exit status; every other failure makes the run exit non-zero.

use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use qdiff::config::*;
use qdiff::experiments::{blochfp, forward, petz as petz_exp, reverse, shadow};
use qdiff::{ConfigFile, Experiment, ExperimentKind, RunConfig};
use qdiff_core::decoder::InitialEstimate;
use qdiff_core::ensembles::{random_mixed, random_pure, SourceEnsemble};
use qdiff_core::forward::channel_weight_f;
use qdiff_core::linalg::{self, CMat};
use qdiff_core::pauli::{self, PauliString, PauliVector};
use qdiff_core::petz::{
    apply_local, depolarize_qubits, depolarizing_step, petz_superop, region_for, step_weight, tfim_ground_state,
    Boundary, TwirlMethod,
};
use qdiff_core::reverse_learn::{
    frobenius_loss, hamiltonian, infidelity, linearization_residual, score_from_hamiltonian,
};
use qdiff_core::rng::stream;
use qdiff_core::shadows::{integrate_weights, shadow_norm, shadow_weight, weight_generator_spectrum};
use qdiff_core::states::cmi;
use qdiff_core::{DensityMatrix, PureState, ScheduleMode};
use rand::Rng;

type Outcome = Result<(bool, String), String>;

#[derive(Default)]
struct Suite {
    gating_failures: Vec<String>,
    reported_failures: Vec<String>,
}

impl Suite {
    fn check(&mut self, id: &str, title: &str, gating: bool, f: impl FnOnce() -> Outcome) {
        let started = Instant::now();
        let (pass, detail) = match f() {
            Ok(r) => r,
            Err(e) => (false, format!("error: {e}")),
        };
        let label = if pass { "PASS" } else { "FAIL" };
        println!("{label} [{id}] {title}: {detail} ({:.1} s)", started.elapsed().as_secs_f64());
        if !pass {
            if gating {
                self.gating_failures.push(id.to_string());
            } else {
                self.reported_failures.push(id.to_string());
            }
        }
    }
}

fn info(id: &str, detail: String) {
    println!("INFO [{id}] {detail}");
}

fn err<E: std::fmt::Display>(e: E) -> String {
    e.to_string()
}

fn near_zero() -> SourceEnsemble {
    SourceEnsemble::near_zero(1, 0.2)
}

// 1. Channel weights from Monte-Carlo ensembles.
fn channel_weights() -> Outcome {
    let mut worst = 0.0f64;
    let mut slowest = Duration::ZERO;
    let mut cells = 0;
    for n in [1, 2, 4] {
        for gamma in [0.5, 1.0] {
            for t in [1.0, 3.0] {
                let cfg = ForwardVerify {
                    n: vec![n],
                    gamma: vec![gamma],
                    t: vec![t],
                    dt: 0.01,
                    trajectories: 10_000,
                    schedule: ScheduleMode::UniformRandom,
                    initial: InitialState::Tilted,
                    max_weight: 1,
                };
                let started = Instant::now();
                let report = forward::run(&cfg, 101).map_err(err)?;
                slowest = slowest.max(started.elapsed());
                worst = report.rows.iter().map(|r| r.z_score().abs()).fold(worst, f64::max);
                cells += 1;
            }
        }
    }
    let pass = worst < 4.0 && slowest < Duration::from_secs(60);
    Ok((pass, format!("{cells} cells, max |z| = {worst:.2}, slowest cell {:.1} s", slowest.as_secs_f64())))
}

/// `4γ/3 − 4γp/n` as printed, reported for comparison only.
fn literal_spectrum(gamma: f64, n: usize) -> Vec<f64> {
    let mut v: Vec<f64> = (0..=n).map(|p| 4.0 * gamma / 3.0 - 4.0 * gamma * p as f64 / n as f64).collect();
    v.sort_by(f64::total_cmp);
    v
}

/// `pΛ₁ + (n−p)Λ₂` with `Λ₁ = 4γ/3n` and `Λ₂ = −4γ/n`.
fn spin_spectrum(gamma: f64, n: usize) -> Vec<f64> {
    let nf = n as f64;
    let mut v: Vec<f64> =
        (0..=n).map(|p| p as f64 * 4.0 * gamma / (3.0 * nf) - (nf - p as f64) * 4.0 * gamma / nf).collect();
    v.sort_by(f64::total_cmp);
    v
}

// 2a. Shadow weights against direct integration of the weight ODE.
fn shadow_ode() -> Outcome {
    let mut worst = 0.0f64;
    for n in [1, 2, 4, 8] {
        for k in 0..=20 {
            let t = 0.25 * k as f64;
            let ode = integrate_weights(1.0, n, t, 1e-4);
            for (m, w) in ode.iter().enumerate() {
                let exact = shadow_weight(1.0, n, t, m);
                worst = worst.max((w - exact).abs() / exact.abs().max(1.0));
            }
        }
    }
    Ok((worst < 1e-7, format!("max deviation {worst:.2e} over n in {{1,2,4,8}}, t in [0,5]")))
}

// 2b. Generator eigenvalues.
fn shadow_spectrum() -> Outcome {
    let gamma = 1.0;
    let mut worst = 0.0f64;
    let mut literal = 0.0f64;
    for n in 1..=16 {
        let got = weight_generator_spectrum(gamma, n);
        for ((a, b), c) in got.iter().zip(spin_spectrum(gamma, n)).zip(literal_spectrum(gamma, n)) {
            worst = worst.max((a - b).abs());
            literal = literal.max((a - c).abs());
        }
    }
    info(
        "2b",
        format!("deviation from the simplified 4γ/3 − 4γp/n form: {literal:.3e} (n = 1 eigenvalues are 4/3 and −4)"),
    );
    Ok((worst < 1e-10, format!("max |λ − (4γ/3 − 16γp/3n)| = {worst:.2e} for n ≤ 16")))
}

// 3a. Unbiased shadow estimates with bounded variance.
fn shadow_unbiased() -> Outcome {
    let cases = [
        ("|0⟩", ShadowState::Zero { n: 1 }, 3.0),
        ("Bell", ShadowState::Bell, 6.0),
        ("random mixed", ShadowState::RandomMixed { n: 2 }, 6.0),
    ];
    let mut parts = Vec::new();
    let mut pass = true;
    for (name, state, t) in cases {
        let cfg = Shadow {
            state,
            gamma: 1.0,
            dt: 0.01,
            t,
            samples: 100_000,
            max_weight: 2,
            schedule: ScheduleMode::UniformRandom,
            weight_floor: 1e-3,
        };
        let report = shadow::run(&cfg, 303).map_err(err)?;
        let z = report.rows.iter().map(|r| r.z_score().abs()).fold(0.0, f64::max);
        let v = report.rows.iter().map(|r| r.variance_ratio()).fold(0.0, f64::max);
        pass &= z < 4.0 && v <= 2.0;
        parts.push(format!("{name}: max |z| {z:.2}, max M·Var/‖P‖² {v:.3}"));
    }
    Ok((pass, parts.join("; ")))
}

// 3b. Long-time shadow norm.
fn shadow_norm_limit() -> Outcome {
    let mut worst = 0.0f64;
    for (n, label) in [(1, "X"), (2, "XZ"), (2, "YY"), (3, "XYZ"), (4, "ZIXI")] {
        let p = PauliString::parse(label).map_err(err)?;
        let t = 5.0 * n as f64;
        let norm = shadow_norm(1.0, n, t, &p).map_err(err)?;
        worst = worst.max((norm / 3f64.powi(p.weight() as i32) - 1.0).abs());
    }
    Ok((worst < 0.01, format!("max relative deviation from 3^|P| at γt/n = 5: {worst:.2e}")))
}

fn tfim_config(n: usize) -> PetzTfim {
    PetzTfim {
        n,
        j: 1.0,
        bx: vec![1.5, 2.0, 5.0],
        gamma: 1.0,
        dt: 0.01,
        t_max: 10.0,
        half_width: 1,
        boundary: Boundary::Shift,
        spd_floor: qdiff_core::petz::DEFAULT_SPD_FLOOR,
        method: TwirlMethod::ClosedForm,
        fidelity_stride: 0,
        prior: PriorSource::Exact,
    }
}

fn fidelities(report: &petz_exp::PetzReport) -> String {
    report.fields.iter().map(|f| format!("B_x={}: {:.4}", f.bx, f.final_fidelity)).collect::<Vec<_>>().join(", ")
}

fn increasing(report: &petz_exp::PetzReport) -> bool {
    report.fields.windows(2).all(|w| w[1].final_fidelity > w[0].final_fidelity)
}

// 4a. Ten-site reference fidelities.
fn petz_reference() -> Outcome {
    let started = Instant::now();
    let report = petz_exp::run(&tfim_config(10), 0).map_err(err)?;
    let reference = [0.911, 0.963, 0.989];
    let within = report.fields.iter().zip(reference).all(|(f, r)| (f.final_fidelity - r).abs() <= 0.02);
    info(
        "4a",
        format!(
            "start fidelities {}; ordering increasing in B_x: {}",
            report.fields.iter().map(|f| format!("{:.4}", f.start_fidelity)).collect::<Vec<_>>().join(", "),
            increasing(&report)
        ),
    );
    let fast = started.elapsed() < Duration::from_secs(7200);
    Ok((within && fast, format!("{} against 0.911, 0.963, 0.989 ± 0.02", fidelities(&report))))
}

// 4b. Six-site ordering.
fn petz_small() -> Outcome {
    let started = Instant::now();
    let report = petz_exp::run(&tfim_config(6), 0).map_err(err)?;
    let monotone = increasing(&report);
    let pass = monotone && started.elapsed() < Duration::from_secs(300);
    Ok((pass, format!("{}; monotone in B_x: {monotone}", fidelities(&report))))
}

/// `(‖R̃Fρ − ρ‖₁², ΔI in bits)` for one step on qubit `j`.
fn single_step(rho: &CMat, n: usize, j: usize, weight: f64) -> Result<(f64, f64), String> {
    let region = region_for(j, n, 1, Boundary::Clip).map_err(err)?;
    let local = region.iter().position(|&q| q == j).unwrap_or(0);
    let prior = linalg::partial_trace(rho, n, &region);
    let map =
        petz_superop(&prior, &depolarizing_step(region.len(), local, weight), TwirlMethod::ClosedForm).map_err(err)?;
    let mut weights = vec![1.0; n];
    weights[j] = weight;
    let mut forwarded = rho.clone();
    depolarize_qubits(&mut forwarded, n, &weights);
    let mut recovered = forwarded.clone();
    apply_local(&mut recovered, n, &region, &map);
    let e = linalg::trace_norm_hermitian(&(recovered - rho));
    let (a, b, c) = partition(j, n, &region);
    let before = cmi(&DensityMatrix::new(rho.clone()).map_err(err)?, &a, &b, &c).map_err(err)?;
    let after = cmi(&DensityMatrix::new(forwarded).map_err(err)?, &a, &b, &c).map_err(err)?;
    Ok((e * e, (before - after) / std::f64::consts::LN_2))
}

fn partition(j: usize, n: usize, region: &[usize]) -> (Vec<usize>, Vec<usize>, Vec<usize>) {
    let b = region.iter().copied().filter(|&q| q != j).collect();
    let c = (0..n).filter(|q| !region.contains(q)).collect();
    (vec![j], b, c)
}

// 5a. Single-step recovery bound.
fn petz_bound() -> Outcome {
    let mut rng = stream(505, 0);
    let mut worst = f64::NEG_INFINITY;
    for i in 0..100 {
        let n = 2 + i % 4;
        let rho = random_mixed(n, &mut rng);
        let (lhs, delta) = single_step(&rho, n, i % n, step_weight(1.0, 0.2))?;
        worst = worst.max(lhs - 2.0 * std::f64::consts::LN_2 * delta);
    }
    Ok((worst <= 1e-8, format!("100 states, n = 2..5, max (lhs − rhs) = {worst:.3e}")))
}

// 5b. Conditional mutual information along forward steps.
fn cmi_monotone() -> Outcome {
    let mut worst = f64::NEG_INFINITY;
    let mut checks = 0;
    let mut states: Vec<(usize, CMat)> =
        vec![(6, tfim_ground_state(6, 1.0, 1.5).map_err(err)?.state.projector().into_matrix())];
    let mut rng = stream(506, 0);
    for n in [3, 4, 5] {
        states.push((n, random_mixed(n, &mut rng)));
    }
    let w = step_weight(1.0, 0.1);
    for (n, mut rho) in states {
        for k in 0..4 * n {
            let j = k % n;
            let region = region_for(j, n, 1, Boundary::Clip).map_err(err)?;
            let (a, b, c) = partition(j, n, &region);
            let before = cmi(&DensityMatrix::new(rho.clone()).map_err(err)?, &a, &b, &c).map_err(err)?;
            let mut weights = vec![1.0; n];
            weights[j] = w;
            depolarize_qubits(&mut rho, n, &weights);
            let after = cmi(&DensityMatrix::new(rho.clone()).map_err(err)?, &a, &b, &c).map_err(err)?;
            worst = worst.max(after - before);
            checks += 1;
        }
    }
    Ok((worst <= 1e-9, format!("{checks} steps with A = measured qubit, max increase {worst:.3e}")))
}

fn random_eta(n: usize, rng: &mut impl Rng) -> PauliVector {
    let mut eta = PauliVector::new(n);
    for p in pauli::strings_up_to_weight(n, n) {
        eta.set(p, 2.0 * rng.random::<f64>() - 1.0);
    }
    eta
}

fn expectations(psi: &PureState) -> Result<PauliVector, String> {
    let n = psi.n();
    let mut strings = vec![PauliString::identity(n)];
    strings.extend(pauli::strings_up_to_weight(n, n));
    PauliVector::from_state(psi.as_slice(), &strings).map_err(err)
}

// 6a. Commutator identity.
fn commutator_identity() -> Outcome {
    let mut rng = stream(606, 0);
    let mut worst = 0.0f64;
    for i in 0..100 {
        let n = 1 + i % 2;
        let eta = random_eta(n, &mut rng);
        let z = expectations(&random_pure(n, &mut rng))?;
        let rho = z.contract();
        let h = hamiltonian(&eta);
        let direct = (&h * &rho - &rho * &h) * (-linalg::I);
        let coefficients = score_from_hamiltonian(&eta, &z).map_err(err)?.contract();
        worst = worst.max(linalg::frobenius_sq(&(direct - coefficients)).sqrt());
    }
    Ok((worst < 1e-10, format!("100 instances, max error {worst:.2e}")))
}

// 6b. Infidelity equals the Frobenius form.
fn frobenius_identity() -> Outcome {
    let mut rng = stream(607, 0);
    let mut worst = 0.0f64;
    for _ in 0..100 {
        let v = linalg::expm_i_hermitian(&hamiltonian(&random_eta(2, &mut rng)), 0.3);
        let a = random_pure(2, &mut rng);
        let b = random_pure(2, &mut rng);
        worst = worst.max((infidelity(&v, &a, &b) - frobenius_loss(&v, &a, &b)).abs());
    }
    Ok((worst < 1e-12, format!("max difference {worst:.2e}")))
}

// 6c. Linearization remainder order.
fn linearization_order() -> Outcome {
    let mut rng = stream(608, 0);
    let eta = random_eta(2, &mut rng);
    let z = expectations(&random_pure(2, &mut rng))?;
    let dts = [1e-2, 3e-3, 1e-3, 3e-4, 1e-4f64];
    let mut pts = Vec::new();
    for dt in dts {
        pts.push((dt.ln(), linearization_residual(&eta, &z, dt).map_err(err)?.ln()));
    }
    let m = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / m;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / m;
    let slope = pts.iter().map(|(x, y)| (x - mx) * (y - my)).sum::<f64>()
        / pts.iter().map(|(x, _)| (x - mx) * (x - mx)).sum::<f64>();
    Ok(((slope - 2.0).abs() < 0.2, format!("fitted exponent {slope:.3}")))
}

fn train_config(estimate: InitialEstimate) -> TrainReverse {
    TrainReverse {
        source: near_zero(),
        gamma: 1.0,
        dt: 0.01,
        t: 3.0,
        members: 300,
        schedule: ScheduleMode::UniformRandom,
        estimate,
        weight_cutoff: None,
        hidden: 32,
        epochs: 20,
        batch_size: 256,
        learning_rate: 1e-3,
    }
}

fn eval_config() -> ReverseEval {
    ReverseEval {
        model: PathBuf::new(),
        source: near_zero(),
        gamma: 1.0,
        t: 3.0,
        members: 400,
        schedule: ScheduleMode::UniformRandom,
        stride: 25,
        flow_scale: 0.5,
        conditioning: ConditioningSource::SelfConditioned,
        estimate: InitialEstimate::Known,
    }
}

// 7. Learned reversal of the near-|0⟩ ensemble.
fn learned_reversal() -> Outcome {
    let trained = reverse::train_reverse(&train_config(InitialEstimate::Known), 707).map_err(err)?;
    let curve = reverse::evaluate_model(&trained.model, &eval_config(), 708).map_err(err)?;
    let ratio = curve.ratio();
    let rise = curve.max_rise();
    let mle = reverse::train_reverse(&train_config(InitialEstimate::MaximumLikelihood), 707).map_err(err)?;
    let mle_curve = reverse::evaluate_model(&mle.model, &eval_config(), 708).map_err(err)?;
    info("7", format!("with maximum-likelihood decoding the ratio is {:.3}", mle_curve.ratio()));
    let values: Vec<String> = curve.distances.iter().map(|w| format!("{:.3}", w.value)).collect();
    Ok((
        ratio < 0.25 && rise <= 2.0,
        format!("W1 ratio {ratio:.3}, largest rise {rise:.2} SE, curve [{}]", values.join(" ")),
    ))
}

// 8a. Dipole decay equals the channel weight.
fn dipole_decay() -> Outcome {
    let mut worst = 0.0f64;
    for gamma in [0.25, 0.5, 1.0, 2.0] {
        for n in [1, 2, 4] {
            for t in [0.1, 1.0, 3.0, 5.0] {
                let mut f = qdiff_core::blochfp::SphereField::uniform(1);
                f.set(1, 0, 0.1);
                let g = qdiff_core::blochfp::forward_fp(&f, gamma, n, t);
                let w = channel_weight_f(gamma, n, t, 1);
                worst = worst.max((g.coefficient(1, 0) / 0.1 - w).abs() / w);
            }
        }
    }
    Ok((worst < 1e-14, format!("max relative difference {worst:.2e}")))
}

fn bloch_config() -> Blochfp {
    let modes = [(1, 0, 0.06), (1, -1, 0.02), (2, 2, -0.03), (3, 0, 0.025), (4, 1, 0.015)];
    Blochfp {
        gamma: 1.0,
        n: 1,
        t: 1.0,
        l_max: 4,
        modes: modes.iter().map(|&(l, m, value)| Mode { l, m, value }).collect(),
        grids: vec![
            GridSpec { n_theta: 16, dt: 4e-3 },
            GridSpec { n_theta: 32, dt: 2e-3 },
            GridSpec { n_theta: 64, dt: 1e-3 },
        ],
    }
}

// 8b. Round trip with refinement.
fn bloch_round_trip() -> Outcome {
    let report = blochfp::run(&bloch_config()).map_err(err)?;
    let errors: Vec<f64> = report.grids.iter().map(|g| g.l2_error).collect();
    let converging = errors.windows(2).all(|w| w[1] < w[0]);
    let fine = *errors.last().unwrap_or(&f64::INFINITY);
    let drift = report.grids.iter().map(|g| g.mass_drift).fold(0.0, f64::max);
    let shown: Vec<String> = errors.iter().map(|e| format!("{e:.2e}")).collect();
    Ok((
        converging && fine < 1e-3,
        format!("L2 errors [{}] on 16/32/64 rings, mass drift {drift:.1e}", shown.join(", ")),
    ))
}

fn small_runs(records: &Path, model: &Path) -> Vec<RunConfig> {
    vec![
        RunConfig::new(
            11,
            Experiment::ForwardVerify(ForwardVerify {
                n: vec![1, 2],
                gamma: vec![1.0],
                t: vec![0.5],
                dt: 0.01,
                trajectories: 200,
                schedule: ScheduleMode::UniformRandom,
                initial: InitialState::Random,
                max_weight: 2,
            }),
        ),
        RunConfig::new(
            12,
            Experiment::Generate(Generate {
                source: SourceEnsemble::BellPerturbed { sigma: 0.2 },
                gamma: 1.0,
                dt: 0.01,
                t: 0.5,
                members: 20,
                schedule: ScheduleMode::RoundRobin,
                sidecar: Some(Sidecar { estimate: InitialEstimate::MaximumLikelihood, weight_cutoff: None, stride: 5 }),
            }),
        ),
        RunConfig::new(13, Experiment::Decode(Decode { records: records.to_path_buf(), weight_cutoff: None })),
        RunConfig::new(
            14,
            Experiment::TrainReverse(TrainReverse {
                members: 8,
                epochs: 2,
                hidden: 8,
                t: 0.5,
                ..train_config(InitialEstimate::Known)
            }),
        ),
        RunConfig::new(
            15,
            Experiment::ReverseEval(ReverseEval { model: model.to_path_buf(), members: 16, t: 0.5, ..eval_config() }),
        ),
        RunConfig::new(
            16,
            Experiment::Shadow(Shadow {
                state: ShadowState::RandomMixed { n: 2 },
                gamma: 1.0,
                dt: 0.01,
                t: 2.0,
                samples: 300,
                max_weight: 2,
                schedule: ScheduleMode::UniformRandom,
                weight_floor: 1e-3,
            }),
        ),
        RunConfig::new(
            17,
            Experiment::PetzTfim(PetzTfim {
                n: 4,
                bx: vec![1.0, 3.0],
                t_max: 0.5,
                fidelity_stride: 10,
                prior: PriorSource::Shadow { samples: 200, t: 2.0, weight_floor: 1e-4 },
                ..tfim_config(4)
            }),
        ),
        RunConfig::new(
            18,
            Experiment::Blochfp(Blochfp { grids: vec![GridSpec { n_theta: 8, dt: 1e-2 }], t: 0.2, ..bloch_config() }),
        ),
    ]
}

fn read_outputs(dir: &Path, manifest: &qdiff::Manifest) -> Result<Vec<(String, Vec<u8>)>, String> {
    manifest.outputs.iter().map(|o| Ok((o.path.clone(), std::fs::read(dir.join(&o.path)).map_err(err)?))).collect()
}

// 9. Reruns and manifest replays are byte-identical.
fn determinism() -> Outcome {
    let root = std::env::temp_dir().join(format!("qdiff-acceptance-{}", std::process::id()));
    let records = root.join("a/generate/records.jsonl");
    let model = root.join("a/train-reverse/model.json");
    let mut checked = Vec::new();
    let mut mismatched = Vec::new();
    for run in small_runs(&records, &model) {
        let name = run.experiment.kind().name();
        let (a, b, c) = (root.join("a").join(name), root.join("b").join(name), root.join("c").join(name));
        let ma = qdiff::execute(&run, &a).map_err(err)?;
        let mb = qdiff::execute(&run, &b).map_err(err)?;
        let mc = qdiff::replay(&a.join("manifest.json"), &c).map_err(err)?;
        let same = read_outputs(&a, &ma)? == read_outputs(&b, &mb)? && read_outputs(&a, &ma)? == read_outputs(&c, &mc)?;
        let text = run.to_config_file().to_toml().map_err(err)?;
        let round_trip = ConfigFile::parse(&text).map_err(err)?.resolve(run.experiment.kind(), None).map_err(err)?;
        if same && ma == mb && ma == mc && round_trip == run {
            checked.push(name);
        } else {
            mismatched.push(name);
        }
    }
    let _ = std::fs::remove_dir_all(&root);
    let all = ExperimentKind::ALL.len();
    Ok((
        mismatched.is_empty() && checked.len() == all,
        format!(
            "{}/{all} experiments identical on rerun and replay{}",
            checked.len(),
            if mismatched.is_empty() { String::new() } else { format!("; differing: {mismatched:?}") }
        ),
    ))
}

fn main() {
    let mut suite = Suite::default();
    suite.check("1", "channel weights from 10^4 trajectories within 4 SE", true, channel_weights);
    suite.check("2a", "shadow weights against the weight ODE", true, shadow_ode);
    suite.check("2b", "weight generator spectrum", true, shadow_spectrum);
    suite.check("3a", "shadow estimates unbiased at M = 10^5", true, shadow_unbiased);
    suite.check("3b", "long-time shadow norm", true, shadow_norm_limit);
    suite.check("4a", "ten-site TFIM recovery reference fidelities", false, petz_reference);
    suite.check("4b", "six-site TFIM recovery ordering", true, petz_small);
    suite.check("5a", "single-step recovery bound", true, petz_bound);
    suite.check("5b", "CMI monotone under forward steps", true, cmi_monotone);
    suite.check("6a", "commutator identity", true, commutator_identity);
    suite.check("6b", "infidelity equals Frobenius form", true, frobenius_identity);
    suite.check("6c", "linearization remainder is second order", true, linearization_order);
    suite.check("7", "learned reversal of the near-|0⟩ ensemble", true, learned_reversal);
    suite.check("8a", "dipole decay equals channel weight", true, dipole_decay);
    suite.check("8b", "Fokker-Planck round trip", true, bloch_round_trip);
    suite.check("9", "determinism", true, determinism);
    if !suite.reported_failures.is_empty() {
        println!("reported (non-gating) failures: {}", suite.reported_failures.join(", "));
    }
    if !suite.gating_failures.is_empty() {
        println!("gating failures: {}", suite.gating_failures.join(", "));
        std::process::exit(1);
    }
}
