//! Forward diffusion by randomized weak single-qubit Pauli measurements.
//!
//! Each step picks a qubit (uniformly at random or round-robin) and a Pauli
//! axis uniformly from `{X, Y, Z}`, then applies the binary-outcome Kraus
//! operator
//!
//! ```text
//! K_o = (cosh a · 𝟙 + o · sinh a · P) / √(2 cosh 2a),   a = √(γ δt),  o = ±1
//! ```
//!
//! which satisfies `Σ_o K_o† K_o = 𝟙` exactly. The outcome probability is
//! `½ + o·tanh(2a)·⟨P⟩/2 ≈ ½ + o·√(γδt)·⟨P⟩`. Averaged over outcomes and axes
//! one step multiplies every Pauli component acting on the measured qubit by
//! `(1 + 2 sech 2a)/3 ≈ exp(−4γδt/3)`, so after time `t` spread over `n`
//! qubits a string of weight `m` decays as `exp(−4γmt/3n)`.

use nalgebra::Matrix2;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, CMat, Mat2, C64, ZERO};
use crate::pauli::{multiply, ope_coefficient, Pauli, PauliString, PauliVector};
use crate::rng::{self, StreamRng};
use crate::states::PureState;

/// Largest `γ·δt` for which the discrete scheme is considered accurate.
pub const STRENGTH_WARNING: f64 = 0.1;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Axis {
    X,
    Y,
    Z,
}

impl Axis {
    pub const ALL: [Axis; 3] = [Axis::X, Axis::Y, Axis::Z];

    pub fn pauli(self) -> Pauli {
        match self {
            Axis::X => Pauli::X,
            Axis::Y => Pauli::Y,
            Axis::Z => Pauli::Z,
        }
    }

    pub fn matrix(self) -> Mat2 {
        self.pauli().matrix()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MeasurementStep {
    pub q: usize,
    pub axis: Axis,
    pub o: i8,
}

/// One trajectory's time-ordered measurement record.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MeasurementRecord {
    pub seed: u64,
    pub gamma: f64,
    pub dt: f64,
    pub n: usize,
    pub steps: Vec<MeasurementStep>,
}

impl MeasurementRecord {
    pub fn new(seed: u64, gamma: f64, dt: f64, n: usize) -> Self {
        MeasurementRecord { seed, gamma, dt, n, steps: Vec::new() }
    }

    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    pub fn duration(&self) -> f64 {
        self.steps.len() as f64 * self.dt
    }

    pub fn validate(&self) -> Result<()> {
        for (k, s) in self.steps.iter().enumerate() {
            if s.q >= self.n {
                return Err(Error::QubitOutOfRange { index: s.q, n: self.n });
            }
            if s.o != 1 && s.o != -1 {
                return Err(Error::InvalidParameter(format!("outcome {} at step {k} is not ±1", s.o)));
            }
        }
        Ok(())
    }

    /// Number of steps spent on each qubit.
    pub fn steps_per_qubit(&self) -> Vec<usize> {
        let mut counts = vec![0; self.n];
        for s in &self.steps {
            counts[s.q] += 1;
        }
        counts
    }

    /// Serializes to a single JSON line (no trailing newline).
    pub fn to_json_line(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }

    pub fn from_json_line(line: &str) -> Result<Self> {
        let r: MeasurementRecord = serde_json::from_str(line)?;
        r.validate()?;
        Ok(r)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ScheduleMode {
    UniformRandom,
    RoundRobin,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SchedulePolicy {
    pub mode: ScheduleMode,
    pub seed: u64,
}

impl SchedulePolicy {
    pub fn uniform(seed: u64) -> Self {
        SchedulePolicy { mode: ScheduleMode::UniformRandom, seed }
    }

    pub fn round_robin(seed: u64) -> Self {
        SchedulePolicy { mode: ScheduleMode::RoundRobin, seed }
    }

    /// Qubit and axis for step `k`; the axis is always uniform.
    pub fn choose<R: Rng + ?Sized>(&self, k: usize, n: usize, rng: &mut R) -> (usize, Axis) {
        let q = match self.mode {
            ScheduleMode::UniformRandom => rng.random_range(0..n),
            ScheduleMode::RoundRobin => k % n,
        };
        (q, Axis::ALL[rng.random_range(0..3)])
    }
}

/// Number of steps for duration `t`, requiring `t` to be a multiple of `dt`.
pub fn step_count(t: f64, dt: f64) -> Result<usize> {
    if dt.is_nan() || dt <= 0.0 || t.is_nan() || t < 0.0 {
        return Err(Error::InvalidParameter(format!("need dt > 0 and t ≥ 0, got dt={dt}, t={t}")));
    }
    let k = (t / dt).round();
    if (k * dt - t).abs() > 1e-9 {
        return Err(Error::InvalidParameter(format!("t={t} is not a multiple of dt={dt}")));
    }
    Ok(k as usize)
}

/// Message when `γ·δt` is too large for the discrete scheme.
pub fn strength_warning(gamma: f64, dt: f64) -> Option<String> {
    (gamma * dt > STRENGTH_WARNING).then(|| format!("gamma*dt = {} exceeds {STRENGTH_WARNING}", gamma * dt))
}

/// Normalization constant `1/√(2 cosh 2a)` of one Kraus factor.
pub fn kraus_normalization(gamma: f64, dt: f64) -> f64 {
    let a = (gamma * dt).sqrt();
    1.0 / (2.0 * (2.0 * a).cosh()).sqrt()
}

/// The unnormalized factor `cosh a · 𝟙 + o · sinh a · P`.
fn kraus_core(axis: Axis, outcome: i8, gamma: f64, dt: f64) -> Mat2 {
    let a = (gamma * dt).sqrt();
    let (c, s) = (a.cosh(), f64::from(outcome) * a.sinh());
    let p = axis.matrix();
    Matrix2::identity().scale(c) + p.scale(s)
}

/// Single-qubit Kraus factor for one step.
pub fn kraus_factor(axis: Axis, outcome: i8, gamma: f64, dt: f64) -> Mat2 {
    kraus_core(axis, outcome, gamma, dt).scale(kraus_normalization(gamma, dt))
}

/// Kraus operator of one step embedded in the `n`-qubit space.
pub fn step_kraus(axis: Axis, qubit: usize, outcome: i8, gamma: f64, dt: f64, n: usize) -> Result<CMat> {
    if qubit >= n {
        return Err(Error::QubitOutOfRange { index: qubit, n });
    }
    if outcome != 1 && outcome != -1 {
        return Err(Error::InvalidParameter(format!("outcome {outcome} is not ±1")));
    }
    Ok(linalg::embed_single_qubit(&kraus_factor(axis, outcome, gamma, dt), qubit, n))
}

/// Born probability of `outcome` given `⟨P⟩` on the measured qubit.
pub fn outcome_probability(expectation: f64, outcome: i8, gamma: f64, dt: f64) -> f64 {
    let a = (gamma * dt).sqrt();
    0.5 + f64::from(outcome) * (2.0 * a).tanh() * expectation / 2.0
}

/// Pauli weight applied to the measured qubit by one outcome- and
/// axis-averaged step: `(1 + 2 sech 2a)/3`.
pub fn step_pauli_weight(gamma: f64, dt: f64) -> f64 {
    let a = (gamma * dt).sqrt();
    (1.0 + 2.0 / (2.0 * a).cosh()) / 3.0
}

/// One in-place measurement step. Returns the sampled outcome, or `None`
/// when the state underflows.
fn measure_step<R: Rng + ?Sized>(
    amps: &mut [C64],
    n: usize,
    qubit: usize,
    axis: Axis,
    gamma: f64,
    dt: f64,
    rng: &mut R,
) -> Option<i8> {
    let p = PauliString::single(n, qubit, axis.pauli());
    let expectation = p.expectation(amps).re;
    let p_plus = outcome_probability(expectation, 1, gamma, dt);
    let outcome: i8 = if rng.random::<f64>() < p_plus { 1 } else { -1 };
    let prob = if outcome == 1 { p_plus } else { 1.0 - p_plus };
    if prob.is_nan() || prob <= 1e-300 {
        return None;
    }
    linalg::apply_single_qubit(amps, n, qubit, &kraus_factor(axis, outcome, gamma, dt));
    let norm: f64 = amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
    if norm.is_nan() || norm <= 1e-150 {
        return None;
    }
    for a in amps.iter_mut() {
        *a /= norm;
    }
    Some(outcome)
}

/// Simulates one trajectory of `steps` measurements.
///
/// `visit` sees the state after every step (step index starting at 1).
pub fn simulate_with<R: Rng + ?Sized>(
    psi0: &PureState,
    policy: &SchedulePolicy,
    gamma: f64,
    dt: f64,
    steps: usize,
    rng: &mut R,
    mut visit: impl FnMut(usize, &[C64]),
) -> Result<(PureState, MeasurementRecord)> {
    let n = psi0.n();
    let mut amps: Vec<C64> = psi0.as_slice().to_vec();
    let mut record = MeasurementRecord::new(policy.seed, gamma, dt, n);
    record.steps.reserve(steps);
    for k in 0..steps {
        let (q, axis) = policy.choose(k, n, rng);
        let o = measure_step(&mut amps, n, q, axis, gamma, dt, rng).ok_or(Error::NormUnderflow { step: k })?;
        record.steps.push(MeasurementStep { q, axis, o });
        visit(k + 1, &amps);
    }
    let fin = PureState::new(nalgebra::DVector::from_vec(amps))?;
    Ok((fin, record))
}

pub fn simulate_trajectory<R: Rng + ?Sized>(
    psi0: &PureState,
    policy: &SchedulePolicy,
    gamma: f64,
    dt: f64,
    steps: usize,
    rng: &mut R,
) -> Result<(PureState, MeasurementRecord)> {
    simulate_with(psi0, policy, gamma, dt, steps, rng, |_, _| {})
}

/// Simulates and keeps every intermediate state, `states[0] = ψ₀`.
pub fn simulate_with_states<R: Rng + ?Sized>(
    psi0: &PureState,
    policy: &SchedulePolicy,
    gamma: f64,
    dt: f64,
    steps: usize,
    rng: &mut R,
) -> Result<(Vec<PureState>, MeasurementRecord)> {
    let mut states = Vec::with_capacity(steps + 1);
    states.push(psi0.clone());
    let mut stored: Vec<Vec<C64>> = Vec::with_capacity(steps);
    let (_, record) = simulate_with(psi0, policy, gamma, dt, steps, rng, |_, a| stored.push(a.to_vec()))?;
    for a in stored {
        states.push(PureState::new(nalgebra::DVector::from_vec(a))?);
    }
    Ok((states, record))
}

/// Trajectory `id` of an ensemble: its RNG stream is `(policy.seed, id)` and
/// the record carries the master seed.
pub fn simulate_member(
    psi0: &PureState,
    policy: &SchedulePolicy,
    gamma: f64,
    dt: f64,
    steps: usize,
    id: u64,
) -> Result<(PureState, MeasurementRecord)> {
    let mut rng: StreamRng = rng::stream(policy.seed, id);
    simulate_trajectory(psi0, policy, gamma, dt, steps, &mut rng)
}

/// Monte-Carlo mean and standard error of Pauli expectations after `steps`.
#[derive(Clone, Debug, PartialEq)]
pub struct EnsembleEstimate {
    pub strings: Vec<PauliString>,
    pub mean: Vec<f64>,
    pub std_error: Vec<f64>,
    pub trajectories: usize,
}

/// Runs `trajectories` independent trajectories from `psi0` in parallel and
/// averages the final expectations of `strings`. Deterministic for a fixed
/// seed regardless of thread count.
pub fn ensemble_expectations(
    psi0: &PureState,
    policy: &SchedulePolicy,
    gamma: f64,
    dt: f64,
    steps: usize,
    strings: &[PauliString],
    trajectories: usize,
) -> Result<EnsembleEstimate> {
    if trajectories == 0 {
        return Err(Error::Empty("trajectories"));
    }
    let finals: Vec<Vec<f64>> = (0..trajectories as u64)
        .into_par_iter()
        .map(|id| {
            let (fin, _) = simulate_member(psi0, policy, gamma, dt, steps, id)?;
            Ok(strings.iter().map(|p| fin.expectation(p)).collect())
        })
        .collect::<Result<_>>()?;
    let m = trajectories as f64;
    let mut mean = Vec::with_capacity(strings.len());
    let mut std_error = Vec::with_capacity(strings.len());
    for i in 0..strings.len() {
        let col: Vec<f64> = finals.iter().map(|v| v[i]).collect();
        let mu = linalg::pairwise_sum(&col) / m;
        let dev: Vec<f64> = col.iter().map(|x| (x - mu) * (x - mu)).collect();
        let var = if trajectories > 1 { linalg::pairwise_sum(&dev) / (m - 1.0) } else { 0.0 };
        mean.push(mu);
        std_error.push((var / m).sqrt());
    }
    Ok(EnsembleEstimate { strings: strings.to_vec(), mean, std_error, trajectories })
}

/// Time-ordered Kraus product `K_t(𝒪) = e^{ln_scale} · matrix`.
#[derive(Clone, Debug)]
pub struct AccumulatedKraus {
    pub matrix: CMat,
    pub ln_scale: f64,
}

impl AccumulatedKraus {
    pub fn operator(&self) -> CMat {
        self.matrix.scale(self.ln_scale.exp())
    }
}

fn check_prefix(record: &MeasurementRecord, up_to_step: usize) -> Result<()> {
    if up_to_step > record.steps.len() {
        return Err(Error::StepOutOfRange { index: up_to_step, len: record.steps.len() });
    }
    record.validate()
}

/// Dense product of the first `up_to_step` Kraus operators. Scalar growth
/// and the `(2 cosh 2a)^{−N/2}` normalization live in `ln_scale`.
pub fn accumulated_kraus(record: &MeasurementRecord, up_to_step: usize) -> Result<AccumulatedKraus> {
    check_prefix(record, up_to_step)?;
    let dim = 1usize << record.n;
    let mut m = CMat::identity(dim, dim);
    let mut ln_scale = up_to_step as f64 * kraus_normalization(record.gamma, record.dt).ln();
    for (k, s) in record.steps[..up_to_step].iter().enumerate() {
        let core = kraus_core(s.axis, s.o, record.gamma, record.dt);
        for c in 0..dim {
            let mut col: Vec<C64> = m.column(c).iter().copied().collect();
            linalg::apply_single_qubit(&mut col, record.n, s.q, &core);
            m.column_mut(c).copy_from_slice(&col);
        }
        if k % 32 == 31 {
            let norm = m.norm();
            m.unscale_mut(norm);
            ln_scale += norm.ln();
        }
    }
    Ok(AccumulatedKraus { matrix: m, ln_scale })
}

/// Per-qubit factors `K^{(j)}` with `K_t = e^{ln_scale} · ⊗_j K^{(j)}`.
pub fn qubit_factors(record: &MeasurementRecord, up_to_step: usize) -> Result<(Vec<Mat2>, f64)> {
    check_prefix(record, up_to_step)?;
    let mut factors = vec![Mat2::identity(); record.n];
    let mut ln_scale = up_to_step as f64 * kraus_normalization(record.gamma, record.dt).ln();
    for s in &record.steps[..up_to_step] {
        let f = &mut factors[s.q];
        *f = kraus_core(s.axis, s.o, record.gamma, record.dt) * *f;
        let norm = f.norm();
        if norm > 1e8 {
            f.unscale_mut(norm);
            ln_scale += norm.ln();
        }
    }
    Ok((factors, ln_scale))
}

/// Pauli weight `exp(−4γmt/3n)` of the averaged channel.
pub fn channel_weight_f(gamma: f64, n: usize, t: f64, m: usize) -> f64 {
    (-4.0 * gamma * m as f64 * t / (3.0 * n as f64)).exp()
}

/// Applies the averaged channel to Pauli coefficients.
pub fn apply_channel_f(z: &PauliVector, gamma: f64, t: f64) -> PauliVector {
    let n = z.n();
    let mut out = z.clone();
    for (p, v) in out.iter_mut() {
        *v *= channel_weight_f(gamma, n, t, p.weight());
    }
    out
}

/// Applies per-qubit depolarization for measured times `times[j]`: a string
/// is scaled by `∏_{j ∈ supp P} exp(−4γ t_j/3)`.
pub fn apply_channel_per_qubit(z: &PauliVector, gamma: f64, times: &[f64]) -> PauliVector {
    let mut out = z.clone();
    for (p, v) in out.iter_mut() {
        let total: f64 = p.support().iter().map(|&q| times[q]).sum();
        *v *= (-4.0 * gamma * total / 3.0).exp();
    }
    out
}

/// Outcome-averaged single step `Σ_o K ρ K†`.
pub fn averaged_step(rho: &CMat, n: usize, qubit: usize, axis: Axis, gamma: f64, dt: f64) -> Result<CMat> {
    let mut out = CMat::zeros(rho.nrows(), rho.ncols());
    for o in [1i8, -1] {
        let k = step_kraus(axis, qubit, o, gamma, dt, n)?;
        out += &k * rho * k.adjoint();
    }
    Ok(out)
}

/// `−(γ/2)[O, [O, ρ]]`.
pub fn dephasing_generator(rho: &CMat, observable: &CMat, gamma: f64) -> CMat {
    let inner = observable * rho - rho * observable;
    (observable * &inner - &inner * observable).scale(-gamma / 2.0)
}

/// Drift `f_l = −γ(c_ijm c_klm − c_ikm c_jlm) x_i x_j z_k` of the Pauli
/// expectation SDE for measured observable `O = Σ x_i P_i`.
pub fn drift_vector(z: &PauliVector, x: &PauliVector, gamma: f64) -> Result<PauliVector> {
    let n = z.n();
    let mut acc: std::collections::BTreeMap<PauliString, C64> = Default::default();
    for (pi, &xi) in x.iter() {
        for (pj, &xj) in x.iter() {
            let m = multiply(pi, pj)?.without_phase();
            let c_ijm = ope_coefficient(pi, pj, &m)?;
            for (pk, &zk) in z.iter() {
                let coef = xi * xj * zk;
                let l = multiply(pk, &m)?.without_phase();
                *acc.entry(l).or_insert(ZERO) += c_ijm * ope_coefficient(pk, &l, &m)? * coef;
                let m2 = multiply(pi, pk)?.without_phase();
                let c_ikm = ope_coefficient(pi, pk, &m2)?;
                let l2 = multiply(pj, &m2)?.without_phase();
                *acc.entry(l2).or_insert(ZERO) -= c_ikm * ope_coefficient(pj, &l2, &m2)? * coef;
            }
        }
    }
    let mut out = PauliVector::new(n);
    for (p, v) in acc {
        out.set(p, -gamma * v.re);
    }
    Ok(out)
}

/// Noise `g_l = √γ((c_ijl + c_jil) x_i z_j − 2 x_i z_i z_l)`.
pub fn noise_vector(z: &PauliVector, x: &PauliVector, gamma: f64) -> Result<PauliVector> {
    let n = z.n();
    let mut acc: std::collections::BTreeMap<PauliString, C64> = Default::default();
    let mean_o: f64 = x.iter().map(|(p, &xi)| xi * z.get(p)).sum();
    for (pi, &xi) in x.iter() {
        for (pj, &zj) in z.iter() {
            let ij = multiply(pi, pj)?;
            let ji = multiply(pj, pi)?;
            *acc.entry(ij.without_phase()).or_insert(ZERO) += ij.phase().to_complex() * (xi * zj);
            *acc.entry(ji.without_phase()).or_insert(ZERO) += ji.phase().to_complex() * (xi * zj);
        }
    }
    for (pl, &zl) in z.iter() {
        *acc.entry(*pl).or_insert(ZERO) -= C64::new(2.0 * mean_o * zl, 0.0);
    }
    let mut out = PauliVector::new(n);
    let sg = gamma.sqrt();
    for (p, v) in acc {
        out.set(p, sg * v.re);
    }
    Ok(out)
}
