//! Learned reversal of single trajectories.
//!
//! A [`ControlModel`] maps the decoded Pauli expectations `z` of the current
//! state and the time `t` to coefficients `η` of a control Hamiltonian
//! `H = Σ_j η_j P_j` over all strings of weight at most two. One reverse step
//! applies `V = exp(i H dt)`, trained so that `V|ψ_{t+dt}⟩ ≈ |ψ_t⟩` by
//! minimizing the mean infidelity `1 − |⟨ψ_t|V|ψ_{t+dt}⟩|²`.
//!
//! The network is a two-hidden-layer tanh perceptron. Gradients are exact:
//! the derivative of the infidelity with respect to `η` uses the
//! Daleckii-Krein formula for the matrix exponential and is back-propagated
//! through the network by hand. Optimization is Adam on shuffled minibatches.
//!
//! Generated ensembles are compared to reference ensembles with the
//! Wasserstein-1 distance under the pure-state trace distance, computed by an
//! exact optimal assignment.

use rand::seq::SliceRandom;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::decoder::{self, DecodedTrajectory, InitialEstimate};
use crate::ensembles::SourceEnsemble;
use crate::error::{Error, Result};
use crate::forward::{self, MeasurementRecord, SchedulePolicy};
use crate::linalg::{self, CMat, C64, ZERO};
use crate::pauli::{self, multiply, PauliString, PauliVector};
use crate::rng;
use crate::states::{trace_distance_pure, PureState};

const TIME_FEATURES: usize = 3;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ControlModel {
    pub n: usize,
    pub dt: f64,
    /// Time normalization for the `(t/T, sin πt/T, cos πt/T)` features.
    pub time_scale: f64,
    pub hidden: usize,
    pub input_strings: Vec<PauliString>,
    pub output_strings: Vec<PauliString>,
    pub theta: Vec<f64>,
}

/// Hidden activations kept for back-propagation.
struct Activations {
    h1: Vec<f64>,
    h2: Vec<f64>,
}

impl ControlModel {
    /// Xavier-initialized hidden layers and a zero output layer, so a fresh
    /// model is the identity map.
    pub fn new(n: usize, dt: f64, time_scale: f64, hidden: usize, weight_cutoff: usize, seed: u64) -> Self {
        let input_strings = pauli::strings_up_to_weight(n, weight_cutoff);
        let output_strings = pauli::strings_up_to_weight(n, 2);
        let mut model = ControlModel { n, dt, time_scale, hidden, input_strings, output_strings, theta: Vec::new() };
        let mut rng = rng::stream(seed, u64::MAX);
        let dims = model.layer_dims();
        for (l, &(fan_in, fan_out)) in dims.iter().enumerate() {
            let bound = if l + 1 == dims.len() { 0.0 } else { (6.0 / (fan_in + fan_out) as f64).sqrt() };
            for _ in 0..fan_in * fan_out {
                let u: f64 = rng.random();
                model.theta.push(bound * (2.0 * u - 1.0));
            }
            model.theta.extend(std::iter::repeat_n(0.0, fan_out));
        }
        model
    }

    fn layer_dims(&self) -> [(usize, usize); 3] {
        let d_in = self.input_strings.len() + TIME_FEATURES;
        [(d_in, self.hidden), (self.hidden, self.hidden), (self.hidden, self.output_strings.len())]
    }

    pub fn parameter_count(&self) -> usize {
        self.layer_dims().iter().map(|(i, o)| i * o + o).sum()
    }

    pub fn feature_count(&self) -> usize {
        self.input_strings.len() + TIME_FEATURES
    }

    fn time_features(&self, t: f64, out: &mut Vec<f64>) {
        let s = t / self.time_scale;
        let w = std::f64::consts::PI * s;
        out.extend([s, w.sin(), w.cos()]);
    }

    /// Features from a coefficient vector.
    pub fn features(&self, z: &PauliVector, t: f64) -> Vec<f64> {
        let mut x: Vec<f64> = self.input_strings.iter().map(|p| z.get(p)).collect();
        self.time_features(t, &mut x);
        x
    }

    /// Features from a state vector, without building a [`PauliVector`].
    pub fn features_from_state(&self, amps: &[C64], t: f64) -> Vec<f64> {
        let mut x: Vec<f64> = self.input_strings.iter().map(|p| p.expectation(amps).re).collect();
        self.time_features(t, &mut x);
        x
    }

    fn forward(&self, x: &[f64]) -> (Vec<f64>, Activations) {
        let [(i0, o0), (i1, o1), (i2, o2)] = self.layer_dims();
        let mut off = 0;
        let h1 = dense(&self.theta, &mut off, i0, o0, x, true);
        let h2 = dense(&self.theta, &mut off, i1, o1, &h1, true);
        let eta = dense(&self.theta, &mut off, i2, o2, &h2, false);
        (eta, Activations { h1, h2 })
    }

    /// Adds `∂L/∂θ` to `grad` given `∂L/∂η`.
    fn backward(&self, x: &[f64], act: &Activations, d_eta: &[f64], grad: &mut [f64]) {
        let [(i0, o0), (i1, o1), (i2, o2)] = self.layer_dims();
        let off0 = 0;
        let off1 = off0 + i0 * o0 + o0;
        let off2 = off1 + i1 * o1 + o1;
        let d_h2 = dense_backward(&self.theta, grad, off2, i2, o2, &act.h2, d_eta, None);
        let d_h1 = dense_backward(&self.theta, grad, off1, i1, o1, &act.h1, &d_h2, Some(&act.h2));
        let _ = dense_backward(&self.theta, grad, off0, i0, o0, x, &d_h1, Some(&act.h1));
    }

    /// Control coefficients `η(z, t)`.
    pub fn eta(&self, z: &PauliVector, t: f64) -> PauliVector {
        let (eta, _) = self.forward(&self.features(z, t));
        self.eta_vector(&eta)
    }

    fn eta_vector(&self, eta: &[f64]) -> PauliVector {
        let mut v = PauliVector::new(self.n);
        for (p, &e) in self.output_strings.iter().zip(eta) {
            v.set(*p, e);
        }
        v
    }

    /// `V = exp(i H(z, t) dt)`.
    pub fn unitary_score(&self, z: &PauliVector, t: f64) -> CMat {
        linalg::expm_i_hermitian(&hamiltonian(&self.eta(z, t)), self.dt)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let m: ControlModel = serde_json::from_str(s)?;
        if m.theta.len() != m.parameter_count() {
            return Err(Error::DimensionMismatch { expected: m.parameter_count(), got: m.theta.len() });
        }
        Ok(m)
    }
}

fn dense(theta: &[f64], off: &mut usize, fan_in: usize, fan_out: usize, x: &[f64], activate: bool) -> Vec<f64> {
    let w = &theta[*off..*off + fan_in * fan_out];
    let b = &theta[*off + fan_in * fan_out..*off + fan_in * fan_out + fan_out];
    *off += fan_in * fan_out + fan_out;
    (0..fan_out)
        .map(|r| {
            let row = &w[r * fan_in..(r + 1) * fan_in];
            let s: f64 = row.iter().zip(x).map(|(a, b)| a * b).sum::<f64>() + b[r];
            if activate {
                s.tanh()
            } else {
                s
            }
        })
        .collect()
}

/// Back-propagates through one layer. `out_act` is the tanh output of the
/// layer when it is activated. Returns `∂L/∂input`.
#[allow(clippy::too_many_arguments)]
fn dense_backward(
    theta: &[f64],
    grad: &mut [f64],
    off: usize,
    fan_in: usize,
    fan_out: usize,
    input: &[f64],
    d_out: &[f64],
    out_act: Option<&[f64]>,
) -> Vec<f64> {
    let mut d_in = vec![0.0; fan_in];
    for r in 0..fan_out {
        let mut g = d_out[r];
        if let Some(a) = out_act {
            g *= 1.0 - a[r] * a[r];
        }
        if g == 0.0 {
            continue;
        }
        let row = off + r * fan_in;
        for c in 0..fan_in {
            grad[row + c] += g * input[c];
            d_in[c] += g * theta[row + c];
        }
        grad[off + fan_in * fan_out + r] += g;
    }
    d_in
}

/// `H = Σ_j η_j P_j`.
pub fn hamiltonian(eta: &PauliVector) -> CMat {
    let dim = 1usize << eta.n();
    let mut h = CMat::zeros(dim, dim);
    for (p, &e) in eta.iter() {
        if e != 0.0 {
            h += p.matrix().scale(e);
        }
    }
    h
}

/// `1 − |⟨ψ_t|V|ψ_{t+dt}⟩|²`.
pub fn infidelity(v: &CMat, psi_t: &PureState, psi_next: &PureState) -> f64 {
    let a = psi_t.amplitudes().dotc(&(v * psi_next.amplitudes()));
    1.0 - a.norm_sqr()
}

/// `½‖V ρ_{t+dt} V† − ρ_t‖²_F`, equal to [`infidelity`] for pure states.
pub fn frobenius_loss(v: &CMat, psi_t: &PureState, psi_next: &PureState) -> f64 {
    let rho_t = psi_t.projector().into_matrix();
    let rho_next = psi_next.projector().into_matrix();
    0.5 * linalg::frobenius_sq(&(v * rho_next * v.adjoint() - rho_t))
}

/// Coefficients `v` with `v·P/2^n = −i[H, ρ]` for `H = η·P`, `ρ = z·P/2^n`:
/// `v_l = −i Σ_{jk} η_j z_k (c_jkl − c_kjl)`.
pub fn score_from_hamiltonian(eta: &PauliVector, z: &PauliVector) -> Result<PauliVector> {
    let mut acc: std::collections::BTreeMap<PauliString, C64> = Default::default();
    for (pj, &ej) in eta.iter() {
        for (pk, &zk) in z.iter() {
            let jk = multiply(pj, pk)?;
            let kj = multiply(pk, pj)?;
            let l = jk.without_phase();
            let c = jk.phase().to_complex() - kj.phase().to_complex();
            *acc.entry(l).or_insert(ZERO) += -linalg::I * c * (ej * zk);
        }
    }
    let mut out = PauliVector::new(z.n());
    for (p, v) in acc {
        out.set(p, v.re);
    }
    Ok(out)
}

/// `‖(ρ − VρV†) − dt · v·P/2^n‖_F` with `v` from [`score_from_hamiltonian`];
/// the first-order identification leaves an `O(dt²)` remainder.
pub fn linearization_residual(eta: &PauliVector, z: &PauliVector, dt: f64) -> Result<f64> {
    let rho = z.contract();
    let v = linalg::expm_i_hermitian(&hamiltonian(eta), dt);
    let exact = &rho - &v * &rho * v.adjoint();
    let linear = score_from_hamiltonian(eta, z)?.contract().scale(dt);
    Ok(linalg::frobenius_sq(&(exact - linear)).sqrt())
}

/// Infidelity of one pair and its gradient with respect to `η`.
///
/// With `H = U diag(λ) U†` and `μ = iλ dt`, the derivative of `exp(iH dt)`
/// along `i dt P_j` is `U (Φ ∘ (U† i dt P_j U)) U†` where
/// `Φ_ab = (e^{μ_a} − e^{μ_b})/(μ_a − μ_b)`.
pub fn pair_loss_grad(eta: &[f64], basis: &[CMat], psi_t: &[C64], psi_next: &[C64], dt: f64) -> (f64, Vec<f64>) {
    let dim = psi_t.len();
    let mut h = CMat::zeros(dim, dim);
    for (m, &e) in basis.iter().zip(eta) {
        h += m.scale(e);
    }
    let (lambda, u) = linalg::hermitian_eigen(&h);
    let ud = u.adjoint();
    let uvec = &ud * nalgebra::DVector::from_column_slice(psi_t);
    let vvec = &ud * nalgebra::DVector::from_column_slice(psi_next);
    let phases: Vec<C64> = lambda.iter().map(|&l| C64::from_polar(1.0, l * dt)).collect();
    let amp: C64 = (0..dim).map(|k| uvec[k].conj() * phases[k] * vvec[k]).sum();
    let loss = 1.0 - amp.norm_sqr();
    let mut phi = CMat::zeros(dim, dim);
    for a in 0..dim {
        for b in 0..dim {
            let d = (lambda[a] - lambda[b]) * dt;
            phi[(a, b)] = if d.abs() < 1e-10 {
                phases[a] * C64::new(1.0, 0.0) + phases[a] * linalg::I * (d / 2.0)
            } else {
                (phases[a] - phases[b]) / (linalg::I * d)
            };
        }
    }
    let idt = linalg::I * dt;
    let grad = basis
        .iter()
        .map(|p| {
            let rot = &ud * p * &u;
            let mut da = ZERO;
            for a in 0..dim {
                for b in 0..dim {
                    da += uvec[a].conj() * phi[(a, b)] * rot[(a, b)] * idt * vvec[b];
                }
            }
            -2.0 * (amp.conj() * da).re
        })
        .collect();
    (loss, grad)
}

/// One supervised example: reverse `ψ_{t+dt}` to `ψ_t`, conditioned on the
/// expectations `z_{t+dt}` of the later state.
#[derive(Clone, Debug)]
pub struct TrainingPair {
    pub z_next: PauliVector,
    pub psi_t: PureState,
    pub psi_next: PureState,
    pub t: f64,
}

/// All consecutive pairs of a decoded trajectory.
pub fn training_pairs(decoded: &DecodedTrajectory, dt: f64) -> Vec<TrainingPair> {
    (0..decoded.states.len().saturating_sub(1))
        .map(|k| TrainingPair {
            z_next: decoded.z_series[k + 1].clone(),
            psi_t: decoded.states[k].clone(),
            psi_next: decoded.states[k + 1].clone(),
            t: k as f64 * dt,
        })
        .collect()
}

/// Simulates `members` forward trajectories of `steps` steps from `source`,
/// decodes each record and returns all consecutive training pairs together
/// with the records. Member `i` uses RNG stream `i` of `seed` for its initial
/// state and stream `i` of `policy.seed` for its measurements.
#[allow(clippy::too_many_arguments)]
pub fn simulate_training_set(
    source: &SourceEnsemble,
    policy: &SchedulePolicy,
    gamma: f64,
    dt: f64,
    steps: usize,
    members: usize,
    seed: u64,
    estimate: InitialEstimate,
    weight_cutoff: usize,
) -> Result<(Vec<TrainingPair>, Vec<MeasurementRecord>)> {
    let per_member: Vec<(Vec<TrainingPair>, MeasurementRecord)> = (0..members)
        .into_par_iter()
        .map(|i| {
            let psi0 = source.sample(&mut rng::stream(seed, i as u64))?;
            let (_, record) = forward::simulate_member(&psi0, policy, gamma, dt, steps, i as u64)?;
            let decoded = decoder::decode(&record, estimate, &psi0, weight_cutoff)?;
            Ok((training_pairs(&decoded, dt), record))
        })
        .collect::<Result<_>>()?;
    let mut pairs = Vec::with_capacity(members * steps);
    let mut records = Vec::with_capacity(members);
    for (p, r) in per_member {
        pairs.extend(p);
        records.push(r);
    }
    Ok((pairs, records))
}

struct Prepared {
    x: Vec<f64>,
    psi_t: Vec<C64>,
    psi_next: Vec<C64>,
}

fn prepare(model: &ControlModel, data: &[TrainingPair]) -> Vec<Prepared> {
    data.iter()
        .map(|p| Prepared {
            x: model.features(&p.z_next, p.t),
            psi_t: p.psi_t.as_slice().to_vec(),
            psi_next: p.psi_next.as_slice().to_vec(),
        })
        .collect()
}

fn output_basis(model: &ControlModel) -> Vec<CMat> {
    model.output_strings.iter().map(|p| p.matrix()).collect()
}

/// Mean infidelity of a batch under the model.
pub fn infidelity_loss(model: &ControlModel, batch: &[TrainingPair]) -> Result<f64> {
    if batch.is_empty() {
        return Err(Error::Empty("training batch"));
    }
    let losses: Vec<f64> =
        batch.par_iter().map(|p| infidelity(&model.unitary_score(&p.z_next, p.t), &p.psi_t, &p.psi_next)).collect();
    Ok(linalg::pairwise_sum(&losses) / batch.len() as f64)
}

/// Loss and full parameter gradient over a set of prepared pairs.
fn batch_loss_grad(model: &ControlModel, basis: &[CMat], pairs: &[&Prepared]) -> (f64, Vec<f64>) {
    const CHUNK: usize = 32;
    let partial: Vec<(f64, Vec<f64>)> = pairs
        .par_chunks(CHUNK)
        .map(|chunk| {
            let mut grad = vec![0.0; model.theta.len()];
            let mut loss = 0.0;
            for p in chunk {
                let (eta, act) = model.forward(&p.x);
                let (l, d_eta) = pair_loss_grad(&eta, basis, &p.psi_t, &p.psi_next, model.dt);
                loss += l;
                model.backward(&p.x, &act, &d_eta, &mut grad);
            }
            (loss, grad)
        })
        .collect();
    let mut grad = vec![0.0; model.theta.len()];
    let mut loss = 0.0;
    for (l, g) in partial {
        loss += l;
        for (a, b) in grad.iter_mut().zip(g) {
            *a += b;
        }
    }
    let scale = 1.0 / pairs.len() as f64;
    grad.iter_mut().for_each(|g| *g *= scale);
    (loss * scale, grad)
}

/// Gradient of the mean infidelity with respect to all parameters.
pub fn loss_gradient(model: &ControlModel, batch: &[TrainingPair]) -> (f64, Vec<f64>) {
    let prepared = prepare(model, batch);
    let refs: Vec<&Prepared> = prepared.iter().collect();
    batch_loss_grad(model, &output_basis(model), &refs)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    pub seed: u64,
    /// Consecutive epochs above the initial loss before aborting.
    pub patience: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            epochs: 40,
            batch_size: 256,
            learning_rate: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
            seed: 0,
            patience: 10,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrainReport {
    pub initial_loss: f64,
    /// Mean minibatch loss per epoch.
    pub loss_curve: Vec<f64>,
    pub final_loss: f64,
}

impl TrainReport {
    /// Final loss per unit time, the per-step learning error rate.
    pub fn epsilon_rate(&self, dt: f64) -> f64 {
        self.final_loss / dt
    }
}

/// Adam on shuffled minibatches.
pub fn train(model: &mut ControlModel, data: &[TrainingPair], cfg: &TrainConfig) -> Result<TrainReport> {
    if data.is_empty() {
        return Err(Error::Empty("training set"));
    }
    if cfg.batch_size == 0 {
        return Err(Error::InvalidParameter("batch_size must be positive".into()));
    }
    let prepared = prepare(model, data);
    let basis = output_basis(model);
    let all: Vec<&Prepared> = prepared.iter().collect();
    let initial_loss = batch_loss_grad(model, &basis, &all).0;
    let mut m = vec![0.0; model.theta.len()];
    let mut v = vec![0.0; model.theta.len()];
    let mut step = 0i32;
    let mut order: Vec<usize> = (0..prepared.len()).collect();
    let mut rng = rng::stream(cfg.seed, 0);
    let mut loss_curve = Vec::with_capacity(cfg.epochs);
    let mut above = 0usize;
    for epoch in 0..cfg.epochs {
        order.shuffle(&mut rng);
        let mut epoch_loss = 0.0;
        for batch in order.chunks(cfg.batch_size) {
            let refs: Vec<&Prepared> = batch.iter().map(|&i| &prepared[i]).collect();
            let (loss, grad) = batch_loss_grad(model, &basis, &refs);
            epoch_loss += loss * batch.len() as f64;
            step += 1;
            let c1 = 1.0 - cfg.beta1.powi(step);
            let c2 = 1.0 - cfg.beta2.powi(step);
            for i in 0..grad.len() {
                m[i] = cfg.beta1 * m[i] + (1.0 - cfg.beta1) * grad[i];
                v[i] = cfg.beta2 * v[i] + (1.0 - cfg.beta2) * grad[i] * grad[i];
                model.theta[i] -= cfg.learning_rate * (m[i] / c1) / ((v[i] / c2).sqrt() + cfg.epsilon);
            }
        }
        let mean = epoch_loss / prepared.len() as f64;
        if !mean.is_finite() {
            return Err(Error::Diverged { epoch, loss: mean, initial: initial_loss, patience: 0 });
        }
        loss_curve.push(mean);
        above = if mean > initial_loss { above + 1 } else { 0 };
        if above >= cfg.patience {
            return Err(Error::Diverged { epoch, loss: mean, initial: initial_loss, patience: cfg.patience });
        }
    }
    let final_loss = loss_curve.last().copied().unwrap_or(initial_loss);
    Ok(TrainReport { initial_loss, loss_curve, final_loss })
}

/// Source of the conditioning expectations during reverse generation.
#[derive(Clone, Copy, Debug)]
pub enum Conditioning<'a> {
    /// Expectations of the generated state itself.
    SelfConditioned,
    /// Decoded series per member, indexed by forward step.
    Decoded(&'a [Vec<PauliVector>]),
}

/// Snapshots of a reverse run; `times` decrease from `T` to `0`.
#[derive(Clone, Debug)]
pub struct ReverseRun {
    pub times: Vec<f64>,
    pub snapshots: Vec<Vec<PureState>>,
}

/// Settings for [`reverse_generate`].
#[derive(Clone, Copy, Debug)]
pub struct ReverseOptions<'a> {
    pub steps: usize,
    /// A snapshot is stored every `stride` steps and at both ends.
    pub stride: usize,
    /// Multiplier on `η` during generation. The infidelity minimizer follows
    /// the conditional-mean drift of the reverse SDE, whose score part is
    /// twice that of the probability-flow ODE; `0.5` integrates the flow.
    pub flow_scale: f64,
    pub conditioning: Conditioning<'a>,
}

impl ReverseOptions<'_> {
    pub fn new(steps: usize) -> Self {
        ReverseOptions { steps, stride: 1, flow_scale: 0.5, conditioning: Conditioning::SelfConditioned }
    }
}

/// Integrates the learned reverse dynamics from `T` down to `0`, applying
/// `V(z, t)` with `t` the time of the earlier state.
pub fn reverse_generate(
    model: &ControlModel,
    ensemble_t: &[PureState],
    opts: &ReverseOptions<'_>,
) -> Result<ReverseRun> {
    if ensemble_t.is_empty() {
        return Err(Error::Empty("ensemble"));
    }
    if let Conditioning::Decoded(series) = opts.conditioning {
        if series.len() < ensemble_t.len() || series.iter().any(|s| s.len() <= opts.steps) {
            return Err(Error::DimensionMismatch { expected: ensemble_t.len(), got: series.len() });
        }
    }
    let steps = opts.steps;
    let stride = opts.stride.max(1);
    let marks: Vec<usize> = (0..=steps).rev().filter(|k| k % stride == 0 || *k == steps).collect();
    let basis = output_basis(model);
    let runs: Vec<Vec<PureState>> = ensemble_t
        .par_iter()
        .enumerate()
        .map(|(member, psi)| {
            let mut amps = psi.as_slice().to_vec();
            let mut out = Vec::with_capacity(marks.len());
            out.push(psi.clone());
            for k in (1..=steps).rev() {
                let t = (k - 1) as f64 * model.dt;
                let x = match opts.conditioning {
                    Conditioning::SelfConditioned => model.features_from_state(&amps, t),
                    Conditioning::Decoded(series) => model.features(&series[member][k], t),
                };
                let (eta, _) = model.forward(&x);
                let mut h = CMat::zeros(amps.len(), amps.len());
                for (m, &e) in basis.iter().zip(&eta) {
                    h += m.scale(e * opts.flow_scale);
                }
                let v = linalg::expm_i_hermitian(&h, model.dt);
                let next = &v * nalgebra::DVector::from_column_slice(&amps);
                let norm = next.norm();
                amps = next.iter().map(|a| a / norm).collect();
                if (k - 1) % stride == 0 {
                    out.push(PureState::from_slice(&amps)?);
                }
            }
            Ok(out)
        })
        .collect::<Result<_>>()?;
    let times: Vec<f64> = marks.iter().map(|&k| k as f64 * model.dt).collect();
    let snapshots = (0..times.len()).map(|i| runs.iter().map(|r| r[i].clone()).collect()).collect();
    Ok(ReverseRun { times, snapshots })
}

/// Exact minimum-cost perfect assignment (shortest augmenting paths with
/// potentials). Returns the column assigned to each row and the total cost.
pub fn optimal_assignment(cost: &[Vec<f64>]) -> (Vec<usize>, f64) {
    let n = cost.len();
    if n == 0 {
        return (Vec::new(), 0.0);
    }
    let inf = f64::INFINITY;
    let mut u = vec![0.0; n + 1];
    let mut v = vec![0.0; n + 1];
    let mut p = vec![0usize; n + 1];
    let mut way = vec![0usize; n + 1];
    for i in 1..=n {
        p[0] = i;
        let mut j0 = 0usize;
        let mut minv = vec![inf; n + 1];
        let mut used = vec![false; n + 1];
        loop {
            used[j0] = true;
            let i0 = p[j0];
            let mut delta = inf;
            let mut j1 = 0usize;
            for j in 1..=n {
                if !used[j] {
                    let cur = cost[i0 - 1][j - 1] - u[i0] - v[j];
                    if cur < minv[j] {
                        minv[j] = cur;
                        way[j] = j0;
                    }
                    if minv[j] < delta {
                        delta = minv[j];
                        j1 = j;
                    }
                }
            }
            for j in 0..=n {
                if used[j] {
                    u[p[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if p[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    let mut assignment = vec![0usize; n];
    for j in 1..=n {
        if p[j] > 0 {
            assignment[p[j] - 1] = j - 1;
        }
    }
    let total = assignment.iter().enumerate().map(|(i, &j)| cost[i][j]).sum();
    (assignment, total)
}

/// Wasserstein-1 estimate with the standard error of the matched costs.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Wasserstein {
    pub value: f64,
    pub std_error: f64,
    pub samples: usize,
}

/// `W₁` between two equal-size pure-state ensembles (the larger one is
/// truncated to the smaller size).
pub fn wasserstein1_detail(a: &[PureState], b: &[PureState]) -> Result<Wasserstein> {
    let n = a.len().min(b.len());
    if n == 0 {
        return Err(Error::Empty("ensemble"));
    }
    let cost: Vec<Vec<f64>> = a[..n]
        .par_iter()
        .map(|x| b[..n].iter().map(|y| trace_distance_pure(x, y)).collect::<Result<Vec<f64>>>())
        .collect::<Result<_>>()?;
    let (assignment, total) = optimal_assignment(&cost);
    let value = total / n as f64;
    let matched: Vec<f64> = assignment.iter().enumerate().map(|(i, &j)| cost[i][j]).collect();
    let var = if n > 1 { matched.iter().map(|c| (c - value) * (c - value)).sum::<f64>() / (n - 1) as f64 } else { 0.0 };
    Ok(Wasserstein { value, std_error: (var / n as f64).sqrt(), samples: n })
}

pub fn wasserstein1(a: &[PureState], b: &[PureState]) -> Result<f64> {
    Ok(wasserstein1_detail(a, b)?.value)
}
