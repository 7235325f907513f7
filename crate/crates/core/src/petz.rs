//! Local twirled Petz recovery for the averaged measurement channel.
//!
//! One forward step depolarizes the measured qubit with Pauli weight
//! `λ = e^{−4γδt/3}`. Its recovery on a region `S` around that qubit is the
//! twirled Petz map
//!
//! `ℛ̃(X) = ∫ β(τ) ρ^{(1−iτ)/2} ℱ†(ρ'^{(−1+iτ)/2} X ρ'^{(−1−iτ)/2}) ρ^{(1+iτ)/2} dτ`
//!
//! with `ρ` the prior on `S` before the step, `ρ' = ℱ(ρ)` and
//! `β(τ) = (π/2)/(cosh πτ + 1)`, a probability density. In the eigenbases
//! `ρ = U diag(p) U†`, `ρ' = W diag(q) W†` the `τ` integral is elementary:
//! each matrix element is multiplied by `√(p_c p_d / q_a q_b) · ω/sinh ω`
//! with `ω = (ln p_d − ln p_c + ln q_a − ln q_b)/2`. That closed form is the
//! production path; Gauss-Legendre quadrature in `τ` and the untwirled
//! `τ = 0` map are available for comparison.
//!
//! Recovery runs on a dense global density matrix, applying each local
//! superoperator in the reverse order of the forward schedule. Priors come
//! from reduced states of `ρ₀` evolved by per-qubit depolarization, so the
//! forward image of every prior is exactly the next prior.

use std::collections::BTreeMap;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, qubit_mask, CMat, CVec, C64, I, ONE};
use crate::pauli::{Pauli, PauliVector};
use crate::states::{self, DensityMatrix, PureState};

pub const DEFAULT_SPD_FLOOR: f64 = 1e-8;
pub const DEFAULT_TAU_NODES: usize = 33;
pub const TAU_CUTOFF: f64 = 6.0;
const QUADRATURE_TOLERANCE: f64 = 1e-6;

/// Twirling density `β(τ) = (π/2)/(cosh πτ + 1)`, normalized to one.
pub fn twirl_density(tau: f64) -> f64 {
    std::f64::consts::FRAC_PI_2 / ((std::f64::consts::PI * tau).cosh() + 1.0)
}

/// Fourier transform of [`twirl_density`], `ω / sinh ω`.
pub fn twirl_kernel(omega: f64) -> f64 {
    if omega.abs() < 1e-4 {
        1.0 - omega * omega / 6.0
    } else {
        omega / omega.sinh()
    }
}

/// Gauss-Legendre nodes on `|τ| ≤ 6` with weights `β(τ)`, renormalized.
pub fn tau_quadrature(nodes: usize) -> (Vec<f64>, Vec<f64>) {
    let (x, w) = linalg::gauss_legendre(nodes);
    let taus: Vec<f64> = x.iter().map(|x| x * TAU_CUTOFF).collect();
    let mut weights: Vec<f64> = taus.iter().zip(&w).map(|(t, w)| w * TAU_CUTOFF * twirl_density(*t)).collect();
    let total: f64 = weights.iter().sum();
    weights.iter_mut().for_each(|w| *w /= total);
    (taus, weights)
}

/// Clips eigenvalues below `floor` to `floor` and renormalizes the trace.
pub fn spd_deform(rho: &CMat, floor: f64) -> Result<DensityMatrix> {
    let herm = linalg::hermiticity_error(rho);
    if herm > 1e-8 {
        return Err(Error::NotHermitian(herm));
    }
    let (values, vectors) = linalg::hermitian_eigen(rho);
    let clipped: Vec<f64> = values.iter().map(|v| v.max(floor)).collect();
    let total: f64 = clipped.iter().sum();
    let m = linalg::from_spectrum(&clipped, &vectors, |v| C64::new(v / total, 0.0));
    DensityMatrix::new((&m + m.adjoint()).scale(0.5))
}

/// Linear map on `d×d` matrices acting on row-major vectorizations.
#[derive(Clone, Debug, PartialEq)]
pub struct Superop {
    pub dim: usize,
    pub matrix: CMat,
}

impl Superop {
    pub fn identity(dim: usize) -> Self {
        Superop { dim, matrix: CMat::identity(dim * dim, dim * dim) }
    }

    /// `X ↦ A X B`.
    pub fn sandwich(a: &CMat, b: &CMat) -> Self {
        Superop { dim: a.nrows(), matrix: a.kronecker(&b.transpose()) }
    }

    pub fn apply(&self, x: &CMat) -> CMat {
        let v = CVec::from_iterator(self.dim * self.dim, x.transpose().iter().copied());
        let out = &self.matrix * v;
        CMat::from_row_slice(self.dim, self.dim, out.as_slice())
    }

    pub fn compose(&self, inner: &Superop) -> Superop {
        Superop { dim: self.dim, matrix: &self.matrix * &inner.matrix }
    }

    /// Choi matrix `Σ_ab E_ab ⊗ Φ(E_ab)`.
    pub fn choi(&self) -> CMat {
        let d = self.dim;
        CMat::from_fn(d * d, d * d, |r, c| {
            let (a, ci) = (r / d, r % d);
            let (b, di) = (c / d, c % d);
            self.matrix[(ci * d + di, a * d + b)]
        })
    }

    pub fn min_choi_eigenvalue(&self) -> f64 {
        linalg::hermitian_eigen(&self.choi()).0[0]
    }

    /// `exp(t · G)` for a generator `G`.
    pub fn exp(&self, t: f64) -> Superop {
        Superop { dim: self.dim, matrix: self.matrix.scale(t).exp() }
    }
}

/// Single-qubit Pauli matrix on `local` inside a `k`-qubit region.
fn local_pauli(p: Pauli, local: usize, k: usize) -> CMat {
    linalg::embed_single_qubit(&p.matrix(), local, k)
}

/// Depolarization of qubit `local` of a `k`-qubit region with Pauli weight
/// `weight`: `X ↦ ((1+3λ)/4) X + ((1−λ)/4) Σ_μ σ_μ X σ_μ`.
pub fn depolarizing_step(k: usize, local: usize, weight: f64) -> Superop {
    let d = 1usize << k;
    let mut m = CMat::identity(d * d, d * d).scale((1.0 + 3.0 * weight) / 4.0);
    for p in [Pauli::X, Pauli::Y, Pauli::Z] {
        let s = local_pauli(p, local, k);
        m += Superop::sandwich(&s, &s).matrix.scale((1.0 - weight) / 4.0);
    }
    Superop { dim: d, matrix: m }
}

/// Pauli weight of one forward step on the measured qubit.
pub fn step_weight(gamma: f64, dt: f64) -> f64 {
    (-4.0 * gamma * dt / 3.0).exp()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "kind")]
pub enum TwirlMethod {
    /// Exact `τ` integral.
    #[default]
    ClosedForm,
    /// Gauss-Legendre on `|τ| ≤ 6`, checked by doubling the node count.
    Quadrature { nodes: usize },
    /// `τ = 0` only.
    Untwirled,
}

/// Twirled Petz map of `forward` with prior `prior`.
pub fn petz_superop(prior: &CMat, forward: &Superop, method: TwirlMethod) -> Result<Superop> {
    let d = prior.nrows();
    if forward.dim != d {
        return Err(Error::DimensionMismatch { expected: d, got: forward.dim });
    }
    let (p, u) = linalg::hermitian_eigen(prior);
    let (q, w) = linalg::hermitian_eigen(&forward.apply(prior));
    if p[0] <= 0.0 {
        return Err(Error::RankDeficient(p[0]));
    }
    if q[0] <= 0.0 {
        return Err(Error::RankDeficient(q[0]));
    }
    let ln_p: Vec<f64> = p.iter().map(|v| v.ln()).collect();
    let ln_q: Vec<f64> = q.iter().map(|v| v.ln()).collect();
    let omega = |c: usize, dd: usize, a: usize, b: usize| (ln_p[dd] - ln_p[c] + ln_q[a] - ln_q[b]) / 2.0;
    let kernel: Box<dyn Fn(f64) -> C64> = match method {
        TwirlMethod::ClosedForm => Box::new(|s| C64::new(twirl_kernel(s), 0.0)),
        TwirlMethod::Untwirled => Box::new(|_| ONE),
        TwirlMethod::Quadrature { nodes } => {
            let coarse = tau_quadrature(nodes);
            let fine = tau_quadrature(2 * nodes - 1);
            let eval = |(taus, ws): &(Vec<f64>, Vec<f64>), s: f64| -> C64 {
                taus.iter().zip(ws).map(|(t, w)| C64::from_polar(*w, t * s)).sum()
            };
            let mut worst = 0.0f64;
            for c in 0..d {
                for dd in 0..d {
                    for a in 0..d {
                        for b in 0..d {
                            let s = omega(c, dd, a, b);
                            let amp = (p[c] * p[dd] / (q[a] * q[b])).sqrt();
                            worst = worst.max(amp * (eval(&coarse, s) - eval(&fine, s)).norm());
                        }
                    }
                }
            }
            if worst > QUADRATURE_TOLERANCE {
                return Err(Error::QuadratureNotConverged(worst));
            }
            Box::new(move |s| eval(&coarse, s))
        }
    };
    let to_u = u.adjoint().kronecker(&u.transpose());
    let from_u = u.kronecker(&u.map(|z| z.conj()));
    let to_w = w.adjoint().kronecker(&w.transpose());
    let from_w = w.kronecker(&w.map(|z| z.conj()));
    let phi = &to_u * &forward.matrix * &from_w;
    let mut weighted = phi;
    for c in 0..d {
        for dd in 0..d {
            for a in 0..d {
                for b in 0..d {
                    let g = (p[c] * p[dd] / (q[a] * q[b])).sqrt();
                    weighted[(c * d + dd, a * d + b)] *= kernel(omega(c, dd, a, b)) * g;
                }
            }
        }
    }
    Ok(Superop { dim: d, matrix: from_u * weighted * to_w })
}

/// Generator of the twirled Petz map for depolarization of qubit `local` at
/// rate `γ` (jump operators `√(γ/3) σ_μ`), averaged over `τ` by quadrature.
pub fn petz_lindbladian(prior: &CMat, gamma: f64, local: usize, nodes: usize) -> Result<Superop> {
    let d = prior.nrows();
    let k = crate::pauli::dim_to_qubits(d)?;
    let (p, u) = linalg::hermitian_eigen(prior);
    if p[0] <= 0.0 {
        return Err(Error::RankDeficient(p[0]));
    }
    let jumps: Vec<CMat> =
        [Pauli::X, Pauli::Y, Pauli::Z].iter().map(|&s| local_pauli(s, local, k).scale((gamma / 3.0).sqrt())).collect();
    let mut drift = prior.scale(-gamma);
    for l in &jumps {
        drift += l * prior * l;
    }
    let drift_u = u.adjoint() * &drift * &u;
    let (taus, weights) = tau_quadrature(nodes);
    let id = CMat::identity(d, d);
    let mut total = CMat::zeros(d * d, d * d);
    for (tau, wt) in taus.iter().zip(&weights) {
        let e = C64::new(0.5, -tau / 2.0);
        let f = |x: f64| C64::new(x, 0.0).powc(e);
        let a = linalg::from_spectrum(&p, &u, f);
        let a_inv = linalg::from_spectrum(&p, &u, |x| C64::new(x, 0.0).powc(-e));
        let mut da_u = drift_u.clone();
        for i in 0..d {
            for j in 0..d {
                let g = if (p[i] - p[j]).abs() > 1e-12 * p[i].max(p[j]) {
                    (f(p[i]) - f(p[j])) / (p[i] - p[j])
                } else {
                    e * C64::new(p[i], 0.0).powc(e - ONE)
                };
                da_u[(i, j)] *= g;
            }
        }
        let da = &u * da_u * u.adjoint();
        let kmat = &da * &a_inv + id.scale(gamma / 2.0);
        let h = (&kmat - kmat.adjoint()) * C64::new(0.0, -0.5);
        let mut gen = (Superop::sandwich(&h, &id).matrix - Superop::sandwich(&id, &h).matrix) * (-I);
        let mut sum_ll = CMat::zeros(d, d);
        for l in &jumps {
            let lb = &a * l * &a_inv;
            gen += Superop::sandwich(&lb, &lb.adjoint()).matrix;
            sum_ll += lb.adjoint() * &lb;
        }
        gen -= (Superop::sandwich(&sum_ll, &id).matrix + Superop::sandwich(&id, &sum_ll).matrix).scale(0.5);
        total += gen.scale(*wt);
    }
    Ok(Superop { dim: d, matrix: total })
}

/// How regions near the chain ends are formed.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Boundary {
    /// Slide the window inward so every region keeps `2w+1` qubits.
    #[default]
    Shift,
    /// Drop the qubits that fall outside the chain.
    Clip,
}

/// Contiguous window of half-width `half_width` around `qubit`.
pub fn region_for(qubit: usize, n: usize, half_width: usize, boundary: Boundary) -> Result<Vec<usize>> {
    if qubit >= n {
        return Err(Error::QubitOutOfRange { index: qubit, n });
    }
    let width = 2 * half_width + 1;
    if width > n && boundary == Boundary::Shift {
        return Err(Error::RegionTooLarge { region: width, n });
    }
    let (lo, hi) = match boundary {
        Boundary::Clip => (qubit.saturating_sub(half_width), (qubit + half_width).min(n - 1)),
        Boundary::Shift => {
            let lo = qubit.saturating_sub(half_width).min(n - width);
            (lo, lo + width - 1)
        }
    };
    Ok((lo..=hi).collect())
}

/// One local recovery, reversing forward step `index`.
#[derive(Clone, Debug, PartialEq)]
pub struct PetzStep {
    pub index: usize,
    pub qubit: usize,
    pub region: Vec<usize>,
    /// Forward measurement count of each region qubit before the step.
    pub counts_before: Vec<usize>,
}

impl PetzStep {
    pub fn local_qubit(&self) -> usize {
        self.region.iter().position(|&q| q == self.qubit).unwrap_or(0)
    }
}

/// Local recoveries in reverse order of the forward schedule.
#[derive(Clone, Debug, PartialEq)]
pub struct RecoverySchedule {
    pub n: usize,
    pub gamma: f64,
    pub dt: f64,
    pub steps: Vec<PetzStep>,
    /// Forward measurement count of every qubit at `T`.
    pub final_counts: Vec<usize>,
}

impl RecoverySchedule {
    pub fn regions(&self) -> Vec<Vec<usize>> {
        let mut r: Vec<Vec<usize>> = self.steps.iter().map(|s| s.region.clone()).collect();
        r.sort();
        r.dedup();
        r
    }
}

/// Round-robin sequence of measured qubits for `steps` steps.
pub fn round_robin(n: usize, steps: usize) -> Vec<usize> {
    (0..steps).map(|k| k % n).collect()
}

pub fn build_schedule(
    forward_qubits: &[usize],
    n: usize,
    half_width: usize,
    boundary: Boundary,
    gamma: f64,
    dt: f64,
) -> Result<RecoverySchedule> {
    let mut counts = vec![0usize; n];
    let mut steps = Vec::with_capacity(forward_qubits.len());
    for (index, &qubit) in forward_qubits.iter().enumerate() {
        let region = region_for(qubit, n, half_width, boundary)?;
        let counts_before = region.iter().map(|&q| counts[q]).collect();
        steps.push(PetzStep { index, qubit, region, counts_before });
        counts[qubit] += 1;
    }
    steps.reverse();
    Ok(RecoverySchedule { n, gamma, dt, steps, final_counts: counts })
}

/// Reduced states of `ρ₀` on every region, deformed to be positive definite.
#[derive(Clone, Debug)]
pub struct RegionPriors {
    pub floor: f64,
    pub states: BTreeMap<Vec<usize>, CMat>,
}

impl RegionPriors {
    pub fn from_state(rho0: &CMat, n: usize, regions: &[Vec<usize>], floor: f64) -> Result<Self> {
        let mut states = BTreeMap::new();
        for r in regions {
            let rdm = linalg::partial_trace(rho0, n, r);
            states.insert(r.clone(), spd_deform(&rdm, floor)?.into_matrix());
        }
        Ok(RegionPriors { floor, states })
    }

    /// From Pauli expectations `z` (missing strings count as zero).
    pub fn from_pauli(z: &PauliVector, regions: &[Vec<usize>], floor: f64) -> Result<Self> {
        let n = z.n();
        let mut states = BTreeMap::new();
        for r in regions {
            let k = r.len();
            let mut sub = PauliVector::new(k);
            for p in crate::pauli::strings_on(k, &(0..k).collect::<Vec<_>>()) {
                let mut axes = vec![Pauli::I; n];
                for (local, &q) in r.iter().enumerate() {
                    axes[q] = p.axis(local);
                }
                let global = crate::pauli::PauliString::from_axes(&axes);
                sub.set(p, if global.is_identity() { 1.0 } else { z.get(&global) });
            }
            states.insert(r.clone(), spd_deform(&sub.contract(), floor)?.into_matrix());
        }
        Ok(RegionPriors { floor, states })
    }

    /// Prior on `region` after each qubit was measured `counts` times.
    pub fn evolved(&self, region: &[usize], counts: &[usize], gamma: f64, dt: f64) -> Result<CMat> {
        let base = self.states.get(region).ok_or(Error::Empty("region prior"))?;
        let weights: Vec<f64> = counts.iter().map(|&c| step_weight(gamma, dt).powi(c as i32)).collect();
        let mut m = base.clone();
        depolarize_qubits(&mut m, region.len(), &weights);
        Ok(m)
    }
}

/// Depolarizes every qubit `q` of a dense `n`-qubit matrix with weight
/// `weights[q]`.
pub fn depolarize_qubits(rho: &mut CMat, n: usize, weights: &[f64]) {
    let dim = 1usize << n;
    for (q, &w) in weights.iter().enumerate() {
        if w == 1.0 {
            continue;
        }
        let mask = qubit_mask(n, q);
        for r in 0..dim {
            if r & mask != 0 {
                continue;
            }
            for c in 0..dim {
                if c & mask != 0 {
                    continue;
                }
                let (r1, c1) = (r | mask, c | mask);
                let avg = (rho[(r, c)] + rho[(r1, c1)]) * 0.5;
                rho[(r, c)] = rho[(r, c)] * w + avg * (1.0 - w);
                rho[(r1, c1)] = rho[(r1, c1)] * w + avg * (1.0 - w);
                rho[(r, c1)] *= w;
                rho[(r1, c)] *= w;
            }
        }
    }
}

/// Applies a region superoperator to a dense global density matrix.
pub fn apply_local(global: &mut CMat, n: usize, region: &[usize], op: &Superop) {
    let k = region.len();
    let d = 1usize << k;
    let offsets: Vec<usize> = (0..d)
        .map(|l| {
            region.iter().enumerate().filter(|(i, _)| l >> (k - 1 - i) & 1 == 1).map(|(_, &q)| qubit_mask(n, q)).sum()
        })
        .collect();
    let region_mask: usize = region.iter().map(|&q| qubit_mask(n, q)).sum();
    let bases: Vec<usize> = (0..1usize << n).filter(|b| b & region_mask == 0).collect();
    let mut block = CVec::zeros(d * d);
    let mut out = CVec::zeros(d * d);
    for &rb in &bases {
        for &cb in &bases {
            for a in 0..d {
                for b in 0..d {
                    block[a * d + b] = global[(rb + offsets[a], cb + offsets[b])];
                }
            }
            op.matrix.mul_to(&block, &mut out);
            for a in 0..d {
                for b in 0..d {
                    global[(rb + offsets[a], cb + offsets[b])] = out[a * d + b];
                }
            }
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RecoveryOptions {
    pub method: TwirlMethod,
    /// Fidelity against the forward-evolved reference every `stride`
    /// recovery steps (0 disables intermediate points).
    pub fidelity_stride: usize,
    pub trace_tolerance: f64,
}

impl Default for RecoveryOptions {
    fn default() -> Self {
        RecoveryOptions { method: TwirlMethod::ClosedForm, fidelity_stride: 0, trace_tolerance: 1e-6 }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RecoveryPoint {
    /// Recovery steps applied so far.
    pub step: usize,
    pub t: f64,
    pub fidelity: Option<f64>,
    pub min_prior_eigenvalue: f64,
}

#[derive(Clone, Debug)]
pub struct RecoveryOutcome {
    pub state: CMat,
    pub trace: Vec<RecoveryPoint>,
    pub final_fidelity: Option<f64>,
}

/// `ℱ_t(ρ₀)` for per-qubit measurement counts.
pub fn forward_state(rho0: &CMat, n: usize, counts: &[usize], gamma: f64, dt: f64) -> CMat {
    let weights: Vec<f64> = counts.iter().map(|&c| step_weight(gamma, dt).powi(c as i32)).collect();
    let mut m = rho0.clone();
    depolarize_qubits(&mut m, n, &weights);
    m
}

/// Runs the local recoveries from `start`. With a `reference` `ρ₀`, the
/// fidelity with `ℱ_t(ρ₀)` is recorded along the way and at the end.
pub fn run_recovery(
    schedule: &RecoverySchedule,
    priors: &RegionPriors,
    start: &CMat,
    reference: Option<&CMat>,
    opts: &RecoveryOptions,
) -> Result<RecoveryOutcome> {
    let n = schedule.n;
    if start.nrows() != 1 << n {
        return Err(Error::DimensionMismatch { expected: 1 << n, got: start.nrows() });
    }
    let mut state = start.clone();
    let mut counts = schedule.final_counts.clone();
    let total = schedule.steps.len();
    let mut trace = Vec::new();
    for (done, step) in schedule.steps.iter().enumerate() {
        let prior = priors.evolved(&step.region, &step.counts_before, schedule.gamma, schedule.dt)?;
        let min_prior = linalg::hermitian_eigen(&prior).0[0];
        let forward =
            depolarizing_step(step.region.len(), step.local_qubit(), step_weight(schedule.gamma, schedule.dt));
        let map = petz_superop(&prior, &forward, opts.method)?;
        apply_local(&mut state, n, &step.region, &map);
        counts[step.qubit] -= 1;
        let drift = (linalg::trace(&state).re - 1.0).abs();
        if drift > opts.trace_tolerance {
            return Err(Error::TraceDrift(drift));
        }
        let t = (total - done - 1) as f64 * schedule.dt;
        let record = opts.fidelity_stride > 0 && (done + 1) % opts.fidelity_stride == 0;
        let fidelity = match reference {
            Some(r) if record && done + 1 < total => {
                let target = DensityMatrix::new(forward_state(r, n, &counts, schedule.gamma, schedule.dt))?;
                Some(states::fidelity(&target, &DensityMatrix::new(hermitian_part(&state))?)?)
            }
            _ => None,
        };
        trace.push(RecoveryPoint { step: done + 1, t, fidelity, min_prior_eigenvalue: min_prior });
    }
    let final_fidelity = match reference {
        Some(r) => {
            Some(states::fidelity(&DensityMatrix::new(r.clone())?, &DensityMatrix::new(hermitian_part(&state))?)?)
        }
        None => None,
    };
    if let (Some(f), Some(last)) = (final_fidelity, trace.last_mut()) {
        last.fidelity = Some(f);
    }
    Ok(RecoveryOutcome { state, trace, final_fidelity })
}

fn hermitian_part(m: &CMat) -> CMat {
    (m + m.adjoint()).scale(0.5)
}

/// Settings of the TFIM recovery experiment.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TfimRecovery {
    pub n: usize,
    pub j: f64,
    pub bx: f64,
    pub gamma: f64,
    pub dt: f64,
    pub t_max: f64,
    pub half_width: usize,
    #[serde(default)]
    pub boundary: Boundary,
    #[serde(default = "default_floor")]
    pub spd_floor: f64,
    #[serde(default)]
    pub method: TwirlMethod,
    #[serde(default)]
    pub fidelity_stride: usize,
}

fn default_floor() -> f64 {
    DEFAULT_SPD_FLOOR
}

#[derive(Clone, Debug)]
pub struct TfimRecoveryReport {
    pub ground: TfimGround,
    pub outcome: RecoveryOutcome,
    /// Fidelity of the decohered start state with the ground state.
    pub start_fidelity: f64,
}

/// Decoheres the TFIM ground state for `t_max` under a round-robin schedule
/// and recovers it with local Petz maps built from exact priors.
pub fn run_tfim_recovery(cfg: &TfimRecovery) -> Result<TfimRecoveryReport> {
    let ground = tfim_ground_state(cfg.n, cfg.j, cfg.bx)?;
    let rho0 = ground.state.projector().into_matrix();
    let steps = crate::forward::step_count(cfg.t_max, cfg.dt)?;
    let schedule = build_schedule(&round_robin(cfg.n, steps), cfg.n, cfg.half_width, cfg.boundary, cfg.gamma, cfg.dt)?;
    let priors = RegionPriors::from_state(&rho0, cfg.n, &schedule.regions(), cfg.spd_floor)?;
    let start = forward_state(&rho0, cfg.n, &schedule.final_counts, cfg.gamma, cfg.dt);
    let start_fidelity = states::fidelity_with_pure(&DensityMatrix::new(start.clone())?, ground.state.amplitudes())?;
    let opts = RecoveryOptions { method: cfg.method, fidelity_stride: cfg.fidelity_stride, ..Default::default() };
    let outcome = run_recovery(&schedule, &priors, &start, Some(&rho0), &opts)?;
    Ok(TfimRecoveryReport { ground, outcome, start_fidelity })
}

/// Ground state of `H = −J Σ Z_i Z_{i+1} − B_x Σ X_i` with open boundaries.
#[derive(Clone, Debug)]
pub struct TfimGround {
    pub state: PureState,
    pub energy: f64,
    pub gap: f64,
    pub degenerate: bool,
}

/// Real symmetric TFIM Hamiltonian.
pub fn tfim_hamiltonian(n: usize, j: f64, bx: f64) -> DMatrix<f64> {
    let dim = 1usize << n;
    let mut h = DMatrix::<f64>::zeros(dim, dim);
    for b in 0..dim {
        for q in 0..n.saturating_sub(1) {
            let s1 = if b & qubit_mask(n, q) == 0 { 1.0 } else { -1.0 };
            let s2 = if b & qubit_mask(n, q + 1) == 0 { 1.0 } else { -1.0 };
            h[(b, b)] -= j * s1 * s2;
        }
        for q in 0..n {
            h[(b ^ qubit_mask(n, q), b)] -= bx;
        }
    }
    h
}

pub fn tfim_ground_state(n: usize, j: f64, bx: f64) -> Result<TfimGround> {
    if n == 0 || n > 12 {
        return Err(Error::InvalidParameter(format!("TFIM needs 1 ≤ n ≤ 12, got {n}")));
    }
    let eig = tfim_hamiltonian(n, j, bx).symmetric_eigen();
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let energy = eig.eigenvalues[order[0]];
    let gap = if order.len() > 1 { eig.eigenvalues[order[1]] - energy } else { f64::INFINITY };
    let v = eig.eigenvectors.column(order[0]);
    let amps = CVec::from_iterator(v.len(), v.iter().map(|&x| C64::new(x, 0.0)));
    let state = PureState::normalized(amps)?.canonical_phase();
    Ok(TfimGround { state, energy, gap, degenerate: gap < 1e-8 })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ensembles::random_mixed;
    use crate::rng;

    #[test]
    fn twirl_density_is_normalized() {
        let (taus, w) = linalg::gauss_legendre(201);
        let total: f64 = taus.iter().zip(&w).map(|(t, w)| 10.0 * w * twirl_density(10.0 * t)).sum();
        assert!((total - 1.0).abs() < 1e-12);
    }

    #[test]
    fn quadrature_kernel_matches_closed_form() {
        let (taus, w) = tau_quadrature(129);
        for s in [0.0, 0.3, 1.7, 4.0, 12.0] {
            let q: f64 = taus.iter().zip(&w).map(|(t, w)| w * (t * s).cos()).sum();
            assert!((q - twirl_kernel(s)).abs() < 1e-7, "s={s}");
        }
    }

    #[test]
    fn spd_deform_clips() {
        let m = CMat::from_diagonal(&CVec::from_vec(vec![
            C64::new(0.6, 0.0),
            C64::new(0.5, 0.0),
            C64::new(-0.1, 0.0),
            C64::new(0.0, 0.0),
        ]));
        let out = spd_deform(&m, 1e-3).unwrap();
        let total = 1.1 + 2e-3;
        let diag: Vec<f64> = (0..4).map(|i| out.matrix()[(i, i)].re).collect();
        for (got, want) in diag.iter().zip([0.6, 0.5, 1e-3, 1e-3]) {
            assert!((got - want / total).abs() < 1e-14);
        }
    }

    #[test]
    fn identity_forward_gives_identity_map() {
        let mut r = rng::stream(1, 0);
        let prior = random_mixed(2, &mut r);
        let map = petz_superop(&prior, &Superop::identity(4), TwirlMethod::ClosedForm).unwrap();
        assert!((map.matrix - CMat::identity(16, 16)).norm() < 1e-10);
    }

    #[test]
    fn recovers_prior_exactly() {
        let mut r = rng::stream(2, 0);
        for k in 1..=3 {
            let prior = random_mixed(k, &mut r);
            let fwd = depolarizing_step(k, k - 1, 0.9);
            for method in [TwirlMethod::ClosedForm, TwirlMethod::Untwirled] {
                let map = petz_superop(&prior, &fwd, method).unwrap();
                let back = map.apply(&fwd.apply(&prior));
                assert!((back - &prior).norm() < 1e-10);
                assert!(map.min_choi_eigenvalue() > -1e-10);
            }
        }
    }

    #[test]
    fn maximally_mixed_prior_gives_adjoint_channel() {
        let dt = 1e-3;
        let lambda = step_weight(1.0, dt);
        let prior = CMat::identity(2, 2).scale(0.5);
        let fwd = depolarizing_step(1, 0, lambda);
        let map = petz_superop(&prior, &fwd, TwirlMethod::ClosedForm).unwrap();
        let z = Pauli::Z.matrix();
        let out = map.apply(&linalg::mat2_to_dense(&z));
        let factor = out[(0, 0)].re;
        assert!((factor - (-4.0 * dt / 3.0_f64).exp()).abs() < 1e-12);
    }

    #[test]
    fn coarse_quadrature_is_rejected_for_near_singular_priors() {
        let prior = CMat::from_diagonal(&CVec::from_vec(vec![C64::new(1.0 - 1e-7, 0.0), C64::new(1e-7, 0.0)]));
        let fwd = depolarizing_step(1, 0, 0.99);
        let err = petz_superop(&prior, &fwd, TwirlMethod::Quadrature { nodes: DEFAULT_TAU_NODES }).unwrap_err();
        assert!(matches!(err, Error::QuadratureNotConverged(_)));
        let mut r = rng::stream(5, 0);
        let mild = random_mixed(1, &mut r);
        let exact = petz_superop(&mild, &fwd, TwirlMethod::ClosedForm).unwrap();
        let quad = petz_superop(&mild, &fwd, TwirlMethod::Quadrature { nodes: 129 }).unwrap();
        assert!((exact.matrix - quad.matrix).norm() < 1e-6);
    }

    #[test]
    fn shift_and_clip_regions() {
        assert_eq!(region_for(0, 10, 1, Boundary::Shift).unwrap(), vec![0, 1, 2]);
        assert_eq!(region_for(9, 10, 1, Boundary::Shift).unwrap(), vec![7, 8, 9]);
        assert_eq!(region_for(0, 10, 1, Boundary::Clip).unwrap(), vec![0, 1]);
        assert_eq!(region_for(4, 10, 1, Boundary::Clip).unwrap(), vec![3, 4, 5]);
        assert_eq!(region_for(1, 3, 1, Boundary::Shift).unwrap(), vec![0, 1, 2]);
    }

    #[test]
    fn local_application_matches_dense_embedding() {
        let mut r = rng::stream(3, 0);
        let n = 4;
        let rho = random_mixed(n, &mut r);
        let prior = random_mixed(2, &mut r);
        let op = petz_superop(&prior, &depolarizing_step(2, 0, 0.8), TwirlMethod::ClosedForm).unwrap();
        let mut local = rho.clone();
        apply_local(&mut local, n, &[1, 2], &op);
        let mut dense = CMat::zeros(16, 16);
        for a in 0..4 {
            for b in 0..4 {
                let mut e = CMat::zeros(4, 4);
                e[(a, b)] = ONE;
                let image = op.apply(&e);
                for c in 0..4 {
                    for d in 0..4 {
                        // vec index of (c,d) in the output
                        dense[(c * 4 + d, a * 4 + b)] = image[(c, d)];
                    }
                }
            }
        }
        let full = embed_superop(&dense, n, &[1, 2]);
        let expected = Superop { dim: 16, matrix: full }.apply(&rho);
        assert!((local - expected).norm() < 1e-12);
    }

    fn embed_superop(local: &CMat, n: usize, region: &[usize]) -> CMat {
        let dim = 1usize << n;
        let k = region.len();
        let split = |idx: usize| -> (usize, usize) {
            let mut sub = 0;
            for (i, &q) in region.iter().enumerate() {
                if idx & qubit_mask(n, q) != 0 {
                    sub |= 1 << (k - 1 - i);
                }
            }
            let rest = idx & !region.iter().map(|&q| qubit_mask(n, q)).sum::<usize>();
            (sub, rest)
        };
        let d = 1usize << k;
        CMat::from_fn(dim * dim, dim * dim, |o, i| {
            let (or, oc) = (o / dim, o % dim);
            let (ir, ic) = (i / dim, i % dim);
            let (ors, orr) = split(or);
            let (ocs, ocr) = split(oc);
            let (irs, irr) = split(ir);
            let (ics, icr) = split(ic);
            if orr != irr || ocr != icr {
                return C64::new(0.0, 0.0);
            }
            local[(ors * d + ocs, irs * d + ics)]
        })
    }

    #[test]
    fn depolarizing_matches_superop() {
        let mut r = rng::stream(4, 0);
        let rho = random_mixed(2, &mut r);
        let mut a = rho.clone();
        depolarize_qubits(&mut a, 2, &[1.0, 0.7]);
        let b = depolarizing_step(2, 1, 0.7).apply(&rho);
        assert!((a - b).norm() < 1e-14);
    }

    #[test]
    fn tfim_pure_field_is_plus_state() {
        let g = tfim_ground_state(3, 0.0, 1.0).unwrap();
        let plus = PureState::normalized(CVec::from_element(8, ONE)).unwrap();
        assert!((g.state.overlap(&plus).norm_sqr() - 1.0).abs() < 1e-12);
        assert!((g.energy + 3.0).abs() < 1e-12);
    }
}
