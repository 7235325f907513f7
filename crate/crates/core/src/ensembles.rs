//! Named source-state ensembles used as diffusion data.
//!
//! * `near-zero`: `(|0…0⟩ + Σ_j α_j|j⟩)/norm` with complex Gaussian `α_j`.
//! * `bell-perturbed`: the singlet `(|01⟩ − |10⟩)/√2` plus the same noise.
//! * `heisenberg-thermal`: energy eigenstates of
//!   `H = J σ₁·σ₂ + B_x σ₁ˣ + B_z σ₂ˣ` drawn with Gibbs weights at a
//!   temperature sampled uniformly from `[0, t_max]`.
//! * `tfim-ground`: the transverse-field Ising ground state (deterministic).
//!
//! Mixed sources are unravelled into pure samples by drawing an eigenvector
//! with probability equal to its eigenvalue.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, CMat, CVec, C64, ZERO};
use crate::pauli::{Pauli, PauliString};
use crate::petz;
use crate::rng::complex_gaussian;
use crate::states::PureState;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum SourceEnsemble {
    NearZero { n: usize, sigma: f64 },
    BellPerturbed { sigma: f64 },
    HeisenbergThermal { j: f64, bx: f64, bz: f64, t_max: f64 },
    TfimGround { n: usize, j: f64, bx: f64 },
}

impl SourceEnsemble {
    pub fn near_zero(n: usize, sigma: f64) -> Self {
        SourceEnsemble::NearZero { n, sigma }
    }

    pub fn n(&self) -> usize {
        match self {
            SourceEnsemble::NearZero { n, .. } | SourceEnsemble::TfimGround { n, .. } => *n,
            _ => 2,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            SourceEnsemble::NearZero { .. } => "near-zero",
            SourceEnsemble::BellPerturbed { .. } => "bell-perturbed",
            SourceEnsemble::HeisenbergThermal { .. } => "heisenberg-thermal",
            SourceEnsemble::TfimGround { .. } => "tfim-ground",
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<PureState> {
        match *self {
            SourceEnsemble::NearZero { n, sigma } => perturbed(PureState::basis(n, 0).into_amplitudes(), sigma, rng),
            SourceEnsemble::BellPerturbed { sigma } => perturbed(singlet().into_amplitudes(), sigma, rng),
            SourceEnsemble::HeisenbergThermal { j, bx, bz, t_max } => {
                let temperature = rng.random::<f64>() * t_max;
                let (energies, vectors) = linalg::hermitian_eigen(&heisenberg_hamiltonian(j, bx, bz));
                let k = gibbs_index(&energies, temperature, rng);
                PureState::normalized(vectors.column(k).into_owned())
            }
            SourceEnsemble::TfimGround { n, j, bx } => Ok(petz::tfim_ground_state(n, j, bx)?.state),
        }
    }
}

fn perturbed<R: Rng + ?Sized>(base: CVec, sigma: f64, rng: &mut R) -> Result<PureState> {
    let mut amps = base;
    for a in amps.iter_mut() {
        *a += complex_gaussian(rng, sigma);
    }
    PureState::normalized(amps)
}

/// `(|01⟩ − |10⟩)/√2`.
pub fn singlet() -> PureState {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    PureState::from_slice(&[ZERO, C64::new(s, 0.0), C64::new(-s, 0.0), ZERO]).expect("unit vector")
}

/// `J σ₁·σ₂ + B_x σ₁ˣ + B_z σ₂ˣ`.
pub fn heisenberg_hamiltonian(j: f64, bx: f64, bz: f64) -> CMat {
    let mut h = CMat::zeros(4, 4);
    for a in Pauli::NONTRIVIAL {
        h += PauliString::from_axes(&[a, a]).matrix().scale(j);
    }
    h += PauliString::from_axes(&[Pauli::X, Pauli::I]).matrix().scale(bx);
    h += PauliString::from_axes(&[Pauli::I, Pauli::X]).matrix().scale(bz);
    h
}

fn gibbs_index<R: Rng + ?Sized>(energies: &[f64], temperature: f64, rng: &mut R) -> usize {
    if temperature <= 1e-12 {
        return 0;
    }
    let e0 = energies[0];
    let weights: Vec<f64> = energies.iter().map(|e| (-(e - e0) / temperature).exp()).collect();
    pick(&weights, rng)
}

fn pick<R: Rng + ?Sized>(weights: &[f64], rng: &mut R) -> usize {
    let total: f64 = weights.iter().sum();
    let mut u = rng.random::<f64>() * total;
    for (i, w) in weights.iter().enumerate() {
        if u < *w {
            return i;
        }
        u -= w;
    }
    weights.len() - 1
}

/// Draws a pure state from the eigen-decomposition of a mixed state.
pub fn sample_from_mixed<R: Rng + ?Sized>(rho: &CMat, rng: &mut R) -> Result<PureState> {
    let (values, vectors) = linalg::hermitian_eigen(rho);
    let weights: Vec<f64> = values.iter().map(|v| v.max(0.0)).collect();
    if weights.iter().sum::<f64>() <= 0.0 {
        return Err(Error::InvalidParameter("density matrix has no positive weight".into()));
    }
    PureState::normalized(vectors.column(pick(&weights, rng)).into_owned())
}

/// Random full-rank mixed state `G G† / Tr(G G†)` from a complex Ginibre matrix.
pub fn random_mixed<R: Rng + ?Sized>(n: usize, rng: &mut R) -> CMat {
    let dim = 1usize << n;
    let g = CMat::from_fn(dim, dim, |_, _| complex_gaussian(rng, 1.0));
    let m = &g * g.adjoint();
    let tr = linalg::trace(&m).re;
    m.unscale(tr)
}

/// Random pure state, Haar distributed.
pub fn random_pure<R: Rng + ?Sized>(n: usize, rng: &mut R) -> PureState {
    let amps = CVec::from_fn(1 << n, |_, _| complex_gaussian(rng, 1.0));
    PureState::normalized(amps).expect("nonzero Gaussian vector")
}
