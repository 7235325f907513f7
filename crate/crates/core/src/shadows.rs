//! Classical shadows from weak-measurement records.
//!
//! A record defines the snapshot `σ_t = K_t† K_t`. Averaged over records the
//! measure-and-prepare map `ρ ↦ E[Tr(σ_t ρ) σ_t]` is diagonal in the Pauli
//! basis with weights depending only on the support size `m`. They obey the
//! tridiagonal system
//!
//! `dw_m/dt = −(8m/3n)γ w_m + (4m/3n)γ w_{m−1} + (4(n−m)/n)γ w_{m+1}`
//!
//! with `w_m(0) = δ_{m,0}`, solved in closed form by
//! `w_m = w_0 · w̃₁^m`, `w̃₁ = (1 − e^{−16γt/3n}) / (3 + e^{−16γt/3n})`.
//!
//! Because `K_t` is a tensor product over qubits, so is `σ_t`. Each
//! trace-normalized factor `(𝟙 + b·σ)/2` is inverted by `b ↦ b / w̃₁(t_j)`
//! with `t_j` the time that qubit spent under measurement, and estimates of
//! Pauli expectations are products over the support.

use nalgebra::{DMatrix, SymmetricEigen};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::forward::{self, MeasurementRecord};
use crate::linalg::{self, CMat, Mat2};
use crate::pauli::{Pauli, PauliString};

/// Per-qubit snapshot `σ = e^{ln_trace} ⊗_j σ^{(j)}` with unit-trace factors.
#[derive(Clone, Debug)]
pub struct Snapshot {
    pub factors: Vec<Mat2>,
    /// Bloch vectors of the factors, `σ^{(j)} = (𝟙 + b_j·σ)/2`.
    pub bloch: Vec<[f64; 3]>,
    pub ln_trace: f64,
    /// Measurement time of each qubit.
    pub times: Vec<f64>,
}

impl Snapshot {
    /// Dense `σ`, for small systems.
    pub fn dense(&self) -> CMat {
        let mut m = CMat::identity(1, 1);
        for f in &self.factors {
            m = linalg::kron(&m, &linalg::mat2_to_dense(f));
        }
        m.scale(self.ln_trace.exp())
    }

    /// `Tr(σ P) / Tr σ`.
    pub fn normalized_expectation(&self, p: &PauliString) -> f64 {
        p.support().into_iter().map(|q| bloch_component(&self.bloch[q], p.axis(q))).product()
    }
}

fn bloch_component(b: &[f64; 3], p: Pauli) -> f64 {
    match p {
        Pauli::I => 1.0,
        Pauli::X => b[0],
        Pauli::Y => b[1],
        Pauli::Z => b[2],
    }
}

/// Builds the per-qubit snapshot of a record.
pub fn snapshot(record: &MeasurementRecord) -> Result<Snapshot> {
    let (kraus, ln_scale) = forward::qubit_factors(record, record.len())?;
    let mut factors = Vec::with_capacity(record.n);
    let mut bloch = Vec::with_capacity(record.n);
    let mut ln_trace = 2.0 * ln_scale;
    for k in &kraus {
        let s = k.adjoint() * k;
        let tr = (s[(0, 0)] + s[(1, 1)]).re;
        let f = s.unscale(tr);
        ln_trace += tr.ln();
        bloch.push([2.0 * f[(0, 1)].re, -2.0 * f[(0, 1)].im, (f[(0, 0)] - f[(1, 1)]).re]);
        factors.push(f);
    }
    let times = record.steps_per_qubit().into_iter().map(|c| c as f64 * record.dt).collect();
    Ok(Snapshot { factors, bloch, ln_trace, times })
}

/// Closed-form channel weight `w_m(t)`, normalized so `w_m(0) = δ_{m,0}`.
pub fn shadow_weight(gamma: f64, n: usize, t: f64, m: usize) -> f64 {
    let a = 4.0 * gamma * t / (3.0 * n as f64);
    let w0 = ((3.0 * a.exp() + (-3.0 * a).exp()) / 4.0).powi(n as i32);
    w0 * shadow_weight_ratio(gamma, n, t, m)
}

/// `w̃_m(t) = w_m / w_0 = w̃₁^m`.
pub fn shadow_weight_ratio(gamma: f64, n: usize, t: f64, m: usize) -> f64 {
    let e = (-16.0 * gamma * t / (3.0 * n as f64)).exp();
    ((1.0 - e) / (3.0 + e)).powi(m as i32)
}

/// Per-qubit ratio after time `t_j` of measuring that qubit alone.
pub fn qubit_weight_ratio(gamma: f64, t_j: f64) -> f64 {
    shadow_weight_ratio(gamma, 1, t_j, 1)
}

/// Tridiagonal generator `D` of the weight system.
pub fn weight_generator(gamma: f64, n: usize) -> DMatrix<f64> {
    let nf = n as f64;
    DMatrix::from_fn(n + 1, n + 1, |m, k| {
        let mf = m as f64;
        if k == m {
            -8.0 * mf * gamma / (3.0 * nf)
        } else if k + 1 == m {
            4.0 * mf * gamma / (3.0 * nf)
        } else if k == m + 1 {
            4.0 * (nf - mf) * gamma / nf
        } else {
            0.0
        }
    })
}

/// Eigenvalues of `D`, ascending, from its symmetric similarity transform
/// `D' = V D V⁻¹` with off-diagonal `√(c₀c₂) √((m+1)(n−m))`.
pub fn weight_generator_spectrum(gamma: f64, n: usize) -> Vec<f64> {
    let nf = n as f64;
    let c0 = 4.0 * gamma / (3.0 * nf);
    let c1 = -8.0 * gamma / (3.0 * nf);
    let c2 = 4.0 * gamma / nf;
    let g = (c0 * c2).sqrt();
    let sym = DMatrix::from_fn(n + 1, n + 1, |m, k| {
        if k == m {
            c1 * m as f64
        } else if k == m + 1 {
            g * (((m + 1) as f64) * (nf - m as f64)).sqrt()
        } else if m == k + 1 {
            g * (((k + 1) as f64) * (nf - k as f64)).sqrt()
        } else {
            0.0
        }
    });
    let mut ev: Vec<f64> = SymmetricEigen::new(sym).eigenvalues.iter().copied().collect();
    ev.sort_by(f64::total_cmp);
    ev
}

/// Integrates the weight system with classical RK4 from `w(0) = e₀`,
/// returning `w(t)`.
pub fn integrate_weights(gamma: f64, n: usize, t: f64, h: f64) -> Vec<f64> {
    let d = weight_generator(gamma, n);
    let mut w = nalgebra::DVector::<f64>::zeros(n + 1);
    w[0] = 1.0;
    let steps = (t / h).ceil().max(1.0) as usize;
    let h = t / steps as f64;
    for _ in 0..steps {
        let k1 = &d * &w;
        let k2 = &d * (&w + &k1 * (h / 2.0));
        let k3 = &d * (&w + &k2 * (h / 2.0));
        let k4 = &d * (&w + &k3 * h);
        w += (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (h / 6.0);
    }
    w.iter().copied().collect()
}

/// `‖P‖²_sh = w̃₁(t)^{−|P|}`.
pub fn shadow_norm(gamma: f64, n: usize, t: f64, p: &PauliString) -> Result<f64> {
    if t <= 0.0 {
        return Err(Error::ZeroTime);
    }
    Ok(shadow_weight_ratio(gamma, n, t, p.weight()).recip())
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ReconstructOptions {
    /// Smallest admissible `w̃₁(t)^{|P|}`.
    pub weight_floor: f64,
    /// Target precision used to report the required sample count.
    pub precision: f64,
}

impl Default for ReconstructOptions {
    fn default() -> Self {
        ReconstructOptions { weight_floor: 1e-3, precision: 1e-2 }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ShadowEstimate {
    pub string: PauliString,
    pub mean: f64,
    /// Jackknife standard error over records.
    pub std_error: f64,
    /// Sample variance of the single-record estimates.
    pub variance: f64,
    pub shadow_norm: f64,
    pub samples: usize,
}

/// Single-record estimate of `Tr(ρ P)`.
pub fn invert_snapshot(s: &Snapshot, gamma: f64, p: &PauliString) -> f64 {
    p.support()
        .into_iter()
        .map(|q| bloch_component(&s.bloch[q], p.axis(q)) / qubit_weight_ratio(gamma, s.times[q]))
        .product()
}

/// Estimates `Tr(ρ̄₀ P)` for every target from records of duration `t`.
pub fn reconstruct(
    records: &[MeasurementRecord],
    targets: &[PauliString],
    opts: &ReconstructOptions,
) -> Result<Vec<ShadowEstimate>> {
    let first = records.first().ok_or(Error::Empty("record set"))?;
    let (n, gamma) = (first.n, first.gamma);
    for r in records {
        if r.n != n {
            return Err(Error::QubitMismatch(n, r.n));
        }
        if r.gamma != gamma {
            return Err(Error::InvalidParameter("records mix measurement strengths".into()));
        }
    }
    let t = first.duration();
    for p in targets {
        if p.n() != n {
            return Err(Error::QubitMismatch(n, p.n()));
        }
        let weight = shadow_weight_ratio(gamma, n, t, p.weight());
        if weight < opts.weight_floor {
            let norm = weight.recip();
            return Err(Error::WeightBelowFloor {
                weight,
                floor: opts.weight_floor,
                required_samples: (norm / (opts.precision * opts.precision)).ceil(),
                precision: opts.precision,
            });
        }
    }
    let snapshots: Vec<Snapshot> = records.par_iter().map(snapshot).collect::<Result<_>>()?;
    targets
        .iter()
        .map(|p| {
            let values: Vec<f64> = snapshots.par_iter().map(|s| invert_snapshot(s, gamma, p)).collect();
            let (mean, variance, std_error) = jackknife_mean(&values);
            Ok(ShadowEstimate {
                string: *p,
                mean,
                std_error,
                variance,
                shadow_norm: shadow_norm(gamma, n, t, p)?,
                samples: values.len(),
            })
        })
        .collect()
}

/// Mean, sample variance and jackknife standard error.
fn jackknife_mean(values: &[f64]) -> (f64, f64, f64) {
    let m = values.len() as f64;
    let total = linalg::pairwise_sum(values);
    let mean = total / m;
    if values.len() < 2 {
        return (mean, 0.0, 0.0);
    }
    let dev: Vec<f64> = values.iter().map(|v| (v - mean) * (v - mean)).collect();
    let variance = linalg::pairwise_sum(&dev) / (m - 1.0);
    let loo: Vec<f64> = values.iter().map(|v| (total - v) / (m - 1.0)).collect();
    let loo_mean = linalg::pairwise_sum(&loo) / m;
    let spread: Vec<f64> = loo.iter().map(|l| (l - loo_mean) * (l - loo_mean)).collect();
    let se = ((m - 1.0) / m * linalg::pairwise_sum(&spread)).sqrt();
    (mean, variance, se)
}
