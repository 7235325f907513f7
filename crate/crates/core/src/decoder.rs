//! Simulation-based decoding of measurement records.
//!
//! The initial state is estimated by maximum likelihood: the record's
//! likelihood for a pure input is `⟨ψ|σ_T|ψ⟩` with `σ_T = K_T† K_T`, so the
//! estimate is the top eigenvector of `σ_T`. Because the accumulated Kraus
//! operator factorizes over qubits, so does `σ_T`, and for more than
//! [`DENSE_LIMIT`] qubits the estimate is built from the per-qubit `2×2`
//! factors instead of a dense eigensolve.
//!
//! Given an initial state the decoder replays the record to recover every
//! intermediate state and its Pauli expectation series.

use crate::error::{Error, Result};
use crate::forward::{self, MeasurementRecord};
use crate::linalg::{self, CMat, CVec, Mat2, C64};
use crate::pauli::{self, PauliString, PauliVector};
use crate::states::PureState;

/// Largest qubit count decoded with a dense eigensolve.
pub const DENSE_LIMIT: usize = 6;
/// Relative eigenvalue gap below which the top eigenspace is degenerate.
pub const DEGENERACY_GAP: f64 = 1e-9;

#[derive(Clone, Debug)]
pub struct MleEstimate {
    pub state: PureState,
    /// Natural log of the top eigenvalue of `K_T† K_T`.
    pub ln_likelihood: f64,
    /// Relative gap between the two largest eigenvalues.
    pub gap: f64,
    pub degenerate: bool,
}

impl MleEstimate {
    pub fn likelihood(&self) -> f64 {
        self.ln_likelihood.exp()
    }
}

#[derive(Clone, Debug)]
pub struct DecodedTrajectory {
    pub psi0_hat: PureState,
    pub states: Vec<PureState>,
    pub z_series: Vec<PauliVector>,
}

/// Default weight cutoff for the expectation series.
pub fn default_weight_cutoff(n: usize) -> usize {
    if n <= 2 {
        n
    } else {
        2
    }
}

/// Maximum-likelihood pure initial state for a record.
pub fn mle_initial_state(record: &MeasurementRecord) -> Result<MleEstimate> {
    if record.is_empty() {
        return Err(Error::Empty("measurement record"));
    }
    if record.n <= DENSE_LIMIT {
        let acc = forward::accumulated_kraus(record, record.len())?;
        let sigma = acc.matrix.adjoint() * &acc.matrix;
        let (values, vectors) = linalg::hermitian_eigen(&sigma);
        let (state, gap, degenerate) = top_eigenvector(&values, &vectors)?;
        let top = values[values.len() - 1];
        Ok(MleEstimate { state, ln_likelihood: top.ln() + 2.0 * acc.ln_scale, gap, degenerate })
    } else {
        let (factors, ln_scale) = forward::qubit_factors(record, record.len())?;
        let mut amps = CVec::from_element(1, linalg::ONE);
        let mut ln_likelihood = 2.0 * ln_scale;
        let mut gap = f64::INFINITY;
        let mut degenerate = false;
        for k in &factors {
            let sigma = mat2_dense(&(k.adjoint() * k));
            let (values, vectors) = linalg::hermitian_eigen(&sigma);
            let (q, g, d) = top_eigenvector(&values, &vectors)?;
            ln_likelihood += values[1].ln();
            gap = gap.min(g);
            degenerate |= d;
            amps = amps.kronecker(q.amplitudes());
        }
        let state = PureState::normalized(amps)?.canonical_phase();
        Ok(MleEstimate { state, ln_likelihood, gap, degenerate })
    }
}

fn mat2_dense(m: &Mat2) -> CMat {
    linalg::mat2_to_dense(m)
}

/// Top eigenvector with the lowest-index basis tie-break on degeneracy.
fn top_eigenvector(values: &[f64], vectors: &CMat) -> Result<(PureState, f64, bool)> {
    let dim = values.len();
    let top = values[dim - 1];
    let second = if dim > 1 { values[dim - 2] } else { 0.0 };
    let gap = if top > 0.0 { (top - second) / top } else { 0.0 };
    if gap >= DEGENERACY_GAP {
        let v = vectors.column(dim - 1).into_owned();
        return Ok((PureState::normalized(v)?.canonical_phase(), gap, false));
    }
    let space: Vec<usize> = (0..dim).filter(|&i| top - values[i] <= DEGENERACY_GAP * top.abs()).collect();
    for b in 0..dim {
        let mut proj = CVec::zeros(dim);
        for &i in &space {
            let col = vectors.column(i);
            proj += col.scale(1.0) * col[b].conj();
        }
        if proj.norm() > 1e-8 {
            return Ok((PureState::normalized(proj)?.canonical_phase(), gap, true));
        }
    }
    Err(Error::Empty("top eigenspace"))
}

/// Replays `record` from `psi0`, storing states and expectations of all
/// strings up to `weight_cutoff` (the identity entry is always 1).
pub fn reconstruct_series(
    record: &MeasurementRecord,
    psi0: &PureState,
    weight_cutoff: usize,
) -> Result<DecodedTrajectory> {
    if psi0.n() != record.n {
        return Err(Error::QubitMismatch(psi0.n(), record.n));
    }
    record.validate()?;
    let n = record.n;
    let mut strings = vec![PauliString::identity(n)];
    strings.extend(pauli::strings_up_to_weight(n, weight_cutoff));
    let mut amps: Vec<C64> = psi0.as_slice().to_vec();
    let mut states = Vec::with_capacity(record.len() + 1);
    let mut z_series = Vec::with_capacity(record.len() + 1);
    states.push(psi0.clone());
    z_series.push(PauliVector::from_state(&amps, &strings)?);
    for (k, s) in record.steps.iter().enumerate() {
        let f = forward::kraus_factor(s.axis, s.o, record.gamma, record.dt);
        linalg::apply_single_qubit(&mut amps, n, s.q, &f);
        let norm: f64 = amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        if norm.is_nan() || norm <= 1e-150 {
            return Err(Error::NormUnderflow { step: k });
        }
        for a in amps.iter_mut() {
            *a /= norm;
        }
        z_series.push(PauliVector::from_state(&amps, &strings)?);
        states.push(PureState::new(CVec::from_column_slice(&amps))?);
    }
    Ok(DecodedTrajectory { psi0_hat: psi0.clone(), states, z_series })
}

/// Where the decoder takes the initial state from.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum InitialEstimate {
    /// Maximum-likelihood estimate from the record alone.
    #[default]
    MaximumLikelihood,
    /// The state the record was generated from, when the simulator knows it.
    Known,
}

/// Decodes a record, using `known` only with [`InitialEstimate::Known`].
pub fn decode(
    record: &MeasurementRecord,
    estimate: InitialEstimate,
    known: &PureState,
    weight_cutoff: usize,
) -> Result<DecodedTrajectory> {
    match estimate {
        InitialEstimate::MaximumLikelihood => {
            reconstruct_series(record, &mle_initial_state(record)?.state, weight_cutoff)
        }
        InitialEstimate::Known => reconstruct_series(record, known, weight_cutoff),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::forward::{Axis, MeasurementStep};

    fn record(n: usize, gamma: f64, steps: Vec<(usize, Axis, i8)>) -> MeasurementRecord {
        let mut r = MeasurementRecord::new(0, gamma, 0.01, n);
        r.steps = steps.into_iter().map(|(q, axis, o)| MeasurementStep { q, axis, o }).collect();
        r
    }

    #[test]
    fn all_plus_z_record_gives_zero_state() {
        let r = record(1, 1.0, vec![(0, Axis::Z, 1); 300]);
        let est = mle_initial_state(&r).unwrap();
        assert!(!est.degenerate);
        assert!((est.state.overlap(&PureState::basis(1, 0)).norm_sqr() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn zero_strength_is_degenerate() {
        let r = record(2, 0.0, vec![(0, Axis::X, 1), (1, Axis::Y, -1)]);
        let est = mle_initial_state(&r).unwrap();
        assert!(est.degenerate);
        assert!((est.state.overlap(&PureState::basis(2, 0)).norm_sqr() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn factorized_path_matches_dense() {
        let steps = vec![
            (0, Axis::X, 1),
            (1, Axis::Y, -1),
            (2, Axis::Z, 1),
            (0, Axis::Z, -1),
            (1, Axis::X, 1),
            (2, Axis::Y, 1),
        ];
        let r = record(3, 5.0, steps);
        let dense = mle_initial_state(&r).unwrap();
        let (factors, ln_scale) = forward::qubit_factors(&r, r.len()).unwrap();
        let mut amps = CVec::from_element(1, linalg::ONE);
        let mut ll = 2.0 * ln_scale;
        for k in &factors {
            let (values, vectors) = linalg::hermitian_eigen(&mat2_dense(&(k.adjoint() * k)));
            ll += values[1].ln();
            amps = amps.kronecker(&vectors.column(1).into_owned());
        }
        let product = PureState::normalized(amps).unwrap();
        assert!((dense.state.overlap(&product).norm_sqr() - 1.0).abs() < 1e-10);
        assert!((dense.ln_likelihood - ll).abs() < 1e-10);
    }

    #[test]
    fn identity_series_is_one() {
        let r = record(2, 1.0, vec![(0, Axis::X, 1), (1, Axis::Z, -1)]);
        let psi = PureState::basis(2, 1);
        let d = reconstruct_series(&r, &psi, 2).unwrap();
        assert_eq!(d.states.len(), 3);
        assert_eq!(d.states[0], psi);
        for z in &d.z_series {
            assert!((z.get(&PauliString::identity(2)) - 1.0).abs() < 1e-14);
            assert_eq!(z.len(), 16);
        }
    }
}
