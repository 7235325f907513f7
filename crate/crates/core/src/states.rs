//! Pure states, density matrices, coherent product states and the metrics
//! used to score recoveries: pure-state trace distance, Uhlmann fidelity and
//! conditional mutual information.
//!
//! Entropies are in nats. The pure-state distance is `√(2(1−|⟨a|b⟩|²))`,
//! which ranges over `[0, √2]`; it feeds every Wasserstein cost in the crate.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, CMat, CVec, C64, ONE};
use crate::pauli::{dim_to_qubits, Pauli, PauliString};

pub const NORM_TOLERANCE: f64 = 1e-10;
pub const EIGEN_TOLERANCE: f64 = 1e-8;
pub const ENTROPY_FLOOR: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq)]
pub struct PureState {
    n: usize,
    amplitudes: CVec,
}

impl PureState {
    /// Wraps amplitudes that are already normalized.
    pub fn new(amplitudes: CVec) -> Result<Self> {
        let n = dim_to_qubits(amplitudes.len())?;
        let norm = amplitudes.norm();
        if (norm - 1.0).abs() > NORM_TOLERANCE {
            return Err(Error::NotUnit(norm));
        }
        Ok(PureState { n, amplitudes })
    }

    /// Normalizes arbitrary nonzero amplitudes.
    pub fn normalized(amplitudes: CVec) -> Result<Self> {
        let n = dim_to_qubits(amplitudes.len())?;
        let norm = amplitudes.norm();
        if !norm.is_finite() || norm <= 1e-300 {
            return Err(Error::NotUnit(norm));
        }
        Ok(PureState { n, amplitudes: amplitudes.unscale(norm) })
    }

    pub fn basis(n: usize, index: usize) -> Self {
        let mut a = CVec::zeros(1 << n);
        a[index] = ONE;
        PureState { n, amplitudes: a }
    }

    pub fn from_slice(values: &[C64]) -> Result<Self> {
        PureState::new(CVec::from_column_slice(values))
    }

    /// Product of single-qubit Bloch states `(𝟙 + n·σ)/2`.
    pub fn from_bloch(v: &BlochProduct) -> Self {
        let mut amps = CVec::from_element(1, ONE);
        for r in &v.vectors {
            let theta = r[2].clamp(-1.0, 1.0).acos();
            let phi = r[1].atan2(r[0]);
            let q = CVec::from_column_slice(&[
                C64::new((theta / 2.0).cos(), 0.0),
                C64::from_polar((theta / 2.0).sin(), phi),
            ]);
            amps = amps.kronecker(&q);
        }
        PureState { n: v.vectors.len(), amplitudes: amps }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn amplitudes(&self) -> &CVec {
        &self.amplitudes
    }

    pub fn as_slice(&self) -> &[C64] {
        self.amplitudes.as_slice()
    }

    pub fn into_amplitudes(self) -> CVec {
        self.amplitudes
    }

    pub fn overlap(&self, other: &PureState) -> C64 {
        self.amplitudes.dotc(&other.amplitudes)
    }

    pub fn expectation(&self, p: &PauliString) -> f64 {
        p.without_phase().expectation(self.as_slice()).re
    }

    /// Bloch vector of a single-qubit state.
    pub fn bloch_vector(&self) -> [f64; 3] {
        assert_eq!(self.n, 1, "bloch_vector needs one qubit");
        [Pauli::X, Pauli::Y, Pauli::Z].map(|a| self.expectation(&PauliString::single(1, 0, a)))
    }

    pub fn projector(&self) -> DensityMatrix {
        DensityMatrix { n: self.n, matrix: &self.amplitudes * self.amplitudes.adjoint() }
    }

    /// Applies an operator and renormalizes.
    pub fn evolve(&self, op: &CMat) -> Result<PureState> {
        PureState::normalized(op * &self.amplitudes)
    }

    /// Fixes the global phase so the first significant amplitude is real
    /// and positive.
    pub fn canonical_phase(mut self) -> Self {
        if let Some(a) = self.amplitudes.iter().find(|a| a.norm() > 1e-8).copied() {
            let rot = a.conj() / a.norm();
            for v in self.amplitudes.iter_mut() {
                *v *= rot;
            }
        }
        self
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct DensityMatrix {
    n: usize,
    matrix: CMat,
}

impl DensityMatrix {
    /// Checks Hermiticity and trace; positivity is checked where a metric
    /// needs it.
    pub fn new(matrix: CMat) -> Result<Self> {
        let n = dim_to_qubits(matrix.nrows())?;
        if matrix.ncols() != matrix.nrows() {
            return Err(Error::DimensionMismatch { expected: matrix.nrows(), got: matrix.ncols() });
        }
        let dev = linalg::hermiticity_error(&matrix);
        if dev > NORM_TOLERANCE {
            return Err(Error::NotHermitian(dev));
        }
        let tr = linalg::trace(&matrix).re;
        if (tr - 1.0).abs() > NORM_TOLERANCE {
            return Err(Error::InvalidParameter(format!("trace {tr} differs from 1")));
        }
        Ok(DensityMatrix { n, matrix })
    }

    pub fn maximally_mixed(n: usize) -> Self {
        let dim = 1usize << n;
        DensityMatrix { n, matrix: CMat::identity(dim, dim).unscale(dim as f64) }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn matrix(&self) -> &CMat {
        &self.matrix
    }

    pub fn into_matrix(self) -> CMat {
        self.matrix
    }

    pub fn trace(&self) -> f64 {
        linalg::trace(&self.matrix).re
    }

    pub fn purity(&self) -> f64 {
        linalg::frobenius_sq(&self.matrix)
    }

    pub fn eigenvalues(&self) -> Vec<f64> {
        linalg::hermitian_eigen(&self.matrix).0
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.eigenvalues()[0]
    }

    pub fn partial_trace(&self, keep: &[usize]) -> DensityMatrix {
        DensityMatrix { n: keep.len(), matrix: linalg::partial_trace(&self.matrix, self.n, keep) }
    }

    pub fn expectation(&self, p: &PauliString) -> f64 {
        p.without_phase().trace_with(&self.matrix).re
    }

    /// Von Neumann entropy in nats.
    pub fn entropy(&self) -> f64 {
        entropy_of(&self.matrix)
    }
}

fn entropy_of(m: &CMat) -> f64 {
    linalg::hermitian_eigen(m).0.into_iter().filter(|&l| l > ENTROPY_FLOOR).map(|l| -l * l.ln()).sum()
}

/// Product of unit Bloch vectors, one per qubit.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BlochProduct {
    vectors: Vec<[f64; 3]>,
}

impl BlochProduct {
    pub fn new(vectors: Vec<[f64; 3]>) -> Result<Self> {
        for v in &vectors {
            let norm = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
            if (norm - 1.0).abs() > NORM_TOLERANCE {
                return Err(Error::NotUnit(norm));
            }
        }
        Ok(BlochProduct { vectors })
    }

    pub fn vectors(&self) -> &[[f64; 3]] {
        &self.vectors
    }
}

/// `√(2(1 − |⟨a|b⟩|²))`.
pub fn trace_distance_pure(a: &PureState, b: &PureState) -> Result<f64> {
    if a.n != b.n {
        return Err(Error::QubitMismatch(a.n, b.n));
    }
    let f = a.overlap(b).norm_sqr().min(1.0);
    Ok((2.0 * (1.0 - f)).max(0.0).sqrt())
}

/// Uhlmann fidelity `(Tr √(√a b √a))²`.
pub fn fidelity(a: &DensityMatrix, b: &DensityMatrix) -> Result<f64> {
    if a.n != b.n {
        return Err(Error::QubitMismatch(a.n, b.n));
    }
    let (va, ua) = linalg::hermitian_eigen(&a.matrix);
    check_psd(&va)?;
    if va[va.len() - 1] > 1.0 - 1e-12 {
        let psi = ua.column(va.len() - 1).into_owned();
        return fidelity_with_pure(b, &psi);
    }
    let sqrt_a = linalg::from_spectrum(&va, &ua, |l| C64::new(l.max(0.0).sqrt(), 0.0));
    let inner = &sqrt_a * &b.matrix * &sqrt_a;
    let (vi, _) = linalg::hermitian_eigen(&inner);
    check_psd(&vi)?;
    let s: f64 = vi.iter().map(|l| l.max(0.0).sqrt()).sum();
    Ok((s * s).clamp(0.0, 1.0))
}

/// `⟨ψ|ρ|ψ⟩`, the fidelity between `ρ` and a pure state.
pub fn fidelity_with_pure(rho: &DensityMatrix, psi: &CVec) -> Result<f64> {
    if psi.len() != rho.matrix.nrows() {
        return Err(Error::DimensionMismatch { expected: rho.matrix.nrows(), got: psi.len() });
    }
    Ok((psi.adjoint() * &rho.matrix * psi)[(0, 0)].re.clamp(0.0, 1.0))
}

fn check_psd(values: &[f64]) -> Result<()> {
    match values.first() {
        Some(&l) if l < -EIGEN_TOLERANCE => Err(Error::NegativeEigenvalue(l)),
        _ => Ok(()),
    }
}

/// `I(A:C|B) = S(AB) + S(BC) − S(B) − S(ABC)` in nats.
pub fn cmi(rho: &DensityMatrix, a: &[usize], b: &[usize], c: &[usize]) -> Result<f64> {
    let mut seen = vec![false; rho.n];
    for &q in a.iter().chain(b).chain(c) {
        if q >= rho.n {
            return Err(Error::QubitOutOfRange { index: q, n: rho.n });
        }
        if seen[q] {
            return Err(Error::OverlappingPartition(q));
        }
        seen[q] = true;
    }
    let s = |qs: Vec<usize>| -> f64 {
        if qs.is_empty() {
            return 0.0;
        }
        let mut qs = qs;
        qs.sort_unstable();
        entropy_of(&linalg::partial_trace(&rho.matrix, rho.n, &qs))
    };
    let cat = |x: &[usize], y: &[usize]| -> Vec<usize> { x.iter().chain(y).copied().collect() };
    let abc: Vec<usize> = a.iter().chain(b).chain(c).copied().collect();
    Ok(s(cat(a, b)) + s(cat(b, c)) - s(b.to_vec()) - s(abc))
}

/// `|n⟩⟨n| = ∏_j (𝟙 + n_j·σ_j)/2`.
pub fn coherent_projector(v: &BlochProduct) -> DensityMatrix {
    let mut m = CMat::from_element(1, 1, ONE);
    for r in &v.vectors {
        let factor = CMat::from_row_slice(
            2,
            2,
            &[
                C64::new((1.0 + r[2]) / 2.0, 0.0),
                C64::new(r[0] / 2.0, -r[1] / 2.0),
                C64::new(r[0] / 2.0, r[1] / 2.0),
                C64::new((1.0 - r[2]) / 2.0, 0.0),
            ],
        );
        m = m.kronecker(&factor);
    }
    DensityMatrix { n: v.vectors.len(), matrix: m }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::ZERO;

    fn plus() -> PureState {
        PureState::normalized(CVec::from_column_slice(&[ONE, ONE])).unwrap()
    }

    #[test]
    fn trace_distance_examples() {
        let zero = PureState::basis(1, 0);
        let one = PureState::basis(1, 1);
        assert!(trace_distance_pure(&zero, &zero).unwrap().abs() < 1e-12);
        assert!((trace_distance_pure(&zero, &one).unwrap() - 2f64.sqrt()).abs() < 1e-12);
        assert!((trace_distance_pure(&zero, &plus()).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn fidelity_examples() {
        let zero = PureState::basis(1, 0).projector();
        let one = PureState::basis(1, 1).projector();
        let mixed = DensityMatrix::maximally_mixed(1);
        assert!((fidelity(&zero, &zero).unwrap() - 1.0).abs() < 1e-12);
        assert!(fidelity(&zero, &one).unwrap().abs() < 1e-12);
        assert!((fidelity(&mixed, &zero).unwrap() - 0.5).abs() < 1e-12);
        assert!((fidelity(&mixed, &mixed).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn cmi_examples() {
        let ghz = PureState::normalized(CVec::from_fn(8, |i, _| if i == 0 || i == 7 { ONE } else { ZERO })).unwrap();
        let v = cmi(&ghz.projector(), &[0], &[1], &[2]).unwrap();
        assert!((v - 2f64.ln()).abs() < 1e-10);
        let mixed = DensityMatrix::maximally_mixed(3);
        assert!(cmi(&mixed, &[0], &[1], &[2]).unwrap().abs() < 1e-10);
        assert!(matches!(cmi(&mixed, &[0], &[0], &[2]), Err(Error::OverlappingPartition(0))));
    }

    #[test]
    fn coherent_examples() {
        let z = coherent_projector(&BlochProduct::new(vec![[0.0, 0.0, 1.0]]).unwrap());
        assert!((z.matrix() - PureState::basis(1, 0).projector().matrix()).norm() < 1e-15);
        let x = coherent_projector(&BlochProduct::new(vec![[1.0, 0.0, 0.0]]).unwrap());
        assert!((x.matrix() - plus().projector().matrix()).norm() < 1e-15);
        let zz = coherent_projector(&BlochProduct::new(vec![[0.0, 0.0, 1.0]; 2]).unwrap());
        assert!((zz.matrix() - PureState::basis(2, 0).projector().matrix()).norm() < 1e-15);
        assert!((zz.purity() - 1.0).abs() < 1e-14);
        assert!(BlochProduct::new(vec![[0.5, 0.0, 0.0]]).is_err());
    }

    #[test]
    fn from_bloch_matches_projector() {
        let v = BlochProduct::new(vec![[0.6, 0.0, 0.8], [0.0, -1.0, 0.0]]).unwrap();
        let psi = PureState::from_bloch(&v);
        assert!((psi.projector().matrix() - coherent_projector(&v).matrix()).norm() < 1e-14);
    }
}
