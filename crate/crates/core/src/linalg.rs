//! Small dense complex linear-algebra helpers shared by the simulators.
//!
//! Basis ordering is big-endian in the qubit index: qubit 0 is the most
//! significant bit of a computational-basis index, so `X⊗I` acts on qubit 0.

use nalgebra::{DMatrix, DVector, Matrix2};
use num_complex::Complex;

pub type C64 = Complex<f64>;
pub type CMat = DMatrix<C64>;
pub type CVec = DVector<C64>;
pub type Mat2 = Matrix2<C64>;

pub const ZERO: C64 = C64::new(0.0, 0.0);
pub const ONE: C64 = C64::new(1.0, 0.0);
pub const I: C64 = C64::new(0.0, 1.0);

/// Bit mask of `qubit` inside an `n`-qubit basis index.
#[inline]
pub fn qubit_mask(n: usize, qubit: usize) -> usize {
    1usize << (n - 1 - qubit)
}

pub fn dagger(m: &CMat) -> CMat {
    m.adjoint()
}

pub fn kron(a: &CMat, b: &CMat) -> CMat {
    a.kronecker(b)
}

pub fn mat2_to_dense(m: &Mat2) -> CMat {
    CMat::from_fn(2, 2, |r, c| m[(r, c)])
}

/// Largest entrywise deviation from Hermiticity.
pub fn hermiticity_error(m: &CMat) -> f64 {
    let mut worst = 0.0f64;
    for r in 0..m.nrows() {
        for c in r..m.ncols() {
            worst = worst.max((m[(r, c)] - m[(c, r)].conj()).norm());
        }
    }
    worst
}

pub fn trace(m: &CMat) -> C64 {
    (0..m.nrows()).map(|i| m[(i, i)]).sum()
}

pub fn frobenius_sq(m: &CMat) -> f64 {
    m.iter().map(|v| v.norm_sqr()).sum()
}

/// Hermitian eigendecomposition with eigenvalues sorted ascending.
///
/// The input is symmetrized first so tiny anti-Hermitian noise cannot leak
/// into the real eigenvalues.
pub fn hermitian_eigen(m: &CMat) -> (Vec<f64>, CMat) {
    let sym = (m + m.adjoint()).scale(0.5);
    let eig = sym.symmetric_eigen();
    let dim = m.nrows();
    let mut order: Vec<usize> = (0..dim).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors = CMat::from_fn(dim, dim, |r, c| eig.eigenvectors[(r, order[c])]);
    (values, vectors)
}

/// `U diag(f(λ)) U†` for a Hermitian matrix.
pub fn hermitian_function(m: &CMat, f: impl Fn(f64) -> C64) -> CMat {
    let (values, vectors) = hermitian_eigen(m);
    from_spectrum(&values, &vectors, f)
}

pub fn from_spectrum(values: &[f64], vectors: &CMat, f: impl Fn(f64) -> C64) -> CMat {
    let mut scaled = vectors.clone();
    for (c, &v) in values.iter().enumerate() {
        let s = f(v);
        scaled.column_mut(c).scale_mut_c(s);
    }
    &scaled * vectors.adjoint()
}

trait ScaleC {
    fn scale_mut_c(&mut self, s: C64);
}

impl<S> ScaleC for nalgebra::Matrix<C64, nalgebra::Dyn, nalgebra::U1, S>
where
    S: nalgebra::StorageMut<C64, nalgebra::Dyn, nalgebra::U1>,
{
    fn scale_mut_c(&mut self, s: C64) {
        for v in self.iter_mut() {
            *v *= s;
        }
    }
}

/// `exp(i·h·dt)` for Hermitian `h`; exactly unitary up to rounding.
pub fn expm_i_hermitian(h: &CMat, dt: f64) -> CMat {
    hermitian_function(h, |l| C64::from_polar(1.0, l * dt))
}

/// Sum of absolute eigenvalues of a Hermitian matrix.
pub fn trace_norm_hermitian(m: &CMat) -> f64 {
    hermitian_eigen(m).0.iter().map(|v| v.abs()).sum()
}

/// Embeds a single-qubit operator acting on `qubit` into the full space.
pub fn embed_single_qubit(op: &Mat2, qubit: usize, n: usize) -> CMat {
    let dim = 1usize << n;
    let mask = qubit_mask(n, qubit);
    let mut out = CMat::zeros(dim, dim);
    for col in 0..dim {
        let b = usize::from(col & mask != 0);
        for a in 0..2 {
            let row = if a == b { col } else { col ^ mask };
            out[(row, col)] = op[(a, b)];
        }
    }
    out
}

/// In-place action of a single-qubit operator on a state vector.
pub fn apply_single_qubit(state: &mut [C64], n: usize, qubit: usize, op: &Mat2) {
    let mask = qubit_mask(n, qubit);
    for i0 in 0..state.len() {
        if i0 & mask != 0 {
            continue;
        }
        let i1 = i0 | mask;
        let (a0, a1) = (state[i0], state[i1]);
        state[i0] = op[(0, 0)] * a0 + op[(0, 1)] * a1;
        state[i1] = op[(1, 0)] * a0 + op[(1, 1)] * a1;
    }
}

/// Partial trace keeping the listed qubits, in the listed order.
pub fn partial_trace(rho: &CMat, n: usize, keep: &[usize]) -> CMat {
    let k = keep.len();
    let traced: Vec<usize> = (0..n).filter(|q| !keep.contains(q)).collect();
    let dk = 1usize << k;
    let de = 1usize << traced.len();
    let compose = |sub: usize, env: usize| -> usize {
        let mut idx = 0usize;
        for (pos, &q) in keep.iter().enumerate() {
            if sub & (1 << (k - 1 - pos)) != 0 {
                idx |= qubit_mask(n, q);
            }
        }
        for (pos, &q) in traced.iter().enumerate() {
            if env & (1 << (traced.len() - 1 - pos)) != 0 {
                idx |= qubit_mask(n, q);
            }
        }
        idx
    };
    let mut out = CMat::zeros(dk, dk);
    for e in 0..de {
        for r in 0..dk {
            let gr = compose(r, e);
            for c in 0..dk {
                out[(r, c)] += rho[(gr, compose(c, e))];
            }
        }
    }
    out
}

/// Gauss-Legendre nodes and weights on `[-1, 1]`.
pub fn gauss_legendre(order: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; order];
    let mut weights = vec![0.0; order];
    let m = order.div_ceil(2);
    for i in 0..m {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (order as f64 + 0.5)).cos();
        let mut deriv = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=order {
                let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            deriv = order as f64 * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / deriv;
            x -= dx;
            if dx.abs() < 1e-15 {
                break;
            }
        }
        nodes[i] = -x;
        nodes[order - 1 - i] = x;
        let w = 2.0 / ((1.0 - x * x) * deriv * deriv);
        weights[i] = w;
        weights[order - 1 - i] = w;
    }
    (nodes, weights)
}

/// Pairwise summation for order-stable reductions.
pub fn pairwise_sum(values: &[f64]) -> f64 {
    if values.len() <= 32 {
        return values.iter().sum();
    }
    let mid = values.len() / 2;
    pairwise_sum(&values[..mid]) + pairwise_sum(&values[mid..])
}
