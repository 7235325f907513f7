//! n-qubit Pauli strings and real coefficient vectors over them.
//!
//! A [`PauliString`] is stored as two bit masks (bit `j` is qubit `j`) plus a
//! phase in `{±1, ±i}`, so products and comparisons are cheap. A
//! [`PauliVector`] is a sparse map from phase-free strings to real
//! coefficients and represents `ρ = Σ z_P P / 2^n`.
//!
//! The full `4^n` basis is only ever enumerated for `n ≤ 6`. Larger systems
//! work with explicit string lists (for example all strings supported on a
//! three-qubit window).

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::linalg::{qubit_mask, CMat, Mat2, C64, I, ONE, ZERO};

pub const MAX_ENUMERATION_QUBITS: usize = 6;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Pauli {
    I,
    X,
    Y,
    Z,
}

impl Pauli {
    pub const ALL: [Pauli; 4] = [Pauli::I, Pauli::X, Pauli::Y, Pauli::Z];
    pub const NONTRIVIAL: [Pauli; 3] = [Pauli::X, Pauli::Y, Pauli::Z];

    fn bits(self) -> (bool, bool) {
        match self {
            Pauli::I => (false, false),
            Pauli::X => (true, false),
            Pauli::Y => (true, true),
            Pauli::Z => (false, true),
        }
    }

    fn from_bits(x: bool, z: bool) -> Pauli {
        match (x, z) {
            (false, false) => Pauli::I,
            (true, false) => Pauli::X,
            (true, true) => Pauli::Y,
            (false, true) => Pauli::Z,
        }
    }

    pub fn matrix(self) -> Mat2 {
        match self {
            Pauli::I => Mat2::new(ONE, ZERO, ZERO, ONE),
            Pauli::X => Mat2::new(ZERO, ONE, ONE, ZERO),
            Pauli::Y => Mat2::new(ZERO, -I, I, ZERO),
            Pauli::Z => Mat2::new(ONE, ZERO, ZERO, -ONE),
        }
    }

    pub fn symbol(self) -> char {
        match self {
            Pauli::I => 'I',
            Pauli::X => 'X',
            Pauli::Y => 'Y',
            Pauli::Z => 'Z',
        }
    }

    pub fn from_symbol(c: char) -> Option<Pauli> {
        match c {
            'I' => Some(Pauli::I),
            'X' => Some(Pauli::X),
            'Y' => Some(Pauli::Y),
            'Z' => Some(Pauli::Z),
            _ => None,
        }
    }

    /// Single-qubit product `a·b = i^k · c`, returned as `(k, c)`.
    fn product(a: Pauli, b: Pauli) -> (u8, Pauli) {
        use Pauli::*;
        match (a, b) {
            (I, p) | (p, I) => (0, p),
            (X, X) | (Y, Y) | (Z, Z) => (0, I),
            (X, Y) => (1, Z),
            (Y, Z) => (1, X),
            (Z, X) => (1, Y),
            (Y, X) => (3, Z),
            (Z, Y) => (3, X),
            (X, Z) => (3, Y),
        }
    }
}

/// Global phase `i^k`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Phase {
    PlusOne,
    PlusI,
    MinusOne,
    MinusI,
}

impl Phase {
    pub fn from_power(k: u8) -> Phase {
        match k % 4 {
            0 => Phase::PlusOne,
            1 => Phase::PlusI,
            2 => Phase::MinusOne,
            _ => Phase::MinusI,
        }
    }

    pub fn power(self) -> u8 {
        self as u8
    }

    pub fn to_complex(self) -> C64 {
        match self {
            Phase::PlusOne => ONE,
            Phase::PlusI => I,
            Phase::MinusOne => -ONE,
            Phase::MinusI => -I,
        }
    }

    pub fn times(self, other: Phase) -> Phase {
        Phase::from_power(self.power() + other.power())
    }
}

#[derive(Clone, Copy, PartialEq, Eq, Hash)]
pub struct PauliString {
    n: usize,
    x: u64,
    z: u64,
    phase: Phase,
}

impl PauliString {
    pub fn identity(n: usize) -> Self {
        assert!(n <= 64, "at most 64 qubits");
        PauliString { n, x: 0, z: 0, phase: Phase::PlusOne }
    }

    pub fn from_axes(axes: &[Pauli]) -> Self {
        let mut p = PauliString::identity(axes.len());
        for (q, &a) in axes.iter().enumerate() {
            p.set_axis(q, a);
        }
        p
    }

    /// Single non-identity factor `axis` on `qubit`.
    pub fn single(n: usize, qubit: usize, axis: Pauli) -> Self {
        let mut p = PauliString::identity(n);
        p.set_axis(qubit, axis);
        p
    }

    /// Parses labels such as `"XIZ"`, `"-iYY"` or `"+Z"`.
    pub fn parse(label: &str) -> Result<Self> {
        let invalid = || Error::InvalidLabel(label.to_string());
        let (phase, body) = if let Some(rest) = label.strip_prefix("-i") {
            (Phase::MinusI, rest)
        } else if let Some(rest) = label.strip_prefix("+i").or_else(|| label.strip_prefix('i')) {
            (Phase::PlusI, rest)
        } else if let Some(rest) = label.strip_prefix('-') {
            (Phase::MinusOne, rest)
        } else {
            (Phase::PlusOne, label.strip_prefix('+').unwrap_or(label))
        };
        if body.is_empty() || body.len() > 64 {
            return Err(invalid());
        }
        let axes = body.chars().map(Pauli::from_symbol).collect::<Option<Vec<_>>>().ok_or_else(invalid)?;
        Ok(PauliString::from_axes(&axes).with_phase(phase))
    }

    fn set_axis(&mut self, qubit: usize, axis: Pauli) {
        let (x, z) = axis.bits();
        let bit = 1u64 << qubit;
        self.x = if x { self.x | bit } else { self.x & !bit };
        self.z = if z { self.z | bit } else { self.z & !bit };
    }

    pub fn with_phase(mut self, phase: Phase) -> Self {
        self.phase = phase;
        self
    }

    pub fn without_phase(self) -> Self {
        self.with_phase(Phase::PlusOne)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn phase(&self) -> Phase {
        self.phase
    }

    pub fn axis(&self, qubit: usize) -> Pauli {
        Pauli::from_bits(self.x >> qubit & 1 == 1, self.z >> qubit & 1 == 1)
    }

    pub fn axes(&self) -> Vec<Pauli> {
        (0..self.n).map(|q| self.axis(q)).collect()
    }

    /// Operator weight: number of non-identity factors.
    pub fn weight(&self) -> usize {
        (self.x | self.z).count_ones() as usize
    }

    pub fn support(&self) -> Vec<usize> {
        (0..self.n).filter(|&q| self.axis(q) != Pauli::I).collect()
    }

    pub fn is_identity(&self) -> bool {
        self.x == 0 && self.z == 0
    }

    pub fn same_axes(&self, other: &PauliString) -> bool {
        self.n == other.n && self.x == other.x && self.z == other.z
    }

    pub fn commutes_with(&self, other: &PauliString) -> bool {
        ((self.x & other.z).count_ones() + (self.z & other.x).count_ones()).is_multiple_of(2)
    }

    pub fn label(&self) -> String {
        let prefix = match self.phase {
            Phase::PlusOne => "",
            Phase::PlusI => "i",
            Phase::MinusOne => "-",
            Phase::MinusI => "-i",
        };
        let body: String = self.axes().iter().map(|a| a.symbol()).collect();
        format!("{prefix}{body}")
    }

    /// Basis-index masks `(flip, sign)` and the number of `Y` factors:
    /// `P|b⟩ = phase · i^{#Y} · (−1)^{|b ∧ sign|} |b ⊕ flip⟩`.
    pub fn index_masks(&self) -> (usize, usize, u32) {
        let mut flip = 0usize;
        let mut sign = 0usize;
        for q in 0..self.n {
            let m = qubit_mask(self.n, q);
            if self.x >> q & 1 == 1 {
                flip |= m;
            }
            if self.z >> q & 1 == 1 {
                sign |= m;
            }
        }
        (flip, sign, (self.x & self.z).count_ones())
    }

    fn base_factor(&self) -> C64 {
        let (_, _, ny) = self.index_masks();
        Phase::from_power((ny % 4) as u8).times(self.phase).to_complex()
    }

    /// Dense `2^n × 2^n` matrix including the phase.
    pub fn matrix(&self) -> CMat {
        let dim = 1usize << self.n;
        let (flip, sign, _) = self.index_masks();
        let base = self.base_factor();
        let mut m = CMat::zeros(dim, dim);
        for b in 0..dim {
            let s = if (b & sign).count_ones() % 2 == 1 { -base } else { base };
            m[(b ^ flip, b)] = s;
        }
        m
    }

    /// `⟨ψ|P|ψ⟩` for a state vector.
    pub fn expectation(&self, state: &[C64]) -> C64 {
        let (flip, sign, _) = self.index_masks();
        let base = self.base_factor();
        let mut acc = ZERO;
        for (b, &amp) in state.iter().enumerate() {
            let term = state[b ^ flip].conj() * amp;
            if (b & sign).count_ones() % 2 == 1 {
                acc -= term;
            } else {
                acc += term;
            }
        }
        acc * base
    }

    /// `Tr(ρ P)`.
    pub fn trace_with(&self, rho: &CMat) -> C64 {
        let (flip, sign, _) = self.index_masks();
        let base = self.base_factor();
        let mut acc = ZERO;
        for b in 0..rho.nrows() {
            let term = rho[(b, b ^ flip)];
            if (b & sign).count_ones() % 2 == 1 {
                acc -= term;
            } else {
                acc += term;
            }
        }
        acc * base
    }
}

impl Ord for PauliString {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.n.cmp(&other.n).then_with(|| self.axes().cmp(&other.axes())).then_with(|| self.phase.cmp(&other.phase))
    }
}

impl PartialOrd for PauliString {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Debug for PauliString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "PauliString({})", self.label())
    }
}

impl fmt::Display for PauliString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.label())
    }
}

impl Serialize for PauliString {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.label())
    }
}

impl<'de> Deserialize<'de> for PauliString {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let label = String::deserialize(d)?;
        PauliString::parse(&label).map_err(serde::de::Error::custom)
    }
}

/// Phase-exact product: `matrix(a)·matrix(b) = matrix(result)`.
pub fn multiply(a: &PauliString, b: &PauliString) -> Result<PauliString> {
    if a.n != b.n {
        return Err(Error::QubitMismatch(a.n, b.n));
    }
    let mut power = a.phase.power() + b.phase.power();
    let mut out = PauliString::identity(a.n);
    for q in 0..a.n {
        let (k, c) = Pauli::product(a.axis(q), b.axis(q));
        power += k;
        out.set_axis(q, c);
    }
    Ok(out.with_phase(Phase::from_power(power)))
}

/// `Tr(P_i P_j P_k) / 2^n`.
pub fn ope_coefficient(i: &PauliString, j: &PauliString, k: &PauliString) -> Result<C64> {
    if k.n != i.n {
        return Err(Error::QubitMismatch(i.n, k.n));
    }
    let ij = multiply(i, j)?;
    if !ij.same_axes(k) {
        return Ok(ZERO);
    }
    Ok(ij.phase.times(k.phase).to_complex())
}

/// All `4^n` phase-free strings, identity first.
pub fn enumerate_all(n: usize) -> Result<Vec<PauliString>> {
    if n > MAX_ENUMERATION_QUBITS {
        return Err(Error::EnumerationTooLarge(n));
    }
    let qubits: Vec<usize> = (0..n).collect();
    Ok(strings_on(n, &qubits))
}

/// All strings of weight `1..=max_weight`, ordered by weight then label.
pub fn strings_up_to_weight(n: usize, max_weight: usize) -> Vec<PauliString> {
    let mut out = Vec::new();
    for w in 1..=max_weight.min(n) {
        let mut level = Vec::new();
        for_each_subset(n, w, &mut |subset| {
            for_each_assignment(subset, &mut |axes| {
                let mut p = PauliString::identity(n);
                for (&q, &a) in subset.iter().zip(axes) {
                    p.set_axis(q, a);
                }
                level.push(p);
            });
        });
        level.sort();
        out.extend(level);
    }
    out
}

/// All `4^k` strings supported inside `qubits`, identity first.
pub fn strings_on(n: usize, qubits: &[usize]) -> Vec<PauliString> {
    let mut out = Vec::with_capacity(1 << (2 * qubits.len()));
    let k = qubits.len();
    for code in 0..(1usize << (2 * k)) {
        let mut p = PauliString::identity(n);
        for (pos, &q) in qubits.iter().enumerate() {
            let digit = (code >> (2 * (k - 1 - pos))) & 3;
            p.set_axis(q, Pauli::ALL[digit]);
        }
        out.push(p);
    }
    out
}

fn for_each_subset(n: usize, size: usize, f: &mut dyn FnMut(&[usize])) {
    fn rec(start: usize, n: usize, size: usize, cur: &mut Vec<usize>, f: &mut dyn FnMut(&[usize])) {
        if cur.len() == size {
            f(cur);
            return;
        }
        for q in start..n {
            cur.push(q);
            rec(q + 1, n, size, cur, f);
            cur.pop();
        }
    }
    rec(0, n, size, &mut Vec::new(), f);
}

fn for_each_assignment(subset: &[usize], f: &mut dyn FnMut(&[Pauli])) {
    let k = subset.len();
    let mut axes = vec![Pauli::X; k];
    for code in 0..3usize.pow(k as u32) {
        let mut c = code;
        for slot in axes.iter_mut().rev() {
            *slot = Pauli::NONTRIVIAL[c % 3];
            c /= 3;
        }
        f(&axes);
    }
}

/// Sparse real coefficients `z_P` with `ρ = Σ z_P P / 2^n`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PauliVector {
    n: usize,
    entries: BTreeMap<PauliString, f64>,
}

impl PauliVector {
    pub fn new(n: usize) -> Self {
        PauliVector { n, entries: BTreeMap::new() }
    }

    /// Coefficients of the maximally mixed state: only `z_I = 1`.
    pub fn maximally_mixed(n: usize) -> Self {
        let mut v = PauliVector::new(n);
        v.set(PauliString::identity(n), 1.0);
        v
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get(&self, p: &PauliString) -> f64 {
        self.entries.get(&p.without_phase()).copied().unwrap_or(0.0)
    }

    pub fn set(&mut self, p: PauliString, value: f64) {
        self.entries.insert(p.without_phase(), value);
    }

    pub fn iter(&self) -> impl Iterator<Item = (&PauliString, &f64)> {
        self.entries.iter()
    }

    pub fn iter_mut(&mut self) -> impl Iterator<Item = (&PauliString, &mut f64)> {
        self.entries.iter_mut()
    }

    pub fn strings(&self) -> Vec<PauliString> {
        self.entries.keys().copied().collect()
    }

    pub fn values(&self) -> Vec<f64> {
        self.entries.values().copied().collect()
    }

    pub fn norm_sq(&self) -> f64 {
        self.entries.values().map(|v| v * v).sum()
    }

    /// Full expansion `z_P = Tr(ρ P)` over all `4^n` strings (`n ≤ 6`).
    pub fn expand(rho: &CMat) -> Result<Self> {
        let n = dim_to_qubits(rho.nrows())?;
        let strings = enumerate_all(n)?;
        PauliVector::expand_on(rho, &strings)
    }

    /// Expansion restricted to the given strings.
    pub fn expand_on(rho: &CMat, strings: &[PauliString]) -> Result<Self> {
        let n = dim_to_qubits(rho.nrows())?;
        let dev = crate::linalg::hermiticity_error(rho);
        let scale = rho.iter().map(|v| v.norm()).fold(1.0, f64::max);
        if dev > 1e-10 * scale {
            return Err(Error::NotHermitian(dev));
        }
        let mut v = PauliVector::new(n);
        for p in strings {
            if p.n() != n {
                return Err(Error::QubitMismatch(n, p.n()));
            }
            v.set(*p, p.without_phase().trace_with(rho).re);
        }
        Ok(v)
    }

    /// Pure-state expectations `z_P = ⟨ψ|P|ψ⟩`.
    pub fn from_state(state: &[C64], strings: &[PauliString]) -> Result<Self> {
        let n = dim_to_qubits(state.len())?;
        let mut v = PauliVector::new(n);
        for p in strings {
            if p.n() != n {
                return Err(Error::QubitMismatch(n, p.n()));
            }
            v.set(*p, p.without_phase().expectation(state).re);
        }
        Ok(v)
    }

    /// `Σ z_P P / 2^n` as a dense matrix.
    pub fn contract(&self) -> CMat {
        let dim = 1usize << self.n;
        let norm = 1.0 / dim as f64;
        let mut m = CMat::zeros(dim, dim);
        for (p, &z) in &self.entries {
            let (flip, sign, ny) = p.index_masks();
            let base = Phase::from_power((ny % 4) as u8).to_complex() * (z * norm);
            for b in 0..dim {
                let s = if (b & sign).count_ones() % 2 == 1 { -base } else { base };
                m[(b ^ flip, b)] += s;
            }
        }
        m
    }
}

pub(crate) fn dim_to_qubits(dim: usize) -> Result<usize> {
    if dim == 0 || !dim.is_power_of_two() {
        return Err(Error::DimensionMismatch { expected: dim.next_power_of_two(), got: dim });
    }
    Ok(dim.trailing_zeros() as usize)
}
