//! Dense complex state vectors and small operators.
//!
//! Qubit 0 is the leftmost tensor factor and the most significant bit of an
//! amplitude index. `|+⟩` and `|−⟩` (the σ_z eigenstates with eigenvalues +1
//! and −1) are the computational states `|0⟩` and `|1⟩`.

use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::{c, one, re, zero, Amp, Scalar};

/// A ±1 eigenvalue label, `Plus` being the `|0⟩` side.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(into = "i8", try_from = "i8")]
pub enum Sign {
    Plus,
    Minus,
}

impl Sign {
    pub const BOTH: [Sign; 2] = [Sign::Plus, Sign::Minus];

    pub fn value(self) -> i8 {
        match self {
            Sign::Plus => 1,
            Sign::Minus => -1,
        }
    }

    /// Computational bit: 0 for `Plus`, 1 for `Minus`.
    pub fn bit(self) -> usize {
        match self {
            Sign::Plus => 0,
            Sign::Minus => 1,
        }
    }

    pub fn from_bit(bit: usize) -> Self {
        if bit & 1 == 0 {
            Sign::Plus
        } else {
            Sign::Minus
        }
    }

    pub fn from_value(v: i64) -> Result<Self> {
        match v {
            1 => Ok(Sign::Plus),
            -1 => Ok(Sign::Minus),
            other => Err(Error::OutOfDomain(other)),
        }
    }
}

impl Mul for Sign {
    type Output = Sign;

    fn mul(self, rhs: Sign) -> Sign {
        if self == rhs {
            Sign::Plus
        } else {
            Sign::Minus
        }
    }
}

impl From<Sign> for i8 {
    fn from(s: Sign) -> i8 {
        s.value()
    }
}

impl TryFrom<i8> for Sign {
    type Error = Error;

    fn try_from(v: i8) -> Result<Self> {
        Sign::from_value(v as i64)
    }
}

impl fmt::Display for Sign {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Sign::Plus => "+",
            Sign::Minus => "-",
        })
    }
}

/// Pauli axis.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Axis {
    X,
    Y,
    Z,
}

impl Axis {
    pub const ALL: [Axis; 3] = [Axis::X, Axis::Y, Axis::Z];

    pub fn name(self) -> &'static str {
        match self {
            Axis::X => "x",
            Axis::Y => "y",
            Axis::Z => "z",
        }
    }
}

impl fmt::Display for Axis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

fn log2_exact(len: usize) -> Option<usize> {
    if len.is_power_of_two() {
        Some(len.trailing_zeros() as usize)
    } else {
        None
    }
}

/// Square complex matrix acting on `k` qubits, stored row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct Operator<T> {
    dim: usize,
    entries: Vec<Amp<T>>,
}

impl<T: Scalar> Operator<T> {
    pub fn new(dim: usize, entries: Vec<Amp<T>>) -> Result<Self> {
        if log2_exact(dim).is_none() {
            return Err(Error::BadDimension(dim));
        }
        if entries.len() != dim * dim {
            return Err(Error::DimensionMismatch {
                expected: dim * dim,
                found: entries.len(),
            });
        }
        Ok(Self { dim, entries })
    }

    fn from_fn(dim: usize, f: impl Fn(usize, usize) -> Amp<T>) -> Self {
        let entries = (0..dim * dim).map(|i| f(i / dim, i % dim)).collect();
        Self { dim, entries }
    }

    pub fn zeros(dim: usize) -> Self {
        Self::from_fn(dim, |_, _| zero())
    }

    pub fn identity(dim: usize) -> Self {
        Self::from_fn(dim, |r, c| if r == c { one() } else { zero() })
    }

    pub fn pauli(axis: Axis) -> Self {
        let (o, z) = (T::one(), T::zero());
        let entries = match axis {
            Axis::X => vec![c(z, z), c(o, z), c(o, z), c(z, z)],
            Axis::Y => vec![c(z, z), c(z, -o), c(z, o), c(z, z)],
            Axis::Z => vec![c(o, z), c(z, z), c(z, z), c(-o, z)],
        };
        Self { dim: 2, entries }
    }

    pub fn hadamard() -> Self {
        let h = T::FRAC_1_SQRT_2();
        Self {
            dim: 2,
            entries: vec![re(h), re(h), re(h), re(-h)],
        }
    }

    /// Phase gate `diag(1, i)`.
    pub fn phase_s() -> Self {
        Self {
            dim: 2,
            entries: vec![one(), zero(), zero(), c(T::zero(), T::one())],
        }
    }

    /// CNOT with the first target qubit as control.
    pub fn cnot() -> Self {
        let mut op = Self::zeros(4);
        for (r, col) in [(0, 0), (1, 1), (2, 3), (3, 2)] {
            op.entries[r * 4 + col] = one();
        }
        op
    }

    /// Haar-random unitary: Gram-Schmidt on a complex Gaussian matrix.
    pub fn random_unitary<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> Self {
        let mut cols: Vec<Vec<Amp<T>>> = Vec::with_capacity(dim);
        while cols.len() < dim {
            let mut v: Vec<Amp<T>> = (0..dim)
                .map(|_| {
                    let a: f64 = rng.sample(StandardNormal);
                    let b: f64 = rng.sample(StandardNormal);
                    c(T::lit(a), T::lit(b))
                })
                .collect();
            for u in &cols {
                let ov = u
                    .iter()
                    .zip(&v)
                    .fold(zero::<T>(), |acc, (x, y)| acc + x.conj() * y);
                for (vi, ui) in v.iter_mut().zip(u) {
                    *vi = *vi - ui * ov;
                }
            }
            let norm = v.iter().map(|a| a.norm_sqr()).sum::<T>().sqrt();
            if norm > T::lit(1e-6) {
                cols.push(v.into_iter().map(|a| a.unscale(norm)).collect());
            }
        }
        Self::from_fn(dim, |r, col| cols[col][r])
    }

    /// `|s⟩⟨s|`.
    pub fn projector(state: &StateVector<T>) -> Self {
        let a = state.amplitudes();
        Self::from_fn(a.len(), |r, col| a[r] * a[col].conj())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn n_qubits(&self) -> usize {
        self.dim.trailing_zeros() as usize
    }

    pub fn entries(&self) -> &[Amp<T>] {
        &self.entries
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> Amp<T> {
        self.entries[row * self.dim + col]
    }

    pub fn kron(&self, other: &Self) -> Self {
        let d = other.dim;
        Self::from_fn(self.dim * d, |r, col| {
            self.get(r / d, col / d) * other.get(r % d, col % d)
        })
    }

    pub fn adjoint(&self) -> Self {
        Self::from_fn(self.dim, |r, col| self.get(col, r).conj())
    }

    pub fn scale(&self, k: Amp<T>) -> Self {
        Self {
            dim: self.dim,
            entries: self.entries.iter().map(|e| *e * k).collect(),
        }
    }

    pub fn try_mul(&self, other: &Self) -> Result<Self> {
        self.check_dim(other)?;
        let d = self.dim;
        Ok(Self::from_fn(d, |r, col| {
            (0..d).fold(zero(), |acc, k| acc + self.get(r, k) * other.get(k, col))
        }))
    }

    pub fn mul_vec(&self, v: &[Amp<T>]) -> Result<Vec<Amp<T>>> {
        if v.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                found: v.len(),
            });
        }
        Ok((0..self.dim)
            .map(|r| (0..self.dim).fold(zero(), |acc, k| acc + self.get(r, k) * v[k]))
            .collect())
    }

    pub fn trace(&self) -> Amp<T> {
        (0..self.dim).fold(zero(), |acc, i| acc + self.get(i, i))
    }

    /// Largest entrywise modulus.
    pub fn max_abs(&self) -> T {
        self.entries.iter().fold(T::zero(), |m, e| m.max(e.norm()))
    }

    /// Largest entrywise modulus of `self - other`.
    pub fn max_abs_diff(&self, other: &Self) -> Result<T> {
        self.check_dim(other)?;
        Ok(self
            .entries
            .iter()
            .zip(&other.entries)
            .fold(T::zero(), |m, (a, b)| m.max((*a - *b).norm())))
    }

    pub fn approx_eq(&self, other: &Self, tol: T) -> bool {
        self.max_abs_diff(other).map(|d| d <= tol).unwrap_or(false)
    }

    pub fn is_unitary(&self, tol: T) -> bool {
        let prod = &self.adjoint() * self;
        prod.approx_eq(&Self::identity(self.dim), tol)
    }

    pub fn is_hermitian(&self, tol: T) -> bool {
        self.approx_eq(&self.adjoint(), tol)
    }

    fn check_dim(&self, other: &Self) -> Result<()> {
        if self.dim != other.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                found: other.dim,
            });
        }
        Ok(())
    }
}

impl<T: Scalar> Mul for &Operator<T> {
    type Output = Operator<T>;

    /// Panics on dimension mismatch; use [`Operator::try_mul`] otherwise.
    fn mul(self, rhs: &Operator<T>) -> Operator<T> {
        self.try_mul(rhs).expect("operator dimensions agree")
    }
}

impl<T: Scalar> Add for &Operator<T> {
    type Output = Operator<T>;

    fn add(self, rhs: &Operator<T>) -> Operator<T> {
        assert_eq!(self.dim, rhs.dim, "operator dimensions agree");
        Operator {
            dim: self.dim,
            entries: self
                .entries
                .iter()
                .zip(&rhs.entries)
                .map(|(a, b)| a + b)
                .collect(),
        }
    }
}

impl<T: Scalar> Sub for &Operator<T> {
    type Output = Operator<T>;

    fn sub(self, rhs: &Operator<T>) -> Operator<T> {
        assert_eq!(self.dim, rhs.dim, "operator dimensions agree");
        Operator {
            dim: self.dim,
            entries: self
                .entries
                .iter()
                .zip(&rhs.entries)
                .map(|(a, b)| a - b)
                .collect(),
        }
    }
}

impl<T: Scalar> Neg for &Operator<T> {
    type Output = Operator<T>;

    fn neg(self) -> Operator<T> {
        self.scale(re(-T::one()))
    }
}

/// Result of [`StateVector::make`]: the normalized state and whether the
/// input had to be rescaled.
#[derive(Clone, Debug, PartialEq)]
pub struct Prepared<T> {
    pub state: StateVector<T>,
    pub renormalized: bool,
}

/// Normalized pure state of `n` qubits.
#[derive(Clone, Debug, PartialEq)]
pub struct StateVector<T> {
    n_qubits: usize,
    amps: Vec<Amp<T>>,
}

impl<T: Scalar> StateVector<T> {
    /// Lenient constructor: rescales to unit norm and reports whether it had to.
    pub fn make(amplitudes: Vec<Amp<T>>) -> Result<Prepared<T>> {
        let n_qubits = log2_exact(amplitudes.len()).ok_or(Error::BadDimension(amplitudes.len()))?;
        let norm_sqr: T = amplitudes.iter().map(|a| a.norm_sqr()).sum();
        if norm_sqr.is_nan() || norm_sqr <= T::TOLERANCE * T::TOLERANCE {
            return Err(Error::NullState);
        }
        let renormalized = (norm_sqr - T::one()).abs() > T::TOLERANCE;
        let inv = T::one() / norm_sqr.sqrt();
        let amps = if renormalized {
            amplitudes.into_iter().map(|a| a.scale(inv)).collect()
        } else {
            amplitudes
        };
        Ok(Prepared {
            state: Self { n_qubits, amps },
            renormalized,
        })
    }

    /// Strict constructor: the amplitudes must already have unit norm.
    pub fn from_amplitudes(amplitudes: Vec<Amp<T>>) -> Result<Self> {
        let n_qubits = log2_exact(amplitudes.len()).ok_or(Error::BadDimension(amplitudes.len()))?;
        let norm_sqr: T = amplitudes.iter().map(|a| a.norm_sqr()).sum();
        if (norm_sqr - T::one()).abs() > T::TOLERANCE {
            return Err(Error::NotNormalized(norm_sqr.to_f64().unwrap_or(f64::NAN)));
        }
        Ok(Self {
            n_qubits,
            amps: amplitudes,
        })
    }

    pub fn from_real(amplitudes: &[f64]) -> Result<Prepared<T>> {
        Self::make(amplitudes.iter().map(|&a| re(T::lit(a))).collect())
    }

    /// Rescales a vector produced by a non-unitary map (projection, Kraus
    /// operator) back to unit norm.
    pub(crate) fn renormalize(amplitudes: Vec<Amp<T>>) -> Result<Self> {
        Self::make(amplitudes).map(|p| p.state)
    }

    /// The 0-qubit state, the unit of [`StateVector::tensor`].
    pub fn unit() -> Self {
        Self {
            n_qubits: 0,
            amps: vec![one()],
        }
    }

    pub fn basis(n_qubits: usize, index: usize) -> Result<Self> {
        let dim = 1usize << n_qubits;
        if index >= dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                found: index,
            });
        }
        let mut amps = vec![zero(); dim];
        amps[index] = one();
        Ok(Self { n_qubits, amps })
    }

    /// Product state `|s_0 s_1 …⟩` of σ_z eigenstates.
    pub fn from_signs(signs: &[Sign]) -> Self {
        let index = signs.iter().fold(0, |acc, s| (acc << 1) | s.bit());
        Self::basis(signs.len(), index).expect("index in range")
    }

    /// Haar-random state from normalized Gaussian amplitudes.
    pub fn random<R: Rng + ?Sized>(n_qubits: usize, rng: &mut R) -> Self {
        loop {
            let amps: Vec<Amp<T>> = (0..1usize << n_qubits)
                .map(|_| {
                    let a: f64 = rng.sample(StandardNormal);
                    let b: f64 = rng.sample(StandardNormal);
                    c(T::lit(a), T::lit(b))
                })
                .collect();
            if let Ok(p) = Self::make(amps) {
                return p.state;
            }
        }
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn dim(&self) -> usize {
        self.amps.len()
    }

    pub fn amplitudes(&self) -> &[Amp<T>] {
        &self.amps
    }

    pub fn amplitude(&self, index: usize) -> Amp<T> {
        self.amps[index]
    }

    pub fn norm_sqr(&self) -> T {
        self.amps.iter().map(|a| a.norm_sqr()).sum()
    }

    pub fn probabilities(&self) -> Vec<T> {
        self.amps.iter().map(|a| a.norm_sqr()).collect()
    }

    /// Kronecker product; `self` supplies the leading qubits.
    pub fn tensor(&self, other: &Self) -> Self {
        let amps = self
            .amps
            .iter()
            .flat_map(|a| other.amps.iter().map(move |b| a * b))
            .collect();
        Self {
            n_qubits: self.n_qubits + other.n_qubits,
            amps,
        }
    }

    pub fn check_qubit(&self, q: usize) -> Result<()> {
        if q >= self.n_qubits {
            return Err(Error::QubitOutOfRange {
                index: q,
                n_qubits: self.n_qubits,
            });
        }
        Ok(())
    }

    #[inline]
    pub(crate) fn mask(&self, q: usize) -> usize {
        1 << (self.n_qubits - 1 - q)
    }

    /// Applies an arbitrary (not necessarily unitary) operator to the listed
    /// qubits and returns the raw, unnormalized amplitudes. `targets[0]` is
    /// the most significant qubit of the operator's index.
    pub fn apply_operator(&self, op: &Operator<T>, targets: &[usize]) -> Result<Vec<Amp<T>>> {
        let k = targets.len();
        if op.dim() != 1 << k {
            return Err(Error::DimensionMismatch {
                expected: 1 << k,
                found: op.dim(),
            });
        }
        for (i, &q) in targets.iter().enumerate() {
            self.check_qubit(q)?;
            if targets[..i].contains(&q) {
                return Err(Error::RepeatedTarget(q));
            }
        }
        let sub = 1usize << k;
        let mut stack = [0usize; 16];
        let mut heap = Vec::new();
        let offsets: &mut [usize] = if sub <= stack.len() {
            &mut stack[..sub]
        } else {
            heap.resize(sub, 0);
            &mut heap
        };
        for (t, &q) in targets.iter().enumerate() {
            let m = self.mask(q);
            for (s, o) in offsets.iter_mut().enumerate() {
                if (s >> (k - 1 - t)) & 1 == 1 {
                    *o |= m;
                }
            }
        }
        let target_mask = offsets[sub - 1];
        let mut out = vec![zero(); self.dim()];
        for base in (0..self.dim()).filter(|b| b & target_mask == 0) {
            for (r, &row) in offsets.iter().enumerate() {
                out[base | row] = offsets.iter().enumerate().fold(zero(), |acc, (col, &o)| {
                    acc + op.get(r, col) * self.amps[base | o]
                });
            }
        }
        Ok(out)
    }

    pub fn apply_unitary(&self, u: &Operator<T>, targets: &[usize]) -> Result<Self> {
        if !u.is_unitary(T::TOLERANCE) {
            return Err(Error::NotUnitary);
        }
        let amps = self.apply_operator(u, targets)?;
        Ok(Self {
            n_qubits: self.n_qubits,
            amps,
        })
    }

    /// [`apply_unitary`](Self::apply_unitary) for gates built in this crate,
    /// which are unitary by construction.
    pub(crate) fn apply_gate(&self, u: &Operator<T>, targets: &[usize]) -> Result<Self> {
        let amps = self.apply_operator(u, targets)?;
        Ok(Self {
            n_qubits: self.n_qubits,
            amps,
        })
    }

    /// `⟨self|other⟩`.
    pub fn inner(&self, other: &Self) -> Result<Amp<T>> {
        if self.dim() != other.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: other.dim(),
            });
        }
        Ok(self
            .amps
            .iter()
            .zip(&other.amps)
            .fold(zero(), |acc, (a, b)| acc + a.conj() * b))
    }

    /// `|⟨self|other⟩|²`, clamped to `[0, 1]`.
    pub fn fidelity(&self, other: &Self) -> Result<T> {
        Ok(self.inner(other)?.norm_sqr().max(T::zero()).min(T::one()))
    }

    /// Real part of `⟨self| A |self⟩` for an operator on the given qubits.
    pub fn expectation(&self, op: &Operator<T>, targets: &[usize]) -> Result<T> {
        let mapped = self.apply_operator(op, targets)?;
        Ok(self
            .amps
            .iter()
            .zip(&mapped)
            .fold(zero::<T>(), |acc, (a, b)| acc + a.conj() * b)
            .re)
    }

    /// Copy with the global phase fixed so the first amplitude whose modulus
    /// exceeds the tolerance is real and positive.
    pub fn canonical(&self) -> Self {
        let lead = self.amps.iter().find(|a| a.norm() > T::TOLERANCE);
        match lead {
            Some(a) => {
                let phase = a.conj() / a.norm();
                Self {
                    n_qubits: self.n_qubits,
                    amps: self.amps.iter().map(|x| x * phase).collect(),
                }
            }
            None => self.clone(),
        }
    }

    /// Largest amplitude deviation after aligning `other`'s global phase
    /// with `self`.
    pub fn distance_up_to_phase(&self, other: &Self) -> Result<T> {
        let ov = self.inner(other)?;
        let phase = if ov.norm() > T::zero() {
            ov.conj() / ov.norm()
        } else {
            one()
        };
        Ok(self
            .amps
            .iter()
            .zip(&other.amps)
            .fold(T::zero(), |m, (a, b)| m.max((a - b * phase).norm())))
    }

    pub fn approx_eq_up_to_phase(&self, other: &Self, tol: T) -> bool {
        self.distance_up_to_phase(other)
            .map(|d| d <= tol)
            .unwrap_or(false)
    }

    /// Probability that qubit `q` reads `outcome` in the σ_z basis.
    pub fn qubit_probability(&self, q: usize, outcome: Sign) -> Result<T> {
        self.check_qubit(q)?;
        let m = self.mask(q);
        let want = if outcome == Sign::Minus { m } else { 0 };
        Ok(self
            .amps
            .iter()
            .enumerate()
            .filter(|(i, _)| i & m == want)
            .map(|(_, a)| a.norm_sqr())
            .sum())
    }

    /// Projects qubit `q` onto `|outcome⟩` and renormalizes.
    pub fn collapse(&self, q: usize, outcome: Sign) -> Result<Self> {
        self.check_qubit(q)?;
        let m = self.mask(q);
        let want = if outcome == Sign::Minus { m } else { 0 };
        let amps = self
            .amps
            .iter()
            .enumerate()
            .map(|(i, a)| if i & m == want { *a } else { zero() })
            .collect();
        Self::renormalize(amps)
    }

    /// Removes qubits that are in a known σ_z eigenstate, keeping the
    /// remaining register in order. The removed qubits must already be
    /// collapsed to `values`; any weight elsewhere is dropped and the result
    /// renormalized.
    pub fn discard(&self, qubits: &[usize], values: &[Sign]) -> Result<Self> {
        if qubits.len() != values.len() {
            return Err(Error::DimensionMismatch {
                expected: qubits.len(),
                found: values.len(),
            });
        }
        for (i, &q) in qubits.iter().enumerate() {
            self.check_qubit(q)?;
            if qubits[..i].contains(&q) {
                return Err(Error::RepeatedTarget(q));
            }
        }
        let fixed_mask = qubits.iter().fold(0, |a, &q| a | self.mask(q));
        let fixed_bits = qubits
            .iter()
            .zip(values)
            .filter(|(_, v)| **v == Sign::Minus)
            .fold(0, |a, (&q, _)| a | self.mask(q));
        let kept: Vec<usize> = (0..self.n_qubits).filter(|q| !qubits.contains(q)).collect();
        let amps = (0..1usize << kept.len())
            .map(|j| {
                let full = kept
                    .iter()
                    .enumerate()
                    .filter(|(t, _)| (j >> (kept.len() - 1 - t)) & 1 == 1)
                    .fold(fixed_bits, |acc, (_, &q)| acc | self.mask(q));
                debug_assert_eq!(full & fixed_mask, fixed_bits);
                self.amps[full]
            })
            .collect();
        Self::renormalize(amps)
    }
}

impl<T: Scalar> fmt::Display for StateVector<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        for (i, a) in self.amps.iter().enumerate() {
            if a.norm() <= T::TOLERANCE {
                continue;
            }
            if !first {
                f.write_str(" + ")?;
            }
            first = false;
            write!(f, "({}{:+}i)|", a.re, a.im)?;
            for q in 0..self.n_qubits {
                let bit = (i >> (self.n_qubits - 1 - q)) & 1;
                f.write_str(if bit == 0 { "+" } else { "-" })?;
            }
            f.write_str("⟩")?;
        }
        if first {
            f.write_str("0")?;
        }
        Ok(())
    }
}
