//! Bell basis, Bell-coefficient expansion and the nonlocal spin products
//! `S_ij = σ_i ⊗ σ_j`.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::qstate::{Axis, Operator, Sign, StateVector};
use crate::scalar::{re, zero, Amp, Scalar};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum BellLabel {
    PhiPlus,
    PhiMinus,
    PsiPlus,
    PsiMinus,
}

impl BellLabel {
    /// In Bell-coefficient order `c1..c4`.
    pub const ALL: [BellLabel; 4] = [
        BellLabel::PhiPlus,
        BellLabel::PhiMinus,
        BellLabel::PsiPlus,
        BellLabel::PsiMinus,
    ];

    /// Position in `c1..c4` (zero based).
    pub fn index(self) -> usize {
        match self {
            BellLabel::PhiPlus => 0,
            BellLabel::PhiMinus => 1,
            BellLabel::PsiPlus => 2,
            BellLabel::PsiMinus => 3,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            BellLabel::PhiPlus => "PhiPlus",
            BellLabel::PhiMinus => "PhiMinus",
            BellLabel::PsiPlus => "PsiPlus",
            BellLabel::PsiMinus => "PsiMinus",
        }
    }

    /// Eigenvalues `(m, n)` of `(S_zz, S_xx)`; inverse of [`classify`].
    pub fn outcomes(self) -> (Sign, Sign) {
        match self {
            BellLabel::PhiPlus => (Sign::Plus, Sign::Plus),
            BellLabel::PhiMinus => (Sign::Plus, Sign::Minus),
            BellLabel::PsiPlus => (Sign::Minus, Sign::Plus),
            BellLabel::PsiMinus => (Sign::Minus, Sign::Minus),
        }
    }
}

impl fmt::Display for BellLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct UnknownLabel(pub String);

impl fmt::Display for UnknownLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "unknown Bell label `{}`", self.0)
    }
}

impl std::error::Error for UnknownLabel {}

impl FromStr for BellLabel {
    type Err = UnknownLabel;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        BellLabel::ALL
            .into_iter()
            .find(|l| l.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| UnknownLabel(s.to_string()))
    }
}

/// Maps the `(S_zz, S_xx)` outcome pair to the Bell state it identifies.
pub fn classify(m: Sign, n: Sign) -> BellLabel {
    match (m, n) {
        (Sign::Plus, Sign::Plus) => BellLabel::PhiPlus,
        (Sign::Plus, Sign::Minus) => BellLabel::PhiMinus,
        (Sign::Minus, Sign::Plus) => BellLabel::PsiPlus,
        (Sign::Minus, Sign::Minus) => BellLabel::PsiMinus,
    }
}

/// [`classify`] over raw integer outcomes.
pub fn classify_values(m: i64, n: i64) -> Result<BellLabel> {
    Ok(classify(Sign::from_value(m)?, Sign::from_value(n)?))
}

/// Amplitude vector of a Bell state over `|++⟩, |+−⟩, |−+⟩, |−−⟩`.
pub fn bell_state<T: Scalar>(label: BellLabel) -> StateVector<T> {
    let h = T::FRAC_1_SQRT_2();
    let (o, z) = (h, T::zero());
    let amps = match label {
        BellLabel::PhiPlus => [o, z, z, h],
        BellLabel::PhiMinus => [o, z, z, -h],
        BellLabel::PsiPlus => [z, o, h, z],
        BellLabel::PsiMinus => [z, o, -h, z],
    };
    StateVector::from_amplitudes(amps.into_iter().map(re).collect())
        .expect("Bell state is normalized")
}

/// Bell-basis amplitudes `c1..c4` of a two-qubit state.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BellCoefficients<T> {
    coeffs: [Amp<T>; 4],
}

impl<T: Scalar> BellCoefficients<T> {
    pub fn new(coeffs: [Amp<T>; 4]) -> Result<Self> {
        let norm_sqr: T = coeffs.iter().map(|a| a.norm_sqr()).sum();
        if (norm_sqr - T::one()).abs() > T::TOLERANCE {
            return Err(Error::NotNormalized(norm_sqr.to_f64().unwrap_or(f64::NAN)));
        }
        Ok(Self { coeffs })
    }

    pub fn coeffs(&self) -> &[Amp<T>; 4] {
        &self.coeffs
    }

    pub fn get(&self, label: BellLabel) -> Amp<T> {
        self.coeffs[label.index()]
    }

    /// `|c_i|²` in label order.
    pub fn probabilities(&self) -> [T; 4] {
        self.coeffs.map(|c| c.norm_sqr())
    }
}

pub fn to_bell<T: Scalar>(s: &StateVector<T>) -> Result<BellCoefficients<T>> {
    if s.n_qubits() != 2 {
        return Err(Error::WrongQubitCount {
            expected: 2,
            found: s.n_qubits(),
        });
    }
    let h = T::FRAC_1_SQRT_2();
    let a = s.amplitudes();
    let (pp, pm, mp, mm) = (a[0], a[1], a[2], a[3]);
    Ok(BellCoefficients {
        coeffs: [
            (pp + mm).scale(h),
            (pp - mm).scale(h),
            (pm + mp).scale(h),
            (pm - mp).scale(h),
        ],
    })
}

pub fn from_bell<T: Scalar>(c: &BellCoefficients<T>) -> StateVector<T> {
    let h = T::FRAC_1_SQRT_2();
    let [c1, c2, c3, c4] = c.coeffs;
    let amps = vec![
        (c1 + c2).scale(h),
        (c3 + c4).scale(h),
        (c3 - c4).scale(h),
        (c1 - c2).scale(h),
    ];
    StateVector::renormalize(amps).expect("unitary change of basis keeps the norm")
}

/// `ab − ba`.
pub fn commutator<T: Scalar>(a: &Operator<T>, b: &Operator<T>) -> Result<Operator<T>> {
    Ok(&a.try_mul(b)? - &b.try_mul(a)?)
}

/// Identity of a spin product: the axis pair `(i, j)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SpinProductId {
    pub alice: Axis,
    pub bob: Axis,
}

impl fmt::Display for SpinProductId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "S_{}{}", self.alice, self.bob)
    }
}

/// `S_ij = σ_i ⊗ σ_j` with its ±1 spectral projectors `(I ± S_ij)/2`.
#[derive(Clone, Debug, PartialEq)]
pub struct SpinProduct<T> {
    id: SpinProductId,
    matrix: Operator<T>,
    plus: Operator<T>,
    minus: Operator<T>,
}

pub fn spin_product<T: Scalar>(alice: Axis, bob: Axis) -> SpinProduct<T> {
    let matrix = Operator::pauli(alice).kron(&Operator::pauli(bob));
    let id4 = Operator::identity(4);
    let half = re(T::lit(0.5));
    let plus = (&id4 + &matrix).scale(half);
    let minus = (&id4 - &matrix).scale(half);
    SpinProduct {
        id: SpinProductId { alice, bob },
        matrix,
        plus,
        minus,
    }
}

impl<T: Scalar> SpinProduct<T> {
    pub fn id(&self) -> SpinProductId {
        self.id
    }

    pub fn axes(&self) -> (Axis, Axis) {
        (self.id.alice, self.id.bob)
    }

    pub fn matrix(&self) -> &Operator<T> {
        &self.matrix
    }

    pub fn projector(&self, eigenvalue: Sign) -> &Operator<T> {
        match eigenvalue {
            Sign::Plus => &self.plus,
            Sign::Minus => &self.minus,
        }
    }

    /// An orthonormal pair spanning the given eigenspace.
    ///
    /// The eigenspaces are degenerate, so any rotation of this pair is
    /// equally valid; this one comes from Gram-Schmidt over the projected
    /// computational basis.
    pub fn eigenbasis(&self, eigenvalue: Sign) -> [StateVector<T>; 2] {
        let p = self.projector(eigenvalue);
        let mut found: Vec<Vec<Amp<T>>> = Vec::with_capacity(2);
        for k in 0..4 {
            let mut v: Vec<Amp<T>> = (0..4).map(|r| p.get(r, k)).collect();
            for u in &found {
                let ov = u
                    .iter()
                    .zip(&v)
                    .fold(zero::<T>(), |acc, (a, b)| acc + a.conj() * b);
                for (vi, ui) in v.iter_mut().zip(u) {
                    *vi = *vi - ui * ov;
                }
            }
            let norm: T = v.iter().map(|a| a.norm_sqr()).sum::<T>().sqrt();
            if norm > T::lit(1e-6) {
                found.push(v.into_iter().map(|a| a.unscale(norm)).collect());
            }
            if found.len() == 2 {
                break;
            }
        }
        let mut it = found
            .into_iter()
            .map(|v| StateVector::from_amplitudes(v).expect("normalized by construction"));
        [
            it.next().expect("rank-2 projector"),
            it.next().expect("rank-2 projector"),
        ]
    }
}
