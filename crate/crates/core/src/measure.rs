//! Spin-product measurement engine.
//!
//! Two ways of measuring `S_ij` on a two-qubit system (qubit 0 = Alice,
//! qubit 1 = Bob):
//!
//! * **local**: each party measures its own Pauli and the outcomes are
//!   multiplied. Same statistics as the nonlocal route, but the system is
//!   left in a product state.
//! * **nonlocal**: the parties share a `|Φ+⟩` meter pair, each CNOTs its
//!   system qubit onto its meter qubit and reads the meter in σ_z. The
//!   product of the meter readings is the outcome and the system is only
//!   projected onto the ±1 eigenspace of `S_ij`.
//!
//! For axes other than z the system wire is rotated into the z basis before
//! the CNOT and rotated back afterwards.

use serde::{Deserialize, Serialize};

use crate::bellcore::{bell_state, BellLabel, SpinProduct, SpinProductId};
use crate::error::{Error, Result};
use crate::qstate::{Axis, Operator, Sign, StateVector};
use crate::rng::RngStream;
use crate::scalar::Scalar;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Strategy {
    Local,
    Nonlocal,
}

impl Strategy {
    pub fn ebit_cost(self) -> u32 {
        match self {
            Strategy::Local => 0,
            Strategy::Nonlocal => 1,
        }
    }
}

/// POVM element labelled by the product outcome `m`.
#[derive(Clone, Debug, PartialEq)]
pub struct PovmElement<T> {
    pub outcome: Sign,
    pub matrix: Operator<T>,
}

/// Kraus operator labelled by the product outcome `m`. For the local strategy
/// the pair of single-site outcomes that produced it is kept as well.
#[derive(Clone, Debug, PartialEq)]
pub struct MeasOperator<T> {
    pub outcome: Sign,
    pub local_outcomes: Option<(Sign, Sign)>,
    pub matrix: Operator<T>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MeasurementRecord {
    pub observable: SpinProductId,
    pub strategy: Strategy,
    /// `(z_A, z_B)`: the two parties' raw readings.
    pub local_outcomes: (Sign, Sign),
    pub product_outcome: Sign,
    pub ebits_consumed: u32,
}

impl MeasurementRecord {
    pub fn new(observable: SpinProductId, strategy: Strategy, a: Sign, b: Sign) -> Self {
        Self {
            observable,
            strategy,
            local_outcomes: (a, b),
            product_outcome: a * b,
            ebits_consumed: strategy.ebit_cost(),
        }
    }
}

/// Unitary `V` with `V σ_axis V† = σ_z`, so measuring σ_z after `V` measures
/// σ_axis before it.
pub fn basis_change<T: Scalar>(axis: Axis) -> Operator<T> {
    match axis {
        Axis::Z => Operator::identity(2),
        Axis::X => Operator::hadamard(),
        Axis::Y => &Operator::hadamard() * &Operator::phase_s().adjoint(),
    }
}

fn sample_sign<T: Scalar>(p_plus: T, rng: &mut RngStream) -> Sign {
    let p = p_plus.to_f64().unwrap_or(0.0);
    let floor = T::TOLERANCE.to_f64().unwrap_or(1e-12);
    match rng.sample_index(&[p, 1.0 - p], floor) {
        0 => Sign::Plus,
        _ => Sign::Minus,
    }
}

/// σ_z readout of one qubit; returns the outcome and the collapsed register.
pub fn measure_z<T: Scalar>(
    s: &StateVector<T>,
    qubit: usize,
    rng: &mut RngStream,
) -> Result<(Sign, StateVector<T>)> {
    let p_plus = s.qubit_probability(qubit, Sign::Plus)?;
    let outcome = sample_sign(p_plus, rng);
    Ok((outcome, s.collapse(qubit, outcome)?))
}

/// Projective measurement of σ_axis on one qubit.
pub fn measure_local_pauli<T: Scalar>(
    s: &StateVector<T>,
    qubit: usize,
    axis: Axis,
    rng: &mut RngStream,
) -> Result<(Sign, StateVector<T>)> {
    s.check_qubit(qubit)?;
    if axis == Axis::Z {
        return measure_z(s, qubit, rng);
    }
    let v = basis_change::<T>(axis);
    let rotated = s.apply_gate(&v, &[qubit])?;
    let (outcome, collapsed) = measure_z(&rotated, qubit, rng)?;
    Ok((outcome, collapsed.apply_gate(&v.adjoint(), &[qubit])?))
}

fn require_two_qubits<T: Scalar>(s: &StateVector<T>) -> Result<()> {
    if s.n_qubits() != 2 {
        return Err(Error::WrongQubitCount {
            expected: 2,
            found: s.n_qubits(),
        });
    }
    Ok(())
}

/// Measures `S_ij` by measuring σ_i on Alice's and σ_j on Bob's qubit.
pub fn local_product_measurement<T: Scalar>(
    s: &StateVector<T>,
    sp: &SpinProduct<T>,
    rng: &mut RngStream,
) -> Result<(MeasurementRecord, StateVector<T>)> {
    require_two_qubits(s)?;
    let (ax_a, ax_b) = sp.axes();
    let (z_a, s) = measure_local_pauli(s, 0, ax_a, rng)?;
    let (z_b, s) = measure_local_pauli(&s, 1, ax_b, rng)?;
    Ok((
        MeasurementRecord::new(sp.id(), Strategy::Local, z_a, z_b),
        s,
    ))
}

/// One party's half of the meter coupling: rotate the system wire into the
/// z basis, CNOT it onto the meter qubit, rotate back.
pub fn couple_meter<T: Scalar>(
    register: &StateVector<T>,
    system: usize,
    meter: usize,
    axis: Axis,
) -> Result<StateVector<T>> {
    if axis == Axis::Z {
        return register.apply_gate(&Operator::cnot(), &[system, meter]);
    }
    let v = basis_change::<T>(axis);
    register
        .apply_gate(&v, &[system])?
        .apply_gate(&Operator::cnot(), &[system, meter])?
        .apply_gate(&v.adjoint(), &[system])
}

/// Checks that a meter pair is the `|Φ+⟩` ebit.
pub fn check_meter<T: Scalar>(meter: &StateVector<T>) -> Result<()> {
    if meter.n_qubits() != 2 {
        return Err(Error::BadMeter);
    }
    let f = meter.fidelity(&bell_state(BellLabel::PhiPlus))?;
    if f < T::one() - T::TOLERANCE {
        return Err(Error::BadMeter);
    }
    Ok(())
}

/// Measures `S_ij` through a shared meter pair.
///
/// Register layout during the measurement: `[sys_A, sys_B, meter_A,
/// meter_B]`. The meter is discarded after readout, so the returned state is
/// again two qubits.
pub fn nonlocal_product_measurement<T: Scalar>(
    s: &StateVector<T>,
    sp: &SpinProduct<T>,
    meter: &StateVector<T>,
    rng: &mut RngStream,
) -> Result<(MeasurementRecord, StateVector<T>)> {
    require_two_qubits(s)?;
    check_meter(meter)?;
    let (ax_a, ax_b) = sp.axes();
    let reg = s.tensor(meter);
    let reg = couple_meter(&reg, 0, 2, ax_a)?;
    let reg = couple_meter(&reg, 1, 3, ax_b)?;
    let (z_a, reg) = measure_z(&reg, 2, rng)?;
    let (z_b, reg) = measure_z(&reg, 3, rng)?;
    let post = reg.discard(&[2, 3], &[z_a, z_b])?;
    Ok((
        MeasurementRecord::new(sp.id(), Strategy::Nonlocal, z_a, z_b),
        post,
    ))
}

/// Effective system operators of the meter circuit, one per meter reading
/// `(z_A, z_B)`: `K = ⟨z_A z_B|_M U (· ⊗ |Φ+⟩_M)`, built column by column by
/// running the circuit on each computational input.
pub fn meter_kraus<T: Scalar>(sp: &SpinProduct<T>) -> Vec<((Sign, Sign), Operator<T>)> {
    let (ax_a, ax_b) = sp.axes();
    let meter = bell_state::<T>(BellLabel::PhiPlus);
    let outputs: Vec<StateVector<T>> = (0..4)
        .map(|k| {
            let reg = StateVector::basis(2, k)
                .expect("index in range")
                .tensor(&meter);
            let reg = couple_meter(&reg, 0, 2, ax_a).expect("valid wires");
            couple_meter(&reg, 1, 3, ax_b).expect("valid wires")
        })
        .collect();
    let mut out = Vec::with_capacity(4);
    for z_a in Sign::BOTH {
        for z_b in Sign::BOTH {
            let meter_index = (z_a.bit() << 1) | z_b.bit();
            let mut entries = Vec::with_capacity(16);
            for row in 0..4 {
                for reg in &outputs {
                    entries.push(reg.amplitude((row << 2) | meter_index));
                }
            }
            out.push(((z_a, z_b), Operator::new(4, entries).expect("4x4")));
        }
    }
    out
}

/// Measurement operators for `S_ij`.
///
/// Local: the four product projectors `Π_i(μ) ⊗ Π_j(ν)`, tagged with
/// `m = μν`. Nonlocal: the two eigenspace projectors `M_± = (I ± S_ij)/2`.
pub fn kraus_family<T: Scalar>(strategy: Strategy, sp: &SpinProduct<T>) -> Vec<MeasOperator<T>> {
    match strategy {
        Strategy::Local => {
            let (ax_a, ax_b) = sp.axes();
            let mut family = Vec::with_capacity(4);
            for mu in Sign::BOTH {
                for nu in Sign::BOTH {
                    let pa = local_projector::<T>(ax_a, mu);
                    let pb = local_projector::<T>(ax_b, nu);
                    family.push(MeasOperator {
                        outcome: mu * nu,
                        local_outcomes: Some((mu, nu)),
                        matrix: pa.kron(&pb),
                    });
                }
            }
            family
        }
        Strategy::Nonlocal => Sign::BOTH
            .iter()
            .map(|&m| MeasOperator {
                outcome: m,
                local_outcomes: None,
                matrix: sp.projector(m).clone(),
            })
            .collect(),
    }
}

/// Single-qubit projector onto the σ_axis eigenvector with the given sign.
pub fn local_projector<T: Scalar>(axis: Axis, sign: Sign) -> Operator<T> {
    let v = basis_change::<T>(axis);
    let z = Operator::projector(&StateVector::from_signs(&[sign]));
    &(&v.adjoint() * &z) * &v
}

/// `{E_+, E_−}` with `E_m = Σ M†M` over the Kraus operators reporting `m`.
pub fn povm_family<T: Scalar>(strategy: Strategy, sp: &SpinProduct<T>) -> Vec<PovmElement<T>> {
    let kraus = kraus_family(strategy, sp);
    Sign::BOTH
        .iter()
        .map(|&m| {
            let matrix = kraus
                .iter()
                .filter(|k| k.outcome == m)
                .fold(Operator::zeros(4), |acc, k| {
                    &acc + &(&k.matrix.adjoint() * &k.matrix)
                });
            PovmElement { outcome: m, matrix }
        })
        .collect()
}

/// Born probability `⟨s|E|s⟩`, clamped to `[0, 1]`.
pub fn outcome_probability<T: Scalar>(s: &StateVector<T>, e: &PovmElement<T>) -> Result<T> {
    if e.matrix.dim() != s.dim() {
        return Err(Error::DimensionMismatch {
            expected: s.dim(),
            found: e.matrix.dim(),
        });
    }
    let targets: Vec<usize> = (0..s.n_qubits()).collect();
    Ok(s.expectation(&e.matrix, &targets)?
        .max(T::zero())
        .min(T::one()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bellcore::{spin_product, to_bell};
    use crate::scalar::c;

    type S = StateVector<f64>;

    fn phi(label: BellLabel) -> S {
        bell_state(label)
    }

    #[test]
    fn basis_change_maps_to_z() {
        let z = Operator::<f64>::pauli(Axis::Z);
        for axis in Axis::ALL {
            let v = basis_change::<f64>(axis);
            let conj = &(&v * &Operator::pauli(axis)) * &v.adjoint();
            assert!(conj.approx_eq(&z, 1e-15), "{axis}");
        }
    }

    #[test]
    fn local_pauli_on_eigenstate() {
        let plus = S::from_signs(&[Sign::Plus]);
        let mut rng = RngStream::new(0);
        for _ in 0..100 {
            let (o, post) = measure_local_pauli(&plus, 0, Axis::Z, &mut rng).unwrap();
            assert_eq!(o, Sign::Plus);
            assert_eq!(post, plus);
        }
    }

    #[test]
    fn local_pauli_x_on_plus_is_fair() {
        let plus = S::from_signs(&[Sign::Plus]);
        let mut rng = RngStream::new(5);
        let n = 20_000;
        let ups = (0..n)
            .filter(|_| measure_local_pauli(&plus, 0, Axis::X, &mut rng).unwrap().0 == Sign::Plus)
            .count();
        // 4 sigma of a fair binomial
        let sigma = (n as f64 * 0.25).sqrt();
        assert!((ups as f64 - n as f64 / 2.0).abs() < 4.0 * sigma);
    }

    #[test]
    fn local_pauli_z_on_bell_pair() {
        let mut rng = RngStream::new(9);
        for _ in 0..50 {
            let (o, post) =
                measure_local_pauli(&phi(BellLabel::PhiPlus), 0, Axis::Z, &mut rng).unwrap();
            assert_eq!(post, S::from_signs(&[o, o]));
        }
    }

    #[test]
    fn local_product_zz() {
        let zz = spin_product::<f64>(Axis::Z, Axis::Z);
        let mut rng = RngStream::new(2);
        for _ in 0..50 {
            let (rec, post) =
                local_product_measurement(&phi(BellLabel::PhiPlus), &zz, &mut rng).unwrap();
            assert_eq!(rec.product_outcome, Sign::Plus);
            assert_eq!(rec.ebits_consumed, 0);
            assert_eq!(rec.strategy, Strategy::Local);
            let (a, b) = rec.local_outcomes;
            assert_eq!(post, S::from_signs(&[a, b]));
        }
        let pm = S::from_signs(&[Sign::Plus, Sign::Minus]);
        let (rec, post) = local_product_measurement(&pm, &zz, &mut rng).unwrap();
        assert_eq!(rec.product_outcome, Sign::Minus);
        assert_eq!(post, pm);
    }

    #[test]
    fn nonlocal_zz_keeps_superposition() {
        // c = (0.6, 0.8i, 0, 0): m = +1 always and the state is unchanged
        let coeffs = crate::bellcore::BellCoefficients::new([
            c(0.6, 0.0),
            c(0.0, 0.8),
            c(0.0, 0.0),
            c(0.0, 0.0),
        ])
        .unwrap();
        let s = crate::bellcore::from_bell(&coeffs);
        let zz = spin_product::<f64>(Axis::Z, Axis::Z);
        let meter = phi(BellLabel::PhiPlus);
        let mut rng = RngStream::new(4);
        for _ in 0..20 {
            let (rec, post) = nonlocal_product_measurement(&s, &zz, &meter, &mut rng).unwrap();
            assert_eq!(rec.product_outcome, Sign::Plus);
            assert_eq!(rec.ebits_consumed, 1);
            assert!(post.approx_eq_up_to_phase(&s, 1e-12));
        }
    }

    #[test]
    fn nonlocal_eigenstates() {
        let meter = phi(BellLabel::PhiPlus);
        let zz = spin_product::<f64>(Axis::Z, Axis::Z);
        let xx = spin_product::<f64>(Axis::X, Axis::X);
        let mut rng = RngStream::new(8);
        for _ in 0..20 {
            let (rec, post) =
                nonlocal_product_measurement(&phi(BellLabel::PsiPlus), &zz, &meter, &mut rng)
                    .unwrap();
            assert_eq!(rec.product_outcome, Sign::Minus);
            assert!(post.approx_eq_up_to_phase(&phi(BellLabel::PsiPlus), 1e-12));
            let (rec, _) =
                nonlocal_product_measurement(&phi(BellLabel::PhiMinus), &xx, &meter, &mut rng)
                    .unwrap();
            assert_eq!(rec.product_outcome, Sign::Minus);
        }
    }

    #[test]
    fn nonlocal_rejects_bad_meter() {
        let zz = spin_product::<f64>(Axis::Z, Axis::Z);
        let mut rng = RngStream::new(0);
        let s = phi(BellLabel::PhiPlus);
        for meter in [
            phi(BellLabel::PsiPlus),
            phi(BellLabel::PhiMinus),
            S::from_signs(&[Sign::Plus, Sign::Plus]),
            S::from_signs(&[Sign::Plus]),
        ] {
            assert_eq!(
                nonlocal_product_measurement(&s, &zz, &meter, &mut rng).unwrap_err(),
                Error::BadMeter
            );
        }
    }

    #[test]
    fn meter_circuit_realizes_eigenprojectors() {
        // each meter reading contributes P_m / sqrt(2) up to a phase
        for i in Axis::ALL {
            for j in Axis::ALL {
                let sp = spin_product::<f64>(i, j);
                for ((za, zb), k) in meter_kraus(&sp) {
                    let target = sp
                        .projector(za * zb)
                        .scale(c(std::f64::consts::FRAC_1_SQRT_2, 0.0));
                    let kk = &k.adjoint() * &k;
                    let tt = &target.adjoint() * &target;
                    assert!(kk.approx_eq(&tt, 1e-12), "S_{i}{j}");
                    // K is proportional to the projector: K = P K
                    assert!((sp.projector(za * zb) * &k).approx_eq(&k, 1e-12));
                }
            }
        }
    }

    #[test]
    fn povm_families_agree_and_are_complete() {
        let id = Operator::<f64>::identity(4);
        for i in Axis::ALL {
            for j in Axis::ALL {
                let sp = spin_product::<f64>(i, j);
                let local = povm_family(Strategy::Local, &sp);
                let nonlocal = povm_family(Strategy::Nonlocal, &sp);
                let total = local.iter().fold(Operator::zeros(4), |a, e| &a + &e.matrix);
                assert!(total.approx_eq(&id, 1e-12));
                for (l, n) in local.iter().zip(&nonlocal) {
                    assert_eq!(l.outcome, n.outcome);
                    assert!(l.matrix.approx_eq(&n.matrix, 1e-12));
                    assert!(l.matrix.is_hermitian(1e-12));
                }
            }
        }
        let zz = spin_product::<f64>(Axis::Z, Axis::Z);
        let e_plus = &povm_family(Strategy::Local, &zz)[0];
        let bell_sum = &Operator::projector(&phi(BellLabel::PhiPlus))
            + &Operator::projector(&phi(BellLabel::PhiMinus));
        assert!(e_plus.matrix.approx_eq(&bell_sum, 1e-12));
    }

    #[test]
    fn probability_examples() {
        let zz = spin_product::<f64>(Axis::Z, Axis::Z);
        let xx = spin_product::<f64>(Axis::X, Axis::X);
        let e_zz = &povm_family(Strategy::Nonlocal, &zz)[0];
        let e_xx = &povm_family(Strategy::Nonlocal, &xx)[0];
        assert!((outcome_probability(&phi(BellLabel::PhiPlus), e_zz).unwrap() - 1.0).abs() < 1e-12);
        let pm = S::from_signs(&[Sign::Plus, Sign::Minus]);
        assert!(outcome_probability(&pm, e_zz).unwrap().abs() < 1e-12);
        let pp = S::from_signs(&[Sign::Plus, Sign::Plus]);
        assert!((outcome_probability(&pp, e_xx).unwrap() - 0.5).abs() < 1e-12);
        assert!(outcome_probability(&S::from_signs(&[Sign::Plus]), e_zz).is_err());
    }

    #[test]
    fn zz_probability_equals_bell_weights() {
        let mut rng = RngStream::new(77);
        let zz = spin_product::<f64>(Axis::Z, Axis::Z);
        let fam = povm_family(Strategy::Nonlocal, &zz);
        for _ in 0..100 {
            let s = S::random(2, &mut rng);
            let p = to_bell(&s).unwrap().probabilities();
            assert!((outcome_probability(&s, &fam[0]).unwrap() - (p[0] + p[1])).abs() < 1e-12);
            assert!((outcome_probability(&s, &fam[1]).unwrap() - (p[2] + p[3])).abs() < 1e-12);
        }
    }

    #[test]
    fn record_product_law() {
        let id = SpinProductId {
            alice: Axis::Z,
            bob: Axis::Z,
        };
        let r = MeasurementRecord::new(id, Strategy::Nonlocal, Sign::Minus, Sign::Minus);
        assert_eq!(r.product_outcome, Sign::Plus);
        assert_eq!(r.ebits_consumed, 1);
        let json = serde_json::to_string(&r).unwrap();
        assert!(json.contains("\"product_outcome\":1"), "{json}");
    }
}
