//! Qubit-level model of the linear-optics Bell analyzer.
//!
//! Each photon carries three qubits: its polarization (the system), a path
//! qubit entangled with the other photon's path qubit (the `S_zz` meter) and
//! a second, local path qubit that records the σ_x outcome. A polarizing
//! beamsplitter acts as a CNOT from polarization onto a path qubit and a
//! half-wave plate as a Hadamard on polarization. Each photon ends up in
//! one of four output ports, which encode its `(z, x)` readings.
//!
//! Register layout: `[pol_A, pol_B, path_z_A, path_z_B, path_x_A, path_x_B]`.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::bellcore::{bell_state, classify, BellLabel, SpinProductId};
use crate::error::{Error, Result};
use crate::measure::{MeasurementRecord, Strategy};
use crate::protocols::{Gate, LoccEngine, PartyId, Phase, ProtocolResult, Scheme};
use crate::qstate::{Axis, Operator, Sign, StateVector};
use crate::rng::RngStream;
use crate::scalar::{zero, Scalar};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Photon {
    A,
    B,
}

impl Photon {
    pub fn register(self) -> PhotonRegister {
        match self {
            Photon::A => PhotonRegister {
                polarization: 0,
                path_z: 2,
                path_x: 4,
            },
            Photon::B => PhotonRegister {
                polarization: 1,
                path_z: 3,
                path_x: 5,
            },
        }
    }

    fn party(self) -> PartyId {
        match self {
            Photon::A => PartyId::Alice,
            Photon::B => PartyId::Bob,
        }
    }
}

/// Register positions of one photon's qubits.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct PhotonRegister {
    pub polarization: usize,
    pub path_z: usize,
    pub path_x: usize,
}

pub const N_QUBITS: usize = 6;

/// Output port of one photon; `port = 2·bit(z) + bit(x)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct DetectorIndex {
    pub photon: Photon,
    pub port: u8,
}

impl DetectorIndex {
    pub fn new(photon: Photon, port: u8) -> Result<Self> {
        if port > 3 {
            return Err(Error::OutOfDomain(port as i64));
        }
        Ok(Self { photon, port })
    }

    pub fn from_readings(photon: Photon, z: Sign, x: Sign) -> Self {
        Self {
            photon,
            port: (2 * z.bit() + x.bit()) as u8,
        }
    }

    pub fn z(self) -> Sign {
        Sign::from_bit((self.port >> 1) as usize)
    }

    pub fn x(self) -> Sign {
        Sign::from_bit((self.port & 1) as usize)
    }
}

impl fmt::Display for DetectorIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{:?}{} (z={}, x={})",
            self.photon,
            self.port,
            self.z(),
            self.x()
        )
    }
}

/// Polarizations ⊗ `|Φ+⟩` on the z paths ⊗ `|++⟩` on the x paths.
pub fn initial_register<T: Scalar>(s: &StateVector<T>) -> Result<StateVector<T>> {
    if s.n_qubits() != 2 {
        return Err(Error::WrongQubitCount {
            expected: 2,
            found: s.n_qubits(),
        });
    }
    Ok(s.tensor(&bell_state(BellLabel::PhiPlus))
        .tensor(&StateVector::from_signs(&[Sign::Plus, Sign::Plus])))
}

/// One photon's optics: PBS(Z), HWP, PBS(X).
pub fn apply_station<T: Scalar>(state: &StateVector<T>, photon: Photon) -> Result<StateVector<T>> {
    let r = photon.register();
    state
        .apply_gate(&Operator::cnot(), &[r.polarization, r.path_z])?
        .apply_gate(&Operator::hadamard(), &[r.polarization])?
        .apply_gate(&Operator::cnot(), &[r.polarization, r.path_x])
}

/// Final six-qubit state just before detection.
pub fn build_photonic_run<T: Scalar>(s: &StateVector<T>) -> Result<StateVector<T>> {
    let reg = initial_register(s)?;
    apply_station(&apply_station(&reg, Photon::A)?, Photon::B)
}

pub(crate) fn ports_of_index(index: usize) -> (DetectorIndex, DetectorIndex) {
    let bit = |q: usize| Sign::from_bit(index >> (N_QUBITS - 1 - q));
    let port = |p: Photon| {
        let r = p.register();
        DetectorIndex::from_readings(p, bit(r.path_z), bit(r.path_x))
    };
    (port(Photon::A), port(Photon::B))
}

/// Samples where the two photons are detected.
pub fn detect<T: Scalar>(
    final_state: &StateVector<T>,
    rng: &mut RngStream,
) -> Result<(DetectorIndex, DetectorIndex)> {
    if final_state.n_qubits() != N_QUBITS {
        return Err(Error::WrongQubitCount {
            expected: N_QUBITS,
            found: final_state.n_qubits(),
        });
    }
    let weights: Vec<f64> = final_state
        .probabilities()
        .into_iter()
        .map(|p| p.to_f64().unwrap_or(0.0))
        .collect();
    let floor = T::TOLERANCE.to_f64().unwrap_or(1e-12);
    Ok(ports_of_index(rng.sample_index(&weights, floor)))
}

pub fn photonic_label(ports: (DetectorIndex, DetectorIndex)) -> BellLabel {
    let (a, b) = ports;
    classify(a.z() * b.z(), a.x() * b.x())
}

/// Exact port-pair probabilities, indexed `[port_A][port_B]`.
pub fn port_distribution<T: Scalar>(final_state: &StateVector<T>) -> Result<[[T; 4]; 4]> {
    if final_state.n_qubits() != N_QUBITS {
        return Err(Error::WrongQubitCount {
            expected: N_QUBITS,
            found: final_state.n_qubits(),
        });
    }
    let mut out = [[T::zero(); 4]; 4];
    for (i, p) in final_state.probabilities().into_iter().enumerate() {
        let (a, b) = ports_of_index(i);
        out[a.port as usize][b.port as usize] = out[a.port as usize][b.port as usize] + p;
    }
    Ok(out)
}

/// Exact label probabilities of the photonic analyzer, in label order.
pub fn label_distribution<T: Scalar>(s: &StateVector<T>) -> Result<[T; 4]> {
    let ports = port_distribution(&build_photonic_run(s)?)?;
    let mut out = [T::zero(); 4];
    for (pa, row) in ports.iter().enumerate() {
        for (pb, p) in row.iter().enumerate() {
            let label = photonic_label((
                DetectorIndex {
                    photon: Photon::A,
                    port: pa as u8,
                },
                DetectorIndex {
                    photon: Photon::B,
                    port: pb as u8,
                },
            ));
            out[label.index()] = out[label.index()] + *p;
        }
    }
    Ok(out)
}

/// POVM of the analyzer on the polarization pair: `V† Π_label V`, with `V`
/// the isometry from polarizations into the six-qubit output.
pub fn photonic_povms<T: Scalar>() -> [Operator<T>; 4] {
    let columns: Vec<StateVector<T>> = (0..4)
        .map(|k| {
            build_photonic_run(&StateVector::basis(2, k).expect("index in range"))
                .expect("two qubits")
        })
        .collect();
    let labels: Vec<BellLabel> = (0..1usize << N_QUBITS)
        .map(|i| photonic_label(ports_of_index(i)))
        .collect();
    BellLabel::ALL.map(|label| {
        let mut entries = vec![zero::<T>(); 16];
        for r in 0..4 {
            for c in 0..4 {
                entries[r * 4 + c] = labels
                    .iter()
                    .enumerate()
                    .filter(|(_, l)| **l == label)
                    .fold(zero(), |acc, (i, _)| {
                        acc + columns[r].amplitude(i).conj() * columns[c].amplitude(i)
                    });
            }
        }
        Operator::new(4, entries).expect("4x4")
    })
}

/// One photonic run through the LOCC engine. The z-path pair is the ebit;
/// the x paths are local ancillas. Photons are absorbed on detection, so no
/// post-measurement state is returned.
pub fn run_photonic<T: Scalar>(
    s: &StateVector<T>,
    rng: &mut RngStream,
) -> Result<ProtocolResult<T>> {
    let mut engine = LoccEngine::new(s.clone(), Scheme::Photonic.ebit_cost(), rng.clone())?;
    engine.distribute_ebit()?;
    for p in [Photon::A, Photon::B] {
        let q = engine.add_ancilla(p.party());
        debug_assert_eq!(q, p.register().path_x);
    }
    for p in [Photon::A, Photon::B] {
        let r = p.register();
        engine.local_gate(p.party(), Gate::Cnot, &[r.polarization, r.path_z])?;
        engine.local_gate(p.party(), Gate::Hadamard, &[r.polarization])?;
        engine.local_gate(p.party(), Gate::Cnot, &[r.polarization, r.path_x])?;
    }
    let za = engine.measure(
        PartyId::Alice,
        Photon::A.register().path_z,
        Axis::Z,
        Phase::MeterReadout,
    )?;
    let zb = engine.measure(
        PartyId::Bob,
        Photon::B.register().path_z,
        Axis::Z,
        Phase::MeterReadout,
    )?;
    let xa = engine.measure(
        PartyId::Alice,
        Photon::A.register().path_x,
        Axis::Z,
        Phase::LocalReadout,
    )?;
    let xb = engine.measure(
        PartyId::Bob,
        Photon::B.register().path_x,
        Axis::Z,
        Phase::LocalReadout,
    )?;
    let (at_alice, at_bob) = engine.exchange(&[za, xa], &[zb, xb])?;
    let m = engine.multiply(PartyId::Alice, &[za, at_alice[0]])?;
    let n = engine.multiply(PartyId::Alice, &[xa, at_alice[1]])?;
    engine.multiply(PartyId::Bob, &[at_bob[0], zb])?;
    engine.multiply(PartyId::Bob, &[at_bob[1], xb])?;
    let (_, trace, ledger, advanced) = engine.into_parts();
    *rng = advanced;
    Ok(ProtocolResult {
        scheme: Scheme::Photonic,
        outcomes: (m, n),
        label: classify(m, n),
        post_state: None,
        records: vec![
            MeasurementRecord::new(
                SpinProductId {
                    alice: Axis::Z,
                    bob: Axis::Z,
                },
                Strategy::Nonlocal,
                za.value,
                zb.value,
            ),
            MeasurementRecord::new(
                SpinProductId {
                    alice: Axis::X,
                    bob: Axis::X,
                },
                Strategy::Local,
                xa.value,
                xb.value,
            ),
        ],
        trace,
        ledger,
    })
}
