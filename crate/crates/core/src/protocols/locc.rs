//! Two-party LOCC engine.
//!
//! The engine owns the joint register but only lets each party touch the
//! qubits it owns. Entanglement enters only through the ebit source, and
//! everything the parties learn from each other goes through a
//! [`Transport`]. Every action is appended to an event trace that
//! [`super::audit::locc_audit`] can replay independently.

use std::collections::VecDeque;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::bellcore::{bell_state, BellLabel};
use crate::error::{Error, Result};
use crate::measure::{basis_change, measure_local_pauli};
use crate::qstate::{Axis, Operator, Sign, StateVector};
use crate::rng::RngStream;
use crate::scalar::Scalar;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PartyId {
    Alice,
    Bob,
}

impl PartyId {
    pub fn other(self) -> PartyId {
        match self {
            PartyId::Alice => PartyId::Bob,
            PartyId::Bob => PartyId::Alice,
        }
    }
}

impl fmt::Display for PartyId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            PartyId::Alice => "alice",
            PartyId::Bob => "bob",
        })
    }
}

/// A party and the register positions it currently holds.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Party {
    pub id: PartyId,
    pub owned_qubits: Vec<usize>,
}

/// Who performed a traced action. `Source` is the ebit source, `Joint` an
/// operation spanning both laboratories.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Actor {
    Alice,
    Bob,
    Source,
    Joint,
}

impl From<PartyId> for Actor {
    fn from(p: PartyId) -> Self {
        match p {
            PartyId::Alice => Actor::Alice,
            PartyId::Bob => Actor::Bob,
        }
    }
}

impl Actor {
    pub fn party(self) -> Option<PartyId> {
        match self {
            Actor::Alice => Some(PartyId::Alice),
            Actor::Bob => Some(PartyId::Bob),
            _ => None,
        }
    }
}

/// Protocol phases. Within one round phases may only move forward.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Phase {
    Setup,
    DistributeEbit,
    NonlocalGate,
    LocalOps,
    MeterReadout,
    LocalReadout,
    ExchangeOutcomes,
    Multiply,
    Release,
}

impl fmt::Display for Phase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Op {
    /// Register position handed to a party (initial system qubits, local ancillas).
    Own,
    /// Fresh `|Φ+⟩` pair from the source, one half per party.
    Ebit,
    Cnot,
    Hadamard,
    /// Basis change taking `axis` to z.
    Rotate,
    /// Inverse of `Rotate`.
    Unrotate,
    Measure,
    Send,
    Receive,
    /// A party multiplies ±1 outcomes it knows.
    Product,
    /// A collapsed qubit is dropped from the register.
    Release,
}

impl Op {
    pub fn is_gate(self) -> bool {
        matches!(self, Op::Cnot | Op::Hadamard | Op::Rotate | Op::Unrotate)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClassicalMessage {
    pub from: PartyId,
    pub to: PartyId,
    /// Outcome values only; never amplitudes.
    pub payload: Vec<Sign>,
    /// Trace steps of the measurements the payload reports.
    pub refs: Vec<usize>,
    /// Phase tag.
    pub step: Phase,
}

/// One line of the trace.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Event {
    pub step: usize,
    pub party: Actor,
    pub op: Op,
    pub qubits: Vec<usize>,
    pub phase: Phase,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub axis: Option<Axis>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub message: Option<ClassicalMessage>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub outcome: Option<Sign>,
    /// For `Product`: the trace steps of the measurements multiplied.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub inputs: Vec<usize>,
}

/// Line-delimited JSON, one event per line.
pub fn trace_to_jsonl(events: &[Event]) -> String {
    let mut out = String::new();
    for e in events {
        out.push_str(&serde_json::to_string(e).expect("event serializes"));
        out.push('\n');
    }
    out
}

pub fn trace_from_jsonl(text: &str) -> Result<Vec<Event>> {
    text.lines()
        .filter(|l| !l.trim().is_empty())
        .enumerate()
        .map(|(i, l)| {
            serde_json::from_str(l)
                .map_err(|e| Error::MalformedTrace(format!("line {}: {e}", i + 1)))
        })
        .collect()
}

/// Ordered, reliable delivery of classical messages.
pub trait Transport {
    fn send(&mut self, msg: ClassicalMessage);
    /// Oldest undelivered message addressed to `to`.
    fn recv(&mut self, to: PartyId) -> Option<ClassicalMessage>;
}

#[derive(Clone, Debug, Default)]
pub struct InMemoryChannel {
    queue: VecDeque<ClassicalMessage>,
}

impl InMemoryChannel {
    pub fn pending(&self) -> usize {
        self.queue.len()
    }
}

impl Transport for InMemoryChannel {
    fn send(&mut self, msg: ClassicalMessage) {
        self.queue.push_back(msg);
    }

    fn recv(&mut self, to: PartyId) -> Option<ClassicalMessage> {
        let pos = self.queue.iter().position(|m| m.to == to)?;
        self.queue.remove(pos)
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ResourceLedger {
    pub ebits_granted: u32,
    pub ebits_consumed: u32,
}

impl ResourceLedger {
    pub fn new(granted: u32) -> Self {
        Self {
            ebits_granted: granted,
            ebits_consumed: 0,
        }
    }

    pub fn remaining(&self) -> u32 {
        self.ebits_granted - self.ebits_consumed
    }

    pub fn consume(&mut self, n: u32) -> Result<()> {
        if self.ebits_consumed + n > self.ebits_granted {
            return Err(Error::InsufficientEbits {
                granted: self.ebits_granted,
                requested: self.ebits_consumed + n,
            });
        }
        self.ebits_consumed += n;
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Gate {
    Cnot,
    Hadamard,
    Rotate(Axis),
    Unrotate(Axis),
}

impl Gate {
    fn op(self) -> (Op, Option<Axis>) {
        match self {
            Gate::Cnot => (Op::Cnot, None),
            Gate::Hadamard => (Op::Hadamard, None),
            Gate::Rotate(a) => (Op::Rotate, Some(a)),
            Gate::Unrotate(a) => (Op::Unrotate, Some(a)),
        }
    }

    fn matrix<T: Scalar>(self) -> Operator<T> {
        match self {
            Gate::Cnot => Operator::cnot(),
            Gate::Hadamard => Operator::hadamard(),
            Gate::Rotate(a) => basis_change(a),
            Gate::Unrotate(a) => basis_change::<T>(a).adjoint(),
        }
    }
}

/// A measurement outcome together with the trace step that produced it.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Reading {
    pub value: Sign,
    pub step: usize,
}

pub struct LoccEngine<T, C = InMemoryChannel> {
    register: StateVector<T>,
    owners: Vec<PartyId>,
    ledger: ResourceLedger,
    channel: C,
    events: Vec<Event>,
    rng: RngStream,
    phase: Phase,
}

impl<T: Scalar> LoccEngine<T> {
    /// Starts from a two-qubit system: Alice holds qubit 0, Bob qubit 1.
    pub fn new(system: StateVector<T>, ebits_granted: u32, rng: RngStream) -> Result<Self> {
        Self::with_transport(system, ebits_granted, rng, InMemoryChannel::default())
    }
}

impl<T: Scalar, C: Transport> LoccEngine<T, C> {
    pub fn with_transport(
        system: StateVector<T>,
        ebits_granted: u32,
        rng: RngStream,
        channel: C,
    ) -> Result<Self> {
        if system.n_qubits() != 2 {
            return Err(Error::WrongQubitCount {
                expected: 2,
                found: system.n_qubits(),
            });
        }
        let mut engine = Self {
            register: system,
            owners: vec![PartyId::Alice, PartyId::Bob],
            ledger: ResourceLedger::new(ebits_granted),
            channel,
            events: Vec::with_capacity(32),
            rng,
            phase: Phase::Setup,
        };
        engine.record(PartyId::Alice.into(), Op::Own, vec![0]);
        engine.record(PartyId::Bob.into(), Op::Own, vec![1]);
        Ok(engine)
    }

    pub fn register(&self) -> &StateVector<T> {
        &self.register
    }

    pub fn ledger(&self) -> ResourceLedger {
        self.ledger
    }

    pub fn events(&self) -> &[Event] {
        &self.events
    }

    pub fn channel(&self) -> &C {
        &self.channel
    }

    pub fn party(&self, id: PartyId) -> Party {
        Party {
            id,
            owned_qubits: (0..self.owners.len())
                .filter(|&q| self.owners[q] == id)
                .collect(),
        }
    }

    /// Final register, trace, ledger and the advanced random stream.
    pub fn into_parts(self) -> (StateVector<T>, Vec<Event>, ResourceLedger, RngStream) {
        (self.register, self.events, self.ledger, self.rng)
    }

    fn record(&mut self, party: Actor, op: Op, qubits: Vec<usize>) -> usize {
        let step = self.events.len();
        self.events.push(Event {
            step,
            party,
            op,
            qubits,
            phase: self.phase,
            axis: None,
            message: None,
            outcome: None,
            inputs: Vec::new(),
        });
        step
    }

    fn last_event(&mut self) -> &mut Event {
        self.events.last_mut().expect("event just recorded")
    }

    /// Starts a new measurement round; phases restart from `Setup`.
    pub fn begin_round(&mut self) {
        self.phase = Phase::Setup;
    }

    fn enter(&mut self, phase: Phase) -> Result<()> {
        if phase < self.phase {
            return Err(Error::PhaseOrder {
                current: self.phase.to_string(),
                found: phase.to_string(),
            });
        }
        self.phase = phase;
        Ok(())
    }

    fn check_owner(&self, party: PartyId, qubits: &[usize]) -> Result<()> {
        for &q in qubits {
            if self.owners.get(q) != Some(&party) {
                return Err(Error::NotOwned {
                    party: party.to_string(),
                    qubit: q,
                });
            }
        }
        Ok(())
    }

    /// Appends a fresh `|Φ+⟩` pair; the first qubit goes to Alice, the
    /// second to Bob. Consumes one ebit from the ledger.
    pub fn distribute_ebit(&mut self) -> Result<(usize, usize)> {
        self.enter(Phase::DistributeEbit)?;
        self.ledger.consume(1)?;
        let a = self.register.n_qubits();
        self.register = self.register.tensor(&bell_state(BellLabel::PhiPlus));
        self.owners.extend([PartyId::Alice, PartyId::Bob]);
        self.record(Actor::Source, Op::Ebit, vec![a, a + 1]);
        Ok((a, a + 1))
    }

    /// Appends a local qubit in `|+⟩ ≡ |0⟩` held by `party`.
    pub fn add_ancilla(&mut self, party: PartyId) -> usize {
        let q = self.register.n_qubits();
        self.register = self
            .register
            .tensor(&StateVector::from_signs(&[Sign::Plus]));
        self.owners.push(party);
        self.record(party.into(), Op::Own, vec![q]);
        q
    }

    pub fn local_gate(&mut self, party: PartyId, gate: Gate, qubits: &[usize]) -> Result<()> {
        self.check_owner(party, qubits)?;
        self.enter(Phase::LocalOps)?;
        self.apply_gate(party.into(), gate, qubits)
    }

    /// A gate spanning both laboratories. Not an LOCC operation; the trace
    /// marks it as `joint` and an audit will reject it.
    pub fn joint_gate(&mut self, gate: Gate, qubits: &[usize]) -> Result<()> {
        self.enter(Phase::NonlocalGate)?;
        self.apply_gate(Actor::Joint, gate, qubits)
    }

    fn apply_gate(&mut self, actor: Actor, gate: Gate, qubits: &[usize]) -> Result<()> {
        self.register = self.register.apply_gate(&gate.matrix(), qubits)?;
        let (op, axis) = gate.op();
        self.record(actor, op, qubits.to_vec());
        self.last_event().axis = axis;
        Ok(())
    }

    /// Projective σ_axis measurement of one owned qubit.
    pub fn measure(
        &mut self,
        party: PartyId,
        qubit: usize,
        axis: Axis,
        phase: Phase,
    ) -> Result<Reading> {
        self.check_owner(party, &[qubit])?;
        self.enter(phase)?;
        let (value, post) = measure_local_pauli(&self.register, qubit, axis, &mut self.rng)?;
        self.register = post;
        let step = self.record(party.into(), Op::Measure, vec![qubit]);
        let e = self.last_event();
        e.axis = Some(axis);
        e.outcome = Some(value);
        Ok(Reading { value, step })
    }

    fn send(&mut self, from: PartyId, readings: &[Reading]) {
        let msg = ClassicalMessage {
            from,
            to: from.other(),
            payload: readings.iter().map(|r| r.value).collect(),
            refs: readings.iter().map(|r| r.step).collect(),
            step: self.phase,
        };
        self.record(from.into(), Op::Send, Vec::new());
        self.last_event().message = Some(msg.clone());
        self.channel.send(msg);
    }

    fn receive(&mut self, to: PartyId) -> Result<Vec<Reading>> {
        let msg = self
            .channel
            .recv(to)
            .ok_or_else(|| Error::NoMessage(to.to_string()))?;
        let readings = msg
            .payload
            .iter()
            .zip(&msg.refs)
            .map(|(&value, &step)| Reading { value, step })
            .collect();
        self.record(to.into(), Op::Receive, Vec::new());
        self.last_event().message = Some(msg);
        Ok(readings)
    }

    /// Symmetric exchange: each party sends its readings and receives the
    /// other's. Returns what Alice and Bob received, in that order.
    pub fn exchange(
        &mut self,
        alice: &[Reading],
        bob: &[Reading],
    ) -> Result<(Vec<Reading>, Vec<Reading>)> {
        self.enter(Phase::ExchangeOutcomes)?;
        self.send(PartyId::Alice, alice);
        self.send(PartyId::Bob, bob);
        let to_bob = self.receive(PartyId::Bob)?;
        let to_alice = self.receive(PartyId::Alice)?;
        Ok((to_alice, to_bob))
    }

    /// `party` multiplies outcomes it knows.
    pub fn multiply(&mut self, party: PartyId, inputs: &[Reading]) -> Result<Sign> {
        self.enter(Phase::Multiply)?;
        let value = inputs.iter().fold(Sign::Plus, |acc, r| acc * r.value);
        self.record(party.into(), Op::Product, Vec::new());
        let e = self.last_event();
        e.outcome = Some(value);
        e.inputs = inputs.iter().map(|r| r.step).collect();
        Ok(value)
    }

    /// Drops measured qubits from the register. Each entry is the owning
    /// party, the qubit and the value it was found in.
    pub fn release(&mut self, qubits: &[(PartyId, usize, Sign)]) -> Result<()> {
        self.enter(Phase::Release)?;
        for &(party, q, _) in qubits {
            self.check_owner(party, &[q])?;
        }
        let positions: Vec<usize> = qubits.iter().map(|x| x.1).collect();
        let values: Vec<Sign> = qubits.iter().map(|x| x.2).collect();
        self.register = self.register.discard(&positions, &values)?;
        // highest position first so each event's index is valid when replayed in order
        let mut order: Vec<&(PartyId, usize, Sign)> = qubits.iter().collect();
        order.sort_by_key(|e| std::cmp::Reverse(e.1));
        for &&(party, q, v) in &order {
            self.owners.remove(q);
            self.record(party.into(), Op::Release, vec![q]);
            self.last_event().outcome = Some(v);
        }
        Ok(())
    }

    /// Nonlocal measurement of `σ_a ⊗ σ_b` on the system qubits through one
    /// fresh ebit. Both parties end up knowing the product; the meter pair
    /// is released afterwards.
    pub fn nonlocal_round(
        &mut self,
        alice_axis: Axis,
        bob_axis: Axis,
    ) -> Result<(Reading, Reading, Sign)> {
        self.begin_round();
        let (meter_a, meter_b) = self.distribute_ebit()?;
        for (party, sys, meter, axis) in [
            (PartyId::Alice, 0, meter_a, alice_axis),
            (PartyId::Bob, 1, meter_b, bob_axis),
        ] {
            if axis != Axis::Z {
                self.local_gate(party, Gate::Rotate(axis), &[sys])?;
            }
            self.local_gate(party, Gate::Cnot, &[sys, meter])?;
            if axis != Axis::Z {
                self.local_gate(party, Gate::Unrotate(axis), &[sys])?;
            }
        }
        let z_a = self.measure(PartyId::Alice, meter_a, Axis::Z, Phase::MeterReadout)?;
        let z_b = self.measure(PartyId::Bob, meter_b, Axis::Z, Phase::MeterReadout)?;
        let m = self.share_product(z_a, z_b)?;
        self.release(&[
            (PartyId::Alice, meter_a, z_a.value),
            (PartyId::Bob, meter_b, z_b.value),
        ])?;
        Ok((z_a, z_b, m))
    }

    /// Local measurement of `σ_a ⊗ σ_b`: each party measures its system
    /// qubit and the outcomes are multiplied after exchange.
    pub fn local_round(
        &mut self,
        alice_axis: Axis,
        bob_axis: Axis,
    ) -> Result<(Reading, Reading, Sign)> {
        self.begin_round();
        let a = self.measure(PartyId::Alice, 0, alice_axis, Phase::LocalReadout)?;
        let b = self.measure(PartyId::Bob, 1, bob_axis, Phase::LocalReadout)?;
        let m = self.share_product(a, b)?;
        Ok((a, b, m))
    }

    /// Exchange one reading each way, then both parties multiply.
    pub fn share_product(&mut self, a: Reading, b: Reading) -> Result<Sign> {
        let (at_alice, at_bob) = self.exchange(&[a], &[b])?;
        let mut alice_inputs = vec![a];
        alice_inputs.extend(at_alice);
        let mut bob_inputs = at_bob;
        bob_inputs.push(b);
        let ma = self.multiply(PartyId::Alice, &alice_inputs)?;
        let mb = self.multiply(PartyId::Bob, &bob_inputs)?;
        debug_assert_eq!(ma, mb);
        Ok(ma)
    }
}
