//! Replays a trace and checks that it only uses local operations and
//! classical communication.
//!
//! Ownership is rebuilt from the trace itself: `own` and `ebit` events append
//! register positions, `release` removes them. A trace passes when every
//! gate, measurement and release touches only the acting party's qubits, the
//! ebit source only hands out fresh pairs, and every outcome a party
//! multiplies was either measured by it or received in a message.

use std::collections::{BTreeSet, HashMap};

use serde::Serialize;

use super::locc::{Actor, Event, Op, PartyId};
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Violation {
    pub step: usize,
    pub reason: String,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct AuditReport {
    pub passed: bool,
    pub events_checked: usize,
    pub violations: Vec<Violation>,
}

fn malformed(step: usize, why: impl Into<String>) -> Error {
    Error::MalformedTrace(format!("step {step}: {}", why.into()))
}

pub fn locc_audit(trace: &[Event]) -> Result<AuditReport> {
    let mut owners: Vec<PartyId> = Vec::new();
    let mut knows: HashMap<PartyId, BTreeSet<usize>> = HashMap::new();
    let mut in_flight: Vec<(usize, PartyId, Vec<usize>)> = Vec::new();
    let mut measured: BTreeSet<usize> = BTreeSet::new();
    let mut violations = Vec::new();
    let mut last_step: Option<usize> = None;

    for e in trace {
        if last_step.is_some_and(|s| e.step <= s) {
            return Err(malformed(e.step, "steps not strictly increasing"));
        }
        last_step = Some(e.step);
        let mut violate = |reason: String| {
            violations.push(Violation {
                step: e.step,
                reason,
            })
        };

        match e.op {
            Op::Own => {
                let party = e
                    .party
                    .party()
                    .ok_or_else(|| malformed(e.step, "own by a non-party"))?;
                if e.qubits != [owners.len()] {
                    return Err(malformed(e.step, "own must add the next register position"));
                }
                owners.push(party);
            }
            Op::Ebit => {
                if e.qubits != [owners.len(), owners.len() + 1] {
                    return Err(malformed(
                        e.step,
                        "ebit must add the next two register positions",
                    ));
                }
                if e.party != Actor::Source {
                    violate(format!(
                        "entanglement created by {:?} instead of the ebit source",
                        e.party
                    ));
                }
                owners.extend([PartyId::Alice, PartyId::Bob]);
            }
            op if op.is_gate() || op == Op::Measure || op == Op::Release => {
                if e.qubits.is_empty() {
                    return Err(malformed(e.step, "operation without qubits"));
                }
                if let Some(&q) = e.qubits.iter().find(|&&q| q >= owners.len()) {
                    return Err(malformed(e.step, format!("qubit {q} does not exist")));
                }
                match e.party.party() {
                    None => violate(format!(
                        "{op:?} on {:?} performed jointly across parties",
                        e.qubits
                    )),
                    Some(p) => {
                        let foreign: Vec<usize> = e
                            .qubits
                            .iter()
                            .copied()
                            .filter(|&q| owners[q] != p)
                            .collect();
                        if !foreign.is_empty() {
                            violate(format!("{p} acts on qubits {foreign:?} it does not own"));
                        }
                    }
                }
                match op {
                    Op::Measure => {
                        if e.outcome.is_none() {
                            return Err(malformed(e.step, "measurement without outcome"));
                        }
                        measured.insert(e.step);
                        if let Some(p) = e.party.party() {
                            knows.entry(p).or_default().insert(e.step);
                        }
                    }
                    Op::Release => {
                        if e.qubits.len() != 1 {
                            return Err(malformed(e.step, "release takes one qubit"));
                        }
                        owners.remove(e.qubits[0]);
                    }
                    _ => {}
                }
            }
            Op::Send => {
                let msg = e
                    .message
                    .as_ref()
                    .ok_or_else(|| malformed(e.step, "send without message"))?;
                if msg.from == msg.to {
                    return Err(malformed(e.step, "message addressed to its sender"));
                }
                if msg.payload.len() != msg.refs.len() {
                    return Err(malformed(e.step, "payload and refs differ in length"));
                }
                if e.party != Actor::from(msg.from) {
                    violate(format!(
                        "{:?} sends a message signed by {}",
                        e.party, msg.from
                    ));
                }
                let known = knows.get(&msg.from).cloned().unwrap_or_default();
                for r in &msg.refs {
                    if !measured.contains(r) {
                        return Err(malformed(
                            e.step,
                            format!("message refers to unknown outcome {r}"),
                        ));
                    }
                    if !known.contains(r) {
                        violate(format!(
                            "{} forwards outcome {r} it never learned",
                            msg.from
                        ));
                    }
                }
                in_flight.push((e.step, msg.to, msg.refs.clone()));
            }
            Op::Receive => {
                let msg = e
                    .message
                    .as_ref()
                    .ok_or_else(|| malformed(e.step, "receive without message"))?;
                if e.party != Actor::from(msg.to) {
                    violate(format!(
                        "{:?} reads a message addressed to {}",
                        e.party, msg.to
                    ));
                }
                let pos = in_flight
                    .iter()
                    .position(|(_, to, refs)| *to == msg.to && *refs == msg.refs)
                    .ok_or_else(|| malformed(e.step, "receive without matching send"))?;
                let (_, to, refs) = in_flight.remove(pos);
                knows.entry(to).or_default().extend(refs);
            }
            Op::Product => {
                if e.outcome.is_none() {
                    return Err(malformed(e.step, "product without outcome"));
                }
                let Some(p) = e.party.party() else {
                    violate("product computed outside a party".to_string());
                    continue;
                };
                let known = knows.get(&p).cloned().unwrap_or_default();
                for r in &e.inputs {
                    if !measured.contains(r) {
                        return Err(malformed(
                            e.step,
                            format!("product uses unknown outcome {r}"),
                        ));
                    }
                    if !known.contains(r) {
                        violate(format!(
                            "{p} multiplies outcome {r} without having received it"
                        ));
                    }
                }
            }
            _ => unreachable!("all ops handled"),
        }
    }

    Ok(AuditReport {
        passed: violations.is_empty(),
        events_checked: trace.len(),
        violations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bellcore::{bell_state, BellLabel};
    use crate::protocols::locc::{Gate, LoccEngine, Phase};
    use crate::qstate::Axis;
    use crate::rng::RngStream;

    fn engine() -> LoccEngine<f64> {
        LoccEngine::new(bell_state(BellLabel::PhiPlus), 2, RngStream::new(0)).unwrap()
    }

    #[test]
    fn empty_trace_passes() {
        let r = locc_audit(&[]).unwrap();
        assert!(r.passed);
        assert_eq!(r.events_checked, 0);
    }

    #[test]
    fn nonlocal_rounds_pass() {
        let mut e = engine();
        e.nonlocal_round(Axis::Z, Axis::Z).unwrap();
        e.nonlocal_round(Axis::X, Axis::Y).unwrap();
        let r = locc_audit(e.events()).unwrap();
        assert!(r.passed, "{:?}", r.violations);
    }

    #[test]
    fn joint_gate_fails() {
        let mut e = engine();
        e.joint_gate(Gate::Cnot, &[0, 1]).unwrap();
        let r = locc_audit(e.events()).unwrap();
        assert!(!r.passed);
        assert_eq!(r.violations.len(), 1);
        assert_eq!(r.violations[0].step, 2);
    }

    #[test]
    fn forged_gate_owner_fails() {
        let mut e = engine();
        e.local_gate(crate::protocols::PartyId::Alice, Gate::Hadamard, &[0])
            .unwrap();
        let mut events = e.events().to_vec();
        events[2].qubits = vec![1];
        let r = locc_audit(&events).unwrap();
        assert!(!r.passed);
    }

    #[test]
    fn product_without_message_fails() {
        let mut e = engine();
        e.local_round(Axis::Z, Axis::Z).unwrap();
        // drop every send/receive so Alice multiplies Bob's outcome unseen
        let events: Vec<Event> = e
            .events()
            .iter()
            .filter(|ev| !matches!(ev.op, Op::Send | Op::Receive))
            .cloned()
            .collect();
        let r = locc_audit(&events).unwrap();
        assert!(!r.passed);
        assert!(r
            .violations
            .iter()
            .all(|v| v.reason.contains("without having received")));
    }

    #[test]
    fn malformed_traces() {
        let mut e = engine();
        e.measure(
            crate::protocols::PartyId::Alice,
            0,
            Axis::Z,
            Phase::LocalReadout,
        )
        .unwrap();
        let good = e.events().to_vec();

        let mut bad = good.clone();
        bad[2].qubits = vec![7];
        assert!(matches!(locc_audit(&bad), Err(Error::MalformedTrace(_))));

        let mut bad = good.clone();
        bad[2].step = 0;
        assert!(matches!(locc_audit(&bad), Err(Error::MalformedTrace(_))));

        let mut bad = good.clone();
        bad[2].outcome = None;
        assert!(matches!(locc_audit(&bad), Err(Error::MalformedTrace(_))));

        let bad = good[1..].to_vec();
        assert!(matches!(locc_audit(&bad), Err(Error::MalformedTrace(_))));
    }
}
