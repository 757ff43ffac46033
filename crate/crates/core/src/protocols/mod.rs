//! End-to-end Bell measurement protocols.
//!
//! * [`run_fig1`]: CNOT followed by a Hadamard and two σ_z readouts. Needs a
//!   CNOT across the two laboratories, so it is not LOCC.
//! * [`run_scheme_a`]: nonlocal `S_zz` through one ebit, then local `S_xx`.
//!   Discriminates all four Bell states, destroys the state.
//! * [`run_scheme_b`]: nonlocal `S_zz` and nonlocal `S_xx`, two ebits. A
//!   complete Bell filter: the output is the Bell state that was reported.

pub mod audit;
pub mod locc;

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use audit::{locc_audit, AuditReport, Violation};
pub use locc::{
    trace_from_jsonl, trace_to_jsonl, Actor, ClassicalMessage, Event, Gate, InMemoryChannel,
    LoccEngine, Op, Party, PartyId, Phase, Reading, ResourceLedger, Transport,
};

use crate::bellcore::{bell_state, classify, spin_product, BellLabel, SpinProductId};
use crate::error::{Error, Result};
use crate::measure::{couple_meter, povm_family, MeasurementRecord, Strategy};
use crate::photonic;
use crate::qstate::{Axis, Operator, Sign, StateVector};
use crate::rng::RngStream;
use crate::scalar::Scalar;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    Fig1,
    SchemeA,
    SchemeB,
    Photonic,
}

impl Scheme {
    pub const ALL: [Scheme; 4] = [
        Scheme::Fig1,
        Scheme::SchemeA,
        Scheme::SchemeB,
        Scheme::Photonic,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Scheme::Fig1 => "fig1",
            Scheme::SchemeA => "scheme_a",
            Scheme::SchemeB => "scheme_b",
            Scheme::Photonic => "photonic",
        }
    }

    /// Ebits one run consumes.
    pub fn ebit_cost(self) -> u32 {
        match self {
            Scheme::Fig1 => 0,
            Scheme::SchemeA | Scheme::Photonic => 1,
            Scheme::SchemeB => 2,
        }
    }

    /// Whether a run hands back a post-measurement system state.
    pub fn preserves_state(self) -> bool {
        matches!(self, Scheme::Fig1 | Scheme::SchemeB)
    }

    /// Whether the scheme can be carried out with LOCC plus ebits.
    pub fn is_locc(self) -> bool {
        self != Scheme::Fig1
    }
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Scheme {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        Scheme::ALL
            .into_iter()
            .find(|x| x.name() == s)
            .ok_or_else(|| {
                format!("unknown scheme `{s}` (expected fig1, scheme_a, scheme_b or photonic)")
            })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ProtocolResult<T> {
    pub scheme: Scheme,
    /// `(m, n)`: eigenvalues of `S_zz` and `S_xx`.
    pub outcomes: (Sign, Sign),
    pub label: BellLabel,
    pub post_state: Option<StateVector<T>>,
    pub records: Vec<MeasurementRecord>,
    pub trace: Vec<Event>,
    pub ledger: ResourceLedger,
}

fn zz_id() -> SpinProductId {
    SpinProductId {
        alice: Axis::Z,
        bob: Axis::Z,
    }
}

fn xx_id() -> SpinProductId {
    SpinProductId {
        alice: Axis::X,
        bob: Axis::X,
    }
}

/// Reference circuit: CNOT(A→B), H(A), σ_z on both qubits.
///
/// Readout `|ab⟩` gives `n = a` and `m = b`, i.e. Φ+ → `|++⟩`, Φ− → `|−+⟩`,
/// Ψ+ → `|+−⟩`, Ψ− → `|−−⟩`. The CNOT is recorded as a joint operation.
pub fn run_fig1<T: Scalar>(s: &StateVector<T>, rng: &mut RngStream) -> Result<ProtocolResult<T>> {
    let mut engine = LoccEngine::new(s.clone(), 0, rng.clone())?;
    engine.joint_gate(Gate::Cnot, &[0, 1])?;
    engine.local_gate(PartyId::Alice, Gate::Hadamard, &[0])?;
    let a = engine.measure(PartyId::Alice, 0, Axis::Z, Phase::LocalReadout)?;
    let b = engine.measure(PartyId::Bob, 1, Axis::Z, Phase::LocalReadout)?;
    engine.exchange(&[a], &[b])?;
    let (m, n) = (b.value, a.value);
    let (post, trace, ledger, advanced) = engine.into_parts();
    *rng = advanced;
    Ok(ProtocolResult {
        scheme: Scheme::Fig1,
        outcomes: (m, n),
        label: classify(m, n),
        post_state: Some(post),
        records: Vec::new(),
        trace,
        ledger,
    })
}

pub fn run_scheme_a<T: Scalar>(
    s: &StateVector<T>,
    rng: &mut RngStream,
) -> Result<ProtocolResult<T>> {
    run_scheme_a_with(s, rng, Scheme::SchemeA.ebit_cost())
}

/// Scheme (a) with an explicit ebit grant.
pub fn run_scheme_a_with<T: Scalar>(
    s: &StateVector<T>,
    rng: &mut RngStream,
    ebits_granted: u32,
) -> Result<ProtocolResult<T>> {
    let mut engine = LoccEngine::new(s.clone(), ebits_granted, rng.clone())?;
    let (za, zb, m) = engine.nonlocal_round(Axis::Z, Axis::Z)?;
    let (xa, xb, n) = engine.local_round(Axis::X, Axis::X)?;
    let (_, trace, ledger, advanced) = engine.into_parts();
    *rng = advanced;
    Ok(ProtocolResult {
        scheme: Scheme::SchemeA,
        outcomes: (m, n),
        label: classify(m, n),
        post_state: None,
        records: vec![
            MeasurementRecord::new(zz_id(), Strategy::Nonlocal, za.value, zb.value),
            MeasurementRecord::new(xx_id(), Strategy::Local, xa.value, xb.value),
        ],
        trace,
        ledger,
    })
}

pub fn run_scheme_b<T: Scalar>(
    s: &StateVector<T>,
    rng: &mut RngStream,
) -> Result<ProtocolResult<T>> {
    run_scheme_b_with(s, rng, Scheme::SchemeB.ebit_cost())
}

/// Scheme (b) with an explicit ebit grant.
pub fn run_scheme_b_with<T: Scalar>(
    s: &StateVector<T>,
    rng: &mut RngStream,
    ebits_granted: u32,
) -> Result<ProtocolResult<T>> {
    let mut engine = LoccEngine::new(s.clone(), ebits_granted, rng.clone())?;
    let (za, zb, m) = engine.nonlocal_round(Axis::Z, Axis::Z)?;
    let (xa, xb, n) = engine.nonlocal_round(Axis::X, Axis::X)?;
    let (post, trace, ledger, advanced) = engine.into_parts();
    *rng = advanced;
    Ok(ProtocolResult {
        scheme: Scheme::SchemeB,
        outcomes: (m, n),
        label: classify(m, n),
        post_state: Some(post),
        records: vec![
            MeasurementRecord::new(zz_id(), Strategy::Nonlocal, za.value, zb.value),
            MeasurementRecord::new(xx_id(), Strategy::Nonlocal, xa.value, xb.value),
        ],
        trace,
        ledger,
    })
}

pub fn run_scheme<T: Scalar>(
    scheme: Scheme,
    s: &StateVector<T>,
    rng: &mut RngStream,
) -> Result<ProtocolResult<T>> {
    match scheme {
        Scheme::Fig1 => run_fig1(s, rng),
        Scheme::SchemeA => run_scheme_a(s, rng),
        Scheme::SchemeB => run_scheme_b(s, rng),
        Scheme::Photonic => photonic::run_photonic(s, rng),
    }
}

/// POVM elements `E_label` of a whole scheme, in label order.
///
/// Built from the scheme's own pieces: scheme (a) composes the nonlocal
/// `S_zz` projectors with the local `S_xx` POVM, scheme (b) composes two sets
/// of nonlocal measurement operators, the reference circuit pulls the
/// readout projectors back through its unitary, and the photonic model pulls
/// its detector projectors back through the optical isometry.
pub fn scheme_povms<T: Scalar>(scheme: Scheme) -> [Operator<T>; 4] {
    let zz = spin_product::<T>(Axis::Z, Axis::Z);
    let xx = spin_product::<T>(Axis::X, Axis::X);
    match scheme {
        Scheme::SchemeA => {
            let xx_local = povm_family(Strategy::Local, &xx);
            BellLabel::ALL.map(|label| {
                let (m, n) = label.outcomes();
                let mm = zz.projector(m);
                let e_n = &xx_local
                    .iter()
                    .find(|e| e.outcome == n)
                    .expect("both outcomes")
                    .matrix;
                &(&mm.adjoint() * e_n) * mm
            })
        }
        Scheme::SchemeB => scheme_b_kraus().map(|k| &k.adjoint() * &k),
        Scheme::Fig1 => {
            let u = &Operator::hadamard().kron(&Operator::identity(2)) * &Operator::cnot();
            BellLabel::ALL.map(|label| {
                let (m, n) = label.outcomes();
                let readout = Operator::projector(&StateVector::from_signs(&[n, m]));
                &(&u.adjoint() * &readout) * &u
            })
        }
        Scheme::Photonic => photonic::photonic_povms(),
    }
}

/// Measurement operators `M_mn = M_n(S_xx) M_m(S_zz)` of the Bell filter.
pub fn scheme_b_kraus<T: Scalar>() -> [Operator<T>; 4] {
    let zz = spin_product::<T>(Axis::Z, Axis::Z);
    let xx = spin_product::<T>(Axis::X, Axis::X);
    BellLabel::ALL.map(|label| {
        let (m, n) = label.outcomes();
        xx.projector(n) * zz.projector(m)
    })
}

/// Born-rule label probabilities for one scheme, in label order.
pub fn analytic_distribution<T: Scalar>(s: &StateVector<T>, scheme: Scheme) -> Result<[T; 4]> {
    if s.n_qubits() != 2 {
        return Err(Error::WrongQubitCount {
            expected: 2,
            found: s.n_qubits(),
        });
    }
    let povms = scheme_povms::<T>(scheme);
    let mut out = [T::zero(); 4];
    for (p, e) in out.iter_mut().zip(&povms) {
        *p = s.expectation(e, &[0, 1])?.max(T::zero()).min(T::one());
    }
    Ok(out)
}

/// Label counts over a batch of trials.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Histogram {
    pub counts: [u64; 4],
}

impl Histogram {
    pub fn add(&mut self, label: BellLabel) {
        self.counts[label.index()] += 1;
    }

    pub fn get(&self, label: BellLabel) -> u64 {
        self.counts[label.index()]
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    pub fn frequencies(&self) -> [f64; 4] {
        let t = self.total().max(1) as f64;
        self.counts.map(|c| c as f64 / t)
    }

    fn merge(mut self, other: Histogram) -> Histogram {
        for (a, b) in self.counts.iter_mut().zip(other.counts) {
            *a += b;
        }
        self
    }
}

/// Aggregate of many independent runs of one scheme on one input.
#[derive(Clone, Debug, PartialEq)]
pub struct TrialSummary {
    pub histogram: Histogram,
    /// Smallest and largest ebit consumption seen in a single run.
    pub ebits_min: u32,
    pub ebits_max: u32,
    pub audits_passed: u64,
    /// For the Bell filter: worst fidelity between the output and the
    /// reported Bell state.
    pub min_fidelity: Option<f64>,
    /// Trace of trial 0.
    pub first_trace: Vec<Event>,
}

impl TrialSummary {
    pub fn trials(&self) -> u64 {
        self.histogram.total()
    }
}

struct Partial {
    histogram: Histogram,
    ebits_min: u32,
    ebits_max: u32,
    audits_passed: u64,
    min_fidelity: Option<f64>,
    first: Option<(u64, Vec<Event>)>,
}

impl Partial {
    fn empty() -> Self {
        Self {
            histogram: Histogram::default(),
            ebits_min: u32::MAX,
            ebits_max: 0,
            audits_passed: 0,
            min_fidelity: None,
            first: None,
        }
    }

    fn merge(self, other: Partial) -> Partial {
        let first = match (self.first, other.first) {
            (Some(a), Some(b)) => Some(if a.0 <= b.0 { a } else { b }),
            (a, b) => a.or(b),
        };
        let min_fidelity = match (self.min_fidelity, other.min_fidelity) {
            (Some(a), Some(b)) => Some(a.min(b)),
            (a, b) => a.or(b),
        };
        Partial {
            histogram: self.histogram.merge(other.histogram),
            ebits_min: self.ebits_min.min(other.ebits_min),
            ebits_max: self.ebits_max.max(other.ebits_max),
            audits_passed: self.audits_passed + other.audits_passed,
            min_fidelity,
            first,
        }
    }
}

fn one_trial<T: Scalar>(
    s: &StateVector<T>,
    scheme: Scheme,
    seed: u64,
    trial: u64,
) -> Result<Partial> {
    let mut rng = RngStream::for_trial(seed, trial);
    let r = run_scheme(scheme, s, &mut rng)?;
    let audit = locc_audit(&r.trace)?;
    let mut histogram = Histogram::default();
    histogram.add(r.label);
    let min_fidelity = match (&r.post_state, scheme) {
        (Some(post), Scheme::SchemeB) => Some(
            post.fidelity(&bell_state(r.label))?
                .to_f64()
                .unwrap_or(f64::NAN),
        ),
        _ => None,
    };
    Ok(Partial {
        histogram,
        ebits_min: r.ledger.ebits_consumed,
        ebits_max: r.ledger.ebits_consumed,
        audits_passed: audit.passed as u64,
        min_fidelity,
        first: (trial == 0).then_some((trial, r.trace)),
    })
}

/// Runs `trials` independent trials in parallel. Trial `k` draws from its
/// own stream of `seed`, so the result does not depend on scheduling.
pub fn run_trials<T: Scalar>(
    s: &StateVector<T>,
    scheme: Scheme,
    trials: u64,
    seed: u64,
) -> Result<TrialSummary> {
    if trials == 0 {
        return Err(Error::NoTrials);
    }
    let p = (0..trials)
        .into_par_iter()
        .map(|k| one_trial(s, scheme, seed, k))
        .try_reduce(Partial::empty, |a, b| Ok(a.merge(b)))?;
    Ok(TrialSummary {
        histogram: p.histogram,
        ebits_min: p.ebits_min,
        ebits_max: p.ebits_max,
        audits_passed: p.audits_passed,
        min_fidelity: p.min_fidelity,
        first_trace: p.first.map(|f| f.1).unwrap_or_default(),
    })
}

/// The scheme's circuit with every readout postponed to the end.
///
/// All readouts act on distinct qubits and nothing is conditioned on them
/// before the final classical multiply, so measuring the whole register once
/// at the end has the same joint statistics as the step-by-step protocol.
/// Returns that register and the label assigned to each basis index.
pub fn deferred_register<T: Scalar>(
    scheme: Scheme,
    s: &StateVector<T>,
) -> Result<(StateVector<T>, Vec<BellLabel>)> {
    if s.n_qubits() != 2 {
        return Err(Error::WrongQubitCount {
            expected: 2,
            found: s.n_qubits(),
        });
    }
    let bit = |n: usize, index: usize, q: usize| Sign::from_bit(index >> (n - 1 - q));
    let phi = bell_state::<T>(BellLabel::PhiPlus);
    let h = Operator::<T>::hadamard();
    let (reg, label): (StateVector<T>, Box<dyn Fn(usize) -> BellLabel>) = match scheme {
        Scheme::Fig1 => {
            let reg = s
                .apply_unitary(&Operator::cnot(), &[0, 1])?
                .apply_unitary(&h, &[0])?;
            (reg, Box::new(move |i| classify(bit(2, i, 1), bit(2, i, 0))))
        }
        Scheme::SchemeA => {
            let reg = s.tensor(&phi);
            let reg = couple_meter(&reg, 0, 2, Axis::Z)?;
            let reg = couple_meter(&reg, 1, 3, Axis::Z)?;
            let reg = reg.apply_unitary(&h, &[0])?.apply_unitary(&h, &[1])?;
            (
                reg,
                Box::new(move |i| {
                    classify(bit(4, i, 2) * bit(4, i, 3), bit(4, i, 0) * bit(4, i, 1))
                }),
            )
        }
        Scheme::SchemeB => {
            let reg = s.tensor(&phi).tensor(&phi);
            let reg = couple_meter(&reg, 0, 2, Axis::Z)?;
            let reg = couple_meter(&reg, 1, 3, Axis::Z)?;
            let reg = couple_meter(&reg, 0, 4, Axis::X)?;
            let reg = couple_meter(&reg, 1, 5, Axis::X)?;
            (
                reg,
                Box::new(move |i| {
                    classify(bit(6, i, 2) * bit(6, i, 3), bit(6, i, 4) * bit(6, i, 5))
                }),
            )
        }
        Scheme::Photonic => (
            photonic::build_photonic_run(s)?,
            Box::new(|i| photonic::photonic_label(photonic::ports_of_index(i))),
        ),
    };
    let labels = (0..reg.dim()).map(label).collect();
    Ok((reg, labels))
}

/// Monte Carlo label histogram.
///
/// Samples the deferred-readout register of [`deferred_register`] once per
/// trial, trial `k` drawing from its own stream of `seed`. Much cheaper than
/// [`run_trials`] because no trace or audit is produced.
pub fn outcome_distribution<T: Scalar>(
    s: &StateVector<T>,
    scheme: Scheme,
    trials: u64,
    seed: u64,
) -> Result<Histogram> {
    if trials == 0 {
        return Err(Error::NoTrials);
    }
    let (reg, labels) = deferred_register(scheme, s)?;
    let floor = T::TOLERANCE.to_f64().unwrap_or(0.0);
    let weights: Vec<f64> = reg
        .probabilities()
        .into_iter()
        .map(|p| p.to_f64().unwrap_or(0.0))
        .collect();
    let live: Vec<usize> = (0..weights.len()).filter(|&i| weights[i] > floor).collect();
    let live_weights: Vec<f64> = live.iter().map(|&i| weights[i]).collect();
    Ok((0..trials)
        .into_par_iter()
        .fold(Histogram::default, |mut h, k| {
            let mut rng = RngStream::for_trial(seed, k);
            h.add(labels[live[rng.sample_index(&live_weights, 0.0)]]);
            h
        })
        .reduce(Histogram::default, Histogram::merge))
}
