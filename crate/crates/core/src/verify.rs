//! Self-checks of the algebraic and protocol invariants, grouped so that a
//! failure reports the first counterexample found.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::bellcore::{
    bell_state, classify, commutator, from_bell, spin_product, to_bell, BellLabel,
};
use crate::measure::{kraus_family, meter_kraus, povm_family, Strategy};
use crate::photonic::label_distribution;
use crate::protocols::{analytic_distribution, locc_audit, run_scheme, scheme_povms, Scheme};
use crate::qstate::{Axis, Operator, Sign, StateVector};
use crate::rng::RngStream;

const TOL: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GroupResult {
    pub name: &'static str,
    pub passed: bool,
    pub checks: u64,
    pub detail: String,
    pub counterexample: Option<String>,
}

type Outcome = Result<(u64, String), String>;

macro_rules! ensure {
    ($cond:expr, $($fmt:tt)+) => {{
        let holds: bool = $cond;
        if !holds {
            return Err(format!($($fmt)+));
        }
    }};
}

fn lib<T>(r: crate::Result<T>) -> Result<T, String> {
    r.map_err(|e| format!("library error: {e}"))
}

fn group(name: &'static str, f: impl FnOnce() -> Outcome) -> GroupResult {
    match f() {
        Ok((checks, detail)) => GroupResult {
            name,
            passed: true,
            checks,
            detail,
            counterexample: None,
        },
        Err(ce) => GroupResult {
            name,
            passed: false,
            checks: 0,
            detail: "failed".into(),
            counterexample: Some(ce),
        },
    }
}

type Op = Operator<f64>;

fn i_unit() -> num_complex::Complex64 {
    num_complex::Complex64::new(0.0, 1.0)
}

fn pairs() -> impl Iterator<Item = (Axis, Axis)> {
    Axis::ALL
        .into_iter()
        .flat_map(|a| Axis::ALL.into_iter().map(move |b| (a, b)))
}

fn pauli_algebra() -> Outcome {
    let id = Op::identity(2);
    let mut n = 0;
    for a in Axis::ALL {
        let p = Op::pauli(a);
        ensure!((&p * &p).approx_eq(&id, TOL), "sigma_{a}^2 != I");
        ensure!(
            p.is_hermitian(TOL) && p.is_unitary(TOL),
            "sigma_{a} not Hermitian unitary"
        );
        n += 2;
    }
    for (a, b, c) in [
        (Axis::X, Axis::Y, Axis::Z),
        (Axis::Y, Axis::Z, Axis::X),
        (Axis::Z, Axis::X, Axis::Y),
    ] {
        let (pa, pb, pc) = (Op::pauli(a), Op::pauli(b), Op::pauli(c));
        ensure!(
            (&pa * &pb).approx_eq(&pc.scale(i_unit()), TOL),
            "sigma_{a} sigma_{b} != i sigma_{c}"
        );
        ensure!(
            (&(&pa * &pb) + &(&pb * &pa)).max_abs() < TOL,
            "sigma_{a}, sigma_{b} do not anticommute"
        );
        n += 2;
    }
    Ok((n, "squares, products and anticommutators".into()))
}

/// `[S_ij, S_kl] = 0` exactly when both sites agree or both disagree.
fn commutators() -> Outcome {
    let mut n = 0;
    for (i, j) in pairs() {
        for (k, l) in pairs() {
            let a = spin_product::<f64>(i, j);
            let b = spin_product::<f64>(k, l);
            let c = lib(commutator(a.matrix(), b.matrix()))?;
            let brute = &(a.matrix() * b.matrix()) - &(b.matrix() * a.matrix());
            ensure!(
                c.approx_eq(&brute, TOL),
                "commutator({}, {}) disagrees with AB - BA",
                a.id(),
                b.id()
            );
            let expect_zero = (i == k) == (j == l);
            let size = c.max_abs();
            if expect_zero {
                ensure!(
                    size < 1e-15,
                    "[{}, {}] = {size:e}, expected 0",
                    a.id(),
                    b.id()
                );
            } else {
                ensure!(
                    size > 1.0,
                    "[{}, {}] vanishes, expected 2 {} {}",
                    a.id(),
                    b.id(),
                    a.id(),
                    b.id()
                );
            }
            n += 1;
        }
    }
    Ok((n, "all 81 ordered pairs of the 9 spin products".into()))
}

fn spectral() -> Outcome {
    let id = Op::identity(4);
    let mut n = 0;
    for (i, j) in pairs() {
        let sp = spin_product::<f64>(i, j);
        let (pp, pm) = (sp.projector(Sign::Plus), sp.projector(Sign::Minus));
        ensure!((pp + pm).approx_eq(&id, TOL), "{}: P+ + P- != I", sp.id());
        ensure!(
            (pp - pm).approx_eq(sp.matrix(), TOL),
            "{}: P+ - P- != S",
            sp.id()
        );
        ensure!(
            (pp * pp).approx_eq(pp, TOL),
            "{}: P+ not idempotent",
            sp.id()
        );
        ensure!((pp * pm).max_abs() < TOL, "{}: P+ P- != 0", sp.id());
        for sign in Sign::BOTH {
            for v in sp.eigenbasis(sign) {
                let sv = lib(v.apply_operator(sp.matrix(), &[0, 1]))?;
                let lam = sign.value() as f64;
                let err = sv
                    .iter()
                    .zip(v.amplitudes())
                    .map(|(x, y)| (x - y * lam).norm())
                    .fold(0.0, f64::max);
                ensure!(
                    err < TOL,
                    "{}: eigenvector residual {err:e} for {sign}",
                    sp.id()
                );
            }
        }
        n += 1;
    }
    Ok((n, "projector resolution and eigenbases".into()))
}

fn bell_basis(rng: &mut ChaCha8Rng) -> Outcome {
    let zz = spin_product::<f64>(Axis::Z, Axis::Z);
    let xx = spin_product::<f64>(Axis::X, Axis::X);
    for label in BellLabel::ALL {
        let b = bell_state::<f64>(label);
        let (m, n) = label.outcomes();
        ensure!(
            classify(m, n) == label,
            "classify/outcomes mismatch for {label}"
        );
        let em = lib(b.expectation(zz.matrix(), &[0, 1]))?;
        let en = lib(b.expectation(xx.matrix(), &[0, 1]))?;
        ensure!(
            (em - m.value() as f64).abs() < TOL && (en - n.value() as f64).abs() < TOL,
            "{label}: <S_zz>={em}, <S_xx>={en}"
        );
    }
    let rounds = 200;
    for k in 0..rounds {
        let s = StateVector::<f64>::random(2, rng);
        let back = from_bell(&lib(to_bell(&s))?);
        let d = lib(back.distance_up_to_phase(&s))?;
        let exact = s
            .amplitudes()
            .iter()
            .zip(back.amplitudes())
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max);
        ensure!(
            exact < TOL,
            "round trip #{k} off by {exact:e} (up to phase {d:e}): {s}"
        );
    }
    Ok((
        4 + rounds,
        "Bell eigenvalues and coefficient round trip".into(),
    ))
}

fn measurement_completeness() -> Outcome {
    let id = Op::identity(4);
    let mut n = 0;
    for (i, j) in pairs() {
        let sp = spin_product::<f64>(i, j);
        for strategy in [Strategy::Local, Strategy::Nonlocal] {
            let sum = kraus_family(strategy, &sp)
                .iter()
                .fold(Op::zeros(4), |acc, k| {
                    &acc + &(&k.matrix.adjoint() * &k.matrix)
                });
            ensure!(
                sum.approx_eq(&id, TOL),
                "{} {strategy:?}: sum of K^dag K != I",
                sp.id()
            );
            let povm = povm_family(strategy, &sp);
            let total = povm.iter().fold(Op::zeros(4), |acc, e| &acc + &e.matrix);
            ensure!(
                total.approx_eq(&id, TOL),
                "{} {strategy:?}: POVM does not sum to I",
                sp.id()
            );
            n += 2;
        }
        let meter = meter_kraus(&sp)
            .iter()
            .fold(Op::zeros(4), |acc, (_, k)| &acc + &(&k.adjoint() * k));
        ensure!(
            meter.approx_eq(&id, TOL),
            "{}: meter Kraus operators incomplete",
            sp.id()
        );
        let local = povm_family(Strategy::Local, &sp);
        let nonlocal = povm_family(Strategy::Nonlocal, &sp);
        for sign in Sign::BOTH {
            let a = local.iter().find(|e| e.outcome == sign).map(|e| &e.matrix);
            let b = nonlocal
                .iter()
                .find(|e| e.outcome == sign)
                .map(|e| &e.matrix);
            match (a, b) {
                (Some(a), Some(b)) => ensure!(
                    a.approx_eq(b, TOL),
                    "{}: local and nonlocal POVMs differ at {sign}",
                    sp.id()
                ),
                _ => return Err(format!("{}: missing POVM element for {sign}", sp.id())),
            }
        }
        n += 2;
    }
    Ok((
        n,
        "Kraus and POVM completeness, local vs nonlocal POVM".into(),
    ))
}

fn scheme_measurements() -> Outcome {
    let mut n = 0;
    for scheme in Scheme::ALL {
        let povms = scheme_povms::<f64>(scheme);
        for label in BellLabel::ALL {
            let bell = Op::projector(&bell_state(label));
            ensure!(
                povms[label.index()].approx_eq(&bell, TOL),
                "{scheme}: POVM for {label} is not the Bell projector"
            );
            n += 1;
        }
    }
    Ok((n, "every scheme resolves the Bell projectors".into()))
}

fn norm_preservation(rng: &mut ChaCha8Rng) -> Outcome {
    let rounds = 1000;
    for k in 0..rounds {
        let nq = rng.random_range(1..=4usize);
        let s = StateVector::<f64>::random(nq, rng);
        let width = rng.random_range(1..=nq.min(2));
        let mut targets: Vec<usize> = (0..nq).collect();
        for t in 0..width {
            let swap = rng.random_range(t..nq);
            targets.swap(t, swap);
        }
        targets.truncate(width);
        let u = Op::random_unitary(1 << width, rng);
        let out = lib(s.apply_unitary(&u, &targets))?;
        let err = (out.norm_sqr() - 1.0).abs();
        ensure!(
            err < TOL,
            "case #{k}: norm drift {err:e} on {nq} qubits, targets {targets:?}"
        );
    }
    Ok((rounds, "random unitaries on random targets".into()))
}

fn distributions(rng: &mut ChaCha8Rng) -> Outcome {
    let rounds = 200;
    for k in 0..rounds {
        let s = StateVector::<f64>::random(2, rng);
        let c = lib(to_bell(&s))?.probabilities();
        for scheme in Scheme::ALL {
            let p = lib(analytic_distribution(&s, scheme))?;
            let err = p
                .iter()
                .zip(&c)
                .map(|(a, b)| (a - b).abs())
                .fold(0.0, f64::max);
            ensure!(
                err < TOL,
                "{scheme} #{k}: analytic distribution off by {err:e} for {s}"
            );
        }
        let photonic = lib(label_distribution(&s))?;
        let a = lib(analytic_distribution(&s, Scheme::SchemeA))?;
        let err = photonic
            .iter()
            .zip(&a)
            .map(|(x, y)| (x - y).abs())
            .fold(0.0, f64::max);
        ensure!(
            err < TOL,
            "photonic #{k}: optical model differs from scheme_a by {err:e}"
        );
    }
    Ok((
        rounds * 5,
        "analytic label probabilities equal |c_i|^2".into(),
    ))
}

fn filter(rng: &mut ChaCha8Rng, seed: u64) -> Outcome {
    let rounds = 100;
    for k in 0..rounds {
        let s = StateVector::<f64>::random(2, rng);
        let mut stream = RngStream::for_trial(seed, k);
        let first = lib(run_scheme(Scheme::SchemeB, &s, &mut stream))?;
        let post = first
            .post_state
            .as_ref()
            .ok_or("filter returned no state")?;
        let f = lib(post.fidelity(&bell_state(first.label)))?;
        ensure!(
            f >= 1.0 - TOL,
            "input #{k}: fidelity {f} with {}",
            first.label
        );
        let second = lib(run_scheme(Scheme::SchemeB, post, &mut stream))?;
        let again = second
            .post_state
            .as_ref()
            .ok_or("filter returned no state")?;
        ensure!(
            second.label == first.label,
            "input #{k}: repeat gave {} after {}",
            second.label,
            first.label
        );
        ensure!(
            again.approx_eq_up_to_phase(post, TOL),
            "input #{k}: repeat changed the state"
        );
    }
    Ok((
        rounds,
        "filter output is the reported Bell state and is stable".into(),
    ))
}

fn audit_and_ledger(rng: &mut ChaCha8Rng, seed: u64) -> Outcome {
    let rounds = 25;
    let mut n = 0;
    let mut verdicts = Vec::new();
    for k in 0..rounds {
        let s = StateVector::<f64>::random(2, rng);
        for scheme in Scheme::ALL {
            let mut stream = RngStream::for_trial(seed, k);
            let r = lib(run_scheme(scheme, &s, &mut stream))?;
            let report = lib(locc_audit(&r.trace))?;
            ensure!(
                report.passed == scheme.is_locc(),
                "{scheme} #{k}: audit {} (expected {})",
                if report.passed { "passed" } else { "failed" },
                if scheme.is_locc() { "pass" } else { "fail" }
            );
            ensure!(
                r.ledger.ebits_consumed == scheme.ebit_cost(),
                "{scheme} #{k}: consumed {} ebits, expected {}",
                r.ledger.ebits_consumed,
                scheme.ebit_cost()
            );
            if k == 0 {
                verdicts.push(format!(
                    "{scheme} {}",
                    if report.passed { "PASS" } else { "FAIL" }
                ));
            }
            n += 1;
        }
    }
    Ok((
        n,
        format!(
            "audit verdicts: {}; ebit budgets respected",
            verdicts.join(", ")
        ),
    ))
}

/// Runs every group with randomized inputs drawn from `seed`.
pub fn run_all(seed: u64) -> Vec<GroupResult> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    vec![
        group("pauli_algebra", pauli_algebra),
        group("commutators", commutators),
        group("spectral", spectral),
        group("bell_basis", || bell_basis(&mut rng)),
        group("measurement_completeness", measurement_completeness),
        group("scheme_povms", scheme_measurements),
        group("norm_preservation", || norm_preservation(&mut rng)),
        group("distributions", || distributions(&mut rng)),
        group("bell_filter", || filter(&mut rng, seed)),
        group("audit_and_ledger", || audit_and_ledger(&mut rng, seed)),
    ]
}
