//! End-to-end acceptance checks. Each criterion prints one PASS/FAIL line;
//! the test fails if any criterion does.
//!
//! Run with `cargo test -p bellsim --test acceptance -- --nocapture`.

use std::time::{Duration, Instant};

use bellsim::bellcore::{
    bell_state, commutator, from_bell, spin_product, to_bell, BellCoefficients, BellLabel,
};
use bellsim::measure::{
    kraus_family, local_product_measurement, meter_kraus, nonlocal_product_measurement,
    povm_family, Strategy,
};
use bellsim::photonic::{label_distribution, photonic_povms};
use bellsim::protocols::{
    analytic_distribution, locc_audit, outcome_distribution, run_fig1, run_scheme, run_trials,
    scheme_b_kraus, scheme_povms, Scheme,
};
use bellsim::qstate::{Axis, Operator, Sign, StateVector};
use bellsim::stats::{chi_square, within_binomial_sigma};
use bellsim::RngStream;
use num_complex::Complex64;

type S = StateVector<f64>;
type Op = Operator<f64>;
type Verdict = Result<String, String>;
type Criterion = (&'static str, fn() -> Verdict);

macro_rules! check {
    ($cond:expr, $($fmt:tt)+) => {{
        let holds: bool = $cond;
        if !holds {
            return Err(format!($($fmt)+));
        }
    }};
}

fn random_states(seed: u64, n: usize) -> Vec<S> {
    let mut rng = RngStream::new(seed);
    (0..n).map(|_| S::random(2, &mut rng)).collect()
}

fn max_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}

fn within_time(elapsed: Duration, limit: Duration, detail: String) -> Verdict {
    check!(
        elapsed < limit,
        "{detail}, but took {elapsed:?} (limit {limit:?})"
    );
    Ok(detail)
}

fn bell_discrimination() -> Verdict {
    let trials = 10_000u64;
    let start = Instant::now();
    for scheme in [Scheme::SchemeA, Scheme::SchemeB] {
        for label in BellLabel::ALL {
            let input = bell_state::<f64>(label);
            for k in 0..trials {
                let mut rng = RngStream::for_trial(1, k);
                let r = run_scheme(scheme, &input, &mut rng).map_err(|e| e.to_string())?;
                check!(
                    r.label == label,
                    "{scheme} labelled {label} as {} on trial {k}",
                    r.label
                );
            }
        }
    }
    within_time(
        start.elapsed(),
        Duration::from_secs(1),
        format!("scheme_a and scheme_b: 0 mislabels in {trials} runs per Bell input"),
    )
}

fn born_rule() -> Verdict {
    let trials = 100_000u64;
    let start = Instant::now();
    let states = random_states(2, 100);
    let mut worst_analytic = 0.0f64;
    let mut worst_sigma = 0.0f64;
    for (i, s) in states.iter().enumerate() {
        let c2 = to_bell(s).map_err(|e| e.to_string())?.probabilities();
        for scheme in Scheme::ALL {
            let p: [f64; 4] = analytic_distribution(s, scheme).map_err(|e| e.to_string())?;
            worst_analytic = worst_analytic.max(max_diff(&p, &c2));
        }
        check!(
            worst_analytic <= 1e-12,
            "state {i}: analytic probabilities off by {worst_analytic:e}"
        );
        let h = outcome_distribution(s, Scheme::SchemeA, trials, 1000 + i as u64)
            .map_err(|e| e.to_string())?;
        for l in BellLabel::ALL {
            let (count, p) = (h.get(l), c2[l.index()]);
            check!(
                within_binomial_sigma(count, trials, p, 4.0),
                "state {i}: {l} seen {count} times, expected {:.1}",
                p * trials as f64
            );
            let sigma = (trials as f64 * p * (1.0 - p)).sqrt();
            if sigma > 0.0 {
                worst_sigma = worst_sigma.max((count as f64 - p * trials as f64).abs() / sigma);
            }
        }
    }
    within_time(
        start.elapsed(),
        Duration::from_secs(10),
        format!(
            "100 states: analytic max error {worst_analytic:.1e}, {trials}-trial frequencies within {worst_sigma:.2} sigma"
        ),
    )
}

fn bell_filter() -> Verdict {
    let states = random_states(3, 100);
    let per_input = 100u64;
    let mut worst = 1.0f64;
    for (i, s) in states.iter().enumerate() {
        let summary =
            run_trials(s, Scheme::SchemeB, per_input, 300 + i as u64).map_err(|e| e.to_string())?;
        let f = summary.min_fidelity.ok_or("filter reported no fidelity")?;
        worst = worst.min(f);
        check!(f >= 1.0 - 1e-12, "input {i}: fidelity {f}");

        let mut rng = RngStream::for_trial(30, i as u64);
        let first = run_scheme(Scheme::SchemeB, s, &mut rng).map_err(|e| e.to_string())?;
        let post = first.post_state.clone().ok_or("no post state")?;
        let mut state = post.clone();
        for round in 0..3 {
            let again = run_scheme(Scheme::SchemeB, &state, &mut rng).map_err(|e| e.to_string())?;
            check!(
                again.label == first.label,
                "input {i}: repeat {round} gave {} after {}",
                again.label,
                first.label
            );
            state = again.post_state.ok_or("no post state")?;
            check!(
                state.approx_eq_up_to_phase(&post, 1e-12),
                "input {i}: repeat {round} moved the state"
            );
        }
    }
    Ok(format!(
        "100 inputs x {per_input} runs: min fidelity 1 - {:.1e}; 3 repeats keep label and state",
        1.0 - worst
    ))
}

fn superposition_preservation() -> Verdict {
    let zz = spin_product::<f64>(Axis::Z, Axis::Z);
    let xx = spin_product::<f64>(Axis::X, Axis::X);
    let meter = bell_state::<f64>(BellLabel::PhiPlus);
    let mut worst = 0.0f64;
    for (i, s) in random_states(4, 100).iter().enumerate() {
        let c = *to_bell(s).map_err(|e| e.to_string())?.coeffs();
        let mut k = 0;
        let post = loop {
            let mut rng = RngStream::for_trial(40 + i as u64, k);
            let (rec, post) = nonlocal_product_measurement(s, &zz, &meter, &mut rng)
                .map_err(|e| e.to_string())?;
            if rec.product_outcome == Sign::Plus {
                break post;
            }
            k += 1;
            check!(k < 200, "state {i}: never observed S_zz = +1");
        };
        let norm = (c[0].norm_sqr() + c[1].norm_sqr()).sqrt();
        let zero = Complex64::new(0.0, 0.0);
        let expected = from_bell(
            &BellCoefficients::new([c[0] / norm, c[1] / norm, zero, zero])
                .map_err(|e| e.to_string())?,
        );
        let d = post
            .distance_up_to_phase(&expected)
            .map_err(|e| e.to_string())?;
        worst = worst.max(d);
        check!(
            d <= 1e-12,
            "state {i}: post-state differs from c1 Phi+ + c2 Phi- by {d:e}"
        );
    }

    let trials = 10_000u64;
    let phi = bell_state::<f64>(BellLabel::PhiPlus);
    let (mut local_plus, mut nonlocal_plus) = (0u64, 0u64);
    for k in 0..trials {
        let mut rng = RngStream::for_trial(41, k);
        let (_, after) =
            local_product_measurement(&phi, &zz, &mut rng).map_err(|e| e.to_string())?;
        let (rec, _) =
            local_product_measurement(&after, &xx, &mut rng).map_err(|e| e.to_string())?;
        local_plus += (rec.product_outcome == Sign::Plus) as u64;

        let (_, after) =
            nonlocal_product_measurement(&phi, &zz, &meter, &mut rng).map_err(|e| e.to_string())?;
        let (rec, _) = nonlocal_product_measurement(&after, &xx, &meter, &mut rng)
            .map_err(|e| e.to_string())?;
        nonlocal_plus += (rec.product_outcome == Sign::Plus) as u64;
    }
    let local = local_plus as f64 / trials as f64;
    let nonlocal = nonlocal_plus as f64 / trials as f64;
    check!(
        (local - 0.5).abs() <= 0.02,
        "local strategy gave n=+1 with frequency {local}"
    );
    check!(
        nonlocal == 1.0,
        "nonlocal strategy gave n=+1 with frequency {nonlocal}"
    );
    Ok(format!(
        "post-state error {worst:.1e}; P(n=+1) on Phi+ after S_zz: local {local:.4}, nonlocal {nonlocal:.4}"
    ))
}

fn operator_algebra() -> Verdict {
    let mut worst_comm = 0.0f64;
    for i in Axis::ALL {
        for j in Axis::ALL {
            let a = spin_product::<f64>(i, i);
            let b = spin_product::<f64>(j, j);
            let c = commutator(a.matrix(), b.matrix()).map_err(|e| e.to_string())?;
            worst_comm = worst_comm.max(c.max_abs());
            check!(
                c.max_abs() <= 1e-15,
                "[{}, {}] has entry {:e}",
                a.id(),
                b.id(),
                c.max_abs()
            );
        }
    }

    let id = Op::identity(4);
    let mut worst = 0.0f64;
    let mut families = 0;
    let mut close = |name: String, sum: Op| -> Result<(), String> {
        let d = sum.max_abs_diff(&id).map_err(|e| e.to_string())?;
        worst = worst.max(d);
        families += 1;
        check!(d <= 1e-12, "{name}: completeness sum off identity by {d:e}");
        Ok(())
    };
    for i in Axis::ALL {
        for j in Axis::ALL {
            let sp = spin_product::<f64>(i, j);
            for strategy in [Strategy::Local, Strategy::Nonlocal] {
                let kraus = kraus_family(strategy, &sp)
                    .iter()
                    .fold(Op::zeros(4), |acc, k| {
                        &acc + &(&k.matrix.adjoint() * &k.matrix)
                    });
                close(format!("{} {strategy:?} Kraus", sp.id()), kraus)?;
                let povm = povm_family(strategy, &sp)
                    .iter()
                    .fold(Op::zeros(4), |acc, e| &acc + &e.matrix);
                close(format!("{} {strategy:?} POVM", sp.id()), povm)?;
            }
            let meter = meter_kraus(&sp)
                .iter()
                .fold(Op::zeros(4), |acc, (_, k)| &acc + &(&k.adjoint() * k));
            close(format!("{} meter circuit", sp.id()), meter)?;
        }
    }
    for scheme in Scheme::ALL {
        let sum = scheme_povms::<f64>(scheme)
            .iter()
            .fold(Op::zeros(4), |acc, e| &acc + e);
        close(format!("{scheme} POVM"), sum)?;
    }
    let filter = scheme_b_kraus::<f64>()
        .iter()
        .fold(Op::zeros(4), |acc, k| &acc + &(&k.adjoint() * k));
    close("filter Kraus".into(), filter)?;
    let optical = photonic_povms::<f64>()
        .iter()
        .fold(Op::zeros(4), |acc, e| &acc + e);
    close("photonic POVM".into(), optical)?;
    Ok(format!(
        "max |[S_ii, S_jj]| = {worst_comm:.1e}; {families} completeness sums within {worst:.1e} of I"
    ))
}

fn resource_ledger() -> Verdict {
    let trials = 500u64;
    let mut runs = 0u64;
    for (i, s) in random_states(6, 10).iter().enumerate() {
        for (scheme, ebits, locc) in [
            (Scheme::SchemeA, 1, true),
            (Scheme::SchemeB, 2, true),
            (Scheme::Fig1, 0, false),
        ] {
            let sum = run_trials(s, scheme, trials, 600 + i as u64).map_err(|e| e.to_string())?;
            check!(
                sum.ebits_min == ebits && sum.ebits_max == ebits,
                "{scheme}: ebits per run ranged {}..{}, expected {ebits}",
                sum.ebits_min,
                sum.ebits_max
            );
            let want = if locc { trials } else { 0 };
            check!(
                sum.audits_passed == want,
                "{scheme}: {} of {trials} runs passed the audit",
                sum.audits_passed
            );
            runs += trials;
        }
        let mut rng = RngStream::for_trial(60, i as u64);
        let fig1 = run_fig1(s, &mut rng).map_err(|e| e.to_string())?;
        let report = locc_audit(&fig1.trace).map_err(|e| e.to_string())?;
        check!(
            report
                .violations
                .iter()
                .any(|v| v.reason.contains("jointly")),
            "fig1 audit did not flag the joint CNOT"
        );
    }
    Ok(format!(
        "{runs} runs: scheme_a 1 ebit, scheme_b 2 ebits, audit passes for a/b and fails for fig1 every time"
    ))
}

fn photonic_equivalence() -> Verdict {
    let mut worst = 0.0f64;
    for (i, s) in random_states(7, 500).iter().enumerate() {
        let optical = label_distribution(s).map_err(|e| e.to_string())?;
        let a: [f64; 4] = analytic_distribution(s, Scheme::SchemeA).map_err(|e| e.to_string())?;
        let d = max_diff(&optical, &a);
        worst = worst.max(d);
        check!(
            d <= 1e-12,
            "state {i}: photonic and scheme_a differ by {d:e}"
        );
    }
    let trials = 100_000u64;
    let s = S::random(2, &mut RngStream::new(1));
    let expected: [f64; 4] =
        analytic_distribution(&s, Scheme::SchemeA).map_err(|e| e.to_string())?;
    let sum = run_trials(&s, Scheme::Photonic, trials, 1).map_err(|e| e.to_string())?;
    let chi = chi_square(&sum.histogram.counts, &expected, 1e-12);
    check!(
        chi.p_value > 0.001,
        "chi-square p = {} (statistic {})",
        chi.p_value,
        chi.statistic
    );
    Ok(format!(
        "500 states within {worst:.1e}; {trials}-trial histogram chi2 = {:.2} (dof {}), p = {:.3}",
        chi.statistic, chi.dof, chi.p_value
    ))
}

fn reference_circuit() -> Verdict {
    let trials = 1000u64;
    let expected = [
        (BellLabel::PhiPlus, [Sign::Plus, Sign::Plus]),
        (BellLabel::PhiMinus, [Sign::Minus, Sign::Plus]),
        (BellLabel::PsiPlus, [Sign::Plus, Sign::Minus]),
        (BellLabel::PsiMinus, [Sign::Minus, Sign::Minus]),
    ];
    for (label, readout) in expected {
        let want = S::from_signs(&readout);
        for k in 0..trials {
            let mut rng = RngStream::for_trial(8, k);
            let r = run_fig1(&bell_state(label), &mut rng).map_err(|e| e.to_string())?;
            let out = r.post_state.ok_or("no output state")?;
            check!(
                out.approx_eq_up_to_phase(&want, 1e-12),
                "{label} trial {k}: output {out}, expected {want}"
            );
            check!(r.label == label, "{label} trial {k}: labelled {}", r.label);
        }
    }
    Ok(format!(
        "Phi+ -> |++>, Phi- -> |-+>, Psi+ -> |+->, Psi- -> |--> in all {trials} runs each"
    ))
}

#[test]
fn acceptance_criteria() {
    let criteria: [Criterion; 8] = [
        ("Bell-basis discrimination", bell_discrimination),
        ("Born-rule distribution", born_rule),
        ("Bell filter contract", bell_filter),
        ("superposition preservation", superposition_preservation),
        ("operator algebra", operator_algebra),
        ("resource ledger and LOCC audit", resource_ledger),
        ("photonic equivalence", photonic_equivalence),
        ("reference circuit mapping", reference_circuit),
    ];
    let mut failed = Vec::new();
    for (n, (name, run)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let verdict = run();
        let ms = start.elapsed().as_secs_f64() * 1e3;
        match verdict {
            Ok(detail) => println!("criterion {} {name}: PASS ({ms:.0} ms) {detail}", n + 1),
            Err(why) => {
                println!("criterion {} {name}: FAIL ({ms:.0} ms) {why}", n + 1);
                failed.push(n + 1);
            }
        }
    }
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
