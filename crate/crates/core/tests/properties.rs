use bellsim::bellcore::{bell_state, classify, from_bell, spin_product, to_bell, BellLabel};
use bellsim::measure::{local_product_measurement, nonlocal_product_measurement};
use bellsim::protocols::{locc_audit, run_scheme, trace_from_jsonl, trace_to_jsonl, Scheme};
use bellsim::qstate::{Axis, Operator, Sign, StateVector};
use bellsim::RngStream;
use proptest::prelude::*;
use proptest::sample::select;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

type S = StateVector<f64>;

fn state(n: usize, seed: u64) -> S {
    S::random(n, &mut RngStream::new(seed))
}

fn schemes() -> impl Strategy<Value = Scheme> {
    select(Scheme::ALL.to_vec())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn unitaries_preserve_norm(n in 1usize..=5, seed in any::<u64>(), a in 0usize..5, b in 0usize..5, two in any::<bool>()) {
        let (a, b) = (a % n, b % n);
        let targets: Vec<usize> = if two && a != b { vec![a, b] } else { vec![a] };
        let s = state(n, seed);
        let u = Operator::<f64>::random_unitary(1 << targets.len(), &mut ChaCha8Rng::seed_from_u64(!seed));
        let out = s.apply_unitary(&u, &targets).unwrap();
        prop_assert!((out.norm_sqr() - 1.0).abs() < 1e-12);
        let back = out.apply_unitary(&u.adjoint(), &targets).unwrap();
        prop_assert!(back.approx_eq_up_to_phase(&s, 1e-12));
    }
}

proptest! {
    #[test]
    fn tensor_is_associative(x in any::<u64>(), y in any::<u64>(), z in any::<u64>()) {
        let (a, b, c) = (state(1, x), state(2, y), state(1, z));
        let left = a.tensor(&b).tensor(&c);
        let right = a.tensor(&b.tensor(&c));
        prop_assert_eq!(left.n_qubits(), 4);
        for (l, r) in left.amplitudes().iter().zip(right.amplitudes()) {
            prop_assert!((l - r).norm() < 1e-15);
        }
    }

    #[test]
    fn bell_round_trip(seed in any::<u64>()) {
        let s = state(2, seed);
        let c = to_bell(&s).unwrap();
        let total: f64 = c.probabilities().iter().sum();
        prop_assert!((total - 1.0).abs() < 1e-12);
        let back = from_bell(&c);
        for (x, y) in back.amplitudes().iter().zip(s.amplitudes()) {
            prop_assert!((x - y).norm() < 1e-12);
        }
    }

    #[test]
    fn fidelity_is_symmetric_and_bounded(x in any::<u64>(), y in any::<u64>()) {
        let (a, b) = (state(2, x), state(2, y));
        let f = a.fidelity(&b).unwrap();
        prop_assert!((0.0..=1.0).contains(&f));
        prop_assert!((f - b.fidelity(&a).unwrap()).abs() < 1e-14);
        prop_assert!((a.fidelity(&a).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn runs_are_deterministic(seed in any::<u64>(), scheme in schemes(), k in 0u64..1000) {
        let s = state(2, seed);
        let r1 = run_scheme(scheme, &s, &mut RngStream::for_trial(seed, k)).unwrap();
        let r2 = run_scheme(scheme, &s, &mut RngStream::for_trial(seed, k)).unwrap();
        prop_assert_eq!(r1, r2);
    }

    #[test]
    fn traces_round_trip_through_jsonl(seed in any::<u64>(), scheme in schemes()) {
        let r = run_scheme(scheme, &state(2, seed), &mut RngStream::new(seed)).unwrap();
        let text = trace_to_jsonl(&r.trace);
        prop_assert_eq!(text.lines().count(), r.trace.len());
        let back = trace_from_jsonl(&text).unwrap();
        prop_assert_eq!(&back, &r.trace);
        prop_assert_eq!(locc_audit(&back).unwrap().passed, scheme.is_locc());
    }

    #[test]
    fn reported_label_matches_outcomes(seed in any::<u64>(), scheme in schemes()) {
        let r = run_scheme(scheme, &state(2, seed), &mut RngStream::new(seed)).unwrap();
        prop_assert_eq!(classify(r.outcomes.0, r.outcomes.1), r.label);
        prop_assert_eq!(r.label.outcomes(), r.outcomes);
    }
}

/// Measuring S_zz locally collapses |Φ+⟩ to a product state, so a later
/// S_xx readout is a coin flip; the nonlocal version keeps |Φ+⟩ intact.
#[test]
fn local_and_nonlocal_differ_at_state_level() {
    let phi = bell_state::<f64>(BellLabel::PhiPlus);
    let zz = spin_product::<f64>(Axis::Z, Axis::Z);
    let meter = bell_state::<f64>(BellLabel::PhiPlus);
    for k in 0..200 {
        let mut rng = RngStream::for_trial(77, k);
        let (local, after_local) = local_product_measurement(&phi, &zz, &mut rng).unwrap();
        let (nonlocal, after_nonlocal) =
            nonlocal_product_measurement(&phi, &zz, &meter, &mut rng).unwrap();
        assert_eq!(local.product_outcome, Sign::Plus);
        assert_eq!(nonlocal.product_outcome, Sign::Plus);
        assert!(after_nonlocal.approx_eq_up_to_phase(&phi, 1e-12));
        let expected = S::from_signs(&[local.local_outcomes.0, local.local_outcomes.1]);
        assert!(after_local.approx_eq_up_to_phase(&expected, 1e-12));
        assert!((after_local.fidelity(&phi).unwrap() - 0.5).abs() < 1e-12);
    }
}

#[test]
fn single_precision_agrees_with_double() {
    let s64 = state(2, 5);
    let s32 = StateVector::<f32>::from_amplitudes(
        s64.amplitudes()
            .iter()
            .map(|a| num_complex::Complex32::new(a.re as f32, a.im as f32))
            .collect(),
    )
    .unwrap();
    let p64 = to_bell(&s64).unwrap().probabilities();
    let p32 = to_bell(&s32).unwrap().probabilities();
    for (a, b) in p64.iter().zip(p32) {
        assert!((a - b as f64).abs() < 1e-5);
    }
    let r = run_scheme(Scheme::SchemeB, &s32, &mut RngStream::new(3)).unwrap();
    let post = r.post_state.unwrap();
    assert!(post.fidelity(&bell_state(r.label)).unwrap() > 1.0 - 1e-5);
}
