mod common;

use common::{fd_compare, random_point, random_source, FdOutcome, COORDS};
use curvspec_core::expr::{parse, ExprError};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[test]
fn hand_differentiated_jet() {
    let e = parse("r^2*sin(theta)^2", &["t", "r", "theta", "phi"], &[]).unwrap();
    let j = e.eval_jet2(&[0.0, 2.0, std::f64::consts::FRAC_PI_2, 0.0]).unwrap();
    assert!((j.value - 4.0).abs() < 1e-15);
    assert!((j.grad[1] - 4.0).abs() < 1e-15);
    assert!(j.grad[2].abs() < 1e-15);
    assert!((j.hess[(1, 1)] - 2.0).abs() < 1e-15);
    assert!((j.hess[(2, 2)] + 8.0).abs() < 1e-14);
    assert!(j.hess[(1, 2)].abs() < 1e-15);
    assert_eq!(j.hess, j.hess.transpose());
}

#[test]
fn parameters_and_errors() {
    let e = parse("1 - rs/r", &["r"], &[("rs".to_string(), 2.0)]).unwrap();
    assert!((e.eval(&[3.0]).unwrap() - 1.0 / 3.0).abs() < 1e-15);
    match parse::<&str>("2 +* 3", &[], &[]) {
        Err(ExprError::Syntax { pos, .. }) => assert_eq!(pos, 3),
        other => panic!("{other:?}"),
    }
    assert!(matches!(parse("q + 1", &["r"], &[]), Err(ExprError::UnknownIdentifier { .. })));
    let log = parse("log(r)", &["r"], &[]).unwrap();
    assert!(matches!(log.eval(&[-1.0]), Err(ExprError::Domain(_))));
}

#[test]
fn sweep_of_random_expressions() {
    let (worst, skipped) = common::random_fd_sweep(7, 1000, 5);
    assert!(worst < 1e-6, "worst relative deviation {worst:e} ({skipped} skipped)");
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 1000, max_global_rejects: 100_000, ..ProptestConfig::default() })]

    #[test]
    fn autodiff_agrees_with_differences(seed in any::<u64>(), depth in 0usize..=5) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let src = random_source(&mut rng, depth);
        let e = parse(&src, &COORDS, &[]).unwrap();
        let p = random_point(&mut rng);
        match fd_compare(&e, &p, 1e-5) {
            FdOutcome::Checked(w) => prop_assert!(w < 1e-6, "{src} at {p:?}: {w:e}"),
            FdOutcome::Skipped => prop_assume!(false),
        }
    }

    #[test]
    fn display_reparses_to_the_same_function(seed in any::<u64>(), depth in 0usize..=5) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let src = random_source(&mut rng, depth);
        let e = parse(&src, &COORDS, &[]).unwrap();
        let shown = e.to_string();
        let again = parse(&shown, &COORDS, &[]).unwrap();
        prop_assert_eq!(again.to_string(), shown.clone());
        for _ in 0..4 {
            let p = random_point(&mut rng);
            match (e.eval(&p), again.eval(&p)) {
                (Ok(a), Ok(b)) => prop_assert!(a == b || (a.is_nan() && b.is_nan()), "{src} vs {shown}: {a} {b}"),
                (Err(_), Err(_)) => {}
                (a, b) => prop_assert!(false, "{src} vs {shown}: {a:?} {b:?}"),
            }
        }
    }
}
