use maxent::certificate::{certify, diagnose_existence, Route, Tolerances};
use maxent::dual::{dual_gradient, dual_objective, solve, DualSolution, SolveOptions};
use maxent::measurements::{combine, evaluate, MeasurementFunction, MomentProblem, Point, SupportSet};
use maxent::oracle::fixture_named;
use maxent::quadrature::{integrate, log_partition, IntegrationBudget, IntegrationRequest};
use proptest::prelude::*;

fn budget() -> IntegrationBudget {
    IntegrationBudget::default()
}

fn half_line() -> SupportSet {
    SupportSet::boxed(vec![0.0], vec![f64::INFINITY]).unwrap()
}

fn exponential(u: f64) -> MomentProblem {
    MomentProblem::new(half_line(), vec![(MeasurementFunction::power(1, 0, 1).unwrap(), u)]).unwrap()
}

fn gaussian_laplace(u2: f64, u1: f64) -> MomentProblem {
    MomentProblem::new(
        SupportSet::full(1).unwrap(),
        vec![
            (MeasurementFunction::power(1, 0, 2).unwrap(), u2),
            (MeasurementFunction::abs_power(1, 0, 1.0).unwrap(), u1),
        ],
    )
    .unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn combination_is_linear(
        w in prop::collection::vec(0.0..5.0f64, 3),
        x in prop::collection::vec(-10.0..10.0f64, 2),
    ) {
        prop_assume!(w.iter().any(|v| *v > 0.0));
        let fs = [
            MeasurementFunction::norm_power(2, 2.0).unwrap(),
            MeasurementFunction::abs_power(2, 1, 1.5).unwrap(),
            MeasurementFunction::power(2, 0, 3).unwrap(),
        ];
        let pairs: Vec<_> = fs.iter().cloned().zip([1.0, 2.0, 3.0]).collect();
        let (sum, u) = combine(&pairs, &w).unwrap();
        let p = Point::new(x).unwrap();
        let expected: f64 = fs.iter().zip(&w).map(|(f, w)| w * evaluate(f, &p).unwrap()).sum();
        prop_assert!((evaluate(&sum, &p).unwrap() - expected).abs() <= 1e-9 * (1.0 + expected.abs()));
        prop_assert!((u - (w[0] + 2.0 * w[1] + 3.0 * w[2])).abs() < 1e-12);
    }

    #[test]
    fn dual_is_convex(a in 0.1..5.0f64, b in 0.1..5.0f64, t in 0.01..0.99f64) {
        let p = exponential(1.0);
        let (da, ea) = log_partition(&p, &[a], &budget()).unwrap();
        let (db, eb) = log_partition(&p, &[b], &budget()).unwrap();
        let m = t * a + (1.0 - t) * b;
        let (dm, em) = log_partition(&p, &[m], &budget()).unwrap();
        // The linear term of the dual cancels on both sides.
        prop_assert!(dm <= t * da + (1.0 - t) * db + 3.0 * (ea + eb + em));
        let obj = |l: f64| dual_objective(&p, &[l], &budget()).unwrap();
        prop_assert!(obj(m) <= t * obj(a) + (1.0 - t) * obj(b) + 3.0 * (ea + eb + em) + 1e-12);
    }

    #[test]
    fn gradient_matches_finite_differences(l2 in 0.2..3.0f64, l1 in 0.2..3.0f64) {
        let p = gaussian_laplace(1.0, 1.0);
        let g = dual_gradient(&p, &[l2, l1], &budget()).unwrap();
        for k in 0..2 {
            let mut up = vec![l2, l1];
            let mut down = up.clone();
            let h = 1e-4 * up[k];
            up[k] += h;
            down[k] -= h;
            let fd = (dual_objective(&p, &up, &budget()).unwrap() - dual_objective(&p, &down, &budget()).unwrap()) / (2.0 * h);
            prop_assert!((fd - g[k]).abs() <= 1e-5 * (1.0 + g[k].abs()), "k={k} fd={fd} g={}", g[k]);
        }
    }

    #[test]
    fn density_is_normalised(l2 in 0.05..5.0f64, l1 in 0.0..5.0f64) {
        let p = gaussian_laplace(1.0, 1.0);
        let sol = DualSolution::at(&p, &[l2, l1], &budget()).unwrap();
        let terms = p.constraints().iter().zip([l2, l1]).map(|(c, l)| (l, c.function.clone())).collect();
        let z = integrate(&IntegrationRequest::new(p.support().clone(), terms)).unwrap();
        prop_assert!((z.value * (-sol.alpha).exp() - 1.0).abs() < 1e-8);
    }

    #[test]
    fn truncation_agrees_with_full_support(l in 0.5..10.0f64) {
        let far = SupportSet::boxed(vec![0.0], vec![200.0]).unwrap();
        let x = MeasurementFunction::power(1, 0, 1).unwrap();
        let bounded = MomentProblem::new(far, vec![(x, 1.0)]).unwrap();
        let (a, _) = log_partition(&exponential(1.0), &[l], &budget()).unwrap();
        let (b, _) = log_partition(&bounded, &[l], &budget()).unwrap();
        prop_assert!((a - b).abs() < 1e-9);
        prop_assert!((a + l.ln()).abs() < 1e-9);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn inactive_bounds_leave_solution_unchanged(u in 34.0..1000.0f64) {
        let support = SupportSet::boxed(vec![-10.0], vec![10.0]).unwrap();
        let p = MomentProblem::new(support, vec![(MeasurementFunction::power(1, 0, 2).unwrap(), u)]).unwrap();
        let sol = solve(&p, &SolveOptions::default()).unwrap();
        prop_assert_eq!(sol.lambda[0], 0.0);
        prop_assert!((sol.entropy - 20f64.ln()).abs() < 1e-9);
    }

    #[test]
    fn entropy_grows_with_the_bound(u in 0.2..5.0f64, factor in 1.05..3.0f64) {
        let a = solve(&exponential(u), &SolveOptions::default()).unwrap();
        let b = solve(&exponential(u * factor), &SolveOptions::default()).unwrap();
        prop_assert!(b.entropy > a.entropy);
        prop_assert!((a.entropy - (1.0 + u.ln())).abs() < 1e-6);
    }

    #[test]
    fn certificate_rejects_wrong_multipliers(l in 0.2..5.0f64) {
        prop_assume!((l - 1.0).abs() > 0.02);
        let p = exponential(1.0);
        let sol = DualSolution::at(&p, &[l], &budget()).unwrap();
        let cert = certify(&p, &sol, &Tolerances::default_for(&p, sol.entropy), &budget(), 1).unwrap();
        prop_assert!(!cert.verdict.is_certified());
    }

    #[test]
    fn certificate_rejects_wrong_entropy_claim(shift in 1e-3..1.0f64) {
        let p = exponential(1.0);
        let mut sol = DualSolution::at(&p, &[1.0], &budget()).unwrap();
        sol.entropy += shift;
        let cert = certify(&p, &sol, &Tolerances::default_for(&p, 1.0), &budget(), 1).unwrap();
        prop_assert!(!cert.verdict.is_certified());
        prop_assert!((cert.entropy_identity_residual.unwrap() - shift).abs() < 1e-8);
    }

    #[test]
    fn larger_bounds_keep_a_route(u in 0.05..3.0f64, factor in 1.0..4.0f64) {
        let route = |u: f64| diagnose_existence(&gaussian_laplace(u, 10.0), &budget(), 0).route;
        if route(u) != Route::None {
            prop_assert_ne!(route(u * factor), Route::None);
        }
    }

    #[test]
    fn monte_carlo_is_deterministic(seed in 0u64..1000) {
        let sq = MeasurementFunction::norm_power(4, 2.0).unwrap();
        let b = IntegrationBudget { max_evaluations: 20_000, rel_tol: 1e-2, seed };
        let req = IntegrationRequest::new(SupportSet::full(4).unwrap(), vec![(1.0, sq)]).budget(b);
        let a = integrate(&req).unwrap();
        prop_assert_eq!(a.value, integrate(&req).unwrap().value);
    }

    #[test]
    fn certified_fixture_solutions_stay_certified_under_reseeding(seed in 0u64..1000) {
        let f = fixture_named("laplace").unwrap();
        let sol = solve(&f.problem, &SolveOptions::default()).unwrap();
        let cert = certify(&f.problem, &sol, &Tolerances::default_for(&f.problem, sol.entropy), &budget(), seed).unwrap();
        prop_assert!(cert.verdict.is_certified());
    }
}
