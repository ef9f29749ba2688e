use proptest::prelude::*;

use relaxcbf::filter::{closed_form_solve, oracle_solve, solve, verify_kkt, CriticalRegion, Method};
use relaxcbf::scalar::dot;
use relaxcbf::system::{benchmark_problem, stabilizing_nominal};
use relaxcbf::{ClassK, FilterTerms, NominalController, Problem32, Problem64};

/// Builds self-consistent terms from the primitive quantities.
#[allow(clippy::too_many_arguments)]
fn terms(lgb: Vec<f64>, lgv: Vec<f64>, lfb: f64, lfv: f64, pi: Vec<f64>, b: f64, gamma: f64, p: f64) -> FilterTerms<f64> {
    let alpha_b = b;
    let beta_b = (1000.0 * b).tanh();
    let (gb, gv, gbv) = (dot(&lgb, &lgb), dot(&lgv, &lgv), dot(&lgb, &lgv));
    FilterTerms {
        x: vec![1.0; lgb.len()],
        f_b: dot(&lgb, &pi) + lfb + alpha_b,
        f_b_prime: gb + alpha_b * alpha_b / p,
        f_v: lfv + dot(&lgv, &pi) + beta_b * gamma,
        pi,
        lfb,
        lgb,
        lfv,
        lgv,
        b,
        v: gamma,
        alpha_b,
        beta_b,
        gamma,
        gb,
        gv,
        gbv,
        p,
    }
}

fn synthetic_terms(m: usize) -> impl Strategy<Value = FilterTerms<f64>> {
    (
        prop::collection::vec(-3.0f64..3.0, m),
        prop::collection::vec(-3.0f64..3.0, m),
        -5.0f64..5.0,
        -5.0f64..5.0,
        prop::collection::vec(-2.0f64..2.0, m),
        -1.0f64..3.0,
        0.0f64..4.0,
        1.0f64..500.0,
    )
        .prop_map(|(lgb, lgv, lfb, lfv, pi, b, gamma, p)| terms(lgb, lgv, lfb, lfv, pi, b, gamma, p))
}

fn assert_agreement(t: &FilterTerms<f64>) -> Result<(), TestCaseError> {
    let (cf, or) = match (closed_form_solve(t), oracle_solve(t)) {
        (Ok(cf), Ok(or)) => (cf, or),
        (Err(_), Err(_)) => return Ok(()),
        (cf, or) => return Err(TestCaseError::fail(format!("solvers disagree on feasibility: {cf:?} vs {or:?}"))),
    };
    let scale = 1.0 + cf.objective.abs().max(or.objective.abs());
    prop_assert!((cf.objective - or.objective).abs() <= 1e-8 * scale, "objective {} vs {}", cf.objective, or.objective);
    // Same scale the solver accepts with: constraint magnitudes plus multipliers.
    let k = verify_kkt(&cf, t);
    let kkt_scale = 1.0 + t.constraint_scale(&cf.u) + k.lambda[0].abs() + k.lambda[1].abs();
    prop_assert!(k.max <= 1e-8 * kkt_scale, "KKT residual {:e} in {:?}", k.max, cf.region);
    let cs = 1e-8 * (1.0 + t.constraint_scale(&cf.u));
    prop_assert!(t.cbf_value(&cf.u, cf.s) >= -cs);
    prop_assert!(t.clf_value(&cf.u) <= cs);
    Ok(())
}

fn benchmark_variant(p: f64, alpha: f64, beta: f64, stabilizing: bool) -> Problem64 {
    let base = benchmark_problem::<f64>();
    let pi = if stabilizing { stabilizing_nominal(2) } else { NominalController::Zero };
    Problem64::new(
        base.system().clone(),
        base.b().clone(),
        base.v().clone(),
        ClassK::linear(alpha),
        ClassK::scaled_tanh(beta),
        base.gamma().clone(),
        p,
        pi,
    )
    .unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(512))]

    #[test]
    fn closed_form_matches_oracle_on_the_benchmark(x in prop::array::uniform2(-8.0f64..8.0)) {
        assert_agreement(&benchmark_problem::<f64>().eval_terms(&x).unwrap())?;
    }

    #[test]
    fn closed_form_matches_oracle_on_the_polynomial_case(x in prop::array::uniform2(-3.0f64..3.0)) {
        let prob = relaxcbf::experiments::load_problem("builtin:poly-case").unwrap();
        assert_agreement(&prob.eval_terms(&x).unwrap())?;
    }

    #[test]
    fn closed_form_matches_oracle_across_parameters(
        x in prop::array::uniform2(-8.0f64..8.0),
        p in 0.5f64..1000.0,
        alpha in 0.1f64..10.0,
        beta in 1.0f64..2000.0,
        stabilizing in any::<bool>(),
    ) {
        let prob = benchmark_variant(p, alpha, beta, stabilizing);
        assert_agreement(&prob.eval_terms(&x).unwrap())?;
    }

    #[test]
    fn closed_form_matches_oracle_with_one_input(t in synthetic_terms(1)) {
        assert_agreement(&t)?;
    }

    #[test]
    fn closed_form_matches_oracle_with_three_inputs(t in synthetic_terms(3)) {
        assert_agreement(&t)?;
    }

    #[test]
    fn slack_is_one_when_the_barrier_multiplier_vanishes(t in synthetic_terms(2)) {
        // Stationarity in s: p(s − 1) = λ₁α(b).
        let Ok(sol) = closed_form_solve(&t) else { return Ok(()) };
        if sol.lambda1.value() == Some(0.0) {
            prop_assert!((sol.s - 1.0).abs() <= 1e-12, "s = {}", sol.s);
        }
    }

    #[test]
    fn inactive_region_returns_the_nominal_input(t in synthetic_terms(2)) {
        let Ok(sol) = closed_form_solve(&t) else { return Ok(()) };
        if sol.region == CriticalRegion::Inactive {
            prop_assert_eq!(&sol.u, &t.pi);
            prop_assert_eq!(sol.s, 1.0);
        }
    }
}

#[test]
fn solution_is_continuous_across_region_seams() {
    // Bisect every region change along a few lines; the input must agree on both sides.
    let base = benchmark_problem::<f64>();
    let stabilized = base.with_pi(stabilizing_nominal(2)).unwrap();
    let at = |prob: &Problem64, x0: f64, y: f64| solve(prob, &[x0, y], Method::ClosedForm).unwrap();
    let mut seams = 0;
    for (prob, y) in [(&stabilized, 1.9), (&stabilized, 3.0), (&base, 3.0)] {
        let xs: Vec<f64> = (0..=600).map(|k| -3.0 + 6.0 * k as f64 / 600.0).collect();
        for w in xs.windows(2) {
            let (mut lo, mut hi) = (w[0], w[1]);
            let r_lo = at(prob, lo, y).region;
            if at(prob, hi, y).region == r_lo {
                continue;
            }
            for _ in 0..60 {
                let mid = 0.5 * (lo + hi);
                if at(prob, mid, y).region == r_lo {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            let (a, b) = (at(prob, lo, y), at(prob, hi, y));
            let jump = ((a.u[0] - b.u[0]).powi(2) + (a.u[1] - b.u[1]).powi(2)).sqrt();
            assert!(jump <= 1e-6, "jump {jump} between {:?} and {:?} at x1 = {lo}, x2 = {y}", a.region, b.region);
            seams += 1;
        }
    }
    assert!(seams >= 4, "only {seams} seams crossed");
}

#[test]
fn f32_solutions_track_f64() {
    let p32: Problem32 = benchmark_problem();
    let p64: Problem64 = benchmark_problem();
    for x in [[3.0, -3.0], [-5.0, 2.0], [0.5, 6.5], [1.0, 1.0], [-4.0, 5.0]] {
        let s64 = solve(&p64, &x, Method::ClosedForm).unwrap();
        let s32 = solve(&p32, &[x[0] as f32, x[1] as f32], Method::ClosedForm).unwrap();
        for i in 0..2 {
            let d = (s32.u[i] as f64 - s64.u[i]).abs();
            assert!(d <= 1e-3 * (1.0 + s64.u[i].abs()), "{x:?}: {} vs {}", s32.u[i], s64.u[i]);
        }
        assert!((s32.s as f64 - s64.s).abs() <= 1e-3);
    }
}

#[test]
fn oracle_and_closed_form_agree_at_documented_points() {
    let prob = benchmark_problem::<f64>();
    let lo = solve(&prob, &[0.0, 2.0], Method::ClosedForm).unwrap();
    assert!((lo.u[1] + 2.0).abs() <= 1e-9 && lo.u[0].abs() <= 1e-9);
    let hi = solve(&prob, &[0.0, 6.0], Method::Oracle).unwrap();
    assert!(hi.u[0].abs() <= 1e-9 && (hi.u[1] + 6.0).abs() <= 1e-9 && (hi.s - 1.0).abs() <= 1e-9);
    let origin = solve(&prob, &[0.0, 0.0], Method::ClosedForm).unwrap();
    assert_eq!(origin.u, vec![0.0, 0.0]);
}
