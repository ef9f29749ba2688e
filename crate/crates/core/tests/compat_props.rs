use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use relaxcbf::compat::{
    check_relaxed_compatibility, check_samples, halfspace_pair_feasible, sample_boundary, scs_margin, CompatMode,
    ConflictKind, ScsMargin,
};
use relaxcbf::experiments::load_problem;
use relaxcbf::scalar::{dot, norm};
use relaxcbf::system::{benchmark_problem, polynomial_case};
use relaxcbf::{ClassK, NominalController, Polynomial64, Problem64};

/// Instance `a·u + c1 ≥ 0`, `d·u + c2 ≤ 0`. Half of the instances have `a ∥ d`
/// so that conflicts actually occur.
#[derive(Clone, Debug)]
struct Pair {
    a: Vec<f64>,
    c1: f64,
    d: Vec<f64>,
    c2: f64,
}

fn random_pair(rng: &mut ChaCha8Rng, m: usize) -> Pair {
    let d: Vec<f64> = (0..m).map(|_| rng.gen_range(-2.0..2.0)).collect();
    let a = if rng.gen_bool(0.5) {
        let t = rng.gen_range(-2.0..2.0);
        d.iter().map(|v| t * v).collect()
    } else {
        (0..m).map(|_| rng.gen_range(-2.0..2.0)).collect()
    };
    Pair {
        a,
        c1: rng.gen_range(-2.0..2.0),
        d,
        c2: rng.gen_range(-2.0..2.0),
    }
}

/// Grid search over `[−r, r]^m`. `slack` loosens both rows.
fn brute_force(p: &Pair, r: f64, h: f64, slack: f64) -> bool {
    let m = p.a.len();
    let steps = (2.0 * r / h).round() as usize;
    let mut idx = vec![0usize; m];
    let mut u = vec![0.0; m];
    loop {
        for (ui, &k) in u.iter_mut().zip(&idx) {
            *ui = -r + h * k as f64;
        }
        if dot(&p.a, &u) + p.c1 >= -slack && dot(&p.d, &u) + p.c2 <= slack {
            return true;
        }
        let mut i = 0;
        loop {
            if i == m {
                return false;
            }
            idx[i] += 1;
            if idx[i] <= steps {
                break;
            }
            idx[i] = 0;
            i += 1;
        }
    }
}

fn check_against_grid(p: &Pair, h: f64) -> bool {
    const R: f64 = 5.0;
    let dec = halfspace_pair_feasible(&p.a, p.c1, &p.d, p.c2);
    if dec.feasible {
        let w = dec.witness.clone().expect("feasible pairs carry a witness");
        if w.iter().all(|v| v.abs() <= R - h) {
            // The nearest grid node is within h·√m/2 of the witness.
            let slack = 0.5 * h * (p.a.len() as f64).sqrt() * (norm(&p.a) + norm(&p.d)) + 1e-9;
            assert!(brute_force(p, R, h, slack), "analytic feasible, grid found nothing: {p:?}");
        }
    } else {
        assert!(!brute_force(p, R, h, 0.0), "analytic infeasible, grid found a point: {p:?} {dec:?}");
    }
    dec.feasible
}

#[test]
fn halfspace_decision_agrees_with_grid_search_in_one_dimension() {
    let mut rng = ChaCha8Rng::seed_from_u64(101);
    let feasible = (0..1000).filter(|_| check_against_grid(&random_pair(&mut rng, 1), 0.05)).count();
    assert!(feasible > 0 && feasible < 1000, "{feasible}/1000 feasible");
}

#[test]
fn halfspace_decision_agrees_with_grid_search_in_two_dimensions() {
    let mut rng = ChaCha8Rng::seed_from_u64(102);
    let feasible = (0..40).filter(|_| check_against_grid(&random_pair(&mut rng, 2), 0.05)).count();
    assert!(feasible > 0 && feasible < 40, "{feasible}/40 feasible");
}

#[test]
fn halfspace_decision_agrees_with_grid_search_in_three_dimensions() {
    let mut rng = ChaCha8Rng::seed_from_u64(103);
    let feasible = (0..40).filter(|_| check_against_grid(&random_pair(&mut rng, 3), 0.25)).count();
    assert!(feasible > 0 && feasible < 40, "{feasible}/40 feasible");
}

fn pair_strategy() -> impl Strategy<Value = Pair> {
    (1usize..=4).prop_flat_map(|m| {
        (
            prop::collection::vec(-3.0f64..3.0, m),
            -3.0f64..3.0,
            prop::collection::vec(-3.0f64..3.0, m),
            -3.0f64..3.0,
            prop::option::of(-2.0f64..2.0),
        )
            .prop_map(|(a, c1, d, c2, t)| Pair {
                // Optionally force a ∥ d.
                a: t.map_or(a, |t| d.iter().map(|v| t * v).collect()),
                c1,
                d,
                c2,
            })
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn witness_satisfies_both_rows(p in pair_strategy()) {
        let dec = halfspace_pair_feasible(&p.a, p.c1, &p.d, p.c2);
        if let Some(w) = &dec.witness {
            let scale = 1.0 + p.c1.abs() + p.c2.abs() + (norm(&p.a) + norm(&p.d)) * norm(w);
            prop_assert!(dot(&p.a, w) + p.c1 >= -1e-8 * scale);
            prop_assert!(dot(&p.d, w) + p.c2 <= 1e-8 * scale);
        }
        prop_assert_eq!(dec.feasible, dec.witness.is_some());
        prop_assert_eq!(dec.feasible, dec.conflict.is_none());
    }

    #[test]
    fn conflicts_carry_a_negative_margin(p in pair_strategy()) {
        let dec = halfspace_pair_feasible(&p.a, p.c1, &p.d, p.c2);
        if dec.conflict.is_some() {
            prop_assert!(dec.margin.unwrap() < 0.0, "{:?}", dec);
        }
    }

    #[test]
    fn scaling_a_row_does_not_change_the_decision(p in pair_strategy(), k in 0.1f64..10.0) {
        let base = halfspace_pair_feasible(&p.a, p.c1, &p.d, p.c2);
        let a: Vec<f64> = p.a.iter().map(|v| k * v).collect();
        let scaled = halfspace_pair_feasible(&a, k * p.c1, &p.d, p.c2);
        // Decisions can only differ inside the tolerance band.
        if base.margin.is_none_or(|m| m.abs() > 1e-6) {
            prop_assert_eq!(base.feasible, scaled.feasible);
        }
    }
}

fn with_v_and_gamma(prob: &Problem64, v: Polynomial64, gamma: Polynomial64) -> Problem64 {
    Problem64::new(
        prob.system().clone(),
        prob.b().clone(),
        v,
        prob.alpha(),
        prob.beta(),
        gamma,
        prob.p(),
        prob.pi().clone(),
    )
    .unwrap()
}

fn sq_norm() -> Polynomial64 {
    &Polynomial64::var(2, 0).pow(2) + &Polynomial64::var(2, 1).pow(2)
}

/// The polynomial system with its obstacle and the naive candidates
/// `V = xᵀx`, `γ = 0.05 xᵀx`.
fn naive_polynomial_problem() -> Problem64 {
    let case = polynomial_case::<f64>();
    Problem64::new(
        case.system,
        case.safe_set,
        sq_norm(),
        ClassK::linear(1.0),
        ClassK::scaled_tanh(1000.0),
        sq_norm().scale(&0.05),
        100.0,
        NominalController::Zero,
    )
    .unwrap()
}

#[test]
fn naive_lyapunov_candidate_fails_where_the_input_gain_vanishes() {
    // g₂₂ = −0.2x₂² + 0.2x₁ + 4 vanishes at (0, √20), so LgV = 0 there while LfV = 40.
    let prob = naive_polynomial_problem();
    let x = vec![0.0, 20f64.sqrt()];
    let grid = vec![vec![1.0, 1.0], vec![-2.0, 0.5], x.clone()];
    match scs_margin(&prob, &grid, 0.05) {
        ScsMargin::Value { margin } => assert!((margin + 41.0).abs() <= 1e-9, "margin {margin}"),
        ScsMargin::Vacuous => panic!("expected a violation at {x:?}"),
    }
    let witness = polynomial_case::<f64>().naive_clf_witness(&x).unwrap();
    assert!(witness.is_violated);
}

#[test]
fn halving_the_decay_rate_raises_the_margin() {
    let prob = naive_polynomial_problem();
    let halved = prob.with_gamma(prob.gamma().scale(&0.5)).unwrap();
    let grid = vec![vec![0.0, 20f64.sqrt()], vec![0.0, -(20f64.sqrt())]];
    let margin = |p: &Problem64| match scs_margin(p, &grid, 0.05) {
        ScsMargin::Value { margin } => margin,
        ScsMargin::Vacuous => panic!("grid points have LgV = 0"),
    };
    assert!(margin(&halved) > margin(&prob));
    assert!((margin(&halved) - margin(&prob) - 0.5).abs() <= 1e-9);
}

#[test]
fn vanishing_lyapunov_function_is_a_degenerate_clf_row() {
    let bench = benchmark_problem::<f64>();
    let samples: Vec<Vec<f64>> = vec![vec![0.0, 2.0], vec![2.0, 4.0], vec![0.0, 6.0]];

    // V ≡ 0 with γ ≡ 0: the CLF row reads 0 ≤ 0 and never conflicts.
    let zero = with_v_and_gamma(&bench, Polynomial64::zero(2), Polynomial64::zero(2));
    assert!(check_samples(&zero, &samples, CompatMode::Relaxed).all_feasible);
    assert!(check_samples(&zero, &samples, CompatMode::Strict).all_feasible);

    // V ≡ 0 with γ = xᵀx: strict offsets demand γ ≤ 0.
    let pos = with_v_and_gamma(&bench, Polynomial64::zero(2), sq_norm());
    let strict = check_samples(&pos, &samples, CompatMode::Strict);
    assert!(strict.samples.iter().all(|s| s.conflict_kind == Some(ConflictKind::ClfDegenerate)));
    assert!(check_samples(&pos, &samples, CompatMode::Relaxed).all_feasible);
}

#[test]
fn polynomial_fixture_boundary_sampling() {
    let prob = load_problem("builtin:poly-case").unwrap();
    let a = sample_boundary(prob.b(), 200, 9, 3.0);
    let b = sample_boundary(prob.b(), 200, 9, 3.0);
    assert_eq!(a, b);
    assert_eq!(a.points.len(), 200);
    assert!(a.points.iter().all(|x| prob.b().evaluate(x).unwrap().abs() <= 1e-10));
}

#[test]
fn polynomial_fixture_is_relaxed_compatible() {
    let prob = load_problem("builtin:poly-case").unwrap();
    let rep = check_relaxed_compatibility(&prob, 500, 17, 3.0);
    assert_eq!(rep.samples.len(), 500);
    assert!(rep.all_feasible, "{:?}", rep.samples.iter().find(|s| !s.feasible));
}
