use num_rational::Ratio;
use proptest::prelude::*;

use relaxcbf::{PolyMatrix, PolyVector, Polynomial, Polynomial64, RationalPolynomial};

type Q = Ratio<i64>;

fn rational_poly() -> impl Strategy<Value = RationalPolynomial> {
    prop::collection::vec(((0u32..3, 0u32..3), -6i64..=6, 1i64..=4), 0..5).prop_map(|terms| {
        Polynomial::from_terms(2, terms.into_iter().map(|((a, b), n, d)| (vec![a, b], Q::new(n, d)))).unwrap()
    })
}

fn float_poly() -> impl Strategy<Value = Polynomial64> {
    prop::collection::vec(((0u32..4, 0u32..4), -3.0f64..3.0), 1..6)
        .prop_map(|terms| Polynomial::from_terms(2, terms.into_iter().map(|((a, b), c)| (vec![a, b], c))).unwrap())
}

fn rational_point() -> impl Strategy<Value = Vec<Q>> {
    prop::collection::vec((-5i64..=5, 1i64..=3).prop_map(|(n, d)| Q::new(n, d)), 2)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn ring_laws_hold_exactly(p in rational_poly(), q in rational_poly(), r in rational_poly()) {
        prop_assert_eq!(&p + &q, &q + &p);
        prop_assert_eq!(&p * &q, &q * &p);
        prop_assert_eq!(&p * &(&q + &r), &(&p * &q) + &(&p * &r));
        prop_assert_eq!(&(&p * &q) * &r, &p * &(&q * &r));
        prop_assert!((&p - &p).is_zero());
    }

    #[test]
    fn evaluation_is_a_ring_homomorphism(p in rational_poly(), q in rational_poly(), x in rational_point()) {
        let (pv, qv) = (p.evaluate_exact(&x).unwrap(), q.evaluate_exact(&x).unwrap());
        prop_assert_eq!((&p * &q).evaluate_exact(&x).unwrap(), pv * qv);
        prop_assert_eq!((&p + &q).evaluate_exact(&x).unwrap(), pv + qv);
    }

    #[test]
    fn lie_derivative_obeys_the_product_rule(
        p in rational_poly(),
        q in rational_poly(),
        f1 in rational_poly(),
        f2 in rational_poly(),
    ) {
        let f = PolyVector::new(vec![f1, f2]).unwrap();
        let lhs = (&p * &q).lie_derivative(&f).unwrap();
        let rhs = &(&p.lie_derivative(&f).unwrap() * &q) + &(&p * &q.lie_derivative(&f).unwrap());
        prop_assert_eq!(lhs, rhs);
    }

    #[test]
    fn lie_derivative_along_identity_columns_is_the_gradient(p in rational_poly()) {
        let lg = p.lie_derivative_g(&PolyMatrix::identity(2)).unwrap();
        let grad = p.gradient();
        prop_assert_eq!(lg.entries(), grad.entries());
    }

    #[test]
    fn gradient_matches_central_differences(p in float_poly(), x in prop::array::uniform2(-2.0f64..2.0)) {
        let h = 1e-5;
        let grad = p.gradient().evaluate(&x).unwrap();
        for i in 0..2 {
            let (mut xp, mut xm) = (x, x);
            xp[i] += h;
            xm[i] -= h;
            let fd = (p.evaluate(&xp).unwrap() - p.evaluate(&xm).unwrap()) / (2.0 * h);
            prop_assert!((fd - grad[i]).abs() <= 1e-6 * (1.0 + grad[i].abs()), "{} vs {}", fd, grad[i]);
        }
    }

    #[test]
    fn json_round_trip_is_stable(p in float_poly()) {
        let text = serde_json::to_string(&p).unwrap();
        let back: Polynomial64 = serde_json::from_str(&text).unwrap();
        prop_assert_eq!(&back, &p);
        prop_assert_eq!(serde_json::to_string(&back).unwrap(), text);
    }
}

#[test]
fn float_and_rational_lie_derivatives_agree() {
    // b(x) = x1^2 + (x2 - 1)^2 - 9/25 along f = (x2, x1 + x1^3/3 + x2)
    let q = |n: i64, d: i64| Q::new(n, d);
    let x1 = RationalPolynomial::var(2, 0);
    let x2 = RationalPolynomial::var(2, 1);
    let f = PolyVector::new(vec![x2.clone(), &(&x1 + &x1.pow(3).scale(&q(1, 3))) + &x2]).unwrap();
    let dy = &x2 - &RationalPolynomial::constant(2, q(1, 1));
    let b = &(&x1.pow(2) + &dy.pow(2)) - &RationalPolynomial::constant(2, q(9, 25));
    let exact = b.lie_derivative(&f).unwrap();

    let to_f64 = |r: &Q| *r.numer() as f64 / *r.denom() as f64;
    let bf = b.map_coefficients(to_f64);
    let ff = PolyVector::new(f.iter().map(|p| p.map_coefficients(to_f64)).collect()).unwrap();
    let approx = bf.lie_derivative(&ff).unwrap();

    for (pt, ptf) in [([q(1, 2), q(3, 1)], [0.5, 3.0]), ([q(-2, 3), q(1, 5)], [-2.0 / 3.0, 0.2])] {
        let e = to_f64(&exact.evaluate_exact(&pt).unwrap());
        let a = approx.evaluate(&ptf).unwrap();
        assert!((e - a).abs() <= 1e-12 * (1.0 + e.abs()), "{e} vs {a}");
    }
}
