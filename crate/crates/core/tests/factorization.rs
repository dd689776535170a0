use num_complex::Complex;
use proptest::prelude::*;

use dnsym::dn::dn_symbol_scalar;
use dnsym::factorization::{factorize_gauge, factorize_scalar, scalar_input, solve, FactorizationResult, Verdict};
use dnsym::geometry::{GaugeData, GaugeTag, WeightJet};
use dnsym::mono::monomials_of_degree;
use dnsym::random::random_instance;
use dnsym::symbol::HomSymbol;
use dnsym::{JetShape, Rational};

type R = Rational;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(6))]

    #[test]
    fn residual_vanishes_on_random_instances(seed in 0u64..10_000) {
        let s = JetShape::new(3, 4, 3);
        let (g, v) = random_instance::<R>(seed, s);
        for tag in [GaugeTag::GaugeS, GaugeTag::GaugeSigma] {
            let gauge = match tag {
                GaugeTag::GaugeS => GaugeData::gauge_s(&g, &v).unwrap(),
                _ => GaugeData::gauge_sigma(&g, &v).unwrap(),
            };
            let f = factorize_gauge(&g, &gauge, 3).unwrap();
            prop_assert_eq!(f.verify_residual().unwrap(), Verdict::Pass);
        }
        let f = factorize_scalar(&g, &v, 3).unwrap();
        prop_assert_eq!(f.verify_residual().unwrap(), Verdict::Pass);
    }
}

/// `sum_{|K|=2} (1/K!) ∂_ξ^K b_1 D_y^K b_1` with `b_1 = -w`, `D = -i ∂`.
fn second_order_self_composition(b1: &HomSymbol<R>) -> HomSymbol<R> {
    let mut acc: Option<HomSymbol<R>> = None;
    for k in monomials_of_degree(2, 2) {
        let fact = k.factorial() as i64;
        // (-i)² / K!
        let c = Complex::new(Rational::new((-1).into(), fact.into()), Rational::from_integer(0.into()));
        let t = b1.partial_xi_multi(k).checked_mul(&b1.partial_y_multi(k).unwrap()).unwrap().scale(&c);
        acc = Some(match acc {
            None => t,
            Some(a) => a.checked_add(&t).unwrap(),
        });
    }
    acc.unwrap()
}

#[test]
fn grade_zero_needs_the_second_order_term() {
    let s = JetShape::new(3, 4, 3);
    let (g, _) = random_instance::<R>(3, s);
    let b1 = HomSymbol::w(g.ctx()).neg();
    let term = second_order_self_composition(&b1);
    assert_eq!(term.degree(), 0);
    assert!(!term.is_zero());
    // for a flat metric it vanishes
    let flat = dnsym::geometry::BoundaryMetricJet::<R>::flat(s);
    assert!(second_order_self_composition(&HomSymbol::w(flat.ctx()).neg()).is_zero());
}

#[test]
fn drift_term_needs_the_imaginary_unit() {
    let s = JetShape::new(3, 4, 3);
    let (g, v) = random_instance::<R>(5, s);
    let input = scalar_input(&g, &v).unwrap();
    let mut wrong = input.clone();
    // the coefficient printed without the factor i
    let minus_i = Complex::new(Rational::from_integer(0.into()), Rational::from_integer((-1).into()));
    wrong.q.q1 = wrong.q.q1.scale(&minus_i);
    let f = solve(&g, wrong, 3, &[]).unwrap();
    let checked = FactorizationResult { input, ..f };
    assert_eq!(checked.verify_residual().unwrap(), Verdict::Fail { grade: 0 });
}

#[test]
fn float_backend_matches_rational() {
    let s = JetShape::new(3, 5, 4);
    let (g, v) = random_instance::<R>(9, s);
    let (gf, vf) = random_instance::<f64>(9, s);
    let exact = dn_symbol_scalar(&g, &v, 4).unwrap();
    let float = dn_symbol_scalar(&gf, &vf, 4).unwrap();
    for xi in [[1.0, 0.0], [0.3, -1.2], [2.0, 0.5]] {
        for grade in [1, 0, -1, -2] {
            let a = exact.observable_f64(grade, &xi).unwrap();
            let b = float.observable_f64(grade, &xi).unwrap();
            assert!((a - b).norm() <= 1e-9 * (1.0 + a.norm()), "grade {grade}: {a} vs {b}");
        }
    }
}

#[test]
fn constant_weight_shift_only_rescales_scalar_data() {
    let s = JetShape::new(3, 4, 3);
    let (g, v) = random_instance::<R>(12, s);
    let shifted = WeightJet::new(&v.v + &dnsym::Jet::constant(s, Rational::new(3.into(), 2.into())));
    let a = dn_symbol_scalar(&g, &v, 3).unwrap();
    let b = dn_symbol_scalar(&g, &shifted, 3).unwrap();
    for (x, y) in a.symbol.components().zip(b.symbol.components()) {
        assert!(x.equals(&y.rehomed(x.ctx()).unwrap()).unwrap());
    }
    assert_ne!(a.density.log_factor, b.density.log_factor);
}
