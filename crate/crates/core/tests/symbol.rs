use proptest::prelude::*;

use dnsym::dn::dn_symbol_scalar;
use dnsym::random::random_instance;
use dnsym::symbol::{compose, HomSymbol};
use dnsym::{JetShape, Rational};

type R = Rational;

fn components(seed: u64) -> Vec<HomSymbol<R>> {
    let s = JetShape::new(3, 4, 3);
    let (g, v) = random_instance::<R>(seed, s);
    dn_symbol_scalar(&g, &v, 3).unwrap().symbol.components().cloned().collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn w_squared_is_q2(seed in 0u64..10_000) {
        let (g, _) = random_instance::<R>(seed, JetShape::new(3, 2, 2));
        let w = HomSymbol::w(g.ctx());
        prop_assert!(w.checked_mul(&w).unwrap().equals(&HomSymbol::q2(g.ctx())).unwrap());
    }

    #[test]
    fn components_are_homogeneous(seed in 0u64..10_000, x in -3.0f64..3.0, y in -3.0f64..3.0, t in 0.25f64..4.0) {
        prop_assume!(x.abs() + y.abs() > 0.1);
        for c in components(seed) {
            let a = c.eval_at_base(&[t * x, t * y]);
            let b = c.eval_at_base(&[x, y]) * t.powi(c.degree());
            prop_assert!((a - b).norm() <= 1e-9 * (1.0 + b.norm()), "grade {}", c.degree());
        }
    }

    #[test]
    fn leibniz_in_fibre_and_base(seed in 0u64..10_000, alpha in 0usize..2) {
        let cs = components(seed);
        let (a, b) = (&cs[0], &cs[1]);
        let ab = a.checked_mul(b).unwrap();
        let fibre = a.partial_xi(alpha).checked_mul(b).unwrap().checked_add(&a.checked_mul(&b.partial_xi(alpha)).unwrap()).unwrap();
        prop_assert!(ab.partial_xi(alpha).equals(&fibre).unwrap());
        let d = alpha + 1;
        let base = a.partial_base(d).unwrap().checked_mul(b).unwrap()
            .checked_add(&a.checked_mul(&b.partial_base(d).unwrap()).unwrap()).unwrap();
        prop_assert!(ab.partial_base(d).unwrap().equals(&base).unwrap());
    }
}

#[test]
fn composition_is_associative_on_determined_grades() {
    let s = JetShape::new(3, 4, 3);
    let (g, v) = random_instance::<R>(41, s);
    let b = dn_symbol_scalar(&g, &v, 3).unwrap().symbol;
    let left = compose(&compose(&b, &b).unwrap(), &b).unwrap();
    let right = compose(&b, &compose(&b, &b).unwrap()).unwrap();
    let mut compared = 0;
    for grade in left.grades() {
        if let (Some(l), Some(r)) = (left.get(grade), right.get(grade)) {
            assert!(l.equals(r).unwrap(), "grade {grade}");
            compared += 1;
        }
    }
    assert!(compared >= 2);
}

#[test]
fn principal_component_is_minus_w() {
    for seed in 0..3 {
        let cs = components(seed);
        assert_eq!(cs[0].degree(), 1);
        assert!(cs[0].equals(&HomSymbol::w(cs[0].ctx()).neg()).unwrap());
    }
}
