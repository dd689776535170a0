use std::collections::BTreeMap;

use proptest::prelude::*;

use dnsym::scalar::rat;
use dnsym::{Jet, JetShape, Mono, Rational};

type R = Rational;
type Dense = BTreeMap<Vec<u32>, R>;

fn keep(shape: JetShape, m: &[u32]) -> bool {
    m[0] <= shape.k_r && m[1..].iter().sum::<u32>() <= shape.k_y
}

/// Term-by-term product on exponent vectors, truncated to `shape`.
fn dense_mul(a: &Dense, b: &Dense, shape: JetShape) -> Dense {
    let mut out = Dense::new();
    for (ma, ca) in a {
        for (mb, cb) in b {
            let m: Vec<u32> = ma.iter().zip(mb).map(|(x, y)| x + y).collect();
            if keep(shape, &m) {
                *out.entry(m).or_insert_with(|| rat(0, 1)) += ca * cb;
            }
        }
    }
    out.retain(|_, c| *c != rat(0, 1));
    out
}

fn dense_partial(a: &Dense, i: usize) -> Dense {
    let mut out = Dense::new();
    for (m, c) in a {
        if m[i] > 0 {
            let mut d = m.clone();
            d[i] -= 1;
            out.insert(d, c * rat::<R>(m[i] as i64, 1));
        }
    }
    out
}

fn to_dense(j: &Jet<R>) -> Dense {
    j.terms().map(|(m, c)| (m.exps(j.n()), c.clone())).filter(|(_, c)| *c != rat(0, 1)).collect()
}

fn from_dense(shape: JetShape, d: &Dense) -> Jet<R> {
    Jet::from_terms(shape, d.iter().map(|(m, c)| (Mono::from_exps(m), c.clone())))
}

fn dense(shape: JetShape, terms: &[(Vec<u32>, i64, i64)]) -> Dense {
    let mut d = Dense::new();
    for (m, p, q) in terms {
        let m: Vec<u32> = m.iter().take(shape.n).copied().collect();
        if keep(shape, &m) {
            *d.entry(m).or_insert_with(|| rat(0, 1)) += rat::<R>(*p, *q);
        }
    }
    d.retain(|_, c| *c != rat(0, 1));
    d
}

fn terms() -> impl Strategy<Value = Vec<(Vec<u32>, i64, i64)>> {
    prop::collection::vec((prop::collection::vec(0u32..4, 3), -5i64..=5, 1i64..=4), 0..8)
}

fn shapes() -> impl Strategy<Value = JetShape> {
    (2usize..=3, 0u32..=3, 0u32..=3).prop_map(|(n, kr, ky)| JetShape::new(n, kr, ky))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn product_matches_dense_oracle(s in shapes(), a in terms(), b in terms()) {
        let (da, db) = (dense(s, &a), dense(s, &b));
        let prod = &from_dense(s, &da) * &from_dense(s, &db);
        prop_assert_eq!(to_dense(&prod), dense_mul(&da, &db, s));
    }

    #[test]
    fn partials_match_dense_oracle(s in shapes(), a in terms(), i in 0usize..3) {
        let i = i % s.n;
        let da = dense(s, &a);
        let d = from_dense(s, &da).partial(i);
        let budget = if i == 0 { s.k_r } else { s.k_y };
        if budget == 0 {
            prop_assert!(d.is_err());
        } else {
            let d = d.unwrap();
            let want: Dense = dense_partial(&da, i).into_iter().filter(|(m, _)| keep(d.shape(), m)).collect();
            prop_assert_eq!(to_dense(&d), want);
        }
    }

    #[test]
    fn reciprocal_is_inverse(s in shapes(), a in terms(), c in 1i64..5) {
        let j = &from_dense(s, &dense(s, &a)) + &Jet::constant(s, rat(c, 1));
        let j = if j.constant_term() == rat(0, 1) { &j + &Jet::one(s) } else { j };
        let inv = j.reciprocal().unwrap();
        prop_assert_eq!(&j * &inv, Jet::one(s));
    }

    #[test]
    fn exp_is_a_homomorphism(s in shapes(), a in terms(), b in terms()) {
        let strip = |d: Dense| -> Jet<R> {
            from_dense(s, &d.into_iter().filter(|(m, _)| m.iter().any(|&e| e > 0)).collect())
        };
        let (x, y) = (strip(dense(s, &a)), strip(dense(s, &b)));
        let lhs = (&x + &y).exp().unwrap();
        let rhs = &x.exp().unwrap() * &y.exp().unwrap();
        prop_assert_eq!(&lhs, &rhs);
        prop_assert_eq!(lhs.ln().unwrap(), &x + &y);
    }

    #[test]
    fn square_root_of_a_square(s in shapes(), a in terms()) {
        let d: Dense = dense(s, &a).into_iter().filter(|(m, _)| m.iter().any(|&e| e > 0)).collect();
        let base = &from_dense(s, &d) + &Jet::constant(s, rat(3, 2));
        let r = (&base * &base).sqrt().unwrap();
        prop_assert_eq!(r, base);
    }

    #[test]
    fn radial_decomposition(s in shapes(), a in terms()) {
        let j = from_dense(s, &dense(s, &a));
        let coeffs: Vec<Jet<R>> = (0..=s.k_r).map(|m| j.radial_coefficient(m)).collect();
        prop_assert_eq!(Jet::from_radial(s, &coeffs), j);
    }
}

#[test]
fn combining_truncations_takes_the_minimum() {
    let a = Jet::<R>::variable(JetShape::new(3, 4, 2), 1);
    let b = Jet::<R>::variable(JetShape::new(3, 2, 3), 2);
    let p = &a * &b;
    assert_eq!((p.k_r(), p.k_y()), (2, 2));
    assert_eq!(p.coeff(Mono::from_exps(&[0, 1, 1])), rat(1, 1));
}

#[test]
fn mismatched_dimensions_do_not_combine() {
    let a = Jet::<R>::one(JetShape::new(3, 2, 2));
    let b = Jet::<R>::one(JetShape::new(2, 2, 2));
    assert!(a.checked_mul(&b).is_err());
}
