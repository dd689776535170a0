//! Seeded random instances with small rational coefficients.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::geometry::{BoundaryMetricJet, WeightJet};
use crate::jet::{Jet, JetShape};
use crate::mono::{monomials_of_degree, Mono};
use crate::scalar::Scalar;

pub type InstanceRng = ChaCha8Rng;

pub fn rng(seed: u64) -> InstanceRng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Every multi-index retained by `shape` except the constant one.
fn nonconstant_monomials(shape: JetShape) -> Vec<Mono> {
    let mut out = Vec::new();
    for deg in 1..=shape.k_r + shape.k_y {
        out.extend(monomials_of_degree(shape.n, deg).into_iter().filter(|m| shape.contains(*m)));
    }
    out
}

fn small_rational<T: Scalar>(rng: &mut InstanceRng) -> T {
    let num = loop {
        let v: i64 = rng.gen_range(-3..=3);
        if v != 0 {
            break v;
        }
    };
    T::from_ratio(num, rng.gen_range(1..=4))
}

/// `terms` random non-constant monomials with small rational coefficients.
pub fn random_perturbation<T: Scalar>(rng: &mut InstanceRng, shape: JetShape, terms: usize) -> Jet<T> {
    let monos = nonconstant_monomials(shape);
    let picks: Vec<Mono> = monos.choose_multiple(rng, terms.min(monos.len())).copied().collect();
    Jet::from_terms(shape, picks.into_iter().map(|m| (m, small_rational(rng))))
}

/// A symmetric `g_{αβ}` whose constant term is diagonally dominant (hence
/// positive definite), with `terms` random monomials per entry.
pub fn random_metric<T: Scalar>(rng: &mut InstanceRng, shape: JetShape, terms: usize) -> BoundaryMetricJet<T> {
    let m = shape.n - 1;
    let mut g: Vec<Vec<Jet<T>>> = vec![vec![Jet::zero(shape); m]; m];
    let off_den = 2 * m as i64;
    for a in 0..m {
        for b in a..m {
            let c = if a == b {
                T::from_int(rng.gen_range(1..=2))
            } else {
                T::from_ratio(rng.gen_range(-1..=1), off_den)
            };
            let e = &Jet::constant(shape, c) + &random_perturbation(rng, shape, terms);
            g[a][b] = e.clone();
            g[b][a] = e;
        }
    }
    BoundaryMetricJet::from_lower(g).expect("diagonally dominant constant term")
}

/// A weight with `V(0) = 0` and `terms` random monomials.
pub fn random_weight<T: Scalar>(rng: &mut InstanceRng, shape: JetShape, terms: usize) -> WeightJet<T> {
    WeightJet::new(random_perturbation(rng, shape, terms))
}

/// Random metric (three monomials per entry) and a weight with a
/// nonzero value, a nonvanishing radial profile and a few random terms.
pub fn random_instance<T: Scalar>(seed: u64, shape: JetShape) -> (BoundaryMetricJet<T>, WeightJet<T>) {
    let mut r = rng(seed);
    let g = random_metric(&mut r, shape, 3);
    let radial: Vec<Jet<T>> = (0..shape.k_r as i64)
        .map(|m| Jet::constant(shape.boundary(), T::from_ratio(m % 3 + 1, m + 2)))
        .collect();
    let v = &random_weight::<T>(&mut r, shape, 4).v + &Jet::from_radial(shape, &radial);
    let v = &v + &random_perturbation(&mut r, shape, 2);
    (g, WeightJet::new(v))
}
