//! Truncated multivariate power series around a boundary base point.
//!
//! Variable 0 is the inward normal coordinate `r`, variables `1..n` are the
//! tangential coordinates `y^1..y^{n-1}`. A jet keeps two truncation orders:
//! `k_r` bounds the exponent of `r` and `k_y` bounds the total tangential
//! degree. Sums and products of jets with different orders are taken at the
//! smaller order, which is the only information both operands carry.

use std::collections::BTreeMap;
use std::ops::{Add, Mul, Neg, Sub};

use num_complex::Complex;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mono::Mono;
use crate::scalar::{Field, Scalar};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct JetShape {
    /// Ambient dimension; the jet has `n` variables.
    pub n: usize,
    pub k_r: u32,
    pub k_y: u32,
    /// Label of the boundary base point.
    pub base: u32,
}

impl JetShape {
    pub fn new(n: usize, k_r: u32, k_y: u32) -> Self {
        assert!((1..=crate::mono::MAX_VARS).contains(&n), "dimension out of range");
        JetShape { n, k_r, k_y, base: 0 }
    }

    #[inline]
    pub fn contains(&self, m: Mono) -> bool {
        let r = m.exp(0);
        r <= self.k_r && m.total() - r <= self.k_y
    }

    pub fn meet(&self, other: &JetShape) -> Result<JetShape> {
        if self.n != other.n || self.base != other.base {
            return Err(Error::Incompatible(format!(
                "jets over (n={}, base={}) and (n={}, base={})",
                self.n, self.base, other.n, other.base
            )));
        }
        Ok(JetShape {
            k_r: self.k_r.min(other.k_r),
            k_y: self.k_y.min(other.k_y),
            ..*self
        })
    }

    pub fn with_orders(&self, k_r: u32, k_y: u32) -> JetShape {
        JetShape { k_r, k_y, ..*self }
    }

    /// Shape of the restriction to `r = 0`.
    pub fn boundary(&self) -> JetShape {
        self.with_orders(0, self.k_y)
    }
}

#[derive(Clone, Debug)]
pub struct Jet<F> {
    shape: JetShape,
    coeffs: BTreeMap<Mono, F>,
}

impl<F: Field> PartialEq for Jet<F> {
    /// Equality of the information both jets carry: coefficients agree on the
    /// common truncation.
    fn eq(&self, other: &Self) -> bool {
        match self.shape.meet(&other.shape) {
            Ok(s) => {
                let a = self.truncated(s.k_r, s.k_y);
                let b = other.truncated(s.k_r, s.k_y);
                a.coeffs == b.coeffs
            }
            Err(_) => false,
        }
    }
}

impl<F: Field> Jet<F> {
    pub fn zero(shape: JetShape) -> Self {
        Jet { shape, coeffs: BTreeMap::new() }
    }

    pub fn constant(shape: JetShape, c: F) -> Self {
        let mut j = Self::zero(shape);
        if !c.is_zero() {
            j.coeffs.insert(Mono::ONE, c);
        }
        j
    }

    pub fn one(shape: JetShape) -> Self {
        Self::constant(shape, F::one())
    }

    /// The coordinate function `x^i` (`i = 0` is `r`).
    pub fn variable(shape: JetShape, i: usize) -> Self {
        Self::monomial(shape, Mono::var(i), F::one())
    }

    pub fn monomial(shape: JetShape, m: Mono, c: F) -> Self {
        let mut j = Self::zero(shape);
        if shape.contains(m) && !c.is_zero() {
            j.coeffs.insert(m, c);
        }
        j
    }

    /// Builds a jet from `(exponents, value)` pairs; terms beyond the
    /// truncation are dropped, repeated indices are summed.
    pub fn from_terms<I>(shape: JetShape, terms: I) -> Self
    where
        I: IntoIterator<Item = (Mono, F)>,
    {
        let mut j = Self::zero(shape);
        for (m, c) in terms {
            if shape.contains(m) {
                j.accumulate(m, &c);
            }
        }
        j
    }

    #[inline]
    fn accumulate(&mut self, m: Mono, c: &F) {
        match self.coeffs.get_mut(&m) {
            Some(v) => {
                v.add_assign_ref(c);
                if v.is_zero() {
                    self.coeffs.remove(&m);
                }
            }
            None => {
                if !c.is_zero() {
                    self.coeffs.insert(m, c.clone());
                }
            }
        }
    }

    pub fn shape(&self) -> JetShape {
        self.shape
    }

    pub fn n(&self) -> usize {
        self.shape.n
    }

    pub fn k_r(&self) -> u32 {
        self.shape.k_r
    }

    pub fn k_y(&self) -> u32 {
        self.shape.k_y
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Mono, &F)> {
        self.coeffs.iter()
    }

    pub fn len(&self) -> usize {
        self.coeffs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn coeff(&self, m: Mono) -> F {
        self.coeffs.get(&m).cloned().unwrap_or_else(F::zero)
    }

    pub fn constant_term(&self) -> F {
        self.coeff(Mono::ONE)
    }

    /// All coefficients negligible (exactly zero for exact backends).
    pub fn is_zero(&self) -> bool {
        self.coeffs.values().all(|c| c.is_negligible())
    }

    pub fn truncated(&self, k_r: u32, k_y: u32) -> Self {
        let shape = self.shape.with_orders(k_r.min(self.shape.k_r), k_y.min(self.shape.k_y));
        let coeffs = self
            .coeffs
            .iter()
            .filter(|(m, _)| shape.contains(**m))
            .map(|(m, c)| (*m, c.clone()))
            .collect();
        Jet { shape, coeffs }
    }

    /// Re-labels the truncation. Raising an order asserts that the missing
    /// coefficients are zero.
    pub fn with_orders(&self, k_r: u32, k_y: u32) -> Self {
        let mut j = self.truncated(k_r, k_y);
        j.shape = self.shape.with_orders(k_r, k_y);
        j
    }

    pub fn checked_add(&self, other: &Self) -> Result<Self> {
        let shape = self.shape.meet(&other.shape)?;
        let mut out = self.truncated(shape.k_r, shape.k_y);
        out.shape = shape;
        for (m, c) in &other.coeffs {
            if shape.contains(*m) {
                out.accumulate(*m, c);
            }
        }
        Ok(out)
    }

    pub fn checked_sub(&self, other: &Self) -> Result<Self> {
        self.checked_add(&other.neg_ref())
    }

    pub fn neg_ref(&self) -> Self {
        Jet {
            shape: self.shape,
            coeffs: self.coeffs.iter().map(|(m, c)| (*m, c.neg_ref())).collect(),
        }
    }

    pub fn scale(&self, s: &F) -> Self {
        if s.is_zero() {
            return Self::zero(self.shape);
        }
        let coeffs = self
            .coeffs
            .iter()
            .map(|(m, c)| (*m, c.mul_ref(s)))
            .filter(|(_, c)| !c.is_zero())
            .collect();
        Jet { shape: self.shape, coeffs }
    }

    /// Truncated Cauchy product.
    pub fn checked_mul(&self, other: &Self) -> Result<Self> {
        let shape = self.shape.meet(&other.shape)?;
        let lhs: Vec<(Mono, u32, u32, &F)> = self
            .coeffs
            .iter()
            .filter(|(m, _)| shape.contains(**m))
            .map(|(m, c)| (*m, m.exp(0), m.total() - m.exp(0), c))
            .collect();
        let mut out = Self::zero(shape);
        for (mb, cb) in &other.coeffs {
            let (rb, yb) = (mb.exp(0), mb.total() - mb.exp(0));
            if rb > shape.k_r || yb > shape.k_y {
                continue;
            }
            for (ma, ra, ya, ca) in &lhs {
                if ra + rb <= shape.k_r && ya + yb <= shape.k_y {
                    out.accumulate(ma.mul(*mb), &ca.mul_ref(cb));
                }
            }
        }
        Ok(out)
    }

    /// Power series `sum_k coeffs[k] x^k` for `x` without constant term.
    fn series(x: &Self, coeffs: &[F]) -> Self {
        debug_assert!(x.constant_term().is_negligible());
        let mut acc = Self::zero(x.shape);
        for c in coeffs.iter().rev() {
            acc = &(&acc * x) + &Self::constant(x.shape, c.clone());
        }
        acc
    }

    /// Number of series terms after which `x^k` vanishes for nilpotent `x`.
    fn nilpotency(&self) -> usize {
        (self.shape.k_r + self.shape.k_y) as usize + 1
    }

    pub fn reciprocal(&self) -> Result<Self> {
        let a0 = self.constant_term();
        let inv0 = a0.inv().ok_or(Error::NonUnit)?;
        // a = a0 (1 + x)  =>  1/a = inv0 * sum (-x)^k
        let x = &self.scale(&inv0) - &Self::one(self.shape);
        let coeffs: Vec<F> = (0..self.nilpotency())
            .map(|k| if k % 2 == 0 { F::one() } else { F::one().neg_ref() })
            .collect();
        Ok(Self::series(&x, &coeffs).scale(&inv0))
    }

    pub fn checked_div(&self, other: &Self) -> Result<Self> {
        self.checked_mul(&other.reciprocal()?)
    }

    /// Formal partial derivative; the order in that direction drops by one.
    pub fn partial(&self, direction: usize) -> Result<Self> {
        if direction >= self.shape.n {
            return Err(Error::Invalid(format!("no direction {direction} in dimension {}", self.shape.n)));
        }
        let shape = if direction == 0 {
            if self.shape.k_r == 0 {
                return Err(Error::Budget { direction });
            }
            self.shape.with_orders(self.shape.k_r - 1, self.shape.k_y)
        } else {
            if self.shape.k_y == 0 {
                return Err(Error::Budget { direction });
            }
            self.shape.with_orders(self.shape.k_r, self.shape.k_y - 1)
        };
        let mut out = Self::zero(shape);
        for (m, c) in &self.coeffs {
            let e = m.exp(direction);
            if let Some(q) = m.div_var(direction) {
                if shape.contains(q) {
                    out.accumulate(q, &c.mul_ref(&F::from_int(e as i64)));
                }
            }
        }
        Ok(out)
    }

    /// Tangential derivative `∂_y^K` for a multi-index over `y^1..y^{n-1}`
    /// (index `i` of `k` refers to `y^{i+1}`).
    pub fn partial_tangential(&self, k: Mono) -> Result<Self> {
        let mut out = self.clone();
        for i in 0..self.shape.n - 1 {
            for _ in 0..k.exp(i) {
                out = out.partial(i + 1)?;
            }
        }
        Ok(out)
    }

    /// Restriction to `r = 0`.
    pub fn restrict_boundary(&self) -> Self {
        self.truncated(0, self.shape.k_y)
    }

    /// `∂_r^m` at `r = 0`, a jet in `y` alone.
    pub fn radial_coefficient(&self, m: u32) -> Self {
        let shape = self.shape.boundary();
        let mut fact = F::one();
        for i in 1..=m {
            fact = fact.mul_ref(&F::from_int(i as i64));
        }
        let mut out = Self::zero(shape);
        for (mono, c) in &self.coeffs {
            if mono.exp(0) == m {
                let q = strip_r(*mono);
                out.accumulate(q, &c.mul_ref(&fact));
            }
        }
        out
    }

    /// `sum_m r^m / m! * c_m` where every `c_m` is a jet in `y` alone.
    pub fn from_radial(shape: JetShape, coefficients: &[Self]) -> Self {
        let mut out = Self::zero(shape);
        let mut fact = F::one();
        for (m, c) in coefficients.iter().enumerate() {
            if m > 0 {
                fact = fact.mul_ref(&F::from_int(m as i64));
            }
            if m as u32 > shape.k_r {
                break;
            }
            let inv = fact.inv().expect("factorial is a unit");
            for (mono, v) in &c.coeffs {
                let q = strip_r(*mono).mul(Mono::from_exps(&[m as u32]));
                if shape.contains(q) {
                    out.accumulate(q, &v.mul_ref(&inv));
                }
            }
        }
        out
    }

    pub fn map<G: Field>(&self, f: impl Fn(&F) -> G) -> Jet<G> {
        Jet {
            shape: self.shape,
            coeffs: self
                .coeffs
                .iter()
                .map(|(m, c)| (*m, f(c)))
                .filter(|(_, c)| !c.is_zero())
                .collect(),
        }
    }

    /// Largest coefficient magnitude.
    pub fn max_magnitude(&self) -> f64 {
        self.coeffs.values().map(|c| c.magnitude()).fold(0.0, f64::max)
    }
}

fn strip_r(m: Mono) -> Mono {
    let mut e = m.exps(crate::mono::MAX_VARS);
    e[0] = 0;
    Mono::from_exps(&e)
}

impl<T: Scalar> Jet<T> {
    pub fn complexify(&self) -> Jet<Complex<T>> {
        self.map(|c| Complex::new(c.clone(), T::zero()))
    }

    fn unit_part(&self) -> Result<(T, Self)> {
        let a0 = self.constant_term();
        if !(a0 > T::zero()) || a0.is_negligible() {
            return Err(Error::NonPositive(format!("constant term {a0:?}")));
        }
        let inv0 = a0.inv().ok_or(Error::NonUnit)?;
        Ok((a0, &self.scale(&inv0) - &Self::one(self.shape)))
    }

    /// Positive `k`-th root; requires a positive constant term whose root is
    /// representable in the backend.
    pub fn root(&self, k: u32) -> Result<Self> {
        let (a0, x) = self.unit_part()?;
        let s0 = a0.root_exact(k).ok_or_else(|| Error::Backend {
            backend: T::NAME,
            what: format!("{k}-th root of {a0:?}"),
        })?;
        // binomial series for (1 + x)^(1/k)
        let alpha = T::from_ratio(1, k as i64);
        let mut coeffs = vec![T::one()];
        let mut c = T::one();
        for j in 0..self.nilpotency() {
            let jt = T::from_int(j as i64);
            c = c.mul_ref(&alpha.sub_ref(&jt)).mul_ref(&T::from_int(j as i64 + 1).inv().unwrap());
            coeffs.push(c.clone());
        }
        Ok(Self::series(&x, &coeffs).scale(&s0))
    }

    pub fn sqrt(&self) -> Result<Self> {
        self.root(2)
    }

    /// Exponential. The exact backend needs a vanishing constant term.
    pub fn exp(&self) -> Result<Self> {
        let a0 = self.constant_term();
        let e0 = a0.exp_exact().ok_or_else(|| Error::Backend {
            backend: T::NAME,
            what: format!("exp of constant term {a0:?}"),
        })?;
        let x = &self.clone() - &Self::constant(self.shape, a0);
        let mut coeffs = vec![T::one()];
        let mut c = T::one();
        for k in 1..=self.nilpotency() {
            c = c.mul_ref(&T::from_int(k as i64).inv().unwrap());
            coeffs.push(c.clone());
        }
        Ok(Self::series(&x, &coeffs).scale(&e0))
    }

    /// Natural logarithm. The exact backend needs constant term one.
    pub fn ln(&self) -> Result<Self> {
        let (a0, x) = self.unit_part()?;
        let l0 = a0.ln_exact().ok_or_else(|| Error::Backend {
            backend: T::NAME,
            what: format!("ln of constant term {a0:?}"),
        })?;
        let mut coeffs = vec![T::zero()];
        for k in 1..=self.nilpotency() {
            let c = T::from_ratio(1, k as i64);
            coeffs.push(if k % 2 == 1 { c } else { c.neg_ref() });
        }
        Ok(&Self::series(&x, &coeffs) + &Self::constant(self.shape, l0))
    }

    /// Evaluates the truncated polynomial at a point in `f64`.
    pub fn eval_f64(&self, point: &[f64]) -> f64 {
        self.coeffs
            .iter()
            .map(|(m, c)| {
                let mut v = c.to_f64();
                for (i, x) in point.iter().enumerate() {
                    v *= x.powi(m.exp(i) as i32);
                }
                v
            })
            .sum()
    }
}

macro_rules! jet_binop {
    ($tr:ident, $method:ident, $checked:ident) => {
        impl<'a, 'b, F: Field> $tr<&'b Jet<F>> for &'a Jet<F> {
            type Output = Jet<F>;
            fn $method(self, rhs: &'b Jet<F>) -> Jet<F> {
                self.$checked(rhs).expect("jet operands over different dimensions or base points")
            }
        }
        impl<F: Field> $tr<Jet<F>> for Jet<F> {
            type Output = Jet<F>;
            fn $method(self, rhs: Jet<F>) -> Jet<F> {
                (&self).$method(&rhs)
            }
        }
    };
}

jet_binop!(Add, add, checked_add);
jet_binop!(Sub, sub, checked_sub);
jet_binop!(Mul, mul, checked_mul);

impl<F: Field> Neg for &Jet<F> {
    type Output = Jet<F>;
    fn neg(self) -> Jet<F> {
        self.neg_ref()
    }
}

impl<F: Field> Neg for Jet<F> {
    type Output = Jet<F>;
    fn neg(self) -> Jet<F> {
        self.neg_ref()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::{rat, Rational};

    type J = Jet<Rational>;

    fn shape() -> JetShape {
        JetShape::new(3, 4, 3)
    }

    fn m(e: &[u32]) -> Mono {
        Mono::from_exps(e)
    }

    #[test]
    fn difference_of_squares() {
        let s = shape();
        let r = J::variable(s, 0);
        let one = J::one(s);
        let p = &(&one + &r) * &(&one - &r);
        let expect = &one - &(&r * &r);
        assert_eq!(p, expect);
        assert_eq!(&p * &one, p);
    }

    #[test]
    fn geometric_series() {
        let s = shape();
        let a = &J::one(s) - &J::variable(s, 0);
        let inv = a.reciprocal().unwrap();
        for k in 0..=4 {
            assert_eq!(inv.coeff(m(&[k])), rat(1, 1));
        }
        assert_eq!(inv.len(), 5);
        assert_eq!(J::zero(s).reciprocal(), Err(Error::NonUnit));
    }

    #[test]
    fn sqrt_of_perfect_square() {
        let s = shape();
        let r = J::variable(s, 0);
        let one = J::one(s);
        let sq = &(&one + &r) * &(&one + &r);
        assert_eq!(sq.sqrt().unwrap(), &one + &r);
        assert!(matches!((&one * &J::constant(s, rat(2, 1))).sqrt(), Err(Error::Backend { .. })));
        assert!(matches!((-&one).sqrt(), Err(Error::NonPositive(_))));
    }

    #[test]
    fn partials() {
        let s = shape();
        let f = J::monomial(s, m(&[2, 1]), rat(1, 1));
        let d = f.partial(0).unwrap();
        assert_eq!(d, J::monomial(s, m(&[1, 1]), rat(2, 1)));
        assert_eq!(d.k_r(), 3);
        let g = J::monomial(s, m(&[2]), rat(1, 1));
        assert!(g.partial(1).unwrap().is_zero());
        let flat = J::one(s.with_orders(0, 0));
        assert_eq!(flat.partial(0), Err(Error::Budget { direction: 0 }));
        assert_eq!(flat.partial(2), Err(Error::Budget { direction: 2 }));
    }

    #[test]
    fn exp_series_and_backend_guard() {
        let s = shape();
        let e = J::variable(s, 0).exp().unwrap();
        let mut f = 1i64;
        for k in 0..=4u32 {
            if k > 0 {
                f *= k as i64;
            }
            assert_eq!(e.coeff(m(&[k])), rat(1, f));
        }
        assert_eq!(J::zero(s).exp().unwrap(), J::one(s));
        assert!(matches!(J::one(s).exp(), Err(Error::Backend { .. })));
        let fe = Jet::<f64>::one(s).exp().unwrap();
        assert!((fe.constant_term() - std::f64::consts::E).abs() < 1e-15);
    }

    #[test]
    fn radial_round_trip() {
        let s = shape();
        let f = J::from_terms(
            s,
            [(m(&[0, 1]), rat(1, 1)), (m(&[2]), rat(3, 1)), (m(&[3, 0, 1]), rat(-1, 2))],
        );
        let cs: Vec<J> = (0..=4).map(|k| f.radial_coefficient(k)).collect();
        assert_eq!(cs[2].constant_term(), rat(6, 1));
        assert_eq!(J::from_radial(s, &cs), f);
    }

    #[test]
    fn incompatible_dimensions() {
        let a = J::one(JetShape::new(3, 2, 2));
        let b = J::one(JetShape::new(4, 2, 2));
        assert!(matches!(a.checked_mul(&b), Err(Error::Incompatible(_))));
    }

    #[test]
    fn ln_inverts_exp() {
        let s = shape();
        let a = J::from_terms(s, [(m(&[1]), rat(1, 2)), (m(&[0, 1, 1]), rat(-2, 3))]);
        assert_eq!(a.exp().unwrap().ln().unwrap(), a);
    }
}
