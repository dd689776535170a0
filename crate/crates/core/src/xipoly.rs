//! Polynomials in the fibre variable `ξ' = (ξ_1..ξ_{n-1})` whose coefficients
//! are complex jets.

use std::collections::BTreeMap;

use num_complex::Complex;

use crate::error::Result;
use crate::jet::{Jet, JetShape};
use crate::mono::Mono;
use crate::scalar::{Field, Scalar};

pub type CJet<T> = Jet<Complex<T>>;

#[derive(Clone, Debug)]
pub struct XiPoly<T: Scalar> {
    shape: JetShape,
    terms: BTreeMap<Mono, CJet<T>>,
}

impl<T: Scalar> XiPoly<T> {
    pub fn zero(shape: JetShape) -> Self {
        XiPoly { shape, terms: BTreeMap::new() }
    }

    pub fn constant(c: CJet<T>) -> Self {
        let mut p = Self::zero(c.shape());
        p.add_term(Mono::ONE, c);
        p
    }

    pub fn monomial(m: Mono, c: CJet<T>) -> Self {
        let mut p = Self::zero(c.shape());
        p.add_term(m, c);
        p
    }

    pub fn shape(&self) -> JetShape {
        self.shape
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Mono, &CJet<T>)> {
        self.terms.iter()
    }

    pub fn coeff(&self, m: Mono) -> CJet<T> {
        self.terms.get(&m).cloned().unwrap_or_else(|| Jet::zero(self.shape))
    }

    pub fn is_zero(&self) -> bool {
        self.terms.values().all(|c| c.is_zero())
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    /// Adds `c ξ^m`; the coefficient is brought to the polynomial's shape
    /// (the shape shrinks if `c` is known to lower order).
    pub fn add_term(&mut self, m: Mono, c: CJet<T>) {
        let s = self.shape.meet(&c.shape()).expect("coefficient over a different chart");
        if s != self.shape {
            self.restrict_to(s);
        }
        let c = c.truncated(s.k_r, s.k_y);
        if c.is_empty() {
            return;
        }
        match self.terms.remove(&m) {
            Some(old) => {
                let v = &old + &c;
                if !v.is_empty() {
                    self.terms.insert(m, v);
                }
            }
            None => {
                self.terms.insert(m, c);
            }
        }
    }

    fn restrict_to(&mut self, s: JetShape) {
        self.shape = s;
        let terms = std::mem::take(&mut self.terms);
        for (m, c) in terms {
            let c = c.truncated(s.k_r, s.k_y);
            if !c.is_empty() {
                self.terms.insert(m, c);
            }
        }
    }

    pub fn truncated(&self, k_r: u32, k_y: u32) -> Self {
        let mut p = self.clone();
        p.restrict_to(self.shape.with_orders(k_r.min(self.shape.k_r), k_y.min(self.shape.k_y)));
        p
    }

    pub fn add(&self, other: &Self) -> Self {
        let mut out = self.clone();
        for (m, c) in &other.terms {
            out.add_term(*m, c.clone());
        }
        if other.shape.k_r < out.shape.k_r || other.shape.k_y < out.shape.k_y {
            let s = out.shape.meet(&other.shape).unwrap();
            out.restrict_to(s);
        }
        out
    }

    pub fn neg(&self) -> Self {
        XiPoly {
            shape: self.shape,
            terms: self.terms.iter().map(|(m, c)| (*m, -c)).collect(),
        }
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.neg())
    }

    pub fn scale(&self, c: &Complex<T>) -> Self {
        let mut out = Self::zero(self.shape);
        for (m, v) in &self.terms {
            out.add_term(*m, v.scale(c));
        }
        out
    }

    pub fn mul_jet(&self, j: &CJet<T>) -> Self {
        let s = self.shape.meet(&j.shape()).expect("coefficient over a different chart");
        let mut out = Self::zero(s);
        for (m, v) in &self.terms {
            out.add_term(*m, v * j);
        }
        out
    }

    pub fn mul(&self, other: &Self) -> Self {
        let s = self.shape.meet(&other.shape).expect("polynomials over different charts");
        let mut acc: BTreeMap<Mono, CJet<T>> = BTreeMap::new();
        for (ma, ca) in &self.terms {
            for (mb, cb) in &other.terms {
                let prod = ca * cb;
                let key = ma.mul(*mb);
                match acc.get_mut(&key) {
                    Some(v) => *v = &*v + &prod,
                    None => {
                        acc.insert(key, prod);
                    }
                }
            }
        }
        let mut out = Self::zero(s);
        for (m, c) in acc {
            out.add_term(m, c);
        }
        out
    }

    /// `∂/∂ξ_α` (0-based `alpha`).
    pub fn partial_xi(&self, alpha: usize) -> Self {
        let mut out = Self::zero(self.shape);
        for (m, c) in &self.terms {
            if let Some(q) = m.div_var(alpha) {
                out.add_term(q, c.scale(&Complex::from_int(m.exp(alpha) as i64)));
            }
        }
        out
    }

    /// Derivative of every coefficient in base direction `dir` (0 = `r`).
    pub fn partial_base(&self, dir: usize) -> Result<Self> {
        let zero = Jet::<Complex<T>>::zero(self.shape).partial(dir)?;
        let mut out = Self::zero(zero.shape());
        for (m, c) in &self.terms {
            out.add_term(*m, c.partial(dir)?);
        }
        Ok(out)
    }

    pub fn map_coeffs(&self, f: impl Fn(&CJet<T>) -> CJet<T>) -> Self {
        let mut it = self.terms.iter().map(|(m, c)| (*m, f(c))).peekable();
        let shape = it.peek().map_or_else(|| f(&Jet::zero(self.shape)).shape(), |(_, c)| c.shape());
        let mut out = Self::zero(shape);
        for (m, c) in it {
            out.add_term(m, c);
        }
        out
    }

    /// Exact division by a quadratic `q` whose `ξ_0²` coefficient is the unit
    /// jet with reciprocal `lead_inv`. Returns `None` when `q` does not divide.
    pub fn div_quadratic(&self, q: &Self, lead_inv: &CJet<T>) -> Option<Self> {
        let lead = Mono::from_exps(&[2]);
        let mut rem = self.clone();
        let mut quot = Self::zero(self.shape);
        loop {
            let pick = rem
                .terms
                .iter()
                .filter(|(m, c)| m.exp(0) >= 2 && !c.is_zero())
                .max_by_key(|(m, _)| m.exp(0))
                .map(|(m, c)| (*m, c.clone()));
            let Some((m, c)) = pick else { break };
            let t = m.div(lead).expect("exponent checked");
            let coef = &c * lead_inv;
            quot.add_term(t, coef.clone());
            let sub = q.mul(&Self::monomial(t, coef));
            rem = rem.sub(&sub);
            // exact cancellation of the picked term is guaranteed algebraically;
            // float backends may leave a negligible residue
            rem.terms.remove(&m);
        }
        rem.is_zero().then_some(quot)
    }

    /// Evaluates at a fibre point, returning a jet.
    pub fn eval(&self, xi: &[T]) -> CJet<T> {
        let mut out = Jet::zero(self.shape);
        for (m, c) in &self.terms {
            let mut v = T::one();
            for (i, x) in xi.iter().enumerate() {
                for _ in 0..m.exp(i) {
                    v = v.mul_ref(x);
                }
            }
            out = &out + &c.scale(&Complex::new(v, T::zero()));
        }
        out
    }

    /// Largest total degree in `ξ`.
    pub fn degree(&self) -> Option<u32> {
        self.terms.keys().map(|m| m.total()).max()
    }

    /// True when every stored monomial has total degree `d`.
    pub fn is_homogeneous(&self, d: i64) -> bool {
        self.terms.iter().all(|(m, c)| c.is_zero() || m.total() as i64 == d)
    }
}
