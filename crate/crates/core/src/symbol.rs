//! Homogeneous symbols in the algebra generated by `w = sqrt(q2)`,
//! `q2 = g^{αβ} ξ_α ξ_β`, and formal sums of them.
//!
//! A homogeneous symbol of degree `d` is stored as `(A + B w) / q2^p` with
//! `A`, `B` polynomials in `ξ'` (complex-jet coefficients). `A` is homogeneous
//! of degree `d + 2p` and `B` of degree `d + 2p - 1`. Canonical form keeps `p`
//! minimal: no common factor `q2` is left in `A` and `B` while `p > 0`.

use std::collections::{BTreeMap, HashMap};
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;

use num_complex::Complex;

use crate::error::{Error, Result};
use crate::jet::{Jet, JetShape};
use crate::mono::{monomials_of_degree, Mono};
use crate::scalar::{Field, Scalar};
use crate::xipoly::{CJet, XiPoly};

static NEXT_CTX: AtomicU64 = AtomicU64::new(1);

/// The inverse boundary-adapted metric `g^{αβ}` together with the derived
/// data every symbol operation needs.
#[derive(Debug)]
pub struct SymbolCtx<T: Scalar> {
    id: u64,
    n: usize,
    shape: JetShape,
    g_upper: Vec<Vec<Jet<T>>>,
    q2: XiPoly<T>,
    /// `∂_x q2` for every base direction that has budget left.
    dq2: Vec<Option<XiPoly<T>>>,
    /// `∂_{ξ_α} q2 = 2 g^{αβ} ξ_β`.
    dxi_q2: Vec<XiPoly<T>>,
    lead_inv: CJet<T>,
}

impl<T: Scalar> SymbolCtx<T> {
    /// `g_upper` is the symmetric `(n-1)×(n-1)` matrix of jets `g^{αβ}`.
    pub fn new(g_upper: Vec<Vec<Jet<T>>>) -> Result<Arc<Self>> {
        let m = g_upper.len();
        if m == 0 || g_upper.iter().any(|row| row.len() != m) {
            return Err(Error::Invalid("inverse metric must be a non-empty square matrix".into()));
        }
        let mut shape = g_upper[0][0].shape();
        for row in &g_upper {
            for e in row {
                shape = shape.meet(&e.shape())?;
            }
        }
        if shape.n != m + 1 {
            return Err(Error::Incompatible(format!(
                "{m}x{m} tangential metric over jets in {} variables",
                shape.n
            )));
        }
        for a in 0..m {
            for b in 0..a {
                if g_upper[a][b] != g_upper[b][a] {
                    return Err(Error::Invalid("inverse metric is not symmetric".into()));
                }
            }
        }
        let g_upper: Vec<Vec<Jet<T>>> = g_upper
            .iter()
            .map(|row| row.iter().map(|e| e.truncated(shape.k_r, shape.k_y)).collect())
            .collect();
        let mut q2 = XiPoly::zero(shape);
        for a in 0..m {
            for b in 0..m {
                q2.add_term(Mono::var(a).mul(Mono::var(b)), g_upper[a][b].complexify());
            }
        }
        let dq2 = (0..=m).map(|d| q2.partial_base(d).ok()).collect();
        let dxi_q2 = (0..m).map(|a| q2.partial_xi(a)).collect();
        let lead_inv = g_upper[0][0].complexify().reciprocal()?;
        Ok(Arc::new(SymbolCtx {
            id: NEXT_CTX.fetch_add(1, Ordering::Relaxed),
            n: m + 1,
            shape,
            g_upper,
            q2,
            dq2,
            dxi_q2,
            lead_inv,
        }))
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn shape(&self) -> JetShape {
        self.shape
    }

    pub fn g_upper(&self) -> &[Vec<Jet<T>>] {
        &self.g_upper
    }

    pub fn q2_poly(&self) -> &XiPoly<T> {
        &self.q2
    }

    /// Context of the restriction to `r = 0`.
    pub fn restricted(&self) -> Result<Arc<Self>> {
        Self::new(
            self.g_upper
                .iter()
                .map(|row| row.iter().map(|e| e.restrict_boundary()).collect())
                .collect(),
        )
    }

    fn same(&self, other: &Self) -> bool {
        self.id == other.id
    }
}

#[derive(Clone, Debug)]
pub struct HomSymbol<T: Scalar> {
    degree: i32,
    even: XiPoly<T>,
    odd: XiPoly<T>,
    p: u32,
    ctx: Arc<SymbolCtx<T>>,
}

impl<T: Scalar> HomSymbol<T> {
    pub fn zero(ctx: &Arc<SymbolCtx<T>>, degree: i32, shape: JetShape) -> Self {
        HomSymbol {
            degree,
            even: XiPoly::zero(shape),
            odd: XiPoly::zero(shape),
            p: 0,
            ctx: ctx.clone(),
        }
    }

    /// Degree-0 symbol independent of `ξ`.
    pub fn from_jet(ctx: &Arc<SymbolCtx<T>>, j: CJet<T>) -> Self {
        let shape = j.shape();
        HomSymbol {
            degree: 0,
            even: XiPoly::constant(j),
            odd: XiPoly::zero(shape),
            p: 0,
            ctx: ctx.clone(),
        }
    }

    /// Polynomial symbol `A(ξ)`; `A` must be homogeneous of degree `degree`.
    pub fn from_poly(ctx: &Arc<SymbolCtx<T>>, degree: i32, a: XiPoly<T>) -> Result<Self> {
        if degree < 0 || !a.is_homogeneous(degree as i64) {
            return Err(Error::Invalid(format!("polynomial is not homogeneous of degree {degree}")));
        }
        let shape = a.shape();
        Ok(HomSymbol { degree, even: a, odd: XiPoly::zero(shape), p: 0, ctx: ctx.clone() })
    }

    /// General constructor `(A + B w) / q2^p`, normalized.
    pub fn from_parts(
        ctx: &Arc<SymbolCtx<T>>,
        degree: i32,
        even: XiPoly<T>,
        odd: XiPoly<T>,
        p: u32,
    ) -> Result<Self> {
        let d = degree as i64 + 2 * p as i64;
        if !even.is_homogeneous(d) || !odd.is_homogeneous(d - 1) {
            return Err(Error::Invalid(format!("parts are not homogeneous for degree {degree}")));
        }
        Ok(Self::raw(ctx, degree, even, odd, p).normalized())
    }

    fn raw(ctx: &Arc<SymbolCtx<T>>, degree: i32, even: XiPoly<T>, odd: XiPoly<T>, p: u32) -> Self {
        let s = even.shape().meet(&odd.shape()).expect("parts over different charts");
        HomSymbol {
            degree,
            even: even.truncated(s.k_r, s.k_y),
            odd: odd.truncated(s.k_r, s.k_y),
            p,
            ctx: ctx.clone(),
        }
    }

    /// `w = sqrt(q2)`.
    pub fn w(ctx: &Arc<SymbolCtx<T>>) -> Self {
        let shape = ctx.shape;
        let one = Jet::<Complex<T>>::one(shape);
        HomSymbol {
            degree: 1,
            even: XiPoly::zero(shape),
            odd: XiPoly::constant(one),
            p: 0,
            ctx: ctx.clone(),
        }
    }

    pub fn q2(ctx: &Arc<SymbolCtx<T>>) -> Self {
        HomSymbol {
            degree: 2,
            even: ctx.q2.clone(),
            odd: XiPoly::zero(ctx.shape),
            p: 0,
            ctx: ctx.clone(),
        }
    }

    pub fn degree(&self) -> i32 {
        self.degree
    }

    pub fn ctx(&self) -> &Arc<SymbolCtx<T>> {
        &self.ctx
    }

    pub fn shape(&self) -> JetShape {
        self.even.shape()
    }

    pub fn even(&self) -> &XiPoly<T> {
        &self.even
    }

    pub fn odd(&self) -> &XiPoly<T> {
        &self.odd
    }

    pub fn q2_power(&self) -> u32 {
        self.p
    }

    pub fn is_zero(&self) -> bool {
        self.even.is_zero() && self.odd.is_zero()
    }

    pub fn truncated(&self, k_r: u32, k_y: u32) -> Self {
        HomSymbol {
            even: self.even.truncated(k_r, k_y),
            odd: self.odd.truncated(k_r, k_y),
            ..self.clone()
        }
    }

    fn check(&self, other: &Self) -> Result<()> {
        if !self.ctx.same(&other.ctx) {
            return Err(Error::Incompatible("symbols built over different metrics".into()));
        }
        Ok(())
    }

    /// Divides numerator parts by `q2` while possible.
    pub fn normalized(mut self) -> Self {
        while self.p > 0 {
            if self.is_zero() {
                self.p = 0;
                self.even = XiPoly::zero(self.shape());
                self.odd = XiPoly::zero(self.shape());
                break;
            }
            let Some(a) = self.even.div_quadratic(&self.ctx.q2, &self.ctx.lead_inv) else { break };
            let Some(b) = self.odd.div_quadratic(&self.ctx.q2, &self.ctx.lead_inv) else { break };
            self.even = a;
            self.odd = b;
            self.p -= 1;
        }
        self
    }

    /// Numerators after bringing the denominator up to `q2^p`.
    pub fn lifted(&self, p: u32) -> (XiPoly<T>, XiPoly<T>) {
        debug_assert!(p >= self.p);
        let mut a = self.even.clone();
        let mut b = self.odd.clone();
        for _ in self.p..p {
            a = a.mul(&self.ctx.q2);
            b = b.mul(&self.ctx.q2);
        }
        (a, b)
    }

    pub fn checked_add(&self, other: &Self) -> Result<Self> {
        self.check(other)?;
        if self.degree != other.degree {
            if self.is_zero() {
                return Ok(other.clone());
            }
            if other.is_zero() {
                return Ok(self.clone());
            }
            return Err(Error::Incompatible(format!(
                "adding symbols of degree {} and {}",
                self.degree, other.degree
            )));
        }
        let p = self.p.max(other.p);
        let (a1, b1) = self.lifted(p);
        let (a2, b2) = other.lifted(p);
        Ok(Self::raw(&self.ctx, self.degree, a1.add(&a2), b1.add(&b2), p).normalized())
    }

    pub fn checked_sub(&self, other: &Self) -> Result<Self> {
        self.checked_add(&other.neg())
    }

    pub fn neg(&self) -> Self {
        HomSymbol { even: self.even.neg(), odd: self.odd.neg(), ..self.clone() }
    }

    pub fn scale(&self, c: &Complex<T>) -> Self {
        HomSymbol { even: self.even.scale(c), odd: self.odd.scale(c), ..self.clone() }
    }

    pub fn mul_jet(&self, j: &CJet<T>) -> Self {
        HomSymbol { even: self.even.mul_jet(j), odd: self.odd.mul_jet(j), ..self.clone() }
    }

    pub fn checked_mul(&self, other: &Self) -> Result<Self> {
        self.check(other)?;
        let q2 = &self.ctx.q2;
        let even = self.even.mul(&other.even).add(&self.odd.mul(&other.odd).mul(q2));
        let odd = self.even.mul(&other.odd).add(&self.odd.mul(&other.even));
        Ok(Self::raw(&self.ctx, self.degree + other.degree, even, odd, self.p + other.p).normalized())
    }

    /// Shared quotient rule: with `∂w = ∂q2 w / (2 q2)`,
    /// `∂[(A + B w)/q2^p] = [q2 ∂A - p ∂q2 A + (q2 ∂B + (1/2 - p) ∂q2 B) w] / q2^{p+1}`.
    fn quotient_rule(&self, da: XiPoly<T>, db: XiPoly<T>, dq: &XiPoly<T>, degree: i32) -> Self {
        let q2 = &self.ctx.q2;
        let p = Complex::from_int(self.p as i64);
        let half_minus_p = Complex::from_ratio(1, 2).sub_ref(&p);
        let even = da.mul(q2).sub(&dq.mul(&self.even).scale(&p));
        let odd = db.mul(q2).add(&dq.mul(&self.odd).scale(&half_minus_p));
        Self::raw(&self.ctx, degree, even, odd, self.p + 1).normalized()
    }

    /// `∂/∂ξ_α` (0-based).
    pub fn partial_xi(&self, alpha: usize) -> Self {
        if self.is_zero() {
            return Self::zero(&self.ctx, self.degree - 1, self.shape());
        }
        let dq = &self.ctx.dxi_q2[alpha];
        self.quotient_rule(self.even.partial_xi(alpha), self.odd.partial_xi(alpha), dq, self.degree - 1)
    }

    /// Base derivative in direction `dir` (0 = `r`, `i` = `y^i`).
    pub fn partial_base(&self, dir: usize) -> Result<Self> {
        let da = self.even.partial_base(dir)?;
        let db = self.odd.partial_base(dir)?;
        if self.is_zero() {
            return Ok(Self::zero(&self.ctx, self.degree, da.shape()));
        }
        let dq = self
            .ctx
            .dq2
            .get(dir)
            .and_then(|d| d.as_ref())
            .ok_or(Error::Budget { direction: dir })?;
        Ok(self.quotient_rule(da, db, dq, self.degree))
    }

    /// `∂_ξ^K` for a multi-index over the tangential fibre variables.
    pub fn partial_xi_multi(&self, k: Mono) -> Self {
        let mut out = self.clone();
        for a in 0..self.ctx.n - 1 {
            for _ in 0..k.exp(a) {
                out = out.partial_xi(a);
            }
        }
        out
    }

    /// `∂_y^K` for a multi-index over `y^1..y^{n-1}`.
    pub fn partial_y_multi(&self, k: Mono) -> Result<Self> {
        let mut out = self.clone();
        for a in 0..self.ctx.n - 1 {
            for _ in 0..k.exp(a) {
                out = out.partial_base(a + 1)?;
            }
        }
        Ok(out)
    }

    /// Product with `1 / (2 b1)` where `b1 = -w`, i.e. with `-w / (2 q2)`.
    pub fn div_by_two_b1(&self) -> Self {
        let half = Complex::from_ratio(-1, 2);
        let even = self.odd.mul(&self.ctx.q2).scale(&half);
        let odd = self.even.scale(&half);
        Self::raw(&self.ctx, self.degree - 1, even, odd, self.p + 1).normalized()
    }

    pub fn equals(&self, other: &Self) -> Result<bool> {
        Ok(self.checked_sub(other)?.is_zero())
    }

    /// Restriction of every coefficient to `r = 0`, over the restricted context.
    pub fn restrict_boundary(&self, ctx: &Arc<SymbolCtx<T>>) -> Self {
        let f = |c: &CJet<T>| c.restrict_boundary();
        HomSymbol {
            degree: self.degree,
            even: self.even.map_coeffs(f),
            odd: self.odd.map_coeffs(f),
            p: self.p,
            ctx: ctx.clone(),
        }
    }

    /// The same symbol over another context with an identical metric.
    pub fn rehomed(&self, ctx: &Arc<SymbolCtx<T>>) -> Result<Self> {
        if !self.ctx.same(ctx) && !same_metric(&self.ctx, ctx) {
            return Err(Error::Incompatible("contexts carry different metrics".into()));
        }
        Ok(HomSymbol { ctx: ctx.clone(), ..self.clone() })
    }

    /// Value at a fibre point as the pair `(a, b)` meaning `a + b w(ξ)`.
    pub fn eval_parts(&self, xi: &[T]) -> Result<(CJet<T>, CJet<T>)> {
        let q = self.ctx.q2.eval(xi);
        let inv = q.reciprocal()?;
        let mut a = self.even.eval(xi);
        let mut b = self.odd.eval(xi);
        for _ in 0..self.p {
            a = &a * &inv;
            b = &b * &inv;
        }
        Ok((a, b))
    }

    /// Numerical value at the base point and a real fibre point.
    pub fn eval_at_base(&self, xi: &[f64]) -> Complex<f64> {
        let xi_t: Vec<f64> = xi.to_vec();
        let base = |p: &XiPoly<T>| -> Complex<f64> {
            let mut acc = Complex::new(0.0, 0.0);
            for (m, c) in p.terms() {
                let c0 = c.constant_term();
                let mut v = 1.0;
                for (i, x) in xi_t.iter().enumerate() {
                    v *= x.powi(m.exp(i) as i32);
                }
                acc += Complex::new(c0.re.to_f64(), c0.im.to_f64()) * v;
            }
            acc
        };
        let q = base(&self.ctx.q2).re;
        (base(&self.even) + base(&self.odd) * q.sqrt()) / q.powi(self.p as i32)
    }
}

/// Metrics agree on the common truncation.
fn same_metric<T: Scalar>(a: &SymbolCtx<T>, b: &SymbolCtx<T>) -> bool {
    a.n == b.n
        && a.g_upper.iter().zip(&b.g_upper).all(|(ra, rb)| ra.iter().zip(rb).all(|(x, y)| x == y))
}

/// `1/K!` times `(-i)^{|K|}`, the weight of the order-`K` term of the
/// composition formula with `D = -i ∂`.
pub(crate) fn composition_weight<T: Scalar>(k: Mono) -> Complex<T> {
    let f = Complex::<T>::from_ratio(1, k.factorial() as i64);
    let mi = Complex::new(T::zero(), -T::one());
    let mut out = f;
    for _ in 0..k.total() {
        out = out.mul_ref(&mi);
    }
    out
}

/// A formal classical symbol truncated to the grades `top, top-1, ..., min`.
#[derive(Clone, Debug)]
pub struct FormalSymbol<T: Scalar> {
    ctx: Arc<SymbolCtx<T>>,
    top: i32,
    min: i32,
    comps: BTreeMap<i32, HomSymbol<T>>,
}

impl<T: Scalar> FormalSymbol<T> {
    pub fn new(ctx: &Arc<SymbolCtx<T>>, top: i32, min: i32) -> Self {
        assert!(min <= top, "empty grade range");
        FormalSymbol { ctx: ctx.clone(), top, min, comps: BTreeMap::new() }
    }

    pub fn from_components(ctx: &Arc<SymbolCtx<T>>, comps: Vec<HomSymbol<T>>) -> Result<Self> {
        let top = comps.iter().map(|c| c.degree).max().ok_or(Error::Invalid("no components".into()))?;
        let min = comps.iter().map(|c| c.degree).min().unwrap();
        let mut out = Self::new(ctx, top, min);
        for c in comps {
            out.set(c)?;
        }
        Ok(out)
    }

    pub fn top(&self) -> i32 {
        self.top
    }

    pub fn min(&self) -> i32 {
        self.min
    }

    pub fn ctx(&self) -> &Arc<SymbolCtx<T>> {
        &self.ctx
    }

    pub fn get(&self, grade: i32) -> Option<&HomSymbol<T>> {
        self.comps.get(&grade)
    }

    pub fn components(&self) -> impl Iterator<Item = &HomSymbol<T>> {
        self.comps.values().rev()
    }

    /// Stores (or adds to) the component of the symbol's degree.
    pub fn set(&mut self, s: HomSymbol<T>) -> Result<()> {
        if !self.ctx.same(&s.ctx) {
            return Err(Error::Incompatible("symbols built over different metrics".into()));
        }
        if s.degree > self.top || s.degree < self.min {
            return Err(Error::Truncation(format!(
                "grade {} outside {}..={}",
                s.degree, self.min, self.top
            )));
        }
        self.comps.insert(s.degree, s);
        Ok(())
    }

    pub fn accumulate(&mut self, s: HomSymbol<T>) -> Result<()> {
        if s.degree < self.min || s.is_zero() {
            return Ok(());
        }
        if s.degree > self.top {
            return Err(Error::Truncation(format!("grade {} above top {}", s.degree, self.top)));
        }
        let v = match self.comps.remove(&s.degree) {
            Some(old) => old.checked_add(&s)?,
            None => s,
        };
        self.comps.insert(v.degree, v);
        Ok(())
    }

    pub fn checked_add(&self, other: &Self) -> Result<Self> {
        let mut out = FormalSymbol::new(&self.ctx, self.top.max(other.top), self.min.max(other.min));
        for c in self.comps.values().chain(other.comps.values()) {
            out.accumulate(c.clone())?;
        }
        Ok(out)
    }

    pub fn neg(&self) -> Self {
        FormalSymbol {
            comps: self.comps.iter().map(|(g, c)| (*g, c.neg())).collect(),
            ..self.clone()
        }
    }

    pub fn checked_sub(&self, other: &Self) -> Result<Self> {
        self.checked_add(&other.neg())
    }

    /// Applies `∂_r` to every component.
    pub fn partial_r(&self) -> Result<Self> {
        let mut out = FormalSymbol::new(&self.ctx, self.top, self.min);
        for c in self.comps.values() {
            out.accumulate(c.partial_base(0)?)?;
        }
        Ok(out)
    }

    pub fn mul_jet(&self, j: &CJet<T>) -> Self {
        FormalSymbol {
            comps: self.comps.iter().map(|(g, c)| (*g, c.mul_jet(j))).collect(),
            ..self.clone()
        }
    }

    /// Restriction to `r = 0` over the restricted context.
    pub fn restrict_boundary(&self, ctx: &Arc<SymbolCtx<T>>) -> Self {
        FormalSymbol {
            ctx: ctx.clone(),
            comps: self.comps.iter().map(|(g, c)| (*g, c.restrict_boundary(ctx))).collect(),
            ..self.clone()
        }
    }

    pub fn rehomed(&self, ctx: &Arc<SymbolCtx<T>>) -> Result<Self> {
        let comps = self
            .comps
            .iter()
            .map(|(g, c)| Ok((*g, c.rehomed(ctx)?)))
            .collect::<Result<_>>()?;
        Ok(FormalSymbol { ctx: ctx.clone(), comps, ..self.clone() })
    }

    /// Grades from `top` down to `min`.
    pub fn grades(&self) -> Vec<i32> {
        (self.min..=self.top).rev().collect()
    }
}

/// Symbol of the composition of two pseudo-differential operators acting in
/// the tangential variables:
/// `sum_K (1/K!) ∂_ξ^K h · D_y^K g`, `D = -i ∂`.
///
/// Only grades that are fully determined by the known components are kept,
/// i.e. grades `>= max(h.min + g.top, g.min + h.top)`.
pub fn compose<T: Scalar>(h: &FormalSymbol<T>, g: &FormalSymbol<T>) -> Result<FormalSymbol<T>> {
    if !h.ctx.same(&g.ctx) {
        return Err(Error::Incompatible("symbols built over different metrics".into()));
    }
    let top = h.top + g.top;
    let min = (h.min + g.top).max(g.min + h.top);
    let nt = h.ctx.n - 1;
    let mut out = FormalSymbol::new(&h.ctx, top, min);
    let mut dh: HashMap<(i32, Mono), HomSymbol<T>> = HashMap::new();
    let mut dg: HashMap<(i32, Mono), HomSymbol<T>> = HashMap::new();
    for (&m, hm) in &h.comps {
        for (&l, gl) in &g.comps {
            let kmax = m + l - min;
            if kmax < 0 {
                continue;
            }
            for order in 0..=kmax as u32 {
                for k in monomials_of_degree(nt, order) {
                    let a = derivative_cached(&mut dh, m, k, hm, |s, i| Ok(s.partial_xi(i)))?;
                    if a.is_zero() {
                        continue;
                    }
                    let b = derivative_cached(&mut dg, l, k, gl, |s, i| s.partial_base(i + 1))?;
                    if b.is_zero() {
                        continue;
                    }
                    let term = a.checked_mul(&b)?.scale(&composition_weight(k));
                    out.accumulate(term)?;
                }
            }
        }
    }
    Ok(out)
}

/// `∂^K s` built from `∂^{K - e_i} s`, memoised by `(grade, K)`.
pub(crate) fn derivative_cached<T: Scalar>(
    cache: &mut HashMap<(i32, Mono), HomSymbol<T>>,
    grade: i32,
    k: Mono,
    s: &HomSymbol<T>,
    step: impl Fn(&HomSymbol<T>, usize) -> Result<HomSymbol<T>> + Copy,
) -> Result<HomSymbol<T>> {
    if k == Mono::ONE {
        return Ok(s.clone());
    }
    if let Some(v) = cache.get(&(grade, k)) {
        return Ok(v.clone());
    }
    let i = (0..crate::mono::MAX_VARS).find(|&i| k.exp(i) > 0).unwrap();
    let prev = derivative_cached(cache, grade, k.div_var(i).unwrap(), s, step)?;
    let v = step(&prev, i)?;
    cache.insert((grade, k), v.clone());
    Ok(v)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::{rat, Rational};

    type R = Rational;

    fn euclid(n: usize, k_r: u32, k_y: u32) -> Arc<SymbolCtx<R>> {
        let s = JetShape::new(n, k_r, k_y);
        let g = (0..n - 1)
            .map(|a| (0..n - 1).map(|b| if a == b { Jet::one(s) } else { Jet::zero(s) }).collect())
            .collect();
        SymbolCtx::new(g).unwrap()
    }

    /// `g^{αβ} = δ^{αβ} (1 + r)`.
    fn radial_scaled(n: usize) -> Arc<SymbolCtx<R>> {
        let s = JetShape::new(n, 3, 2);
        let f = &Jet::one(s) + &Jet::variable(s, 0);
        let g = (0..n - 1)
            .map(|a| (0..n - 1).map(|b| if a == b { f.clone() } else { Jet::zero(s) }).collect())
            .collect();
        SymbolCtx::new(g).unwrap()
    }

    #[test]
    fn w_squared_is_q2() {
        let ctx = euclid(3, 2, 2);
        let w = HomSymbol::w(&ctx);
        let ww = w.checked_mul(&w).unwrap();
        assert!(ww.equals(&HomSymbol::q2(&ctx)).unwrap());
        assert_eq!(ww.q2_power(), 0);
        assert!(ww.odd().is_zero());
    }

    #[test]
    fn fibre_derivative_of_w() {
        let ctx = euclid(3, 2, 2);
        let w = HomSymbol::w(&ctx);
        // ∂_{ξ_1} w = ξ_1 / w = ξ_1 w / q2
        let d = w.partial_xi(0);
        assert_eq!(d.degree(), 0);
        let xi1 = XiPoly::monomial(Mono::var(0), Jet::one(ctx.shape()));
        let expect = HomSymbol::from_parts(&ctx, 0, XiPoly::zero(ctx.shape()), xi1, 1).unwrap();
        assert!(d.equals(&expect).unwrap());
        let v = d.eval_at_base(&[3.0, 4.0]);
        assert!((v.re - 0.6).abs() < 1e-12 && v.im.abs() < 1e-12);
    }

    #[test]
    fn radial_derivative_of_w() {
        let ctx = radial_scaled(3);
        let w = HomSymbol::w(&ctx).neg();
        // ∂_r(-w) = -∂_r q2 / (2 w) with ∂_r q2 = |ξ|²
        let d = w.partial_base(0).unwrap();
        let v = d.eval_at_base(&[3.0, 4.0]);
        assert!((v.re + 25.0 / 10.0).abs() < 1e-12, "{v}");
    }

    #[test]
    fn euler_identity() {
        // sum ξ_α ∂_{ξ_α} s = deg(s) s
        let ctx = radial_scaled(3);
        let w = HomSymbol::w(&ctx);
        let s = w.div_by_two_b1().checked_mul(&HomSymbol::q2(&ctx)).unwrap();
        let mut acc = HomSymbol::zero(&ctx, s.degree(), s.shape());
        for a in 0..2 {
            let xa = HomSymbol::from_poly(&ctx, 1, XiPoly::monomial(Mono::var(a), Jet::one(ctx.shape()))).unwrap();
            acc = acc.checked_add(&xa.checked_mul(&s.partial_xi(a)).unwrap()).unwrap();
        }
        let expect = s.scale(&Complex::from_int(s.degree() as i64));
        assert!(acc.equals(&expect).unwrap());
    }

    #[test]
    fn division_by_two_b1_inverts_multiplication() {
        let ctx = radial_scaled(3);
        let b1 = HomSymbol::w(&ctx).neg();
        let s = HomSymbol::q2(&ctx).partial_base(0).unwrap();
        let t = s.div_by_two_b1().checked_mul(&b1.scale(&Complex::from_int(2))).unwrap();
        assert!(t.equals(&s).unwrap());
    }

    #[test]
    fn leibniz_rule() {
        let ctx = radial_scaled(3);
        let a = HomSymbol::w(&ctx).partial_base(0).unwrap();
        let b = HomSymbol::w(&ctx).div_by_two_b1();
        let lhs = a.checked_mul(&b).unwrap().partial_base(1).unwrap();
        let rhs = a
            .partial_base(1)
            .unwrap()
            .checked_mul(&b)
            .unwrap()
            .checked_add(&a.checked_mul(&b.partial_base(1).unwrap()).unwrap())
            .unwrap();
        assert!(lhs.equals(&rhs).unwrap());
    }

    #[test]
    fn different_metrics_are_rejected() {
        let a = HomSymbol::w(&euclid(3, 1, 1));
        let b = HomSymbol::w(&euclid(3, 1, 1));
        assert!(matches!(a.checked_mul(&b), Err(Error::Incompatible(_))));
    }

    #[test]
    fn composition_with_identity_and_flat_symbols() {
        let ctx = euclid(3, 2, 3);
        let one = FormalSymbol::from_components(&ctx, vec![HomSymbol::from_jet(&ctx, Jet::one(ctx.shape()))]).unwrap();
        let w = FormalSymbol::from_components(&ctx, vec![HomSymbol::w(&ctx)]).unwrap();
        let c = compose(&one, &w).unwrap();
        assert!(c.get(1).unwrap().equals(&HomSymbol::w(&ctx)).unwrap());
        let c = compose(&w, &w).unwrap();
        assert!(c.get(2).unwrap().equals(&HomSymbol::q2(&ctx)).unwrap());
    }

    #[test]
    fn composition_with_y_dependent_factor() {
        // ξ_1 ∘ f(y) = f ξ_1 - i ∂_1 f
        let ctx = euclid(3, 1, 2);
        let s = ctx.shape();
        let y1 = Jet::variable(s, 1).complexify();
        let mut xi = FormalSymbol::new(&ctx, 1, -3);
        xi.set(HomSymbol::from_poly(&ctx, 1, XiPoly::monomial(Mono::var(0), Jet::one(s))).unwrap())
            .unwrap();
        let mut f = FormalSymbol::new(&ctx, 0, -3);
        f.set(HomSymbol::from_jet(&ctx, y1.clone())).unwrap();
        let c = compose(&xi, &f).unwrap();
        assert_eq!(c.min(), -2);
        let g0 = c.get(0).unwrap();
        let expect = HomSymbol::from_jet(&ctx, Jet::constant(s, Complex::new(rat(0, 1), rat(-1, 1))));
        assert!(g0.equals(&expect).unwrap());
    }
}
