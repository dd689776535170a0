//! Metric and weight data in boundary normal coordinates
//! `g = dr² + g_{αβ}(r, y) dy^α dy^β`, and the coefficients derived from them.

use std::sync::Arc;

use num_complex::Complex;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::jet::{Jet, JetShape};
use crate::matrix::{inverse_and_det, JetMatrix};
use crate::mono::Mono;
use crate::scalar::{imag_unit, Scalar};
use crate::symbol::{HomSymbol, SymbolCtx};
use crate::xipoly::XiPoly;

/// Tangential block of a metric in boundary normal form.
#[derive(Clone, Debug)]
pub struct BoundaryMetricJet<T: Scalar> {
    n: usize,
    g_lower: JetMatrix<T>,
    g_upper: JetMatrix<T>,
    delta: Jet<T>,
    ctx: Arc<SymbolCtx<T>>,
}

impl<T: Scalar> BoundaryMetricJet<T> {
    /// Builds the metric from `g_{αβ}`; the constant term must be positive
    /// definite.
    pub fn from_lower(g_lower: JetMatrix<T>) -> Result<Self> {
        check_symmetric(&g_lower)?;
        let (g_upper, delta) = inverse_and_det(&g_lower, true)?;
        Self::assemble(g_lower, g_upper, delta)
    }

    /// Builds the metric from `g^{αβ}`.
    pub fn from_upper(g_upper: JetMatrix<T>) -> Result<Self> {
        check_symmetric(&g_upper)?;
        let (g_lower, det_upper) = inverse_and_det(&g_upper, true)?;
        let delta = det_upper.reciprocal()?;
        Self::assemble(g_lower, g_upper, delta)
    }

    fn assemble(g_lower: JetMatrix<T>, g_upper: JetMatrix<T>, delta: Jet<T>) -> Result<Self> {
        let n = g_lower.len() + 1;
        if g_lower[0][0].n() != n {
            return Err(Error::Incompatible(format!(
                "{0}x{0} tangential block over jets in {1} variables",
                n - 1,
                g_lower[0][0].n()
            )));
        }
        // symmetrize away any float round-off from the elimination
        let g_upper = symmetrized(g_upper);
        let ctx = SymbolCtx::new(g_upper.clone())?;
        Ok(BoundaryMetricJet { n, g_lower, g_upper, delta, ctx })
    }

    /// Euclidean tangential metric.
    pub fn flat(shape: JetShape) -> Self {
        let m = shape.n - 1;
        let g = (0..m)
            .map(|a| (0..m).map(|b| if a == b { Jet::one(shape) } else { Jet::zero(shape) }).collect())
            .collect();
        Self::from_lower(g).expect("identity is positive definite")
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn shape(&self) -> JetShape {
        self.ctx.shape()
    }

    pub fn g_lower(&self) -> &JetMatrix<T> {
        &self.g_lower
    }

    pub fn g_upper(&self) -> &JetMatrix<T> {
        &self.g_upper
    }

    /// `δ = det g_{αβ}`.
    pub fn delta(&self) -> &Jet<T> {
        &self.delta
    }

    /// `sqrt δ` when the backend can represent `sqrt δ(0)`.
    pub fn sqrt_delta(&self) -> Result<Jet<T>> {
        self.delta.sqrt()
    }

    /// `∂_x ln δ = ∂_x δ / δ`.
    pub fn dlog_delta(&self, dir: usize) -> Result<Jet<T>> {
        self.delta.partial(dir)?.checked_div(&self.delta)
    }

    /// Symbol context over `g^{αβ}`.
    pub fn ctx(&self) -> &Arc<SymbolCtx<T>> {
        &self.ctx
    }

    /// The same metric truncated to lower orders.
    pub fn truncated(&self, k_r: u32, k_y: u32) -> Result<Self> {
        let t = |m: &JetMatrix<T>| -> JetMatrix<T> {
            m.iter().map(|r| r.iter().map(|e| e.truncated(k_r, k_y)).collect()).collect()
        };
        Self::assemble(t(&self.g_lower), t(&self.g_upper), self.delta.truncated(k_r, k_y))
    }

    /// `∂_r^m g^{αβ}` at `r = 0`.
    pub fn upper_radial_coefficient(&self, m: u32) -> JetMatrix<T> {
        self.g_upper
            .iter()
            .map(|r| r.iter().map(|e| e.radial_coefficient(m)).collect())
            .collect()
    }
}

fn check_symmetric<T: Scalar>(m: &JetMatrix<T>) -> Result<()> {
    let k = m.len();
    if k == 0 || m.iter().any(|r| r.len() != k) {
        return Err(Error::Invalid("tangential metric must be a non-empty square matrix".into()));
    }
    for a in 0..k {
        for b in 0..a {
            if m[a][b] != m[b][a] {
                return Err(Error::Invalid(format!("metric entry ({a},{b}) differs from ({b},{a})")));
            }
        }
    }
    Ok(())
}

fn symmetrized<T: Scalar>(mut m: JetMatrix<T>) -> JetMatrix<T> {
    for a in 0..m.len() {
        for b in 0..a {
            m[a][b] = m[b][a].clone();
        }
    }
    m
}

/// The weight `V` of the measure `e^{-V} ω_g`.
#[derive(Clone, Debug)]
pub struct WeightJet<T: Scalar> {
    pub v: Jet<T>,
}

impl<T: Scalar> WeightJet<T> {
    pub fn new(v: Jet<T>) -> Self {
        WeightJet { v }
    }

    pub fn zero(shape: JetShape) -> Self {
        WeightJet { v: Jet::zero(shape) }
    }

    /// Same weight with the additive constant removed, `V(0) = 0`.
    pub fn normalized(&self) -> Self {
        let c = self.v.constant_term();
        WeightJet { v: &self.v - &Jet::constant(self.v.shape(), c) }
    }
}

/// A positive density `e^ℓ sqrt(ρ) u` with scalars `ℓ`, `ρ > 0` and a jet
/// `u` with `u(0) = 1`.
///
/// Keeping the constant factors symbolic lets exact backends carry
/// `e^{-V(0)} sqrt(δ(0))` without leaving the rationals.
#[derive(Clone, Debug, PartialEq)]
pub struct Density<T: Scalar> {
    pub log_factor: T,
    pub radicand: T,
    pub unit: Jet<T>,
}

impl<T: Scalar> Density<T> {
    /// `e^{-w} sqrt(δ)` for a weight `w` (use `w = 0` for `sqrt δ`).
    pub fn weighted_sqrt_delta(delta: &Jet<T>, w: &Jet<T>) -> Result<Self> {
        let shape = delta.shape().meet(&w.shape())?;
        let d0 = delta.constant_term();
        let d0_inv = d0.inv().ok_or(Error::NonUnit)?;
        let su = delta.scale(&d0_inv).sqrt()?;
        let w0 = w.constant_term();
        let eu = (&Jet::constant(shape, w0.clone()) - w).exp()?;
        Ok(Density { log_factor: w0.neg_ref(), radicand: d0, unit: &su * &eu })
    }

    /// The density as a jet, when the constant factor is representable.
    pub fn to_jet(&self) -> Result<Jet<T>> {
        Ok(self.unit.scale(&self.constant()?))
    }

    /// `e^ℓ sqrt(ρ)`, when representable in the backend.
    pub fn constant(&self) -> Result<T> {
        let e = self.log_factor.exp_exact().ok_or(Error::Backend {
            backend: T::NAME,
            what: format!("exp({})", self.log_factor.to_text()),
        })?;
        let s = self.radicand.sqrt_exact().ok_or(Error::Backend {
            backend: T::NAME,
            what: format!("sqrt({})", self.radicand.to_text()),
        })?;
        Ok(e.mul_ref(&s))
    }

    /// Numerical value of the constant factor.
    pub fn constant_f64(&self) -> f64 {
        self.log_factor.to_f64().exp() * self.radicand.to_f64().sqrt()
    }

    pub fn restrict_boundary(&self) -> Self {
        Density { unit: self.unit.restrict_boundary(), ..self.clone() }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GaugeTag {
    /// Connection form `½ dV`: the operator keeps its weighted divergence form.
    GaugeS,
    /// Connection form `0`: the operator is `-Δ_g + U`.
    GaugeSigma,
    Custom,
}

/// Connection potential, potential `U` and conormal density for one gauge.
#[derive(Clone, Debug)]
pub struct GaugeData<T: Scalar> {
    pub tag: GaugeTag,
    pub a_r: Jet<T>,
    pub a_tangential: Vec<Jet<T>>,
    pub u: Jet<T>,
    pub density: Density<T>,
}

impl<T: Scalar> GaugeData<T> {
    /// `A = ½ dV`, density `e^{-V} sqrt δ`.
    pub fn gauge_s(g: &BoundaryMetricJet<T>, v: &WeightJet<T>) -> Result<Self> {
        let half = T::from_ratio(1, 2);
        let a_r = v.v.partial(0)?.scale(&half);
        let a_tangential = (1..g.n).map(|a| Ok(v.v.partial(a)?.scale(&half))).collect::<Result<_>>()?;
        Ok(GaugeData {
            tag: GaugeTag::GaugeS,
            a_r,
            a_tangential,
            u: compute_u(g, v)?,
            density: Density::weighted_sqrt_delta(g.delta(), &v.v)?,
        })
    }

    /// `A = 0`, density `sqrt δ`.
    pub fn gauge_sigma(g: &BoundaryMetricJet<T>, v: &WeightJet<T>) -> Result<Self> {
        let shape = g.shape().meet(&v.v.shape())?;
        Ok(GaugeData {
            tag: GaugeTag::GaugeSigma,
            a_r: Jet::zero(shape),
            a_tangential: vec![Jet::zero(shape); g.n - 1],
            u: compute_u(g, v)?,
            density: Density::weighted_sqrt_delta(g.delta(), &Jet::zero(shape))?,
        })
    }

    /// Arbitrary potentials; the density is `sqrt δ`.
    pub fn custom(g: &BoundaryMetricJet<T>, a_r: Jet<T>, a_tangential: Vec<Jet<T>>, u: Jet<T>) -> Result<Self> {
        if a_tangential.len() != g.n - 1 {
            return Err(Error::Invalid(format!("expected {} tangential components", g.n - 1)));
        }
        let density = Density::weighted_sqrt_delta(g.delta(), &Jet::zero(g.shape()))?;
        Ok(GaugeData { tag: GaugeTag::Custom, a_r, a_tangential, u, density })
    }
}

/// `E = -½ ∂_r ln δ`, or `Ẽ = E + ∂_r V` when `weighted`.
pub fn compute_e<T: Scalar>(g: &BoundaryMetricJet<T>, v: &WeightJet<T>, weighted: bool) -> Result<Jet<T>> {
    let e = g.dlog_delta(0)?.scale(&T::from_ratio(-1, 2));
    if weighted {
        e.checked_add(&v.v.partial(0)?)
    } else {
        Ok(e)
    }
}

/// `Δ_g V = δ^{-1/2} ∂_i(δ^{1/2} g^{ij} ∂_j V)` with `g^{rr} = 1`, `g^{rα} = 0`.
pub fn laplacian<T: Scalar>(g: &BoundaryMetricJet<T>, v: &Jet<T>) -> Result<Jet<T>> {
    let half = T::from_ratio(1, 2);
    let m = g.n - 1;
    let dv_r = v.partial(0)?;
    let mut out = dv_r.partial(0)?.checked_add(&(&g.dlog_delta(0)? * &dv_r).scale(&half))?;
    let grad = raised_gradient(g, v)?;
    for a in 0..m {
        let div = grad[a].partial(a + 1)?;
        let drift = (&g.dlog_delta(a + 1)? * &grad[a]).scale(&half);
        out = out.checked_add(&div)?.checked_add(&drift)?;
    }
    Ok(out)
}

/// `g^{αβ} ∂_β f` for every `α`.
fn raised_gradient<T: Scalar>(g: &BoundaryMetricJet<T>, f: &Jet<T>) -> Result<Vec<Jet<T>>> {
    let m = g.n - 1;
    let df: Vec<Jet<T>> = (0..m).map(|b| f.partial(b + 1)).collect::<Result<_>>()?;
    Ok((0..m)
        .map(|a| (0..m).fold(Jet::zero(df[0].shape()), |acc, b| &acc + &(&g.g_upper[a][b] * &df[b])))
        .collect())
}

/// `U = -½ Δ_g V + ¼ g(dV, dV)`.
pub fn compute_u<T: Scalar>(g: &BoundaryMetricJet<T>, v: &WeightJet<T>) -> Result<Jet<T>> {
    let dv_r = v.v.partial(0)?;
    let grad = raised_gradient(g, &v.v)?;
    let mut norm = &dv_r * &dv_r;
    for (a, ga) in grad.iter().enumerate() {
        norm = norm.checked_add(&(ga * &v.v.partial(a + 1)?))?;
    }
    let lap = laplacian(g, &v.v)?;
    lap.scale(&T::from_ratio(-1, 2)).checked_add(&norm.scale(&T::from_ratio(1, 4)))
}

/// Full symbol `q2 + q1 + q0` of the tangential part of the operator.
#[derive(Clone, Debug)]
pub struct QSymbols<T: Scalar> {
    pub q2: HomSymbol<T>,
    pub q1: HomSymbol<T>,
    pub q0: HomSymbol<T>,
}

/// `-i δ^{-1/2} ∂_α(δ^{1/2} g^{αβ}) + 2i a^β` as the coefficients of `ξ_β`.
fn first_order_coefficients<T: Scalar>(g: &BoundaryMetricJet<T>, a_upper: &[Jet<T>]) -> Result<Vec<Complex<Jet<T>>>> {
    let m = g.n - 1;
    let half = T::from_ratio(1, 2);
    let mut out = Vec::with_capacity(m);
    for b in 0..m {
        let mut s: Option<Jet<T>> = None;
        for a in 0..m {
            let t = g.g_upper[a][b].partial(a + 1)?.checked_add(&(&g.dlog_delta(a + 1)? * &g.g_upper[a][b]).scale(&half))?;
            s = Some(match s {
                Some(acc) => acc.checked_add(&t)?,
                None => t,
            });
        }
        let div = s.unwrap();
        let im = div.neg_ref().checked_add(&a_upper[b].scale(&T::from_int(2)))?;
        out.push(Complex::new(Jet::zero(im.shape()), im));
    }
    Ok(out)
}

fn linear_symbol<T: Scalar>(g: &BoundaryMetricJet<T>, coeffs: &[Complex<Jet<T>>]) -> Result<HomSymbol<T>> {
    let shape = coeffs.iter().try_fold(g.shape(), |s, c| s.meet(&c.im.shape()))?;
    let mut p = XiPoly::zero(shape);
    for (b, c) in coeffs.iter().enumerate() {
        let j = c.re.complexify().checked_add(&c.im.complexify().scale(&imag_unit()))?;
        p.add_term(Mono::var(b), j);
    }
    HomSymbol::from_poly(g.ctx(), 1, p)
}

fn raise<T: Scalar>(g: &BoundaryMetricJet<T>, a_lower: &[Jet<T>]) -> Vec<Jet<T>> {
    let m = g.n - 1;
    (0..m)
        .map(|b| (0..m).fold(Jet::zero(a_lower[0].shape()), |acc, a| &acc + &(&g.g_upper[a][b] * &a_lower[a])))
        .collect()
}

/// `q2`, `q1`, `q0` in the given gauge:
/// `q1 = (-i δ^{-1/2} ∂_α(δ^{1/2} g^{αβ}) + 2i A^β) ξ_β`,
/// `q0 = U + δ^{-1/2} ∂_α(δ^{1/2} A^α) - A_α A^α`.
pub fn compute_q<T: Scalar>(g: &BoundaryMetricJet<T>, gauge: &GaugeData<T>) -> Result<QSymbols<T>> {
    let half = T::from_ratio(1, 2);
    let a_up = raise(g, &gauge.a_tangential);
    let q1 = linear_symbol(g, &first_order_coefficients(g, &a_up)?)?;
    let mut q0 = gauge.u.clone();
    for (a, au) in a_up.iter().enumerate() {
        let div = au.partial(a + 1)?.checked_add(&(&g.dlog_delta(a + 1)? * au).scale(&half))?;
        q0 = q0.checked_add(&div)?.checked_sub(&(&gauge.a_tangential[a] * au))?;
    }
    Ok(QSymbols {
        q2: HomSymbol::q2(g.ctx()),
        q1,
        q0: HomSymbol::from_jet(g.ctx(), q0.complexify()),
    })
}

/// Tangential symbol of the weighted Laplacian written as `D_r² + i Ẽ D_r + Q`:
/// `q1 = (-i δ^{-1/2} ∂_α(δ^{1/2} g^{αβ}) + i g^{αβ} ∂_α V) ξ_β`, `q0 = 0`.
pub fn compute_q_scalar<T: Scalar>(g: &BoundaryMetricJet<T>, v: &WeightJet<T>) -> Result<QSymbols<T>> {
    let half = T::from_ratio(1, 2);
    let dv: Vec<Jet<T>> = (1..g.n).map(|a| Ok(v.v.partial(a)?.scale(&half))).collect::<Result<_>>()?;
    let a_up = raise(g, &dv);
    let q1 = linear_symbol(g, &first_order_coefficients(g, &a_up)?)?;
    let shape = q1.shape();
    Ok(QSymbols {
        q2: HomSymbol::q2(g.ctx()),
        q1,
        q0: HomSymbol::zero(g.ctx(), 0, shape),
    })
}

/// First radial derivatives of the inverse metric and their trace-adjusted
/// combinations.
#[derive(Clone, Debug)]
pub struct ShapeData<T: Scalar> {
    /// `h^{αβ} = ∂_r g^{αβ}`.
    pub h_upper: JetMatrix<T>,
    /// `h = h^{αβ} g_{αβ}`.
    pub h: Jet<T>,
    /// `k^{αβ} = h^{αβ} - h g^{αβ}`.
    pub k_upper: JetMatrix<T>,
    /// `k̃^{αβ} = h^{αβ} - (h + 2 ∂_r V) g^{αβ}`.
    pub k_tilde_upper: JetMatrix<T>,
}

pub fn compute_shape<T: Scalar>(g: &BoundaryMetricJet<T>, v: &WeightJet<T>) -> Result<ShapeData<T>> {
    let m = g.n - 1;
    let h_upper: JetMatrix<T> = g
        .g_upper
        .iter()
        .map(|r| r.iter().map(|e| e.partial(0)).collect::<Result<_>>())
        .collect::<Result<_>>()?;
    let h = trace_lower(g, &h_upper);
    let shifted = h.checked_add(&v.v.partial(0)?.scale(&T::from_int(2)))?;
    let combo = |c: &Jet<T>| -> JetMatrix<T> {
        (0..m)
            .map(|a| (0..m).map(|b| &h_upper[a][b] - &(c * &g.g_upper[a][b])).collect())
            .collect()
    };
    let k_upper = combo(&h);
    let k_tilde_upper = combo(&shifted);
    Ok(ShapeData { h_upper, h, k_upper, k_tilde_upper })
}

/// `g_{αβ} M^{αβ}`.
pub fn trace_lower<T: Scalar>(g: &BoundaryMetricJet<T>, mat: &JetMatrix<T>) -> Jet<T> {
    let m = g.n - 1;
    let mut acc = Jet::zero(mat[0][0].shape());
    for a in 0..m {
        for b in 0..m {
            acc = &acc + &(&g.g_lower[a][b] * &mat[a][b]);
        }
    }
    acc
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::{rat, Rational};

    type R = Rational;

    #[test]
    fn diagonal_metric() {
        let s = JetShape::new(3, 3, 2);
        let r = Jet::<R>::variable(s, 0);
        let d = &Jet::one(s) + &r.scale(&rat(2, 1));
        let g = BoundaryMetricJet::from_lower(vec![vec![d.clone(), Jet::zero(s)], vec![Jet::zero(s), Jet::one(s)]]).unwrap();
        assert_eq!(g.delta(), &d);
        assert_eq!(&g.g_upper()[0][0] * &d, Jet::one(s));
        let e = compute_e(&g, &WeightJet::zero(s), false).unwrap();
        assert_eq!(e.constant_term(), rat(-1, 1));
    }

    #[test]
    fn weighted_e_for_linear_weight() {
        let s = JetShape::new(3, 3, 2);
        let g = BoundaryMetricJet::<R>::flat(s);
        let v = WeightJet::new(Jet::variable(s, 0).scale(&rat(3, 1)));
        assert_eq!(compute_e(&g, &v, true).unwrap(), Jet::constant(s, rat(3, 1)));
    }

    #[test]
    fn potential_for_radial_weights() {
        let s = JetShape::new(3, 4, 2);
        let g = BoundaryMetricJet::<R>::flat(s);
        let r = Jet::<R>::variable(s, 0);
        let a: R = rat(3, 2);
        let u = compute_u(&g, &WeightJet::new(r.scale(&a))).unwrap();
        assert_eq!(u, Jet::constant(s, a.clone() * a / rat::<R>(4, 1)));
        let b: R = rat(5, 1);
        let v = (&r * &r).scale(&(b.clone() / rat::<R>(2, 1)));
        let u = compute_u(&g, &WeightJet::new(v)).unwrap();
        let expect = &Jet::constant(s, -b.clone() / rat::<R>(2, 1)) + &(&r * &r).scale(&(b.clone() * b / rat::<R>(4, 1)));
        assert_eq!(u, expect);
    }

    #[test]
    fn rejects_indefinite_metric() {
        let s = JetShape::new(3, 1, 1);
        let g = vec![vec![Jet::<R>::constant(s, rat(-1, 1)), Jet::zero(s)], vec![Jet::zero(s), Jet::one(s)]];
        assert!(matches!(BoundaryMetricJet::from_lower(g), Err(Error::NonPositive(_))));
    }

    #[test]
    fn flat_symbols_vanish_below_principal() {
        let s = JetShape::new(3, 3, 3);
        let g = BoundaryMetricJet::<R>::flat(s);
        let v = WeightJet::zero(s);
        for gauge in [GaugeData::gauge_s(&g, &v).unwrap(), GaugeData::gauge_sigma(&g, &v).unwrap()] {
            let q = compute_q(&g, &gauge).unwrap();
            assert!(q.q1.is_zero() && q.q0.is_zero());
        }
    }

    #[test]
    fn shape_for_linear_weight() {
        let s = JetShape::new(4, 3, 2);
        let g = BoundaryMetricJet::<R>::flat(s);
        let v = WeightJet::new(Jet::variable(s, 0).scale(&rat(2, 1)));
        let sh = compute_shape(&g, &v).unwrap();
        assert!(sh.h.is_zero());
        assert_eq!(sh.k_tilde_upper[1][1].constant_term(), rat(-4, 1));
        assert!(sh.k_tilde_upper[0][1].is_zero());
    }

    #[test]
    fn density_keeps_irrational_constants_symbolic() {
        let s = JetShape::new(3, 2, 1);
        let delta = Jet::<R>::constant(s, rat(2, 1));
        let d = Density::weighted_sqrt_delta(&delta, &Jet::constant(s, rat(1, 1))).unwrap();
        assert_eq!(d.radicand, rat(2, 1));
        assert_eq!(d.log_factor, rat(-1, 1));
        assert!(d.to_jet().is_err());
        assert!((d.constant_f64() - (-1f64).exp() * 2f64.sqrt()).abs() < 1e-12);
    }
}
