//! First-order factorizations of the boundary-normal form of the operator.
//!
//! Gauge mode solves, grade by grade,
//! `∂_r b - E b + sum_{|K|≥1} ∂_ξ^K b D_y^K A_r / K! + b ∘ b - q ~ 0`,
//! scalar mode solves `∂_r c - Ẽ c + c ∘ c - q ~ 0` with the scalar `q`.
//! The principal component is `-w` in both modes.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{compute_e, compute_q, compute_q_scalar, BoundaryMetricJet, GaugeData, QSymbols, WeightJet};
use crate::jet::Jet;
use crate::mono::{monomials_of_degree, Mono};
use crate::scalar::Scalar;
use crate::symbol::{compose, composition_weight, derivative_cached, FormalSymbol, HomSymbol};
use crate::xipoly::{CJet, XiPoly};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    Gauge,
    Scalar,
}

/// Data driving one recursion: the zeroth-order coefficient (`E` or `Ẽ`),
/// the radial connection component (zero in scalar mode) and `q`.
#[derive(Clone, Debug)]
pub struct RecursionInput<T: Scalar> {
    pub mode: Mode,
    pub e: Jet<T>,
    pub a_r: Jet<T>,
    pub q: QSymbols<T>,
}

#[derive(Clone, Debug)]
pub struct FactorizationResult<T: Scalar> {
    pub mode: Mode,
    /// Components of grades `1, 0, ..., 2 - depth`.
    pub symbol: FormalSymbol<T>,
    pub depth: usize,
    pub input: RecursionInput<T>,
}

/// Outcome of the residual check.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum Verdict {
    Pass,
    /// The highest grade `j` whose component `b_j` fails its defining equation.
    Fail { grade: i32 },
}

/// Fails fast unless the jets carry enough derivatives for `depth`
/// components: `K_r ≥ depth + 1`, `K_y ≥ depth`.
pub fn check_budget(k_r: u32, k_y: u32, depth: usize) -> Result<()> {
    if depth < 1 {
        return Err(Error::Invalid("depth must be at least 1".into()));
    }
    let d = depth as u32;
    if k_r < d + 1 {
        return Err(Error::Budget { direction: 0 });
    }
    if k_y < d {
        return Err(Error::Budget { direction: 1 });
    }
    Ok(())
}

pub fn gauge_input<T: Scalar>(g: &BoundaryMetricJet<T>, gauge: &GaugeData<T>) -> Result<RecursionInput<T>> {
    let e = compute_e(g, &WeightJet::zero(g.shape()), false)?;
    Ok(RecursionInput { mode: Mode::Gauge, e, a_r: gauge.a_r.clone(), q: compute_q(g, gauge)? })
}

pub fn scalar_input<T: Scalar>(g: &BoundaryMetricJet<T>, v: &WeightJet<T>) -> Result<RecursionInput<T>> {
    let e = compute_e(g, v, true)?;
    let shape = e.shape();
    Ok(RecursionInput { mode: Mode::Scalar, e, a_r: Jet::zero(shape), q: compute_q_scalar(g, v)? })
}

pub fn factorize_gauge<T: Scalar>(g: &BoundaryMetricJet<T>, gauge: &GaugeData<T>, depth: usize) -> Result<FactorizationResult<T>> {
    check_budget(g.shape().k_r, g.shape().k_y, depth)?;
    solve(g, gauge_input(g, gauge)?, depth, &[])
}

pub fn factorize_scalar<T: Scalar>(g: &BoundaryMetricJet<T>, v: &WeightJet<T>, depth: usize) -> Result<FactorizationResult<T>> {
    check_budget(g.shape().k_r.min(v.v.k_r()), g.shape().k_y.min(v.v.k_y()), depth)?;
    solve(g, scalar_input(g, v)?, depth, &[])
}

/// Runs the recursion, adding `perturbations` to the components of their
/// grade as soon as they are computed (fault injection for the verifier).
pub fn solve<T: Scalar>(
    g: &BoundaryMetricJet<T>,
    input: RecursionInput<T>,
    depth: usize,
    perturbations: &[HomSymbol<T>],
) -> Result<FactorizationResult<T>> {
    let ctx = g.ctx();
    let nt = g.n() - 1;
    let lowest = 2 - depth as i32;
    let mut b: HashMap<i32, HomSymbol<T>> = HashMap::new();
    let perturbed = |s: HomSymbol<T>| -> Result<HomSymbol<T>> {
        let d = s.degree();
        perturbations
            .iter()
            .filter(|p| p.degree() == d)
            .try_fold(s, |acc, p| acc.checked_add(p))
    };
    b.insert(1, perturbed(HomSymbol::w(ctx).neg())?);

    let a_sym = HomSymbol::from_jet(ctx, input.a_r.complexify());
    let mut dxi: HashMap<(i32, Mono), HomSymbol<T>> = HashMap::new();
    let mut dy: HashMap<(i32, Mono), HomSymbol<T>> = HashMap::new();
    let mut da: HashMap<(i32, Mono), HomSymbol<T>> = HashMap::new();
    let e = input.e.complexify();

    for grade in (lowest + 1..=1).rev() {
        // every term of the grade-`grade` equation except 2 b_1 b_{grade-1}
        let bg = &b[&grade];
        let mut acc = bg.partial_base(0)?.checked_sub(&bg.mul_jet(&e))?;
        if input.mode == Mode::Gauge {
            for order in 1..=(1 - grade).max(0) as u32 {
                let l = grade + order as i32;
                for k in monomials_of_degree(nt, order) {
                    let x = derivative_cached(&mut dxi, l, k, &b[&l], |s, i| Ok(s.partial_xi(i)))?;
                    if x.is_zero() {
                        continue;
                    }
                    let y = derivative_cached(&mut da, 0, k, &a_sym, |s, i| s.partial_base(i + 1))?;
                    acc = acc.checked_add(&x.checked_mul(&y)?.scale(&composition_weight(k)))?;
                }
            }
        }
        // ∂_ξ^K b_m D^K b_l with m + l - |K| = grade
        for m in (grade - 1)..=1 {
            for l in (grade - 1)..=1 {
                let order = m + l - grade;
                if order < 0 {
                    continue;
                }
                if order == 0 && (m == grade - 1 || l == grade - 1) {
                    continue;
                }
                for k in monomials_of_degree(nt, order as u32) {
                    let x = derivative_cached(&mut dxi, m, k, &b[&m], |s, i| Ok(s.partial_xi(i)))?;
                    if x.is_zero() {
                        continue;
                    }
                    let y = derivative_cached(&mut dy, l, k, &b[&l], |s, i| s.partial_base(i + 1))?;
                    if y.is_zero() {
                        continue;
                    }
                    acc = acc.checked_add(&x.checked_mul(&y)?.scale(&composition_weight(k)))?;
                }
            }
        }
        if let Some(q) = q_component(&input.q, grade) {
            acc = acc.checked_sub(q)?;
        }
        let next = perturbed(acc.neg().div_by_two_b1())?;
        b.insert(grade - 1, next);
    }

    let mut symbol = FormalSymbol::new(ctx, 1, lowest);
    for (_, s) in b {
        symbol.set(s)?;
    }
    Ok(FactorizationResult { mode: input.mode, symbol, depth, input })
}

fn q_component<T: Scalar>(q: &QSymbols<T>, grade: i32) -> Option<&HomSymbol<T>> {
    match grade {
        2 => Some(&q.q2),
        1 => Some(&q.q1),
        0 => Some(&q.q0),
        _ => None,
    }
}

impl<T: Scalar> FactorizationResult<T> {
    /// Recomputes `∂_r b - E b + [b ∘ A_r - A_r b] + b ∘ b - q` with the full
    /// composition formula and checks every grade determined by the stored
    /// components.
    pub fn verify_residual(&self) -> Result<Verdict> {
        let residual = defining_residual(&self.symbol, &self.input)?;
        let lowest_checked = self.symbol.min() + 1;
        for grade in (lowest_checked..=2).rev() {
            if let Some(c) = residual.get(grade) {
                if !c.is_zero() {
                    return Ok(Verdict::Fail { grade: grade - 1 });
                }
            }
        }
        Ok(Verdict::Pass)
    }

    pub fn component(&self, grade: i32) -> Option<&HomSymbol<T>> {
        self.symbol.get(grade)
    }
}

/// Residual of the defining equation on grades `2` down to `b.min() + 1`.
pub fn defining_residual<T: Scalar>(b: &FormalSymbol<T>, input: &RecursionInput<T>) -> Result<FormalSymbol<T>> {
    let ctx = b.ctx();
    let e = input.e.complexify();
    let mut out = FormalSymbol::new(ctx, 2, b.min() + 1);
    let add = |out: &mut FormalSymbol<T>, f: &FormalSymbol<T>| -> Result<()> {
        for c in f.components() {
            if c.degree() >= out.min() {
                out.accumulate(c.clone())?;
            }
        }
        Ok(())
    };
    add(&mut out, &b.partial_r()?)?;
    add(&mut out, &b.mul_jet(&e).neg())?;
    add(&mut out, &compose(b, b)?)?;
    if !input.a_r.is_zero() {
        let mut a = FormalSymbol::new(ctx, 0, b.min() - 1);
        let a0 = HomSymbol::from_jet(ctx, input.a_r.complexify());
        a.set(a0.clone())?;
        let ba = compose(b, &a)?;
        add(&mut out, &ba)?;
        add(&mut out, &b.mul_jet(&input.a_r.complexify()).neg())?;
    }
    let mut q = FormalSymbol::new(ctx, 2, 0);
    q.set(input.q.q2.clone())?;
    q.set(input.q.q1.clone())?;
    q.set(input.q.q0.clone())?;
    add(&mut out, &q.neg())?;
    Ok(out)
}

/// A nonzero homogeneous symbol of degree `grade`: `w / q2^k` or `1 / q2^k`.
pub fn probe_symbol<T: Scalar>(g: &BoundaryMetricJet<T>, grade: i32) -> Result<HomSymbol<T>> {
    let ctx = g.ctx();
    let shape = g.shape();
    let one: CJet<T> = Jet::one(shape);
    if (1 - grade) % 2 == 0 {
        let k = ((1 - grade) / 2) as u32;
        HomSymbol::from_parts(ctx, grade, XiPoly::zero(shape), XiPoly::constant(one), k)
    } else {
        let k = (-grade) as u32;
        let k = k / 2;
        HomSymbol::from_parts(ctx, grade, XiPoly::constant(one), XiPoly::zero(shape), k)
    }
}

/// Runs the recursion with `probe_symbol(grade)` added to the component of
/// that grade.
pub fn solve_with_fault<T: Scalar>(
    g: &BoundaryMetricJet<T>,
    input: RecursionInput<T>,
    depth: usize,
    grade: i32,
) -> Result<FactorizationResult<T>> {
    let p = probe_symbol(g, grade)?;
    solve(g, input, depth, &[p])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::jet::JetShape;
    use crate::scalar::{rat, Rational};
    use num_complex::Complex;

    type R = Rational;

    fn value_at_base(s: &HomSymbol<R>, xi: &[f64]) -> Complex<f64> {
        s.restrict_boundary(&s.ctx().restricted().unwrap()).eval_at_base(xi)
    }

    #[test]
    fn flat_laplacian_factors_exactly() {
        let s = JetShape::new(3, 5, 4);
        let g = BoundaryMetricJet::<R>::flat(s);
        let v = WeightJet::zero(s);
        let f = factorize_gauge(&g, &GaugeData::gauge_sigma(&g, &v).unwrap(), 4).unwrap();
        for grade in -2..=0 {
            assert!(f.component(grade).unwrap().is_zero(), "grade {grade}");
        }
        assert_eq!(f.verify_residual().unwrap(), Verdict::Pass);
    }

    #[test]
    fn quadratic_weight_gauge_s() {
        let s = JetShape::new(3, 5, 4);
        let g = BoundaryMetricJet::<R>::flat(s);
        let r = Jet::<R>::variable(s, 0);
        let b = 3.0;
        let v = WeightJet::new((&r * &r).scale(&rat(3, 2)));
        let f = factorize_gauge(&g, &GaugeData::gauge_s(&g, &v).unwrap(), 3).unwrap();
        assert!(f.component(0).unwrap().is_zero());
        let val = value_at_base(f.component(-1).unwrap(), &[3.0, 4.0]);
        assert!((val.re - b / (4.0 * 5.0)).abs() < 1e-12, "{val}");
        assert_eq!(f.verify_residual().unwrap(), Verdict::Pass);
    }

    #[test]
    fn linear_weight_gauge_s() {
        let s = JetShape::new(3, 5, 4);
        let g = BoundaryMetricJet::<R>::flat(s);
        let a = 2.0;
        let v = WeightJet::new(Jet::variable(s, 0).scale(&rat(2, 1)));
        let f = factorize_gauge(&g, &GaugeData::gauge_s(&g, &v).unwrap(), 3).unwrap();
        assert!(f.component(0).unwrap().is_zero());
        let val = value_at_base(f.component(-1).unwrap(), &[0.0, 2.0]);
        assert!((val.re + a * a / 16.0).abs() < 1e-12, "{val}");
    }

    #[test]
    fn scalar_linear_and_quadratic_weights() {
        let s = JetShape::new(3, 5, 4);
        let g = BoundaryMetricJet::<R>::flat(s);
        let r = Jet::<R>::variable(s, 0);
        let f = factorize_scalar(&g, &WeightJet::new(r.scale(&rat(2, 1))), 3).unwrap();
        assert_eq!(value_at_base(f.component(0).unwrap(), &[1.0, 0.0]).re, 1.0);
        assert!((value_at_base(f.component(-1).unwrap(), &[1.0, 0.0]).re + 0.5).abs() < 1e-12);
        let f = factorize_scalar(&g, &WeightJet::new((&r * &r).scale(&rat(3, 2))), 3).unwrap();
        assert!(value_at_base(f.component(0).unwrap(), &[1.0, 0.0]).norm() < 1e-12);
        assert!((value_at_base(f.component(-1).unwrap(), &[1.0, 0.0]).re - 0.75).abs() < 1e-12);
        assert_eq!(f.verify_residual().unwrap(), Verdict::Pass);
    }

    #[test]
    fn injected_fault_is_located() {
        let s = JetShape::new(3, 5, 4);
        let g = BoundaryMetricJet::<R>::flat(s);
        let v = WeightJet::new(Jet::variable(s, 0));
        let input = scalar_input(&g, &v).unwrap();
        let f = solve_with_fault(&g, input, 4, 0).unwrap();
        assert_eq!(f.verify_residual().unwrap(), Verdict::Fail { grade: 0 });
    }

    #[test]
    fn budget_is_enforced() {
        let s = JetShape::new(3, 3, 4);
        let g = BoundaryMetricJet::<R>::flat(s);
        let v = WeightJet::zero(s);
        assert!(matches!(factorize_scalar(&g, &v, 3), Err(Error::Budget { direction: 0 })));
    }
}
