//! Recovery of boundary Taylor coefficients of the metric and the weight
//! from DN symbol data.
//!
//! A radial coefficient of order `m` (of `g^{αβ}` or `V`) first enters the
//! grade `1 - m` component, and it enters pointwise in `y`. Coefficients are
//! found order by order: the forward computation runs on a model built from
//! the coefficients known so far, once with the new unknowns at zero and once
//! per unknown set to one, and the data is matched numerator coefficient by
//! numerator coefficient. In gauge `s` the weight enters grade `-1` through
//! `½(∂_r V)² + E ∂_r V`, so prescribing `∂_r² V` leaves a quadratic over jets.
//!
//! A coefficient recovered from grade `1 - m` is valid to `y`-order
//! `K_y - m`; every comparison is truncated to the order its inputs support.

use num_complex::Complex;
use serde::{Deserialize, Serialize};

use crate::dn::{dn_symbol_gauge, dn_symbol_scalar, DNSymbolData, MapKind, PrincipalForm};
use crate::error::{Error, Result};
use crate::geometry::{BoundaryMetricJet, GaugeTag, WeightJet};
use crate::jet::{Jet, JetShape};
use crate::linsolve::{
    common_numerators, eliminate, numerator_magnitude, numerator_rows, numerator_sub, numerator_truncated, solve,
    symbol_rows, Numerators, Row,
};
use crate::matrix::{inverse_and_det, JetMatrix};
use crate::scalar::Scalar;
use crate::symbol::HomSymbol;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    /// Gauge `s` and `σ` data: `g^{αβ}`, `∂_r g^{αβ}` and `V` up to a constant.
    GaugePair,
    /// Any DN data with `V` known: radial coefficients of `g^{αβ}`.
    MetricKnownWeight,
    /// Scalar data with `g` known: radial coefficients of `V`.
    WeightFromScalar,
    /// Gauge `s` data with `g` known and one radial derivative of `V` prescribed.
    WeightFromGauge,
    /// Gauge pair with `δ` known and one radial derivative of `V` prescribed.
    GaugePairKnownVolume,
    /// Scalar data with `δ` known.
    ScalarKnownVolume,
}

/// Extra information fixing the quadratic step of the gauge recovery.
#[derive(Clone, Debug)]
pub enum Prescription<T: Scalar> {
    /// `∂_r V` at `r = 0`.
    FirstDerivative(Jet<T>),
    /// `∂_r² V` at `r = 0`.
    SecondDerivative(Jet<T>),
}

/// Mismatch between re-synthesized and input symbols at one grade.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GradeResidual {
    pub data: String,
    pub grade: i32,
    /// `y`-order of the comparison.
    pub order: u32,
    pub max_abs: f64,
    pub vanishes: bool,
}

/// One solution of the quadratic step, continued to higher orders.
#[derive(Clone, Debug)]
pub struct WeightBranch<T: Scalar> {
    /// `∂_r V` at the base point.
    pub root: T,
    /// `∂_r^m V|_{r=0}` for `m = 0..=order`.
    pub weight: Vec<Jet<T>>,
    /// `∂_r^m g^{αβ}|_{r=0}`, when the metric is recovered too.
    pub metric: Option<Vec<JetMatrix<T>>>,
    /// Highest radial order reached; below the request when continuing the
    /// branch led to an inconsistent system.
    pub order: usize,
    pub residuals: Vec<GradeResidual>,
}

impl<T: Scalar> WeightBranch<T> {
    pub fn verified(&self) -> bool {
        self.residuals.iter().all(|r| r.vanishes)
    }
}

#[derive(Clone, Debug)]
pub struct ReconstructionReport<T: Scalar> {
    pub method: Method,
    /// Uniquely determined `∂_r^m g^{αβ}|_{r=0}`, `m = 0, 1, ...`.
    pub recovered_metric: Option<Vec<JetMatrix<T>>>,
    /// Uniquely determined `∂_r^m V|_{r=0}`. Branch-dependent orders are only
    /// in `branches`.
    pub recovered_weight: Option<Vec<Jet<T>>>,
    /// `false` when `V|_{r=0}` is normalized to vanish at the base point.
    pub weight_absolute: bool,
    pub branches: Vec<WeightBranch<T>>,
    /// Discriminant of the quadratic step, as a jet in `y`.
    pub discriminant: Option<Jet<T>>,
    pub residuals: Vec<GradeResidual>,
}

impl<T: Scalar> ReconstructionReport<T> {
    fn new(method: Method, model: &Model<T>, weight_absolute: bool, residuals: Vec<GradeResidual>) -> Self {
        ReconstructionReport {
            method,
            recovered_metric: model.metric_list(),
            recovered_weight: model.weight_list(),
            weight_absolute,
            branches: Vec::new(),
            discriminant: None,
            residuals,
        }
    }

    /// All consumed grades are reproduced.
    pub fn verified(&self) -> bool {
        self.residuals.iter().all(|r| r.vanishes)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Slot {
    Metric(usize, usize),
    Weight,
}

fn metric_slots(n: usize) -> Vec<Slot> {
    let m = n - 1;
    (0..m).flat_map(|a| (a..m).map(move |b| Slot::Metric(a, b))).collect()
}

/// Radial coefficients found so far, each with the `y`-order it is valid to.
/// Missing orders are zero in the synthesized jets.
#[derive(Clone, Debug)]
struct Model<T: Scalar> {
    n: usize,
    k_y: u32,
    metric: Vec<Option<(JetMatrix<T>, u32)>>,
    weight: Vec<Option<(Jet<T>, u32)>>,
}

impl<T: Scalar> Model<T> {
    fn new(n: usize, k_y: u32) -> Self {
        Model { n, k_y, metric: Vec::new(), weight: Vec::new() }
    }

    fn boundary_shape(&self) -> JetShape {
        JetShape::new(self.n, 0, self.k_y)
    }

    fn set_metric(&mut self, m: usize, g: JetMatrix<T>, valid: u32) {
        if self.metric.len() <= m {
            self.metric.resize(m + 1, None);
        }
        let valid = valid.min(self.k_y);
        let g = g.iter().map(|r| r.iter().map(|e| e.restrict_boundary().truncated(0, valid)).collect()).collect();
        self.metric[m] = Some((g, valid));
    }

    fn set_weight(&mut self, m: usize, v: Jet<T>, valid: u32) {
        if self.weight.len() <= m {
            self.weight.resize(m + 1, None);
        }
        let valid = valid.min(self.k_y);
        self.weight[m] = Some((v.restrict_boundary().truncated(0, valid), valid));
    }

    fn metric_at(&self, m: usize) -> Option<&JetMatrix<T>> {
        self.metric.get(m).and_then(|x| x.as_ref()).map(|x| &x.0)
    }

    fn weight_at(&self, m: usize) -> Option<&Jet<T>> {
        self.weight.get(m).and_then(|x| x.as_ref()).map(|x| &x.0)
    }

    fn set_slot(&mut self, m: usize, slot: Slot, value: Jet<T>, valid: u32) {
        match slot {
            Slot::Weight => self.set_weight(m, value, valid),
            Slot::Metric(a, b) => {
                let k = self.n - 1;
                let zero = Jet::zero(self.boundary_shape());
                let mut g = self.metric_at(m).cloned().unwrap_or_else(|| vec![vec![zero; k]; k]);
                g[a][b] = value.clone();
                g[b][a] = value;
                let v = self.metric.get(m).and_then(|x| x.as_ref()).map_or(valid, |x| x.1.min(valid));
                self.set_metric(m, g, v);
            }
        }
    }

    fn with_slot(&self, m: usize, slot: Slot, value: Jet<T>) -> Self {
        let mut out = self.clone();
        out.set_slot(m, slot, value, self.k_y);
        out
    }

    fn with_zero_slots(&self, m: usize, slots: &[Slot]) -> Self {
        let mut out = self.clone();
        for s in slots {
            out.set_slot(m, *s, Jet::zero(self.boundary_shape()), self.k_y);
        }
        out
    }

    /// `y`-order up to which grade `1 - top` of the model is reliable: a
    /// coefficient of order `m` enters that grade with at most `top - m`
    /// further derivatives.
    fn valid_at(&self, top: usize) -> Result<u32> {
        let mut v = self.k_y as i64 - top as i64;
        let metric = self.metric.iter().enumerate().filter_map(|(m, x)| x.as_ref().map(|x| (m, x.1)));
        let weight = self.weight.iter().enumerate().filter_map(|(m, x)| x.as_ref().map(|x| (m, x.1)));
        for (m, valid) in metric.chain(weight).filter(|(m, _)| *m <= top) {
            v = v.min(valid as i64 - (top - m) as i64);
        }
        if v < 0 {
            return Err(Error::Truncation(format!("no valid y-order left at grade {}", 1 - top as i32)));
        }
        Ok(v as u32)
    }

    /// Metric and weight jets with `K_r = top + 2`.
    fn build(&self, top: usize) -> Result<(BoundaryMetricJet<T>, WeightJet<T>)> {
        let shape = JetShape::new(self.n, top as u32 + 2, self.k_y);
        let zero = Jet::zero(self.boundary_shape());
        let k = self.n - 1;
        if self.metric_at(0).is_none() {
            return Err(Error::Invalid("model has no boundary metric".into()));
        }
        let mut g = vec![vec![Jet::zero(shape); k]; k];
        for (a, row) in g.iter_mut().enumerate() {
            for (b, e) in row.iter_mut().enumerate() {
                let coeffs: Vec<Jet<T>> = (0..self.metric.len())
                    .map(|m| self.metric_at(m).map_or(zero.clone(), |x| x[a][b].clone()))
                    .collect();
                *e = Jet::from_radial(shape, &coeffs);
            }
        }
        let coeffs: Vec<Jet<T>> = (0..self.weight.len())
            .map(|m| self.weight_at(m).cloned().unwrap_or_else(|| zero.clone()))
            .collect();
        Ok((BoundaryMetricJet::from_upper(g)?, WeightJet::new(Jet::from_radial(shape, &coeffs))))
    }

    fn metric_list(&self) -> Option<Vec<JetMatrix<T>>> {
        let out: Vec<_> = self.metric.iter().map_while(|x| x.as_ref().map(|x| x.0.clone())).collect();
        (!out.is_empty()).then_some(out)
    }

    fn weight_list(&self) -> Option<Vec<Jet<T>>> {
        let out: Vec<_> = self.weight.iter().map_while(|x| x.as_ref().map(|x| x.0.clone())).collect();
        (!out.is_empty()).then_some(out)
    }
}

fn label<T: Scalar>(d: &DNSymbolData<T>) -> String {
    match (d.kind, d.gauge) {
        (MapKind::Lambda0, _) => "lambda0".into(),
        (MapKind::Lambda1, Some(GaugeTag::GaugeS)) => "gauge_s".into(),
        (MapKind::Lambda1, Some(GaugeTag::GaugeSigma)) => "gauge_sigma".into(),
        (MapKind::Lambda1, _) => "lambda1".into(),
    }
}

/// The same kind of DN data for another `(g, V)`.
fn synthesize<T: Scalar>(
    like: &DNSymbolData<T>,
    g: &BoundaryMetricJet<T>,
    v: &WeightJet<T>,
    depth: usize,
) -> Result<DNSymbolData<T>> {
    match (like.kind, like.gauge) {
        (MapKind::Lambda0, _) => dn_symbol_scalar(g, v, depth),
        (MapKind::Lambda1, Some(tag)) => dn_symbol_gauge(g, v, depth, tag),
        (MapKind::Lambda1, None) => Err(Error::Invalid("gauge data without a gauge tag".into())),
    }
}

fn grade_of<T: Scalar>(model: &Model<T>, top: usize, like: &DNSymbolData<T>) -> Result<HomSymbol<T>> {
    let (g, v) = model.build(top)?;
    Ok(synthesize(like, &g, &v, top + 1)?.component(1 - top as i32)?.clone())
}

/// Row fixing the `top`-th radial derivative of `δ`.
fn volume_row<T: Scalar>(base: &Model<T>, probes: &[Model<T>], top: usize, delta: &Jet<T>, kv: u32) -> Result<Row<T>> {
    let coeff = |m: &Model<T>| -> Result<Jet<T>> {
        Ok(m.build(top)?.0.delta().radial_coefficient(top as u32).truncated(0, kv))
    };
    let d0 = coeff(base)?;
    let coeffs = probes.iter().map(|p| Ok(&coeff(p)? - &d0)).collect::<Result<_>>()?;
    let rhs = &delta.radial_coefficient(top as u32).truncated(0, kv) - &d0;
    Ok(Row { coeffs, rhs })
}

/// Solves for the order-`top` coefficients in `slots` from grade `1 - top`.
fn linear_step<T: Scalar>(
    model: &mut Model<T>,
    top: usize,
    slots: &[Slot],
    data: &[&DNSymbolData<T>],
    delta: Option<&Jet<T>>,
) -> Result<()> {
    let kv = model.valid_at(top)?;
    let base = model.with_zero_slots(top, slots);
    let one = Jet::one(model.boundary_shape());
    let probes: Vec<Model<T>> = slots.iter().map(|s| base.with_slot(top, *s, one.clone())).collect();
    let mut rows = Vec::new();
    for d in data {
        let b = grade_of(&base, top, d)?;
        let ps = probes.iter().map(|p| grade_of(p, top, d)).collect::<Result<Vec<_>>>()?;
        rows.extend(symbol_rows(&ps, &b, d.component(1 - top as i32)?, kv));
    }
    if let Some(delta) = delta.filter(|_| slots.iter().any(|s| matches!(s, Slot::Metric(..)))) {
        rows.push(volume_row(&base, &probes, top, delta, kv)?);
    }
    let sol = solve(rows, slots.len())?;
    for (s, x) in slots.iter().zip(sol) {
        model.set_slot(top, *s, x, kv);
    }
    Ok(())
}

/// Grade `-1` with `∂_r² V` fixed and `∂_r V` unknown, together with the
/// order-two coefficients in `slots`. Returns one model per real root and the
/// discriminant.
fn quadratic_step<T: Scalar>(
    model: &Model<T>,
    slots: &[Slot],
    data: &[&DNSymbolData<T>],
    delta: Option<&Jet<T>>,
) -> Result<(Vec<Model<T>>, Option<Jet<T>>)> {
    const TOP: usize = 2;
    let kv = model.valid_at(TOP)?;
    let bshape = model.boundary_shape();
    let one = Jet::one(bshape);
    let base = model.with_zero_slots(TOP, slots).with_slot(1, Slot::Weight, Jet::zero(bshape));
    let probes: Vec<Model<T>> = slots.iter().map(|s| base.with_slot(TOP, *s, one.clone())).collect();
    let plus = base.with_slot(1, Slot::Weight, one.clone());
    let minus = base.with_slot(1, Slot::Weight, -&one);
    let half = Complex::new(T::from_ratio(1, 2), T::zero());
    let k = slots.len();
    let mut rows = Vec::new();
    for d in data {
        let mut syms = probes.iter().map(|p| grade_of(p, TOP, d)).collect::<Result<Vec<_>>>()?;
        syms.push(grade_of(&base, TOP, d)?);
        syms.push(grade_of(&plus, TOP, d)?);
        syms.push(grade_of(&minus, TOP, d)?);
        syms.push(d.component(1 - TOP as i32)?.clone());
        let refs: Vec<&HomSymbol<T>> = syms.iter().collect();
        let nums: Vec<Numerators<T>> = common_numerators(&refs).iter().map(|x| numerator_truncated(x, kv)).collect();
        let (b, p, m, obs) = (&nums[k], &nums[k + 1], &nums[k + 2], &nums[k + 3]);
        let mut cols: Vec<Numerators<T>> = nums[..k].iter().map(|c| numerator_sub(c, b)).collect();
        let diff = numerator_sub(p, m);
        cols.push((diff.0.scale(&half), diff.1.scale(&half)));
        let sum = (p.0.add(&m.0).scale(&half), p.1.add(&m.1).scale(&half));
        cols.push(numerator_sub(&sum, b));
        rows.extend(numerator_rows(&cols, &numerator_sub(obs, b)));
    }
    if let Some(delta) = delta.filter(|_| k > 0) {
        let mut r = volume_row(&base, &probes, TOP, delta, kv)?;
        r.coeffs.push(Jet::zero(bshape));
        r.coeffs.push(Jet::zero(bshape));
        rows.push(r);
    }
    let (pivots, rest) = eliminate(rows, k)?;
    let lead = |i: usize| {
        rest.iter()
            .filter(|r| !r.coeffs[i].constant_term().is_negligible())
            .max_by(|a, b| a.coeffs[i].constant_term().magnitude().total_cmp(&b.coeffs[i].constant_term().magnitude()))
    };
    // cu t² + ct t = rhs
    let (roots, disc) = if let Some(r) = lead(k + 1) {
        let (ct, cu) = (&r.coeffs[k], &r.coeffs[k + 1]);
        let disc = &(ct * ct) + &(cu * &r.rhs).scale(&T::from_int(4));
        let two_cu_inv = cu.scale(&T::from_int(2)).reciprocal()?;
        let roots = if disc.is_zero() {
            vec![&(-ct) * &two_cu_inv]
        } else if disc.constant_term().is_negligible() {
            return Err(Error::Degenerate("discriminant vanishes at the base point only".into()));
        } else if disc.constant_term() < T::zero() {
            Vec::new()
        } else {
            let sq = disc.sqrt()?;
            let mut rs = vec![&(&(-ct) - &sq) * &two_cu_inv, &(&(-ct) + &sq) * &two_cu_inv];
            rs.sort_by(|a, b| a.constant_term().partial_cmp(&b.constant_term()).unwrap());
            rs
        };
        (roots, Some(disc))
    } else if let Some(r) = lead(k) {
        (vec![r.rhs.checked_div(&r.coeffs[k])?], None)
    } else {
        return Err(Error::Degenerate("the data does not constrain ∂_r V".into()));
    };
    let mut out = Vec::with_capacity(roots.len());
    for t in roots {
        let mut mdl = model.clone();
        let t2 = &t * &t;
        for (s, p) in slots.iter().zip(&pivots) {
            let x = &(&p.rhs - &(&p.coeffs[k] * &t)) - &(&p.coeffs[k + 1] * &t2);
            mdl.set_slot(TOP, *s, x, kv);
        }
        mdl.set_weight(1, t, kv);
        out.push(mdl);
    }
    Ok((out, disc))
}

/// Re-synthesizes grades `1` down to `1 - top` and compares with the data.
fn verify<T: Scalar>(model: &Model<T>, top: usize, data: &[&DNSymbolData<T>]) -> Result<Vec<GradeResidual>> {
    let (g, v) = model.build(top)?;
    let mut out = Vec::new();
    for d in data {
        let s = synthesize(d, &g, &v, top + 1)?;
        for m in 0..=top {
            let grade = 1 - m as i32;
            let kv = model.valid_at(m)?;
            let nums = common_numerators(&[s.component(grade)?, d.component(grade)?]);
            let diff = numerator_truncated(&numerator_sub(&nums[0], &nums[1]), kv);
            out.push(GradeResidual {
                data: label(d),
                grade,
                order: kv,
                max_abs: numerator_magnitude(&diff),
                vanishes: diff.0.is_zero() && diff.1.is_zero(),
            });
        }
    }
    Ok(out)
}

fn require<T: Scalar>(d: &DNSymbolData<T>, kind: MapKind, gauge: Option<GaugeTag>) -> Result<()> {
    if d.kind != kind || (kind == MapKind::Lambda1 && d.gauge != gauge) {
        return Err(Error::Invalid(format!("expected {kind:?} data in gauge {gauge:?}, got {}", label(d))));
    }
    if d.n < 3 {
        return Err(Error::Invalid("recovery needs n ≥ 3".into()));
    }
    Ok(())
}

fn require_order<T: Scalar>(d: &DNSymbolData<T>, order: usize) -> Result<()> {
    if order + 1 > d.depth {
        return Err(Error::Truncation(format!(
            "radial order {order} needs depth {}, data has depth {}",
            order + 1,
            d.depth
        )));
    }
    Ok(())
}

fn jet_pow<T: Scalar>(j: &Jet<T>, k: usize) -> Jet<T> {
    (0..k).fold(Jet::one(j.shape()), |acc, _| &acc * j)
}

fn is_one<T: Scalar>(x: &T) -> bool {
    x.sub_ref(&T::one()).is_negligible()
}

fn scaled_matrix<T: Scalar>(m: &JetMatrix<T>, f: &Jet<T>) -> JetMatrix<T> {
    m.iter().map(|r| r.iter().map(|e| e * f).collect()).collect()
}

/// `g_{αβ} M^{αβ}` with `g^{αβ}` given.
fn trace_with<T: Scalar>(g_upper: &JetMatrix<T>, m: &JetMatrix<T>) -> Result<Jet<T>> {
    let (g_lower, _) = inverse_and_det(g_upper, true)?;
    let mut acc = Jet::zero(m[0][0].shape());
    for (ra, rm) in g_lower.iter().zip(m) {
        for (x, y) in ra.iter().zip(rm) {
            acc = &acc + &(x * y);
        }
    }
    Ok(acc)
}

/// `g^{αβ}` and `δ` at `r = 0` from the squared principal observable
/// `e^{2ℓ} ρ N^{αβ}` with `N = (δ/ρ) e2 g^{αβ}`, where `e2 = e^{-2(V - V(0))}`
/// is known (`1` in gauge `σ`). Uses `det N = δ^{n-2} e2^{n-1} / ρ^{n-1}`.
fn metric_from_principal<T: Scalar>(pf: &PrincipalForm<T>, n: usize, e2: &Jet<T>) -> Result<(JetMatrix<T>, Jet<T>)> {
    let (_, det) = inverse_and_det(&pf.matrix, true)?;
    let rho = &pf.radicand;
    let c = det.scale(rho).checked_div(&jet_pow(e2, n - 1))?;
    if !is_one(&c.constant_term()) {
        return Err(Error::Inconsistent("principal form and density disagree at the base point".into()));
    }
    let delta = c.root(n as u32 - 2)?.scale(rho);
    let f = (&delta * e2).reciprocal()?.scale(rho);
    Ok((scaled_matrix(&pf.matrix, &f), delta))
}

/// `V - V(0)` at `r = 0` from a density `e^{-V} sqrt δ` with `δ` known.
fn weight_from_density<T: Scalar>(d: &DNSymbolData<T>, delta0: &Jet<T>) -> Result<Jet<T>> {
    let rho = &d.density.radicand;
    let inv = rho.inv().ok_or(Error::NonUnit)?;
    let s = delta0.scale(&inv);
    if !is_one(&s.constant_term()) {
        return Err(Error::Inconsistent("density radicand differs from δ at the base point".into()));
    }
    Ok(-d.density.unit.checked_div(&s.sqrt()?)?.ln()?)
}

/// `K^{αβ}` with `K^{αβ} ξ_α ξ_β = -4 q2 (b_0 - b_0|_{K=0})`, where the
/// model carries every coefficient of order zero and none of order one.
/// Sampled at the basis vectors and their pairwise sums.
fn grade_zero_form<T: Scalar>(model: &Model<T>, d: &DNSymbolData<T>) -> Result<JetMatrix<T>> {
    let kv = model.valid_at(1)?;
    let r0 = grade_of(model, 1, d)?;
    let nums = common_numerators(&[d.component(0)?, &r0]);
    let p = d.component(0)?.q2_power().max(r0.q2_power());
    let diff = numerator_truncated(&numerator_sub(&nums[0], &nums[1]), kv);
    let q2 = d.ctx().q2_poly();
    let k = d.n - 1;
    let sample = |xi: &[T]| -> Result<Jet<T>> {
        if !diff.1.eval(xi).is_zero() {
            return Err(Error::Inconsistent("grade-zero difference is not a quadratic form over q2".into()));
        }
        let qv = q2.eval(xi);
        let val = (&diff.0.eval(xi) * &qv).checked_div(&jet_pow_c(&qv, p))?;
        let q = val.scale(&Complex::new(T::from_int(-4), T::zero()));
        if !q.map(|z| z.im.clone()).is_zero() {
            return Err(Error::Inconsistent("grade-zero quadratic form is not real".into()));
        }
        Ok(q.map(|z| z.re.clone()))
    };
    let unit = |idx: &[usize]| -> Vec<T> {
        let mut v = vec![T::zero(); k];
        for &i in idx {
            v[i] = v[i].add_ref(&T::one());
        }
        v
    };
    let diag: Vec<Jet<T>> = (0..k).map(|a| sample(&unit(&[a]))).collect::<Result<_>>()?;
    let half = T::from_ratio(1, 2);
    let mut out = vec![vec![Jet::zero(diag[0].shape()); k]; k];
    for a in 0..k {
        out[a][a] = diag[a].clone();
        for b in a + 1..k {
            let s = sample(&unit(&[a, b]))?;
            let e = (&(&s - &diag[a]) - &diag[b]).scale(&half);
            out[a][b] = e.clone();
            out[b][a] = e;
        }
    }
    Ok(out)
}

fn jet_pow_c<T: Scalar>(j: &Jet<Complex<T>>, k: u32) -> Jet<Complex<T>> {
    (0..k).fold(Jet::one(j.shape()), |acc, _| &acc * j)
}

fn combine<T: Scalar>(a: &JetMatrix<T>, b: &JetMatrix<T>, f: &Jet<T>) -> JetMatrix<T> {
    a.iter()
        .zip(b)
        .map(|(ra, rb)| ra.iter().zip(rb).map(|(x, y)| x + &(y * f)).collect())
        .collect()
}

/// `g^{αβ}`, `∂_r g^{αβ}` and `V` modulo a constant at `r = 0` from the two
/// gauge presentations of the gauge DN map.
pub fn recover_from_gauge_pair<T: Scalar>(
    s: &DNSymbolData<T>,
    sigma: &DNSymbolData<T>,
) -> Result<ReconstructionReport<T>> {
    let model = gauge_pair_model(s, sigma)?;
    let residuals = verify(&model, 1, &[s, sigma])?;
    Ok(ReconstructionReport::new(Method::GaugePair, &model, false, residuals))
}

fn gauge_pair_model<T: Scalar>(s: &DNSymbolData<T>, sigma: &DNSymbolData<T>) -> Result<Model<T>> {
    require(s, MapKind::Lambda1, Some(GaugeTag::GaugeS))?;
    require(sigma, MapKind::Lambda1, Some(GaugeTag::GaugeSigma))?;
    if s.n != sigma.n || s.source_shape.k_y != sigma.source_shape.k_y {
        return Err(Error::Inconsistent("gauge presentations over different charts".into()));
    }
    require_order(sigma, 1)?;
    let n = s.n;
    let k_y = sigma.source_shape.k_y;
    let mut model = Model::new(n, k_y);
    let pf = sigma.principal_form()?;
    let (g0, _) = metric_from_principal(&pf, n, &Jet::one(model.boundary_shape()))?;
    let v0 = -s.density.unit.checked_div(&sigma.density.unit)?.ln()?;
    model.set_metric(0, g0.clone(), k_y);
    model.set_weight(0, v0, k_y);
    let kv = model.valid_at(1)?;
    let kf = grade_zero_form(&model, sigma)?;
    // k = h^{αβ} - h g^{αβ} has trace (2 - n) h
    let h = trace_with(&g0, &kf)?.scale(&T::from_int(2 - n as i64).inv().unwrap());
    model.set_metric(1, combine(&kf, &g0, &h), kv);
    Ok(model)
}

/// Radial coefficients `∂_r^m g^{αβ}|_{r=0}`, `m = 0..=order`, from any DN
/// data when the weight is known.
pub fn recover_metric<T: Scalar>(
    d: &DNSymbolData<T>,
    v: &WeightJet<T>,
    order: usize,
) -> Result<ReconstructionReport<T>> {
    if d.kind == MapKind::Lambda1 && d.gauge.is_none() {
        return Err(Error::Invalid("gauge data without a gauge tag".into()));
    }
    require(d, d.kind, d.gauge)?;
    require_order(d, order)?;
    let n = d.n;
    let k_y = d.source_shape.k_y;
    let mut model = Model::new(n, k_y);
    for m in 0..=v.v.k_r() {
        model.set_weight(m as usize, v.v.radial_coefficient(m), k_y);
    }
    let bshape = model.boundary_shape();
    let e2 = if d.gauge == Some(GaugeTag::GaugeSigma) {
        Jet::one(bshape)
    } else {
        let w = model.weight_at(0).cloned().unwrap_or_else(|| Jet::zero(bshape));
        (&Jet::constant(bshape, w.constant_term()) - &w).scale(&T::from_int(2)).exp()?
    };
    let (g0, _) = metric_from_principal(&d.principal_form()?, n, &e2)?;
    model.set_metric(0, g0, k_y);
    let slots = metric_slots(n);
    for m in 1..=order {
        linear_step(&mut model, m, &slots, &[d], None)?;
    }
    let residuals = verify(&model, order, &[d])?;
    Ok(ReconstructionReport::new(Method::MetricKnownWeight, &model, true, residuals))
}

fn known_metric_model<T: Scalar>(d: &DNSymbolData<T>, g: &BoundaryMetricJet<T>) -> Result<Model<T>> {
    if g.n() != d.n {
        return Err(Error::Incompatible(format!("metric in dimension {} for data in dimension {}", g.n(), d.n)));
    }
    let k_y = d.source_shape.k_y;
    let mut model = Model::new(d.n, k_y);
    for m in 0..=g.shape().k_r {
        model.set_metric(m as usize, g.upper_radial_coefficient(m), g.shape().k_y);
    }
    Ok(model)
}

/// Radial coefficients `∂_r^m V|_{r=0}`, `m = 0..=order`, from scalar DN
/// data with the metric known. `V|_{r=0}` is absolute.
pub fn recover_weight_scalar<T: Scalar>(
    d: &DNSymbolData<T>,
    g: &BoundaryMetricJet<T>,
    order: usize,
) -> Result<ReconstructionReport<T>> {
    require(d, MapKind::Lambda0, None)?;
    require_order(d, order)?;
    let mut model = known_metric_model(d, g)?;
    let delta0 = g.delta().restrict_boundary();
    let v0 = weight_from_density(d, &delta0)?;
    let shift = Jet::constant(v0.shape(), d.density.log_factor.neg_ref());
    model.set_weight(0, &v0 + &shift, model.k_y);
    for m in 1..=order {
        linear_step(&mut model, m, &[Slot::Weight], &[d], None)?;
    }
    let residuals = verify(&model, order, &[d])?;
    Ok(ReconstructionReport::new(Method::WeightFromScalar, &model, true, residuals))
}

/// Continues a branch with linear steps; stops at the first order whose
/// system is inconsistent or underdetermined.
fn continue_branch<T: Scalar>(
    model: &mut Model<T>,
    from: usize,
    to: usize,
    slots: &[Slot],
    data: &[&DNSymbolData<T>],
    delta: Option<&Jet<T>>,
) -> Result<usize> {
    let mut reached = from - 1;
    for m in from..=to {
        match linear_step(model, m, slots, data, delta) {
            Ok(()) => reached = m,
            Err(Error::Inconsistent(_) | Error::Degenerate(_)) => break,
            Err(e) => return Err(e),
        }
    }
    Ok(reached)
}

fn branch_report<T: Scalar>(
    model: &Model<T>,
    reached: usize,
    with_metric: bool,
    data: &[&DNSymbolData<T>],
) -> Result<WeightBranch<T>> {
    let weight: Vec<Jet<T>> = (0..=reached).map(|m| model.weight_at(m).cloned().unwrap()).collect();
    let metric = with_metric.then(|| (0..=reached).map(|m| model.metric_at(m).cloned().unwrap()).collect());
    Ok(WeightBranch {
        root: weight[1].constant_term(),
        weight,
        metric,
        order: reached,
        residuals: verify(model, reached, data)?,
    })
}

/// Radial coefficients of `V` from gauge-`s` data with the metric known.
/// `V|_{r=0}` is recovered modulo a constant. Prescribing `∂_r V` makes every
/// step linear; prescribing `∂_r² V` leaves a quadratic for `∂_r V` with zero,
/// one or two real branches.
pub fn recover_weight_gauge<T: Scalar>(
    d: &DNSymbolData<T>,
    g: &BoundaryMetricJet<T>,
    prescription: &Prescription<T>,
    order: usize,
) -> Result<ReconstructionReport<T>> {
    require(d, MapKind::Lambda1, Some(GaugeTag::GaugeS))?;
    require_order(d, order)?;
    let mut model = known_metric_model(d, g)?;
    let v0 = weight_from_density(d, &g.delta().restrict_boundary())?;
    model.set_weight(0, v0, model.k_y);
    let slots = [Slot::Weight];
    match prescription {
        Prescription::FirstDerivative(t) => {
            model.set_weight(1, t.clone(), t.k_y());
            for m in 2..=order {
                linear_step(&mut model, m, &slots, &[d], None)?;
            }
            let residuals = verify(&model, order, &[d])?;
            Ok(ReconstructionReport::new(Method::WeightFromGauge, &model, false, residuals))
        }
        Prescription::SecondDerivative(s) => {
            if order < 2 {
                return Err(Error::Invalid("a prescribed ∂_r² V needs order at least 2".into()));
            }
            let unique = model.clone();
            model.set_weight(2, s.clone(), s.k_y());
            let (roots, disc) = quadratic_step(&model, &[], &[d], None)?;
            let mut branches = Vec::new();
            for mut b in roots {
                let reached = continue_branch(&mut b, 3, order, &slots, &[d], None)?;
                branches.push(branch_report(&b, reached, false, &[d])?);
            }
            let mut rep = ReconstructionReport::new(Method::WeightFromGauge, &unique, false, verify(&unique, 0, &[d])?);
            rep.recovered_metric = None;
            rep.branches = branches;
            rep.discriminant = disc;
            Ok(rep)
        }
    }
}

/// Metric and weight coefficients from the gauge pair when `δ(r, y)` is
/// known, with one radial derivative of `V` prescribed.
pub fn recover_from_gauge_pair_with_volume<T: Scalar>(
    s: &DNSymbolData<T>,
    sigma: &DNSymbolData<T>,
    delta: &Jet<T>,
    prescription: &Prescription<T>,
    order: usize,
) -> Result<ReconstructionReport<T>> {
    require_order(s, order)?;
    require_order(sigma, order)?;
    let mut model = gauge_pair_model(s, sigma)?;
    check_volume(sigma, delta)?;
    let data = [s, sigma];
    let mut slots = metric_slots(s.n);
    slots.push(Slot::Weight);
    match prescription {
        Prescription::FirstDerivative(t) => {
            model.set_weight(1, t.clone(), t.k_y());
            for m in 2..=order {
                linear_step(&mut model, m, &slots, &data, Some(delta))?;
            }
            let residuals = verify(&model, order, &data)?;
            Ok(ReconstructionReport::new(Method::GaugePairKnownVolume, &model, false, residuals))
        }
        Prescription::SecondDerivative(s2) => {
            if order < 2 {
                return Err(Error::Invalid("a prescribed ∂_r² V needs order at least 2".into()));
            }
            let unique = model.clone();
            model.set_weight(2, s2.clone(), s2.k_y());
            let (roots, disc) = quadratic_step(&model, &metric_slots(s.n), &data, Some(delta))?;
            let mut branches = Vec::new();
            for mut b in roots {
                let reached = continue_branch(&mut b, 3, order, &slots, &data, Some(delta))?;
                branches.push(branch_report(&b, reached, true, &data)?);
            }
            let residuals = verify(&unique, 1, &data)?;
            let mut rep = ReconstructionReport::new(Method::GaugePairKnownVolume, &unique, false, residuals);
            rep.branches = branches;
            rep.discriminant = disc;
            Ok(rep)
        }
    }
}

fn check_volume<T: Scalar>(d: &DNSymbolData<T>, delta: &Jet<T>) -> Result<()> {
    if delta.n() != d.n {
        return Err(Error::Incompatible("volume jet in a different dimension".into()));
    }
    if !delta.constant_term().sub_ref(&d.density.radicand).is_negligible() {
        return Err(Error::Inconsistent("supplied δ disagrees with the data at the base point".into()));
    }
    Ok(())
}

/// Metric and weight coefficients from scalar data when `δ(r, y)` is known.
/// `V|_{r=0}` is absolute.
pub fn recover_from_scalar_with_volume<T: Scalar>(
    d: &DNSymbolData<T>,
    delta: &Jet<T>,
    order: usize,
) -> Result<ReconstructionReport<T>> {
    require(d, MapKind::Lambda0, None)?;
    require_order(d, order)?;
    check_volume(d, delta)?;
    let n = d.n;
    let k_y = d.source_shape.k_y;
    let mut model = Model::new(n, k_y);
    let bshape = model.boundary_shape();
    let delta0 = delta.restrict_boundary().truncated(0, k_y);
    let pf = d.principal_form()?;
    // det N ρ^{n-1} / δ^{n-2} = e2^{n-1}
    let (_, det) = inverse_and_det(&pf.matrix, true)?;
    let rho_pow = (0..n - 1).fold(T::one(), |acc, _| acc.mul_ref(&pf.radicand));
    let c = det.scale(&rho_pow).checked_div(&jet_pow(&delta0, n - 2))?;
    if !is_one(&c.constant_term()) {
        return Err(Error::Inconsistent("principal form, density and δ disagree at the base point".into()));
    }
    let e2 = c.root(n as u32 - 1)?;
    let v_rel = e2.ln()?.scale(&T::from_ratio(-1, 2));
    let v0 = &v_rel + &Jet::constant(bshape, d.density.log_factor.neg_ref());
    let f = (&delta0 * &e2).reciprocal()?.scale(&pf.radicand);
    let g0 = scaled_matrix(&pf.matrix, &f);
    model.set_metric(0, g0.clone(), k_y);
    model.set_weight(0, v0, k_y);
    if order >= 1 {
        let kv = model.valid_at(1)?;
        // k̃ = h^{αβ} - (h + 2 ∂_r V) g^{αβ}, trace (2 - n) h - 2 (n - 1) ∂_r V
        let kt = grade_zero_form(&model, d)?;
        let h = -delta.radial_coefficient(1).truncated(0, kv).checked_div(&delta0)?;
        let tr = trace_with(&g0, &kt)?;
        let v1 = (&tr + &h.scale(&T::from_int(n as i64 - 2))).scale(&T::from_ratio(-1, 2 * (n as i64 - 1)));
        let shift = &h + &v1.scale(&T::from_int(2));
        model.set_metric(1, combine(&kt, &g0, &shift), kv);
        model.set_weight(1, v1, kv);
    }
    let mut slots = metric_slots(n);
    slots.push(Slot::Weight);
    for m in 2..=order {
        linear_step(&mut model, m, &slots, &[d], Some(delta))?;
    }
    let residuals = verify(&model, order, &[d])?;
    Ok(ReconstructionReport::new(Method::ScalarKnownVolume, &model, true, residuals))
}

/// A second weight with the same gauge-`s` DN symbol as `v`.
#[derive(Clone, Debug)]
pub struct TwinWeight<T: Scalar> {
    pub weight: WeightJet<T>,
    /// `∂_r V'` at the base point.
    pub root: T,
    /// The density and every grade `1` down to `2 - depth` agree exactly up
    /// to the `y`-orders the construction determines.
    pub symbols_agree: bool,
    /// They also agree at the full truncation of the input jets.
    pub full_order: bool,
    pub residuals: Vec<GradeResidual>,
}

/// Builds `V'` with `V'|_{r=0} = V|_{r=0}`, `∂_r² V'|_{r=0} = ∂_r² V|_{r=0}`,
/// `∂_r V'` the other root of the grade `-1` quadratic and higher orders
/// solved so that the gauge-`s` DN symbols agree.
pub fn twin_weight<T: Scalar>(g: &BoundaryMetricJet<T>, v: &WeightJet<T>, depth: usize) -> Result<TwinWeight<T>> {
    if depth < 3 {
        return Err(Error::Truncation("the quadratic step needs depth at least 3".into()));
    }
    let data = dn_symbol_gauge(g, v, depth, GaugeTag::GaugeS)?;
    let s2 = v.v.radial_coefficient(2);
    let rep = recover_weight_gauge(&data, g, &Prescription::SecondDerivative(s2.clone()), depth - 1)?;
    let t0 = v.v.radial_coefficient(1).constant_term();
    let alt = match rep.branches.len() {
        0 => return Err(Error::Degenerate("the quadratic has no real roots".into())),
        1 => return Err(Error::Degenerate("double root, no second weight".into())),
        _ => rep
            .branches
            .iter()
            .find(|b| !b.root.sub_ref(&t0).is_negligible())
            .ok_or_else(|| Error::Degenerate("both roots equal the given ∂_r V".into()))?,
    };
    let mut coeffs = vec![v.v.radial_coefficient(0)];
    coeffs.extend(alt.weight[1..].iter().cloned());
    let twin = WeightJet::new(Jet::from_radial(v.v.shape(), &coeffs));
    let other = dn_symbol_gauge(g, &twin, depth, GaugeTag::GaugeS)?;
    let mut residuals = Vec::new();
    let mut agree = other.density == data.density;
    let mut full = agree;
    for (c, checked) in data.symbol.components().zip(&alt.residuals) {
        let j = c.degree();
        let o = other.component(j)?;
        let nums = common_numerators(&[o, c]);
        let diff = numerator_sub(&nums[0], &nums[1]);
        full &= diff.0.is_zero() && diff.1.is_zero();
        let cut = numerator_truncated(&diff, checked.order);
        let vanishes = cut.0.is_zero() && cut.1.is_zero();
        agree &= vanishes;
        residuals.push(GradeResidual {
            data: label(&data),
            grade: j,
            order: checked.order,
            max_abs: numerator_magnitude(&cut),
            vanishes,
        });
    }
    Ok(TwinWeight { weight: twin, root: alt.root.clone(), symbols_agree: agree, full_order: full, residuals })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::{rat, Rational};

    type R = Rational;

    fn shape() -> JetShape {
        JetShape::new(3, 5, 4)
    }

    #[test]
    fn flat_gauge_pair() {
        let s = shape();
        let g = BoundaryMetricJet::<R>::flat(s);
        let v = WeightJet::zero(s);
        let ds = dn_symbol_gauge(&g, &v, 3, GaugeTag::GaugeS).unwrap();
        let dsig = dn_symbol_gauge(&g, &v, 3, GaugeTag::GaugeSigma).unwrap();
        let rep = recover_from_gauge_pair(&ds, &dsig).unwrap();
        assert!(rep.verified());
        let m = rep.recovered_metric.unwrap();
        assert_eq!(m[0], g.upper_radial_coefficient(0));
        assert!(m[1].iter().flatten().all(|e| e.is_zero()));
        assert!(rep.recovered_weight.unwrap()[0].is_zero());
    }

    #[test]
    fn linear_weight_from_scalar_data() {
        // c_0 = a/2 on flat data with V = a r
        let s = shape();
        let g = BoundaryMetricJet::<R>::flat(s);
        let a = rat::<R>(3, 2);
        let v = WeightJet::new(Jet::variable(s, 0).scale(&a));
        let d = dn_symbol_scalar(&g, &v, 3).unwrap();
        let rep = recover_weight_scalar(&d, &g, 2).unwrap();
        assert!(rep.verified());
        let w = rep.recovered_weight.unwrap();
        assert!(w[0].is_zero());
        assert_eq!(w[1], Jet::constant(s.boundary(), a));
        assert!(w[2].is_zero());
    }

    #[test]
    fn trace_formula_on_linear_weight() {
        let s = shape();
        let g = BoundaryMetricJet::<R>::flat(s);
        let a = rat::<R>(-2, 3);
        let v = WeightJet::new(Jet::variable(s, 0).scale(&a));
        let d = dn_symbol_scalar(&g, &v, 3).unwrap();
        let rep = recover_from_scalar_with_volume(&d, g.delta(), 1).unwrap();
        assert!(rep.verified());
        assert_eq!(rep.recovered_weight.unwrap()[1], Jet::constant(s.boundary(), a));
        assert!(rep.recovered_metric.unwrap()[1].iter().flatten().all(|e| e.is_zero()));
    }

    #[test]
    fn flat_double_root() {
        let s = shape();
        let g = BoundaryMetricJet::<R>::flat(s);
        let d = dn_symbol_gauge(&g, &WeightJet::zero(s), 4, GaugeTag::GaugeS).unwrap();
        let zero = Jet::zero(s.boundary());
        let rep = recover_weight_gauge(&d, &g, &Prescription::SecondDerivative(zero), 3).unwrap();
        assert_eq!(rep.branches.len(), 1);
        assert_eq!(rep.branches[0].root, rat(0, 1));
        assert!(rep.discriminant.unwrap().is_zero());
        assert!(matches!(twin_weight(&g, &WeightJet::zero(s), 4), Err(Error::Degenerate(_))));
    }

    #[test]
    fn flat_linear_weight_has_two_branches() {
        let s = shape();
        let g = BoundaryMetricJet::<R>::flat(s);
        let v = WeightJet::new(Jet::variable(s, 0));
        let d = dn_symbol_gauge(&g, &v, 4, GaugeTag::GaugeS).unwrap();
        let zero = Jet::zero(s.boundary());
        let rep = recover_weight_gauge(&d, &g, &Prescription::SecondDerivative(zero), 3).unwrap();
        let roots: Vec<R> = rep.branches.iter().map(|b| b.root.clone()).collect();
        assert_eq!(roots, vec![rat(-1, 1), rat(1, 1)]);
        assert!(rep.branches.iter().all(|b| b.verified() && b.order == 3));
        let twin = twin_weight(&g, &v, 4).unwrap();
        assert_eq!(twin.root, rat(-1, 1));
        assert!(twin.symbols_agree && twin.full_order);
        assert!(twin.weight.v != v.v);
    }
}
