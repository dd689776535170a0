//! End-to-end acceptance checks shared by the `acceptance` test target and
//! the `selftest` command.

use std::time::Instant;

use serde::Serialize;

use crate::dn::{dn_symbol_gauge, dn_symbol_scalar};
use crate::factorization::{factorize_gauge, factorize_scalar, gauge_input, solve_with_fault, Verdict};
use crate::forward::{asymptotic_compare, RadialProblem};
use crate::geometry::{BoundaryMetricJet, GaugeData, GaugeTag, WeightJet};
use crate::jet::{Jet, JetShape};
use crate::matrix::JetMatrix;
use crate::random::random_instance;
use crate::reconstruction::{
    recover_from_gauge_pair, recover_from_gauge_pair_with_volume, recover_from_scalar_with_volume,
    recover_weight_gauge, recover_weight_scalar, twin_weight, Prescription,
};
use crate::scalar::{rat, Field, Rational};
use crate::symbol::HomSymbol;

type R = Rational;

/// Random instances per criterion.
pub const RESIDUAL_INSTANCES: u64 = 25;
pub const ROUND_TRIP_INSTANCES: u64 = 10;
/// Relative tolerance for harmonic disk modes.
pub const HARMONIC_TOL: f64 = 1e-8;
/// Margin on the fitted decay exponent.
pub const SLOPE_MARGIN: f64 = 0.3;

#[derive(Clone, Debug, Serialize)]
pub struct Outcome {
    pub id: u32,
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
    pub seconds: f64,
}

impl std::fmt::Display for Outcome {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let tag = if self.passed { "PASS" } else { "FAIL" };
        write!(f, "[{tag}] {}. {} ({:.1}s): {}", self.id, self.name, self.seconds, self.detail)
    }
}

type Check = fn() -> std::result::Result<String, String>;

pub const CRITERIA: [(&str, Check); 8] = [
    ("exact factorization residual", residual),
    ("flat baseline", flat),
    ("gauge pair round trip", gauge_pair),
    ("weight from scalar data", weight_scalar),
    ("gauge weight dichotomy", dichotomy),
    ("round trips with known volume", known_volume),
    ("disk asymptotics", disk),
    ("injected faults located", faults),
];

pub fn run(id: u32) -> Option<Outcome> {
    let (name, check) = *CRITERIA.get((id as usize).checked_sub(1)?)?;
    let t = Instant::now();
    let res = check();
    let seconds = t.elapsed().as_secs_f64();
    let (passed, detail) = match res {
        Ok(d) => (true, d),
        Err(d) => (false, d),
    };
    Some(Outcome { id, name, passed, detail, seconds })
}

pub fn run_all() -> Vec<Outcome> {
    (1..=CRITERIA.len() as u32).filter_map(run).collect()
}

fn fail<E: std::fmt::Display>(ctx: impl std::fmt::Display) -> impl FnOnce(E) -> String {
    move |e| format!("{ctx}: {e}")
}

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> std::result::Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

fn instance(seed: u64, s: JetShape) -> (BoundaryMetricJet<R>, WeightJet<R>) {
    random_instance(seed, s)
}

fn metric_matches(rec: &[JetMatrix<R>], g: &BoundaryMetricJet<R>, k_y: u32, upto: usize) -> bool {
    rec.len() > upto
        && rec.iter().enumerate().take(upto + 1).all(|(m, gm)| {
            let truth = g.upper_radial_coefficient(m as u32);
            gm.iter().zip(&truth).all(|(ra, rb)| {
                ra.iter().zip(rb).all(|(a, b)| a.k_y() == k_y - m as u32 && a == b)
            })
        })
}

fn weight_matches(rec: &[Jet<R>], v: &WeightJet<R>, k_y: u32, orders: std::ops::RangeInclusive<usize>, absolute: bool) -> bool {
    orders.into_iter().all(|m| {
        let Some(got) = rec.get(m) else { return false };
        let mut truth = v.v.radial_coefficient(m as u32);
        if m == 0 && !absolute {
            truth = &truth - &Jet::constant(truth.shape(), truth.constant_term());
        }
        got.k_y() == k_y - m as u32 && *got == truth
    })
}

fn residual() -> std::result::Result<String, String> {
    let s = JetShape::new(3, 5, 4);
    for seed in 0..RESIDUAL_INSTANCES {
        let (g, v) = instance(1000 + seed, s);
        let gauge = if seed % 2 == 0 { GaugeData::gauge_s(&g, &v) } else { GaugeData::gauge_sigma(&g, &v) };
        let gauge = gauge.map_err(fail(seed))?;
        let fg = factorize_gauge(&g, &gauge, 4).map_err(fail(seed))?;
        let fs = factorize_scalar(&g, &v, 4).map_err(fail(seed))?;
        for (mode, f) in [("gauge", fg), ("scalar", fs)] {
            let verdict = f.verify_residual().map_err(fail(seed))?;
            ensure(verdict == Verdict::Pass, || format!("seed {seed} {mode}: {verdict:?}"))?;
        }
    }
    Ok(format!("{RESIDUAL_INSTANCES} instances, gauge and scalar, zero residual"))
}

fn flat() -> std::result::Result<String, String> {
    let s = JetShape::new(3, 5, 4);
    let g = BoundaryMetricJet::<R>::flat(s);
    let v = WeightJet::zero(s);
    let data = [
        dn_symbol_scalar(&g, &v, 4),
        dn_symbol_gauge(&g, &v, 4, GaugeTag::GaugeS),
        dn_symbol_gauge(&g, &v, 4, GaugeTag::GaugeSigma),
    ];
    for d in data {
        let d = d.map_err(fail("flat"))?;
        for c in d.symbol.components() {
            if c.degree() <= 0 {
                ensure(c.is_zero(), || format!("grade {} is nonzero", c.degree()))?;
            }
        }
        let principal = d.observable_unit(1).map_err(fail("flat"))?;
        let minus_w = HomSymbol::w(d.ctx()).neg();
        ensure(principal.equals(&minus_w).map_err(fail("flat"))?, || "principal symbol is not -|ξ|".into())?;
        ensure(d.density.unit == Jet::one(d.density.unit.shape()), || "density is not 1".into())?;
        ensure(d.density.log_factor == R::from_int(0) && d.density.radicand == R::from_int(1), || "density is not 1".into())?;
    }
    Ok("lower grades vanish, principal observable is -|ξ|".into())
}

fn gauge_pair() -> std::result::Result<String, String> {
    let s = JetShape::new(3, 4, 3);
    for seed in 0..ROUND_TRIP_INSTANCES {
        let (g, v) = instance(2000 + seed, s);
        let ds = dn_symbol_gauge(&g, &v, 2, GaugeTag::GaugeS).map_err(fail(seed))?;
        let dsig = dn_symbol_gauge(&g, &v, 2, GaugeTag::GaugeSigma).map_err(fail(seed))?;
        let rep = recover_from_gauge_pair(&ds, &dsig).map_err(fail(seed))?;
        let g_ok = rep.recovered_metric.as_deref().is_some_and(|m| metric_matches(m, &g, 3, 1));
        let v_ok = rep.recovered_weight.as_deref().is_some_and(|w| weight_matches(w, &v, 3, 0..=0, false));
        ensure(rep.verified() && g_ok && v_ok, || format!("seed {seed}: metric {g_ok}, weight {v_ok}"))?;
    }
    Ok(format!("{ROUND_TRIP_INSTANCES} instances, g and ∂_r g exact, V mod constant"))
}

fn weight_scalar() -> std::result::Result<String, String> {
    let s = JetShape::new(3, 6, 5);
    for seed in 0..ROUND_TRIP_INSTANCES {
        let (g, v) = instance(3000 + seed, s);
        let d = dn_symbol_scalar(&g, &v, 5).map_err(fail(seed))?;
        let rep = recover_weight_scalar(&d, &g, 4).map_err(fail(seed))?;
        let ok = rep.weight_absolute
            && rep.recovered_weight.as_deref().is_some_and(|w| weight_matches(w, &v, 5, 0..=4, true));
        ensure(rep.verified() && ok, || format!("seed {seed}: mismatch"))?;
    }
    Ok(format!("{ROUND_TRIP_INSTANCES} instances, ∂_r^m V for m = 0..4 exact"))
}

fn dichotomy() -> std::result::Result<String, String> {
    let s = JetShape::new(3, 5, 4);
    let g = BoundaryMetricJet::<R>::flat(s);
    let r = Jet::<R>::variable(s, 0);
    // V = r + r²/3 - r³/5
    let r2 = &r * &r;
    let v = WeightJet::new(&(&r + &r2.scale(&rat(1, 3))) - &(&r2 * &r).scale(&rat(1, 5)));
    let d = dn_symbol_gauge(&g, &v, 4, GaugeTag::GaugeS).map_err(fail("data"))?;
    let p = Prescription::SecondDerivative(v.v.radial_coefficient(2));
    let rep = recover_weight_gauge(&d, &g, &p, 3).map_err(fail("reconstruction"))?;
    let roots: Vec<R> = rep.branches.iter().map(|b| b.root.clone()).collect();
    ensure(roots == vec![rat(-1, 1), rat(1, 1)], || format!("roots {roots:?}"))?;
    let twin = twin_weight(&g, &v, 4).map_err(fail("twin"))?;
    ensure(twin.weight.v != v.v, || "twin weight equals V".into())?;
    ensure(twin.symbols_agree && twin.full_order, || "gauge-s symbols differ".into())?;
    Ok("roots {-1, 1}; second weight has the same gauge-s symbol through grade -2".into())
}

fn known_volume() -> std::result::Result<String, String> {
    let s = JetShape::new(3, 6, 5);
    for seed in 0..ROUND_TRIP_INSTANCES {
        let (g, v) = instance(4000 + seed, s);
        let ds = dn_symbol_gauge(&g, &v, 5, GaugeTag::GaugeS).map_err(fail(seed))?;
        let dsig = dn_symbol_gauge(&g, &v, 5, GaugeTag::GaugeSigma).map_err(fail(seed))?;
        let t = Prescription::FirstDerivative(v.v.radial_coefficient(1));
        let rep = recover_from_gauge_pair_with_volume(&ds, &dsig, g.delta(), &t, 4).map_err(fail(seed))?;
        let g_ok = rep.recovered_metric.as_deref().is_some_and(|m| metric_matches(m, &g, 5, 3));
        let v_ok = rep.recovered_weight.as_deref().is_some_and(|w| {
            weight_matches(w, &v, 5, 0..=0, false) && weight_matches(w, &v, 5, 2..=4, true)
        });
        ensure(rep.verified() && g_ok && v_ok, || format!("gauge pair seed {seed}: metric {g_ok}, weight {v_ok}"))?;
    }
    for seed in 0..ROUND_TRIP_INSTANCES {
        let (g, v) = instance(5000 + seed, s);
        let d = dn_symbol_scalar(&g, &v, 5).map_err(fail(seed))?;
        let rep = recover_from_scalar_with_volume(&d, g.delta(), 4).map_err(fail(seed))?;
        let g_ok = rep.recovered_metric.as_deref().is_some_and(|m| metric_matches(m, &g, 5, 3));
        let v_ok = rep.recovered_weight.as_deref().is_some_and(|w| weight_matches(w, &v, 5, 0..=4, true));
        ensure(rep.verified() && g_ok && v_ok, || format!("scalar seed {seed}: metric {g_ok}, weight {v_ok}"))?;
    }
    // flat g, V = a r
    let s = JetShape::new(3, 3, 2);
    let g = BoundaryMetricJet::<R>::flat(s);
    let a: R = rat(-2, 3);
    let v = WeightJet::new(Jet::variable(s, 0).scale(&a));
    let d = dn_symbol_scalar(&g, &v, 2).map_err(fail("hand example"))?;
    let rep = recover_from_scalar_with_volume(&d, g.delta(), 1).map_err(fail("hand example"))?;
    let v1 = rep.recovered_weight.as_ref().and_then(|w| w.get(1).cloned());
    ensure(v1.as_ref().map(|j| j.constant_term()) == Some(a.clone()), || format!("trace formula gives {v1:?}"))?;
    Ok(format!("{ROUND_TRIP_INSTANCES} + {ROUND_TRIP_INSTANCES} instances exact; trace formula gives ∂_r V = -2/3"))
}

fn disk() -> std::result::Result<String, String> {
    let modes = vec![8, 11, 16, 23, 32, 45, 64];
    let flat = RadialProblem::new(vec![0.0], modes.clone());
    let c = asymptotic_compare(&flat, 2).map_err(fail("V = 0"))?;
    let worst = c.rows.iter().map(|r| (r.numeric + r.k as f64).abs() / r.k as f64).fold(0.0, f64::max);
    ensure(worst <= HARMONIC_TOL, || format!("V = 0 relative error {worst:.2e}"))?;
    let p = RadialProblem::quadratic(1.0, modes);
    let mut slopes = Vec::new();
    for order in [2, 3] {
        let c = asymptotic_compare(&p, order).map_err(fail(order))?;
        let slope = c.slope.ok_or_else(|| format!("J = {order}: errors at the floor"))?;
        ensure(slope <= -(order as f64 - SLOPE_MARGIN), || format!("J = {order}: slope {slope:.3}"))?;
        slopes.push(format!("J = {order}: {slope:.3}"));
    }
    Ok(format!("harmonic error {worst:.1e}; slopes {}", slopes.join(", ")))
}

fn faults() -> std::result::Result<String, String> {
    let s = JetShape::new(3, 6, 5);
    let (g, v) = instance(6000, s);
    let gauge = GaugeData::gauge_s(&g, &v).map_err(fail("gauge"))?;
    let clean = factorize_gauge(&g, &gauge, 5).map_err(fail("clean"))?;
    ensure(clean.verify_residual().map_err(fail("clean"))? == Verdict::Pass, || "clean run fails".into())?;
    let sites = [1, 0, -1, -2, -3];
    for grade in sites {
        let input = gauge_input(&g, &gauge).map_err(fail(grade))?;
        let f = solve_with_fault(&g, input, 5, grade).map_err(fail(grade))?;
        let verdict = f.verify_residual().map_err(fail(grade))?;
        ensure(verdict == Verdict::Fail { grade }, || format!("fault at {grade} gives {verdict:?}"))?;
    }
    Ok(format!("faults at grades {sites:?} located"))
}

/// Convenience for callers that want a single status.
pub fn all_pass(outcomes: &[Outcome]) -> bool {
    outcomes.iter().all(|o| o.passed)
}
