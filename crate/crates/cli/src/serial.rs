//! JSON encodings of jets, symbols and reports. Scalars are strings produced
//! by the backend (`"p/q"` for rationals).

use serde_json::{json, Value};

use dnsym::dn::DNSymbolData;
use dnsym::factorization::FactorizationResult;
use dnsym::forward::AsymptoticComparison;
use dnsym::geometry::Density;
use dnsym::matrix::JetMatrix;
use dnsym::reconstruction::{ReconstructionReport, TwinWeight, WeightBranch};
use dnsym::symbol::{FormalSymbol, HomSymbol};
use dnsym::xipoly::{CJet, XiPoly};
use dnsym::{Jet, Scalar};

pub fn scalar<T: Scalar>(v: &T) -> Value {
    Value::String(v.to_text())
}

/// Sparse list of `{m, c}` with `m` the exponents of `(r, y^1, ..., y^{n-1})`.
pub fn jet<T: Scalar>(j: &Jet<T>) -> Value {
    let n = j.n();
    Value::Array(j.terms().map(|(m, c)| json!({ "m": m.exps(n), "c": scalar(c) })).collect())
}

fn cjet<T: Scalar>(j: &CJet<T>) -> Value {
    let n = j.n();
    Value::Array(
        j.terms()
            .map(|(m, c)| json!({ "m": m.exps(n), "re": scalar(&c.re), "im": scalar(&c.im) }))
            .collect(),
    )
}

fn xipoly<T: Scalar>(p: &XiPoly<T>) -> Value {
    let nxi = p.shape().n - 1;
    Value::Array(p.terms().map(|(m, c)| json!({ "xi": m.exps(nxi), "coeff": cjet(c) })).collect())
}

/// `(even + odd · |ξ|) / q2^power`.
pub fn symbol<T: Scalar>(s: &HomSymbol<T>) -> Value {
    json!({
        "grade": s.degree(),
        "q2_power": s.q2_power(),
        "even": xipoly(s.even()),
        "odd": xipoly(s.odd()),
    })
}

pub fn formal<T: Scalar>(f: &FormalSymbol<T>) -> Value {
    Value::Array(f.components().map(symbol).collect())
}

pub fn matrix<T: Scalar>(m: &JetMatrix<T>) -> Value {
    Value::Array(m.iter().map(|row| Value::Array(row.iter().map(jet).collect())).collect())
}

pub fn density<T: Scalar>(d: &Density<T>) -> Value {
    json!({
        "log_factor": scalar(&d.log_factor),
        "radicand": scalar(&d.radicand),
        "unit": jet(&d.unit),
    })
}

pub fn factorization<T: Scalar>(f: &FactorizationResult<T>, verdict: &impl serde::Serialize) -> Value {
    json!({
        "mode": f.mode,
        "depth": f.depth,
        "verdict": verdict,
        "components": formal(&f.symbol),
    })
}

pub fn dn<T: Scalar>(d: &DNSymbolData<T>) -> Value {
    json!({
        "map": d.kind,
        "gauge": d.gauge,
        "depth": d.depth,
        "density": density(&d.density),
        "components": formal(&d.symbol),
    })
}

fn branch<T: Scalar>(b: &WeightBranch<T>) -> Value {
    json!({
        "root": scalar(&b.root),
        "order": b.order,
        "verified": b.verified(),
        "weight": b.weight.iter().map(jet).collect::<Vec<_>>(),
        "metric": b.metric.as_ref().map(|ms| ms.iter().map(matrix).collect::<Vec<_>>()),
        "residuals": b.residuals,
    })
}

pub fn reconstruction<T: Scalar>(r: &ReconstructionReport<T>) -> Value {
    json!({
        "method": r.method,
        "verified": r.verified(),
        "weight_absolute": r.weight_absolute,
        "recovered_metric": r.recovered_metric.as_ref().map(|ms| ms.iter().map(matrix).collect::<Vec<_>>()),
        "recovered_weight": r.recovered_weight.as_ref().map(|ws| ws.iter().map(jet).collect::<Vec<_>>()),
        "discriminant": r.discriminant.as_ref().map(jet),
        "branches": r.branches.iter().map(branch).collect::<Vec<_>>(),
        "residuals": r.residuals,
    })
}

pub fn twin<T: Scalar>(t: &TwinWeight<T>) -> Value {
    json!({
        "root": scalar(&t.root),
        "symbols_agree": t.symbols_agree,
        "full_order": t.full_order,
        "weight": jet(&t.weight.v),
        "residuals": t.residuals,
    })
}

pub fn comparison(c: &AsymptoticComparison) -> Value {
    serde_json::to_value(c).expect("plain data")
}
