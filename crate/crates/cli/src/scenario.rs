//! Scenario files: geometry, truncation and a list of tasks.

use serde::{Deserialize, Serialize};

use dnsym::dn::MapKind;
use dnsym::factorization::Mode;
use dnsym::geometry::{BoundaryMetricJet, GaugeTag, WeightJet};
use dnsym::random::random_instance;
use dnsym::reconstruction::Method;
use dnsym::{Jet, JetShape, Mono, Scalar};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Backend {
    Rational,
    Float,
}

impl Backend {
    pub fn name(self) -> &'static str {
        match self {
            Backend::Rational => "rational",
            Backend::Float => "float",
        }
    }
}

impl std::str::FromStr for Backend {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "rational" => Ok(Backend::Rational),
            "float" => Ok(Backend::Float),
            _ => Err(format!("unknown backend `{s}` (expected rational or float)")),
        }
    }
}

/// A scalar given as text (`"3/4"`, `"-2"`, `"0.125"`) or a JSON number.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Number {
    Text(String),
    Float(f64),
}

impl Number {
    pub fn parse<T: Scalar>(&self) -> Result<T, String> {
        let text = match self {
            Number::Text(s) => s.clone(),
            Number::Float(f) => format!("{f}"),
        };
        T::parse_text(&text).ok_or_else(|| format!("`{text}` is not a number"))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Term {
    /// Exponents of `(r, y^1, ..., y^{n-1})`, or of `y` alone for boundary jets.
    pub m: Vec<u32>,
    pub c: Number,
}

/// A jet as a sparse term list, or a constant.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum JetSpec {
    Constant(Number),
    Terms(Vec<Term>),
}

impl JetSpec {
    pub fn build<T: Scalar>(&self, shape: JetShape) -> Result<Jet<T>, String> {
        match self {
            JetSpec::Constant(c) => Ok(Jet::constant(shape, c.parse()?)),
            JetSpec::Terms(ts) => {
                let mut terms = Vec::with_capacity(ts.len());
                for t in ts {
                    let exps = if t.m.len() + 1 == shape.n && shape.k_r == 0 {
                        std::iter::once(0).chain(t.m.iter().copied()).collect()
                    } else if t.m.len() == shape.n {
                        t.m.clone()
                    } else {
                        return Err(format!("multi-index {:?} has the wrong length for n = {}", t.m, shape.n));
                    };
                    if exps.iter().any(|&e| e > 255) {
                        return Err(format!("exponent in {:?} is too large", t.m));
                    }
                    terms.push((Mono::from_exps(&exps), t.c.parse::<T>()?));
                }
                Ok(Jet::from_terms(shape, terms))
            }
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NamedMetric {
    Flat,
    Random,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum MetricSpec {
    Named(NamedMetric),
    /// Lower-index `g_{αβ}`, symmetric.
    Table(Vec<Vec<JetSpec>>),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NamedWeight {
    Zero,
    Random,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum WeightSpec {
    Named(NamedWeight),
    Jet(JetSpec),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Gauge {
    S,
    Sigma,
}

impl Gauge {
    pub fn tag(self) -> GaugeTag {
        match self {
            Gauge::S => GaugeTag::GaugeS,
            Gauge::Sigma => GaugeTag::GaugeSigma,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum TruthTag {
    #[serde(rename = "true")]
    True,
}

/// A prescribed radial derivative: `"true"` takes it from the scenario weight.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Prescribed {
    Truth(TruthTag),
    Value(JetSpec),
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PrescriptionSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub d1v: Option<Prescribed>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub d2v: Option<Prescribed>,
}

/// Which DN data a reconstruction consumes when the method allows a choice.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DataKind {
    Lambda0,
    GaugeS,
    GaugeSigma,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ModeList {
    List(Vec<u32>),
    /// `"lo:hi"`, every integer in between.
    Range(String),
}

impl ModeList {
    pub fn expand(&self) -> Result<Vec<u32>, String> {
        match self {
            ModeList::List(v) => Ok(v.clone()),
            ModeList::Range(s) => {
                let (a, b) = s.split_once(':').ok_or_else(|| format!("mode range `{s}` is not lo:hi"))?;
                let lo: u32 = a.trim().parse().map_err(|_| format!("bad mode `{a}`"))?;
                let hi: u32 = b.trim().parse().map_err(|_| format!("bad mode `{b}`"))?;
                if lo == 0 || hi < lo {
                    return Err(format!("mode range `{s}` is empty or starts at 0"));
                }
                Ok((lo..=hi).collect())
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "task", rename_all = "snake_case")]
pub enum Task {
    /// Runs the recursion and checks its residual.
    #[serde(alias = "verify_residual")]
    Factorize {
        mode: Mode,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        gauge: Option<Gauge>,
    },
    Dn {
        map: MapKind,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        gauge: Option<Gauge>,
    },
    Reconstruct {
        method: Method,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        prescription: Option<PrescriptionSpec>,
        /// Highest radial order; defaults to `depth - 1`.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        order: Option<usize>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        data: Option<DataKind>,
    },
    Counterexample {},
    ValidateDisk {
        modes: ModeList,
        /// Lowest grade of the partial sum is `1 - order`.
        order: usize,
        /// `V(ρ) = sum_i v[i] ρ^i`; defaults to `(1 - ρ)² / 2`.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        v: Option<Vec<f64>>,
    },
}

impl Task {
    pub fn name(&self) -> &'static str {
        match self {
            Task::Factorize { .. } => "factorize",
            Task::Dn { .. } => "dn",
            Task::Reconstruct { .. } => "reconstruct",
            Task::Counterexample {} => "counterexample",
            Task::ValidateDisk { .. } => "validate_disk",
        }
    }

    /// Checks that do not depend on the backend.
    fn validate(&self) -> Result<(), String> {
        match self {
            Task::Factorize { mode: Mode::Gauge, gauge: None } => Err("gauge factorization needs `gauge`".into()),
            Task::Dn { map: MapKind::Lambda1, gauge: None } => Err("lambda1 data needs `gauge`".into()),
            Task::Reconstruct { prescription: Some(p), .. } if p.d1v.is_some() && p.d2v.is_some() => {
                Err("conflicting prescriptions: give either d1v or d2v".into())
            }
            Task::Reconstruct { method, prescription, .. } => {
                let needs = matches!(method, Method::WeightFromGauge | Method::GaugePairKnownVolume);
                let has = prescription.as_ref().is_some_and(|p| p.d1v.is_some() || p.d2v.is_some());
                match (needs, has) {
                    (true, false) => Err(format!("method {method:?} needs a prescription (d1v or d2v)")),
                    (false, true) => Err(format!("method {method:?} takes no prescription")),
                    _ => Ok(()),
                }
            }
            Task::ValidateDisk { modes, .. } => modes.expand().map(|_| ()),
            _ => Ok(()),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub schema_version: u32,
    pub n: usize,
    pub k_r: u32,
    pub k_y: u32,
    pub depth: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub backend: Option<Backend>,
    #[serde(default)]
    pub seed: u64,
    pub metric: MetricSpec,
    pub weight: WeightSpec,
    pub tasks: Vec<Task>,
}

impl Scenario {
    /// Parses and runs the backend-independent checks.
    pub fn parse(text: &str) -> Result<Self, String> {
        let sc: Scenario = serde_json::from_str(text).map_err(|e| format!("scenario: {e}"))?;
        sc.validate()?;
        Ok(sc)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("plain data")
    }

    pub fn validate(&self) -> Result<(), String> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(format!("schema_version {} is not supported (expected {SCHEMA_VERSION})", self.schema_version));
        }
        if !(2..=8).contains(&self.n) {
            return Err(format!("n = {} is outside 2..=8", self.n));
        }
        if self.depth == 0 {
            return Err("depth must be at least 1".into());
        }
        if let MetricSpec::Table(t) = &self.metric {
            let m = self.n - 1;
            if t.len() != m || t.iter().any(|r| r.len() != m) {
                return Err(format!("metric table must be {m}×{m}"));
            }
        }
        for (i, t) in self.tasks.iter().enumerate() {
            t.validate().map_err(|e| format!("tasks[{i}] ({}): {e}", t.name()))?;
        }
        Ok(())
    }

    pub fn shape(&self) -> JetShape {
        JetShape::new(self.n, self.k_r, self.k_y)
    }

    /// Metric and weight in the chosen backend.
    pub fn geometry<T: Scalar>(&self) -> Result<(BoundaryMetricJet<T>, WeightJet<T>), String> {
        let s = self.shape();
        let (rg, rv) = random_instance::<T>(self.seed, s);
        let g = match &self.metric {
            MetricSpec::Named(NamedMetric::Flat) => BoundaryMetricJet::flat(s),
            MetricSpec::Named(NamedMetric::Random) => rg,
            MetricSpec::Table(t) => {
                let rows = t
                    .iter()
                    .enumerate()
                    .map(|(a, row)| {
                        row.iter()
                            .enumerate()
                            .map(|(b, e)| e.build::<T>(s).map_err(|err| format!("metric[{a}][{b}]: {err}")))
                            .collect::<Result<Vec<_>, _>>()
                    })
                    .collect::<Result<Vec<_>, _>>()?;
                BoundaryMetricJet::from_lower(rows).map_err(|e| format!("metric: {e}"))?
            }
        };
        let v = match &self.weight {
            WeightSpec::Named(NamedWeight::Zero) => WeightJet::zero(s),
            WeightSpec::Named(NamedWeight::Random) => rv,
            WeightSpec::Jet(j) => WeightJet::new(j.build(s).map_err(|e| format!("weight: {e}"))?),
        };
        Ok((g, v))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use dnsym::Rational;

    const FLAT: &str = r#"{
        "schema_version": 1, "n": 3, "k_r": 3, "k_y": 2, "depth": 2,
        "metric": "flat",
        "weight": [{"m": [1, 0, 0], "c": "1/2"}],
        "tasks": [{"task": "verify_residual", "mode": "scalar"}]
    }"#;

    #[test]
    fn parse_and_build() {
        let sc = Scenario::parse(FLAT).unwrap();
        assert_eq!(sc.tasks[0], Task::Factorize { mode: Mode::Scalar, gauge: None });
        let (_, v) = sc.geometry::<Rational>().unwrap();
        assert_eq!(v.v.radial_coefficient(1).constant_term(), Rational::new(1.into(), 2.into()));
    }

    #[test]
    fn round_trip_is_normal_form() {
        let sc = Scenario::parse(FLAT).unwrap();
        let once = sc.to_json();
        let again = Scenario::parse(&once).unwrap();
        assert_eq!(again, sc);
        assert_eq!(again.to_json(), once);
    }

    #[test]
    fn conflicting_prescriptions() {
        let text = FLAT.replace(
            r#"{"task": "verify_residual", "mode": "scalar"}"#,
            r#"{"task": "reconstruct", "method": "weight_from_gauge", "prescription": {"d1v": "true", "d2v": "0"}}"#,
        );
        let err = Scenario::parse(&text).unwrap_err();
        assert!(err.contains("conflicting"), "{err}");
    }

    #[test]
    fn unknown_field_is_reported() {
        let err = Scenario::parse(&FLAT.replace("\"depth\"", "\"detph\"")).unwrap_err();
        assert!(err.contains("detph") && err.contains("line"), "{err}");
    }

    #[test]
    fn mode_ranges() {
        assert_eq!(ModeList::Range("3:5".into()).expand().unwrap(), vec![3, 4, 5]);
        assert!(ModeList::Range("0:5".into()).expand().is_err());
    }
}
