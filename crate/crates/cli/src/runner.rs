//! Executes scenarios and assembles reports.

use serde::Serialize;
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use dnsym::dn::{dn_symbol_gauge, dn_symbol_scalar, DNSymbolData, MapKind};
use dnsym::factorization::{factorize_gauge, factorize_scalar, Mode, Verdict};
use dnsym::forward::{asymptotic_compare, RadialProblem};
use dnsym::geometry::{BoundaryMetricJet, GaugeData, GaugeTag, WeightJet};
use dnsym::reconstruction::{
    recover_from_gauge_pair, recover_from_gauge_pair_with_volume, recover_from_scalar_with_volume, recover_metric,
    recover_weight_gauge, recover_weight_scalar, twin_weight, Method, Prescription, ReconstructionReport,
};
use dnsym::{Jet, Rational, Scalar};

use crate::scenario::{Backend, DataKind, Prescribed, PrescriptionSpec, Scenario, Task, SCHEMA_VERSION};
use crate::serial;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Pass,
    Fail,
    Error,
}

#[derive(Clone, Debug, Serialize)]
pub struct TaskReport {
    pub index: usize,
    pub task: &'static str,
    pub status: Status,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub message: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub output: Option<Value>,
}

#[derive(Clone, Debug, Serialize)]
pub struct Provenance {
    pub input_sha256: String,
    pub backend: &'static str,
    pub depth: usize,
    pub n: usize,
    pub k_r: u32,
    pub k_y: u32,
    pub seed: u64,
    pub tool: String,
}

#[derive(Clone, Debug, Serialize)]
pub struct Report {
    pub schema_version: u32,
    pub status: Status,
    pub provenance: Provenance,
    pub tasks: Vec<TaskReport>,
}

impl Report {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("plain data") + "\n"
    }

    pub fn exit_code(&self) -> i32 {
        if self.status == Status::Pass {
            0
        } else {
            1
        }
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

/// Runs every task. `Err` is an input error (the scenario cannot be
/// instantiated); task failures are recorded in the report.
pub fn run(sc: &Scenario, input: &[u8], backend: Backend, parallel: bool) -> Result<Report, String> {
    let tasks = match backend {
        Backend::Rational => run_tasks::<Rational>(sc, parallel)?,
        Backend::Float => run_tasks::<f64>(sc, parallel)?,
    };
    let status = if tasks.iter().all(|t| t.status == Status::Pass) { Status::Pass } else { Status::Fail };
    Ok(Report {
        schema_version: SCHEMA_VERSION,
        status,
        provenance: Provenance {
            input_sha256: sha256_hex(input),
            backend: backend.name(),
            depth: sc.depth,
            n: sc.n,
            k_r: sc.k_r,
            k_y: sc.k_y,
            seed: sc.seed,
            tool: format!("dnsym {}", env!("CARGO_PKG_VERSION")),
        },
        tasks,
    })
}

struct Ctx<T: Scalar> {
    g: BoundaryMetricJet<T>,
    v: WeightJet<T>,
    depth: usize,
}

fn run_tasks<T: Scalar>(sc: &Scenario, parallel: bool) -> Result<Vec<TaskReport>, String> {
    let (g, v) = sc.geometry::<T>()?;
    let ctx = Ctx { g, v, depth: sc.depth };
    let one = |(index, task): (usize, &Task)| {
        let (status, message, output) = match run_task(&ctx, task) {
            Ok((ok, out)) => (if ok { Status::Pass } else { Status::Fail }, None, Some(out)),
            Err(e) => (Status::Error, Some(format!("task {index} ({}): {e}", task.name())), None),
        };
        TaskReport { index, task: task.name(), status, message, output }
    };
    if parallel {
        Ok(std::thread::scope(|s| {
            let handles: Vec<_> = sc.tasks.iter().enumerate().map(|it| s.spawn(move || one(it))).collect();
            handles.into_iter().map(|h| h.join().expect("task thread panicked")).collect()
        }))
    } else {
        Ok(sc.tasks.iter().enumerate().map(one).collect())
    }
}

type TaskResult = Result<(bool, Value), String>;

fn err(e: dnsym::Error) -> String {
    e.to_string()
}

fn run_task<T: Scalar>(c: &Ctx<T>, task: &Task) -> TaskResult {
    match task {
        Task::Factorize { mode, gauge } => {
            let f = match mode {
                Mode::Scalar => factorize_scalar(&c.g, &c.v, c.depth),
                Mode::Gauge => {
                    let data = match gauge.map(|g| g.tag()) {
                        Some(GaugeTag::GaugeSigma) => GaugeData::gauge_sigma(&c.g, &c.v),
                        _ => GaugeData::gauge_s(&c.g, &c.v),
                    };
                    data.and_then(|d| factorize_gauge(&c.g, &d, c.depth))
                }
            }
            .map_err(err)?;
            let verdict = f.verify_residual().map_err(err)?;
            Ok((verdict == Verdict::Pass, serial::factorization(&f, &verdict)))
        }
        Task::Dn { map, gauge } => {
            let d = match map {
                MapKind::Lambda0 => dn_symbol_scalar(&c.g, &c.v, c.depth),
                MapKind::Lambda1 => dn_symbol_gauge(&c.g, &c.v, c.depth, gauge.expect("validated").tag()),
            }
            .map_err(err)?;
            Ok((true, serial::dn(&d)))
        }
        Task::Reconstruct { method, prescription, order, data } => {
            let order = order.unwrap_or(c.depth.saturating_sub(1));
            let rep = reconstruct(c, *method, prescription.as_ref(), order, *data)?;
            let ok = rep.verified() && (rep.branches.is_empty() || rep.branches.iter().any(|b| b.verified()));
            Ok((ok, serial::reconstruction(&rep)))
        }
        Task::Counterexample {} => {
            let t = twin_weight(&c.g, &c.v, c.depth).map_err(err)?;
            let ok = t.symbols_agree && t.weight.v != c.v.v;
            Ok((ok, serial::twin(&t)))
        }
        Task::ValidateDisk { modes, order, v } => {
            let modes = modes.expand()?;
            let p = match v {
                Some(v) => RadialProblem::new(v.clone(), modes),
                None => RadialProblem::quadratic(1.0, modes),
            };
            let cmp = asymptotic_compare(&p, *order).map_err(err)?;
            let mut out = serial::comparison(&cmp);
            out["v"] = json!(p.v);
            Ok((cmp.pass, out))
        }
    }
}

fn prescription<T: Scalar>(c: &Ctx<T>, spec: Option<&PrescriptionSpec>) -> Result<Prescription<T>, String> {
    let spec = spec.ok_or("missing prescription")?;
    let shape = c.g.shape().boundary();
    let value = |p: &Prescribed, m: u32| -> Result<Jet<T>, String> {
        match p {
            Prescribed::Truth(_) => Ok(c.v.v.radial_coefficient(m)),
            Prescribed::Value(j) => j.build(shape),
        }
    };
    match (&spec.d1v, &spec.d2v) {
        (Some(p), None) => Ok(Prescription::FirstDerivative(value(p, 1)?)),
        (None, Some(p)) => Ok(Prescription::SecondDerivative(value(p, 2)?)),
        _ => Err("give exactly one of d1v and d2v".into()),
    }
}

fn reconstruct<T: Scalar>(
    c: &Ctx<T>,
    method: Method,
    spec: Option<&PrescriptionSpec>,
    order: usize,
    data: Option<DataKind>,
) -> Result<ReconstructionReport<T>, String> {
    let scalar = || dn_symbol_scalar(&c.g, &c.v, c.depth).map_err(err);
    let gauge = |tag| dn_symbol_gauge(&c.g, &c.v, c.depth, tag).map_err(err);
    let pair = || -> Result<(DNSymbolData<T>, DNSymbolData<T>), String> {
        Ok((gauge(GaugeTag::GaugeS)?, gauge(GaugeTag::GaugeSigma)?))
    };
    let rep = match method {
        Method::GaugePair => {
            let (s, sig) = pair()?;
            recover_from_gauge_pair(&s, &sig)
        }
        Method::MetricKnownWeight => {
            let d = match data.unwrap_or(DataKind::Lambda0) {
                DataKind::Lambda0 => scalar()?,
                DataKind::GaugeS => gauge(GaugeTag::GaugeS)?,
                DataKind::GaugeSigma => gauge(GaugeTag::GaugeSigma)?,
            };
            recover_metric(&d, &c.v, order)
        }
        Method::WeightFromScalar => recover_weight_scalar(&scalar()?, &c.g, order),
        Method::WeightFromGauge => {
            let p = prescription(c, spec)?;
            recover_weight_gauge(&gauge(GaugeTag::GaugeS)?, &c.g, &p, order)
        }
        Method::GaugePairKnownVolume => {
            let p = prescription(c, spec)?;
            let (s, sig) = pair()?;
            recover_from_gauge_pair_with_volume(&s, &sig, c.g.delta(), &p, order)
        }
        Method::ScalarKnownVolume => recover_from_scalar_with_volume(&scalar()?, c.g.delta(), order),
    };
    rep.map_err(err)
}
