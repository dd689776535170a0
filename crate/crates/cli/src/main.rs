use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use dnsym::acceptance;
use dnsym::dn::MapKind;
use dnsym::factorization::Mode;
use dnsym::reconstruction::Method;
use dnsym_cli::runner::{run, Report};
use dnsym_cli::scenario::{
    Backend, DataKind, Gauge, JetSpec, MetricSpec, ModeList, NamedMetric, NamedWeight, Number, Prescribed,
    PrescriptionSpec, Scenario, Task, TruthTag, WeightSpec, SCHEMA_VERSION,
};

const INPUT_ERROR: u8 = 2;

#[derive(Parser)]
#[command(name = "dnsym", version, about = "Symbols and boundary reconstruction for weighted DN maps")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Scalar backend.
    #[arg(long, env = "DNSYM_BACKEND", default_value = "rational")]
    backend: Backend,
    /// Write the report here instead of stdout.
    #[arg(short, long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct Geometry {
    /// Dimension of the manifold.
    #[arg(long, default_value_t = 3)]
    n: usize,
    /// Number of symbol components (grades 1 down to 2 - depth).
    #[arg(long, default_value_t = 4)]
    depth: usize,
    /// Radial truncation order; defaults to depth + 1.
    #[arg(long)]
    k_r: Option<u32>,
    /// Tangential truncation order; defaults to depth.
    #[arg(long)]
    k_y: Option<u32>,
    /// `flat`, `random` or a JSON table of jets for g_{αβ}.
    #[arg(long, default_value = "flat")]
    metric: String,
    /// `zero`, `random` or a JSON jet for V.
    #[arg(long, default_value = "zero")]
    weight: String,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[command(flatten)]
    common: Common,
}

#[derive(Subcommand)]
enum Command {
    /// Run every task of a scenario file.
    Run {
        scenario: PathBuf,
        /// Run tasks on separate threads.
        #[arg(long)]
        parallel: bool,
        #[command(flatten)]
        common: Common,
    },
    /// Factorize and check the residual.
    Factorize {
        #[arg(long, default_value = "scalar")]
        mode: String,
        /// `s` or `sigma`.
        #[arg(long)]
        gauge: Option<String>,
        #[command(flatten)]
        geometry: Geometry,
    },
    /// DN symbol data.
    Dn {
        /// `lambda0` or `lambda1`.
        #[arg(long, default_value = "lambda0")]
        map: String,
        #[arg(long)]
        gauge: Option<String>,
        #[command(flatten)]
        geometry: Geometry,
    },
    /// Recover radial Taylor coefficients from synthesized DN data.
    Reconstruct {
        /// gauge-pair, metric-known-weight, weight-from-scalar,
        /// weight-from-gauge, gauge-pair-known-volume, scalar-known-volume.
        #[arg(long)]
        method: String,
        /// `d1V=VALUE` or `d2V=VALUE`; VALUE is `true`, a number or a JSON jet.
        #[arg(long)]
        prescribe: Vec<String>,
        #[arg(long)]
        order: Option<usize>,
        /// `lambda0`, `gauge-s` or `gauge-sigma` for metric-known-weight.
        #[arg(long)]
        data: Option<String>,
        #[command(flatten)]
        geometry: Geometry,
    },
    /// Second weight with the same gauge-s DN symbol.
    Counterexample {
        #[command(flatten)]
        geometry: Geometry,
    },
    /// Compare numeric disk DN ratios with symbol partial sums.
    ValidateDisk {
        /// `lo:hi` or a comma-separated list.
        #[arg(long, default_value = "8:64")]
        modes: String,
        #[arg(long, default_value_t = 2)]
        depth: usize,
        /// Coefficients of V in ρ, comma-separated; defaults to (1 - ρ)²/2.
        #[arg(long)]
        v: Option<String>,
        #[command(flatten)]
        common: Common,
    },
    /// Run the acceptance checks.
    Selftest {
        /// Run a single criterion.
        #[arg(long)]
        criterion: Option<u32>,
    },
}

fn parse_enum<E: serde::de::DeserializeOwned>(what: &str, s: &str) -> Result<E, String> {
    serde_json::from_value(serde_json::Value::String(s.replace('-', "_"))).map_err(|_| format!("unknown {what} `{s}`"))
}

fn parse_json<T: serde::de::DeserializeOwned>(what: &str, s: &str) -> Result<T, String> {
    serde_json::from_str(s).map_err(|e| format!("{what}: {e}"))
}

fn prescription(items: &[String]) -> Result<Option<PrescriptionSpec>, String> {
    let mut spec = PrescriptionSpec::default();
    for item in items {
        let (key, value) = item.split_once('=').ok_or_else(|| format!("prescription `{item}` is not KEY=VALUE"))?;
        let value = match value.trim() {
            "true" => Prescribed::Truth(TruthTag::True),
            v if v.starts_with('[') => Prescribed::Value(parse_json("prescription", v)?),
            v => Prescribed::Value(JetSpec::Constant(Number::Text(v.to_string()))),
        };
        let slot = match key.trim().to_ascii_lowercase().as_str() {
            "d1v" => &mut spec.d1v,
            "d2v" => &mut spec.d2v,
            k => return Err(format!("unknown prescription `{k}` (expected d1V or d2V)")),
        };
        if slot.is_some() {
            return Err(format!("{key} given twice"));
        }
        *slot = Some(value);
    }
    if spec.d1v.is_some() && spec.d2v.is_some() {
        return Err("conflicting prescriptions: give either d1V or d2V".into());
    }
    Ok((spec.d1v.is_some() || spec.d2v.is_some()).then_some(spec))
}

fn scenario(geo: &Geometry, task: Task) -> Result<Scenario, String> {
    let metric = match geo.metric.as_str() {
        "flat" => MetricSpec::Named(NamedMetric::Flat),
        "random" => MetricSpec::Named(NamedMetric::Random),
        t => MetricSpec::Table(parse_json("metric", t)?),
    };
    let weight = match geo.weight.as_str() {
        "zero" => WeightSpec::Named(NamedWeight::Zero),
        "random" => WeightSpec::Named(NamedWeight::Random),
        t => WeightSpec::Jet(parse_json("weight", t)?),
    };
    Ok(Scenario {
        schema_version: SCHEMA_VERSION,
        n: geo.n,
        k_r: geo.k_r.unwrap_or(geo.depth as u32 + 1),
        k_y: geo.k_y.unwrap_or(geo.depth as u32),
        depth: geo.depth,
        backend: Some(geo.common.backend),
        seed: geo.seed,
        metric,
        weight,
        tasks: vec![task],
    })
}

fn emit(report: &Report, common: &Common) -> Result<u8, String> {
    let text = report.to_json();
    match &common.output {
        Some(p) => std::fs::write(p, text).map_err(|e| format!("{}: {e}", p.display()))?,
        None => print!("{text}"),
    }
    for t in &report.tasks {
        let status = serde_json::to_value(t.status).expect("plain data");
        eprintln!("task {} {}: {}", t.index, t.task, status.as_str().unwrap_or_default());
        if let Some(m) = &t.message {
            eprintln!("  {m}");
        }
    }
    Ok(report.exit_code() as u8)
}

fn execute(sc: Scenario, input: Vec<u8>, backend: Backend, parallel: bool, common: &Common) -> Result<u8, String> {
    sc.validate()?;
    let backend = sc.backend.unwrap_or(backend);
    let report = run(&sc, &input, backend, parallel)?;
    emit(&report, common)
}

fn single(geo: &Geometry, task: Task) -> Result<u8, String> {
    let sc = scenario(geo, task)?;
    let input = sc.to_json().into_bytes();
    execute(sc, input, geo.common.backend, false, &geo.common)
}

fn main_inner(cli: Cli) -> Result<u8, String> {
    match cli.command {
        Command::Run { scenario, parallel, common } => {
            let input = std::fs::read(&scenario).map_err(|e| format!("{}: {e}", scenario.display()))?;
            let text = String::from_utf8(input.clone()).map_err(|_| "scenario is not UTF-8".to_string())?;
            let sc = Scenario::parse(&text)?;
            let backend = if std::env::var_os("DNSYM_BACKEND").is_some() || sc.backend.is_none() {
                common.backend
            } else {
                sc.backend.unwrap_or(common.backend)
            };
            let sc = Scenario { backend: Some(backend), ..sc };
            execute(sc, input, backend, parallel, &common)
        }
        Command::Factorize { mode, gauge, geometry } => {
            let mode: Mode = parse_enum("mode", &mode)?;
            let gauge: Option<Gauge> = gauge.map(|g| parse_enum("gauge", &g)).transpose()?;
            single(&geometry, Task::Factorize { mode, gauge })
        }
        Command::Dn { map, gauge, geometry } => {
            let map: MapKind = parse_enum("map", &map)?;
            let gauge: Option<Gauge> = gauge.map(|g| parse_enum("gauge", &g)).transpose()?;
            single(&geometry, Task::Dn { map, gauge })
        }
        Command::Reconstruct { method, prescribe, order, data, geometry } => {
            let method: Method = parse_enum("method", &method)?;
            let data: Option<DataKind> = data.map(|d| parse_enum("data", &d)).transpose()?;
            let prescription = prescription(&prescribe)?;
            single(&geometry, Task::Reconstruct { method, prescription, order, data })
        }
        Command::Counterexample { geometry } => single(&geometry, Task::Counterexample {}),
        Command::ValidateDisk { modes, depth, v, common } => {
            let modes = if modes.contains(':') {
                ModeList::Range(modes)
            } else {
                let list = modes.split(',').map(|m| m.trim().parse::<u32>()).collect::<Result<Vec<_>, _>>();
                ModeList::List(list.map_err(|_| format!("bad mode list `{modes}`"))?)
            };
            let v = v
                .map(|v| v.split(',').map(|c| c.trim().parse::<f64>()).collect::<Result<Vec<_>, _>>())
                .transpose()
                .map_err(|_| "bad coefficient list for --v".to_string())?;
            let geo = Geometry {
                n: 2,
                depth: depth + 1,
                k_r: None,
                k_y: None,
                metric: "flat".into(),
                weight: "zero".into(),
                seed: 0,
                common,
            };
            let task = Task::ValidateDisk { modes, order: depth, v };
            let sc = scenario(&geo, task)?;
            let sc = Scenario { backend: Some(Backend::Float), ..sc };
            let input = sc.to_json().into_bytes();
            execute(sc, input, Backend::Float, false, &geo.common)
        }
        Command::Selftest { criterion } => {
            let ids: Vec<u32> = match criterion {
                Some(c) => vec![c],
                None => (1..=acceptance::CRITERIA.len() as u32).collect(),
            };
            let mut ok = true;
            for id in ids {
                let o = acceptance::run(id).ok_or_else(|| format!("no criterion {id}"))?;
                println!("{o}");
                ok &= o.passed;
            }
            println!("{}", if ok { "all criteria passed" } else { "some criteria failed" });
            Ok(if ok { 0 } else { 1 })
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match main_inner(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(INPUT_ERROR)
        }
    }
}
