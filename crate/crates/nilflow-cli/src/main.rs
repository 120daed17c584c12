//! Command-line harness: geodesic simulation runs, certification suites and
//! machine-readable reports.
//!
//! Exit codes: 0 pass, 1 check failed (witnesses in the report), 2
//! configuration error, 3 numeric failure.

// `!(x > 0.0)` rejects NaN input; `x <= 0.0` would let it through.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use nalgebra::DVector;

use nilflow::algebra::{AlgebraVector, TwoStepAlgebra};
use nilflow::config::{AlgebraFile, FamilyFile, LatticeFile, MetricFile};
use nilflow::error::Error;
use nilflow::flow::{self, Method};
use nilflow::heisenberg::{self, FamilyKind};
use nilflow::integrals::FirstIntegral;
use nilflow::lattice::{self, Lattice};
use nilflow::pmetric::PMetric;
use nilflow::report::{self, CheckReport};
use nilflow::state::TangentState;
use nilflow::verify;

#[derive(Parser)]
#[command(
    name = "nilflow",
    about = "Geodesic flow on 2-step nilpotent Lie groups: simulation and integrability checks"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Integrate a geodesic and report conservation of a family of integrals.
    Simulate(SimulateArgs),
    /// Run one of the certification suites and emit a JSON report.
    Check(CheckArgs),
    /// Print structural facts about the configured algebra.
    AlgebraInfo(CommonArgs),
}

#[derive(Args, Clone)]
struct CommonArgs {
    /// `hn` for the Heisenberg group, or a path to an algebra JSON file.
    #[arg(long, default_value = "hn")]
    group: String,

    /// Heisenberg rank (used when --group hn).
    #[arg(long, default_value_t = 1)]
    n: usize,

    /// `canonical`, or a path to a metric JSON file.
    #[arg(long, default_value = "canonical")]
    metric: String,

    /// Family: G, F, Fprime, quotient, or a path to a family JSON file.
    #[arg(long)]
    family: Option<String>,

    /// Lattice divisors as `1,2,...` or a path to a lattice JSON file.
    #[arg(long)]
    lattice: Option<String>,

    /// Number of sampled states for the checks.
    #[arg(long, default_value_t = 1000)]
    samples: usize,

    /// Base seed; per-sample seeds are derived by counter.
    #[arg(long, default_value_t = 0)]
    seed: u64,

    /// Tolerance override for the residual checks.
    #[arg(long)]
    tol: Option<f64>,

    /// Output file (JSON report; simulate writes `<out>.csv` and `<out>.json`).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SimulateArgs {
    #[command(flatten)]
    common: CommonArgs,

    /// Initial velocity coordinates, comma separated.
    #[arg(long)]
    y0: String,

    /// Initial base point coordinates (defaults to the identity).
    #[arg(long)]
    p0: Option<String>,

    /// Integration horizon.
    #[arg(long, default_value_t = 10.0)]
    horizon: f64,

    /// Step size.
    #[arg(long, default_value_t = 1e-3)]
    dt: f64,

    /// Integration method: rk4 or exact-fiber.
    #[arg(long, default_value = "rk4")]
    method: String,
}

#[derive(Args)]
struct CheckArgs {
    #[command(flatten)]
    common: CommonArgs,

    /// One of: involution, integrals, rank, butler, quotient, isomorphism.
    #[arg(long)]
    check: String,
}

/// The resolved model: an algebra, and the Heisenberg structure when the
/// group is `hn` (required by the named families and quotient machinery).
struct Model {
    algebra: TwoStepAlgebra,
    rank: Option<usize>,
    p_metric: Option<PMetric>,
}

fn parse_floats(text: &str, what: &str) -> Result<Vec<f64>, Error> {
    text.split(',')
        .map(|tok| {
            tok.trim()
                .parse::<f64>()
                .map_err(|_| Error::Config(format!("{what}: cannot parse '{tok}' as a float")))
        })
        .collect()
}

fn resolve_model(common: &CommonArgs) -> Result<Model, Error> {
    if common.group == "hn" {
        if common.n == 0 {
            return Err(Error::Config("--n must be at least 1".into()));
        }
        let metric = if common.metric == "canonical" {
            MetricFile::Canonical
        } else {
            MetricFile::load(Path::new(&common.metric))?
        };
        let p_metric = metric.build(common.n)?;
        let algebra = match &p_metric {
            Some(pm) => pm.algebra().clone(),
            None => heisenberg::canonical_algebra(common.n),
        };
        Ok(Model {
            algebra,
            rank: Some(common.n),
            p_metric,
        })
    } else {
        if common.metric != "canonical" {
            return Err(Error::Config(
                "metric files are only supported with --group hn".into(),
            ));
        }
        let algebra = AlgebraFile::load(Path::new(&common.group))?.build()?;
        Ok(Model {
            algebra,
            rank: None,
            p_metric: None,
        })
    }
}

fn resolve_lattice(common: &CommonArgs) -> Result<Lattice, Error> {
    let value = common
        .lattice
        .as_ref()
        .ok_or_else(|| Error::Config("this check needs --lattice".into()))?;
    if value.chars().all(|c| c.is_ascii_digit() || c == ',') {
        let divisors = value
            .split(',')
            .map(|tok| {
                tok.parse::<u64>()
                    .map_err(|_| Error::Config(format!("bad lattice divisor '{tok}'")))
            })
            .collect::<Result<Vec<_>, _>>()?;
        Lattice::new(divisors)
    } else {
        LatticeFile::load(Path::new(value))?.build()
    }
}

fn resolve_family(model: &Model, common: &CommonArgs) -> Result<Vec<FirstIntegral>, Error> {
    let token = common.family.as_deref().unwrap_or("G");
    match (&model.p_metric, token) {
        (Some(pm), "F") => Ok(pm.families().0),
        (Some(pm), "Fprime") => Ok(pm.families().1),
        (Some(_), other) => Err(Error::Config(format!(
            "family '{other}' is not defined for P metrics; use F or Fprime"
        ))),
        (None, "quotient") => {
            let n = model
                .rank
                .ok_or_else(|| Error::Config("quotient families need --group hn".into()))?;
            Ok(lattice::quotient_family(n, true))
        }
        (None, "G") | (None, "F") | (None, "Fprime") => {
            let n = model
                .rank
                .ok_or_else(|| Error::Config("named families need --group hn".into()))?;
            Ok(heisenberg::family(n, FamilyKind::parse(token)?))
        }
        (None, path) => FamilyFile::load(Path::new(path))?.build(),
    }
}

fn emit(report_json: &str, out: &Option<PathBuf>) -> Result<(), Error> {
    println!("{report_json}");
    if let Some(path) = out {
        std::fs::write(path, format!("{report_json}\n"))?;
    }
    Ok(())
}

fn wrap_reports(check: &str, reports: Vec<CheckReport>) -> Result<(String, bool), Error> {
    let passed = reports.iter().all(|r| r.passed);
    let text = if reports.len() == 1 {
        report::to_json_string(&reports[0])?
    } else {
        let value = serde_json::json!({
            "schema": report::SCHEMA_VERSION,
            "check": check,
            "passed": passed,
            "reports": reports,
        });
        report::to_json_string(&value)?
    };
    Ok((text, passed))
}

fn run_check(args: &CheckArgs) -> Result<bool, Error> {
    let common = &args.common;
    let model = resolve_model(common)?;
    let algebra = &model.algebra;
    let samples = common.samples;
    let seed = common.seed;

    let (text, passed) = match args.check.as_str() {
        "involution" => {
            let family = resolve_family(&model, common)?;
            let tol = common.tol.unwrap_or(1e-10);
            let report = verify::involution(algebra, &family, samples, seed, tol)?;
            wrap_reports("involution", vec![report])?
        }
        "integrals" => {
            let family = resolve_family(&model, common)?;
            let tol = common.tol.unwrap_or(1e-10);
            let report = verify::integral_certification(algebra, &family, samples, seed, tol)?;
            wrap_reports("integrals", vec![report])?
        }
        "rank" => {
            let family = resolve_family(&model, common)?;
            let report = verify::rank(algebra, &family, samples, seed, 0.99)?;
            wrap_reports("rank", vec![report])?
        }
        "butler" => {
            let report = verify::butler_check(algebra, samples, seed)?;
            wrap_reports("butler", vec![report])?
        }
        "quotient" => {
            let lattice = resolve_lattice(common)?;
            let reports = verify::quotient_checks(&lattice, 100, samples, seed)?;
            wrap_reports("quotient", reports)?
        }
        "isomorphism" => {
            let n = model.rank.ok_or_else(|| {
                Error::Config("the isomorphism check needs --group hn".into())
            })?;
            let expected = n * n + 2 * n + 1;
            let probes = samples.max(2 * expected + 4);
            let report = verify::isomorphism_injectivity(n, probes, seed)?;
            wrap_reports("isomorphism", vec![report])?
        }
        other => {
            return Err(Error::Config(format!(
                "unknown check '{other}'; expected involution, integrals, rank, butler, quotient or isomorphism"
            )))
        }
    };
    emit(&text, &common.out)?;
    Ok(passed)
}

fn run_simulate(args: &SimulateArgs) -> Result<bool, Error> {
    let common = &args.common;
    let model = resolve_model(common)?;
    let algebra = &model.algebra;
    let method = Method::parse(&args.method)?;

    let y0 = parse_floats(&args.y0, "--y0")?;
    if y0.len() != algebra.dim() {
        return Err(Error::Config(format!(
            "--y0 needs {} coordinates, got {}",
            algebra.dim(),
            y0.len()
        )));
    }
    let p0 = match &args.p0 {
        Some(text) => {
            let coords = parse_floats(text, "--p0")?;
            if coords.len() != algebra.dim() {
                return Err(Error::Config(format!(
                    "--p0 needs {} coordinates, got {}",
                    algebra.dim(),
                    coords.len()
                )));
            }
            DVector::from_row_slice(&coords)
        }
        None => algebra.group_identity(),
    };
    let initial = TangentState::new(
        p0,
        AlgebraVector::from_vector(DVector::from_row_slice(&y0), algebra.dim_v()),
    );
    if !(args.dt > 0.0) || !(args.horizon > 0.0) {
        return Err(Error::Config("--dt and --horizon must be positive".into()));
    }

    let family = match (&common.family, &model.p_metric, model.rank) {
        (None, None, Some(_)) => resolve_family(&model, common)?,
        (None, Some(pm), _) => pm.families().0,
        (None, None, None) => vec![FirstIntegral::energy()],
        (Some(_), _, _) => resolve_family(&model, common)?,
    };

    let trajectory = flow::integrate(algebra, &initial, args.horizon, args.dt, method)?;
    let drifts = flow::conservation_report(algebra, &trajectory, &family)?;

    let tol = common.tol.unwrap_or(1e-6);
    let mut check = CheckReport::new("conservation", tol);
    check.samples = trajectory.states.len();
    for (label, drift) in &drifts {
        check.record(0, label.clone(), *drift, &initial);
    }
    check.details = Some(serde_json::json!({
        "horizon": args.horizon,
        "dt": args.dt,
        "method": args.method,
        "drifts": drifts.iter().cloned().collect::<std::collections::BTreeMap<_, _>>(),
    }));

    let json = report::to_json_string(&check)?;
    match &common.out {
        Some(prefix) => {
            let csv_path = prefix.with_extension("csv");
            let json_path = prefix.with_extension("json");
            let mut csv = std::fs::File::create(&csv_path)?;
            flow::write_csv(&trajectory, &mut csv)?;
            std::fs::write(&json_path, format!("{json}\n"))?;
            println!("{json}");
        }
        None => println!("{json}"),
    }
    Ok(check.passed)
}

fn run_algebra_info(common: &CommonArgs) -> Result<bool, Error> {
    let model = resolve_model(common)?;
    let algebra = &model.algebra;
    let center = algebra.center();
    let (nonsingular, witness) = algebra.is_nonsingular(common.samples.max(8), common.seed);
    let value = serde_json::json!({
        "schema": report::SCHEMA_VERSION,
        "dim_v": algebra.dim_v(),
        "dim_z": algebra.dim_z(),
        "dim": algebra.dim(),
        "center_dimension": center.len(),
        "nonsingular": nonsingular,
        "singular_witness": witness.map(|w| w.iter().copied().collect::<Vec<f64>>()),
        "standard_metric": algebra.has_standard_metric(),
    });
    emit(&report::to_json_string(&value)?, &common.out)?;
    Ok(true)
}

fn dispatch(cli: &Cli) -> Result<bool, Error> {
    match &cli.command {
        Command::Simulate(args) => run_simulate(args),
        Command::Check(args) => run_check(args),
        Command::AlgebraInfo(common) => run_algebra_info(common),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(err) => {
            eprintln!("error: {err}");
            match err {
                Error::Numeric(_) => ExitCode::from(3),
                _ => ExitCode::from(2),
            }
        }
    }
}
