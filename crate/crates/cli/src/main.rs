//! `curvspec`: curvature, spectra and M-eigenpairs of metrics from the shell.

mod render;

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Map, Value};

use curvspec_core::cases::{builtin, run_checks, CatalogEntry, CATALOG};
use curvspec_core::expr;
use curvspec_core::geometry::{
    check_symmetries, inner, invariants, riemann, sectional, wedge_norm_sq, MetricFile, MetricSpec,
    RiemannTensor,
};
use curvspec_core::jacobi::{decoupled_solution, integrate_jacobi, write_csv};
use curvspec_core::meig::{solve_meig, theta_of, SolveOptions};
use curvspec_core::spectra::{assemble_pencil, classical_eigen, decompose_eigenpairs, vacuum_block_check};
use curvspec_core::Error;

const STARTS_ENV: &str = "CURVSPEC_STARTS";

#[derive(Parser)]
#[command(name = "curvspec", version, about = "Curvature tensors and their eigenproblems")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Metric, Ricci tensor, scalar curvature and Kretschmann invariant
    Curvature {
        #[command(flatten)]
        metric: MetricArgs,
        #[command(flatten)]
        at: PointArgs,
        #[command(flatten)]
        out: OutputArgs,
    },
    /// Eigenvalues of the antisymmetric-pair problem; block structure in 4D
    Classical {
        #[command(flatten)]
        metric: MetricArgs,
        #[command(flatten)]
        at: PointArgs,
        #[command(flatten)]
        out: OutputArgs,
    },
    /// M-eigenpairs by multi-start Newton
    Meig {
        #[command(flatten)]
        metric: MetricArgs,
        #[command(flatten)]
        at: PointArgs,
        #[command(flatten)]
        solver: SolverArgs,
        #[command(flatten)]
        out: OutputArgs,
    },
    /// Sectional curvature of span{u, v}
    Sectional {
        #[command(flatten)]
        metric: MetricArgs,
        #[command(flatten)]
        at: PointArgs,
        /// first vector, comma separated
        #[arg(long, allow_hyphen_values = true)]
        u: String,
        /// second vector, comma separated
        #[arg(long, allow_hyphen_values = true)]
        v: String,
        #[command(flatten)]
        out: OutputArgs,
    },
    /// Geodesic and Jacobi field from the point given by --at
    Jacobi {
        #[command(flatten)]
        metric: MetricArgs,
        #[command(flatten)]
        at: PointArgs,
        /// geodesic tangent
        #[arg(long, allow_hyphen_values = true)]
        u0: String,
        /// initial deviation
        #[arg(long, allow_hyphen_values = true)]
        v0: String,
        /// initial covariant derivative of the deviation
        #[arg(long, allow_hyphen_values = true)]
        w0: String,
        #[arg(long, default_value_t = 1.0)]
        t_max: f64,
        #[arg(long, default_value_t = 1000)]
        steps: usize,
        /// compare |v| with the solution of y'' + θ y = 0
        #[arg(long, allow_negative_numbers = true)]
        theta: Option<f64>,
        /// write the trajectory as CSV
        #[arg(long)]
        csv: Option<PathBuf>,
        #[command(flatten)]
        out: OutputArgs,
    },
    /// Compare a builtin metric against its closed-form values
    Check {
        #[command(flatten)]
        metric: MetricArgs,
        #[command(flatten)]
        at: PointArgs,
        #[command(flatten)]
        solver: SolverArgs,
        #[command(flatten)]
        out: OutputArgs,
    },
    /// Print a metric as a spec file (TOML, or JSON with --format json)
    Export {
        #[command(flatten)]
        metric: MetricArgs,
        #[command(flatten)]
        out: OutputArgs,
    },
}

#[derive(Args)]
struct MetricArgs {
    /// catalog metric name
    #[arg(long, conflicts_with = "metric", required_unless_present = "metric")]
    builtin: Option<String>,
    /// metric spec file (.toml or .json)
    #[arg(long)]
    metric: Option<PathBuf>,
    /// parameter override, repeatable
    #[arg(long = "param", value_name = "KEY=VALUE")]
    params: Vec<String>,
}

#[derive(Args)]
struct PointArgs {
    /// point as coord=value pairs, comma separated
    #[arg(long, value_name = "COORD=VALUE,...", allow_hyphen_values = true)]
    at: String,
}

#[derive(Args)]
struct OutputArgs {
    #[arg(long, value_enum, default_value_t = Format::Text)]
    format: Format,
}

#[derive(Args)]
struct SolverArgs {
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// number of random starts [default: 64, or $CURVSPEC_STARTS]
    #[arg(long)]
    starts: Option<usize>,
    /// require g(u, v) = 0
    #[arg(long)]
    modified: bool,
    #[arg(long, default_value_t = 1.0, allow_negative_numbers = true)]
    sigma_u: f64,
    #[arg(long, default_value_t = 1.0, allow_negative_numbers = true)]
    sigma_v: f64,
    #[arg(long, default_value_t = 1e-12)]
    tol: f64,
    #[arg(long, default_value_t = 100)]
    max_iter: usize,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Text,
    Json,
}

/// Input problems (exit 2) versus failures of the numerics (exit 3).
enum Failure {
    Input(String),
    Numerical(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        if e.is_numerical() {
            Failure::Numerical(e.to_string())
        } else {
            Failure::Input(e.to_string())
        }
    }
}

type Outcome<T> = std::result::Result<T, Failure>;

fn input<T>(msg: impl Into<String>) -> Outcome<T> {
    Err(Failure::Input(msg.into()))
}

fn scalar_value(flag: &str, text: &str) -> Outcome<f64> {
    let e = expr::parse::<&str>(text.trim(), &[], &[])
        .map_err(|e| Failure::Input(format!("{flag}: cannot read '{text}': {e}")))?;
    let v = e
        .eval(&[])
        .map_err(|e| Failure::Input(format!("{flag}: cannot evaluate '{text}': {e}")))?;
    if !v.is_finite() {
        return input(format!("{flag}: '{text}' is not finite"));
    }
    Ok(v)
}

fn key_values(flag: &str, items: impl Iterator<Item = String>) -> Outcome<Vec<(String, f64)>> {
    items
        .map(|item| {
            let Some((k, v)) = item.split_once('=') else {
                return input(format!("{flag}: expected KEY=VALUE, got '{item}'"));
            };
            Ok((k.trim().to_string(), scalar_value(flag, v)?))
        })
        .collect()
}

fn vector(flag: &str, text: &str, n: usize) -> Outcome<Vec<f64>> {
    let v: Vec<f64> = text
        .split(',')
        .map(|s| scalar_value(flag, s))
        .collect::<Outcome<_>>()?;
    if v.len() != n {
        return input(format!("{flag}: expected {n} components, got {}", v.len()));
    }
    Ok(v)
}

struct Metric {
    spec: MetricSpec,
    entry: Option<CatalogEntry>,
}

fn load_metric(args: &MetricArgs) -> Outcome<Metric> {
    let params = key_values("--param", args.params.iter().cloned())?;
    if let Some(name) = &args.builtin {
        let entry = builtin(name, &params).map_err(|e| match e {
            Error::UnknownCase(_) => {
                let names: Vec<&str> = CATALOG.iter().map(|(n, _)| *n).collect();
                Failure::Input(format!("--builtin: unknown metric '{name}' (known: {})", names.join(", ")))
            }
            other => Failure::Input(format!("--param: {other}")),
        })?;
        return Ok(Metric {
            spec: entry.spec.clone(),
            entry: Some(entry),
        });
    }
    let path = args.metric.as_ref().expect("clap enforces --builtin or --metric");
    let mut file = MetricFile::load(path).map_err(|e| Failure::Input(format!("--metric {}: {e}", path.display())))?;
    for (k, v) in params {
        match file.params.get_mut(&k) {
            Some(slot) => *slot = v,
            None => return input(format!("--param: metric file has no parameter '{k}'")),
        }
    }
    let spec = file
        .into_spec()
        .map_err(|e| Failure::Input(format!("--metric {}: {e}", path.display())))?;
    Ok(Metric { spec, entry: None })
}

fn parse_point(spec: &MetricSpec, at: &str) -> Outcome<Vec<f64>> {
    let pairs = key_values("--at", at.split(',').map(str::to_string))?;
    let coords = spec.coords();
    let mut point = vec![None; coords.len()];
    for (k, v) in pairs {
        let Some(i) = coords.iter().position(|c| *c == k) else {
            return input(format!("--at: '{k}' is not a coordinate (coordinates: {})", coords.join(", ")));
        };
        if point[i].replace(v).is_some() {
            return input(format!("--at: coordinate '{k}' given twice"));
        }
    }
    let missing: Vec<&str> = coords
        .iter()
        .zip(&point)
        .filter(|(_, v)| v.is_none())
        .map(|(c, _)| c.as_str())
        .collect();
    if !missing.is_empty() {
        return input(format!("--at: missing coordinates {}", missing.join(", ")));
    }
    Ok(point.into_iter().map(|v| v.expect("checked above")).collect())
}

fn solver_options(args: &SolverArgs) -> Outcome<SolveOptions> {
    let starts = match args.starts {
        Some(s) => s,
        None => match std::env::var(STARTS_ENV) {
            Ok(text) => text
                .trim()
                .parse()
                .map_err(|_| Failure::Input(format!("{STARTS_ENV}: expected a count, got '{text}'")))?,
            Err(_) => SolveOptions::default().starts,
        },
    };
    let opts = SolveOptions {
        starts,
        seed: args.seed,
        tol: args.tol,
        max_iter: args.max_iter,
        sigma_u: args.sigma_u,
        sigma_v: args.sigma_v,
        modified: args.modified,
        ..SolveOptions::default()
    };
    opts.validate().map_err(|e| Failure::Input(e.to_string()))?;
    Ok(opts)
}

fn matrix(m: &curvspec_core::nalgebra::DMatrix<f64>) -> Value {
    json!(m.row_iter().map(|r| r.iter().copied().collect::<Vec<f64>>()).collect::<Vec<_>>())
}

fn symmetry_residuals(rt: &RiemannTensor) -> Map<String, Value> {
    check_symmetries(rt)
        .entries()
        .iter()
        .map(|(k, v)| (k.to_string(), json!(v)))
        .collect()
}

struct Report {
    results: Value,
    residuals: Value,
    exit: u8,
}

impl Report {
    fn ok(results: Value, residuals: Value) -> Self {
        Report {
            results,
            residuals,
            exit: 0,
        }
    }
}

fn curvature(spec: &MetricSpec, p: &[f64]) -> Outcome<Report> {
    let rt = riemann(spec, p)?;
    let inv = invariants(&rt);
    Ok(Report::ok(
        json!({
            "metric": matrix(rt.g()),
            "det": rt.metric_jet.det,
            "ricci": matrix(&inv.ricci),
            "ricci_max_abs": inv.ricci_max_abs(),
            "scalar": inv.scalar,
            "kretschmann": inv.kretschmann,
        }),
        Value::Object(symmetry_residuals(&rt)),
    ))
}

fn classical(spec: &MetricSpec, p: &[f64]) -> Outcome<Report> {
    let rt = riemann(spec, p)?;
    let pencil = assemble_pencil(&rt);
    let pairs = classical_eigen(&pencil)?;
    let split = decompose_eigenpairs(&rt, &pairs);
    let mut max_res: f64 = 0.0;
    let list: Vec<Value> = pairs
        .iter()
        .zip(&split)
        .map(|(e, d)| {
            max_res = max_res.max(e.residual);
            json!({
                "zeta": {"re": e.zeta.re, "im": e.zeta.im},
                "x_re": e.x.iter().map(|c| c.re).collect::<Vec<_>>(),
                "x_im": e.x.iter().map(|c| c.im).collect::<Vec<_>>(),
                "residual": e.residual,
                "decomposable": d.decomposable,
                "half_zeta_as_meig_residual": d.residual,
            })
        })
        .collect();
    let mut results = json!({
        "pair_basis": pencil.basis.pairs().iter().map(|&(i, j)| vec![i, j]).collect::<Vec<_>>(),
        "zeta_re": pairs.iter().map(|e| e.zeta.re).collect::<Vec<_>>(),
        "zeta_im": pairs.iter().map(|e| e.zeta.im).collect::<Vec<_>>(),
        "pairs": list,
    });
    let mut residuals = json!({ "max_pencil_residual": max_res });
    if rt.dim() == 4 {
        let b = vacuum_block_check(&rt)?;
        results["vacuum_blocks"] = json!({
            "m": matrix(&b.m_block),
            "n": matrix(&b.n_block),
            "trace_n": b.trace_n,
            "trace_m": b.trace_m,
            "kappa": b.kappa,
            "trace_m_plus_kappa": b.trace_m_plus_kappa,
        });
        residuals["block_m_plus_w"] = json!(b.m_plus_w);
        residuals["block_n_asymmetry"] = json!(b.n_asymmetry);
    }
    Ok(Report::ok(results, residuals))
}

fn meig(spec: &MetricSpec, p: &[f64], opts: &SolveOptions) -> Outcome<Report> {
    let rt = riemann(spec, p)?;
    let sol = solve_meig(&rt, opts)?;
    let max_res = sol.pairs.iter().fold(0.0_f64, |m, q| m.max(q.residual));
    let consistency = sol
        .pairs
        .iter()
        .fold(0.0_f64, |m, q| m.max((q.theta - theta_of(&rt, &q.u, &q.v)).abs()));
    Ok(Report::ok(
        json!({
            "theta": sol.thetas(),
            "pairs": sol.pairs,
            "stats": sol.stats,
            "options": {
                "starts": opts.starts,
                "seed": opts.seed,
                "modified": opts.modified,
                "sigma_u": opts.sigma_u,
                "sigma_v": opts.sigma_v,
            },
        }),
        json!({ "max_residual": max_res, "max_theta_mismatch": consistency }),
    ))
}

fn sectional_cmd(spec: &MetricSpec, p: &[f64], u: &str, v: &str) -> Outcome<Report> {
    let n = spec.dim();
    let u = vector("--u", u, n)?;
    let v = vector("--v", v, n)?;
    let rt = riemann(spec, p)?;
    let k = sectional(&rt, &u, &v)?;
    Ok(Report::ok(
        json!({
            "sectional": k,
            "r_uvuv": theta_of(&rt, &u, &v),
            "wedge_norm_sq": wedge_norm_sq(rt.g(), &u, &v),
        }),
        json!({}),
    ))
}

struct JacobiArgs<'a> {
    u0: &'a str,
    v0: &'a str,
    w0: &'a str,
    t_max: f64,
    steps: usize,
    theta: Option<f64>,
    csv: Option<&'a PathBuf>,
}

fn jacobi(spec: &MetricSpec, p: &[f64], a: JacobiArgs) -> Outcome<Report> {
    let n = spec.dim();
    let u0 = vector("--u0", a.u0, n)?;
    let v0 = vector("--v0", a.v0, n)?;
    let w0 = vector("--w0", a.w0, n)?;
    let traj = integrate_jacobi(spec, p, &u0, &v0, &w0, a.t_max, a.steps)?;
    if let Some(path) = a.csv {
        let file = std::fs::File::create(path).map_err(|e| Failure::Input(format!("--csv {}: {e}", path.display())))?;
        write_csv(&traj, file)?;
    }
    let g0 = riemann(spec, p)?.g().clone();
    let uu0 = inner(&g0, &u0, &u0);
    let mut drift: f64 = 0.0;
    for s in &traj {
        let g = riemann(spec, &s.geodesic.x)?.g().clone();
        drift = drift.max((inner(&g, &s.geodesic.u, &s.geodesic.u) - uu0).abs());
    }
    let last = traj.last().expect("at least two samples");
    let mut results = json!({
        "samples": traj.len(),
        "final": {
            "t": last.geodesic.t,
            "x": last.geodesic.x,
            "u": last.geodesic.u,
            "v": last.jacobi.v,
            "w": last.jacobi.w,
            "norm_v": last.norm_v,
        },
    });
    let mut residuals = json!({ "tangent_norm_drift": drift });
    if let Some(theta) = a.theta {
        // scalar initial data along v0 (or w0 when v0 = 0)
        let nv = inner(&g0, &v0, &v0).abs().sqrt();
        let nw = inner(&g0, &w0, &w0).abs().sqrt();
        let (y0, dy0) = if nv > 0.0 { (nv, inner(&g0, &v0, &w0) / nv) } else { (0.0, nw) };
        let dev = traj
            .iter()
            .map(|s| (s.norm_v - decoupled_solution(theta, y0, dy0, s.geodesic.t).0.abs()).abs())
            .fold(0.0, f64::max);
        results["decoupled_final"] = json!(decoupled_solution(theta, y0, dy0, last.geodesic.t).0);
        residuals["max_decoupled_deviation"] = json!(dev);
    }
    Ok(Report::ok(results, residuals))
}

fn check(metric: &Metric, p: &[f64], opts: &SolveOptions) -> Outcome<Report> {
    let Some(entry) = &metric.entry else {
        return input("check: closed-form values exist only for --builtin metrics");
    };
    let rep = run_checks(entry, p, opts)?;
    let pass = rep.all_pass();
    Ok(Report {
        results: json!({ "items": rep.items, "all_pass": pass }),
        residuals: json!({ "max_abs_dev": rep.max_abs_dev() }),
        exit: if pass { 0 } else { 1 },
    })
}

fn metric_json(spec: &MetricSpec) -> Value {
    let params: Map<String, Value> = spec.params().iter().map(|(k, v)| (k.clone(), json!(v))).collect();
    json!({ "name": spec.name(), "coords": spec.coords(), "params": params })
}

fn run(cli: Cli) -> Outcome<u8> {
    let (name, metric_args, at, out) = match &cli.command {
        Command::Curvature { metric, at, out } => ("curvature", metric, Some(at), out),
        Command::Classical { metric, at, out } => ("classical", metric, Some(at), out),
        Command::Meig { metric, at, out, .. } => ("meig", metric, Some(at), out),
        Command::Sectional { metric, at, out, .. } => ("sectional", metric, Some(at), out),
        Command::Jacobi { metric, at, out, .. } => ("jacobi", metric, Some(at), out),
        Command::Check { metric, at, out, .. } => ("check", metric, Some(at), out),
        Command::Export { metric, out } => ("export", metric, None, out),
    };
    let metric = load_metric(metric_args)?;
    let Some(at) = at else {
        match out.format {
            Format::Text => emit(&metric.spec.to_toml_string()),
            Format::Json => emit(&format!("{}\n", metric.spec.to_json_string())),
        }
        return Ok(0);
    };
    let point = parse_point(&metric.spec, &at.at)?;
    let spec = &metric.spec;
    let report = match &cli.command {
        Command::Curvature { .. } => curvature(spec, &point)?,
        Command::Classical { .. } => classical(spec, &point)?,
        Command::Meig { solver, .. } => meig(spec, &point, &solver_options(solver)?)?,
        Command::Sectional { u, v, .. } => sectional_cmd(spec, &point, u, v)?,
        Command::Jacobi {
            u0,
            v0,
            w0,
            t_max,
            steps,
            theta,
            csv,
            ..
        } => jacobi(
            spec,
            &point,
            JacobiArgs {
                u0,
                v0,
                w0,
                t_max: *t_max,
                steps: *steps,
                theta: *theta,
                csv: csv.as_ref(),
            },
        )?,
        Command::Check { solver, .. } => check(&metric, &point, &solver_options(solver)?)?,
        Command::Export { .. } => unreachable!("handled above"),
    };
    let point_map: Map<String, Value> = spec.coords().iter().cloned().zip(point.iter().map(|v| json!(v))).collect();
    let doc = json!({
        "command": name,
        "metric": metric_json(spec),
        "point": point_map,
        "results": report.results,
        "residuals": report.residuals,
        "version": env!("CARGO_PKG_VERSION"),
    });
    match out.format {
        Format::Json => emit(&format!("{}\n", serde_json::to_string_pretty(&doc).expect("report serializes"))),
        Format::Text => emit(&render::text(&doc)),
    }
    Ok(report.exit)
}

// A closed pipe (`curvspec ... | head`) is not an error worth a panic.
fn emit(text: &str) {
    let mut out = std::io::stdout().lock();
    let _ = out.write_all(text.as_bytes()).and_then(|_| out.flush());
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(Failure::Input(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Numerical(msg)) => {
            eprintln!("numerical failure: {msg}");
            ExitCode::from(3)
        }
    }
}
