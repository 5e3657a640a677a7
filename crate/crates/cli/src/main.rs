//! `plexpand` command-line front end.
//!
//! Exit codes: 0 ok, 1 other failure, 2 domain error, 3 no root,
//! 4 enumeration cap exceeded, 5 no convergence, 6 certificate failure,
//! 64 usage error.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};
use thiserror::Error;

use plexpand::bench::{build_rotation, reproduce_tables, RotationConfig};
use plexpand::bounds::{beta_gamma, interval_evaluate, stability_radius, BoxK, CertError};
use plexpand::linearize::{self, AbsNormalForm, AnfError, LinearizeError};
use plexpand::newton::{
    newton_secant, newton_tangent, NewtonOptions, NewtonReport, NewtonStatus, SolverPreference,
};
use plexpand::plsolve::{degree, enumerate_roots, select_min_norm, SolveError, SolveOptions};
use plexpand::tape::{lower_minmax, parse_function_file, EvalProcedure, Opcode, TapeError};

#[derive(Debug, Error)]
enum Failure {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Domain(String),
    #[error("{0}")]
    NoRoot(String),
    #[error("{0}")]
    Cap(String),
    #[error("{0}")]
    NoConvergence(String),
    #[error("{0}")]
    Certificate(String),
    #[error("{0}")]
    Other(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Usage(_) => 64,
            Failure::Domain(_) => 2,
            Failure::NoRoot(_) => 3,
            Failure::Cap(_) => 4,
            Failure::NoConvergence(_) => 5,
            Failure::Certificate(_) => 6,
            Failure::Other(_) => 1,
        }
    }
}

impl From<TapeError> for Failure {
    fn from(e: TapeError) -> Self {
        match e {
            TapeError::Domain { .. } => Failure::Domain(e.to_string()),
            _ => Failure::Usage(e.to_string()),
        }
    }
}

impl From<LinearizeError> for Failure {
    fn from(e: LinearizeError) -> Self {
        match e {
            LinearizeError::Tape(t) => t.into(),
            LinearizeError::Domain { .. } | LinearizeError::DerivativeDomain { .. } => {
                Failure::Domain(e.to_string())
            }
            LinearizeError::Dimension { .. } => Failure::Usage(e.to_string()),
            LinearizeError::UnloweredMinMax => Failure::Other(e.to_string()),
        }
    }
}

impl From<AnfError> for Failure {
    fn from(e: AnfError) -> Self {
        Failure::Usage(format!("invalid abs-normal form: {e}"))
    }
}

impl From<SolveError> for Failure {
    fn from(e: SolveError) -> Self {
        match e {
            SolveError::Anf(a) => a.into(),
            SolveError::NotSquare { .. } | SolveError::Dimension { .. } => {
                Failure::Usage(e.to_string())
            }
            SolveError::EnumerationCapExceeded { .. } => Failure::Cap(e.to_string()),
            SolveError::NoRoot => Failure::NoRoot(e.to_string()),
            _ => Failure::Other(e.to_string()),
        }
    }
}

impl From<CertError> for Failure {
    fn from(e: CertError) -> Self {
        Failure::Certificate(e.to_string())
    }
}

#[derive(Parser)]
#[command(name = "plexpand", version, about = "Piecewise linear models, certificates and generalized Newton")]
struct Cli {
    /// Worker threads for piece enumeration.
    #[arg(long, global = true, env = "PLEXPAND_JOBS")]
    jobs: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Evaluate a function at a point.
    Eval(EvalArgs),
    /// Write the abs-normal form of a tangent or secant model as JSON.
    Linearize(LinearizeArgs),
    /// Enumerate the roots of an abs-normal form.
    Solve(SolveArgs),
    /// Run the generalized Newton iteration.
    Newton(NewtonArgs),
    /// Interval enclosures and Lipschitz certificates over a box.
    Bounds(BoundsArgs),
    /// Print the rotation benchmark tables.
    Reproduce(ReproduceArgs),
}

#[derive(Args)]
struct FunctionArg {
    /// Function file, or the built-in `rotation`.
    file: String,
    /// Add the oscillating term to the built-in rotation map.
    #[arg(long)]
    noise: bool,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ModeArg {
    Tangent,
    Secant,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Table,
    Json,
    Csv,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Solver {
    Enumeration,
    Modulus,
}

#[derive(Args)]
struct EvalArgs {
    #[command(flatten)]
    function: FunctionArg,
    /// Evaluation point, comma separated.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true, required = true)]
    x: Vec<f64>,
    /// List the value of every node.
    #[arg(long)]
    trace: bool,
    #[arg(long, value_enum, default_value = "table")]
    format: Format,
}

#[derive(Args)]
struct LinearizeArgs {
    #[command(flatten)]
    function: FunctionArg,
    #[arg(long, value_enum, default_value = "tangent")]
    mode: ModeArg,
    /// Reference point (tangent) or first secant point.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true, required = true)]
    x0: Vec<f64>,
    /// Second secant point.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    x1: Vec<f64>,
    /// Write the JSON here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SolveArgs {
    /// Abs-normal form JSON.
    file: PathBuf,
    /// Right-hand side; zero if omitted.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    target: Vec<f64>,
    /// Also report the root nearest to this point (the form's center if empty).
    #[arg(long)]
    min_norm: bool,
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    center: Vec<f64>,
    /// Add the mapping degree at the target.
    #[arg(long)]
    degree: bool,
    /// Largest number of switching variables to enumerate.
    #[arg(long, default_value_t = plexpand::plsolve::DEFAULT_CAP)]
    cap: usize,
    /// Visit pieces in a shuffled order.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args)]
struct NewtonArgs {
    #[command(flatten)]
    function: FunctionArg,
    #[arg(long, value_enum, default_value = "tangent")]
    mode: ModeArg,
    /// Starting point; the rotation benchmark has defaults.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    x0: Vec<f64>,
    /// Second starting point for secant mode.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    x1: Vec<f64>,
    #[arg(long, default_value_t = 50)]
    max_iter: usize,
    /// Residual tolerance in the infinity norm.
    #[arg(long, default_value_t = 1e-13)]
    tol: f64,
    #[arg(long, default_value_t = 0.0)]
    step_tol: f64,
    #[arg(long, default_value_t = plexpand::plsolve::DEFAULT_CAP)]
    cap: usize,
    #[arg(long, value_enum, default_value = "enumeration")]
    solver: Solver,
    #[arg(long, value_enum, default_value = "table")]
    format: Format,
}

#[derive(Args)]
struct BoundsArgs {
    #[command(flatten)]
    function: FunctionArg,
    /// Lower corner of the box, comma separated.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true, required = true)]
    lower: Vec<f64>,
    /// Upper corner of the box.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true, required = true)]
    upper: Vec<f64>,
    /// Also compute the degree stability radius of the tangent model.
    #[arg(long)]
    radius: bool,
    /// Linearization point for the radius; the box center if omitted.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    at: Vec<f64>,
    /// Number of random point pairs used to spot-check the certificates.
    #[arg(long, default_value_t = 0)]
    samples: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, value_enum, default_value = "table")]
    format: Format,
}

#[derive(Args)]
struct ReproduceArgs {
    /// Only the run with noise.
    #[arg(long, conflicts_with = "no_noise")]
    noise: bool,
    /// Only the run without noise.
    #[arg(long)]
    no_noise: bool,
    #[arg(long, value_enum, default_value = "table")]
    format: Format,
}

fn load_function(f: &FunctionArg) -> Result<EvalProcedure, Failure> {
    if f.file == "rotation" && !Path::new(&f.file).exists() {
        return Ok(build_rotation(&RotationConfig::with_noise(f.noise)));
    }
    if f.noise {
        return Err(Failure::Usage("--noise only applies to the built-in `rotation`".into()));
    }
    let text = std::fs::read_to_string(&f.file)
        .map_err(|e| Failure::Usage(format!("{}: {e}", f.file)))?;
    parse_function_file(&text, None, None).map_err(|e| Failure::Usage(format!("{}:{e}", f.file)))
}

fn expect_len(name: &str, v: &[f64], n: usize) -> Result<(), Failure> {
    if v.len() != n {
        return Err(Failure::Usage(format!(
            "--{name} has {} component(s), expected {n}",
            v.len()
        )));
    }
    Ok(())
}

fn to_json(v: &impl serde::Serialize) -> Result<String, Failure> {
    serde_json::to_string_pretty(v).map_err(|e| Failure::Other(e.to_string()))
}

fn operands(proc: &EvalProcedure, k: usize) -> String {
    let node = &proc.nodes()[k];
    match node.op {
        Opcode::Input(slot) => format!("x{}", slot + 1),
        Opcode::Const(c) => format!("{c}"),
        Opcode::PowInt(p) => format!("v{}, {p}", node.args[0]),
        _ => node
            .args
            .iter()
            .map(|a| format!("v{a}"))
            .collect::<Vec<_>>()
            .join(", "),
    }
}

fn op_name(proc: &EvalProcedure, k: usize) -> String {
    match proc.nodes()[k].op {
        Opcode::Custom(id) => proc.custom(id).name().to_string(),
        op => op.name().to_string(),
    }
}

fn cmd_eval(a: &EvalArgs) -> Result<String, Failure> {
    let proc = load_function(&a.function)?;
    expect_len("x", &a.x, proc.n())?;
    let trace = proc.evaluate(&a.x)?;
    let mut out = String::new();
    match a.format {
        Format::Json => {
            let mut doc = json!({ "y": trace.outputs });
            if a.trace {
                doc["trace"] = json!(trace.values);
            }
            out = to_json(&doc)? + "\n";
        }
        Format::Table | Format::Csv => {
            let sep = if a.format == Format::Csv { "," } else { "  " };
            for y in &trace.outputs {
                let _ = writeln!(out, "{y}");
            }
            if a.trace {
                for (k, v) in trace.values.iter().enumerate() {
                    let _ = writeln!(
                        out,
                        "v{k}{sep}{}{sep}{}{sep}{v}",
                        op_name(&proc, k),
                        operands(&proc, k)
                    );
                }
            }
        }
    }
    Ok(out)
}

fn cmd_linearize(a: &LinearizeArgs) -> Result<String, Failure> {
    let proc = lower_minmax(&load_function(&a.function)?);
    expect_len("x0", &a.x0, proc.n())?;
    let model = match a.mode {
        ModeArg::Tangent => {
            if !a.x1.is_empty() {
                return Err(Failure::Usage("tangent mode takes a single point".into()));
            }
            linearize::tangent(&proc, &a.x0)?
        }
        ModeArg::Secant => {
            if a.x1.is_empty() {
                return Err(Failure::Usage("secant mode needs --x1".into()));
            }
            expect_len("x1", &a.x1, proc.n())?;
            linearize::secant(&proc, &a.x0, &a.x1)?
        }
    };
    let text = model.abs_normal().to_json() + "\n";
    match &a.out {
        Some(path) => {
            std::fs::write(path, text)
                .map_err(|e| Failure::Other(format!("{}: {e}", path.display())))?;
            Ok(String::new())
        }
        None => Ok(text),
    }
}

fn cmd_solve(a: &SolveArgs, jobs: Option<usize>) -> Result<String, Failure> {
    let text = std::fs::read_to_string(&a.file)
        .map_err(|e| Failure::Usage(format!("{}: {e}", a.file.display())))?;
    let anf = AbsNormalForm::from_json(&text)?;
    let target = if a.target.is_empty() {
        vec![0.0; anf.m]
    } else {
        a.target.clone()
    };
    let center = if a.center.is_empty() {
        anf.center.clone()
    } else {
        a.center.clone()
    };
    expect_len("center", &center, anf.n)?;
    let opts = SolveOptions {
        cap: a.cap,
        jobs,
        shuffle_seed: a.seed,
    };
    let mut set = enumerate_roots(&anf, &target, &opts)?;
    if set.roots.is_empty() {
        return Err(SolveError::NoRoot.into());
    }
    if a.degree {
        set.degree = Some(degree(&anf, &target, &opts)?);
    }
    let mut doc = serde_json::to_value(&set).map_err(|e| Failure::Other(e.to_string()))?;
    if a.min_norm {
        if let Some(r) = select_min_norm(&set.roots, &center) {
            doc["min_norm"] = json!(r.x);
        }
    }
    Ok(to_json(&doc)? + "\n")
}

fn report_csv(r: &NewtonReport) -> String {
    let mut out = String::from("iteration,residual\n");
    for (k, v) in r.residual_norms.iter().enumerate() {
        let _ = writeln!(out, "{k},{v:e}");
    }
    out
}

fn cmd_newton(a: &NewtonArgs, jobs: Option<usize>) -> Result<(String, NewtonStatus), Failure> {
    let builtin = a.function.file == "rotation" && !Path::new(&a.function.file).exists();
    let proc = load_function(&a.function)?;
    if proc.n() != proc.m() {
        return Err(Failure::Usage(format!(
            "newton needs a square system, got n = {}, m = {}",
            proc.n(),
            proc.m()
        )));
    }
    let defaults = RotationConfig::default();
    let pick = |given: &[f64], fallback: [f64; 2], name: &str| -> Result<Vec<f64>, Failure> {
        if !given.is_empty() {
            expect_len(name, given, proc.n())?;
            Ok(given.to_vec())
        } else if builtin {
            Ok(fallback.to_vec())
        } else {
            Err(Failure::Usage(format!("--{name} is required")))
        }
    };
    let opts = NewtonOptions {
        max_iterations: a.max_iter,
        residual_tolerance: a.tol,
        step_tolerance: a.step_tol,
        solve: SolveOptions {
            cap: a.cap,
            jobs,
            shuffle_seed: None,
        },
        solver: match a.solver {
            Solver::Enumeration => SolverPreference::Enumeration,
            Solver::Modulus => SolverPreference::ModulusThenEnumeration,
        },
    };
    let report = match a.mode {
        ModeArg::Tangent => {
            if !a.x1.is_empty() {
                return Err(Failure::Usage("tangent mode takes a single start".into()));
            }
            let x0 = pick(&a.x0, defaults.start_tangent, "x0")?;
            newton_tangent(&proc, &x0, &opts)
        }
        ModeArg::Secant => {
            let x0 = pick(&a.x0, defaults.start_secant.0, "x0")?;
            let x1 = pick(&a.x1, defaults.start_secant.1, "x1")?;
            newton_secant(&proc, &x0, &x1, &opts)
        }
    };
    let out = match a.format {
        Format::Table => {
            let mut t = report.to_table();
            if let Some(x) = report.solution() {
                let _ = writeln!(t, "solution: {x:?}");
            }
            t
        }
        Format::Json => to_json(&report)? + "\n",
        Format::Csv => report_csv(&report),
    };
    Ok((out, report.status))
}

fn cmd_bounds(a: &BoundsArgs) -> Result<String, Failure> {
    let proc = load_function(&a.function)?;
    expect_len("lower", &a.lower, proc.n())?;
    expect_len("upper", &a.upper, proc.n())?;
    let k = BoxK::new(a.lower.clone(), a.upper.clone())
        .map_err(|e| Failure::Usage(e.to_string()))?;
    let certs = beta_gamma(&proc, &k)?;

    let radius = if a.radius {
        if certs.gamma_f == 0.0 && proc.n() != proc.m() {
            Some(json!({ "radius": null, "unbounded": true }))
        } else {
            if proc.n() != proc.m() {
                return Err(Failure::Usage("--radius needs n = m".into()));
            }
            let at = if a.at.is_empty() { k.center() } else { a.at.clone() };
            expect_len("at", &at, proc.n())?;
            let anf = linearize::tangent(&lower_minmax(&proc), &at)?.abs_normal();
            let r = stability_radius(&anf, &certs)?;
            Some(json!({
                "rho_F": r.rho_f,
                "radius": if r.unbounded { Value::Null } else { json!(r.radius) },
                "unbounded": r.unbounded,
            }))
        }
    } else {
        None
    };

    let checked = if a.samples > 0 {
        Some(spot_check(&proc, &k, certs.beta_f, a.samples, a.seed)?)
    } else {
        None
    };

    match a.format {
        Format::Json => {
            let mut doc = serde_json::to_value(&certs).map_err(|e| Failure::Other(e.to_string()))?;
            if let Some(r) = radius {
                doc["stability"] = r;
            }
            if let Some(n) = checked {
                doc["checked_pairs"] = json!(n);
            }
            Ok(to_json(&doc)? + "\n")
        }
        Format::Table | Format::Csv => {
            let csv = a.format == Format::Csv;
            let mut out = String::new();
            if csv {
                out.push_str("node,lo,hi,beta,gamma\n");
            } else {
                let _ = writeln!(
                    out,
                    "{:>5}  {:>14}  {:>14}  {:>14}  {:>14}",
                    "node", "lo", "hi", "beta", "gamma"
                );
            }
            for (i, c) in certs.per_node.iter().enumerate() {
                if csv {
                    let _ = writeln!(out, "{i},{:e},{:e},{:e},{:e}", c.lo, c.hi, c.beta, c.gamma);
                } else {
                    let _ = writeln!(
                        out,
                        "{i:>5}  {:>14.6e}  {:>14.6e}  {:>14.6e}  {:>14.6e}",
                        c.lo, c.hi, c.beta, c.gamma
                    );
                }
            }
            let _ = writeln!(out, "beta_F = {}", certs.beta_f);
            let _ = writeln!(out, "gamma_F = {}", certs.gamma_f);
            let _ = writeln!(out, "rigorous = {}", certs.rigorous);
            if let Some(r) = radius {
                if let Some(rho) = r.get("rho_F") {
                    let _ = writeln!(out, "rho_F = {rho}");
                }
                match r["radius"].as_f64() {
                    Some(v) => {
                        let _ = writeln!(out, "radius = {v}");
                    }
                    None => {
                        let _ = writeln!(out, "radius = unbounded");
                    }
                }
            }
            if let Some(n) = checked {
                let _ = writeln!(out, "checked pairs = {n}");
            }
            Ok(out)
        }
    }
}

/// Samples point pairs in `k` and checks enclosures and the Lipschitz bound.
fn spot_check(
    proc: &EvalProcedure,
    k: &BoxK,
    beta: f64,
    samples: usize,
    seed: u64,
) -> Result<usize, Failure> {
    let enclosure = interval_evaluate(proc, k)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..samples {
        let (x, y) = (k.sample(&mut rng), k.sample(&mut rng));
        let fx = proc.eval(&x)?;
        let fy = proc.eval(&y)?;
        for (i, &o) in proc.outputs().iter().enumerate() {
            if !enclosure[o].contains(fx[i]) {
                return Err(Failure::Certificate(format!(
                    "output {i} at {x:?} is {} outside [{}, {}]",
                    fx[i], enclosure[o].lo, enclosure[o].hi
                )));
            }
        }
        let dx = x.iter().zip(&y).fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
        let df = fx.iter().zip(&fy).fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
        if df > beta * dx * (1.0 + 1e-12) + 1e-300 {
            return Err(Failure::Certificate(format!(
                "Lipschitz bound {beta} violated between {x:?} and {y:?}"
            )));
        }
    }
    Ok(samples)
}

fn cmd_reproduce(a: &ReproduceArgs) -> Result<String, Failure> {
    let variants: Vec<bool> = match (a.noise, a.no_noise) {
        (true, _) => vec![true],
        (_, true) => vec![false],
        _ => vec![false, true],
    };
    let tables: Vec<_> = variants
        .into_iter()
        .map(|noise| reproduce_tables(&RotationConfig::with_noise(noise), &NewtonOptions::default()))
        .collect();
    let mut out = String::new();
    match a.format {
        Format::Json => out = to_json(&tables)? + "\n",
        Format::Table | Format::Csv => {
            for t in &tables {
                if a.format == Format::Csv {
                    let _ = writeln!(out, "# noise = {}", t.noise);
                    out.push_str(&t.to_csv());
                } else {
                    let title = if t.noise { "with noise" } else { "without noise" };
                    let _ = writeln!(out, "Rotation benchmark, {title}\n");
                    out.push_str(&t.to_markdown());
                    let _ = writeln!(
                        out,
                        "\ntangent: {} steps, {}; secant: {} steps, {}\n",
                        t.tangent.steps(),
                        t.tangent.status,
                        t.secant.steps(),
                        t.secant.status
                    );
                }
            }
        }
    }
    Ok(out)
}

fn newton_failure(status: &NewtonStatus) -> Option<Failure> {
    match status {
        NewtonStatus::Converged => None,
        NewtonStatus::NoRoot { .. } => Some(Failure::NoRoot(status.to_string())),
        NewtonStatus::DomainError { .. } => Some(Failure::Domain(status.to_string())),
        NewtonStatus::MaxIterations | NewtonStatus::Stalled => {
            Some(Failure::NoConvergence(status.to_string()))
        }
    }
}

fn run(cli: Cli) -> Result<String, Failure> {
    match &cli.command {
        Command::Eval(a) => cmd_eval(a),
        Command::Linearize(a) => cmd_linearize(a),
        Command::Solve(a) => cmd_solve(a, cli.jobs),
        Command::Newton(a) => {
            let (out, status) = cmd_newton(a, cli.jobs)?;
            match newton_failure(&status) {
                None => Ok(out),
                Some(f) => {
                    print!("{out}");
                    Err(f)
                }
            }
        }
        Command::Bounds(a) => cmd_bounds(a),
        Command::Reproduce(a) => cmd_reproduce(a),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(64)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match run(cli) {
        Ok(out) => {
            print!("{out}");
            ExitCode::SUCCESS
        }
        Err(f) => {
            eprintln!("error: {f}");
            ExitCode::from(f.code())
        }
    }
}
