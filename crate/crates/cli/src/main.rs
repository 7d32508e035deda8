//! Batch front-end: reads a problem specification, runs the requested
//! pipeline, and emits a human-readable or machine-readable report.
//!
//! Exit codes: 0 success, 1 validation failure (unreadable or malformed
//! input), 2 mathematical failure (a verification did not hold), 64 usage
//! error.

mod examples;
mod spec;

use clap::{Parser, Subcommand, ValueEnum};
use diffinv::error::Error;
use diffinv::invariants::{
    first_order_invariants, first_order_n1, is_fractional_linear, universal_differential_invariant,
    UniversalInvariant, INDEPENDENCE_FRACTION, INDEPENDENCE_POINTS,
};
use diffinv::invdiff::reconstruct_field;
use diffinv::jet::binomial;
use diffinv::linalg::full_rank_fraction;
use diffinv::prolong::prolong;
use diffinv::quadrature::{j_numeric, j_symbolic, validate_parametrization};
use diffinv::riccati::{
    build_system, classify_planar, general_solution_systems, verify_shrinking_constants,
    verify_solution, Variant, VerifyGrid,
};
use diffinv::sample::rng;
use diffinv::{Bindings, Scalar};
use serde::Serialize;
use spec::Problem;
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(
    name = "diffinv",
    version,
    about = "Differential invariants of one-parameter groups and their Riccati-type systems"
)]
struct Cli {
    /// Sample count for numeric verification.
    #[arg(long, global = true, default_value_t = 200)]
    samples: usize,
    /// Relative tolerance for numeric verification.
    #[arg(long, global = true, default_value_t = 1e-8)]
    tol: f64,
    /// Seed for all sampling.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Report format.
    #[arg(long, global = true, value_enum, default_value_t = Format::Text)]
    format: Format,
    /// Sampling interval override, repeatable: SYM=LO:HI.
    #[arg(long = "domain", global = true, value_name = "SYM=LO:HI")]
    domains: Vec<String>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Text,
    Json,
}

#[derive(Subcommand)]
enum Command {
    /// Validate the spec: field, universal invariant, level set, planar class.
    Check { spec: PathBuf },
    /// Print the prolongation coefficients up to the given order.
    Prolong {
        spec: PathBuf,
        #[arg(long, default_value_t = 1)]
        order: usize,
    },
    /// Complete set of differential invariants with invariance and rank reports.
    Invariants {
        spec: PathBuf,
        #[arg(long, default_value_t = 1)]
        order: usize,
    },
    /// Exactly-first-order invariants.
    FirstOrder { spec: PathBuf },
    /// Companion function by quadrature: symbolic from the antiderivative,
    /// or a numeric flow-time table along the level set.
    Quadrature { spec: PathBuf },
    /// Riccati-type system pipeline.
    Riccati {
        #[command(subcommand)]
        action: RiccatiAction,
    },
    /// Reconstruct the field from the invariants and the companion.
    Reconstruct { spec: PathBuf },
    /// Built-in worked examples.
    Examples {
        #[command(subcommand)]
        action: ExamplesAction,
    },
}

#[derive(Subcommand)]
enum RiccatiAction {
    /// Generate the system along the level set.
    Build { spec: PathBuf },
    /// Generate and solve in closed form.
    Solve { spec: PathBuf },
    /// Generate, solve, and verify solution families on a grid.
    Verify { spec: PathBuf },
}

#[derive(Subcommand)]
enum ExamplesAction {
    /// Run built-in examples end to end: 1..5, a fixture name, or `all`.
    Run { which: String },
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err) => {
            let _ = err.print();
            return ExitCode::from(64);
        }
    };
    match run(&cli) {
        Ok(pass) => {
            if pass {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(2)
            }
        }
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(classify_exit(&err))
        }
    }
}

/// Validation failures exit 1; mathematical failures exit 2.
fn classify_exit(err: &Error) -> u8 {
    match err {
        Error::Syntax { .. }
        | Error::UnknownFunction { .. }
        | Error::WrongArity { .. }
        | Error::InvalidBinding { .. }
        | Error::OrderExceeded { .. }
        | Error::DeterminantTooLarge(_) => 1,
        _ => 2,
    }
}

fn sig17(value: f64) -> String {
    format!("{value:.16e}")
}

fn load_problem(cli: &Cli, path: &PathBuf) -> Result<Problem, Error> {
    let text = std::fs::read_to_string(path).map_err(|err| Error::InvalidBinding {
        name: path.display().to_string(),
        reason: match err.kind() {
            std::io::ErrorKind::NotFound => "spec file not found",
            _ => "spec file unreadable",
        },
    })?;
    let parsed: spec::ProblemSpec =
        serde_json::from_str(&text).map_err(|_| Error::InvalidBinding {
            name: path.display().to_string(),
            reason: "spec file is not valid JSON for a problem specification",
        })?;
    let mut problem = spec::load(&parsed, cli.seed, cli.samples, cli.tol)?;
    for entry in &cli.domains {
        let (name, range) = entry.split_once('=').ok_or(Error::InvalidBinding {
            name: entry.clone(),
            reason: "expected SYM=LO:HI",
        })?;
        let (lo, hi) = range.split_once(':').ok_or(Error::InvalidBinding {
            name: entry.clone(),
            reason: "expected SYM=LO:HI",
        })?;
        let (lo, hi): (f64, f64) = match (lo.parse(), hi.parse()) {
            (Ok(lo), Ok(hi)) => (lo, hi),
            _ => {
                return Err(Error::InvalidBinding {
                    name: entry.clone(),
                    reason: "bounds must be numbers",
                })
            }
        };
        problem.opts.sampler.set(name.to_string(), lo, hi);
    }
    Ok(problem)
}

fn emit<R: Serialize>(cli: &Cli, report: &R, text: String) -> Result<(), Error> {
    match cli.format {
        Format::Json => {
            let json = serde_json::to_string_pretty(report)
                .map_err(|err| Error::Integration(err.to_string()))?;
            println!("{json}");
        }
        Format::Text => println!("{text}"),
    }
    Ok(())
}

fn universal(problem: &Problem) -> Result<UniversalInvariant, Error> {
    let j = problem.j.clone().ok_or(Error::WrongArity {
        what: "companion function J (spec key \"J\")",
        expected: 1,
        got: 0,
    })?;
    if problem.invariants.is_empty() {
        return Err(Error::WrongArity {
            what: "universal invariant components (spec key \"invariants\")",
            expected: problem.js.n() + problem.js.m() - 1,
            got: 0,
        });
    }
    UniversalInvariant::new(
        problem.field.clone(),
        problem.invariants.clone(),
        j,
        &problem.opts,
    )
}

fn run(cli: &Cli) -> Result<bool, Error> {
    match &cli.command {
        Command::Check { spec } => check(cli, spec),
        Command::Prolong { spec, order } => prolong_cmd(cli, spec, *order),
        Command::Invariants { spec, order } => invariants_cmd(cli, spec, *order),
        Command::FirstOrder { spec } => first_order_cmd(cli, spec),
        Command::Quadrature { spec } => quadrature_cmd(cli, spec),
        Command::Riccati { action } => riccati_cmd(cli, action),
        Command::Reconstruct { spec } => reconstruct_cmd(cli, spec),
        Command::Examples {
            action: ExamplesAction::Run { which },
        } => examples_cmd(cli, which),
    }
}

#[derive(Serialize)]
struct CheckReport {
    command: &'static str,
    field_valid: bool,
    universal_invariant: Option<String>,
    level_set: Option<String>,
    planar_class: Option<String>,
    pass: bool,
}

fn check(cli: &Cli, path: &PathBuf) -> Result<bool, Error> {
    let problem = load_problem(cli, path)?;
    let mut pass = true;
    let universal_invariant = if problem.j.is_some() && !problem.invariants.is_empty() {
        match universal(&problem) {
            Ok(_) => Some("valid: QI = 0, QJ = 1, functionally independent".to_string()),
            Err(err) => {
                pass = false;
                Some(format!("invalid: {err}"))
            }
        }
    } else {
        None
    };
    let level_set = match &problem.level_set {
        Some(p) => {
            let report =
                validate_parametrization(&problem.invariants, p, &problem.js, &problem.opts)?;
            if report.all_pass() {
                Some("valid: I o p = C for every invariant".to_string())
            } else {
                pass = false;
                Some(format!("invalid for invariants {:?}", report.failing()))
            }
        }
        None => None,
    };
    let planar_class = if problem.js.n() == 1 && problem.js.m() == 1 {
        Some(format!("{:?}", classify_planar(&problem.field, &problem.opts)?))
    } else {
        None
    };
    let report = CheckReport {
        command: "check",
        field_valid: true,
        universal_invariant: universal_invariant.clone(),
        level_set: level_set.clone(),
        planar_class: planar_class.clone(),
        pass,
    };
    let mut text = String::from("field: valid\n");
    if let Some(line) = universal_invariant {
        text.push_str(&format!("universal invariant: {line}\n"));
    }
    if let Some(line) = level_set {
        text.push_str(&format!("level set: {line}\n"));
    }
    if let Some(line) = planar_class {
        text.push_str(&format!("planar class: {line}\n"));
    }
    text.push_str(if pass { "check: PASS" } else { "check: FAIL" });
    emit(cli, &report, text)?;
    Ok(pass)
}

#[derive(Serialize)]
struct ProlongReport {
    command: &'static str,
    order: usize,
    coefficients: Vec<ProlongEntry>,
}

#[derive(Serialize)]
struct ProlongEntry {
    dependent: usize,
    multi_index: String,
    coefficient: String,
}

fn prolong_cmd(cli: &Cli, path: &PathBuf, order: usize) -> Result<bool, Error> {
    let problem = load_problem(cli, path)?;
    let qr = prolong(&problem.field, order);
    let coefficients: Vec<ProlongEntry> = qr
        .coefficients()?
        .into_iter()
        .map(|(i, alpha, coeff)| ProlongEntry {
            dependent: i + 1,
            multi_index: alpha.to_string(),
            coefficient: coeff.render(),
        })
        .collect();
    let mut text = format!("prolongation coefficients up to order {order}:\n");
    for entry in &coefficients {
        text.push_str(&format!(
            "  eta^{}_[{}] = {}\n",
            entry.dependent, entry.multi_index, entry.coefficient
        ));
    }
    text.pop();
    let report = ProlongReport {
        command: "prolong",
        order,
        coefficients,
    };
    emit(cli, &report, text)?;
    Ok(true)
}

#[derive(Serialize)]
struct InvariantsReport {
    command: &'static str,
    order: usize,
    invariants: Vec<String>,
    expected_count: usize,
    all_invariant: bool,
    full_rank_fraction: f64,
    pass: bool,
}

fn invariants_cmd(cli: &Cli, path: &PathBuf, order: usize) -> Result<bool, Error> {
    let problem = load_problem(cli, path)?;
    let ui = universal(&problem)?;
    let out = universal_differential_invariant(&ui, order, &problem.opts)?;
    let expected = (problem.js.n() - 1) + problem.js.m() * binomial(problem.js.n() + order, order);
    let qr = prolong(&problem.field, order);
    let mut r = rng(problem.opts.seed);
    let mut all_invariant = true;
    for inv in &out {
        let verdict = qr.is_invariant(
            inv,
            &problem.opts.sampler,
            problem.opts.samples,
            problem.opts.tol,
            &mut r,
        )?;
        all_invariant &= verdict.is_invariant();
    }
    let coords = problem.js.widened(order).coordinates(order)?;
    let fraction = full_rank_fraction(
        &out,
        &coords,
        &problem.opts.sampler,
        INDEPENDENCE_POINTS,
        &mut r,
    )?;
    let pass =
        out.len() == expected && all_invariant && fraction >= INDEPENDENCE_FRACTION;
    let rendered: Vec<String> = out.iter().map(|e| e.render()).collect();
    let mut text = format!("differential invariants up to order {order}:\n");
    for inv in &rendered {
        text.push_str(&format!("  {inv}\n"));
    }
    text.push_str(&format!(
        "count: {} (expected {expected})\nall invariant: {all_invariant}\n\
         full rank at {:.0}% of sampled points\n{}",
        rendered.len(),
        100.0 * fraction,
        if pass { "invariants: PASS" } else { "invariants: FAIL" }
    ));
    let report = InvariantsReport {
        command: "invariants",
        order,
        invariants: rendered,
        expected_count: expected,
        all_invariant,
        full_rank_fraction: fraction,
        pass,
    };
    emit(cli, &report, text)?;
    Ok(pass)
}

#[derive(Serialize)]
struct FirstOrderReport {
    command: &'static str,
    /// Rows index the dependent variables, columns the rectified axes.
    entries: Vec<Vec<String>>,
    fractional_linear: Option<bool>,
    all_invariant: bool,
    pass: bool,
}

fn first_order_cmd(cli: &Cli, path: &PathBuf) -> Result<bool, Error> {
    let problem = load_problem(cli, path)?;
    let ui = universal(&problem)?;
    let rows = first_order_invariants(&ui, &problem.opts)?;
    let qr = prolong(&problem.field, 1);
    let mut r = rng(problem.opts.seed);
    let mut all_invariant = true;
    for row in &rows {
        for entry in row {
            all_invariant &= qr
                .is_invariant(
                    entry,
                    &problem.opts.sampler,
                    problem.opts.samples,
                    problem.opts.tol,
                    &mut r,
                )?
                .is_invariant();
        }
    }
    let fractional_linear = if problem.js.n() == 1 {
        let js1 = problem.js.widened(1);
        let out = first_order_n1(&ui)?;
        Some(out.iter().all(|e| is_fractional_linear(e, &js1)))
    } else {
        None
    };
    let pass = all_invariant && fractional_linear.unwrap_or(true);
    let entries: Vec<Vec<String>> = rows
        .iter()
        .map(|row| row.iter().map(|e| e.render()).collect())
        .collect();
    let mut text = String::from("exactly-first-order invariants:\n");
    for (i, row) in entries.iter().enumerate() {
        for (c, entry) in row.iter().enumerate() {
            text.push_str(&format!("  D_y{} I^{} = {entry}\n", c + 1, i + 1));
        }
    }
    if let Some(fl) = fractional_linear {
        text.push_str(&format!("fractional-linear in the first jets: {fl}\n"));
    }
    text.push_str(&format!(
        "all invariant under the first prolongation: {all_invariant}\n{}",
        if pass { "first-order: PASS" } else { "first-order: FAIL" }
    ));
    let report = FirstOrderReport {
        command: "first-order",
        entries,
        fractional_linear,
        all_invariant,
        pass,
    };
    emit(cli, &report, text)?;
    Ok(pass)
}

#[derive(Serialize)]
struct QuadratureReport {
    command: &'static str,
    mode: &'static str,
    companion: Option<String>,
    table: Vec<QuadratureRow>,
    pass: bool,
}

#[derive(Serialize)]
struct QuadratureRow {
    z: String,
    flow_time: String,
}

fn quadrature_cmd(cli: &Cli, path: &PathBuf) -> Result<bool, Error> {
    let problem = load_problem(cli, path)?;
    let p = problem.level_set.as_ref().ok_or(Error::WrongArity {
        what: "level_set (required by the quadrature command)",
        expected: 1,
        got: 0,
    })?;
    if let Some(antiderivative) = &problem.antiderivative {
        let j = j_symbolic(
            &problem.field,
            &problem.invariants,
            p,
            antiderivative,
            &problem.opts,
        )?;
        let rendered = j.render();
        let report = QuadratureReport {
            command: "quadrature",
            mode: "symbolic",
            companion: Some(rendered.clone()),
            table: Vec::new(),
            pass: true,
        };
        emit(
            cli,
            &report,
            format!("J = {rendered}\nverified: dJ/dz matches 1/coefficient and QJ = 1"),
        )?;
        return Ok(true);
    }
    // numeric table: points along one level set, flow time from the first
    let (z0, z1) = problem.z_span();
    let params = problem.grid_params();
    let point = |z: f64| -> Result<Bindings<Scalar>, Error> {
        let mut bindings = params.clone();
        bindings.set("z", z);
        let mut out: Bindings<Scalar> = Bindings::new();
        for (b, e) in p.x().iter().enumerate() {
            out.set(problem.js.indep_name(b).to_string(), e.eval(&bindings)?);
        }
        for (j, e) in p.u().iter().enumerate() {
            out.set(problem.js.dep_name(j).to_string(), e.eval(&bindings)?);
        }
        // carry free field parameters along
        for (name, value) in params.iter() {
            if out.get(name).is_none() && problem.js.classify(name).is_none() {
                out.set(name.clone(), *value);
            }
        }
        Ok(out)
    };
    let base = point(z0)?;
    let steps = 8;
    let mut table = Vec::new();
    for idx in 0..=steps {
        let z = z0 + (z1 - z0) * idx as f64 / steps as f64;
        let target = point(z)?;
        let t = j_numeric(&problem.field, &problem.invariants, &base, &target, 1e-10)?;
        table.push(QuadratureRow {
            z: sig17(z),
            flow_time: sig17(t),
        });
    }
    let mut text = String::from("flow time from the level-set base point (J gauge J(base) = 0):\n");
    text.push_str("  z                        t\n");
    for row in &table {
        text.push_str(&format!("  {:<24} {}\n", row.z, row.flow_time));
    }
    text.pop();
    let report = QuadratureReport {
        command: "quadrature",
        mode: "numeric",
        companion: None,
        table,
        pass: true,
    };
    emit(cli, &report, text)?;
    Ok(true)
}

#[derive(Serialize)]
struct RiccatiReport {
    command: &'static str,
    action: &'static str,
    unknowns: Vec<String>,
    system: Vec<String>,
    solution: Option<Vec<String>>,
    constants: Vec<String>,
    note: Option<String>,
    verification: Option<VerificationSummary>,
    pass: bool,
}

#[derive(Serialize)]
struct VerificationSummary {
    constants_magnitude: f64,
    general_max_residual: String,
    general_max_flow_deviation: String,
    particular_max_residual: String,
    rows: Vec<VerificationRow>,
}

#[derive(Serialize)]
struct VerificationRow {
    z: String,
    residual: String,
    flow_deviation: String,
}

fn riccati_problem(problem: &Problem) -> Result<(Variant, &diffinv::quadrature::LevelSetParametrization), Error> {
    let p = problem.level_set.as_ref().ok_or(Error::WrongArity {
        what: "level_set (required by the riccati commands)",
        expected: 1,
        got: 0,
    })?;
    let variant = match p.distinguished() {
        diffinv::quadrature::Distinguished::Independent(a) => Variant::Xi(a),
        diffinv::quadrature::Distinguished::Dependent(i) => Variant::Eta(i),
    };
    Ok((variant, p))
}

fn j_source_of(problem: &Problem, p: &diffinv::quadrature::LevelSetParametrization) -> Result<diffinv::quadrature::JSource, Error> {
    if let Some(j) = &problem.j {
        return Ok(diffinv::quadrature::JSource::Symbolic(j.clone()));
    }
    if let Some(antiderivative) = &problem.antiderivative {
        let j = j_symbolic(
            &problem.field,
            &problem.invariants,
            p,
            antiderivative,
            &problem.opts,
        )?;
        return Ok(diffinv::quadrature::JSource::Symbolic(j));
    }
    // fall back to the quadrature integrand 1/coefficient on the level set
    let coeff = p.distinguished_coefficient(&problem.field);
    Ok(diffinv::quadrature::JSource::Integrand(
        p.apply(coeff, &problem.js)?.inv(),
    ))
}

fn riccati_cmd(cli: &Cli, action: &RiccatiAction) -> Result<bool, Error> {
    let (path, action_name) = match action {
        RiccatiAction::Build { spec } => (spec, "build"),
        RiccatiAction::Solve { spec } => (spec, "solve"),
        RiccatiAction::Verify { spec } => (spec, "verify"),
    };
    let problem = load_problem(cli, path)?;
    let (variant, p) = riccati_problem(&problem)?;
    let sys = build_system(&problem.field, p, variant, &problem.opts)?;
    let system: Vec<String> = sys.rhs().iter().map(|e| e.render()).collect();
    let unknowns = sys.unknowns().to_vec();
    let mut text = String::from("riccati system:\n");
    for (u, rhs) in unknowns.iter().zip(&system) {
        text.push_str(&format!("  d{u}/dz = {rhs}\n"));
    }
    if matches!(action, RiccatiAction::Build { .. }) {
        text.push_str("build: PASS");
        let report = RiccatiReport {
            command: "riccati",
            action: action_name,
            unknowns,
            system,
            solution: None,
            constants: Vec::new(),
            note: None,
            verification: None,
            pass: true,
        };
        emit(cli, &report, text)?;
        return Ok(true);
    }
    let j_source = j_source_of(&problem, p)?;
    let solution = general_solution_systems(
        &problem.field,
        &problem.invariants,
        p,
        &j_source,
        &problem.opts,
    )?;
    let rendered_solution: Vec<String> =
        solution.components.iter().map(|e| e.render()).collect();
    text.push_str("general solution family:\n");
    for (u, component) in unknowns.iter().zip(&rendered_solution) {
        text.push_str(&format!("  {u} = {component}\n"));
    }
    text.push_str(&format!("constants: {}\n", solution.constants.join(", ")));
    text.push_str(&format!("note: {}\n", solution.note));
    if matches!(action, RiccatiAction::Solve { .. }) {
        text.push_str("solve: PASS");
        let report = RiccatiReport {
            command: "riccati",
            action: action_name,
            unknowns,
            system,
            solution: Some(rendered_solution),
            constants: solution.constants.clone(),
            note: Some(solution.note.clone()),
            verification: None,
            pass: true,
        };
        emit(cli, &report, text)?;
        return Ok(true);
    }
    // verify: the general family at shrinking constants, and its
    // zero-constant member at a tight tolerance
    let (z0, z1) = problem.z_span();
    let grid = VerifyGrid {
        z0,
        z1,
        steps: 20,
        params: problem.grid_params(),
    };
    let (general_report, magnitude) =
        verify_shrinking_constants(&sys, &solution, &grid, 1e-2, problem.opts.tol)?;
    let mut particular_grid = grid.clone();
    for name in &solution.constants {
        particular_grid.params.set(name.clone(), 0.0);
    }
    let particular_report = verify_solution(&sys, &solution, &particular_grid, problem.opts.tol)?;
    let pass = general_report.pass && particular_report.pass;
    let rows: Vec<VerificationRow> = general_report
        .rows
        .iter()
        .map(|row| VerificationRow {
            z: sig17(row.z),
            residual: sig17(row.residual),
            flow_deviation: sig17(row.flow_deviation),
        })
        .collect();
    text.push_str(&format!(
        "verification grid: [{z0}, {z1}], constants magnitude {magnitude:.1e}\n"
    ));
    text.push_str("  z                        residual                 flow deviation\n");
    for row in &rows {
        text.push_str(&format!(
            "  {:<24} {:<24} {}\n",
            row.z, row.residual, row.flow_deviation
        ));
    }
    text.push_str(&format!(
        "general family: max residual {}, max flow deviation {}\n",
        sig17(general_report.max_residual),
        sig17(general_report.max_flow_deviation)
    ));
    text.push_str(&format!(
        "particular member: max residual {}\n",
        sig17(particular_report.max_residual)
    ));
    text.push_str(if pass { "verify: PASS" } else { "verify: FAIL" });
    let report = RiccatiReport {
        command: "riccati",
        action: action_name,
        unknowns,
        system,
        solution: Some(rendered_solution),
        constants: solution.constants.clone(),
        note: Some(solution.note.clone()),
        verification: Some(VerificationSummary {
            constants_magnitude: magnitude,
            general_max_residual: sig17(general_report.max_residual),
            general_max_flow_deviation: sig17(general_report.max_flow_deviation),
            particular_max_residual: sig17(particular_report.max_residual),
            rows,
        }),
        pass,
    };
    emit(cli, &report, text)?;
    Ok(pass)
}

#[derive(Serialize)]
struct ReconstructReport {
    command: &'static str,
    xi: Vec<String>,
    eta: Vec<String>,
}

fn reconstruct_cmd(cli: &Cli, path: &PathBuf) -> Result<bool, Error> {
    let problem = load_problem(cli, path)?;
    let j = problem.j.clone().ok_or(Error::WrongArity {
        what: "companion function J (spec key \"J\")",
        expected: 1,
        got: 0,
    })?;
    let field = reconstruct_field(&problem.invariants, &j, &problem.js, &problem.opts)?;
    let xi: Vec<String> = field.xi().iter().map(|e| e.render()).collect();
    let eta: Vec<String> = field.eta().iter().map(|e| e.render()).collect();
    let mut text = String::from("reconstructed field:\n");
    for (a, coeff) in xi.iter().enumerate() {
        text.push_str(&format!("  xi^{} = {coeff}\n", a + 1));
    }
    for (i, coeff) in eta.iter().enumerate() {
        text.push_str(&format!("  eta^{} = {coeff}\n", i + 1));
    }
    text.push_str("reconstruct: PASS (QI = 0 and QJ = 1 verified)");
    let report = ReconstructReport {
        command: "reconstruct",
        xi,
        eta,
    };
    emit(cli, &report, text)?;
    Ok(true)
}

#[derive(Serialize)]
struct ExamplesReport {
    command: &'static str,
    reports: Vec<examples::FixtureReport>,
    pass: bool,
}

fn examples_cmd(cli: &Cli, which: &str) -> Result<bool, Error> {
    let names: Vec<&str> = match which {
        "all" => vec![
            "example1",
            "example2",
            "example3-k-1",
            "example3-k2",
            "example4",
            "example5",
        ],
        "1" => vec!["example1"],
        "2" => vec!["example2"],
        "3" => vec!["example3-k-1", "example3-k2"],
        "4" => vec!["example4"],
        "5" => vec!["example5"],
        name => vec![name],
    };
    let mut reports = Vec::new();
    for name in names {
        let fixture = diffinv::fixtures::by_name(name).ok_or(Error::InvalidBinding {
            name: name.to_string(),
            reason: "unknown example (use 1..5, a fixture name, or `all`)",
        })?;
        reports.push(examples::run_fixture(&fixture));
    }
    let pass = reports.iter().all(|r| r.pass);
    let mut text = String::new();
    for report in &reports {
        text.push_str(&format!("== {} ({})\n", report.fixture, report.title));
        for check in &report.checks {
            text.push_str(&format!(
                "  [{}] {}: {}\n",
                if check.pass { "ok" } else { "FAIL" },
                check.name,
                check.detail
            ));
        }
    }
    text.push_str(if pass { "examples: PASS" } else { "examples: FAIL" });
    let report = ExamplesReport {
        command: "examples",
        reports,
        pass,
    };
    emit(cli, &report, text)?;
    Ok(pass)
}
