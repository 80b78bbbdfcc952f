//! Problem files and the `fracstar` command line.
//!
//! Problem file schema (plain text, `#` starts a comment):
//!
//! ```text
//! alpha = 1.5
//! kind = homogeneous        # or: forced
//!
//! [bond]
//! length = 1
//! beta = 1
//! m = 1/3                   # numbers may be written as a/b
//! lambda = 2
//! b = 0.5                   # forced only
//! nu = 2.25                 # forced only; filled in from beta, m, alpha when omitted
//! ```
//!
//! `[bond]` sections repeat, one per bond, in bond order.

use std::fmt::Write as _;
use std::path::PathBuf;

use clap::{Parser, ValueEnum};
use serde::Serialize;

use crate::closed_form::{build_solutions, AmplitudeChoice, PowerSolution};
use crate::error::{Error, Result};
use crate::frac_ops::GridSpec;
use crate::model::{
    gamma_star, validate, BondSpec, ProblemKind, Severity, StarGraphProblem, Violation,
    LINEAR_POWER_TOLERANCE,
};
use crate::verify::{free_end_integral_decay, ode_residual, ResidualReport};
use crate::vertex::{
    continuity_values, kirchhoff_terms, matched_forcing, residuals_from, solve_lambdas_homogeneous,
    solve_vertex_forced, ForcedStatus, VertexResiduals, CLOSED_FORM_TOLERANCE, SOLVED_TOLERANCE,
};

pub const EXIT_OK: i32 = 0;
pub const EXIT_INVALID: i32 = 2;
pub const EXIT_SOLVER: i32 = 3;
pub const EXIT_VERIFY: i32 = 4;

/// Column order of the per-bond CSV table.
pub const CSV_COLUMNS: [&str; 7] = [
    "bond_index",
    "A",
    "p",
    "lambda",
    "c_value",
    "k_value",
    "max_rel_residual",
];

/// Points per bond in the sampled `(x, y)` tables of `verify`.
const SAMPLE_POINTS: usize = 33;

#[derive(Debug, Clone, PartialEq)]
pub struct ParsedProblem {
    pub problem: StarGraphProblem,
    /// Informational messages, e.g. filled-in forcing exponents.
    pub notices: Vec<String>,
}

fn parse_err(line: usize, field: &str, message: impl Into<String>) -> Error {
    Error::Parse {
        line,
        field: field.to_string(),
        message: message.into(),
    }
}

fn parse_number(line: usize, field: &str, raw: &str) -> Result<f64> {
    let value = match raw.split_once('/') {
        Some((num, den)) => {
            let num: f64 = num.trim().parse().map_err(|_| {
                parse_err(
                    line,
                    field,
                    format!("cannot parse numerator {:?}", num.trim()),
                )
            })?;
            let den: f64 = den.trim().parse().map_err(|_| {
                parse_err(
                    line,
                    field,
                    format!("cannot parse denominator {:?}", den.trim()),
                )
            })?;
            if den == 0.0 {
                return Err(parse_err(line, field, "zero denominator"));
            }
            num / den
        }
        None => raw
            .parse()
            .map_err(|_| parse_err(line, field, format!("cannot parse number {raw:?}")))?,
    };
    Ok(value)
}

#[derive(Default)]
struct BondDraft {
    header_line: usize,
    length: Option<f64>,
    beta: Option<f64>,
    m: Option<(f64, usize)>,
    lam: Option<f64>,
    b: Option<f64>,
    nu: Option<f64>,
}

fn set_once<T>(slot: &mut Option<T>, value: T, line: usize, field: &str) -> Result<()> {
    if slot.is_some() {
        return Err(parse_err(line, field, "duplicate key"));
    }
    *slot = Some(value);
    Ok(())
}

/// Parse a problem document. Unknown keys and sections are rejected.
pub fn parse_problem_file(text: &str) -> Result<ParsedProblem> {
    let mut alpha = None;
    let mut kind = None;
    let mut drafts: Vec<BondDraft> = Vec::new();

    for (idx, raw_line) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw_line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        if let Some(section) = line.strip_prefix('[') {
            let name = section
                .strip_suffix(']')
                .ok_or_else(|| parse_err(line_no, line, "unterminated section header"))?
                .trim();
            if name != "bond" {
                return Err(parse_err(
                    line_no,
                    name,
                    "unknown section (expected [bond])",
                ));
            }
            drafts.push(BondDraft {
                header_line: line_no,
                ..Default::default()
            });
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| parse_err(line_no, line, "expected `key = value`"))?;
        let (key, value) = (key.trim(), value.trim());
        if value.is_empty() {
            return Err(parse_err(line_no, key, "missing value"));
        }
        match drafts.last_mut() {
            None => match key {
                "alpha" => set_once(&mut alpha, parse_number(line_no, key, value)?, line_no, key)?,
                "kind" => {
                    let k = match value {
                        "homogeneous" => ProblemKind::Homogeneous,
                        "forced" => ProblemKind::Forced,
                        other => {
                            return Err(parse_err(
                                line_no,
                                key,
                                format!("unknown kind {other:?} (expected homogeneous or forced)"),
                            ))
                        }
                    };
                    set_once(&mut kind, k, line_no, key)?
                }
                _ => return Err(parse_err(line_no, key, "unknown top-level key")),
            },
            Some(bond) => {
                let v = parse_number(line_no, key, value)?;
                match key {
                    "length" => set_once(&mut bond.length, v, line_no, key)?,
                    "beta" => set_once(&mut bond.beta, v, line_no, key)?,
                    "m" => set_once(&mut bond.m, (v, line_no), line_no, key)?,
                    "lambda" => set_once(&mut bond.lam, v, line_no, key)?,
                    "b" => set_once(&mut bond.b, v, line_no, key)?,
                    "nu" => set_once(&mut bond.nu, v, line_no, key)?,
                    _ => return Err(parse_err(line_no, key, "unknown bond key")),
                }
            }
        }
    }

    let alpha = alpha.ok_or_else(|| parse_err(1, "alpha", "missing required key"))?;
    let kind = kind.unwrap_or(ProblemKind::Homogeneous);
    if drafts.is_empty() {
        return Err(parse_err(1, "[bond]", "no bond sections"));
    }

    let mut notices = Vec::new();
    let mut bonds = Vec::with_capacity(drafts.len());
    for (i, d) in drafts.into_iter().enumerate() {
        let line = d.header_line;
        let missing =
            |field: &str| parse_err(line, field, format!("bond {} lacks required key", i + 1));
        let (m, m_line) = d.m.ok_or_else(|| missing("m"))?;
        if (m - 1.0).abs() < LINEAR_POWER_TOLERANCE {
            return Err(parse_err(
                m_line,
                "m",
                "m ≠ 1 required (linear case excluded)",
            ));
        }
        let mut bond = BondSpec {
            length: d.length.ok_or_else(|| missing("length"))?,
            beta: d.beta.ok_or_else(|| missing("beta"))?,
            m,
            lam: d.lam.ok_or_else(|| missing("lambda"))?,
            forcing_b: d.b,
            forcing_nu: d.nu,
        };
        if kind == ProblemKind::Forced {
            if bond.forcing_b.is_none() {
                return Err(missing("b"));
            }
            if bond.forcing_nu.is_none() {
                let nu = gamma_star(&bond, alpha)?;
                bond.forcing_nu = Some(nu);
                notices.push(format!(
                    "bond {}: nu not given, set to (beta + m*alpha)/(1 - m) = {nu}",
                    i + 1
                ));
            }
        }
        bonds.push(bond);
    }
    Ok(ParsedProblem {
        problem: StarGraphProblem::new(alpha, kind, bonds),
        notices,
    })
}

/// Write a problem in the file schema; [`parse_problem_file`] reads it back unchanged.
pub fn emit_problem(problem: &StarGraphProblem) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "alpha = {}", problem.alpha);
    let _ = writeln!(out, "kind = {}", problem.kind);
    for bond in &problem.bonds {
        let _ = writeln!(out, "\n[bond]");
        let _ = writeln!(out, "length = {}", bond.length);
        let _ = writeln!(out, "beta = {}", bond.beta);
        let _ = writeln!(out, "m = {}", bond.m);
        let _ = writeln!(out, "lambda = {}", bond.lam);
        if let Some(b) = bond.forcing_b {
            let _ = writeln!(out, "b = {b}");
        }
        if let Some(nu) = bond.forcing_nu {
            let _ = writeln!(out, "nu = {nu}");
        }
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    Validate,
    Solve,
    Verify,
    Sweep,
    DemoSymmetric,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, ValueEnum)]
pub enum OutputFormat {
    #[default]
    Json,
    Csv,
}

/// Which parameter a sweep varies: `alpha`, or a bond field, optionally for one bond only.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    pub key: String,
    /// 1-based; `None` applies to every bond.
    pub bond: Option<usize>,
    pub lo: f64,
    pub hi: f64,
    pub count: usize,
}

const SWEEP_FIELDS: [&str; 7] = ["alpha", "length", "beta", "m", "lambda", "b", "nu"];

impl SweepSpec {
    /// Parse `key[.bond]:lo:hi:count`.
    pub fn parse(s: &str) -> std::result::Result<Self, String> {
        let parts: Vec<&str> = s.split(':').collect();
        let [key, lo, hi, count] = parts[..] else {
            return Err(format!("sweep spec {s:?} is not key:lo:hi:count"));
        };
        let (field, bond) = match key.split_once('.') {
            Some((f, j)) => {
                let j: usize = j
                    .parse()
                    .map_err(|_| format!("bad bond index in {key:?}"))?;
                if j == 0 {
                    return Err("bond indices start at 1".into());
                }
                (f, Some(j))
            }
            None => (key, None),
        };
        if !SWEEP_FIELDS.contains(&field) {
            return Err(format!(
                "unknown sweep key {field:?}; expected one of {}",
                SWEEP_FIELDS.join(", ")
            ));
        }
        if field == "alpha" && bond.is_some() {
            return Err("alpha is global and takes no bond index".into());
        }
        let num = |v: &str| v.parse::<f64>().map_err(|_| format!("bad number {v:?}"));
        let count: usize = count.parse().map_err(|_| format!("bad count {count:?}"))?;
        if count == 0 {
            return Err("sweep count must be positive".into());
        }
        Ok(Self {
            key: field.to_string(),
            bond,
            lo: num(lo)?,
            hi: num(hi)?,
            count,
        })
    }

    pub fn values(&self) -> Vec<f64> {
        if self.count == 1 {
            return vec![self.lo];
        }
        (0..self.count)
            .map(|i| self.lo + (self.hi - self.lo) * i as f64 / (self.count - 1) as f64)
            .collect()
    }

    /// Copy of `problem` with the swept parameter set to `value`. Forced
    /// problems get their forcing exponents recomputed when alpha, beta or m change.
    pub fn apply(
        &self,
        problem: &StarGraphProblem,
        value: f64,
    ) -> std::result::Result<StarGraphProblem, String> {
        let mut p = problem.clone();
        if let Some(j) = self.bond {
            if j > p.bonds.len() {
                return Err(format!("bond {j} does not exist ({} bonds)", p.bonds.len()));
            }
        }
        if self.key == "alpha" {
            p.alpha = value;
        }
        let alpha = p.alpha;
        for (i, bond) in p.bonds.iter_mut().enumerate() {
            let selected = self.bond.is_none_or(|j| j == i + 1);
            if selected {
                match self.key.as_str() {
                    "length" => bond.length = value,
                    "beta" => bond.beta = value,
                    "m" => bond.m = value,
                    "lambda" => bond.lam = value,
                    "b" => bond.forcing_b = Some(value),
                    "nu" => bond.forcing_nu = Some(value),
                    _ => {}
                }
            }
            let reshapes = matches!(self.key.as_str(), "alpha" | "beta" | "m");
            if p.kind == ProblemKind::Forced && reshapes && (selected || self.key == "alpha") {
                bond.forcing_nu = gamma_star(bond, alpha).ok();
            }
        }
        Ok(p)
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "fracstar",
    version,
    about = "Exact power-law solutions of nonlinear fractional equations on star graphs"
)]
pub struct Args {
    /// What to run.
    #[arg(value_enum)]
    pub command: Command,
    /// Problem file (not needed for demo-symmetric).
    #[arg(long)]
    pub problem: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = OutputFormat::Json)]
    pub format: OutputFormat,
    /// Grünwald–Letnikov steps per check point and quadrature mesh size.
    #[arg(long)]
    pub grid_n: Option<usize>,
    /// Mesh grading exponent (>= 1).
    #[arg(long)]
    pub grid_grading: Option<f64>,
    /// Parameter sweep as key[.bond]:lo:hi:count.
    #[arg(long, value_parser = SweepSpec::parse)]
    pub sweep: Option<SweepSpec>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub command: Command,
    pub problem_path: Option<PathBuf>,
    pub output_format: OutputFormat,
    pub grid: Option<GridSpec>,
    pub sweep: Option<SweepSpec>,
}

impl RunConfig {
    pub fn from_args(args: Args) -> std::result::Result<Self, String> {
        let grid = match (args.grid_n, args.grid_grading) {
            (None, None) => None,
            (n, g) => {
                let d = GridSpec::default();
                Some(
                    GridSpec::new(n.unwrap_or(d.n), g.unwrap_or(d.grading))
                        .map_err(|e| e.to_string())?,
                )
            }
        };
        let config = Self {
            command: args.command,
            problem_path: args.problem,
            output_format: args.format,
            grid,
            sweep: args.sweep,
        };
        config.check()?;
        Ok(config)
    }

    pub fn check(&self) -> std::result::Result<(), String> {
        if self.command != Command::DemoSymmetric && self.problem_path.is_none() {
            return Err("--problem is required for this command".into());
        }
        match (self.command == Command::Sweep, self.sweep.is_some()) {
            (true, false) => Err("sweep needs --sweep key:lo:hi:count".into()),
            (false, true) => Err("--sweep is only valid with the sweep command".into()),
            _ => Ok(()),
        }
    }

    fn grid(&self) -> GridSpec {
        self.grid.unwrap_or_default()
    }
}

/// Exit code plus the two output streams.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Outcome {
    pub code: i32,
    pub stdout: String,
    pub stderr: String,
}

impl Outcome {
    fn fail(code: i32, stderr: String) -> Self {
        Self {
            code,
            stdout: String::new(),
            stderr,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
struct BondRow {
    bond_index: usize,
    amplitude: f64,
    exponent: f64,
    lambda: f64,
    c_value: f64,
    k_value: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    max_rel_residual: Option<f64>,
}

/// Shortest round-trip form; scientific outside `[1e-4, 1e16)`.
fn csv_number(v: f64) -> String {
    let a = v.abs();
    if a != 0.0 && a.is_finite() && !(1e-4..1e16).contains(&a) {
        format!("{v:e}")
    } else {
        format!("{v}")
    }
}

fn write_csv(rows: &[Vec<String>]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        // writing into a Vec cannot fail
        w.write_record(r).expect("in-memory csv");
    }
    String::from_utf8(w.into_inner().expect("in-memory csv")).expect("csv is utf-8")
}

fn bond_table_csv(rows: &[BondRow]) -> Vec<Vec<String>> {
    let mut out = vec![CSV_COLUMNS.iter().map(|s| s.to_string()).collect()];
    out.extend(rows.iter().map(|r| {
        vec![
            r.bond_index.to_string(),
            csv_number(r.amplitude),
            csv_number(r.exponent),
            csv_number(r.lambda),
            csv_number(r.c_value),
            csv_number(r.k_value),
            r.max_rel_residual.map(csv_number).unwrap_or_default(),
        ]
    }));
    out
}

fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("serializable output");
    s.push('\n');
    s
}

fn bond_rows(
    problem: &StarGraphProblem,
    solutions: &[PowerSolution],
    residuals: Option<&[f64]>,
) -> Result<Vec<BondRow>> {
    let c = continuity_values(problem, solutions)?;
    let k = kirchhoff_terms(problem, solutions)?;
    Ok(solutions
        .iter()
        .enumerate()
        .map(|(i, s)| BondRow {
            bond_index: s.bond_index,
            amplitude: s.amplitude,
            exponent: s.exponent,
            lambda: problem.bonds[i].lam,
            c_value: c[i],
            k_value: k[i],
            max_rel_residual: residuals.map(|r| r[i]),
        })
        .collect())
}

fn load_problem(
    config: &RunConfig,
    stderr: &mut String,
) -> std::result::Result<StarGraphProblem, Outcome> {
    let path = config.problem_path.as_ref().expect("checked by RunConfig");
    let text = std::fs::read_to_string(path).map_err(|e| {
        Outcome::fail(
            EXIT_INVALID,
            format!("cannot read {}: {e}\n", path.display()),
        )
    })?;
    let parsed = parse_problem_file(&text).map_err(|e| {
        Outcome::fail(
            EXIT_INVALID,
            format!("ParseError: {}: {e}\n", path.display()),
        )
    })?;
    for n in &parsed.notices {
        let _ = writeln!(stderr, "notice: {n}");
    }
    Ok(parsed.problem)
}

/// Print violations to stderr; true when any is an error.
fn report_violations(violations: &[Violation], stderr: &mut String) -> bool {
    for v in violations {
        let _ = writeln!(stderr, "{v}");
    }
    violations.iter().any(|v| v.severity == Severity::Error)
}

fn error_name(e: &Error) -> &'static str {
    match e {
        Error::Pole { .. } => "PoleError",
        Error::Domain(_) => "DomainError",
        Error::Branch { .. } => "BranchError",
        Error::NoRoot { .. } => "NoRootError",
        Error::Compatibility(_) => "CompatibilityError",
        Error::Degenerate(_) => "DegenerateError",
        Error::Parse { .. } => "ParseError",
    }
}

fn solver_failure(stderr: String, e: &Error) -> Outcome {
    Outcome::fail(EXIT_SOLVER, format!("{stderr}{}: {e}\n", error_name(e)))
}

/// Run one command.
pub fn execute(config: &RunConfig) -> Outcome {
    if let Err(e) = config.check() {
        return Outcome::fail(EXIT_INVALID, format!("{e}\n"));
    }
    let mut stderr = String::new();
    if config.command == Command::DemoSymmetric {
        return demo_symmetric(config, stderr);
    }
    let problem = match load_problem(config, &mut stderr) {
        Ok(p) => p,
        Err(mut o) => {
            o.stderr = stderr + &o.stderr;
            return o;
        }
    };
    match config.command {
        Command::Validate => run_validate(config, &problem, stderr),
        Command::Solve => run_solve(config, &problem, stderr),
        Command::Verify => run_verify(config, &problem, stderr),
        Command::Sweep => run_sweep(config, &problem, stderr),
        Command::DemoSymmetric => unreachable!("handled above"),
    }
}

fn run_validate(config: &RunConfig, problem: &StarGraphProblem, mut stderr: String) -> Outcome {
    let violations = validate(problem);
    let failed = report_violations(&violations, &mut stderr);
    let stdout = match config.output_format {
        OutputFormat::Json => {
            #[derive(Serialize)]
            struct Doc<'a> {
                command: &'static str,
                valid: bool,
                violations: &'a [Violation],
            }
            to_json(&Doc {
                command: "validate",
                valid: !failed,
                violations: &violations,
            })
        }
        OutputFormat::Csv => {
            let mut rows = vec![vec![
                "severity".to_string(),
                "bond_index".into(),
                "constraint".into(),
                "value".into(),
                "message".into(),
            ]];
            rows.extend(violations.iter().map(|v| {
                vec![
                    serde_json::to_value(v.severity)
                        .unwrap()
                        .as_str()
                        .unwrap()
                        .to_string(),
                    v.bond_index.map(|j| j.to_string()).unwrap_or_default(),
                    serde_json::to_value(v.constraint)
                        .unwrap()
                        .as_str()
                        .unwrap()
                        .to_string(),
                    csv_number(v.value),
                    v.message.clone(),
                ]
            }));
            write_csv(&rows)
        }
    };
    Outcome {
        code: if failed { EXIT_INVALID } else { EXIT_OK },
        stdout,
        stderr,
    }
}

#[derive(Serialize)]
struct SolveDoc {
    command: &'static str,
    kind: ProblemKind,
    alpha: f64,
    status: &'static str,
    bonds: Vec<BondRow>,
    vertex_residuals: Option<VertexResiduals>,
    #[serde(skip_serializing_if = "Option::is_none")]
    flux_coefficients: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    failures: Vec<String>,
}

fn run_solve(config: &RunConfig, problem: &StarGraphProblem, mut stderr: String) -> Outcome {
    if report_violations(&validate(problem), &mut stderr) {
        return Outcome::fail(EXIT_INVALID, stderr);
    }
    let lambda_1 = problem.bonds[0].lam;
    let doc = match problem.kind {
        ProblemKind::Homogeneous => {
            let assignment = match solve_lambdas_homogeneous(problem, lambda_1) {
                Ok(a) => a,
                Err(e) => return solver_failure(stderr, &e),
            };
            let solved = problem.with_lambdas(&assignment.lambdas);
            let built = build_solutions(&solved, AmplitudeChoice::default()).and_then(|s| {
                let r = residuals_from(&solved, &s)?;
                Ok((bond_rows(&solved, &s, None)?, r))
            });
            let (rows, residuals) = match built {
                Ok(v) => v,
                Err(e) => return solver_failure(stderr, &e),
            };
            let ok = residuals.satisfied(SOLVED_TOLERANCE);
            SolveDoc {
                command: "solve",
                kind: problem.kind,
                alpha: problem.alpha,
                status: if ok { "solved" } else { "incompatible" },
                bonds: rows,
                vertex_residuals: Some(residuals),
                flux_coefficients: Some(assignment.flux_coefficients),
                failures: Vec::new(),
            }
        }
        ProblemKind::Forced => {
            let guesses: Vec<f64> = problem.bonds[1..].iter().map(|b| b.lam).collect();
            let report = match solve_vertex_forced(problem, lambda_1, &guesses) {
                Ok(r) => r,
                Err(e) => return solver_failure(stderr, &e),
            };
            let failures: Vec<String> = report
                .failures
                .iter()
                .map(|f| {
                    format!(
                        "bond {}: {}: {}",
                        f.bond_index,
                        error_name(&f.error),
                        f.error
                    )
                })
                .collect();
            let solved = problem.with_lambdas(&report.lambdas);
            let rows = if report.solutions.is_empty() {
                Vec::new()
            } else {
                match bond_rows(&solved, &report.solutions, None) {
                    Ok(r) => r,
                    Err(e) => return solver_failure(stderr, &e),
                }
            };
            SolveDoc {
                command: "solve",
                kind: problem.kind,
                alpha: problem.alpha,
                status: match report.status {
                    ForcedStatus::Solved => "solved",
                    ForcedStatus::Incompatible => "incompatible",
                    ForcedStatus::Failed => "failed",
                },
                bonds: rows,
                vertex_residuals: report.residuals,
                flux_coefficients: None,
                failures,
            }
        }
    };
    for f in &doc.failures {
        let _ = writeln!(stderr, "{f}");
    }
    let code = if doc.status == "solved" {
        EXIT_OK
    } else {
        if let Some(r) = &doc.vertex_residuals {
            let _ = writeln!(
                stderr,
                "vertex conditions not met: continuity {:e}, Kirchhoff {:e} (relative)",
                r.max_continuity_relative(),
                r.kirchhoff_relative()
            );
        }
        EXIT_SOLVER
    };
    let stdout = match config.output_format {
        OutputFormat::Json => to_json(&doc),
        OutputFormat::Csv => write_csv(&bond_table_csv(&doc.bonds)),
    };
    Outcome {
        code,
        stdout,
        stderr,
    }
}

#[derive(Serialize)]
struct BondVerification {
    report: ResidualReport,
    free_end_integral: Vec<(f64, f64)>,
    free_end_decays: bool,
    samples: Vec<(f64, f64)>,
}

#[derive(Serialize)]
struct VerifyDoc {
    command: &'static str,
    grid: GridSpec,
    passed: bool,
    bonds: Vec<BondRow>,
    vertex_residuals: VertexResiduals,
    verification: Vec<BondVerification>,
}

fn verify_bond(
    sol: &PowerSolution,
    bond: &BondSpec,
    alpha: f64,
    grid: &GridSpec,
) -> Result<BondVerification> {
    let report = ode_residual(sol, bond, alpha, grid)?;
    let decay = free_end_integral_decay(sol, bond.length, alpha, grid)?;
    let decays = decay.windows(2).all(|w| w[1].1 <= w[0].1);
    let samples = (0..SAMPLE_POINTS)
        .map(|i| {
            let x = bond.length * i as f64 / (SAMPLE_POINTS - 1) as f64;
            (x, sol.eval(x))
        })
        .collect();
    Ok(BondVerification {
        report,
        free_end_integral: decay,
        free_end_decays: decays,
        samples,
    })
}

fn run_verify(config: &RunConfig, problem: &StarGraphProblem, mut stderr: String) -> Outcome {
    if report_violations(&validate(problem), &mut stderr) {
        return Outcome::fail(EXIT_INVALID, stderr);
    }
    let grid = config.grid();
    let solutions = match build_solutions(problem, AmplitudeChoice::default()) {
        Ok(s) => s,
        Err(e) => return solver_failure(stderr, &e),
    };
    let vertex = match residuals_from(problem, &solutions) {
        Ok(r) => r,
        Err(e) => return solver_failure(stderr, &e),
    };
    // per-bond checks are independent; results are collected in bond order
    let checks: Vec<Result<BondVerification>> = std::thread::scope(|scope| {
        let handles: Vec<_> = solutions
            .iter()
            .zip(&problem.bonds)
            .map(|(sol, bond)| scope.spawn(move || verify_bond(sol, bond, problem.alpha, &grid)))
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("verification thread panicked"))
            .collect()
    });
    let mut verification = Vec::with_capacity(checks.len());
    for c in checks {
        match c {
            Ok(v) => verification.push(v),
            Err(e) => {
                return Outcome::fail(EXIT_VERIFY, format!("{stderr}{}: {e}\n", error_name(&e)))
            }
        }
    }
    let residuals: Vec<f64> = verification
        .iter()
        .map(|v| v.report.max_rel_residual)
        .collect();
    let rows = match bond_rows(problem, &solutions, Some(&residuals)) {
        Ok(r) => r,
        Err(e) => return solver_failure(stderr, &e),
    };

    let mut passed = true;
    for v in &verification {
        let r = &v.report;
        if !r.certified() {
            passed = false;
            let _ = writeln!(
                stderr,
                "bond {}: max relative ODE residual {:e} exceeds threshold",
                r.bond_index, r.max_rel_residual
            );
        }
        if !r.left_end.both_vanish || !v.free_end_decays {
            passed = false;
            let _ = writeln!(
                stderr,
                "bond {}: free-end conditions fail (exponents {}, {})",
                r.bond_index,
                r.left_end.integral_limit_exponent,
                r.left_end.derivative_limit_exponent
            );
        }
    }
    if !vertex.satisfied(SOLVED_TOLERANCE) {
        passed = false;
        let _ = writeln!(
            stderr,
            "vertex conditions fail: continuity {:e}, Kirchhoff {:e} (relative)",
            vertex.max_continuity_relative(),
            vertex.kirchhoff_relative()
        );
    }

    let stdout = match config.output_format {
        OutputFormat::Json => to_json(&VerifyDoc {
            command: "verify",
            grid,
            passed,
            bonds: rows,
            vertex_residuals: vertex,
            verification,
        }),
        OutputFormat::Csv => {
            let mut out = write_csv(&bond_table_csv(&rows));
            out.push('\n');
            let mut table = vec![vec!["bond_index".to_string(), "x".into(), "y".into()]];
            for (sol, v) in solutions.iter().zip(&verification) {
                table.extend(v.samples.iter().map(|(x, y)| {
                    vec![sol.bond_index.to_string(), csv_number(*x), csv_number(*y)]
                }));
            }
            out.push_str(&write_csv(&table));
            out
        }
    };
    Outcome {
        code: if passed { EXIT_OK } else { EXIT_VERIFY },
        stdout,
        stderr,
    }
}

#[derive(Serialize)]
struct SweepRow {
    value: f64,
    status: String,
    amplitudes: Vec<f64>,
    continuity_gaps: Vec<f64>,
    kirchhoff_gap: Option<f64>,
    max_continuity_relative: Option<f64>,
    kirchhoff_relative: Option<f64>,
}

fn sweep_row(spec: &SweepSpec, problem: &StarGraphProblem, value: f64) -> SweepRow {
    let mut row = SweepRow {
        value,
        status: String::new(),
        amplitudes: Vec::new(),
        continuity_gaps: Vec::new(),
        kirchhoff_gap: None,
        max_continuity_relative: None,
        kirchhoff_relative: None,
    };
    let p = match spec.apply(problem, value) {
        Ok(p) => p,
        Err(e) => {
            row.status = format!("invalid: {e}");
            return row;
        }
    };
    let errors: Vec<String> = validate(&p)
        .into_iter()
        .filter(|v| v.severity == Severity::Error)
        .map(|v| v.to_string())
        .collect();
    if !errors.is_empty() {
        row.status = format!("invalid: {}", errors.join("; "));
        return row;
    }
    let result = build_solutions(&p, AmplitudeChoice::default())
        .and_then(|s| Ok((residuals_from(&p, &s)?, s)));
    match result {
        Ok((r, s)) => {
            row.status = if r.satisfied(SOLVED_TOLERANCE) {
                "satisfied".into()
            } else {
                "unsatisfied".into()
            };
            row.amplitudes = s.iter().map(|s| s.amplitude).collect();
            row.max_continuity_relative = Some(r.max_continuity_relative());
            row.kirchhoff_relative = Some(r.kirchhoff_relative());
            row.kirchhoff_gap = Some(r.kirchhoff_gap);
            row.continuity_gaps = r.continuity_gaps;
        }
        Err(e) => row.status = format!("error: {}: {e}", error_name(&e)),
    }
    row
}

fn run_sweep(config: &RunConfig, problem: &StarGraphProblem, stderr: String) -> Outcome {
    let spec = config.sweep.as_ref().expect("checked by RunConfig");
    let rows: Vec<SweepRow> = spec
        .values()
        .into_iter()
        .map(|v| sweep_row(spec, problem, v))
        .collect();
    let key = match spec.bond {
        Some(j) => format!("{}.{j}", spec.key),
        None => spec.key.clone(),
    };
    let stdout = match config.output_format {
        OutputFormat::Json => {
            #[derive(Serialize)]
            struct Doc<'a> {
                command: &'static str,
                key: String,
                rows: &'a [SweepRow],
            }
            to_json(&Doc {
                command: "sweep",
                key,
                rows: &rows,
            })
        }
        OutputFormat::Csv => {
            let n = problem.bonds.len();
            let mut header = vec![
                key,
                "status".into(),
                "max_continuity_relative".into(),
                "kirchhoff_relative".into(),
            ];
            header.extend((1..=n).map(|j| format!("A_{j}")));
            let mut table = vec![header];
            for r in &rows {
                let mut rec = vec![
                    csv_number(r.value),
                    r.status.clone(),
                    r.max_continuity_relative
                        .map(csv_number)
                        .unwrap_or_default(),
                    r.kirchhoff_relative.map(csv_number).unwrap_or_default(),
                ];
                rec.extend((0..n).map(|j| {
                    r.amplitudes
                        .get(j)
                        .map(|a| csv_number(*a))
                        .unwrap_or_default()
                }));
                table.push(rec);
            }
            write_csv(&table)
        }
    };
    Outcome {
        code: EXIT_OK,
        stdout,
        stderr,
    }
}

/// Parameters of the symmetric demonstration: three bonds with `m = 1/3`,
/// `β = 1`, `L = 1`, `α = 1.5`, and `λ_1 = 3`.
pub fn demo_problem() -> StarGraphProblem {
    StarGraphProblem::symmetric(1.5, 3, BondSpec::homogeneous(1.0, 1.0, 1.0 / 3.0, 3.0))
}

/// Forced counterpart of [`demo_problem`]: `b_1 = 0.5`, and bonds 2 and 3
/// carry forcing matched to `λ = 1.5` so that the split `λ_1 = λ_2 + λ_3` is consistent.
pub fn demo_forced_problem() -> Result<StarGraphProblem> {
    let (alpha, m, lam_1, lam_out, b_1) = (1.5, 1.0 / 3.0, 3.0, 1.5, 0.5);
    let b_out = matched_forcing(b_1, lam_1, lam_out, m)?;
    Ok(StarGraphProblem::forced(
        alpha,
        vec![
            BondSpec::forced(1.0, 1.0, m, lam_1, b_1, alpha)?,
            BondSpec::forced(1.0, 1.0, m, 1.0, b_out, alpha)?,
            BondSpec::forced(1.0, 1.0, m, 1.0, b_out, alpha)?,
        ],
    ))
}

#[derive(Serialize)]
struct DemoCheck {
    name: String,
    passed: bool,
    detail: String,
}

fn demo_checks(grid: &GridSpec) -> Result<Vec<DemoCheck>> {
    let mut checks = Vec::new();

    let problem = demo_problem();
    let lam_1 = problem.bonds[0].lam;
    let a = solve_lambdas_homogeneous(&problem, lam_1)?;
    let solved = problem.with_lambdas(&a.lambdas);
    let sols = build_solutions(&solved, AmplitudeChoice::default())?;
    let r = residuals_from(&solved, &sols)?;
    let split = (a.lambdas[1] + a.lambdas[2] - lam_1).abs() / lam_1;
    checks.push(DemoCheck {
        name: "lambda1 = lambda2 + lambda3".into(),
        passed: split <= CLOSED_FORM_TOLERANCE && r.satisfied(CLOSED_FORM_TOLERANCE),
        detail: format!(
            "lambda = ({}, {}, {}), relative split error {split:e}, vertex gaps {:e}/{:e}",
            a.lambdas[0],
            a.lambdas[1],
            a.lambdas[2],
            r.max_continuity_relative(),
            r.kirchhoff_relative()
        ),
    });
    let worst = sols
        .iter()
        .zip(&solved.bonds)
        .map(|(s, b)| ode_residual(s, b, solved.alpha, grid).map(|r| r.max_rel_residual))
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .fold(0.0_f64, f64::max);
    checks.push(DemoCheck {
        name: "homogeneous ODE residuals".into(),
        passed: worst <= crate::verify::RESIDUAL_THRESHOLD,
        detail: format!("max relative residual {worst:e}"),
    });

    let forced = demo_forced_problem()?;
    let rep = solve_vertex_forced(&forced, forced.bonds[0].lam, &[1.0, 1.0])?;
    let split = (rep.lambdas[1] + rep.lambdas[2] - rep.lambdas[0]).abs() / rep.lambdas[0];
    checks.push(DemoCheck {
        name: "forced: lambda1 = lambda2 + lambda3".into(),
        passed: rep.status == ForcedStatus::Solved && split <= SOLVED_TOLERANCE,
        detail: format!(
            "lambda = ({}, {}, {}), status {:?}, relative split error {split:e}",
            rep.lambdas[0], rep.lambdas[1], rep.lambdas[2], rep.status
        ),
    });
    Ok(checks)
}

fn demo_symmetric(config: &RunConfig, mut stderr: String) -> Outcome {
    let checks = match demo_checks(&config.grid()) {
        Ok(c) => c,
        Err(e) => return solver_failure(stderr, &e),
    };
    let report: Vec<String> = checks
        .iter()
        .map(|c| format!("{}: {}", c.name, if c.passed { "PASS" } else { "FAIL" }))
        .collect();
    for c in &checks {
        let _ = writeln!(stderr, "{}: {}", c.name, c.detail);
    }
    let passed = checks.iter().all(|c| c.passed);
    let stdout = match config.output_format {
        OutputFormat::Json => {
            #[derive(Serialize)]
            struct Doc<'a> {
                command: &'static str,
                passed: bool,
                report: &'a [String],
                checks: &'a [DemoCheck],
            }
            to_json(&Doc {
                command: "demo-symmetric",
                passed,
                report: &report,
                checks: &checks,
            })
        }
        OutputFormat::Csv => {
            let mut rows = vec![vec!["check".to_string(), "result".into(), "detail".into()]];
            rows.extend(checks.iter().map(|c| {
                vec![
                    c.name.clone(),
                    if c.passed { "PASS" } else { "FAIL" }.to_string(),
                    c.detail.clone(),
                ]
            }));
            write_csv(&rows)
        }
    };
    Outcome {
        code: if passed { EXIT_OK } else { EXIT_VERIFY },
        stdout,
        stderr,
    }
}
