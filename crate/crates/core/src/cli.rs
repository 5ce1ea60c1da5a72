//! Command-line driver: `solve`, `convergence`, `oracle`, `validate`, `schema`.
//!
//! Exit codes: 0 certified optimal, 2 solved but uncertified, 1 failure,
//! 3 infeasible oracle grid.

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use nalgebra::DVector;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::cheb::Interval;
use crate::error::{Error, Result};
use crate::extract::{self, Certificate, Impulse, ImpulsiveSolution};
use crate::ltv::{self, LtvProblem, MatrixTimeFunction, MomentData};
use crate::moment::{self, GridLpResult};
use crate::ode::OdeOptions;
use crate::pipeline::{self, PipelineConfig, PipelineRun};
use crate::problems::{self, Overrides};
use crate::sdp::SolveStatus;

pub const EXIT_CERTIFIED: i32 = 0;
pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_UNCERTIFIED: i32 = 2;
pub const EXIT_INFEASIBLE: i32 = 3;

/// Samples in the trajectory table.
pub const TRAJECTORY_SAMPLES: usize = 1000;
/// Starting point count for `--auto-degree`.
pub const AUTO_START: usize = 16;
/// Agreement required when re-validating a stored certificate.
pub const REVALIDATE_TOL: f64 = 1e-9;

#[derive(Debug, Parser)]
#[command(name = "impulse", version, about = "Minimum-fuel impulsive control of LTV systems")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Solve a problem and write the result document and trajectory table.
    Solve(SolveArgs),
    /// Cost and kernel error over a list of degrees.
    Convergence(ConvergenceArgs),
    /// Fixed-grid LP restriction (upper bound on the optimal cost).
    Oracle(OracleArgs),
    /// Recompute the certificate of a stored result document.
    Validate(ValidateArgs),
    /// Print the problem-file JSON schema.
    Schema,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Toggle {
    On,
    Off,
}

impl Toggle {
    pub fn on(self) -> bool {
        self == Toggle::On
    }
}

#[derive(Debug, Args)]
pub struct ProblemArgs {
    /// Builtin name or path to a problem file.
    pub problem: String,
    /// Builtin parameter override, `key=value` with a JSON value.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    pub set: Vec<String>,
}

#[derive(Debug, Args)]
pub struct SolveArgs {
    #[command(flatten)]
    pub problem: ProblemArgs,
    /// Chebyshev points per segment.
    #[arg(long)]
    pub degree: Option<usize>,
    /// Double the point count until e_d < 1e-8 (the default without --degree).
    #[arg(long, conflicts_with = "degree")]
    pub auto_degree: bool,
    #[arg(long, value_enum, default_value = "on")]
    pub slack: Toggle,
    /// Relative duality gap target for the SDP solver.
    #[arg(long, value_name = "GAP")]
    pub tol: Option<f64>,
    /// Output directory for result.json and trajectory.csv.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ConvergenceArgs {
    #[command(flatten)]
    pub problem: ProblemArgs,
    /// Comma-separated point counts.
    #[arg(long, value_delimiter = ',', required = true)]
    pub degrees: Vec<usize>,
    #[arg(long, value_enum, default_value = "on")]
    pub slack: Toggle,
    #[arg(long, value_name = "GAP")]
    pub tol: Option<f64>,
    /// Output directory for convergence.csv.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct OracleArgs {
    #[command(flatten)]
    pub problem: ProblemArgs,
    /// Number of evenly spaced impulse times.
    #[arg(short = 'N', long = "grid")]
    pub grid: usize,
    /// Kernel points per segment (auto when omitted).
    #[arg(long)]
    pub degree: Option<usize>,
    /// Stored moment result to compare against.
    #[arg(long)]
    pub against: Option<PathBuf>,
    #[arg(long, value_name = "GAP")]
    pub tol: Option<f64>,
    /// Output directory for oracle.json.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ValidateArgs {
    pub result: PathBuf,
}

/// Per-segment matrix data, or a reference to a builtin's matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum MatrixSpec {
    /// `segments[s][r * cols + c]` is the coefficient list of entry `(r, c)`.
    Segments(Vec<Vec<Vec<f64>>>),
    Builtin {
        builtin: String,
        #[serde(default)]
        overrides: Overrides,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Basis {
    /// Chebyshev coefficients on each segment's own interval.
    Chebyshev,
    /// Coefficients of `1, t, t², …` in absolute time.
    Monomial,
}

/// Explicit problem description.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemFile {
    #[serde(default)]
    pub name: Option<String>,
    pub n: usize,
    pub m: usize,
    pub t_i: f64,
    pub t_f: f64,
    pub x_i: Vec<f64>,
    pub x_f: Vec<f64>,
    #[serde(default)]
    pub breakpoints: Vec<f64>,
    #[serde(rename = "A")]
    pub a: MatrixSpec,
    #[serde(rename = "B")]
    pub b: MatrixSpec,
    pub basis: Basis,
}

/// Where a problem came from; stored in result documents for re-validation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum ProblemSource {
    Builtin {
        name: String,
        #[serde(default)]
        overrides: Overrides,
    },
    File {
        problem: ProblemFile,
    },
}

/// Whole-problem builtin reference accepted in place of a [`ProblemFile`].
#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct BuiltinRef {
    builtin: String,
    #[serde(default)]
    overrides: Overrides,
}

impl ProblemSource {
    pub fn build(&self) -> Result<LtvProblem> {
        match self {
            ProblemSource::Builtin { name, overrides } => problems::builtin(name, overrides),
            ProblemSource::File { problem } => problem.build(),
        }
    }
}

impl ProblemFile {
    pub fn build(&self) -> Result<LtvProblem> {
        if self.x_i.len() != self.n || self.x_f.len() != self.n {
            return Err(Error::Schema(format!(
                "x_i and x_f must have n = {} entries",
                self.n
            )));
        }
        let mut cuts = vec![self.t_i];
        cuts.extend(&self.breakpoints);
        cuts.push(self.t_f);
        let domains = cuts
            .windows(2)
            .map(|w| Interval::new(w[0], w[1]))
            .collect::<Result<Vec<_>>>()
            .map_err(|e| Error::Schema(format!("breakpoints must increase strictly inside (t_i, t_f): {e}")))?;
        let a = self.matrix(&self.a, "A", self.n, self.n, &domains)?;
        let b = self.matrix(&self.b, "B", self.n, self.m, &domains)?;
        let p = LtvProblem {
            name: self.name.clone().unwrap_or_else(|| "file".into()),
            n: self.n,
            m: self.m,
            a,
            b,
            t_i: self.t_i,
            t_f: self.t_f,
            x_i: DVector::from_vec(self.x_i.clone()),
            x_f: DVector::from_vec(self.x_f.clone()),
            breakpoints: self.breakpoints.clone(),
            reference_cost: None,
        };
        p.validate()?;
        Ok(p)
    }

    fn matrix(
        &self,
        spec: &MatrixSpec,
        label: &str,
        rows: usize,
        cols: usize,
        domains: &[Interval],
    ) -> Result<MatrixTimeFunction> {
        match spec {
            MatrixSpec::Segments(segs) => {
                if segs.len() != domains.len() {
                    return Err(Error::Schema(format!(
                        "{label} covers {} segments, the horizon has {}",
                        segs.len(),
                        domains.len()
                    )));
                }
                match self.basis {
                    Basis::Chebyshev => MatrixTimeFunction::from_chebyshev(rows, cols, domains, segs),
                    Basis::Monomial => MatrixTimeFunction::from_monomials(rows, cols, domains, segs),
                }
                .map_err(|e| Error::Schema(format!("{label}: {e}")))
            }
            MatrixSpec::Builtin { builtin, overrides } => {
                let p = problems::builtin(builtin, overrides)?;
                let m = if label == "A" { p.a } else { p.b };
                if m.shape() != (rows, cols) {
                    return Err(Error::Schema(format!(
                        "{label} from `{builtin}` is {:?}, expected {:?}",
                        m.shape(),
                        (rows, cols)
                    )));
                }
                Ok(m)
            }
        }
    }
}

/// Parses `key=value` overrides; values are JSON, falling back to a string.
pub fn parse_overrides(items: &[String]) -> Result<Overrides> {
    let mut out = Overrides::new();
    for item in items {
        let (k, v) = item
            .split_once('=')
            .ok_or_else(|| Error::InvalidOverride(format!("`{item}` is not key=value")))?;
        let value = serde_json::from_str(v).unwrap_or_else(|_| Value::String(v.to_string()));
        out.insert(k.trim().to_string(), value);
    }
    Ok(out)
}

/// Resolves a builtin name or a problem-file path.
pub fn load_problem(spec: &str, set: &[String]) -> Result<ProblemSource> {
    let overrides = parse_overrides(set)?;
    if problems::BUILTIN_NAMES.contains(&spec) {
        return Ok(ProblemSource::Builtin {
            name: spec.to_string(),
            overrides,
        });
    }
    let path = Path::new(spec);
    if !path.exists() {
        return Err(Error::UnknownProblem(spec.to_string()));
    }
    let text = fs::read_to_string(path)?;
    let value: Value = serde_json::from_str(&text)?;
    if value.get("builtin").is_some() {
        let r: BuiltinRef =
            serde_json::from_value(value).map_err(|e| Error::Schema(e.to_string()))?;
        let mut merged = r.overrides;
        merged.extend(overrides);
        return Ok(ProblemSource::Builtin {
            name: r.builtin,
            overrides: merged,
        });
    }
    if !overrides.is_empty() {
        return Err(Error::InvalidOverride(
            "--set applies to builtin problems only".into(),
        ));
    }
    let problem: ProblemFile =
        serde_json::from_value(value).map_err(|e| Error::Schema(e.to_string()))?;
    Ok(ProblemSource::File { problem })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverStats {
    pub iters: usize,
    pub gap: f64,
    pub status: String,
    pub primal_residual: f64,
    pub dual_residual: f64,
}

/// The `solve` result document.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultDoc {
    pub problem: ProblemSource,
    pub cost: f64,
    pub impulses: Vec<Impulse>,
    pub dual_y: Vec<f64>,
    pub certificate: Certificate,
    pub certified: bool,
    pub e_d: f64,
    /// Chebyshev points per segment.
    pub degree: usize,
    pub moment_order: usize,
    pub slack: bool,
    pub ode_tol: f64,
    pub solver: SolverStats,
    #[serde(default)]
    pub warnings: Vec<String>,
}

impl ResultDoc {
    pub fn from_run(problem: ProblemSource, run: &PipelineRun, cfg: &PipelineConfig) -> Self {
        let s = &run.solution;
        Self {
            problem,
            cost: s.cost,
            impulses: s.impulses.clone(),
            dual_y: s.dual_y.clone(),
            certificate: s.certificate.clone(),
            certified: run.certified,
            e_d: run.md.e_d,
            degree: run.md.points,
            moment_order: run.order(),
            slack: cfg.slack,
            ode_tol: cfg.ode_tol,
            solver: SolverStats {
                iters: run.sdp.iterations,
                gap: run.sdp.rel_gap,
                status: status_name(run.sdp.status).into(),
                primal_residual: run.sdp.primal_residual,
                dual_residual: run.sdp.dual_residual,
            },
            warnings: s.warnings.clone(),
        }
    }

    pub fn solution(&self) -> ImpulsiveSolution {
        let mut s = ImpulsiveSolution::new(self.impulses.clone(), self.dual_y.clone());
        s.cost = self.cost;
        s
    }
}

fn status_name(s: SolveStatus) -> &'static str {
    match s {
        SolveStatus::Optimal => "optimal",
        SolveStatus::MaxIters => "max_iters",
        SolveStatus::NumericalFailure => "numerical_failure",
    }
}

/// Rebuilds the problem and kernel of a stored result and recomputes its
/// certificate by simulation and complementarity checking.
pub fn revalidate(doc: &ResultDoc) -> Result<Certificate> {
    let p = doc.problem.build().map_err(|e| e.in_stage("input"))?;
    let md = ltv::moment_data(&p, doc.degree, doc.ode_tol).map_err(|e| e.in_stage("ltv"))?;
    let mut sol = doc.solution();
    extract::certify(&mut sol, &md, &p, &OdeOptions::with_tol(doc.ode_tol))
        .map_err(|e| e.in_stage("extract"))?;
    Ok(sol.certificate)
}

/// Largest absolute difference between two certificates.
pub fn certificate_distance(a: &Certificate, b: &Certificate) -> f64 {
    [
        (a.primer_sup - b.primer_sup).abs(),
        (a.complementarity_max - b.complementarity_max).abs(),
        (a.terminal_error - b.terminal_error).abs(),
        (a.dual_objective - b.dual_objective).abs(),
        (a.duality_gap - b.duality_gap).abs(),
    ]
    .into_iter()
    .fold(0.0, f64::max)
}

/// Rows `t, x_1..x_n, p_1..p_m` at [`TRAJECTORY_SAMPLES`] evenly spaced times.
pub fn trajectory_table(
    p: &LtvProblem,
    md: &MomentData,
    sol: &ImpulsiveSolution,
    ode_tol: f64,
) -> Result<Vec<Vec<f64>>> {
    let times = p.horizon().linspace(TRAJECTORY_SAMPLES);
    let states = extract::simulate_at(sol, p, &times, &OdeOptions::with_tol(ode_tol))?;
    let primer = extract::primer_vector(md, &sol.dual_y)?;
    Ok(times
        .iter()
        .zip(&states)
        .map(|(&t, x)| {
            let mut row = vec![t];
            row.extend(x.iter());
            row.extend(primer.eval(md, t));
            row
        })
        .collect())
}

pub fn write_table<W: Write>(out: W, header: &[String], rows: &[Vec<String>]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(header)?;
    for r in rows {
        w.write_record(r)?;
    }
    w.flush()?;
    Ok(())
}

fn trajectory_header(n: usize, m: usize) -> Vec<String> {
    let mut h = vec!["t".to_string()];
    h.extend((1..=n).map(|i| format!("x_{i}")));
    h.extend((1..=m).map(|j| format!("p_{j}")));
    h
}

fn num(v: f64) -> String {
    format!("{v:.17e}")
}

fn config(slack: Toggle, tol: Option<f64>, points: usize) -> Result<PipelineConfig> {
    let mut cfg = PipelineConfig::with_points(points);
    cfg.slack = slack.on();
    if let Some(t) = tol {
        cfg.sdp.gap_tol = t;
    }
    cfg.sdp.validate()?;
    Ok(cfg)
}

fn choose_points(p: &LtvProblem, degree: Option<usize>, ode_tol: f64) -> Result<usize> {
    match degree {
        Some(d) if d >= 1 => Ok(d),
        Some(_) => Err(Error::InvalidArgument("--degree must be at least 1".into())),
        None => Ok(pipeline::auto_degree(p, AUTO_START, ode_tol)?.0),
    }
}

/// Writes a line to stdout, reporting a closed pipe as an error instead of panicking.
fn emit(text: &str) -> Result<()> {
    let mut out = std::io::stdout().lock();
    writeln!(out, "{text}")?;
    out.flush()?;
    Ok(())
}

fn write_json<T: Serialize>(value: &T, out: Option<&Path>, file: &str) -> Result<()> {
    let text = serde_json::to_string_pretty(value)?;
    match out {
        Some(dir) => {
            fs::create_dir_all(dir)?;
            fs::write(dir.join(file), text + "\n")?;
        }
        None => emit(&text)?,
    }
    Ok(())
}

pub fn cmd_solve(args: &SolveArgs) -> Result<i32> {
    let source = load_problem(&args.problem.problem, &args.problem.set).map_err(|e| e.in_stage("input"))?;
    let p = source.build().map_err(|e| e.in_stage("input"))?;
    let cfg0 = config(args.slack, args.tol, 1)?;
    let points = choose_points(&p, if args.auto_degree { None } else { args.degree }, cfg0.ode_tol)?;
    let cfg = PipelineConfig { points, ..cfg0 };
    let run = pipeline::solve(&p, &cfg)?;
    let doc = ResultDoc::from_run(source, &run, &cfg);
    write_json(&doc, args.out.as_deref(), "result.json")?;
    if let Some(dir) = &args.out {
        let rows = trajectory_table(&p, &run.md, &run.solution, cfg.ode_tol).map_err(|e| e.in_stage("extract"))?;
        let rows: Vec<Vec<String>> = rows.iter().map(|r| r.iter().map(|v| num(*v)).collect()).collect();
        let f = fs::File::create(dir.join("trajectory.csv"))?;
        write_table(f, &trajectory_header(p.n, p.m), &rows)?;
    }
    for w in &doc.warnings {
        eprintln!("[extract] warning: {w}");
    }
    Ok(if doc.certified { EXIT_CERTIFIED } else { EXIT_UNCERTIFIED })
}

/// One row of a convergence study.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceRow {
    pub d: usize,
    pub outcome: std::result::Result<(f64, f64), String>,
}

/// Solves at each degree (concurrently) and returns rows plus the reference cost used.
pub fn convergence_rows(p: &LtvProblem, degrees: &[usize], base: &PipelineConfig) -> (Vec<ConvergenceRow>, Option<f64>) {
    let rows: Vec<ConvergenceRow> = std::thread::scope(|s| {
        let handles: Vec<_> = degrees
            .iter()
            .map(|&d| {
                let cfg = PipelineConfig { points: d, ..*base };
                s.spawn(move || ConvergenceRow {
                    d,
                    outcome: pipeline::solve(p, &cfg)
                        .map(|r| (r.md.e_d, r.solution.cost))
                        .map_err(|e| e.to_string()),
                })
            })
            .collect();
        handles
            .into_iter()
            .zip(degrees)
            .map(|(h, &d)| {
                h.join().unwrap_or(ConvergenceRow {
                    d,
                    outcome: Err("worker panicked".into()),
                })
            })
            .collect()
    });
    let reference = p.reference_cost.or_else(|| {
        rows.iter()
            .filter_map(|r| r.outcome.as_ref().ok().map(|o| (r.d, o.1)))
            .max_by_key(|(d, _)| *d)
            .map(|(_, c)| c)
    });
    (rows, reference)
}

pub fn cmd_convergence(args: &ConvergenceArgs) -> Result<i32> {
    if args.degrees.len() < 2 {
        return Err(Error::InvalidArgument("at least two degrees are required".into()));
    }
    let source = load_problem(&args.problem.problem, &args.problem.set).map_err(|e| e.in_stage("input"))?;
    let p = source.build().map_err(|e| e.in_stage("input"))?;
    let cfg = config(args.slack, args.tol, 1)?;
    let (rows, reference) = convergence_rows(&p, &args.degrees, &cfg);
    let header: Vec<String> = ["d", "e_d", "cost", "rel_err", "error"].map(String::from).to_vec();
    let mut table = Vec::with_capacity(rows.len());
    let mut failed = false;
    for r in &rows {
        table.push(match &r.outcome {
            Ok((e_d, cost)) => {
                let rel = reference
                    .map(|c| num((cost - c).abs() / c.abs().max(f64::MIN_POSITIVE)))
                    .unwrap_or_default();
                vec![r.d.to_string(), num(*e_d), num(*cost), rel, String::new()]
            }
            Err(msg) => {
                failed = true;
                eprintln!("[convergence] d={}: {msg}", r.d);
                vec![r.d.to_string(), String::new(), String::new(), String::new(), msg.clone()]
            }
        });
    }
    match &args.out {
        Some(dir) => {
            fs::create_dir_all(dir)?;
            write_table(fs::File::create(dir.join("convergence.csv"))?, &header, &table)?;
        }
        None => write_table(std::io::stdout().lock(), &header, &table)?,
    }
    Ok(if failed { EXIT_UNCERTIFIED } else { EXIT_CERTIFIED })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sandwich {
    pub moment_cost: f64,
    pub grid_cost: f64,
    /// `moment_cost ≤ grid_cost + 1e-6`.
    pub holds: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleDoc {
    pub grid: usize,
    pub degree: usize,
    pub cost: f64,
    pub impulses: Vec<Impulse>,
    pub dual_y: Vec<f64>,
    pub status: String,
    pub iterations: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sandwich: Option<Sandwich>,
}

pub fn sandwich(moment_cost: f64, grid: &GridLpResult) -> Sandwich {
    Sandwich {
        moment_cost,
        grid_cost: grid.cost,
        holds: moment_cost <= grid.cost + 1e-6,
    }
}

pub fn cmd_oracle(args: &OracleArgs) -> Result<i32> {
    let source = load_problem(&args.problem.problem, &args.problem.set).map_err(|e| e.in_stage("input"))?;
    let p = source.build().map_err(|e| e.in_stage("input"))?;
    let cfg = config(Toggle::On, args.tol, 1)?;
    let points = choose_points(&p, args.degree, cfg.ode_tol).map_err(|e| e.in_stage("ltv"))?;
    let md = ltv::moment_data(&p, points, cfg.ode_tol).map_err(|e| e.in_stage("ltv"))?;
    let lp = match moment::grid_lp_restriction(&md, args.grid, &cfg.sdp) {
        Err(e @ Error::Infeasible(_)) => {
            eprintln!("{}", e.in_stage("moment"));
            return Ok(EXIT_INFEASIBLE);
        }
        other => other.map_err(|e| e.in_stage("moment"))?,
    };
    let sandwich = match &args.against {
        Some(path) => {
            let doc: ResultDoc = serde_json::from_str(&fs::read_to_string(path)?)?;
            let s = sandwich(doc.cost, &lp);
            eprintln!(
                "[oracle] sandwich: moment {:.9e} <= grid {:.9e}: {}",
                s.moment_cost,
                s.grid_cost,
                if s.holds { "holds" } else { "VIOLATED" }
            );
            Some(s)
        }
        None => None,
    };
    let doc = OracleDoc {
        grid: args.grid,
        degree: points,
        cost: lp.cost,
        impulses: lp.impulses,
        dual_y: lp.dual_y,
        status: status_name(lp.status).into(),
        iterations: lp.iterations,
        sandwich,
    };
    write_json(&doc, args.out.as_deref(), "oracle.json")?;
    Ok(EXIT_CERTIFIED)
}

pub fn cmd_validate(args: &ValidateArgs) -> Result<i32> {
    let doc: ResultDoc = serde_json::from_str(&fs::read_to_string(&args.result)?)
        .map_err(|e| Error::Schema(e.to_string()).in_stage("input"))?;
    let cert = revalidate(&doc)?;
    let dist = certificate_distance(&cert, &doc.certificate);
    emit(&serde_json::to_string_pretty(&cert)?)?;
    if dist > REVALIDATE_TOL {
        eprintln!("[extract] recomputed certificate differs from the stored one by {dist:.3e}");
        return Ok(EXIT_FAILURE);
    }
    Ok(if doc.certified { EXIT_CERTIFIED } else { EXIT_UNCERTIFIED })
}

/// JSON schema of [`ProblemFile`].
pub const PROBLEM_SCHEMA: &str = r##"{
  "$schema": "https://json-schema.org/draft/2020-12/schema",
  "title": "LTV impulsive control problem",
  "oneOf": [
    {
      "type": "object",
      "required": ["builtin"],
      "additionalProperties": false,
      "properties": {
        "builtin": {"enum": ["scalar_poly", "sign_switch", "sign_switch_split", "double_integrator", "prisma"]},
        "overrides": {"type": "object"}
      }
    },
    {
      "type": "object",
      "required": ["n", "m", "t_i", "t_f", "x_i", "x_f", "A", "B", "basis"],
      "additionalProperties": false,
      "properties": {
        "name": {"type": "string"},
        "n": {"type": "integer", "minimum": 1},
        "m": {"type": "integer", "minimum": 1},
        "t_i": {"type": "number"},
        "t_f": {"type": "number"},
        "x_i": {"type": "array", "items": {"type": "number"}},
        "x_f": {"type": "array", "items": {"type": "number"}},
        "breakpoints": {"type": "array", "items": {"type": "number"}},
        "basis": {"enum": ["chebyshev", "monomial"]},
        "A": {"$ref": "#/$defs/matrix"},
        "B": {"$ref": "#/$defs/matrix"}
      }
    }
  ],
  "$defs": {
    "matrix": {
      "oneOf": [
        {
          "description": "segments[s][r * cols + c] = coefficient list of entry (r, c) on segment s",
          "type": "array",
          "items": {"type": "array", "items": {"type": "array", "items": {"type": "number"}}}
        },
        {
          "type": "object",
          "required": ["builtin"],
          "properties": {"builtin": {"type": "string"}, "overrides": {"type": "object"}}
        }
      ]
    }
  }
}"##;

fn dispatch(cli: &Cli) -> Result<i32> {
    match &cli.command {
        Command::Solve(a) => cmd_solve(a),
        Command::Convergence(a) => cmd_convergence(a),
        Command::Oracle(a) => cmd_oracle(a),
        Command::Validate(a) => cmd_validate(a),
        Command::Schema => {
            emit(PROBLEM_SCHEMA)?;
            Ok(EXIT_CERTIFIED)
        }
    }
}

/// Parses arguments, runs the command and returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_FAILURE } else { EXIT_CERTIFIED };
        }
    };
    match dispatch(&cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("{}", e.in_stage("cli"));
            EXIT_FAILURE
        }
    }
}
