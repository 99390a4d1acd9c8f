//! Command dispatch. Each command returns its stdout text and exit code;
//! the binary only does argument parsing and printing.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use gqa_core::axioms::check_all;
use gqa_core::diagram::{export_dot, parse_diagram};
use gqa_core::gauss::{interpret_causal, Sampler};
use gqa_core::gpl::infer_source;
use gqa_core::ols::solve_ols;
use gqa_core::quadrel::{effective_domain, interpret};
use gqa_core::quadstate::states_equal;
use gqa_core::{Diagram, GplError, QuadRel, QuadState};
use serde_json::json;

use crate::json::{aff_doc, parse_rel, rel_doc, state_doc, Score};
use crate::table::read_problem;

/// Verdict tolerance used by `eq` unless overridden.
pub const DEFAULT_TOL: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq)]
pub enum Command {
    Eval { diagram_file: PathBuf, point: Vec<f64> },
    Normalize { diagram_file: PathBuf, domain: bool },
    Eq { file_a: PathBuf, file_b: PathBuf },
    Infer { gpl_file: PathBuf },
    Ols { csv_file: PathBuf },
    AxiomsCheck,
    ExportDot { diagram_file: PathBuf, out: Option<PathBuf> },
    Sample { diagram_file: PathBuf, input: Vec<f64>, count: usize },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Options {
    pub tol: f64,
    pub seed: u64,
    pub json: bool,
}

impl Default for Options {
    fn default() -> Self {
        Options {
            tol: DEFAULT_TOL,
            seed: 0,
            json: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub code: i32,
    pub stdout: String,
}

impl Outcome {
    fn ok(stdout: String) -> Self {
        Outcome { code: 0, stdout }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {message}")]
    Input { path: PathBuf, message: String },
    #[error("{0}")]
    Usage(String),
    #[error("{path}: {message}")]
    Infeasible { path: PathBuf, message: String },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Infeasible { .. } => 3,
            _ => 2,
        }
    }
}

fn read(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn input_error(path: &Path, e: impl ToString) -> CliError {
    CliError::Input {
        path: path.to_path_buf(),
        message: e.to_string(),
    }
}

fn load_diagram(path: &Path) -> Result<Diagram, CliError> {
    parse_diagram(&read(path)?).map_err(|e| input_error(path, e))
}

/// A relation from a diagram file or a JSON document.
fn load_rel(path: &Path) -> Result<QuadRel, CliError> {
    let text = read(path)?;
    if text.trim_start().starts_with('{') {
        parse_rel(&text).map_err(|e| input_error(path, e))
    } else {
        let d = parse_diagram(&text).map_err(|e| input_error(path, e))?;
        interpret(&d).map_err(|e| input_error(path, e))
    }
}

pub fn run(cmd: &Command, opts: &Options) -> Result<Outcome, CliError> {
    match cmd {
        Command::Eval { diagram_file, point } => eval(diagram_file, point, opts),
        Command::Normalize { diagram_file, domain } => normalize(diagram_file, *domain),
        Command::Eq { file_a, file_b } => eq(file_a, file_b, opts),
        Command::Infer { gpl_file } => infer(gpl_file, opts),
        Command::Ols { csv_file } => ols(csv_file, opts),
        Command::AxiomsCheck => axioms(opts),
        Command::ExportDot { diagram_file, out } => dot(diagram_file, out.as_deref()),
        Command::Sample {
            diagram_file,
            input,
            count,
        } => sample(diagram_file, input, *count, opts),
    }
}

fn eval(path: &Path, point: &[f64], opts: &Options) -> Result<Outcome, CliError> {
    let f = load_rel(path)?;
    let width = f.inputs() + f.outputs();
    if point.len() != width {
        return Err(CliError::Usage(format!(
            "the diagram has {} input and {} output wire(s), so the point needs {} coordinate(s), got {}",
            f.inputs(),
            f.outputs(),
            width,
            point.len()
        )));
    }
    let value = f.name().eval(point).map_err(|e| input_error(path, e))?;
    let stdout = if opts.json {
        json!({ "value": Score::exact(value) }).to_string()
    } else {
        human::number(value)
    };
    Ok(Outcome::ok(stdout + "\n"))
}

fn normalize(path: &Path, domain: bool) -> Result<Outcome, CliError> {
    let f = load_rel(path)?;
    let text = if domain {
        aff_doc(&effective_domain(&f)).to_json()
    } else {
        rel_doc(&f).to_json()
    };
    Ok(Outcome::ok(text + "\n"))
}

fn eq(a: &Path, b: &Path, opts: &Options) -> Result<Outcome, CliError> {
    let (f, g) = (load_rel(a)?, load_rel(b)?);
    let same_type = f.inputs() == g.inputs() && f.outputs() == g.outputs();
    let equal = same_type && states_equal(f.name(), g.name(), opts.tol);
    let stdout = if opts.json {
        json!({ "equal": equal, "tol": opts.tol }).to_string()
    } else if equal {
        "equal".to_string()
    } else if !same_type {
        format!("not-equal (types {}→{} and {}→{})", f.inputs(), f.outputs(), g.inputs(), g.outputs())
    } else {
        "not-equal".to_string()
    };
    Ok(Outcome {
        code: if equal { 0 } else { 1 },
        stdout: stdout + "\n",
    })
}

fn infer(path: &Path, opts: &Options) -> Result<Outcome, CliError> {
    let result = infer_source(&read(path)?).map_err(|e| match e {
        GplError::InfeasibleObservation => CliError::Infeasible {
            path: path.to_path_buf(),
            message: e.to_string(),
        },
        e => input_error(path, e),
    })?;
    let doc = state_doc(&result.posterior);
    let stdout = if opts.json {
        serde_json::to_string_pretty(&json!({
            "type": result.ty.to_string(),
            "posterior": doc,
            "score": Score::exact(result.score),
        }))
        .expect("plain data")
    } else {
        format!(
            "{}\n{}",
            human::posterior(&result.posterior, result.score),
            doc.to_json()
        )
    };
    Ok(Outcome::ok(stdout + "\n"))
}

fn ols(path: &Path, opts: &Options) -> Result<Outcome, CliError> {
    let file = fs::File::open(path).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let problem = read_problem(file).map_err(|e| input_error(path, e))?;
    let s = solve_ols(&problem);
    let stdout = if opts.json {
        json!({
            "x_hat": s.estimate,
            "residual": s.residual_cost,
            "injective": s.injective,
        })
        .to_string()
    } else {
        let mut out = format!("x_hat = {}\nresidual = {}", human::vector(&s.estimate), human::number(s.residual_cost));
        if !s.injective {
            out.push_str("\nnote: design matrix is rank deficient; x_hat is the minimum-norm solution");
        }
        out
    };
    Ok(Outcome::ok(stdout + "\n"))
}

fn axioms(opts: &Options) -> Result<Outcome, CliError> {
    // the law suite is checked at the structural tolerance, not the verdict one
    let outcomes = check_all(gqa_core::TOL);
    let failed = outcomes.iter().filter(|o| !o.passed).count();
    let stdout = if opts.json {
        let rows: Vec<_> = outcomes
            .iter()
            .map(|o| json!({ "law": o.law, "fragment": o.fragment.label(), "params": o.params, "passed": o.passed }))
            .collect();
        json!({ "passed": outcomes.len() - failed, "failed": failed, "laws": rows }).to_string() + "\n"
    } else {
        let mut out = String::new();
        for o in &outcomes {
            let verdict = if o.passed { "pass" } else { "FAIL" };
            let _ = writeln!(out, "{:<5} {:<10} {:<18} {}", verdict, o.fragment.label(), o.law, o.params);
            if !o.passed {
                let _ = writeln!(out, "      {}", o.detail);
            }
        }
        let _ = writeln!(out, "{} of {} instances pass", outcomes.len() - failed, outcomes.len());
        out
    };
    Ok(Outcome {
        code: if failed == 0 { 0 } else { 1 },
        stdout,
    })
}

fn dot(path: &Path, out: Option<&Path>) -> Result<Outcome, CliError> {
    let text = export_dot(&load_diagram(path)?);
    match out {
        None => Ok(Outcome::ok(text)),
        Some(target) => {
            fs::write(target, text).map_err(|source| CliError::Io {
                path: target.to_path_buf(),
                source,
            })?;
            Ok(Outcome::ok(format!("wrote {}\n", target.display())))
        }
    }
}

fn sample(path: &Path, input: &[f64], count: usize, opts: &Options) -> Result<Outcome, CliError> {
    let d = load_diagram(path)?;
    let map = interpret_causal(&d).map_err(|e| input_error(path, e))?;
    if input.len() != map.inputs() {
        return Err(CliError::Usage(format!(
            "the diagram has {} input wire(s), got {} input value(s)",
            map.inputs(),
            input.len()
        )));
    }
    let mut sampler = Sampler::new(&map, opts.seed).map_err(|e| input_error(path, e))?;
    let draws: Vec<Vec<f64>> = (0..count)
        .map(|_| sampler.draw(input))
        .collect::<Result<_, _>>()
        .map_err(|e| input_error(path, e))?;
    let stdout = if opts.json {
        json!({ "seed": opts.seed, "samples": draws }).to_string() + "\n"
    } else {
        draws
            .iter()
            .map(|d| d.iter().map(|v| v.to_string()).collect::<Vec<_>>().join(",") + "\n")
            .collect()
    };
    Ok(Outcome::ok(stdout))
}

/// Human-readable number formatting, rounded to 12 significant digits so
/// that rounding noise does not show.
pub mod human {
    use super::*;

    pub fn number(v: f64) -> String {
        if v.is_infinite() {
            return if v > 0.0 { "inf".into() } else { "-inf".into() };
        }
        let rounded: f64 = format!("{:.11e}", v).parse().unwrap_or(v);
        if rounded == 0.0 {
            "0".into()
        } else if rounded.abs() < 1e-6 || rounded.abs() >= 1e15 {
            format!("{:e}", rounded)
        } else {
            format!("{}", rounded)
        }
    }

    pub fn vector(v: &[f64]) -> String {
        format!("[{}]", v.iter().map(|&x| number(x)).collect::<Vec<_>>().join(", "))
    }

    fn matrix_rows(rows: impl Iterator<Item = Vec<f64>>) -> String {
        format!("[{}]", rows.map(|r| vector(&r)).collect::<Vec<_>>().join(", "))
    }

    /// `posterior = N(mu, Sigma) + fibre D, score = c`; one-dimensional
    /// posteriors print as plain numbers and an empty fibre is omitted.
    pub fn posterior(s: &QuadState, score: f64) -> String {
        let n = s.dim();
        let (mu, sigma) = if n == 1 {
            (number(s.mean()[0]), number(s.covariance()[(0, 0)]))
        } else {
            let cov = s.covariance();
            (vector(s.mean()), matrix_rows((0..n).map(|i| cov.row_slice(i).to_vec())))
        };
        let mut out = format!("posterior = N({}, {})", mu, sigma);
        if !s.fibre().is_zero() {
            let basis = s.fibre().basis();
            let _ = write!(out, " + fibre span{}", matrix_rows((0..basis.cols()).map(|j| basis.col_vec(j))));
        }
        let _ = write!(out, ", score = {}", number(score));
        out
    }

}
