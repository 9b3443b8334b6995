//! One complete run: read the evidence file, solve, answer the queries,
//! and render a report. Returns the process exit code instead of exiting,
//! so tests can drive it in-process.

use std::io::Write;
use std::path::PathBuf;

use evid_core::{CoreError, SolveOptions, World};

use crate::dsl::parse_evidence;
use crate::report::{QueryRow, Report, WorldProb};

/// Process exit codes. Anything the user can fix by editing the evidence
/// file sorts below the numerical failure modes.
pub mod exit {
    pub const OK: i32 = 0;
    /// Unreadable or unparseable input.
    pub const PARSE: i32 = 1;
    /// Axioms, bounds, and observations admit no distribution.
    pub const INFEASIBLE: i32 = 2;
    /// Aggregated evidence is not a polynomial in the world probabilities.
    pub const NOT_POLYNOMIAL: i32 = 3;
    /// The iteration budget ran out before the certificate was met.
    pub const NO_CONVERGENCE: i32 = 4;
    /// Bad command line.
    pub const USAGE: i32 = 64;
}

#[derive(Debug, Clone)]
pub struct RunConfig {
    pub path: PathBuf,
    pub json: bool,
    pub tolerance: f64,
    pub max_iterations: usize,
    pub seed: Option<u64>,
    pub dump_jdv: bool,
    pub dump_nullspace: bool,
}

impl RunConfig {
    pub fn new(path: impl Into<PathBuf>) -> RunConfig {
        let defaults = SolveOptions::default();
        RunConfig {
            path: path.into(),
            json: false,
            tolerance: defaults.tolerance,
            max_iterations: defaults.max_iterations,
            seed: defaults.seed,
            dump_jdv: false,
            dump_nullspace: false,
        }
    }

    fn options(&self) -> SolveOptions {
        SolveOptions {
            tolerance: self.tolerance,
            max_iterations: self.max_iterations,
            seed: self.seed,
        }
    }
}

/// Runs one evidence file. The report goes to `out` as JSON when asked,
/// otherwise as text; text-mode failures go to `err` instead so pipelines
/// never mistake them for answers.
pub fn run(cfg: &RunConfig, out: &mut dyn Write, err: &mut dyn Write) -> i32 {
    let (report, code) = execute(cfg);
    let sink: &mut dyn Write =
        if cfg.json || code == exit::OK { &mut *out } else { &mut *err };
    let io = if cfg.json { report.write_json(sink) } else { report.write_text(sink) };
    if io.is_err() {
        // A broken pipe downstream must not turn a finished run into a
        // reported failure.
        return code;
    }
    code
}

fn execute(cfg: &RunConfig) -> (Report, i32) {
    let src = match std::fs::read_to_string(&cfg.path) {
        Ok(s) => s,
        Err(e) => {
            let msg = format!("cannot read {}: {e}", cfg.path.display());
            return (Report::error("io_error", msg), exit::PARSE);
        }
    };
    let ev = match parse_evidence(&src) {
        Ok(ev) => ev,
        Err(e) => return (Report::error("parse_error", e.to_string()), exit::PARSE),
    };
    let solution = match ev.kb.solve(&cfg.options()) {
        Ok(s) => s,
        Err(e) => {
            let code = code_of(&e);
            return (Report::error(status_of(code), e.to_string()), code);
        }
    };

    let nullspace = solution.null_space();
    let mut report = Report {
        status: "converged".to_string(),
        message: None,
        log_likelihood: Some(solution.value()),
        iterations: Some(solution.result().iterations),
        stationarity_gap: Some(solution.result().stationarity_gap),
        nullspace_dim: Some(nullspace.len()),
        jdv: None,
        nullspace: None,
        queries: Vec::new(),
    };
    if cfg.dump_jdv {
        let registry = solution.model().registry();
        let rows = solution
            .jdv()
            .as_slice()
            .iter()
            .enumerate()
            .map(|(w, &p)| WorldProb::new(World(w).label(registry), p))
            .collect();
        report.jdv = Some(rows);
    }
    if cfg.dump_nullspace {
        report.nullspace = Some(nullspace);
    }
    for q in &ev.queries {
        let row = match solution.query(&q.event, q.condition.as_ref()) {
            Ok(iv) => QueryRow::answer(q.text.clone(), iv.lo, iv.hi, iv.degenerate),
            Err(e) => QueryRow::failure(q.text.clone(), e.to_string()),
        };
        report.queries.push(row);
    }
    (report, exit::OK)
}

fn code_of(e: &CoreError) -> i32 {
    match e {
        CoreError::NotPolynomial { .. } => exit::NOT_POLYNOMIAL,
        CoreError::NoConvergence { .. } | CoreError::Numerical(_) | CoreError::LpUnbounded => {
            exit::NO_CONVERGENCE
        }
        _ => exit::INFEASIBLE,
    }
}

fn status_of(code: i32) -> &'static str {
    match code {
        exit::PARSE => "parse_error",
        exit::INFEASIBLE => "infeasible",
        exit::NOT_POLYNOMIAL => "not_polynomial",
        exit::NO_CONVERGENCE => "no_convergence",
        _ => "error",
    }
}
