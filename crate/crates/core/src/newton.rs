//! Generalized Newton iteration on successive piecewise linearizations.
//!
//! Each step replaces `F` by its tangent model at `x_k` (or its secant model
//! through `x_{k-1}` and `x_k`) and moves to the model root nearest to the
//! model center.

use std::fmt::{self, Write as _};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::linearize::{secant, tangent, Mode, PLModel};
use crate::plsolve::{min_norm_root, modulus_iteration, SolveError, SolveOptions};
use crate::tape::{lower_minmax, EvalProcedure};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolverPreference {
    Enumeration,
    ModulusThenEnumeration,
}

#[derive(Clone, Debug, PartialEq)]
pub struct NewtonOptions {
    pub max_iterations: usize,
    pub residual_tolerance: f64,
    /// Stop once a step is no longer than this.
    pub step_tolerance: f64,
    pub solve: SolveOptions,
    pub solver: SolverPreference,
}

impl Default for NewtonOptions {
    fn default() -> Self {
        Self {
            max_iterations: 50,
            residual_tolerance: 1e-13,
            step_tolerance: 0.0,
            solve: SolveOptions::default(),
            solver: SolverPreference::Enumeration,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum NewtonStatus {
    Converged,
    /// The model built at this iterate has no root.
    NoRoot { iteration: usize },
    MaxIterations,
    /// `F` or its model is undefined at this iterate.
    DomainError { iteration: usize, message: String },
    /// The residual stopped decreasing above the tolerance, or the step fell
    /// below the step tolerance.
    Stalled,
}

impl NewtonStatus {
    pub fn is_converged(&self) -> bool {
        matches!(self, NewtonStatus::Converged)
    }
}

impl fmt::Display for NewtonStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            NewtonStatus::Converged => write!(f, "converged"),
            NewtonStatus::NoRoot { iteration } => write!(f, "no root at iteration {iteration}"),
            NewtonStatus::MaxIterations => write!(f, "iteration limit reached"),
            NewtonStatus::DomainError { iteration, message } => {
                write!(f, "domain error at iteration {iteration}: {message}")
            }
            NewtonStatus::Stalled => write!(f, "stalled"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NewtonReport {
    pub mode: Mode,
    /// All points, including the one or two starting points.
    pub iterates: Vec<Vec<f64>>,
    pub residual_norms: Vec<f64>,
    pub status: NewtonStatus,
    pub rate_estimate: Option<f64>,
}

impl NewtonReport {
    /// Number of Newton steps taken.
    pub fn steps(&self) -> usize {
        let starts = match self.mode {
            Mode::Tangent => 1,
            Mode::Secant => 2,
        };
        self.iterates.len().saturating_sub(starts)
    }

    pub fn final_residual(&self) -> Option<f64> {
        self.residual_norms.last().copied()
    }

    pub fn solution(&self) -> Option<&[f64]> {
        self.iterates.last().map(Vec::as_slice)
    }

    /// Aligned two-column table of iteration index and residual.
    pub fn to_table(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "{:>9}  {:>22}", "iteration", "residual");
        for (k, r) in self.residual_norms.iter().enumerate() {
            let _ = writeln!(out, "{k:>9}  {r:>22.12e}");
        }
        let _ = writeln!(out, "status: {}", self.status);
        match self.rate_estimate {
            Some(g) => {
                let _ = writeln!(out, "rate estimate: {g:.6}");
            }
            None => {
                let _ = writeln!(out, "rate estimate: n/a");
            }
        }
        out
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RateError {
    #[error("need three consecutive steps above the roundoff floor")]
    InsufficientData,
}

fn inf_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |a, b| a.max(b.abs()))
}

fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).fold(0.0, |m, (u, v)| m.max((u - v).abs()))
}

/// Empirical convergence order
/// `ln(d_{k+1} / d_k) / ln(d_k / d_{k-1})` with `d_k = |x_{k+1} - x_k|`,
/// taken at the last index where all three steps exceed the roundoff floor
/// `1e2 * eps`.
pub fn rate_estimate(iterates: &[Vec<f64>]) -> Result<f64, RateError> {
    let steps: Vec<(f64, bool)> = iterates
        .windows(2)
        .map(|w| {
            let d = dist(&w[1], &w[0]);
            (d, d > 1e2 * f64::EPSILON)
        })
        .collect();
    (1..steps.len().saturating_sub(1))
        .rev()
        .find(|&k| steps[k - 1].1 && steps[k].1 && steps[k + 1].1 && steps[k].0 != steps[k - 1].0)
        .map(|k| (steps[k + 1].0 / steps[k].0).ln() / (steps[k].0 / steps[k - 1].0).ln())
        .filter(|g| g.is_finite())
        .ok_or(RateError::InsufficientData)
}

fn residual(proc: &EvalProcedure, x: &[f64]) -> Result<f64, String> {
    proc.eval(x).map(|y| inf_norm(&y)).map_err(|e| e.to_string())
}

fn model_root(model: &PLModel, opts: &NewtonOptions) -> Result<Vec<f64>, SolveError> {
    let anf = model.abs_normal();
    let zero = vec![0.0; anf.m];
    if opts.solver == SolverPreference::ModulusThenEnumeration {
        let tol = 1e-14 * (1.0 + inf_norm(&anf.offset));
        if let Ok(Some(x)) = modulus_iteration(&anf, &zero, 100, tol) {
            return Ok(x);
        }
    }
    min_norm_root(&anf, model.center(), &zero, &opts.solve)
}

fn stagnated(r: &[f64]) -> bool {
    let close = |a: f64, b: f64| (a - b).abs() <= 4.0 * f64::EPSILON * a.abs().max(b.abs());
    match r {
        [.., a, b, c] => close(*a, *b) && close(*b, *c),
        _ => false,
    }
}

fn drive(
    proc: &EvalProcedure,
    mode: Mode,
    starts: Vec<Vec<f64>>,
    opts: &NewtonOptions,
) -> NewtonReport {
    let lowered;
    let proc = if proc.has_minmax() {
        lowered = lower_minmax(proc);
        &lowered
    } else {
        proc
    };
    let mut report = NewtonReport {
        mode,
        iterates: Vec::new(),
        residual_norms: Vec::new(),
        status: NewtonStatus::MaxIterations,
        rate_estimate: None,
    };
    for x in starts {
        match residual(proc, &x) {
            Ok(r) => {
                report.iterates.push(x);
                report.residual_norms.push(r);
            }
            Err(message) => {
                report.status = NewtonStatus::DomainError {
                    iteration: report.iterates.len(),
                    message,
                };
                return report;
            }
        }
    }
    let mut step = 0;
    report.status = loop {
        let k = report.iterates.len() - 1;
        if report.residual_norms[k] <= opts.residual_tolerance {
            break NewtonStatus::Converged;
        }
        if step == opts.max_iterations {
            break NewtonStatus::MaxIterations;
        }
        let model = match mode {
            Mode::Tangent => tangent(proc, &report.iterates[k]),
            Mode::Secant => secant(proc, &report.iterates[k - 1], &report.iterates[k]),
        };
        let model = match model {
            Ok(m) => m,
            Err(e) => {
                break NewtonStatus::DomainError {
                    iteration: k,
                    message: e.to_string(),
                }
            }
        };
        let next = match model_root(&model, opts) {
            Ok(x) => x,
            Err(SolveError::NoRoot) => break NewtonStatus::NoRoot { iteration: k },
            Err(e) => {
                break NewtonStatus::DomainError {
                    iteration: k,
                    message: e.to_string(),
                }
            }
        };
        step += 1;
        let r = match residual(proc, &next) {
            Ok(r) => r,
            Err(message) => {
                break NewtonStatus::DomainError {
                    iteration: k + 1,
                    message,
                };
            }
        };
        let moved = dist(&next, &report.iterates[k]);
        report.iterates.push(next);
        report.residual_norms.push(r);
        if r <= opts.residual_tolerance {
            break NewtonStatus::Converged;
        }
        if moved <= opts.step_tolerance || stagnated(&report.residual_norms) {
            break NewtonStatus::Stalled;
        }
    };
    report.rate_estimate = rate_estimate(&report.iterates).ok();
    report
}

/// Newton iteration on tangent models, `x_{k+1}` the model root nearest `x_k`.
pub fn newton_tangent(proc: &EvalProcedure, x0: &[f64], opts: &NewtonOptions) -> NewtonReport {
    drive(proc, Mode::Tangent, vec![x0.to_vec()], opts)
}

/// Newton iteration on secant models through the last two iterates, the next
/// iterate being the model root nearest to their midpoint.
pub fn newton_secant(
    proc: &EvalProcedure,
    x0: &[f64],
    x1: &[f64],
    opts: &NewtonOptions,
) -> NewtonReport {
    drive(proc, Mode::Secant, vec![x0.to_vec(), x1.to_vec()], opts)
}
