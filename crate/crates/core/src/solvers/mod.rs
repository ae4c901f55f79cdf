//! The iterative schemes.
//!
//! Each solver validates its parameters against the problem, then runs a
//! fixed update map `w ↦ T(w)` through a common driver that handles the
//! optional relaxation step `w^{k+1} = w^k + γ(T(w^k) − w^k)`, per-iteration
//! records, the stopping rule, and divergence detection.
//!
//! Stopping rule: a run reports `Converged` once the primal residual is at
//! most `tol_primal` **and** the weighted step `‖w^k − w^{k+1}‖_H` is at most
//! `tol_step`; otherwise it stops at `max_iter` with `MaxIter`.

use ndarray::Array1;
use serde::{Deserialize, Serialize};

use crate::serde_arrays::vec1;
use crate::{Error, Result};

pub mod balm;
pub mod dpalm;
pub mod npdhg;
pub mod palm;
pub mod pdalm;

pub(crate) mod xstep;

pub use balm::{solve_balm, BalmParams};
pub use dpalm::{solve_dpalm, DpalmBlock, DpalmParams};
pub use npdhg::{
    solve_npdhg1, solve_npdhg2, solve_pdhg_classic, Npdhg1Params, Npdhg2Params, PdhgParams,
};
pub use palm::{solve_palm, PalmParams, QSpec};
pub use pdalm::{solve_pdalm, PdalmBlock, PdalmParams};

/// Iterates with stacked-primal norm above this bound are treated as
/// divergent and the run stops.
pub const DIVERGENCE_BOUND: f64 = 1e12;

/// One point of the iteration: the (possibly stacked) primal part and the
/// dual part (multiplier `λ` for constrained problems, `y` for saddles).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Iterate {
    #[serde(with = "vec1")]
    pub x: Array1<f64>,
    #[serde(with = "vec1")]
    pub dual: Array1<f64>,
}

impl Iterate {
    pub fn new(x: Array1<f64>, dual: Array1<f64>) -> Self {
        Self { x, dual }
    }

    pub fn zeros(n: usize, m: usize) -> Self {
        Self { x: Array1::zeros(n), dual: Array1::zeros(m) }
    }

    /// Euclidean norm of the stacked vector `(x; dual)`.
    pub fn norm2(&self) -> f64 {
        (self.x.dot(&self.x) + self.dual.dot(&self.dual)).sqrt()
    }

    /// `other − self`, componentwise.
    pub fn delta(&self, other: &Iterate) -> Iterate {
        Iterate { x: &other.x - &self.x, dual: &other.dual - &self.dual }
    }

    /// Relaxation step `self + γ(target − self)`.
    pub fn relax_toward(&self, target: &Iterate, gamma: f64) -> Iterate {
        Iterate {
            x: &self.x + &(&target.x - &self.x).mapv(|v| gamma * v),
            dual: &self.dual + &(&target.dual - &self.dual).mapv(|v| gamma * v),
        }
    }

    pub fn is_finite(&self) -> bool {
        self.x.iter().all(|v| v.is_finite()) && self.dual.iter().all(|v| v.is_finite())
    }
}

/// Iteration bookkeeping shared by every solver.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct IterControl {
    /// Hard iteration cap.
    pub max_iter: usize,
    /// Constraint-violation threshold (Euclidean step threshold for saddles).
    pub tol_primal: f64,
    /// Threshold on the weighted step `‖w^k − w^{k+1}‖_H`.
    pub tol_step: f64,
    /// Relaxation factor in `(0, 2)`; `1` runs the scheme unmodified.
    pub gamma: f64,
    /// Keep the full iterate history (needed by the certification layer).
    /// When `false` only the start and final points are stored.
    pub keep_iterates: bool,
}

impl Default for IterControl {
    fn default() -> Self {
        Self {
            max_iter: 100_000,
            tol_primal: 1e-8,
            tol_step: 1e-10,
            gamma: 1.0,
            keep_iterates: true,
        }
    }
}

impl IterControl {
    pub(crate) fn validate(&self) -> Result<()> {
        if self.max_iter == 0 {
            return Err(Error::InvalidParam("max_iter must be positive".into()));
        }
        if !(self.tol_primal > 0.0) || !(self.tol_step > 0.0) {
            return Err(Error::InvalidParam("tolerances must be positive".into()));
        }
        if !(self.gamma > 0.0 && self.gamma < 2.0) {
            return Err(Error::InvalidParam(format!(
                "relaxation factor gamma = {} must lie in (0, 2)",
                self.gamma
            )));
        }
        Ok(())
    }
}

/// Terminal state of a run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    /// Both stopping thresholds were met.
    Converged,
    /// The iteration cap was reached (also reported when the divergence
    /// guard stops a baseline that is allowed to diverge).
    MaxIter,
}

/// Per-iteration measurements, one row per iteration performed.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct IterateRecord {
    /// Iteration index, starting at 1.
    pub k: usize,
    /// `‖Ax − b‖` for equality constraints, `‖max(b − Ax, 0)‖` for `Ax ≥ b`,
    /// Euclidean step norm for saddle problems.
    pub primal_residual: f64,
    /// Objective value at the new point (`Φ(x, y)` for saddles).
    pub objective: f64,
    /// Weighted step `‖w^k − w^{k+1}‖_H`.
    pub h_step: f64,
    /// Norm of the dual residual vector certifying approximate stationarity
    /// of the primal subproblem.
    pub dual_residual: f64,
}

/// Everything a run produces. `iterates` holds `w⁰, w¹, …` (one more entry
/// than `records`) when the run kept its history, or `[w⁰, w_final]` when it
/// did not.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SolveTrace {
    pub solver_id: String,
    /// Snapshot of the validated solver parameters.
    pub params: serde_json::Value,
    pub status: Status,
    /// Set when the divergence guard tripped (only baselines that may
    /// legitimately diverge report this instead of an error).
    pub diverged: bool,
    pub iterates: Vec<Iterate>,
    pub records: Vec<IterateRecord>,
}

impl SolveTrace {
    /// Number of iterations performed.
    pub fn iterations(&self) -> usize {
        self.records.len()
    }

    pub fn start(&self) -> &Iterate {
        &self.iterates[0]
    }

    pub fn final_iterate(&self) -> &Iterate {
        self.iterates.last().expect("trace always holds at least the start point")
    }

    /// `true` when `iterates` holds the full history `w⁰..w^K`.
    pub fn has_full_history(&self) -> bool {
        self.iterates.len() == self.records.len() + 1
    }

    /// Relaxation factor recorded in the parameter snapshot (1 when absent).
    pub fn gamma(&self) -> f64 {
        self.params.get("gamma").and_then(|v| v.as_f64()).unwrap_or(1.0)
    }

    /// Records as CSV with the documented column order.
    pub fn csv(&self) -> String {
        let mut out = String::from("k,primal_residual,objective,h_step,dual_residual\n");
        for r in &self.records {
            out.push_str(&format!(
                "{},{},{},{},{}\n",
                r.k, r.primal_residual, r.objective, r.h_step, r.dual_residual
            ));
        }
        out
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }
}

/// One iteration map plus the measurements the driver records.
pub(crate) trait Scheme {
    /// `T(w)` — one unrelaxed pass of the scheme.
    fn step(&mut self, w: &Iterate) -> Result<Iterate>;
    /// `‖next − prev‖²_H` in the scheme's certification metric.
    fn h_step_sq(&self, prev: &Iterate, next: &Iterate) -> f64;
    /// Problem-level residual at the new point (schemes for saddle problems
    /// report the Euclidean step instead).
    fn primal_residual(&self, prev: &Iterate, next: &Iterate) -> f64;
    fn objective(&self, w: &Iterate) -> f64;
    /// Norm of the dual residual built from two consecutive iterates.
    fn dual_residual(&self, prev: &Iterate, next: &Iterate) -> f64;
    /// Whether a tripped divergence guard is a hard error (`true` for the
    /// provably convergent schemes) or an expected outcome.
    fn divergence_is_error(&self) -> bool {
        true
    }
}

/// Rebuilds the certification metric of a recorded run from its solver id
/// and parameter snapshot. The classic PDHG baseline has no certified
/// metric and yields `None`; constrained problems are accepted for the
/// multi-block solvers as a single block.
pub fn metric_for(
    problem: &crate::model::AnyProblem,
    solver_id: &str,
    params: &serde_json::Value,
) -> Result<Option<crate::certify::MetricH>> {
    use crate::model::AnyProblem;
    let as_separable = |p: &crate::model::ConstrainedProblem| {
        crate::model::SeparableProblem {
            blocks: vec![crate::model::Block { a: p.a.clone(), theta: p.theta.clone() }],
            b: p.b.clone(),
            sense: p.sense,
        }
    };
    match (solver_id, problem) {
        ("palm", AnyProblem::Constrained(p)) => {
            let pp: PalmParams = serde_json::from_value(params.clone())?;
            Ok(Some(palm::palm_metric(p, &pp)?))
        }
        ("balm", AnyProblem::Constrained(p)) => {
            let pp: BalmParams = serde_json::from_value(params.clone())?;
            Ok(Some(balm::balm_metric(p, &pp)?))
        }
        ("pdalm", AnyProblem::Separable(p)) => {
            let pp: PdalmParams = serde_json::from_value(params.clone())?;
            Ok(Some(pdalm::pdalm_metric(p, &pp)?))
        }
        ("pdalm", AnyProblem::Constrained(p)) => {
            let pp: PdalmParams = serde_json::from_value(params.clone())?;
            Ok(Some(pdalm::pdalm_metric(&as_separable(p), &pp)?))
        }
        ("dpalm", AnyProblem::Separable(p)) => {
            let pp: DpalmParams = serde_json::from_value(params.clone())?;
            Ok(Some(dpalm::dpalm_metric(p, &pp)?))
        }
        ("dpalm", AnyProblem::Constrained(p)) => {
            let pp: DpalmParams = serde_json::from_value(params.clone())?;
            Ok(Some(dpalm::dpalm_metric(&as_separable(p), &pp)?))
        }
        ("npdhg1", AnyProblem::Saddle(p)) => {
            let pp: Npdhg1Params = serde_json::from_value(params.clone())?;
            Ok(Some(npdhg::npdhg1_metric(p, &pp)?))
        }
        ("npdhg2", AnyProblem::Saddle(p)) => {
            let pp: Npdhg2Params = serde_json::from_value(params.clone())?;
            Ok(Some(npdhg::npdhg2_metric(p, &pp)?))
        }
        ("pdhg", AnyProblem::Saddle(_)) => Ok(None),
        (id, _) => Err(Error::InvalidParam(format!(
            "solver `{id}` does not match the supplied problem kind"
        ))),
    }
}

/// Shared iteration loop: relaxation, records, stopping, divergence.
pub(crate) fn run_scheme<S: Scheme>(
    scheme: &mut S,
    solver_id: &str,
    params: serde_json::Value,
    start: Iterate,
    control: &IterControl,
) -> Result<SolveTrace> {
    control.validate()?;
    let gamma = control.gamma;
    let mut iterates = Vec::with_capacity(if control.keep_iterates { 64 } else { 2 });
    iterates.push(start.clone());
    let mut records: Vec<IterateRecord> = Vec::new();
    let mut w = start;
    let mut status = Status::MaxIter;
    let mut diverged = false;

    for k in 1..=control.max_iter {
        let target = scheme.step(&w)?;
        // gamma == 1 must reproduce the unrelaxed scheme bit for bit
        let next = if gamma == 1.0 { target } else { w.relax_toward(&target, gamma) };

        if !next.is_finite() || next.norm2() > DIVERGENCE_BOUND {
            if scheme.divergence_is_error() {
                return Err(Error::Diverged { iteration: k });
            }
            diverged = true;
            break;
        }

        let h_step = scheme.h_step_sq(&w, &next).max(0.0).sqrt();
        let primal = scheme.primal_residual(&w, &next);
        let record = IterateRecord {
            k,
            primal_residual: primal,
            objective: scheme.objective(&next),
            h_step,
            dual_residual: scheme.dual_residual(&w, &next),
        };
        records.push(record);
        if control.keep_iterates {
            iterates.push(next.clone());
        }
        w = next;

        if primal <= control.tol_primal && h_step <= control.tol_step {
            status = Status::Converged;
            break;
        }
    }

    if !control.keep_iterates {
        iterates.push(w);
    }
    Ok(SolveTrace { solver_id: solver_id.to_string(), params, status, diverged, iterates, records })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn control_rejects_bad_gamma() {
        for g in [0.0, -0.5, 2.0, 2.5] {
            let c = IterControl { gamma: g, ..Default::default() };
            assert!(c.validate().is_err(), "gamma {g} accepted");
        }
        let c = IterControl { gamma: 1.99, ..Default::default() };
        assert!(c.validate().is_ok());
    }

    #[test]
    fn csv_has_documented_header() {
        let t = SolveTrace {
            solver_id: "palm".into(),
            params: serde_json::json!({}),
            status: Status::Converged,
            diverged: false,
            iterates: vec![Iterate::zeros(1, 1)],
            records: vec![],
        };
        assert!(t.csv().starts_with("k,primal_residual,objective,h_step,dual_residual\n"));
    }
}
