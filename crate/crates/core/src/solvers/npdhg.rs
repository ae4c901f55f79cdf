//! Primal-dual hybrid gradient schemes for
//! `min_x max_y θ₁(x) − yᵀAx − θ₂(y)` over `X × Y`.
//!
//! Two extrapolated variants converge for merely convex `θ₁, θ₂`:
//!
//! ```text
//! variant 1:  x^{k+1} = prox_{θ₁,τ}(x^k + Aᵀy^k/τ)          τ > r·ρ(AᵀA)
//!             y^{k+1} = prox_{θ₂,1/r}(y^k − r·A(2x^{k+1} − x^k))
//!
//! variant 2:  x^{k+1} = prox_{θ₁,r}(x^k + Aᵀy^k/r)
//!             y^{k+1} = prox_{θ₂,σ}(y^k − A(2x^{k+1} − x^k)/σ)
//! ```
//!
//! Both y-updates are derived from the subproblem's first-order optimality
//! condition (e.g. `A(2x^{k+1} − x^k) + (y^{k+1} − y^k)/r ∈ −∂θ₂(y^{k+1})`
//! up to the normal cone for variant 1), which fixes the prox weight and the
//! sign of the linear term unambiguously.
//!
//! The classic PDHG baseline uses the same alternating prox steps *without*
//! extrapolation; it is only guaranteed for strongly convex `θ₁` with
//! `r·s > ρ(AᵀA)` and may legitimately diverge or cycle outside that regime,
//! so its divergence guard reports rather than errors.
//!
//! Saddle traces record the Euclidean step `‖u^k − u^{k+1}‖` in the
//! `primal_residual` column (there is no constraint residual to report).

use serde::{Deserialize, Serialize};

use crate::certify::{DualW, MetricH, QForm};
use crate::linalg::spectral_norm_sq;
use crate::model::SaddleProblem;
use crate::solvers::xstep::{AUTO_TAU_FACTOR, PROX_FORM_MARGIN};
use crate::solvers::{run_scheme, IterControl, Iterate, Scheme, SolveTrace};
use crate::{Error, Result};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Npdhg1Params {
    pub r: f64,
    /// Primal prox weight, `τ > r·ρ(AᵀA)`.
    pub tau: f64,
    #[serde(flatten)]
    pub control: IterControl,
}

impl Npdhg1Params {
    pub fn defaults_for(problem: &SaddleProblem) -> Self {
        Self::defaults_with_r(problem, 1.0)
    }

    pub fn defaults_with_r(problem: &SaddleProblem, r: f64) -> Self {
        let rho = spectral_norm_sq(&problem.a);
        Self { r, tau: AUTO_TAU_FACTOR * r * rho, control: IterControl::default() }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Npdhg2Params {
    pub r: f64,
    /// Dual prox weight, `σ > max(r, 1/r)·ρ(AAᵀ)`.
    pub sigma: f64,
    #[serde(flatten)]
    pub control: IterControl,
}

impl Npdhg2Params {
    pub fn defaults_for(problem: &SaddleProblem) -> Self {
        Self::defaults_with_r(problem, 1.0)
    }

    pub fn defaults_with_r(problem: &SaddleProblem, r: f64) -> Self {
        let rho = spectral_norm_sq(&problem.a);
        Self { r, sigma: AUTO_TAU_FACTOR * r.max(1.0 / r) * rho, control: IterControl::default() }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PdhgParams {
    pub r: f64,
    pub s: f64,
    #[serde(flatten)]
    pub control: IterControl,
}

impl Default for PdhgParams {
    fn default() -> Self {
        Self { r: 1.0, s: 1.0, control: IterControl::default() }
    }
}

/// `H = [[rAᵀA + Q, Aᵀ], [A, I/r]]` with `Q = τI − rAᵀA`, over `u = (x; y)`.
pub fn npdhg1_metric(problem: &SaddleProblem, params: &Npdhg1Params) -> Result<MetricH> {
    MetricH::npdhg1(params.r, QForm::FromProxForm { tau: params.tau }, problem.a.clone())
}

/// `H̃ = [[rI, Aᵀ], [A, σI]]` over `u = (x; y)`.
pub fn npdhg2_metric(problem: &SaddleProblem, params: &Npdhg2Params) -> Result<MetricH> {
    MetricH::npdhg2(params.r, DualW::Spherical(params.sigma), problem.a.clone())
}

enum Variant {
    /// primal weight τ (spectral metric), dual weight 1/r, extrapolated
    One { r: f64, tau: f64 },
    /// primal weight r, dual weight σ, extrapolated
    Two { r: f64, sigma: f64 },
    /// primal weight r, dual weight s, no extrapolation
    Classic { r: f64, s: f64 },
}

struct SaddleScheme<'a> {
    problem: &'a SaddleProblem,
    variant: Variant,
    metric: Option<MetricH>,
}

impl Scheme for SaddleScheme<'_> {
    fn step(&mut self, u: &Iterate) -> Result<Iterate> {
        let p = self.problem;
        let at_y = p.a.t().dot(&u.dual);
        let (x_weight, y_weight, extrapolate) = match self.variant {
            Variant::One { r, tau } => (tau, 1.0 / r, true),
            Variant::Two { r, sigma } => (r, sigma, true),
            Variant::Classic { r, s } => (r, s, false),
        };
        let x_next = p.theta1.prox(&(&u.x + &at_y.mapv(|v| v / x_weight)), x_weight)?;
        let x_for_dual =
            if extrapolate { &x_next.mapv(|v| 2.0 * v) - &u.x } else { x_next.clone() };
        let y_center = &u.dual - &p.a.dot(&x_for_dual).mapv(|v| v / y_weight);
        let y_next = p.theta2.prox(&y_center, y_weight)?;
        Ok(Iterate::new(x_next, y_next))
    }

    fn h_step_sq(&self, prev: &Iterate, next: &Iterate) -> f64 {
        let d = prev.delta(next);
        match &self.metric {
            Some(h) => h.quad_form(&d.x, &d.dual),
            None => d.x.dot(&d.x) + d.dual.dot(&d.dual),
        }
    }

    fn primal_residual(&self, prev: &Iterate, next: &Iterate) -> f64 {
        prev.delta(next).norm2()
    }

    fn objective(&self, u: &Iterate) -> f64 {
        self.problem.phi(&u.x, &u.dual)
    }

    fn dual_residual(&self, prev: &Iterate, next: &Iterate) -> f64 {
        let d = prev.delta(next);
        let w = match self.variant {
            Variant::One { tau, .. } => tau,
            Variant::Two { r, .. } | Variant::Classic { r, .. } => r,
        };
        let s = d.x.mapv(|v| w * v) + self.problem.a.t().dot(&d.dual);
        s.dot(&s).sqrt()
    }

    fn divergence_is_error(&self) -> bool {
        !matches!(self.variant, Variant::Classic { .. })
    }
}

fn check_start(problem: &SaddleProblem, start: &Iterate) -> Result<()> {
    let (m, n) = problem.dims();
    if start.x.len() != n || start.dual.len() != m {
        return Err(Error::Dimension(format!(
            "start point is ({}, {}), problem needs ({n}, {m})",
            start.x.len(),
            start.dual.len()
        )));
    }
    Ok(())
}

pub fn solve_npdhg1(
    problem: &SaddleProblem,
    params: &Npdhg1Params,
    start: Iterate,
) -> Result<SolveTrace> {
    check_start(problem, &start)?;
    if !(params.r > 0.0) {
        return Err(Error::InvalidParam("npdhg1 needs r > 0".into()));
    }
    let rho = spectral_norm_sq(&problem.a);
    if !(params.tau - params.r * rho > PROX_FORM_MARGIN * params.tau) {
        return Err(Error::InvalidParam(format!(
            "tau = {} must exceed r·ρ(AᵀA) ≈ {:.6e}",
            params.tau,
            params.r * rho
        )));
    }
    let metric = npdhg1_metric(problem, params)?;
    let mut scheme = SaddleScheme {
        problem,
        variant: Variant::One { r: params.r, tau: params.tau },
        metric: Some(metric),
    };
    run_scheme(&mut scheme, "npdhg1", serde_json::to_value(params)?, start, &params.control)
}

pub fn solve_npdhg2(
    problem: &SaddleProblem,
    params: &Npdhg2Params,
    start: Iterate,
) -> Result<SolveTrace> {
    check_start(problem, &start)?;
    if !(params.r > 0.0) {
        return Err(Error::InvalidParam("npdhg2 needs r > 0".into()));
    }
    let rho = spectral_norm_sq(&problem.a);
    let bound = params.r.max(1.0 / params.r) * rho;
    if !(params.sigma - bound > PROX_FORM_MARGIN * params.sigma) {
        return Err(Error::InvalidParam(format!(
            "sigma = {} must exceed max(r, 1/r)·ρ(AAᵀ) ≈ {bound:.6e}",
            params.sigma
        )));
    }
    let metric = npdhg2_metric(problem, params)?;
    let mut scheme = SaddleScheme {
        problem,
        variant: Variant::Two { r: params.r, sigma: params.sigma },
        metric: Some(metric),
    };
    run_scheme(&mut scheme, "npdhg2", serde_json::to_value(params)?, start, &params.control)
}

/// Classic alternating-prox baseline. Divergence is reported through the
/// trace (`MaxIter` with `diverged` set), never as an error.
pub fn solve_pdhg_classic(
    problem: &SaddleProblem,
    params: &PdhgParams,
    start: Iterate,
) -> Result<SolveTrace> {
    check_start(problem, &start)?;
    if !(params.r > 0.0) || !(params.s > 0.0) {
        return Err(Error::InvalidParam("pdhg needs r > 0 and s > 0".into()));
    }
    let mut scheme = SaddleScheme {
        problem,
        variant: Variant::Classic { r: params.r, s: params.s },
        metric: None,
    };
    run_scheme(&mut scheme, "pdhg", serde_json::to_value(params)?, start, &params.control)
}
