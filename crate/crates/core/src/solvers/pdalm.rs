//! Parallel primal-dual splitting for multi-block separable problems.
//!
//! All blocks update simultaneously from `(x^k, λ^k)` — there is no
//! Gauss-Seidel sweep — followed by one shared multiplier step whose size is
//! the harmonic combination of the block penalties:
//!
//! ```text
//! for i = 1..p in parallel:
//!   x_i^{k+1} = argmin_{x_i∈X_i} θ_i(x_i) − ⟨λ^k, A_i x_i⟩ + ½‖x_i − x_i^k‖²_{r_iA_iᵀA_i+Q_i}
//! λ^{k+1} = λ^k − (Σ_j 1/r_j)⁻¹ [Σ_i A_i(2x_i^{k+1} − x_i^k) − b]
//! ```
//!
//! With one block this is exactly the single-block penalty scheme (the dual
//! step size reduces to `r₁`).

use ndarray::{s, Array1};
use serde::{Deserialize, Serialize};

use crate::certify::{BlockTerm, MetricH, QForm};
use crate::model::{Sense, SeparableProblem};
use crate::prox::project_nonneg;
use crate::solvers::palm::QSpec;
use crate::solvers::xstep::{build_primal_block, PrimalBlock, AUTO_TAU_FACTOR};
use crate::solvers::{run_scheme, IterControl, Iterate, Scheme, SolveTrace};
use crate::{Error, Result};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PdalmBlock {
    pub r: f64,
    pub q_spec: QSpec,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PdalmParams {
    /// One entry per problem block, in order.
    pub blocks: Vec<PdalmBlock>,
    #[serde(flatten)]
    pub control: IterControl,
}

impl PdalmParams {
    /// Per-block defaults `r_i = 1`, `τ_i = 1.01·r_i·ρ̂(A_iᵀA_i)`.
    pub fn defaults_for(problem: &SeparableProblem) -> Self {
        let blocks = problem
            .blocks
            .iter()
            .map(|bl| {
                let rho = crate::linalg::spectral_norm_sq(&bl.a);
                PdalmBlock { r: 1.0, q_spec: QSpec::ProxForm(AUTO_TAU_FACTOR * rho) }
            })
            .collect();
        Self { blocks, control: IterControl::default() }
    }

    pub fn with_gamma(mut self, gamma: f64) -> Self {
        self.control.gamma = gamma;
        self
    }
}

/// Dual step size `(Σ_j 1/r_j)⁻¹`, reducing to `r₁` exactly when `p = 1`.
fn dual_step_size(rs: &[f64]) -> f64 {
    if rs.len() == 1 {
        rs[0]
    } else {
        1.0 / rs.iter().map(|r| 1.0 / r).sum::<f64>()
    }
}

/// Block-diagonal certification metric with the shared-multiplier coupling.
pub fn pdalm_metric(problem: &SeparableProblem, params: &PdalmParams) -> Result<MetricH> {
    if params.blocks.len() != problem.p() {
        return Err(Error::InvalidParam(format!(
            "{} parameter blocks for {} problem blocks",
            params.blocks.len(),
            problem.p()
        )));
    }
    let terms = problem
        .blocks
        .iter()
        .zip(&params.blocks)
        .map(|(bl, pb)| BlockTerm {
            r: pb.r,
            q: match &pb.q_spec {
                QSpec::ProxForm(tau) => QForm::FromProxForm { tau: *tau },
                QSpec::ExplicitQ(q) => QForm::Explicit(q.clone()),
            },
            a: bl.a.clone(),
        })
        .collect();
    MetricH::block(terms)
}

struct PdalmScheme<'a> {
    problem: &'a SeparableProblem,
    primal: Vec<PrimalBlock>,
    offsets: Vec<usize>,
    dual_step: f64,
    metric: MetricH,
}

impl PdalmScheme<'_> {
    fn split<'w>(&self, x: &'w Array1<f64>, i: usize) -> ndarray::ArrayView1<'w, f64> {
        x.slice(s![self.offsets[i]..self.offsets[i + 1]])
    }
}

impl Scheme for PdalmScheme<'_> {
    fn step(&mut self, w: &Iterate) -> Result<Iterate> {
        let p = self.problem;
        let mut x_next = Array1::<f64>::zeros(w.x.len());
        let mut coupling = Array1::<f64>::zeros(p.m());
        for i in 0..p.p() {
            let bl = &p.blocks[i];
            let xi = self.split(&w.x, i).to_owned();
            let at_lam = bl.a.t().dot(&w.dual);
            let xi_next = self.primal[i].solve(&bl.theta, &xi, &at_lam)?;
            coupling += &bl.a.dot(&(&xi_next.mapv(|v| 2.0 * v) - &xi));
            x_next.slice_mut(s![self.offsets[i]..self.offsets[i + 1]]).assign(&xi_next);
        }
        let mut dual = &w.dual - &(&coupling - &p.b).mapv(|v| self.dual_step * v);
        if p.sense == Sense::Ge {
            dual = project_nonneg(&dual);
        }
        Ok(Iterate::new(x_next, dual))
    }

    fn h_step_sq(&self, prev: &Iterate, next: &Iterate) -> f64 {
        let d = prev.delta(next);
        self.metric.quad_form(&d.x, &d.dual)
    }

    fn primal_residual(&self, _prev: &Iterate, next: &Iterate) -> f64 {
        let parts: Vec<Array1<f64>> =
            (0..self.problem.p()).map(|i| self.split(&next.x, i).to_owned()).collect();
        self.problem.primal_residual(&parts)
    }

    fn objective(&self, w: &Iterate) -> f64 {
        (0..self.problem.p())
            .map(|i| self.problem.blocks[i].theta.eval(&self.split(&w.x, i).to_owned()))
            .sum()
    }

    fn dual_residual(&self, prev: &Iterate, next: &Iterate) -> f64 {
        let d = prev.delta(next);
        let mut total = 0.0;
        for i in 0..self.problem.p() {
            let dxi = self.split(&d.x, i).to_owned();
            let si = self.primal[i].metric.apply(&dxi)
                + self.problem.blocks[i].a.t().dot(&d.dual);
            total += si.dot(&si);
        }
        total.sqrt()
    }
}

/// Runs the scheme from a stacked start `(x⁰ = (x₁⁰; …; x_p⁰), λ⁰)`.
pub fn solve_pdalm(
    problem: &SeparableProblem,
    params: &PdalmParams,
    start: Iterate,
) -> Result<SolveTrace> {
    if params.blocks.len() != problem.p() {
        return Err(Error::InvalidParam(format!(
            "{} parameter blocks for {} problem blocks",
            params.blocks.len(),
            problem.p()
        )));
    }
    let dims = problem.block_dims();
    let n: usize = dims.iter().sum();
    if start.x.len() != n || start.dual.len() != problem.m() {
        return Err(Error::Dimension(format!(
            "start point is ({}, {}), problem needs ({n}, {})",
            start.x.len(),
            start.dual.len(),
            problem.m()
        )));
    }
    let mut offsets = vec![0usize];
    for d in &dims {
        offsets.push(offsets.last().unwrap() + d);
    }
    let primal = problem
        .blocks
        .iter()
        .zip(&params.blocks)
        .map(|(bl, pb)| build_primal_block(&bl.a, &bl.theta, pb.r, &pb.q_spec))
        .collect::<Result<Vec<_>>>()?;
    let metric = pdalm_metric(problem, params)?;
    let dual_step = dual_step_size(&params.blocks.iter().map(|b| b.r).collect::<Vec<_>>());
    let mut scheme = PdalmScheme { problem, primal, offsets, dual_step, metric };
    run_scheme(&mut scheme, "pdalm", serde_json::to_value(params)?, start, &params.control)
}
