//! Dual-primal variant of the multi-block splitting.
//!
//! The multiplier moves first, from the *current* primal point; the blocks
//! then update in parallel against the extrapolated multiplier:
//!
//! ```text
//! λ^{k+1} = λ^k − (Σ_j 1/r_j)⁻¹ (Σ_i A_i x_i^k − b)
//! for i = 1..p in parallel:
//!   x_i^{k+1} = argmin_{x_i∈X_i} θ_i(x_i) − ⟨2λ^{k+1} − λ^k, A_i x_i⟩
//!               + ½‖x_i − x_i^k‖²_{Q_i + s_i I}
//! ```
//!
//! `Q_i` must dominate `r_i A_iᵀA_i`; this implementation always takes the
//! spherical choice `Q_i = 1.01·r_i·ρ̂(A_iᵀA_i)·I`, so every primal step is a
//! plain prox with weight `q_i + s_i`.

use ndarray::{s, Array1};
use serde::{Deserialize, Serialize};

use crate::certify::{DualPrimalTerm, MetricH};
use crate::linalg::spectral_norm_sq;
use crate::model::{Sense, SeparableProblem};
use crate::prox::project_nonneg;
use crate::solvers::xstep::AUTO_TAU_FACTOR;
use crate::solvers::{run_scheme, IterControl, Iterate, Scheme, SolveTrace};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct DpalmBlock {
    /// Contribution to the shared dual step, `r > 0`.
    pub r: f64,
    /// Extra primal proximal weight, `s > 0`.
    pub s: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DpalmParams {
    pub blocks: Vec<DpalmBlock>,
    #[serde(flatten)]
    pub control: IterControl,
}

impl DpalmParams {
    pub fn defaults_for(problem: &SeparableProblem) -> Self {
        Self {
            blocks: vec![DpalmBlock { r: 1.0, s: 1.0 }; problem.p()],
            control: IterControl::default(),
        }
    }
}

fn dual_step_size(rs: &[f64]) -> f64 {
    if rs.len() == 1 {
        rs[0]
    } else {
        1.0 / rs.iter().map(|r| 1.0 / r).sum::<f64>()
    }
}

fn q_scales(problem: &SeparableProblem, params: &DpalmParams) -> Vec<f64> {
    problem
        .blocks
        .iter()
        .zip(&params.blocks)
        .map(|(bl, pb)| AUTO_TAU_FACTOR * pb.r * spectral_norm_sq(&bl.a))
        .collect()
}

/// Certification metric: block-diagonal `Q_i + s_i I` with negated coupling
/// `−A_iᵀ` against the shared multiplier block `(Σ 1/r_i) I`.
pub fn dpalm_metric(problem: &SeparableProblem, params: &DpalmParams) -> Result<MetricH> {
    if params.blocks.len() != problem.p() {
        return Err(Error::InvalidParam(format!(
            "{} parameter blocks for {} problem blocks",
            params.blocks.len(),
            problem.p()
        )));
    }
    let qs = q_scales(problem, params);
    let terms = problem
        .blocks
        .iter()
        .zip(&params.blocks)
        .zip(qs)
        .map(|((bl, pb), q)| DualPrimalTerm { r: pb.r, q_scale: q, s: pb.s, a: bl.a.clone() })
        .collect();
    MetricH::dual_primal(terms)
}

struct DpalmScheme<'a> {
    problem: &'a SeparableProblem,
    taus: Vec<f64>, // q_i + s_i
    offsets: Vec<usize>,
    dual_step: f64,
    metric: MetricH,
}

impl DpalmScheme<'_> {
    fn split<'w>(&self, x: &'w Array1<f64>, i: usize) -> ndarray::ArrayView1<'w, f64> {
        x.slice(s![self.offsets[i]..self.offsets[i + 1]])
    }
}

impl Scheme for DpalmScheme<'_> {
    fn step(&mut self, w: &Iterate) -> Result<Iterate> {
        let p = self.problem;
        let parts: Vec<Array1<f64>> = (0..p.p()).map(|i| self.split(&w.x, i).to_owned()).collect();
        let coupling = p.coupling(&parts);
        let mut dual = &w.dual - &(&coupling - &p.b).mapv(|v| self.dual_step * v);
        if p.sense == Sense::Ge {
            dual = project_nonneg(&dual);
        }
        let extrap_mu = &dual.mapv(|v| 2.0 * v) - &w.dual;
        let mut x_next = Array1::<f64>::zeros(w.x.len());
        for (i, part) in parts.iter().enumerate() {
            let bl = &p.blocks[i];
            let tau = self.taus[i];
            let center = part + &bl.a.t().dot(&extrap_mu).mapv(|v| v / tau);
            let xi = bl.theta.prox(&center, tau)?;
            x_next.slice_mut(s![self.offsets[i]..self.offsets[i + 1]]).assign(&xi);
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
            let si = dxi.mapv(|v| self.taus[i] * v)
                + self.problem.blocks[i].a.t().dot(&d.dual);
            total += si.dot(&si);
        }
        total.sqrt()
    }
}

/// Runs the scheme from a stacked start `(x⁰, λ⁰)`.
pub fn solve_dpalm(
    problem: &SeparableProblem,
    params: &DpalmParams,
    start: Iterate,
) -> Result<SolveTrace> {
    if params.blocks.len() != problem.p() {
        return Err(Error::InvalidParam(format!(
            "{} parameter blocks for {} problem blocks",
            params.blocks.len(),
            problem.p()
        )));
    }
    for (i, pb) in params.blocks.iter().enumerate() {
        if !(pb.r > 0.0) || !(pb.s > 0.0) {
            return Err(Error::InvalidParam(format!("block {i} needs r > 0 and s > 0")));
        }
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
    let taus: Vec<f64> =
        q_scales(problem, params).iter().zip(&params.blocks).map(|(q, pb)| q + pb.s).collect();
    let metric = dpalm_metric(problem, params)?;
    let dual_step = dual_step_size(&params.blocks.iter().map(|b| b.r).collect::<Vec<_>>());
    let mut scheme = DpalmScheme { problem, taus, offsets, dual_step, metric };
    run_scheme(&mut scheme, "dpalm", serde_json::to_value(params)?, start, &params.control)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Block;
    use crate::prox::ProxKind;
    use ndarray::array;

    fn toy() -> (SeparableProblem, DpalmParams) {
        let problem = SeparableProblem::new(
            vec![Block { a: array![[1.0]], theta: ProxKind::Zero {} }],
            array![1.0],
            Sense::Eq,
        )
        .unwrap();
        let params = DpalmParams {
            blocks: vec![DpalmBlock { r: 1.0, s: 1.0 }],
            control: IterControl { max_iter: 10, ..Default::default() },
        };
        (problem, params)
    }

    /// Scalar toy: ρ̂ = 1 exactly, so Q = 1.01 and the primal weight is 2.01.
    /// λ⁺ = λ − (x − 1); x⁺ = x + (2λ⁺ − λ)/2.01.
    #[test]
    fn scalar_toy_hand_recursion() {
        let (problem, params) = toy();
        let trace = solve_dpalm(&problem, &params, Iterate::zeros(1, 1)).unwrap();
        let tau = 2.01;
        let (mut x, mut l) = (0.0f64, 0.0f64);
        for k in 1..=3 {
            let l_next = l - (x - 1.0);
            let x_next = x + (2.0 * l_next - l) * (1.0 / tau);
            x = x_next;
            l = l_next;
            assert!(
                (trace.iterates[k].x[0] - x).abs() < 1e-14,
                "k = {k}: {} vs {x}",
                trace.iterates[k].x[0]
            );
            assert!((trace.iterates[k].dual[0] - l).abs() < 1e-14);
        }
    }

    #[test]
    fn stationary_at_saddle_point() {
        let (problem, params) = toy();
        let start = Iterate::new(array![1.0], array![0.0]);
        let trace = solve_dpalm(&problem, &params, start.clone()).unwrap();
        assert_eq!(trace.iterates[1], start);
    }

    #[test]
    fn converges_on_scalar_toy() {
        let (problem, mut params) = toy();
        params.control.max_iter = 50_000;
        let trace = solve_dpalm(&problem, &params, Iterate::zeros(1, 1)).unwrap();
        let w = trace.final_iterate();
        assert!((w.x[0] - 1.0).abs() < 1e-7);
    }
}
