//! Balanced augmented Lagrangian method (baseline).
//!
//! ```text
//! x^{k+1} = argmin_{x∈X} θ(x) − ⟨λ^k, Ax − b⟩ + (r/2)‖x − x^k‖²
//!         = prox_{θ,r}(x^k + Aᵀλ^k/r)
//! λ^{k+1}: ((1/r)AAᵀ + δI)(λ^{k+1} − λ^k) = −(A(2x^{k+1} − x^k) − b)
//! ```
//!
//! The primal step is a plain prox with weight `r` (no spectral condition at
//! all), at the price of an `m×m` linear solve in the dual update; the system
//! matrix is factorized once per run and reused.
//!
//! Inequality constraints `Ax ≥ b` are handled by the equivalent equality
//! form `Ax − s = b, s ≥ 0`: the scheme runs on the augmented variable
//! `z = (x; s)` with coupling `[A, −I]`, whose prox stays closed-form. Traces
//! of such runs carry the augmented primal part.

use ndarray::{s, Array1, Array2};
use serde::{Deserialize, Serialize};

use crate::certify::{DualW, MetricH};
use crate::linalg::Cholesky;
use crate::model::{ConstrainedProblem, Sense};
use crate::prox::project_nonneg;
use crate::solvers::{run_scheme, IterControl, Iterate, Scheme, SolveTrace};
use crate::{Error, Result};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BalmParams {
    /// Primal prox weight and dual scaling, `r > 0`.
    pub r: f64,
    /// Dual regularization, `δ > 0`.
    pub delta: f64,
    #[serde(flatten)]
    pub control: IterControl,
}

impl Default for BalmParams {
    fn default() -> Self {
        Self { r: 1.0, delta: 1.0, control: IterControl::default() }
    }
}

/// Coupling matrix the scheme actually iterates with: `A` for equality
/// problems, `[A, −I]` for `Ax ≥ b`.
fn effective_matrix(problem: &ConstrainedProblem) -> Array2<f64> {
    let (m, n) = problem.dims();
    match problem.sense {
        Sense::Eq => problem.a.clone(),
        Sense::Ge => {
            let mut at = Array2::<f64>::zeros((m, n + m));
            at.slice_mut(s![.., ..n]).assign(&problem.a);
            for i in 0..m {
                at[(i, n + i)] = -1.0;
            }
            at
        }
    }
}

/// Certification metric `H̃ = [[rI, Ãᵀ], [Ã, (1/r)ÃÃᵀ + δI]]` over the
/// iterated variable `(z; λ)`.
pub fn balm_metric(problem: &ConstrainedProblem, params: &BalmParams) -> Result<MetricH> {
    MetricH::npdhg2(params.r, DualW::ShiftedSpherical(params.delta), effective_matrix(problem))
}

/// Maps a point in original coordinates into the coordinates this scheme
/// iterates with (appending the slack `max(Ax − b, 0)` for `Ax ≥ b`).
pub fn augmented_point(problem: &ConstrainedProblem, w: &Iterate) -> Iterate {
    match problem.sense {
        Sense::Eq => w.clone(),
        Sense::Ge => {
            let slack = project_nonneg(&(&problem.a.dot(&w.x) - &problem.b));
            let n = w.x.len();
            let mut z = Array1::<f64>::zeros(n + slack.len());
            z.slice_mut(s![..n]).assign(&w.x);
            z.slice_mut(s![n..]).assign(&slack);
            Iterate::new(z, w.dual.clone())
        }
    }
}

struct BalmScheme<'a> {
    problem: &'a ConstrainedProblem,
    r: f64,
    a_tilde: Array2<f64>,
    n: usize,
    dual_chol: Cholesky,
    metric: MetricH,
}

impl BalmScheme<'_> {
    fn prox_z(&self, center_x: Array1<f64>, center_s: Option<Array1<f64>>) -> Result<Array1<f64>> {
        let x = self.problem.theta.prox(&center_x, self.r)?;
        match center_s {
            None => Ok(x),
            Some(cs) => {
                let s_part = project_nonneg(&cs);
                let mut z = Array1::<f64>::zeros(x.len() + s_part.len());
                z.slice_mut(s![..x.len()]).assign(&x);
                z.slice_mut(s![x.len()..]).assign(&s_part);
                Ok(z)
            }
        }
    }
}

impl Scheme for BalmScheme<'_> {
    fn step(&mut self, w: &Iterate) -> Result<Iterate> {
        let at_lam = self.a_tilde.t().dot(&w.dual);
        let center = &w.x + &at_lam.mapv(|v| v / self.r);
        let z_next = if self.problem.sense == Sense::Ge {
            self.prox_z(
                center.slice(s![..self.n]).to_owned(),
                Some(center.slice(s![self.n..]).to_owned()),
            )?
        } else {
            self.prox_z(center, None)?
        };
        let extrap = &z_next.mapv(|v| 2.0 * v) - &w.x;
        let g = &self.a_tilde.dot(&extrap) - &self.problem.b;
        let dual = &w.dual - &self.dual_chol.solve(&g);
        Ok(Iterate::new(z_next, dual))
    }

    fn h_step_sq(&self, prev: &Iterate, next: &Iterate) -> f64 {
        let d = prev.delta(next);
        self.metric.quad_form(&d.x, &d.dual)
    }

    fn primal_residual(&self, _prev: &Iterate, next: &Iterate) -> f64 {
        let x = next.x.slice(s![..self.n]).to_owned();
        self.problem.primal_residual(&x)
    }

    fn objective(&self, w: &Iterate) -> f64 {
        self.problem.theta.eval(&w.x.slice(s![..self.n]).to_owned())
    }

    fn dual_residual(&self, prev: &Iterate, next: &Iterate) -> f64 {
        let d = prev.delta(next);
        let s = d.x.mapv(|v| self.r * v) + self.a_tilde.t().dot(&d.dual);
        s.dot(&s).sqrt()
    }
}

/// Runs the scheme from `start = (x⁰, λ⁰)` (original coordinates; for
/// inequality problems the slack starts at `max(Ax⁰ − b, 0)`).
pub fn solve_balm(
    problem: &ConstrainedProblem,
    params: &BalmParams,
    start: Iterate,
) -> Result<SolveTrace> {
    let (m, n) = problem.dims();
    if start.x.len() != n || start.dual.len() != m {
        return Err(Error::Dimension(format!(
            "start point is ({}, {}), problem needs ({n}, {m})",
            start.x.len(),
            start.dual.len()
        )));
    }
    if !(params.r > 0.0) || !(params.delta > 0.0) {
        return Err(Error::InvalidParam("balm needs r > 0 and delta > 0".into()));
    }
    let a_tilde = effective_matrix(problem);
    // W = (1/r)ÃÃᵀ + δI, factorized once
    let mut w_mat = a_tilde.dot(&a_tilde.t());
    w_mat.mapv_inplace(|v| v / params.r);
    for i in 0..m {
        w_mat[(i, i)] += params.delta;
    }
    let dual_chol = Cholesky::new(&w_mat)
        .map_err(|_| Error::Numerical("dual system (1/r)AAᵀ + δI could not be factorized".into()))?;
    let metric = balm_metric(problem, params)?;

    let start = match problem.sense {
        Sense::Eq => start,
        Sense::Ge => {
            let slack = project_nonneg(&(&problem.a.dot(&start.x) - &problem.b));
            let mut z = Array1::<f64>::zeros(n + m);
            z.slice_mut(s![..n]).assign(&start.x);
            z.slice_mut(s![n..]).assign(&slack);
            Iterate::new(z, start.dual)
        }
    };

    let mut scheme = BalmScheme { problem, r: params.r, a_tilde, n, dual_chol, metric };
    run_scheme(&mut scheme, "balm", serde_json::to_value(params)?, start, &params.control)
}
