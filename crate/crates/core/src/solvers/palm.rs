//! Penalty augmented Lagrangian method.
//!
//! For `min θ(x) s.t. Ax = b (or ≥ b), x ∈ X` the iteration is
//!
//! ```text
//! x^{k+1} = argmin_{x∈X} θ(x) − ⟨λ^k, Ax − b⟩ + ½‖x − x^k‖²_{rAᵀA+Q}
//! λ^{k+1} = λ^k − r[A(2x^{k+1} − x^k) − b]        (projected onto λ ≥ 0 for Ax ≥ b)
//! ```
//!
//! With `Q = τI − rAᵀA` (any `τ > r·ρ(AᵀA)`) the primal subproblem collapses
//! to `prox_{θ,τ}(x^k + Aᵀλ^k/τ)`, so each iteration costs two matrix-vector
//! products and one prox; the dual step never solves a system. Validity of
//! the parameters does not depend on `ρ(AᵀA)` beyond making `Q` positive
//! definite.

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::certify::{MetricH, QForm};
use crate::model::{ConstrainedProblem, Sense};
use crate::prox::project_nonneg;
use crate::serde_arrays::mat2;
use crate::solvers::xstep::{build_primal_block, PrimalBlock, AUTO_TAU_FACTOR};
use crate::solvers::{run_scheme, IterControl, Iterate, Scheme, SolveTrace};
use crate::{Error, Result};

/// Choice of the proximal weighting `Q` in the primal metric `rAᵀA + Q`.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum QSpec {
    /// `Q = τI − rAᵀA`; requires `τ > r·ρ(AᵀA)`.
    ProxForm(f64),
    /// An explicit symmetric positive definite `Q`.
    ExplicitQ(#[serde(with = "mat2")] Array2<f64>),
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PalmParams {
    /// Penalty / dual step-size parameter, `r > 0`.
    pub r: f64,
    pub q_spec: QSpec,
    #[serde(flatten)]
    pub control: IterControl,
}

impl PalmParams {
    /// Defaults: `r = 1`, `τ = 1.01·r·ρ̂(AᵀA)` with `ρ̂` from power iteration.
    pub fn defaults_for(problem: &ConstrainedProblem) -> Self {
        Self::defaults_with_r(problem, 1.0)
    }

    /// Same auto-selected `τ` for a caller-chosen `r`.
    pub fn defaults_with_r(problem: &ConstrainedProblem, r: f64) -> Self {
        let rho = crate::linalg::spectral_norm_sq(&problem.a);
        PalmParams {
            r,
            q_spec: QSpec::ProxForm(AUTO_TAU_FACTOR * r * rho),
            control: IterControl::default(),
        }
    }

    pub fn with_gamma(mut self, gamma: f64) -> Self {
        self.control.gamma = gamma;
        self
    }
}

/// The certification metric for this scheme:
/// `H = [[rAᵀA + Q, Aᵀ], [A, I/r]]` over `w = (x; λ)`.
pub fn palm_metric(problem: &ConstrainedProblem, params: &PalmParams) -> Result<MetricH> {
    let q = match &params.q_spec {
        QSpec::ProxForm(tau) => QForm::FromProxForm { tau: *tau },
        QSpec::ExplicitQ(q) => QForm::Explicit(q.clone()),
    };
    MetricH::palm(params.r, q, problem.a.clone())
}

struct PalmScheme<'a> {
    problem: &'a ConstrainedProblem,
    r: f64,
    block: PrimalBlock,
    metric: MetricH,
}

impl Scheme for PalmScheme<'_> {
    fn step(&mut self, w: &Iterate) -> Result<Iterate> {
        let p = self.problem;
        let at_lam = p.a.t().dot(&w.dual);
        let x_next = self.block.solve(&p.theta, &w.x, &at_lam)?;
        let extrap = &x_next.mapv(|v| 2.0 * v) - &w.x;
        let mut dual = &w.dual - &(&p.a.dot(&extrap) - &p.b).mapv(|v| self.r * v);
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
        self.problem.primal_residual(&next.x)
    }

    fn objective(&self, w: &Iterate) -> f64 {
        self.problem.theta.eval(&w.x)
    }

    fn dual_residual(&self, prev: &Iterate, next: &Iterate) -> f64 {
        let d = prev.delta(next);
        let s = self.block.metric.apply(&d.x) + self.problem.a.t().dot(&d.dual);
        s.dot(&s).sqrt()
    }
}

/// Runs the scheme from `start = (x⁰, λ⁰)`.
pub fn solve_palm(
    problem: &ConstrainedProblem,
    params: &PalmParams,
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
    let block = build_primal_block(&problem.a, &problem.theta, params.r, &params.q_spec)?;
    let metric = palm_metric(problem, params)?;
    let mut scheme = PalmScheme { problem, r: params.r, block, metric };
    run_scheme(&mut scheme, "palm", serde_json::to_value(params)?, start, &params.control)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::prox::ProxKind;
    use ndarray::array;

    /// θ ≡ 0, A = [1], b = 1, r = 1, τ = 2: the updates reduce to
    /// x⁺ = x + λ/2, λ⁺ = λ − (2x⁺ − x − 1).
    fn scalar_toy() -> (ConstrainedProblem, PalmParams) {
        let p = ConstrainedProblem::new(
            array![[1.0]],
            array![1.0],
            Sense::Eq,
            ProxKind::Zero {},
        )
        .unwrap();
        let params = PalmParams {
            r: 1.0,
            q_spec: QSpec::ProxForm(2.0),
            control: IterControl { max_iter: 10, ..Default::default() },
        };
        (p, params)
    }

    #[test]
    fn scalar_toy_first_steps_are_exact() {
        let (p, params) = scalar_toy();
        let trace = solve_palm(&p, &params, Iterate::zeros(1, 1)).unwrap();
        // hand recursion: (x¹,λ¹) = (0, 1), (x²,λ²) = (0.5, 1), (x³,λ³) = (1, 0.5)
        assert_eq!(trace.iterates[1].x[0], 0.0);
        assert_eq!(trace.iterates[1].dual[0], 1.0);
        assert_eq!(trace.iterates[2].x[0], 0.5);
        assert_eq!(trace.iterates[2].dual[0], 1.0);
        assert_eq!(trace.iterates[3].x[0], 1.0);
        assert_eq!(trace.iterates[3].dual[0], 0.5);
    }

    #[test]
    fn scalar_toy_converges_to_saddle() {
        let (p, mut params) = scalar_toy();
        params.control.max_iter = 10_000;
        let trace = solve_palm(&p, &params, Iterate::zeros(1, 1)).unwrap();
        let w = trace.final_iterate();
        assert!((w.x[0] - 1.0).abs() < 1e-8);
        assert!(w.dual[0].abs() < 1e-8);
    }

    #[test]
    fn stationary_at_saddle_point() {
        let (p, params) = scalar_toy();
        let start = Iterate::new(array![1.0], array![0.0]);
        let trace = solve_palm(&p, &params, start.clone()).unwrap();
        assert_eq!(trace.iterates[1], start);
    }

    #[test]
    fn rejects_tau_below_spectral_bound() {
        let (p, mut params) = scalar_toy();
        params.q_spec = QSpec::ProxForm(0.9); // ρ(AᵀA) = 1
        assert!(solve_palm(&p, &params, Iterate::zeros(1, 1)).is_err());
    }

    #[test]
    fn rejects_indefinite_explicit_q() {
        let (p, mut params) = scalar_toy();
        params.q_spec = QSpec::ExplicitQ(array![[-1.0]]);
        assert!(solve_palm(&p, &params, Iterate::zeros(1, 1)).is_err());
    }

    #[test]
    fn inequality_dual_stays_nonnegative() {
        // min x over x ≥ 0 s.t. x ≥ 1
        let p = ConstrainedProblem::new(
            array![[1.0]],
            array![1.0],
            Sense::Ge,
            ProxKind::LinearNonneg { cost: array![1.0] },
        )
        .unwrap();
        let params = PalmParams {
            r: 1.0,
            q_spec: QSpec::ProxForm(2.0),
            control: IterControl { max_iter: 20_000, ..Default::default() },
        };
        let trace = solve_palm(&p, &params, Iterate::zeros(1, 1)).unwrap();
        assert!(trace.iterates.iter().all(|w| w.dual[0] >= 0.0));
        let w = trace.final_iterate();
        assert!((w.x[0] - 1.0).abs() < 1e-6, "x = {}", w.x[0]);
        // the multiplier converges to the reduced cost 1
        assert!((w.dual[0] - 1.0).abs() < 1e-6, "λ = {}", w.dual[0]);
    }
}
