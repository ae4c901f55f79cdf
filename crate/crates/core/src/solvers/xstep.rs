//! Shared machinery for the primal subproblem
//! `argmin_{x ∈ X} θ(x) − ⟨μ, Ax − b⟩ + ½‖x − x^k‖²_M` with `M = rAᵀA + Q`.
//!
//! Three exact routes exist:
//! - `Q = τI − rAᵀA` (prox form): `M = τI` and the subproblem is the plain
//!   prox `prox_{θ,τ}(x^k + Aᵀμ/τ)`,
//! - explicit `Q` whose `M` comes out spherical: same prox with the
//!   detected weight,
//! - explicit `Q` with quadratic `θ`: a linear solve in `(P + M)`,
//!   factorized once.
//!
//! Anything else has no closed-form subproblem and is rejected up front.

use ndarray::{Array1, Array2};

use crate::linalg::{spectral_norm_sq, Cholesky};
use crate::prox::ProxKind;
use crate::solvers::QSpec;
use crate::{Error, Result};

/// Relative margin required of `τ − r·ρ̂(AᵀA)` for a prox-form metric.
pub(crate) const PROX_FORM_MARGIN: f64 = 1e-12;

/// Safety factor applied when auto-selecting `τ = 1.01·r·ρ̂`.
pub(crate) const AUTO_TAU_FACTOR: f64 = 1.01;

/// The primal metric `M = rAᵀA + Q`, kept in whatever form allows exact
/// application without densifying spherical cases.
#[derive(Debug, Clone)]
pub(crate) enum PrimalMetric {
    Spherical(f64),
    Dense(Array2<f64>),
}

impl PrimalMetric {
    pub(crate) fn apply(&self, v: &Array1<f64>) -> Array1<f64> {
        match self {
            PrimalMetric::Spherical(tau) => v.mapv(|t| tau * t),
            PrimalMetric::Dense(m) => m.dot(v),
        }
    }
}

/// How the `x`-subproblem is solved each iteration.
#[derive(Debug, Clone)]
pub(crate) enum XStep {
    /// `prox_{θ,τ}(x^k + Aᵀμ/τ)`.
    Prox { tau: f64 },
    /// `(P + M) x = M x^k + Aᵀμ − q` for quadratic `θ = ½xᵀPx + qᵀx`.
    QuadSolve { chol: Cholesky },
}

/// Everything the solvers need per block: the subproblem route and the
/// metric `M` it implies.
#[derive(Debug, Clone)]
pub(crate) struct PrimalBlock {
    pub step: XStep,
    pub metric: PrimalMetric,
}

/// Validates `(r, q_spec)` against one coupling matrix and objective term and
/// builds the subproblem solver.
pub(crate) fn build_primal_block(
    a: &Array2<f64>,
    theta: &ProxKind,
    r: f64,
    q_spec: &QSpec,
) -> Result<PrimalBlock> {
    if !(r > 0.0) {
        return Err(Error::InvalidParam(format!("penalty parameter r = {r} must be > 0")));
    }
    let n = a.ncols();
    let rho_hat = spectral_norm_sq(a);
    match q_spec {
        QSpec::ProxForm(tau) => {
            if !(tau - r * rho_hat > PROX_FORM_MARGIN * tau) {
                return Err(Error::InvalidParam(format!(
                    "prox-form weight tau = {tau} must exceed r·ρ(AᵀA) ≈ {:.6e}",
                    r * rho_hat
                )));
            }
            Ok(PrimalBlock {
                step: XStep::Prox { tau: *tau },
                metric: PrimalMetric::Spherical(*tau),
            })
        }
        QSpec::ExplicitQ(q) => {
            if q.nrows() != n || q.ncols() != n {
                return Err(Error::Dimension(format!(
                    "explicit Q is {}x{}, expected {n}x{n}",
                    q.nrows(),
                    q.ncols()
                )));
            }
            let scale = q.iter().fold(1.0f64, |s, v| s.max(v.abs()));
            for i in 0..n {
                for j in 0..i {
                    if (q[(i, j)] - q[(j, i)]).abs() > 1e-12 * scale {
                        return Err(Error::InvalidParam("explicit Q is not symmetric".into()));
                    }
                }
            }
            // positive definiteness via a factorization attempt
            Cholesky::new(q).map_err(|_| {
                Error::InvalidParam("explicit Q is not positive definite".into())
            })?;
            // M = rAᵀA + Q
            let mut m = a.t().dot(a);
            m.mapv_inplace(|v| r * v);
            m += q;

            if let ProxKind::Quadratic { p, q: _ } = theta {
                let chol = Cholesky::new(&(p + &m)).map_err(|_| {
                    Error::Numerical("P + rAᵀA + Q could not be factorized".into())
                })?;
                return Ok(PrimalBlock {
                    step: XStep::QuadSolve { chol },
                    metric: PrimalMetric::Dense(m),
                });
            }

            // spherical detection: M = τI within 1e-12 relative
            let mean_diag = (0..n).map(|i| m[(i, i)]).sum::<f64>() / n as f64;
            let spherical = (0..n).all(|i| {
                (0..n).all(|j| {
                    let target = if i == j { mean_diag } else { 0.0 };
                    (m[(i, j)] - target).abs() <= 1e-12 * mean_diag.abs().max(1.0)
                })
            });
            if spherical && mean_diag > 0.0 {
                return Ok(PrimalBlock {
                    step: XStep::Prox { tau: mean_diag },
                    metric: PrimalMetric::Dense(m),
                });
            }
            Err(Error::Unsupported(
                "explicit Q makes rAᵀA + Q non-spherical; closed-form subproblems then exist \
                 only for quadratic objectives"
                    .into(),
            ))
        }
    }
}

impl PrimalBlock {
    /// Solves `argmin_x θ(x) + ½‖x − x_k‖²_M − ⟨at_mu, x⟩` where `at_mu`
    /// is the already-applied `Aᵀμ`.
    pub(crate) fn solve(
        &self,
        theta: &ProxKind,
        x_k: &Array1<f64>,
        at_mu: &Array1<f64>,
    ) -> Result<Array1<f64>> {
        match &self.step {
            XStep::Prox { tau } => {
                let center = x_k + &at_mu.mapv(|v| v / tau);
                theta.prox(&center, *tau)
            }
            XStep::QuadSolve { chol } => {
                let ProxKind::Quadratic { q, .. } = theta else {
                    return Err(Error::Unsupported("quadratic solve route requires a quadratic objective".into()));
                };
                let rhs = self.metric.apply(x_k) + at_mu - q;
                Ok(chol.solve(&rhs))
            }
        }
    }
}
