//! Numerical certificates for the convergence theory.
//!
//! Every scheme in this crate is a proximal-point iteration in a scheme-
//! specific symmetric positive definite metric `H`, and its convergence
//! claims are concrete inequalities over the recorded iterates:
//!
//! - contraction: `‖w*−w^{k+1}‖²_H ≤ ‖w*−w^k‖²_H − ‖w^k−w^{k+1}‖²_H`
//!   (relaxed runs use the coefficient `(2−γ)/γ` on the step term),
//! - the pointwise rate `min_{t≤k} ‖w^{t−1}−w^t‖²_H ≤ ‖w*−w⁰‖²_H / k`,
//! - the ergodic gap bound
//!   `θ(x_T) − θ(x) + ⟨w_T − w, J(w)⟩ ≤ ‖w^κ − w‖²_H / (2(T+1))`,
//! - the ball-restricted objective/feasibility certificate built from
//!   `γ_η = sup_{‖λ‖≤η} ‖(x*; λ) − w^κ‖²_H`.
//!
//! `MetricH` evaluates `‖·‖²_H` through the factored decomposition of each
//! metric kind — a handful of matrix-vector products — and never assembles
//! the dense `(n+m)²` matrix. All checks use additive slack scaled by the
//! problem magnitude, never relative-only, because the inequalities live
//! near zero at convergence.

use ndarray::{s, Array1, Array2};
use serde::Serialize;

use crate::gen::SplitMix64;
use crate::model::{ConstrainedProblem, Sense};
use crate::solvers::{Iterate, PalmParams, QSpec, SolveTrace};
use crate::{Error, Result};

/// Additive slack `1e-9·(1 + scale)` used by the certificate checks.
pub fn certificate_slack(scale: f64) -> f64 {
    1e-9 * (1.0 + scale)
}

/// The primal weighting `Q` of a metric, kept in factored form.
#[derive(Debug, Clone)]
pub enum QForm {
    /// `Q = τI − rAᵀA`: contributes `τ‖x‖² − r‖Ax‖²`.
    FromProxForm { tau: f64 },
    /// An explicit symmetric positive definite matrix.
    Explicit(Array2<f64>),
}

impl QForm {
    fn apply_quad(&self, x: &Array1<f64>, r: f64, ax_norm_sq: f64) -> f64 {
        match self {
            QForm::FromProxForm { tau } => tau * x.dot(x) - r * ax_norm_sq,
            QForm::Explicit(q) => x.dot(&q.dot(x)),
        }
    }
}

/// One block of the multi-block metric.
#[derive(Debug, Clone)]
pub struct BlockTerm {
    pub r: f64,
    pub q: QForm,
    pub a: Array2<f64>,
}

/// One block of the dual-primal metric (`Q_i = q_scale·I`).
#[derive(Debug, Clone)]
pub struct DualPrimalTerm {
    pub r: f64,
    pub q_scale: f64,
    pub s: f64,
    pub a: Array2<f64>,
}

/// Dual-side weighting of the `[[rI, Aᵀ], [A, W]]` metric.
#[derive(Debug, Clone)]
pub enum DualW {
    /// `W = σI`.
    Spherical(f64),
    /// `W = (1/r)AAᵀ + δI`.
    ShiftedSpherical(f64),
    /// `W = (1/r)AAᵀ + Q`.
    Shifted(Array2<f64>),
}

#[derive(Debug, Clone)]
enum Repr {
    /// `[[rAᵀA + Q, Aᵀ], [A, I/r]]` over `(x; λ)` — also the saddle variant
    /// with a spectral primal metric, over `(x; y)`.
    Palm { r: f64, q: QForm, a: Array2<f64> },
    /// Block-diagonal primal metrics coupled through one multiplier,
    /// lower-right `(Σ 1/r_i)·I`.
    Block { terms: Vec<BlockTerm> },
    /// Dual-primal variant with negated coupling `−A_iᵀ`.
    DualPrimal { terms: Vec<DualPrimalTerm> },
    /// `[[rI, Aᵀ], [A, W]]`.
    DualMetric { r: f64, w: DualW, a: Array2<f64> },
}

/// A symmetric positive definite weighting matrix in factored form.
///
/// Construction samples the quadratic form on 1000 pseudorandom nonzero
/// vectors and fails unless all values are strictly positive.
#[derive(Debug, Clone)]
pub struct MetricH {
    repr: Repr,
    x_len: usize,
    dual_len: usize,
}

impl MetricH {
    pub fn palm(r: f64, q: QForm, a: Array2<f64>) -> Result<Self> {
        if !(r > 0.0) {
            return Err(Error::InvalidParam("metric needs r > 0".into()));
        }
        let (m, n) = (a.nrows(), a.ncols());
        Self::validated(Self { repr: Repr::Palm { r, q, a }, x_len: n, dual_len: m })
    }

    /// Saddle-problem variant of the same structure, over `u = (x; y)`.
    pub fn npdhg1(r: f64, q: QForm, a: Array2<f64>) -> Result<Self> {
        Self::palm(r, q, a)
    }

    pub fn block(terms: Vec<BlockTerm>) -> Result<Self> {
        if terms.is_empty() {
            return Err(Error::InvalidParam("metric needs at least one block".into()));
        }
        if terms.iter().any(|t| !(t.r > 0.0)) {
            return Err(Error::InvalidParam("metric needs every r > 0".into()));
        }
        let m = terms[0].a.nrows();
        if terms.iter().any(|t| t.a.nrows() != m) {
            return Err(Error::Dimension("blocks disagree on the multiplier dimension".into()));
        }
        let n = terms.iter().map(|t| t.a.ncols()).sum();
        Self::validated(Self { repr: Repr::Block { terms }, x_len: n, dual_len: m })
    }

    pub fn dual_primal(terms: Vec<DualPrimalTerm>) -> Result<Self> {
        if terms.is_empty() {
            return Err(Error::InvalidParam("metric needs at least one block".into()));
        }
        if terms.iter().any(|t| !(t.r > 0.0) || !(t.s > 0.0)) {
            return Err(Error::InvalidParam("metric needs every r > 0 and s > 0".into()));
        }
        let m = terms[0].a.nrows();
        if terms.iter().any(|t| t.a.nrows() != m) {
            return Err(Error::Dimension("blocks disagree on the multiplier dimension".into()));
        }
        let n = terms.iter().map(|t| t.a.ncols()).sum();
        Self::validated(Self { repr: Repr::DualPrimal { terms }, x_len: n, dual_len: m })
    }

    pub fn npdhg2(r: f64, w: DualW, a: Array2<f64>) -> Result<Self> {
        if !(r > 0.0) {
            return Err(Error::InvalidParam("metric needs r > 0".into()));
        }
        let (m, n) = (a.nrows(), a.ncols());
        Self::validated(Self { repr: Repr::DualMetric { r, w, a }, x_len: n, dual_len: m })
    }

    fn validated(self) -> Result<Self> {
        let mut rng = SplitMix64::new(0x5DEECE66D);
        for _ in 0..1000 {
            let x = Array1::from_shape_fn(self.x_len, |_| rng.next_normal());
            let dual = Array1::from_shape_fn(self.dual_len, |_| rng.next_normal());
            let v = self.quad_form(&x, &dual);
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::Numerical(format!(
                    "metric failed the positivity sample (wᵀHw = {v:e})"
                )));
            }
        }
        Ok(self)
    }

    /// `(primal length, dual length)` of the weighted space.
    pub fn dims(&self) -> (usize, usize) {
        (self.x_len, self.dual_len)
    }

    /// Smallest sampled value of `wᵀHw` over `samples` pseudorandom unit-
    /// scale vectors; positive for a well-formed metric.
    pub fn positivity_margin(&self, samples: usize) -> f64 {
        let mut rng = SplitMix64::new(0x5DEECE66D);
        let mut worst = f64::INFINITY;
        for _ in 0..samples {
            let x = Array1::from_shape_fn(self.x_len, |_| rng.next_normal());
            let dual = Array1::from_shape_fn(self.dual_len, |_| rng.next_normal());
            worst = worst.min(self.quad_form(&x, &dual));
        }
        worst
    }

    /// `‖(x; dual)‖²_H` via the factored decomposition.
    pub fn quad_form(&self, x: &Array1<f64>, dual: &Array1<f64>) -> f64 {
        debug_assert_eq!(x.len(), self.x_len);
        debug_assert_eq!(dual.len(), self.dual_len);
        match &self.repr {
            Repr::Palm { r, q, a } => {
                let ax = a.dot(x);
                let sr = r.sqrt();
                let mut t = 0.0;
                for i in 0..ax.len() {
                    let v = sr * ax[i] + dual[i] / sr;
                    t += v * v;
                }
                t + q.apply_quad(x, *r, ax.dot(&ax))
            }
            Repr::Block { terms } => {
                let mut total = 0.0;
                let mut start = 0;
                for term in terms {
                    let ni = term.a.ncols();
                    let xi = x.slice(s![start..start + ni]).to_owned();
                    start += ni;
                    let ax = term.a.dot(&xi);
                    let sr = term.r.sqrt();
                    for i in 0..ax.len() {
                        let v = sr * ax[i] + dual[i] / sr;
                        total += v * v;
                    }
                    total += term.q.apply_quad(&xi, term.r, ax.dot(&ax));
                }
                total
            }
            Repr::DualPrimal { terms } => {
                let mut total = 0.0;
                let mut start = 0;
                for term in terms {
                    let ni = term.a.ncols();
                    let xi = x.slice(s![start..start + ni]).to_owned();
                    start += ni;
                    let ax = term.a.dot(&xi);
                    let sr = term.r.sqrt();
                    for i in 0..ax.len() {
                        let v = sr * ax[i] - dual[i] / sr;
                        total += v * v;
                    }
                    total += (term.s + term.q_scale) * xi.dot(&xi) - term.r * ax.dot(&ax);
                }
                total
            }
            Repr::DualMetric { r, w, a } => {
                let aty = a.t().dot(dual);
                let sr = r.sqrt();
                let mut t = 0.0;
                for i in 0..x.len() {
                    let v = sr * x[i] + aty[i] / sr;
                    t += v * v;
                }
                match w {
                    DualW::Spherical(sigma) => {
                        t - aty.dot(&aty) / r + sigma * dual.dot(dual)
                    }
                    DualW::ShiftedSpherical(delta) => t + delta * dual.dot(dual),
                    DualW::Shifted(q) => t + dual.dot(&q.dot(dual)),
                }
            }
        }
    }

    /// Same form over a stacked vector `w = (x; dual)`.
    pub fn quad_form_stacked(&self, w: &Array1<f64>) -> Result<f64> {
        if w.len() != self.x_len + self.dual_len {
            return Err(Error::Dimension(format!(
                "stacked vector has length {}, metric weighs {} + {}",
                w.len(),
                self.x_len,
                self.dual_len
            )));
        }
        let x = w.slice(s![..self.x_len]).to_owned();
        let dual = w.slice(s![self.x_len..]).to_owned();
        Ok(self.quad_form(&x, &dual))
    }

    /// `‖w‖²_H` of an iterate.
    pub fn norm_sq(&self, w: &Iterate) -> f64 {
        self.quad_form(&w.x, &w.dual)
    }

    /// `‖a − b‖²_H`.
    pub fn dist_sq(&self, a: &Iterate, b: &Iterate) -> f64 {
        self.quad_form(&(&a.x - &b.x), &(&a.dual - &b.dual))
    }
}

/// `‖w‖²_H` over a stacked vector; the public entry point mirroring the
/// factored evaluation.
pub fn h_quadratic_form(h: &MetricH, w: &Array1<f64>) -> Result<f64> {
    h.quad_form_stacked(w)
}

/// The affine monotone map of the optimality system,
/// `J(w) = (−Aᵀλ; Ax − b)`; skew-symmetric in the sense
/// `⟨w − w̄, J(w) − J(w̄)⟩ = 0`.
pub fn j_map(problem: &ConstrainedProblem, w: &Iterate) -> Iterate {
    Iterate::new(-problem.a.t().dot(&w.dual), &problem.a.dot(&w.x) - &problem.b)
}

/// Per-iteration result of the contraction check.
#[derive(Debug, Clone, Serialize)]
pub struct ContractionReport {
    pub pass: bool,
    /// `‖w*−w^k‖²_H − coeff·‖w^k−w^{k+1}‖²_H − ‖w*−w^{k+1}‖²_H` per iteration;
    /// nonnegative (up to slack) when the scheme contracts.
    pub margins: Vec<f64>,
    pub worst_margin: f64,
    /// 1-based iteration index of the worst margin (0 when there are none).
    pub worst_iteration: usize,
}

/// Checks the contraction inequality at every recorded iteration against a
/// reference solution `w_star`. Relaxed traces (`γ ≠ 1`) are checked with the
/// step coefficient `(2−γ)/γ`.
pub fn check_contraction(
    trace: &SolveTrace,
    h: &MetricH,
    w_star: &Iterate,
    slack: f64,
) -> Result<ContractionReport> {
    if !trace.has_full_history() {
        return Err(Error::InvalidParam(
            "contraction check needs a trace with its full iterate history".into(),
        ));
    }
    let gamma = trace.gamma();
    let coeff = (2.0 - gamma) / gamma;
    let mut margins = Vec::with_capacity(trace.iterations());
    let mut dist_prev = h.dist_sq(w_star, &trace.iterates[0]);
    let mut worst = f64::INFINITY;
    let mut worst_iter = 0usize;
    for k in 0..trace.iterations() {
        let next = &trace.iterates[k + 1];
        let dist_next = h.dist_sq(w_star, next);
        let step = h.dist_sq(&trace.iterates[k], next);
        let margin = dist_prev - coeff * step - dist_next;
        if margin < worst {
            worst = margin;
            worst_iter = k + 1;
        }
        margins.push(margin);
        dist_prev = dist_next;
    }
    let pass = margins.iter().all(|&m| m >= -slack);
    let worst_margin = if margins.is_empty() { 0.0 } else { worst };
    Ok(ContractionReport { pass, margins, worst_margin, worst_iteration: worst_iter })
}

/// Running mean of the iterates `w^{k+1}`, `k = κ, …, κ+T`.
#[derive(Debug, Clone)]
pub struct ErgodicAverage {
    pub kappa: usize,
    /// Window length parameter `T` (the mean runs over `T + 1` points).
    pub t: usize,
    pub w: Iterate,
}

impl ErgodicAverage {
    /// The averaged primal point `x_T`.
    pub fn x(&self) -> &Array1<f64> {
        &self.w.x
    }
}

pub fn ergodic_average(trace: &SolveTrace, kappa: usize, t: usize) -> Result<ErgodicAverage> {
    if !trace.has_full_history() {
        return Err(Error::InvalidParam("ergodic average needs the full iterate history".into()));
    }
    if kappa + t + 1 > trace.iterations() {
        return Err(Error::InvalidParam(format!(
            "window κ = {kappa}, T = {t} exceeds the {} recorded iterations",
            trace.iterations()
        )));
    }
    let n = trace.iterates[0].x.len();
    let m = trace.iterates[0].dual.len();
    let mut sum = Iterate::zeros(n, m);
    for k in kappa..=kappa + t {
        let w = &trace.iterates[k + 1];
        sum.x += &w.x;
        sum.dual += &w.dual;
    }
    let c = 1.0 / (t as f64 + 1.0);
    Ok(ErgodicAverage {
        kappa,
        t,
        w: Iterate::new(sum.x.mapv(|v| c * v), sum.dual.mapv(|v| c * v)),
    })
}

/// One probe's outcome in the ergodic-bound check.
#[derive(Debug, Clone, Serialize)]
pub struct ErgodicReport {
    pub pass: bool,
    /// `RHS + slack − LHS` per probe; nonnegative when the bound holds.
    pub margins: Vec<f64>,
    pub worst_margin: f64,
}

/// Verifies the ergodic gap bound at each probe `w ∈ X × Λ`:
/// `θ(x_T) − θ(x) + ⟨w_T − w, J(w)⟩ ≤ ‖w^κ − w‖²_H / (2(T+1))`
/// with slack `1e-9·(1 + ‖w^κ − w‖²_H)`.
pub fn check_ergodic_bound(
    trace: &SolveTrace,
    problem: &ConstrainedProblem,
    h: &MetricH,
    kappa: usize,
    t: usize,
    probes: &[Iterate],
) -> Result<ErgodicReport> {
    let avg = ergodic_average(trace, kappa, t)?;
    let w_kappa = &trace.iterates[kappa];
    let theta_xt = problem.theta.eval(avg.x());
    let mut margins = Vec::with_capacity(probes.len());
    for probe in probes {
        if !problem.theta.contains(&probe.x) {
            return Err(Error::InvalidParam("probe x is not feasible for X".into()));
        }
        if problem.sense == Sense::Ge && probe.dual.iter().any(|&v| v < 0.0) {
            return Err(Error::InvalidParam("probe multiplier must be nonnegative".into()));
        }
        let j = j_map(problem, probe);
        let inner = (&avg.w.x - &probe.x).dot(&j.x) + (&avg.w.dual - &probe.dual).dot(&j.dual);
        let lhs = theta_xt - problem.theta.eval(&probe.x) + inner;
        let dist = h.dist_sq(w_kappa, probe);
        let rhs = dist / (2.0 * (t as f64 + 1.0));
        margins.push(rhs + certificate_slack(dist) - lhs);
    }
    let pass = margins.iter().all(|&m| m >= 0.0);
    let worst_margin = margins.iter().cloned().fold(f64::INFINITY, f64::min);
    Ok(ErgodicReport { pass, margins, worst_margin })
}

/// `sup_{‖λ‖ ≤ η} ‖(x*; λ) − w^κ‖²_H` for the `[[rAᵀA+Q, Aᵀ], [A, I/r]]`
/// metric, in closed form.
///
/// Writing `d = x* − x^κ` the quadratic in `λ` is
/// `f(λ) = (1/r)‖λ − λ^κ‖² + 2(Ad)ᵀ(λ − λ^κ) + ‖d‖²_{rAᵀA+Q}`;
/// on the sphere `‖λ‖ = η` the quadratic term is the constant `η²/r`, so the
/// supremum over the ball sits on the sphere, aligned with the gradient
/// `g = Ad − λ^κ/r`:
/// `γ_η = η²/r + 2η‖g‖ + (1/r)‖λ^κ‖² − 2(Ad)ᵀλ^κ + ‖d‖²_{rAᵀA+Q}`.
pub fn gamma_eta(h: &MetricH, w_kappa: &Iterate, x_star: &Array1<f64>, eta: f64) -> Result<f64> {
    if !(eta > 0.0) {
        return Err(Error::InvalidParam(format!("gamma_eta needs eta > 0, got {eta}")));
    }
    let Repr::Palm { r, q, a } = &h.repr else {
        return Err(Error::Unsupported(
            "gamma_eta is defined for the single-block (x; λ) metric".into(),
        ));
    };
    if x_star.len() != h.x_len {
        return Err(Error::Dimension("x_star length does not match the metric".into()));
    }
    let d = x_star - &w_kappa.x;
    let ad = a.dot(&d);
    let g = &ad - &w_kappa.dual.mapv(|v| v / r);
    let m_term = {
        let ax_norm_sq = ad.dot(&ad);
        match q {
            QForm::FromProxForm { tau } => tau * d.dot(&d),
            QForm::Explicit(qm) => r * ax_norm_sq + d.dot(&qm.dot(&d)),
        }
    };
    Ok(eta * eta / r
        + 2.0 * eta * g.dot(&g).sqrt()
        + w_kappa.dual.dot(&w_kappa.dual) / r
        - 2.0 * ad.dot(&w_kappa.dual)
        + m_term)
}

/// Limit of [`gamma_eta`] as `η → 0`: the ball collapses to `λ = 0`.
pub fn gamma_eta_zero_limit(h: &MetricH, w_kappa: &Iterate, x_star: &Array1<f64>) -> Result<f64> {
    let d = x_star - &w_kappa.x;
    h.quad_form_stacked(&{
        let mut w = Array1::zeros(h.x_len + h.dual_len);
        w.slice_mut(s![..h.x_len]).assign(&d);
        w.slice_mut(s![h.x_len..]).assign(&w_kappa.dual.mapv(|v| -v));
        w
    })
}

/// Norm of the dual residual `s^t = (rAᵀA + Q)(x^t − x^{t−1}) + Aᵀ(λ^t − λ^{t−1})`
/// recomputed from a stored trace (`t ≥ 1`, 1-based).
pub fn dual_residual(
    trace: &SolveTrace,
    problem: &ConstrainedProblem,
    params: &PalmParams,
    t: usize,
) -> Result<f64> {
    if t == 0 {
        return Err(Error::InvalidParam("dual residual is defined for t ≥ 1".into()));
    }
    if !trace.has_full_history() || t > trace.iterations() {
        return Err(Error::InvalidParam(format!(
            "trace holds {} full iterations, asked for t = {t}",
            trace.iterations()
        )));
    }
    let dx = &trace.iterates[t].x - &trace.iterates[t - 1].x;
    let dl = &trace.iterates[t].dual - &trace.iterates[t - 1].dual;
    let m_dx = match &params.q_spec {
        QSpec::ProxForm(tau) => dx.mapv(|v| tau * v),
        QSpec::ExplicitQ(q) => {
            let mut v = problem.a.t().dot(&problem.a.dot(&dx));
            v.mapv_inplace(|t| params.r * t);
            v + q.dot(&dx)
        }
    };
    let s = m_dx + problem.a.t().dot(&dl);
    Ok(s.dot(&s).sqrt())
}

/// Per-check entry of a certification report (JSON-facing).
#[derive(Debug, Clone, Serialize)]
pub struct CheckOutcome {
    pub name: String,
    pub pass: bool,
    pub worst_margin: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub worst_iteration: Option<usize>,
}

/// Bundle of check outcomes written by the command-line layer.
#[derive(Debug, Clone, Serialize)]
pub struct CertificationReport {
    pub checks: Vec<CheckOutcome>,
    pub all_pass: bool,
}

impl CertificationReport {
    pub fn new(checks: Vec<CheckOutcome>) -> Self {
        let all_pass = checks.iter().all(|c| c.pass);
        Self { checks, all_pass }
    }
}
