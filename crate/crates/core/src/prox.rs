//! Closed-form proximal operators and projections.
//!
//! Every subproblem of every scheme in this crate reduces to one of these
//! operators: the prox of a weighted l1 norm, a linear cost over the
//! nonnegative orthant, a convex quadratic, or the projection onto a simple
//! set. All satisfy `prox(c, τ) = argmin_{x ∈ X} θ(x) + (τ/2)‖x − c‖²`.

use ndarray::{Array1, Array2};
use serde::{Deserialize, Serialize};

use crate::linalg::Cholesky;
use crate::serde_arrays::{mat2, vec1};
use crate::{Error, Result};

/// Componentwise shrinkage: minimizes `μ‖x‖₁ + (τ/2)‖x − c‖²`.
///
/// Returns `sign(cᵢ)·max(|cᵢ| − μ/τ, 0)` per component.
pub fn soft_threshold(center: &Array1<f64>, mu: f64, tau: f64) -> Result<Array1<f64>> {
    if !(tau > 0.0) {
        return Err(Error::InvalidParam(format!("soft_threshold: tau = {tau} must be > 0")));
    }
    if mu < 0.0 {
        return Err(Error::InvalidParam(format!("soft_threshold: mu = {mu} must be >= 0")));
    }
    let t = mu / tau;
    Ok(center.mapv(|c| c.signum() * (c.abs() - t).max(0.0)))
}

/// Euclidean projection onto the probability simplex `{x ≥ 0, Σxᵢ = 1}`.
///
/// Sort-based threshold rule: with `u` the coordinates sorted in decreasing
/// order, the threshold is `(Σ_{i≤k} uᵢ − 1)/k` for the largest `k` keeping
/// `u_k` above it; ties fall out of the cumulative sum naturally.
pub fn project_simplex(center: &Array1<f64>) -> Array1<f64> {
    let n = center.len();
    debug_assert!(n >= 1);
    let mut u: Vec<f64> = center.to_vec();
    u.sort_by(|a, b| b.partial_cmp(a).unwrap());
    let mut cumsum = 0.0;
    let mut theta = 0.0;
    for (i, &ui) in u.iter().enumerate() {
        cumsum += ui;
        let cand = (cumsum - 1.0) / (i as f64 + 1.0);
        if ui - cand > 0.0 {
            theta = cand;
        }
    }
    center.mapv(|c| (c - theta).max(0.0))
}

/// Componentwise projection onto the nonnegative orthant.
pub fn project_nonneg(center: &Array1<f64>) -> Array1<f64> {
    center.mapv(|c| c.max(0.0))
}

/// Componentwise projection onto the box `[lo, hi]`.
pub fn project_box(center: &Array1<f64>, lo: &Array1<f64>, hi: &Array1<f64>) -> Array1<f64> {
    Array1::from_shape_fn(center.len(), |i| center[i].max(lo[i]).min(hi[i]))
}

/// Prox of the quadratic `½xᵀPx + qᵀx` (over all of space): solves
/// `(P + τI) x = τ·center − q`.
pub fn prox_quadratic(
    p: &Array2<f64>,
    q: &Array1<f64>,
    center: &Array1<f64>,
    tau: f64,
) -> Result<Array1<f64>> {
    let n = center.len();
    if p.nrows() != n || p.ncols() != n || q.len() != n {
        return Err(Error::Dimension(format!(
            "prox_quadratic: P is {}x{}, q has {}, center has {}",
            p.nrows(),
            p.ncols(),
            q.len(),
            n
        )));
    }
    if !(tau > 0.0) {
        return Err(Error::InvalidParam(format!("prox_quadratic: tau = {tau} must be > 0")));
    }
    let mut m = p.clone();
    for i in 0..n {
        m[(i, i)] += tau;
    }
    let rhs = center.mapv(|c| tau * c) - q;
    Ok(Cholesky::new(&m)?.solve(&rhs))
}

/// A prox-friendly objective term with its feasible set folded in.
///
/// Serializes as `{"kind": "...", "params": {...}}`; the kinds are the ones
/// problem files may carry (`l1`, `linear_nonneg`, `quadratic`, `zero`,
/// `simplex_indicator`, plus `box_indicator`).
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", content = "params", rename_all = "snake_case")]
pub enum ProxKind {
    /// `θ(x) = μ‖x‖₁` over all of space.
    L1 { weight: f64 },
    /// `θ(x) = cᵀx` over `x ≥ 0`.
    LinearNonneg {
        #[serde(with = "vec1")]
        cost: Array1<f64>,
    },
    /// `θ(x) = ½xᵀPx + qᵀx` over all of space, `P ⪰ 0` symmetric.
    Quadratic {
        #[serde(rename = "P", with = "mat2")]
        p: Array2<f64>,
        #[serde(with = "vec1")]
        q: Array1<f64>,
    },
    /// `θ ≡ 0` over all of space.
    Zero {},
    /// Indicator of the probability simplex.
    SimplexIndicator {},
    /// Indicator of the box `[lo, hi]`.
    BoxIndicator {
        #[serde(with = "vec1")]
        lo: Array1<f64>,
        #[serde(with = "vec1")]
        hi: Array1<f64>,
    },
}

/// Feasibility tolerance used by the membership predicate.
const MEMBERSHIP_TOL: f64 = 1e-9;

impl ProxKind {
    /// Finite part of the objective (indicator terms contribute zero).
    pub fn eval(&self, x: &Array1<f64>) -> f64 {
        match self {
            ProxKind::L1 { weight } => weight * x.fold(0.0, |s, v| s + v.abs()),
            ProxKind::LinearNonneg { cost } => cost.dot(x),
            ProxKind::Quadratic { p, q } => 0.5 * x.dot(&p.dot(x)) + q.dot(x),
            ProxKind::Zero {} => 0.0,
            ProxKind::SimplexIndicator {} => 0.0,
            ProxKind::BoxIndicator { .. } => 0.0,
        }
    }

    /// `argmin_{x ∈ X} θ(x) + (τ/2)‖x − center‖²`.
    pub fn prox(&self, center: &Array1<f64>, tau: f64) -> Result<Array1<f64>> {
        if !(tau > 0.0) {
            return Err(Error::InvalidParam(format!("prox: tau = {tau} must be > 0")));
        }
        match self {
            ProxKind::L1 { weight } => soft_threshold(center, *weight, tau),
            ProxKind::LinearNonneg { cost } => {
                if cost.len() != center.len() {
                    return Err(Error::Dimension("linear_nonneg: cost/center length".into()));
                }
                Ok(Array1::from_shape_fn(center.len(), |i| {
                    (center[i] - cost[i] / tau).max(0.0)
                }))
            }
            ProxKind::Quadratic { p, q } => prox_quadratic(p, q, center, tau),
            ProxKind::Zero {} => Ok(center.clone()),
            ProxKind::SimplexIndicator {} => Ok(project_simplex(center)),
            ProxKind::BoxIndicator { lo, hi } => Ok(project_box(center, lo, hi)),
        }
    }

    /// Membership predicate for the folded-in feasible set `X`.
    pub fn contains(&self, x: &Array1<f64>) -> bool {
        match self {
            ProxKind::L1 { .. } | ProxKind::Quadratic { .. } | ProxKind::Zero {} => true,
            ProxKind::LinearNonneg { .. } => x.iter().all(|&v| v >= -MEMBERSHIP_TOL),
            ProxKind::SimplexIndicator {} => {
                x.iter().all(|&v| v >= -MEMBERSHIP_TOL) && (x.sum() - 1.0).abs() <= MEMBERSHIP_TOL
            }
            ProxKind::BoxIndicator { lo, hi } => (0..x.len())
                .all(|i| x[i] >= lo[i] - MEMBERSHIP_TOL && x[i] <= hi[i] + MEMBERSHIP_TOL),
        }
    }

    /// Dimension pinned by the parameters, if any (`l1`, `zero`, and
    /// `simplex_indicator` work in any dimension).
    pub fn dim(&self) -> Option<usize> {
        match self {
            ProxKind::L1 { .. } | ProxKind::Zero {} | ProxKind::SimplexIndicator {} => None,
            ProxKind::LinearNonneg { cost } => Some(cost.len()),
            ProxKind::Quadratic { q, .. } => Some(q.len()),
            ProxKind::BoxIndicator { lo, .. } => Some(lo.len()),
        }
    }

    /// Parameter problems, phrased for validation reports.
    pub fn issues(&self, dim: usize) -> Vec<String> {
        let mut out = Vec::new();
        match self {
            ProxKind::L1 { weight } => {
                if *weight < 0.0 {
                    out.push(format!("l1 weight {weight} is negative"));
                }
            }
            ProxKind::LinearNonneg { cost } => {
                if cost.len() != dim {
                    out.push(format!("linear_nonneg cost has length {}, expected {dim}", cost.len()));
                }
            }
            ProxKind::Quadratic { p, q } => {
                if p.nrows() != dim || p.ncols() != dim || q.len() != dim {
                    out.push(format!(
                        "quadratic term is {}x{} with q of length {}, expected dimension {dim}",
                        p.nrows(),
                        p.ncols(),
                        q.len()
                    ));
                } else {
                    let scale = p.iter().fold(1.0f64, |s, v| s.max(v.abs()));
                    let asym = (0..dim)
                        .flat_map(|i| (0..i).map(move |j| (i, j)))
                        .fold(0.0f64, |s, (i, j)| s.max((p[(i, j)] - p[(j, i)]).abs()));
                    if asym > 1e-12 * scale {
                        out.push(format!("quadratic P is not symmetric (max asymmetry {asym:e})"));
                    }
                }
            }
            ProxKind::Zero {} | ProxKind::SimplexIndicator {} => {}
            ProxKind::BoxIndicator { lo, hi } => {
                if lo.len() != dim || hi.len() != dim {
                    out.push(format!(
                        "box bounds have lengths {}/{}, expected {dim}",
                        lo.len(),
                        hi.len()
                    ));
                } else if (0..dim).any(|i| lo[i] > hi[i]) {
                    out.push("box has lo > hi in some component".into());
                }
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gen::SplitMix64;
    use ndarray::array;

    #[test]
    fn soft_threshold_shrinks() {
        let c = array![3.0, -0.5, 1.0];
        let x = soft_threshold(&c, 1.0, 1.0).unwrap();
        assert_eq!(x, array![2.0, 0.0, 0.0]);
    }

    #[test]
    fn soft_threshold_identity_at_zero_weight() {
        let c = array![1.5, -2.25, 0.0, 3.75];
        let x = soft_threshold(&c, 0.0, 1.0).unwrap();
        assert_eq!(x, c);
    }

    #[test]
    fn soft_threshold_scalar() {
        let x = soft_threshold(&array![0.7], 1.0, 2.0).unwrap();
        assert!((x[0] - 0.2).abs() < 1e-16);
    }

    #[test]
    fn soft_threshold_rejects_bad_tau() {
        assert!(soft_threshold(&array![1.0], 1.0, 0.0).is_err());
        assert!(soft_threshold(&array![1.0], 1.0, -1.0).is_err());
    }

    #[test]
    fn simplex_symmetric_point() {
        let x = project_simplex(&array![0.5, 0.5, 0.5]);
        for &v in x.iter() {
            assert!((v - 1.0 / 3.0).abs() < 1e-12);
        }
        assert!((x.sum() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn simplex_vertex_case() {
        let x = project_simplex(&array![2.0, 0.0, 0.0]);
        assert_eq!(x, array![1.0, 0.0, 0.0]);
    }

    #[test]
    fn simplex_matches_grid_oracle_in_2d() {
        // Independent oracle: brute-force minimization of ‖x − c‖² over the
        // 1-simplex parametrized as (t, 1 − t).
        let c = array![0.4, 0.1];
        let mut best_t = 0.0;
        let mut best = f64::INFINITY;
        let steps = 1_000_000usize;
        for i in 0..=steps {
            let t = i as f64 / steps as f64;
            let d = (t - c[0]).powi(2) + (1.0 - t - c[1]).powi(2);
            if d < best {
                best = d;
                best_t = t;
            }
        }
        let x = project_simplex(&c);
        assert!((x[0] - best_t).abs() <= 2e-6);
        assert!((x[0] - 0.65).abs() < 1e-12);
        assert!((x[1] - 0.35).abs() < 1e-12);
    }

    #[test]
    fn simplex_output_is_distribution() {
        let mut rng = SplitMix64::new(7);
        for _ in 0..200 {
            let c = Array1::from_shape_fn(9, |_| 3.0 * rng.next_normal());
            let x = project_simplex(&c);
            assert!(x.iter().all(|&v| v >= 0.0));
            assert!((x.sum() - 1.0).abs() <= 1e-12);
        }
    }

    #[test]
    fn nonneg_projection() {
        assert_eq!(project_nonneg(&array![1.0, -2.0, 0.0]), array![1.0, 0.0, 0.0]);
        let c = array![0.5, 3.0];
        assert_eq!(project_nonneg(&c), c);
        assert_eq!(project_nonneg(&array![-5.0]), array![0.0]);
    }

    #[test]
    fn prox_quadratic_identity_cases() {
        let c = array![1.0, -2.0];
        let p = Array2::zeros((2, 2));
        let q = Array1::zeros(2);
        let x = prox_quadratic(&p, &q, &c, 3.0).unwrap();
        assert!((&x - &c).iter().all(|v| v.abs() < 1e-15));

        let x = prox_quadratic(&Array2::eye(1), &Array1::zeros(1), &array![2.0], 1.0).unwrap();
        assert!((x[0] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn prox_quadratic_residual_oracle() {
        let mut rng = SplitMix64::new(42);
        let n = 5;
        let l = Array2::from_shape_fn((n, n), |_| rng.next_normal());
        let p = l.t().dot(&l); // PSD by construction
        let q = Array1::from_shape_fn(n, |_| rng.next_normal());
        let c = Array1::from_shape_fn(n, |_| rng.next_normal());
        let tau = 0.7;
        let x = prox_quadratic(&p, &q, &c, tau).unwrap();
        let mut lhs = p.dot(&x);
        lhs += &x.mapv(|v| tau * v);
        let rhs = c.mapv(|v| tau * v) - &q;
        let res = (&lhs - &rhs).mapv(|v| v * v).sum().sqrt();
        assert!(res <= 1e-10, "residual {res:e}");
    }

    #[test]
    fn zero_prox_is_identity_bitwise() {
        let c = array![0.1, -7.3, 2.5e-13];
        let x = ProxKind::Zero {}.prox(&c, 0.125).unwrap();
        assert_eq!(x, c);
    }

    /// Subgradient-optimality oracle: the prox output must beat 100 random
    /// feasible perturbations in the prox objective.
    fn assert_prox_optimal(kind: &ProxKind, dim: usize, rng: &mut SplitMix64) {
        let center = Array1::from_shape_fn(dim, |_| 2.0 * rng.next_normal());
        let tau = 0.5 + rng.next_f64();
        let p = kind.prox(&center, tau).unwrap();
        assert!(kind.contains(&p), "prox output escaped the feasible set: {kind:?}");
        let obj = |z: &Array1<f64>| {
            kind.eval(z) + 0.5 * tau * (z - &center).mapv(|v| v * v).sum()
        };
        let fp = obj(&p);
        for _ in 0..100 {
            let dz = Array1::from_shape_fn(dim, |_| 0.3 * rng.next_normal());
            let mut z = &p + &dz;
            // pull the perturbation back into X where X is a real constraint
            match kind {
                ProxKind::LinearNonneg { .. } => z.mapv_inplace(|v| v.max(0.0)),
                ProxKind::SimplexIndicator {} => z = project_simplex(&z),
                ProxKind::BoxIndicator { lo, hi } => z = project_box(&z, lo, hi),
                _ => {}
            }
            assert!(
                fp <= obj(&z) + 1e-9,
                "prox is not a minimizer for {kind:?}: {fp} > {}",
                obj(&z)
            );
        }
    }

    #[test]
    fn all_kinds_pass_subgradient_optimality() {
        let mut rng = SplitMix64::new(2024);
        let n = 6;
        let l = Array2::from_shape_fn((n, n), |_| rng.next_normal());
        let kinds = vec![
            ProxKind::L1 { weight: 0.8 },
            ProxKind::LinearNonneg {
                cost: Array1::from_shape_fn(n, |_| rng.next_f64()),
            },
            ProxKind::Quadratic {
                p: l.t().dot(&l),
                q: Array1::from_shape_fn(n, |_| rng.next_normal()),
            },
            ProxKind::Zero {},
            ProxKind::SimplexIndicator {},
            ProxKind::BoxIndicator {
                lo: Array1::from_elem(n, -0.5),
                hi: Array1::from_elem(n, 0.75),
            },
        ];
        for kind in &kinds {
            for _ in 0..10 {
                assert_prox_optimal(kind, n, &mut rng);
            }
        }
    }

    /// Firm nonexpansiveness sampled over 1000 pairs per kind.
    #[test]
    fn all_kinds_are_nonexpansive() {
        let mut rng = SplitMix64::new(99);
        let n = 5;
        let l = Array2::from_shape_fn((n, n), |_| rng.next_normal());
        let kinds = vec![
            ProxKind::L1 { weight: 1.3 },
            ProxKind::LinearNonneg {
                cost: Array1::from_shape_fn(n, |_| rng.next_f64()),
            },
            ProxKind::Quadratic {
                p: l.t().dot(&l),
                q: Array1::from_shape_fn(n, |_| rng.next_normal()),
            },
            ProxKind::Zero {},
            ProxKind::SimplexIndicator {},
            ProxKind::BoxIndicator {
                lo: Array1::from_elem(n, -1.0),
                hi: Array1::from_elem(n, 1.0),
            },
        ];
        for kind in &kinds {
            for _ in 0..1000 {
                let c1 = Array1::from_shape_fn(n, |_| 3.0 * rng.next_normal());
                let c2 = Array1::from_shape_fn(n, |_| 3.0 * rng.next_normal());
                let p1 = kind.prox(&c1, 1.0).unwrap();
                let p2 = kind.prox(&c2, 1.0).unwrap();
                let dp = (&p1 - &p2).mapv(|v| v * v).sum().sqrt();
                let dc = (&c1 - &c2).mapv(|v| v * v).sum().sqrt();
                assert!(dp <= dc + 1e-12, "{kind:?}: {dp} > {dc}");
            }
        }
    }

    #[test]
    fn quadratic_symmetry_issue_detected() {
        let kind = ProxKind::Quadratic {
            p: array![[1.0, 0.5], [0.2, 1.0]],
            q: array![0.0, 0.0],
        };
        assert!(!kind.issues(2).is_empty());
    }
}
