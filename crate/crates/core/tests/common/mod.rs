//! Shared helpers for the integration and acceptance suites.
//!
//! The dense assemblers here are deliberately independent of the library's
//! factored quadratic forms: they build the full `(n+m)²` matrix from the
//! same raw parameters and evaluate `wᵀHw` directly, serving as the oracle
//! the factored path is checked against.

#![allow(dead_code)]

use ndarray::{s, Array1, Array2};
use proxalm::gen::SplitMix64;
use proxalm::model::SaddleProblem;
use proxalm::solvers::Iterate;

/// Q of the single-block metric, mirrored as raw data.
pub enum DenseQ {
    FromProxForm { tau: f64 },
    Explicit(Array2<f64>),
}

fn dense_q(q: &DenseQ, r: f64, a: &Array2<f64>) -> Array2<f64> {
    let n = a.ncols();
    match q {
        DenseQ::FromProxForm { tau } => {
            let mut m = a.t().dot(a);
            m.mapv_inplace(|v| -r * v);
            for i in 0..n {
                m[(i, i)] += tau;
            }
            m
        }
        DenseQ::Explicit(q) => q.clone(),
    }
}

/// `[[rAᵀA + Q, Aᵀ], [A, I/r]]`.
pub fn dense_palm_h(r: f64, q: &DenseQ, a: &Array2<f64>) -> Array2<f64> {
    let (m, n) = (a.nrows(), a.ncols());
    let mut h = Array2::<f64>::zeros((n + m, n + m));
    let mut tl = a.t().dot(a);
    tl.mapv_inplace(|v| r * v);
    tl += &dense_q(q, r, a);
    h.slice_mut(s![..n, ..n]).assign(&tl);
    h.slice_mut(s![..n, n..]).assign(&a.t());
    h.slice_mut(s![n.., ..n]).assign(a);
    for i in 0..m {
        h[(n + i, n + i)] = 1.0 / r;
    }
    h
}

/// Block-diagonal primal metrics, couplings `A_iᵀ`, lower-right `(Σ 1/r_i)I`.
pub fn dense_block_h(terms: &[(f64, DenseQ, Array2<f64>)]) -> Array2<f64> {
    let m = terms[0].2.nrows();
    let n: usize = terms.iter().map(|(_, _, a)| a.ncols()).sum();
    let mut h = Array2::<f64>::zeros((n + m, n + m));
    let mut start = 0;
    let mut inv_r_sum = 0.0;
    for (r, q, a) in terms {
        let ni = a.ncols();
        let mut tl = a.t().dot(a);
        tl.mapv_inplace(|v| r * v);
        tl += &dense_q(q, *r, a);
        h.slice_mut(s![start..start + ni, start..start + ni]).assign(&tl);
        h.slice_mut(s![start..start + ni, n..]).assign(&a.t());
        h.slice_mut(s![n.., start..start + ni]).assign(a);
        inv_r_sum += 1.0 / r;
        start += ni;
    }
    for i in 0..m {
        h[(n + i, n + i)] = inv_r_sum;
    }
    h
}

/// Dual-primal variant: `(q_i + s_i)I` blocks, negated couplings `−A_iᵀ`.
pub fn dense_dual_primal_h(terms: &[(f64, f64, f64, Array2<f64>)]) -> Array2<f64> {
    let m = terms[0].3.nrows();
    let n: usize = terms.iter().map(|(_, _, _, a)| a.ncols()).sum();
    let mut h = Array2::<f64>::zeros((n + m, n + m));
    let mut start = 0;
    let mut inv_r_sum = 0.0;
    for (r, q_scale, s_i, a) in terms {
        let ni = a.ncols();
        for i in 0..ni {
            h[(start + i, start + i)] = q_scale + s_i;
        }
        let neg_at = a.t().mapv(|v| -v);
        h.slice_mut(s![start..start + ni, n..]).assign(&neg_at);
        h.slice_mut(s![n.., start..start + ni]).assign(&a.mapv(|v| -v));
        inv_r_sum += 1.0 / r;
        start += ni;
    }
    for i in 0..m {
        h[(n + i, n + i)] = inv_r_sum;
    }
    h
}

/// W of the `[[rI, Aᵀ], [A, W]]` metric, mirrored as raw data.
pub enum DenseW {
    Spherical(f64),
    ShiftedSpherical(f64),
    Shifted(Array2<f64>),
}

/// `[[rI, Aᵀ], [A, W]]`.
pub fn dense_dual_metric_h(r: f64, w: &DenseW, a: &Array2<f64>) -> Array2<f64> {
    let (m, n) = (a.nrows(), a.ncols());
    let mut h = Array2::<f64>::zeros((n + m, n + m));
    for i in 0..n {
        h[(i, i)] = r;
    }
    h.slice_mut(s![..n, n..]).assign(&a.t());
    h.slice_mut(s![n.., ..n]).assign(a);
    let wmat = match w {
        DenseW::Spherical(sigma) => {
            let mut wm = Array2::<f64>::zeros((m, m));
            for i in 0..m {
                wm[(i, i)] = *sigma;
            }
            wm
        }
        DenseW::ShiftedSpherical(delta) => {
            let mut wm = a.dot(&a.t());
            wm.mapv_inplace(|v| v / r);
            for i in 0..m {
                wm[(i, i)] += delta;
            }
            wm
        }
        DenseW::Shifted(q) => {
            let mut wm = a.dot(&a.t());
            wm.mapv_inplace(|v| v / r);
            wm + q
        }
    };
    h.slice_mut(s![n.., n..]).assign(&wmat);
    h
}

/// `wᵀHw` against a dense matrix — the oracle evaluation.
pub fn dense_quad(h: &Array2<f64>, w: &Array1<f64>) -> f64 {
    w.dot(&h.dot(w))
}

pub fn stack(w: &Iterate) -> Array1<f64> {
    let mut v = Array1::<f64>::zeros(w.x.len() + w.dual.len());
    v.slice_mut(s![..w.x.len()]).assign(&w.x);
    v.slice_mut(s![w.x.len()..]).assign(&w.dual);
    v
}

pub fn random_vec(rng: &mut SplitMix64, n: usize, scale: f64) -> Array1<f64> {
    Array1::from_shape_fn(n, |_| scale * rng.next_normal())
}

pub fn random_iterate(rng: &mut SplitMix64, n: usize, m: usize, scale: f64) -> Iterate {
    Iterate::new(random_vec(rng, n, scale), random_vec(rng, m, scale))
}

/// Sum of both players' best pure-strategy improvements at `(x, y)`;
/// zero exactly at an equilibrium of the simplex game.
pub fn best_response_gap(p: &SaddleProblem, x: &Array1<f64>, y: &Array1<f64>) -> f64 {
    let ax = p.a.dot(x);
    let aty = p.a.t().dot(y);
    let max_y = ax.iter().fold(f64::NEG_INFINITY, |s, &v| s.max(-v));
    let min_x = aty.iter().fold(f64::INFINITY, |s, &v| s.min(-v));
    max_y - min_x
}
