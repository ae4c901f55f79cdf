//! Problem definitions shared by all solvers.
//!
//! Three problem shapes cover the whole crate: a linearly constrained convex
//! program, its multi-block separable extension, and a convex-concave
//! saddle-point problem. Objectives (with their feasible sets folded in) are
//! supplied as prox oracles; matrices are dense, row-major, double precision.
//!
//! Problem values are immutable after construction and freely shareable
//! across threads.

use ndarray::{s, Array1, Array2, Axis};
use serde::{Deserialize, Serialize};

use crate::prox::ProxKind;
use crate::serde_arrays::{mat2, vec1};
use crate::{Error, Result};

/// Oracle access to a convex term `θ` over a closed convex set `X`.
///
/// `prox` must return `argmin_{x ∈ X} θ(x) + (τ/2)‖x − center‖²`; `contains`
/// exposes membership in `X` so tests can assert that prox outputs stay
/// feasible.
pub trait ProxOracle {
    /// Finite part of `θ` at `x` (indicator parts contribute zero).
    fn eval(&self, x: &Array1<f64>) -> f64;
    /// Proximal step with weight `τ > 0`.
    fn prox(&self, center: &Array1<f64>, tau: f64) -> Result<Array1<f64>>;
    /// Membership in the folded-in feasible set.
    fn contains(&self, x: &Array1<f64>) -> bool;
}

impl ProxOracle for ProxKind {
    fn eval(&self, x: &Array1<f64>) -> f64 {
        ProxKind::eval(self, x)
    }
    fn prox(&self, center: &Array1<f64>, tau: f64) -> Result<Array1<f64>> {
        ProxKind::prox(self, center, tau)
    }
    fn contains(&self, x: &Array1<f64>) -> bool {
        ProxKind::contains(self, x)
    }
}

/// Constraint sense of `Ax = b` versus `Ax ≥ b`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Sense {
    /// `Ax = b`; multipliers range over all of space.
    Eq,
    /// `Ax ≥ b`; multipliers are kept nonnegative.
    Ge,
}

/// `min θ(x)  s.t.  Ax = b (or ≥ b), x ∈ X`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ConstrainedProblem {
    #[serde(rename = "A", with = "mat2")]
    pub a: Array2<f64>,
    #[serde(with = "vec1")]
    pub b: Array1<f64>,
    pub sense: Sense,
    pub theta: ProxKind,
}

/// One block of a separable problem: `θᵢ` over `Xᵢ` with coupling matrix `Aᵢ`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Block {
    #[serde(rename = "A", with = "mat2")]
    pub a: Array2<f64>,
    pub theta: ProxKind,
}

/// `min Σᵢ θᵢ(xᵢ)  s.t.  Σᵢ Aᵢxᵢ = b (or ≥ b), xᵢ ∈ Xᵢ`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SeparableProblem {
    pub blocks: Vec<Block>,
    #[serde(with = "vec1")]
    pub b: Array1<f64>,
    pub sense: Sense,
}

/// `min_x max_y θ₁(x) − yᵀAx − θ₂(y)` over `X × Y`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SaddleProblem {
    pub theta1: ProxKind,
    pub theta2: ProxKind,
    #[serde(rename = "A", with = "mat2")]
    pub a: Array2<f64>,
}

/// Any of the three problem shapes, for file I/O.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum AnyProblem {
    Saddle(SaddleProblem),
    Separable(SeparableProblem),
    Constrained(ConstrainedProblem),
}

/// What a validation violation is about.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ViolationKind {
    DimensionMismatch,
    ZeroRow,
    EmptyBlocks,
    BadParameter,
}

/// A single validation finding; collecting these never throws.
#[derive(Debug, Clone, Serialize)]
pub struct Violation {
    pub kind: ViolationKind,
    pub message: String,
}

impl std::fmt::Display for Violation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.message)
    }
}

fn push(out: &mut Vec<Violation>, kind: ViolationKind, message: String) {
    out.push(Violation { kind, message });
}

fn check_zero_rows(a: &Array2<f64>, out: &mut Vec<Violation>) {
    for (i, row) in a.axis_iter(Axis(0)).enumerate() {
        if row.iter().all(|&v| v == 0.0) {
            push(out, ViolationKind::ZeroRow, format!("constraint row {i} is identically zero"));
        }
    }
}

impl ConstrainedProblem {
    /// Builds and validates; degenerate problems are rejected.
    pub fn new(a: Array2<f64>, b: Array1<f64>, sense: Sense, theta: ProxKind) -> Result<Self> {
        let p = Self { a, b, sense, theta };
        let v = p.validate();
        if v.is_empty() {
            Ok(p)
        } else {
            Err(Error::InvalidParam(join(&v)))
        }
    }

    /// `(m, n)` — constraint rows and variable count.
    pub fn dims(&self) -> (usize, usize) {
        (self.a.nrows(), self.a.ncols())
    }

    pub fn validate(&self) -> Vec<Violation> {
        let mut out = Vec::new();
        let (m, n) = self.dims();
        if m == 0 || n == 0 {
            push(&mut out, ViolationKind::DimensionMismatch, format!("A is {m}x{n}"));
            return out;
        }
        if self.b.len() != m {
            push(
                &mut out,
                ViolationKind::DimensionMismatch,
                format!("A is {m}x{n} but b has length {}", self.b.len()),
            );
        }
        check_zero_rows(&self.a, &mut out);
        if let Some(d) = self.theta.dim() {
            if d != n {
                push(
                    &mut out,
                    ViolationKind::DimensionMismatch,
                    format!("objective term expects dimension {d}, A has {n} columns"),
                );
            }
        }
        for msg in self.theta.issues(n) {
            push(&mut out, ViolationKind::BadParameter, msg);
        }
        out
    }

    /// Violation of the constraint at `x`: `‖Ax − b‖` for equality,
    /// `‖max(b − Ax, 0)‖` for `Ax ≥ b`.
    pub fn primal_residual(&self, x: &Array1<f64>) -> f64 {
        let ax = self.a.dot(x);
        self.primal_residual_from_ax(&ax)
    }

    /// Same as [`Self::primal_residual`] but reusing a precomputed `Ax`.
    pub fn primal_residual_from_ax(&self, ax: &Array1<f64>) -> f64 {
        match self.sense {
            Sense::Eq => (ax - &self.b).mapv(|v| v * v).sum().sqrt(),
            Sense::Ge => (0..self.b.len())
                .map(|i| (self.b[i] - ax[i]).max(0.0).powi(2))
                .sum::<f64>()
                .sqrt(),
        }
    }

    /// Splits the columns of `A` (and the objective, where it is
    /// component-separable) into `p` contiguous blocks.
    pub fn split_columns(&self, p: usize) -> Result<SeparableProblem> {
        let (_, n) = self.dims();
        if p == 0 || p > n {
            return Err(Error::InvalidParam(format!("cannot split {n} columns into {p} blocks")));
        }
        let base = n / p;
        let extra = n % p;
        let mut blocks = Vec::with_capacity(p);
        let mut start = 0;
        for i in 0..p {
            let len = base + usize::from(i < extra);
            let cols = self.a.slice(s![.., start..start + len]).to_owned();
            let theta = match &self.theta {
                ProxKind::L1 { weight } => ProxKind::L1 { weight: *weight },
                ProxKind::Zero {} => ProxKind::Zero {},
                ProxKind::LinearNonneg { cost } => ProxKind::LinearNonneg {
                    cost: cost.slice(s![start..start + len]).to_owned(),
                },
                other => {
                    return Err(Error::Unsupported(format!(
                        "objective kind {other:?} is not component-separable"
                    )))
                }
            };
            blocks.push(Block { a: cols, theta });
            start += len;
        }
        Ok(SeparableProblem { blocks, b: self.b.clone(), sense: self.sense })
    }
}

impl SeparableProblem {
    pub fn new(blocks: Vec<Block>, b: Array1<f64>, sense: Sense) -> Result<Self> {
        let p = Self { blocks, b, sense };
        let v = p.validate();
        if v.is_empty() {
            Ok(p)
        } else {
            Err(Error::InvalidParam(join(&v)))
        }
    }

    /// Number of blocks.
    pub fn p(&self) -> usize {
        self.blocks.len()
    }

    /// Constraint row count.
    pub fn m(&self) -> usize {
        self.b.len()
    }

    /// Per-block variable counts.
    pub fn block_dims(&self) -> Vec<usize> {
        self.blocks.iter().map(|bl| bl.a.ncols()).collect()
    }

    pub fn validate(&self) -> Vec<Violation> {
        let mut out = Vec::new();
        if self.blocks.is_empty() {
            push(&mut out, ViolationKind::EmptyBlocks, "problem has no blocks".into());
            return out;
        }
        let m = self.b.len();
        for (i, bl) in self.blocks.iter().enumerate() {
            if bl.a.nrows() != m {
                push(
                    &mut out,
                    ViolationKind::DimensionMismatch,
                    format!("block {i} has {} rows, b has length {m}", bl.a.nrows()),
                );
            }
            if bl.a.ncols() == 0 {
                push(&mut out, ViolationKind::DimensionMismatch, format!("block {i} has no columns"));
            }
            if let Some(d) = bl.theta.dim() {
                if d != bl.a.ncols() {
                    push(
                        &mut out,
                        ViolationKind::DimensionMismatch,
                        format!("block {i} objective expects dimension {d}, matrix has {} columns", bl.a.ncols()),
                    );
                }
            }
            for msg in bl.theta.issues(bl.a.ncols()) {
                push(&mut out, ViolationKind::BadParameter, format!("block {i}: {msg}"));
            }
        }
        if out.is_empty() {
            // a constraint row that every block zeroes out is degenerate
            for r in 0..m {
                if self.blocks.iter().all(|bl| bl.a.row(r).iter().all(|&v| v == 0.0)) {
                    push(&mut out, ViolationKind::ZeroRow, format!("constraint row {r} is identically zero"));
                }
            }
        }
        out
    }

    /// Concatenates the blocks into a single-block problem. Requires the
    /// block objectives to merge into one prox-friendly term (all `zero`,
    /// all `l1` with one weight, or all `linear_nonneg`).
    pub fn stack(&self) -> Result<ConstrainedProblem> {
        let m = self.m();
        let n: usize = self.block_dims().iter().sum();
        let mut a = Array2::<f64>::zeros((m, n));
        let mut start = 0;
        for bl in &self.blocks {
            let w = bl.a.ncols();
            a.slice_mut(s![.., start..start + w]).assign(&bl.a);
            start += w;
        }
        let theta = if self.blocks.iter().all(|bl| matches!(bl.theta, ProxKind::Zero {})) {
            ProxKind::Zero {}
        } else if let ProxKind::L1 { weight } = self.blocks[0].theta {
            if self
                .blocks
                .iter()
                .all(|bl| matches!(bl.theta, ProxKind::L1 { weight: w } if w == weight))
            {
                ProxKind::L1 { weight }
            } else {
                return Err(Error::Unsupported("blocks do not share one l1 weight".into()));
            }
        } else if self.blocks.iter().all(|bl| matches!(bl.theta, ProxKind::LinearNonneg { .. })) {
            let mut cost = Array1::<f64>::zeros(n);
            let mut start = 0;
            for bl in &self.blocks {
                if let ProxKind::LinearNonneg { cost: c } = &bl.theta {
                    cost.slice_mut(s![start..start + c.len()]).assign(c);
                    start += c.len();
                }
            }
            ProxKind::LinearNonneg { cost }
        } else {
            return Err(Error::Unsupported("block objectives do not stack into one prox-friendly term".into()));
        };
        ConstrainedProblem::new(a, self.b.clone(), self.sense, theta)
    }

    /// Sum of the block objectives at a stacked point.
    pub fn eval(&self, x_blocks: &[Array1<f64>]) -> f64 {
        self.blocks.iter().zip(x_blocks).map(|(bl, x)| bl.theta.eval(x)).sum()
    }

    /// `Σᵢ Aᵢxᵢ`.
    pub fn coupling(&self, x_blocks: &[Array1<f64>]) -> Array1<f64> {
        let mut s = Array1::<f64>::zeros(self.m());
        for (bl, x) in self.blocks.iter().zip(x_blocks) {
            s += &bl.a.dot(x);
        }
        s
    }

    pub fn primal_residual(&self, x_blocks: &[Array1<f64>]) -> f64 {
        let ax = self.coupling(x_blocks);
        match self.sense {
            Sense::Eq => (&ax - &self.b).mapv(|v| v * v).sum().sqrt(),
            Sense::Ge => (0..self.b.len())
                .map(|i| (self.b[i] - ax[i]).max(0.0).powi(2))
                .sum::<f64>()
                .sqrt(),
        }
    }
}

impl SaddleProblem {
    pub fn new(theta1: ProxKind, theta2: ProxKind, a: Array2<f64>) -> Result<Self> {
        let p = Self { theta1, theta2, a };
        let v = p.validate();
        if v.is_empty() {
            Ok(p)
        } else {
            Err(Error::InvalidParam(join(&v)))
        }
    }

    /// `(m, n)` — rows (y-dimension) and columns (x-dimension) of `A`.
    pub fn dims(&self) -> (usize, usize) {
        (self.a.nrows(), self.a.ncols())
    }

    pub fn validate(&self) -> Vec<Violation> {
        let mut out = Vec::new();
        let (m, n) = self.dims();
        if m == 0 || n == 0 {
            push(&mut out, ViolationKind::DimensionMismatch, format!("A is {m}x{n}"));
            return out;
        }
        if let Some(d) = self.theta1.dim() {
            if d != n {
                push(
                    &mut out,
                    ViolationKind::DimensionMismatch,
                    format!("theta1 expects dimension {d}, A has {n} columns"),
                );
            }
        }
        if let Some(d) = self.theta2.dim() {
            if d != m {
                push(
                    &mut out,
                    ViolationKind::DimensionMismatch,
                    format!("theta2 expects dimension {d}, A has {m} rows"),
                );
            }
        }
        for msg in self.theta1.issues(n) {
            push(&mut out, ViolationKind::BadParameter, format!("theta1: {msg}"));
        }
        for msg in self.theta2.issues(m) {
            push(&mut out, ViolationKind::BadParameter, format!("theta2: {msg}"));
        }
        out
    }

    /// `Φ(x, y) = θ₁(x) − yᵀAx − θ₂(y)`.
    pub fn phi(&self, x: &Array1<f64>, y: &Array1<f64>) -> f64 {
        self.theta1.eval(x) - y.dot(&self.a.dot(x)) - self.theta2.eval(y)
    }
}

impl AnyProblem {
    pub fn validate(&self) -> Vec<Violation> {
        match self {
            AnyProblem::Constrained(p) => p.validate(),
            AnyProblem::Separable(p) => p.validate(),
            AnyProblem::Saddle(p) => p.validate(),
        }
    }

    /// Parses and validates a problem document.
    pub fn from_json(s: &str) -> Result<Self> {
        let p: AnyProblem = serde_json::from_str(s)?;
        let v = p.validate();
        if v.is_empty() {
            Ok(p)
        } else {
            Err(Error::InvalidParam(join(&v)))
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

/// Report-style validation over any problem shape; an empty list means valid.
pub fn validate(problem: &AnyProblem) -> Vec<Violation> {
    problem.validate()
}

fn join(v: &[Violation]) -> String {
    v.iter().map(|x| x.message.as_str()).collect::<Vec<_>>().join("; ")
}
