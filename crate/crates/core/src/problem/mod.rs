//! The finite-sum problem contract and concrete problem families.
//!
//! A problem is `F(w) = (1/n) Σ_{i} f(w; i)` with exact per-component
//! gradients. Implementations are immutable after construction and safe to
//! share across threads; evaluation and gradient calls are pure.

mod bias_mlp;
mod finite_diff;
mod interpolating;
mod least_squares;
mod spec;

pub use bias_mlp::{Activation, BiasMlp, MlpArchitecture};
pub use finite_diff::finite_diff_grad;
pub use interpolating::{interpolating, interpolating_scaled, DEFAULT_WSTAR_NORM};
pub use least_squares::LeastSquares;
pub use spec::{MlpData, ProblemSpec};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::exec;

/// Flat parameter vector `w` in `R^d`; the sole optimizer state.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct WeightVector {
    entries: Vec<f64>,
}

impl WeightVector {
    /// Wraps a vector of finite entries.
    pub fn new(entries: Vec<f64>) -> Self {
        assert!(
            entries.iter().all(|v| v.is_finite()),
            "weight vector entries must be finite"
        );
        Self { entries }
    }

    pub fn zeros(dim: usize) -> Self {
        Self {
            entries: vec![0.0; dim],
        }
    }

    pub fn dim(&self) -> usize {
        self.entries.len()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.entries
    }

    pub fn sq_norm(&self) -> f64 {
        self.entries.iter().map(|v| v * v).sum()
    }

    pub fn dist_sq(&self, other: &Self) -> f64 {
        assert_eq!(self.dim(), other.dim(), "dimension mismatch");
        self.entries
            .iter()
            .zip(&other.entries)
            .map(|(a, b)| (a - b) * (a - b))
            .sum()
    }

    /// `w <- w - step * direction`.
    pub fn sub_scaled(&mut self, step: f64, direction: &[f64]) {
        assert_eq!(self.dim(), direction.len(), "dimension mismatch");
        for (w, g) in self.entries.iter_mut().zip(direction) {
            *w -= step * g;
        }
    }

    pub(crate) fn set(&mut self, k: usize, value: f64) {
        self.entries[k] = value;
    }
}

impl std::ops::Index<usize> for WeightVector {
    type Output = f64;
    fn index(&self, k: usize) -> &f64 {
        &self.entries[k]
    }
}

impl From<Vec<f64>> for WeightVector {
    fn from(entries: Vec<f64>) -> Self {
        Self::new(entries)
    }
}

/// Analytic facts about a problem, filled when they are computable.
///
/// `component_minima` are lower bounds on `min_w f(w; i)`; they are exact for
/// the quadratic families and the valid bound `0` for squared losses.
#[derive(Clone, Debug, Default, Serialize, Deserialize)]
pub struct GroundTruth {
    /// A global minimizer of `F`, when known.
    pub w_star: Option<WeightVector>,
    /// `F* = min F`, when known.
    pub f_star: Option<f64>,
    /// Per-component lower bounds `f_i*`.
    pub component_minima: Option<Vec<f64>>,
    /// Component smoothness constant `L`.
    pub smoothness: Option<f64>,
    /// Mean squared component-gradient norm at `w_star`.
    pub sigma_star_sq: Option<f64>,
    /// Average-PL constant `mu`.
    pub pl_mu: Option<f64>,
    /// Modulus `M` of the star-smooth-convex condition, when analytic.
    pub star_m: Option<f64>,
    /// Deviation coefficient `N` of the trajectory condition, when analytic.
    pub star_n: Option<f64>,
}

impl GroundTruth {
    /// `F(w) - F*` when the optimum value is known.
    pub fn gap(&self, objective: f64) -> Option<f64> {
        self.f_star.map(|fs| objective - fs)
    }

    /// Step cap `min { n/(2M), 1/(2L) }` when both constants are known.
    pub fn eta_cap(&self, n: usize) -> Option<f64> {
        match (self.star_m, self.smoothness) {
            (Some(m), Some(l)) => Some((n as f64 / (2.0 * m)).min(1.0 / (2.0 * l))),
            _ => None,
        }
    }
}

/// Construction errors for the built-in problem families.
#[derive(Debug, Error)]
pub enum ProblemError {
    #[error("problem must have n >= 1 components and dimension d >= 1")]
    Empty,
    #[error("row {0} is all zeros; its component would be constant and the smoothness estimate degenerate")]
    ZeroRow(usize),
    #[error(
        "interpolation requires d >= n so a common minimizer is guaranteed (got n={n}, d={d})"
    )]
    NotOverParameterized { n: usize, d: usize },
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("non-finite value in {0}")]
    NonFinite(&'static str),
}

/// The finite-sum contract: `n`, `d`, `f(w; i)` and its exact gradient.
///
/// Component indices are `0..n` internally; persisted traces use 1-based
/// indices. Out-of-range indices and dimension mismatches are contract
/// violations and panic.
pub trait FiniteSumProblem: Send + Sync {
    fn num_components(&self) -> usize;

    fn dim(&self) -> usize;

    /// `f(w; i)`.
    fn component(&self, w: &WeightVector, i: usize) -> f64;

    /// Exact gradient of `f(.; i)` at `w`.
    fn component_grad(&self, w: &WeightVector, i: usize) -> Vec<f64>;

    fn ground_truth(&self) -> &GroundTruth;

    /// Default start point for experiments on this problem.
    fn initial_point(&self) -> WeightVector {
        WeightVector::zeros(self.dim())
    }

    /// False when a component is not L-smooth (e.g. relu activations).
    fn lipschitz_smooth(&self) -> bool {
        true
    }

    /// `F(w) = (1/n) Σ f(w; i)`.
    fn objective(&self, w: &WeightVector) -> f64 {
        let n = self.num_components();
        exec::map_sum(n, |i| self.component(w, i)) / n as f64
    }

    /// `(1/n) Σ ||grad f(w; i)||^2`.
    fn mean_sq_grad_norm(&self, w: &WeightVector) -> f64 {
        let n = self.num_components();
        exec::map_sum(n, |i| {
            self.component_grad(w, i).iter().map(|g| g * g).sum::<f64>()
        }) / n as f64
    }

    /// `grad F(w)`, the component-gradient average.
    fn full_grad(&self, w: &WeightVector) -> Vec<f64> {
        let n = self.num_components();
        let grads = exec::map_collect(n, |i| self.component_grad(w, i));
        let mut out = vec![0.0; self.dim()];
        for g in &grads {
            for (o, v) in out.iter_mut().zip(g) {
                *o += v;
            }
        }
        for o in &mut out {
            *o /= n as f64;
        }
        out
    }
}

pub(crate) fn sq_norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum()
}
