//! Finite-sum optimization with shuffling-type SGD.
//!
//! The crate is organized around a small number of pieces:
//!
//! * [`problem`]: the finite-sum contract `F(w) = (1/n) Σ f(w; i)` together
//!   with concrete instances (least squares, an interpolating generator, and a
//!   squared-loss multilayer network with a final bias layer) and a
//!   finite-difference gradient oracle.
//! * [`shuffling`]: epoch permutations for incremental-gradient, single-shuffle
//!   and random-reshuffle orders, deterministic in a seed.
//! * [`optimizer`]: the epoch loop `w_i = w_{i-1} - (eta_t/n) grad f(w_{i-1}; pi(i))`
//!   with per-epoch trace records.
//! * [`schedule`]: closed-form constants and the geometrically increasing
//!   learning-rate plan `eta_t = K^t eta_0`, plus the target-gap sizing rule.
//! * [`diagnostics`]: estimators for smoothness / PL / variance constants and
//!   numeric checkers for the per-epoch descent and deviation bounds.
//! * [`trace`]: CSV/JSON persistence for runs.
//!
//! Batch evaluations (objective sums, gradient-norm sums, sweeps over seeds or
//! sample points) go through [`exec`], which runs them on rayon when the
//! default `parallel` feature is enabled and falls back to plain loops when it
//! is not. Results are bitwise independent of thread count either way.

pub mod diagnostics;
pub mod exec;
pub mod optimizer;
pub mod problem;
pub mod schedule;
mod seeding;
pub mod shuffling;
pub mod stats;
pub mod trace;

pub use optimizer::{run, run_epoch, EpochRecord, RunError, RunTrace, TraceOptions};
pub use problem::{FiniteSumProblem, GroundTruth, ProblemError, WeightVector};
pub use schedule::{ConstantsLedger, PlanError, Schedule, SchedulePlan};
pub use shuffling::{Permutation, ShufflingScheme};
