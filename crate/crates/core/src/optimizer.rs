//! The shuffling epoch loop.
//!
//! One epoch visits every component once in a permutation order, stepping
//! `w_i = w_{i-1} - (eta_t / n) * grad f(w_{i-1}; pi(i))`, so the epoch end
//! point telescopes to `w_0 - (eta_t / n) * Σ_j grad f(w_j; pi(j+1))`. The
//! inner loop is strictly sequential; per-epoch summaries (objective,
//! gradient-norm averages) are batch evaluations and may run in parallel.
//!
//! Records keep running scalar sums, not iterates; inner iterates and the
//! permutation are retained only when [`TraceOptions::full_trace`] is set.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::problem::{FiniteSumProblem, WeightVector};
use crate::schedule::Schedule;
use crate::shuffling::{make_permutation, Permutation, ShufflingScheme};

/// Abort threshold for the squared iterate norm.
const DIVERGENCE_SQ_NORM: f64 = 1e24;

/// Relative tolerance for the telescoped end-point identity.
pub const TELESCOPE_TOL: f64 = 1e-10;

#[derive(Clone, Copy, Debug, Default)]
pub struct TraceOptions {
    /// Retain inner iterates and the permutation per epoch.
    pub full_trace: bool,
}

#[derive(Debug, Error)]
pub enum RunError {
    #[error("iterate diverged at epoch {epoch}, inner step {step}: non-finite value or squared norm above 1e24")]
    Diverged { epoch: usize, step: usize },
    #[error("step size eta_{epoch} = {eta} must be positive and finite")]
    BadEta { epoch: usize, eta: f64 },
    #[error("a run needs at least one epoch")]
    ZeroEpochs,
}

/// Scalar summary of one epoch (all `(1/n)`-normalized where applicable).
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct EpochRecord {
    /// Epoch index `t >= 1`.
    pub epoch: usize,
    /// `eta_t` (inner steps use `eta_t / n`).
    pub eta: f64,
    /// `F(w_0^t)`, the objective at the epoch start point.
    pub objective_start: f64,
    /// `(1/n) Σ_i ||grad f(w_0^t; i)||^2`.
    pub avg_sq_grad_start: f64,
    /// `(1/n) Σ_i ||grad f(w_{i-1}^t; pi(i))||^2` along the inner path.
    pub avg_sq_grad_inner: f64,
    /// `(1/n) Σ_{j=0}^{n-1} ||w_j - w_0||^2`.
    pub dev_head: f64,
    /// `(1/n) Σ_{j=0}^{n} ||w_j - w_0||^2` (adds the end point).
    pub dev_full: f64,
    /// `||w_0 - w*||^2` when the minimizer is known.
    pub dist_sq_start: Option<f64>,
    /// `||w_n - w*||^2` when the minimizer is known.
    pub dist_sq_end: Option<f64>,
    /// `(1/n) Σ_{j=0}^{n-1} ||w_j - w*||^2` when the minimizer is known.
    pub dist_head: Option<f64>,
    /// Relative error of the telescoped end point.
    pub telescope_rel_err: f64,
    /// Whether `eta_t <= min{ n/(2M), 1/(2L) }`, when both constants are known.
    pub eta_within_cap: Option<bool>,
    /// Inner detail, kept only under `full_trace`.
    #[serde(skip)]
    pub detail: Option<EpochDetail>,
}

impl EpochRecord {
    pub fn telescope_ok(&self) -> bool {
        self.telescope_rel_err <= TELESCOPE_TOL
    }
}

/// Inner iterates `w_0 .. w_n` and the visiting order of one epoch.
#[derive(Clone, Debug)]
pub struct EpochDetail {
    pub permutation: Permutation,
    pub iterates: Vec<WeightVector>,
}

/// A completed run: per-epoch records plus the configuration that produced it.
#[derive(Clone, Debug)]
pub struct RunTrace {
    pub records: Vec<EpochRecord>,
    pub scheme: ShufflingScheme,
    pub schedule: Schedule,
    pub final_point: WeightVector,
}

impl RunTrace {
    /// `min_{t <= T} F(w_0^t) - F*`, the best start-point gap seen so far.
    pub fn min_gap(&self, f_star: f64) -> Option<f64> {
        self.records
            .iter()
            .map(|r| r.objective_start - f_star)
            .fold(None, |acc: Option<f64>, g| {
                Some(acc.map_or(g, |a| a.min(g)))
            })
    }
}

/// Runs one epoch from `w0` with step `eta / n` in the order `perm`.
pub fn run_epoch<P: FiniteSumProblem + ?Sized>(
    problem: &P,
    w0: &WeightVector,
    eta: f64,
    perm: &Permutation,
    epoch: usize,
    opts: TraceOptions,
) -> Result<(WeightVector, EpochRecord), RunError> {
    if !(eta.is_finite() && eta > 0.0) {
        return Err(RunError::BadEta { epoch, eta });
    }
    let n = problem.num_components();
    assert_eq!(perm.len(), n, "permutation length must equal n");
    assert_eq!(w0.dim(), problem.dim(), "dimension mismatch");

    let truth = problem.ground_truth();
    let w_star = truth.w_star.as_ref();

    let objective_start = problem.objective(w0);
    let avg_sq_grad_start = problem.mean_sq_grad_norm(w0);

    let inner_step = eta / n as f64;
    let mut w = w0.clone();
    let mut grad_sum = vec![0.0; problem.dim()];
    let mut avg_inner_sum = 0.0;
    let mut dev_head_sum = 0.0;
    let mut dist_head_sum = w_star.map(|_| 0.0);
    let mut iterates = opts.full_trace.then(|| vec![w.clone()]);

    for i in 1..=n {
        let g = problem.component_grad(&w, perm.at(i - 1));
        avg_inner_sum += g.iter().map(|v| v * v).sum::<f64>();
        dev_head_sum += w.dist_sq(w0);
        if let (Some(sum), Some(ws)) = (dist_head_sum.as_mut(), w_star) {
            *sum += w.dist_sq(ws);
        }
        for (s, gj) in grad_sum.iter_mut().zip(&g) {
            *s += gj;
        }
        w.sub_scaled(inner_step, &g);
        let sq = w.as_slice().iter().map(|v| v * v).sum::<f64>();
        if !sq.is_finite() || sq > DIVERGENCE_SQ_NORM {
            return Err(RunError::Diverged { epoch, step: i });
        }
        if let Some(iters) = iterates.as_mut() {
            iters.push(w.clone());
        }
    }

    let nf = n as f64;
    let dev_full = (dev_head_sum + w.dist_sq(w0)) / nf;

    // End point must telescope: w_n = w_0 - (eta/n) Σ_j grad f(w_j; pi(j+1)).
    let mut telescoped = w0.clone();
    telescoped.sub_scaled(inner_step, &grad_sum);
    let telescope_rel_err = (w.dist_sq(&telescoped)).sqrt() / (1.0 + w.sq_norm().sqrt());

    let record = EpochRecord {
        epoch,
        eta,
        objective_start,
        avg_sq_grad_start,
        avg_sq_grad_inner: avg_inner_sum / nf,
        dev_head: dev_head_sum / nf,
        dev_full,
        dist_sq_start: w_star.map(|ws| w0.dist_sq(ws)),
        dist_sq_end: w_star.map(|ws| w.dist_sq(ws)),
        dist_head: dist_head_sum.map(|s| s / nf),
        telescope_rel_err,
        eta_within_cap: truth.eta_cap(n).map(|cap| eta <= cap),
        detail: iterates.map(|iters| EpochDetail {
            permutation: perm.clone(),
            iterates: iters,
        }),
    };
    Ok((w, record))
}

/// Outcome of a streaming run.
pub struct StreamOutcome {
    pub epochs_run: usize,
    pub stopped_early: bool,
    pub final_point: WeightVector,
}

/// Chains epochs, handing each record to `on_epoch`; stops early when the
/// callback returns `true`. Retains nothing itself.
pub fn run_streaming<P, F>(
    problem: &P,
    w0: &WeightVector,
    schedule: &Schedule,
    scheme: ShufflingScheme,
    max_epochs: usize,
    opts: TraceOptions,
    mut on_epoch: F,
) -> Result<StreamOutcome, RunError>
where
    P: FiniteSumProblem + ?Sized,
    F: FnMut(&EpochRecord) -> bool,
{
    if max_epochs == 0 {
        return Err(RunError::ZeroEpochs);
    }
    let n = problem.num_components();
    let mut w = w0.clone();
    for t in 1..=max_epochs {
        let perm = make_permutation(scheme, n, t);
        let (next, record) = run_epoch(problem, &w, schedule.eta(t), &perm, t, opts)?;
        w = next;
        if on_epoch(&record) {
            return Ok(StreamOutcome {
                epochs_run: t,
                stopped_early: true,
                final_point: w,
            });
        }
    }
    Ok(StreamOutcome {
        epochs_run: max_epochs,
        stopped_early: false,
        final_point: w,
    })
}

/// Runs `epochs` epochs and collects the full trace. Deterministic in
/// `(problem, w0, schedule, scheme)`.
pub fn run<P: FiniteSumProblem + ?Sized>(
    problem: &P,
    w0: &WeightVector,
    schedule: &Schedule,
    scheme: ShufflingScheme,
    epochs: usize,
    opts: TraceOptions,
) -> Result<RunTrace, RunError> {
    let mut records = Vec::with_capacity(epochs.min(1 << 20));
    let outcome = run_streaming(problem, w0, schedule, scheme, epochs, opts, |r| {
        records.push(r.clone());
        false
    })?;
    Ok(RunTrace {
        records,
        scheme,
        schedule: schedule.clone(),
        final_point: outcome.final_point,
    })
}
