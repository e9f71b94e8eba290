//! `grid`: coarse step-size search over a probe epoch budget.

use serde::{Deserialize, Serialize};

use shuffle_sgd::exec;
use shuffle_sgd::optimizer::{run, RunError, TraceOptions};
use shuffle_sgd::schedule::Schedule;

use crate::config::Resolved;
use crate::CliError;

/// The default coarse grid.
pub const DEFAULT_GRID: [f64; 5] = [0.0001, 0.001, 0.01, 0.1, 1.0];

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct GridEntry {
    pub eta: f64,
    /// Final objective, or `None` when the run diverged.
    pub final_objective: Option<f64>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct GridResult {
    pub entries: Vec<GridEntry>,
    /// Step size with the smallest final objective.
    pub best_eta: f64,
    pub probe_epochs: usize,
}

/// Runs each candidate step for `probe_epochs` and ranks by final objective.
/// Divergence of individual candidates is expected; only an all-diverged grid
/// is an error.
pub fn cmd_grid(
    resolved: &Resolved,
    etas: &[f64],
    probe_epochs: usize,
) -> Result<GridResult, CliError> {
    if etas.is_empty() {
        return Err(CliError::Config("the step grid is empty".into()));
    }
    if probe_epochs == 0 {
        return Err(CliError::Config("probe budget must be at least 1".into()));
    }
    if let Some(bad) = etas.iter().find(|e| !(e.is_finite() && **e > 0.0)) {
        return Err(CliError::Config(format!(
            "grid step {bad} must be positive"
        )));
    }

    let problem = resolved.problem.as_ref();
    let scheme = resolved.scheme_with_seed(resolved.seed);
    let outcomes: Vec<Result<f64, RunError>> = exec::map_collect(etas.len(), |k| {
        let schedule = Schedule::Constant { eta: etas[k] };
        run(
            problem,
            &resolved.w0,
            &schedule,
            scheme,
            probe_epochs,
            TraceOptions::default(),
        )
        .map(|trace| problem.objective(&trace.final_point))
    });

    let entries: Vec<GridEntry> = etas
        .iter()
        .zip(outcomes)
        .map(|(eta, out)| GridEntry {
            eta: *eta,
            final_objective: out.ok(),
        })
        .collect();

    let best = entries
        .iter()
        .filter_map(|e| e.final_objective.map(|f| (e.eta, f)))
        .min_by(|a, b| a.1.total_cmp(&b.1));
    match best {
        Some((best_eta, _)) => Ok(GridResult {
            entries,
            best_eta,
            probe_epochs,
        }),
        None => Err(CliError::Divergence(
            "every grid candidate diverged; no winner".into(),
        )),
    }
}
