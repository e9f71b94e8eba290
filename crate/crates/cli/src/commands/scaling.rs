//! `scaling`: epochs-to-target study over a list of gap targets, with a
//! log-log slope fit against the `eps_hat^(-3/2)` complexity shape.

use std::path::Path;

use serde::{Deserialize, Serialize};

use shuffle_sgd::exec;
use shuffle_sgd::optimizer::{run_streaming, TraceOptions};
use shuffle_sgd::schedule::{plan_for_target_gap, Schedule};
use shuffle_sgd::stats::{fit_log_log, LineFit};

use crate::config::{analytic_ledger, ExperimentConfig, Resolved, ScheduleSpec};
use crate::CliError;

/// Hard epoch cap per target.
pub const DEFAULT_MAX_EPOCHS: usize = 1_000_000;

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ScalingPoint {
    pub eps_hat: f64,
    /// First epoch `t` whose start-point gap was at or below the target.
    pub epochs: Option<usize>,
    /// True when the cap (or plan horizon) ran out first.
    pub censored: bool,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ScalingResult {
    pub points: Vec<ScalingPoint>,
    pub fit: LineFit,
}

/// Patches the config so it resolves regardless of the per-target values the
/// study substitutes later.
pub fn resolve_for_scaling(
    cfg: &ExperimentConfig,
    config_dir: &Path,
    targets: &[f64],
) -> Result<(Resolved, ScheduleSpec), CliError> {
    if targets.len() < 3 {
        return Err(CliError::Config(format!(
            "a scaling study needs at least 3 targets (got {})",
            targets.len()
        )));
    }
    if let Some(bad) = targets.iter().find(|t| !(t.is_finite() && **t > 0.0)) {
        return Err(CliError::Config(format!("target {bad} must be positive")));
    }
    let mut patched = cfg.clone();
    patched.epochs = None;
    match &mut patched.schedule {
        ScheduleSpec::TargetGap { eps_hat, .. } => {
            *eps_hat = targets.iter().cloned().fold(f64::MIN, f64::max);
        }
        ScheduleSpec::Constant { .. } => {
            patched.epochs = Some(1);
        }
        ScheduleSpec::Exponential { .. } | ScheduleSpec::Plan { .. } => {
            return Err(CliError::Config(
                "scaling uses either a target_gap family (per-target plans) or a constant step"
                    .into(),
            ));
        }
    }
    let resolved = crate::config::resolve(&patched, config_dir)?;
    Ok((resolved, cfg.schedule.clone()))
}

/// Runs one target to its first-reach epoch. `Ok(None)` means censored.
fn epochs_to_reach(
    resolved: &Resolved,
    schedule: &Schedule,
    eps_hat: f64,
    budget: usize,
    f_star: f64,
) -> Result<Option<usize>, CliError> {
    let mut reached = None;
    let outcome = run_streaming(
        resolved.problem.as_ref(),
        &resolved.w0,
        schedule,
        resolved.scheme_with_seed(resolved.seed),
        budget,
        TraceOptions::default(),
        |record| {
            if record.objective_start - f_star <= eps_hat {
                reached = Some(record.epoch);
                true
            } else {
                false
            }
        },
    )?;
    let _ = outcome;
    Ok(reached)
}

/// Runs every target and fits `log(epochs)` against `log(1/eps_hat)` over the
/// uncensored points.
pub fn cmd_scaling(
    resolved: &Resolved,
    family: &ScheduleSpec,
    targets: &[f64],
    max_epochs: usize,
) -> Result<ScalingResult, CliError> {
    let f_star = resolved.f_star.ok_or_else(|| {
        CliError::Config("scaling needs a problem with a known optimum value".into())
    })?;

    let outcomes: Vec<Result<ScalingPoint, CliError>> = exec::map_collect(targets.len(), |k| {
        let eps_hat = targets[k];
        let (schedule, budget) = match family {
            ScheduleSpec::Constant { eta } => (Schedule::Constant { eta: *eta }, max_epochs),
            ScheduleSpec::TargetGap {
                d_scale,
                p_coef,
                gamma,
                ..
            } => {
                let ledger =
                    analytic_ledger(resolved.problem.as_ref(), *gamma).ok_or_else(|| {
                        CliError::Config("target-gap family needs analytic constants".into())
                    })?;
                let w_star = resolved
                    .problem
                    .ground_truth()
                    .w_star
                    .as_ref()
                    .ok_or_else(|| {
                        CliError::Config("target-gap family needs a known minimizer".into())
                    })?;
                let dist0_sq = resolved.w0.dist_sq(w_star);
                let (plan, _g) = plan_for_target_gap(
                    &ledger,
                    *p_coef,
                    *d_scale,
                    dist0_sq,
                    eps_hat,
                    resolved.eta_cap,
                )?;
                let budget = plan.epochs.min(max_epochs);
                (Schedule::Exponential { plan }, budget)
            }
            ScheduleSpec::Exponential { .. } | ScheduleSpec::Plan { .. } => {
                return Err(CliError::Config("unsupported scaling family".into()))
            }
        };
        let epochs = epochs_to_reach(resolved, &schedule, eps_hat, budget, f_star)?;
        Ok(ScalingPoint {
            eps_hat,
            epochs,
            censored: epochs.is_none(),
        })
    });

    let mut points = Vec::with_capacity(targets.len());
    for outcome in outcomes {
        points.push(outcome?);
    }

    let usable: Vec<(f64, f64)> = points
        .iter()
        .filter_map(|p| p.epochs.map(|t| (p.eps_hat, t as f64)))
        .collect();
    if usable.len() < 3 {
        return Err(CliError::CheckFailed(format!(
            "only {} of {} targets were reached before the cap; cannot fit a slope",
            usable.len(),
            points.len()
        )));
    }
    let fit = fit_log_log(&usable).map_err(CliError::config)?;
    Ok(ScalingResult { points, fit })
}
