//! `gradcheck`: analytic gradients versus central differences on a problem
//! loaded from JSON.

use std::path::Path;

use serde::Serialize;

use shuffle_sgd::diagnostics::gradient_check;
use shuffle_sgd::problem::ProblemSpec;

use crate::CliError;

#[derive(Clone, Debug, Serialize)]
pub struct GradcheckReport {
    pub max_rel_err: f64,
    pub trials: usize,
    pub fd_step: f64,
    pub tolerance: f64,
}

pub fn cmd_gradcheck(
    problem_path: &Path,
    trials: usize,
    fd_step: f64,
    seed: u64,
    tolerance: f64,
) -> Result<GradcheckReport, CliError> {
    if trials == 0 {
        return Err(CliError::Config("need at least one trial".into()));
    }
    if !(fd_step > 0.0 && fd_step.is_finite()) {
        return Err(CliError::Config(format!(
            "finite-difference step {fd_step} must be positive"
        )));
    }
    let text = std::fs::read_to_string(problem_path)
        .map_err(|e| CliError::Config(format!("cannot read {}: {e}", problem_path.display())))?;
    let spec: ProblemSpec = serde_json::from_str(&text)
        .map_err(|e| CliError::Config(format!("invalid problem json: {e}")))?;
    let problem = spec.build()?;
    let max_rel_err = gradient_check(problem.as_ref(), trials, fd_step, seed);
    let report = GradcheckReport {
        max_rel_err,
        trials,
        fd_step,
        tolerance,
    };
    if max_rel_err > tolerance {
        return Err(CliError::CheckFailed(format!(
            "max relative gradient error {max_rel_err:.3e} exceeds tolerance {tolerance:.3e}"
        )));
    }
    Ok(report)
}
