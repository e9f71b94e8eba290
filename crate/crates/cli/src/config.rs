//! Experiment configuration: JSON schema and resolution to runnable pieces.
//!
//! ```json
//! {
//!   "problem": {"kind": "interpolating", "n": 20, "d": 50, "seed": 1},
//!   "scheme": "rr",
//!   "seed": 7,
//!   "schedule": {"kind": "target_gap", "eps_hat": 1e-3},
//!   "repeat": 5,
//!   "full_trace": false
//! }
//! ```
//!
//! `problem` may also be a path (relative to the config file) to a problem
//! JSON document. Schedules:
//!
//! * `{"kind": "constant", "eta": 0.05}`
//! * `{"kind": "exponential", "epsilon": 0.01, "d_scale": 1.0, "lambda": 0.3,
//!    "c1": 4.0}`. `c1` may be omitted when the problem carries analytic
//!   constants; then it is computed from `(L, mu, M, N)` with
//!   `gamma` (default `1/L^2`).
//! * `{"kind": "target_gap", "eps_hat": 1e-3, "d_scale": 1.0, "p_coef": 0.0}`
//!   sizes `(eps, lambda, T)` so the mean gap reaches `eps_hat`; requires a
//!   known minimizer for the initial distance.

use std::path::Path;

use serde::{Deserialize, Serialize};

use shuffle_sgd::problem::{FiniteSumProblem, ProblemSpec};
use shuffle_sgd::schedule::{
    plan_for_target_gap, plan_schedule, C1Convention, ConstantsLedger, Schedule,
};
use shuffle_sgd::shuffling::ShufflingScheme;
use shuffle_sgd::WeightVector;

use crate::CliError;

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ProblemField {
    Inline(ProblemSpec),
    Path(String),
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ScheduleSpec {
    Constant {
        eta: f64,
    },
    Exponential {
        epsilon: f64,
        #[serde(default = "one")]
        d_scale: f64,
        lambda: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        c1: Option<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        gamma: Option<f64>,
    },
    TargetGap {
        eps_hat: f64,
        #[serde(default = "one")]
        d_scale: f64,
        #[serde(default)]
        p_coef: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        gamma: Option<f64>,
    },
    /// A pre-computed plan, e.g. the `plan` object from `schedule-plan --out`.
    Plan {
        plan: shuffle_sgd::SchedulePlan,
    },
}

fn one() -> f64 {
    1.0
}

fn default_repeat() -> usize {
    1
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub problem: ProblemField,
    /// `ig`, `ss` or `rr`.
    pub scheme: String,
    pub seed: u64,
    pub schedule: ScheduleSpec,
    /// Epoch budget; defaults to the plan horizon for plan-backed schedules.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub epochs: Option<usize>,
    #[serde(default = "default_repeat")]
    pub repeat: usize,
    #[serde(default)]
    pub full_trace: bool,
    /// Explicit start point; defaults to the problem's own.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub w0: Option<Vec<f64>>,
}

impl ExperimentConfig {
    pub fn from_file(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        serde_json::from_str(&text)
            .map_err(|e| CliError::Config(format!("invalid config {}: {e}", path.display())))
    }
}

/// Everything needed to run: validated before any epoch executes.
pub struct Resolved {
    pub spec: ProblemSpec,
    pub problem: Box<dyn FiniteSumProblem>,
    pub scheme_code: String,
    pub seed: u64,
    pub schedule: Schedule,
    pub epochs: usize,
    pub w0: WeightVector,
    pub repeat: usize,
    pub full_trace: bool,
    pub eta_cap: Option<f64>,
    pub f_star: Option<f64>,
    pub sigma_star_sq: Option<f64>,
}

impl Resolved {
    pub fn scheme_with_seed(&self, seed: u64) -> ShufflingScheme {
        ShufflingScheme::from_code(&self.scheme_code, seed)
            .expect("scheme code validated at resolution")
    }
}

/// Analytic constants ledger for a problem, when it carries them.
pub fn analytic_ledger(
    problem: &dyn FiniteSumProblem,
    gamma: Option<f64>,
) -> Option<ConstantsLedger> {
    let t = problem.ground_truth();
    let (l, mu, m) = (t.smoothness?, t.pl_mu?, t.star_m?);
    let n_coef = t.star_n.unwrap_or(0.0);
    let gamma = gamma.unwrap_or(1.0 / (l * l));
    Some(ConstantsLedger::compute(
        l,
        mu,
        m,
        n_coef,
        gamma,
        C1Convention::default(),
    ))
}

pub fn resolve(cfg: &ExperimentConfig, config_dir: &Path) -> Result<Resolved, CliError> {
    let spec = match &cfg.problem {
        ProblemField::Inline(spec) => spec.clone(),
        ProblemField::Path(rel) => {
            let path = config_dir.join(rel);
            let text = std::fs::read_to_string(&path)
                .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
            serde_json::from_str(&text)
                .map_err(|e| CliError::Config(format!("invalid problem {}: {e}", path.display())))?
        }
    };
    let problem = spec.build()?;

    if ShufflingScheme::from_code(&cfg.scheme, 0).is_none() {
        return Err(CliError::Config(format!(
            "unknown scheme {:?}; expected ig, ss or rr",
            cfg.scheme
        )));
    }

    let w0 = match &cfg.w0 {
        Some(entries) => {
            if entries.len() != problem.dim() {
                return Err(CliError::Config(format!(
                    "w0 has dimension {} but the problem needs {}",
                    entries.len(),
                    problem.dim()
                )));
            }
            WeightVector::new(entries.clone())
        }
        None => problem.initial_point(),
    };

    let truth = problem.ground_truth();
    let eta_cap = truth.eta_cap(problem.num_components());
    let f_star = truth.f_star;
    let sigma_star_sq = truth.sigma_star_sq;

    let schedule = match &cfg.schedule {
        ScheduleSpec::Constant { eta } => {
            if !(eta.is_finite() && *eta > 0.0) {
                return Err(CliError::Config(format!(
                    "constant eta {eta} must be positive"
                )));
            }
            Schedule::Constant { eta: *eta }
        }
        ScheduleSpec::Exponential {
            epsilon,
            d_scale,
            lambda,
            c1,
            gamma,
        } => {
            let c1 = match c1 {
                Some(v) => *v,
                None => {
                    analytic_ledger(problem.as_ref(), *gamma)
                        .ok_or_else(|| {
                            CliError::Config(
                                "an exponential schedule without explicit c1 needs a problem with \
                                 analytic (L, mu, M, N) constants"
                                    .into(),
                            )
                        })?
                        .c1
                }
            };
            let plan = plan_schedule(*epsilon, *d_scale, *lambda, c1, eta_cap)?;
            Schedule::Exponential { plan }
        }
        ScheduleSpec::TargetGap {
            eps_hat,
            d_scale,
            p_coef,
            gamma,
        } => {
            let ledger = analytic_ledger(problem.as_ref(), *gamma).ok_or_else(|| {
                CliError::Config(
                    "target-gap schedule needs a problem with analytic (L, mu, M, N) constants"
                        .into(),
                )
            })?;
            let w_star = truth.w_star.as_ref().ok_or_else(|| {
                CliError::Config(
                    "target-gap schedule needs a known minimizer for the initial distance".into(),
                )
            })?;
            if let Some(sigma) = sigma_star_sq {
                if sigma > 0.0 && *p_coef == 0.0 {
                    return Err(CliError::Config(
                        "problem has positive best variance; set p_coef explicitly".into(),
                    ));
                }
            }
            let dist0_sq = w0.dist_sq(w_star);
            let (plan, _g) =
                plan_for_target_gap(&ledger, *p_coef, *d_scale, dist0_sq, *eps_hat, eta_cap)?;
            Schedule::Exponential { plan }
        }
        ScheduleSpec::Plan { plan } => {
            let (ok, worst) = plan.verify_eta_recursion();
            if !ok {
                return Err(CliError::Config(format!(
                    "stored plan violates its step recursion (worst margin {worst:.3e})"
                )));
            }
            if let Some(cap) = eta_cap {
                if plan.eta_ceiling > cap * (1.0 + 1e-12) {
                    return Err(CliError::Config(format!(
                        "stored plan ceiling {:.6e} exceeds this problem's step cap {cap:.6e}",
                        plan.eta_ceiling
                    )));
                }
            }
            Schedule::Exponential { plan: plan.clone() }
        }
    };

    let epochs = match (cfg.epochs, schedule.horizon()) {
        (Some(t), Some(h)) if t > h => {
            return Err(CliError::Config(format!(
                "epochs {t} exceed the plan horizon {h}"
            )));
        }
        (Some(t), _) => t,
        (None, Some(h)) => h,
        (None, None) => {
            return Err(CliError::Config(
                "a constant schedule needs an explicit epoch budget".into(),
            ));
        }
    };
    if epochs == 0 {
        return Err(CliError::Config("epoch budget must be at least 1".into()));
    }
    if cfg.repeat == 0 {
        return Err(CliError::Config("repeat must be at least 1".into()));
    }

    Ok(Resolved {
        spec,
        problem,
        scheme_code: cfg.scheme.clone(),
        seed: cfg.seed,
        schedule,
        epochs,
        w0,
        repeat: cfg.repeat,
        full_trace: cfg.full_trace,
        eta_cap,
        f_star,
        sigma_star_sq,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn base_config() -> ExperimentConfig {
        serde_json::from_str(
            r#"{
                "problem": {"kind": "interpolating", "n": 6, "d": 12, "seed": 1},
                "scheme": "rr",
                "seed": 3,
                "schedule": {"kind": "constant", "eta": 0.25},
                "epochs": 10
            }"#,
        )
        .unwrap()
    }

    #[test]
    fn resolves_a_valid_triple() {
        let r = resolve(&base_config(), Path::new(".")).unwrap();
        assert_eq!(r.epochs, 10);
        assert_eq!(r.repeat, 1);
        assert!((r.eta_cap.unwrap() - 0.5).abs() < 1e-12);
        assert_eq!(r.f_star, Some(0.0));
    }

    #[test]
    fn zero_epochs_rejected() {
        let mut cfg = base_config();
        cfg.epochs = Some(0);
        assert!(matches!(
            resolve(&cfg, Path::new(".")),
            Err(CliError::Config(_))
        ));
    }

    #[test]
    fn unknown_scheme_rejected() {
        let mut cfg = base_config();
        cfg.scheme = "xyz".into();
        assert!(resolve(&cfg, Path::new(".")).is_err());
    }

    #[test]
    fn target_gap_schedule_resolves_on_interpolating() {
        let mut cfg = base_config();
        cfg.schedule = ScheduleSpec::TargetGap {
            eps_hat: 1e-2,
            d_scale: 1.0,
            p_coef: 0.0,
            gamma: None,
        };
        cfg.epochs = None;
        let r = resolve(&cfg, Path::new(".")).unwrap();
        match &r.schedule {
            Schedule::Exponential { plan } => {
                assert!(plan.eta_ceiling <= 0.5);
                assert_eq!(r.epochs, plan.epochs);
            }
            other => panic!("expected a plan, got {other:?}"),
        }
    }

    #[test]
    fn exponential_schedule_uses_analytic_constants() {
        let mut cfg = base_config();
        cfg.schedule = ScheduleSpec::Exponential {
            epsilon: 0.01,
            d_scale: 1.0,
            lambda: 0.01,
            c1: None,
            gamma: None,
        };
        cfg.epochs = None;
        let r = resolve(&cfg, Path::new(".")).unwrap();
        // Interpolating problems have L = mu = M = 1, N = 0, gamma = 1/L^2:
        // C1 = 8/3 + 4/3 = 4.
        match &r.schedule {
            Schedule::Exponential { plan } => assert!((plan.c1 - 4.0).abs() < 1e-12),
            other => panic!("unexpected {other:?}"),
        }
    }
}
