//! Learning-rate schedules and their closed-form constants.
//!
//! The exponential plan raises the step geometrically, `eta_t = K^t eta_0`
//! with `K = 1 + C1 D^3 eps^(3/2)`, sized so that every step stays below both
//! `D sqrt(eps) / K` and the stability cap `min{ n/(2M), 1/(2L) }`, and so
//! that the per-epoch step recursion `1/eta_t + C1 eta_t^2 <= 1/eta_{t-1}`
//! holds, the inequality that lets the distance recursion telescope.

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Which third-order coefficient to use in `C1`.
///
/// The two published forms of the constant differ in one term
/// (`4 gamma L^4 / (3M)` versus `4 gamma L^4 / (6M)`); the `ThirdOverM`
/// variant is consistent with the derivation and with the `gamma = 1/L^2`
/// specialization, and is the default. The other is kept selectable for
/// auditing.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum C1Convention {
    #[default]
    ThirdOverM,
    SixthOverM,
}

/// The closed-form constants derived from `(L, mu, M, N, gamma)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConstantsLedger {
    pub l: f64,
    pub mu: f64,
    pub m: f64,
    #[serde(rename = "n")]
    pub n_coef: f64,
    pub gamma: f64,
    pub b1: f64,
    pub b2: f64,
    pub c1: f64,
    pub c2: f64,
    pub c3: f64,
}

impl ConstantsLedger {
    /// `compute` with the default `C1` convention.
    pub fn new(l: f64, mu: f64, m: f64, n_coef: f64, gamma: f64) -> Self {
        Self::compute(l, mu, m, n_coef, gamma, C1Convention::default())
    }

    /// Fills the ledger:
    /// `B1 = 8L^2/3 + 14 N L^2 / M`,
    /// `B2 = 2/M + 1 + 5/(6L^2) + 8N/(3 M L^2)`,
    /// `C1 = B1 + 4 gamma L^4 / (3M)` (default convention),
    /// `C2 = B2 + 5 gamma / (12 M)`,
    /// `C3 = gamma/(gamma+1) * mu/M`.
    ///
    /// `N = 0` is allowed (star-smooth-convex components); the rest must be
    /// positive.
    pub fn compute(l: f64, mu: f64, m: f64, n_coef: f64, gamma: f64, conv: C1Convention) -> Self {
        assert!(
            l > 0.0 && mu > 0.0 && m > 0.0 && gamma > 0.0,
            "constants must be positive"
        );
        assert!(n_coef >= 0.0, "deviation coefficient must be nonnegative");
        let l2 = l * l;
        let b1 = 8.0 * l2 / 3.0 + 14.0 * n_coef * l2 / m;
        let b2 = 2.0 / m + 1.0 + 5.0 / (6.0 * l2) + 8.0 * n_coef / (3.0 * m * l2);
        let third = match conv {
            C1Convention::ThirdOverM => 4.0 * gamma * l2 * l2 / (3.0 * m),
            C1Convention::SixthOverM => 4.0 * gamma * l2 * l2 / (6.0 * m),
        };
        let c1 = b1 + third;
        let c2 = b2 + 5.0 * gamma / (12.0 * m);
        let c3 = gamma / (gamma + 1.0) * mu / m;
        Self {
            l,
            mu,
            m,
            n_coef,
            gamma,
            b1,
            b2,
            c1,
            c2,
            c3,
        }
    }

    /// The `gamma = 1/L^2` specialization used by the complexity corollary.
    pub fn for_corollary(l: f64, mu: f64, m: f64, n_coef: f64) -> Self {
        Self::new(l, mu, m, n_coef, 1.0 / (l * l))
    }

    /// Step cap `min { n/(2M), 1/(2L) }` for a problem with `n` components.
    pub fn eta_cap(&self, n: usize) -> f64 {
        (n as f64 / (2.0 * self.m)).min(1.0 / (2.0 * self.l))
    }
}

#[derive(Debug, Error)]
pub enum PlanError {
    #[error("plan inputs must be positive and finite (eps={eps}, d_scale={d_scale}, lambda={lambda}, c1={c1})")]
    BadInputs {
        eps: f64,
        d_scale: f64,
        lambda: f64,
        c1: f64,
    },
    #[error("step ceiling {ceiling:.6e} exceeds the cap {cap:.6e}; largest admissible d_scale is {max_d:.6e}")]
    CapViolated { ceiling: f64, cap: f64, max_d: f64 },
    #[error("eta_0 underflows to zero (lambda * C1 * D^3 = {exponent:.3e} is too large)")]
    Underflow { exponent: f64 },
    #[error("target gap {eps_hat} must lie in (0, {g}]")]
    TargetOutOfRange { eps_hat: f64, g: f64 },
}

/// The exponential learning-rate plan.
///
/// `eta0` is taken as `D sqrt(eps) / (K exp(lambda_eff C1 D^3))` where
/// `lambda_eff = max(lambda, T eps^(3/2))` accounts for rounding `T` up to an
/// integer: with the effective value the chain
/// `eta_t <= D sqrt(eps)/K <= cap` holds for every `t <= T` unconditionally,
/// and when `lambda / eps^(3/2)` is already integral `lambda_eff == lambda`
/// and `eta0` equals the plain closed form. All fields are plain numbers so a
/// serialized plan round-trips bit-exactly.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SchedulePlan {
    pub epsilon: f64,
    pub d_scale: f64,
    pub lambda: f64,
    /// `max(lambda, T eps^(3/2))`, the value actually used for `eta0`.
    pub lambda_effective: f64,
    pub c1: f64,
    /// `min { n/(2M), 1/(2L) }` supplied at construction; `None` = uncapped.
    pub eta_cap: Option<f64>,
    /// `K - 1 = C1 D^3 eps^(3/2)`, kept separately for stable `ln K`.
    pub k_minus_one: f64,
    pub k: f64,
    pub eta0: f64,
    /// Epoch count `T = ceil(lambda / eps^(3/2))`.
    pub epochs: usize,
    /// `D sqrt(eps) / K`, the ceiling every step stays under.
    pub eta_ceiling: f64,
}

/// Builds and validates a plan from `(eps, D, lambda, C1, cap)`.
pub fn plan_schedule(
    epsilon: f64,
    d_scale: f64,
    lambda: f64,
    c1: f64,
    eta_cap: Option<f64>,
) -> Result<SchedulePlan, PlanError> {
    let ok = |v: f64| v.is_finite() && v > 0.0;
    if !(ok(epsilon) && ok(d_scale) && ok(lambda) && ok(c1) && eta_cap.is_none_or(ok)) {
        return Err(PlanError::BadInputs {
            eps: epsilon,
            d_scale,
            lambda,
            c1,
        });
    }

    let eps32 = epsilon.powf(1.5);
    let k_minus_one = c1 * d_scale.powi(3) * eps32;
    let k = 1.0 + k_minus_one;
    let eta_ceiling = d_scale * epsilon.sqrt() / k;
    if let Some(cap) = eta_cap {
        if eta_ceiling > cap {
            // Largest D with D sqrt(eps)/(1 + C1 D^3 eps^(3/2)) <= cap; the
            // bound D <= cap K / sqrt(eps) is reported as a first-order fix.
            let max_d = cap * k / epsilon.sqrt();
            return Err(PlanError::CapViolated {
                ceiling: eta_ceiling,
                cap,
                max_d,
            });
        }
    }

    // Guard against float noise pushing an integral lambda/eps^(3/2) just
    // above the next integer.
    let ratio = lambda / eps32;
    let epochs = (ratio * (1.0 - 1e-12)).ceil() as usize;
    let lambda_effective = lambda.max(epochs as f64 * eps32);

    let exponent = lambda_effective * c1 * d_scale.powi(3);
    let eta0 = eta_ceiling / exponent.exp();
    if eta0 == 0.0 || !eta0.is_finite() {
        return Err(PlanError::Underflow { exponent });
    }

    let plan = SchedulePlan {
        epsilon,
        d_scale,
        lambda,
        lambda_effective,
        c1,
        eta_cap,
        k_minus_one,
        k,
        eta0,
        epochs,
        eta_ceiling,
    };
    debug_assert!(plan.eta_at(epochs) <= eta_ceiling * (1.0 + 1e-12));
    Ok(plan)
}

impl SchedulePlan {
    /// `eta_t = K^t eta_0`, evaluated as `eta_0 exp(t ln K)` with `ln K`
    /// computed from `K - 1`. `t = 0` returns `eta_0`.
    pub fn eta_at(&self, t: usize) -> f64 {
        assert!(
            t <= self.epochs,
            "epoch {t} beyond plan horizon {}",
            self.epochs
        );
        self.eta0 * (t as f64 * self.k_minus_one.ln_1p()).exp()
    }

    /// Checks `1/eta_t + C1 eta_t^2 <= 1/eta_{t-1}` for every epoch with
    /// relative tolerance 1e-12; returns the all-pass flag and the worst
    /// relative margin (negative means a violation).
    pub fn verify_eta_recursion(&self) -> (bool, f64) {
        let mut worst = f64::INFINITY;
        let mut prev = self.eta0;
        for t in 1..=self.epochs {
            let eta = self.eta_at(t);
            let lhs = 1.0 / eta + self.c1 * eta * eta;
            let rhs = 1.0 / prev;
            let margin = (rhs - lhs) / rhs;
            worst = worst.min(margin);
            prev = eta;
        }
        (worst >= -1e-12, worst)
    }
}

/// Gap-target sizing from the complexity corollary: with `gamma = 1/L^2` and
/// the normalization `C1 D^3 lambda = 1`, returns
/// `G = (2 C1 D^2 e / C3) dist0_sq + C2 P / C3` and the epoch budget
/// `T = ceil(lambda G^(3/2) / eps_hat^(3/2))`. Requires `0 < eps_hat <= G`.
#[allow(clippy::too_many_arguments)]
pub fn corollary_epochs(
    l: f64,
    mu: f64,
    m: f64,
    n_coef: f64,
    p_coef: f64,
    d_scale: f64,
    dist0_sq: f64,
    eps_hat: f64,
) -> Result<(f64, usize), PlanError> {
    let ledger = ConstantsLedger::for_corollary(l, mu, m, n_coef);
    let g = 2.0 * ledger.c1 * d_scale * d_scale * std::f64::consts::E / ledger.c3 * dist0_sq
        + ledger.c2 * p_coef / ledger.c3;
    if eps_hat <= 0.0 || !eps_hat.is_finite() || eps_hat > g {
        return Err(PlanError::TargetOutOfRange { eps_hat, g });
    }
    let lambda = 1.0 / (ledger.c1 * d_scale.powi(3));
    let t = (lambda * (g / eps_hat).powf(1.5)).ceil() as usize;
    Ok((g, t))
}

/// Sizes a full plan that drives the mean gap to `eps_hat` on a problem with
/// the given constants: `eps = eps_hat / G`, `lambda = 1/(C1 D^3)`.
pub fn plan_for_target_gap(
    ledger: &ConstantsLedger,
    p_coef: f64,
    d_scale: f64,
    dist0_sq: f64,
    eps_hat: f64,
    eta_cap: Option<f64>,
) -> Result<(SchedulePlan, f64), PlanError> {
    let g = 2.0 * ledger.c1 * d_scale * d_scale * std::f64::consts::E / ledger.c3 * dist0_sq
        + ledger.c2 * p_coef / ledger.c3;
    if eps_hat <= 0.0 || !eps_hat.is_finite() || eps_hat > g {
        return Err(PlanError::TargetOutOfRange { eps_hat, g });
    }
    let lambda = 1.0 / (ledger.c1 * d_scale.powi(3));
    let plan = plan_schedule(eps_hat / g, d_scale, lambda, ledger.c1, eta_cap)?;
    Ok((plan, g))
}

/// Step-size rule consumed by the optimizer.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Schedule {
    Constant { eta: f64 },
    Exponential { plan: SchedulePlan },
}

impl Schedule {
    /// `eta_t` for epoch `t >= 1`.
    pub fn eta(&self, t: usize) -> f64 {
        match self {
            Schedule::Constant { eta } => *eta,
            Schedule::Exponential { plan } => plan.eta_at(t),
        }
    }

    /// Natural horizon: the plan length, if there is one.
    pub fn horizon(&self) -> Option<usize> {
        match self {
            Schedule::Constant { .. } => None,
            Schedule::Exponential { plan } => Some(plan.epochs),
        }
    }
}
