//! `schedule-plan`: print the closed-form plan (and constants ledger when the
//! raw constants are given) without running anything.

use serde::Serialize;

use shuffle_sgd::schedule::{plan_schedule, C1Convention, ConstantsLedger, SchedulePlan};

use crate::CliError;

#[derive(Clone, Copy, Debug)]
pub struct PlanArgs {
    pub epsilon: f64,
    pub d_scale: f64,
    pub lambda: f64,
    /// Explicit `C1`; otherwise derived from `constants`.
    pub c1: Option<f64>,
    pub constants: Option<RawConstants>,
    pub eta_cap: Option<f64>,
    pub c1_convention: C1Convention,
}

#[derive(Clone, Copy, Debug)]
pub struct RawConstants {
    pub l: f64,
    pub mu: f64,
    pub m: f64,
    pub n_coef: f64,
    /// Defaults to `1/L^2`.
    pub gamma: Option<f64>,
}

#[derive(Clone, Debug, Serialize)]
pub struct PlanReport {
    pub ledger: Option<ConstantsLedger>,
    pub plan: SchedulePlan,
    pub recursion_ok: bool,
    pub recursion_worst_margin: f64,
}

pub fn cmd_schedule_plan(args: &PlanArgs) -> Result<PlanReport, CliError> {
    let ledger = args.constants.map(|c| {
        ConstantsLedger::compute(
            c.l,
            c.mu,
            c.m,
            c.n_coef,
            c.gamma.unwrap_or(1.0 / (c.l * c.l)),
            args.c1_convention,
        )
    });
    let c1 = match (args.c1, &ledger) {
        (Some(c1), _) => c1,
        (None, Some(ledger)) => ledger.c1,
        (None, None) => {
            return Err(CliError::Config(
                "provide --c1 or the raw constants --l --mu --m --n".into(),
            ))
        }
    };
    let plan = plan_schedule(args.epsilon, args.d_scale, args.lambda, c1, args.eta_cap)?;
    let (recursion_ok, recursion_worst_margin) = plan.verify_eta_recursion();
    Ok(PlanReport {
        ledger,
        plan,
        recursion_ok,
        recursion_worst_margin,
    })
}

pub fn render_plan(report: &PlanReport) -> String {
    let mut out = String::new();
    if let Some(l) = &report.ledger {
        out.push_str(&format!(
            "constants: L={:.6e} mu={:.6e} M={:.6e} N={:.6e} gamma={:.6e}\n\
             ledger:    B1={:.6e} B2={:.6e} C1={:.6e} C2={:.6e} C3={:.6e}\n",
            l.l, l.mu, l.m, l.n_coef, l.gamma, l.b1, l.b2, l.c1, l.c2, l.c3
        ));
    }
    let p = &report.plan;
    out.push_str(&format!(
        "plan: K={:.9} eta0={:.9e} T={} ceiling={:.6e}{}\n",
        p.k,
        p.eta0,
        p.epochs,
        p.eta_ceiling,
        p.eta_cap.map_or(String::new(), |c| format!(" cap={c:.6e}")),
    ));
    out.push_str(&format!(
        "step recursion 1/eta_t + C1 eta_t^2 <= 1/eta_(t-1): {} (worst margin {:+.3e})\n",
        if report.recursion_ok {
            "ok"
        } else {
            "VIOLATED"
        },
        report.recursion_worst_margin
    ));
    out
}
