//! `diagnose`: rebuild the problem from a run header, replay the checkers
//! over a persisted trace, and emit the constants-and-checks report.

use std::path::Path;

use shuffle_sgd::diagnostics::{diagnose, DiagnosticsConfig, DiagnosticsReport};
use shuffle_sgd::optimizer::EpochRecord;
use shuffle_sgd::trace::{read_header_json, read_inner_csv, read_trace_csv, InnerEpoch};

use crate::CliError;

pub fn cmd_diagnose(
    trace_path: &Path,
    header_path: &Path,
    inner_path: Option<&Path>,
    cfg: &DiagnosticsConfig,
) -> Result<DiagnosticsReport, CliError> {
    let header = read_header_json(header_path)?;
    let problem = header.problem.build()?;
    let records: Vec<EpochRecord> = read_trace_csv(trace_path)?
        .iter()
        .map(|row| row.to_record())
        .collect();
    let inner: Option<Vec<InnerEpoch>> = match inner_path {
        Some(path) => Some(read_inner_csv(path)?),
        None => None,
    };
    Ok(diagnose(problem.as_ref(), &records, inner.as_deref(), cfg))
}

/// Human-readable rendering of a report.
pub fn render_report(report: &DiagnosticsReport) -> String {
    let mut out = String::new();
    let opt = |v: Option<f64>| v.map_or("-".to_string(), |x| format!("{x:.6e}"));
    out.push_str(&format!(
        "L_hat            {:.6e}{}\n",
        report.l_hat,
        report
            .l_analytic
            .map_or(String::new(), |l| format!("   (analytic {l:.6e})"))
    ));
    out.push_str(&format!("mu_hat           {}\n", opt(report.mu_hat)));
    out.push_str(&format!(
        "sigma_star_sq    {}\n",
        opt(report.sigma_star_sq_hat)
    ));
    out.push_str(&format!("M_hat (N=0)      {}\n", opt(report.m_hat_n_zero)));
    out.push_str(&format!(
        "N_hat (M=2L)     {}\n",
        opt(report.n_hat_at_two_l)
    ));
    out.push_str(&format!(
        "F_star           {}{}\n",
        opt(report.f_star_used),
        if report.f_star_is_observed_bound {
            "   (best observed; upper bound)"
        } else {
            ""
        }
    ));
    out.push_str(&format!(
        "gradcheck        {:.3e} max rel err\n",
        report.gradient_max_rel_err
    ));
    if report.smoothness_caveat {
        out.push_str(
            "warning: activation is not L-smooth; smoothness-based checks are heuristic\n",
        );
    }
    out.push_str(
        "\ncheck                        pass    fail  out_of_regime  unavailable  worst_margin\n",
    );
    for c in &report.checks {
        out.push_str(&format!(
            "{:<28} {:>6}  {:>6}  {:>13}  {:>11}  {}\n",
            c.name,
            c.pass,
            c.fail,
            c.out_of_regime,
            c.unavailable,
            c.worst_margin
                .map_or("-".to_string(), |m| format!("{m:+.3e}")),
        ));
    }
    out
}

/// Exit-code policy: any in-regime failure is an acceptance-check failure.
pub fn report_exit(report: &DiagnosticsReport) -> Result<(), CliError> {
    let failing: Vec<&str> = report
        .checks
        .iter()
        .filter(|c| c.fail > 0)
        .map(|c| c.name.as_str())
        .collect();
    if failing.is_empty() {
        Ok(())
    } else {
        Err(CliError::CheckFailed(format!(
            "checks reported failures: {}",
            failing.join(", ")
        )))
    }
}
