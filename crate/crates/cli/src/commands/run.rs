//! `run`: execute repeated seeded runs and persist traces plus a summary.

use std::path::{Path, PathBuf};

use shuffle_sgd::exec;
use shuffle_sgd::optimizer::{run, RunTrace, TraceOptions};
use shuffle_sgd::stats::mean_and_sd;
use shuffle_sgd::trace::{
    write_header_json, write_inner_csv, write_summary_csv, write_trace_csv, RunHeader, SummaryRow,
    TRACE_FORMAT,
};

use crate::config::Resolved;
use crate::CliError;

pub struct RunArtifacts {
    pub trace_paths: Vec<PathBuf>,
    pub summary_path: PathBuf,
    pub final_objectives: Vec<f64>,
}

/// Executes `repeat` runs with seeds `seed, seed+1, ..` and writes
/// `run_seed<k>.csv` / `.json` (plus an `.inner.csv` sidecar under full
/// trace) and `summary.csv` into `out`.
pub fn cmd_run(resolved: &Resolved, out: &Path) -> Result<RunArtifacts, CliError> {
    std::fs::create_dir_all(out)
        .map_err(|e| CliError::Config(format!("cannot create {}: {e}", out.display())))?;

    let seeds: Vec<u64> = (0..resolved.repeat as u64)
        .map(|r| resolved.seed + r)
        .collect();
    let opts = TraceOptions {
        full_trace: resolved.full_trace,
    };

    // Independent seeded runs; each owns its own output files.
    let problem = resolved.problem.as_ref();
    let traces: Vec<Result<RunTrace, shuffle_sgd::RunError>> =
        exec::map_collect(seeds.len(), |k| {
            run(
                problem,
                &resolved.w0,
                &resolved.schedule,
                resolved.scheme_with_seed(seeds[k]),
                resolved.epochs,
                opts,
            )
        });

    let mut trace_paths = Vec::new();
    let mut final_objectives = Vec::new();
    let mut all: Vec<RunTrace> = Vec::new();
    for (seed, trace) in seeds.iter().zip(traces) {
        let trace = trace?;
        let csv_path = out.join(format!("run_seed{seed}.csv"));
        write_trace_csv(&csv_path, &trace, resolved.f_star)?;
        let header = RunHeader {
            format: TRACE_FORMAT.to_string(),
            problem: resolved.spec.clone(),
            scheme: resolved.scheme_with_seed(*seed),
            schedule: resolved.schedule.clone(),
            epochs: resolved.epochs,
            n: problem.num_components(),
            d: problem.dim(),
            w0: resolved.w0.as_slice().to_vec(),
            f_star: resolved.f_star,
            sigma_star_sq: resolved.sigma_star_sq,
            eta_cap: resolved.eta_cap,
            full_trace: resolved.full_trace,
        };
        write_header_json(&out.join(format!("run_seed{seed}.json")), &header)?;
        if resolved.full_trace {
            write_inner_csv(
                &out.join(format!("run_seed{seed}.inner.csv")),
                &trace,
                problem.dim(),
            )?;
        }
        final_objectives.push(problem.objective(&trace.final_point));
        trace_paths.push(csv_path);
        all.push(trace);
    }

    let summary_path = out.join("summary.csv");
    write_summary_csv(&summary_path, &summarize(&all, resolved.f_star))?;

    Ok(RunArtifacts {
        trace_paths,
        summary_path,
        final_objectives,
    })
}

/// Per-epoch mean and sample-sd band across runs.
pub fn summarize(traces: &[RunTrace], f_star: Option<f64>) -> Vec<SummaryRow> {
    let epochs = traces.iter().map(|t| t.records.len()).min().unwrap_or(0);
    (0..epochs)
        .map(|k| {
            let objectives: Vec<f64> = traces
                .iter()
                .map(|t| t.records[k].objective_start)
                .collect();
            let (mean_objective, sd_objective) = mean_and_sd(&objectives);
            let (mean_gap, sd_gap) = match f_star {
                Some(fs) => {
                    let gaps: Vec<f64> = objectives.iter().map(|o| o - fs).collect();
                    let (m, s) = mean_and_sd(&gaps);
                    (Some(m), Some(s))
                }
                None => (None, None),
            };
            SummaryRow {
                epoch: traces[0].records[k].epoch,
                mean_objective,
                sd_objective,
                mean_gap,
                sd_gap,
            }
        })
        .collect()
}
