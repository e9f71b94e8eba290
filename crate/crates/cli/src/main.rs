use std::path::{Path, PathBuf};

use clap::error::ErrorKind;
use clap::{Parser, Subcommand};

use shuffle_sgd::diagnostics::DiagnosticsConfig;
use shuffle_sgd::schedule::C1Convention;

use shuffle_sgd_cli::commands::diagnose::{render_report, report_exit};
use shuffle_sgd_cli::commands::grid::DEFAULT_GRID;
use shuffle_sgd_cli::commands::scaling::{resolve_for_scaling, DEFAULT_MAX_EPOCHS};
use shuffle_sgd_cli::commands::schedule_plan::{render_plan, PlanArgs, RawConstants};
use shuffle_sgd_cli::commands::{
    cmd_diagnose, cmd_gradcheck, cmd_grid, cmd_run, cmd_scaling, cmd_schedule_plan,
};
use shuffle_sgd_cli::config::{resolve, ExperimentConfig};
use shuffle_sgd_cli::CliError;

#[derive(Parser)]
#[command(
    name = "shuffle-sgd",
    version,
    about = "Shuffling-type SGD on finite-sum problems: runs, schedules, diagnostics"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args, Clone, Default)]
struct Overrides {
    /// Override the config's sampling order: ig, ss or rr.
    #[arg(long)]
    scheme: Option<String>,
    /// Override the config's base seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Override the config's repeat count.
    #[arg(long)]
    repeat: Option<usize>,
    /// Record inner iterates (needed by trajectory diagnostics).
    #[arg(long)]
    full_trace: bool,
    /// Override the config's epoch budget.
    #[arg(long)]
    epochs: Option<usize>,
}

impl Overrides {
    fn apply(&self, cfg: &mut ExperimentConfig) {
        if let Some(s) = &self.scheme {
            cfg.scheme = s.clone();
        }
        if let Some(s) = self.seed {
            cfg.seed = s;
        }
        if let Some(r) = self.repeat {
            cfg.repeat = r;
        }
        if self.full_trace {
            cfg.full_trace = true;
        }
        if let Some(t) = self.epochs {
            cfg.epochs = Some(t);
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Run repeated seeded experiments; write per-run CSV traces and a summary.
    Run {
        /// Experiment config JSON.
        #[arg(long)]
        config: PathBuf,
        /// Output directory.
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        overrides: Overrides,
    },
    /// Coarse step-size search at a fixed probe budget.
    Grid {
        #[arg(long)]
        config: PathBuf,
        /// Comma-separated candidate steps; defaults to the coarse grid.
        #[arg(long, value_delimiter = ',')]
        etas: Option<Vec<f64>>,
        #[arg(long, default_value_t = 100)]
        probe_epochs: usize,
        /// Optional JSON report path.
        #[arg(long)]
        out: Option<PathBuf>,
        #[command(flatten)]
        overrides: Overrides,
    },
    /// Epochs-to-target study with a log-log slope fit.
    Scaling {
        #[arg(long)]
        config: PathBuf,
        /// Comma-separated gap targets (at least 3).
        #[arg(long, value_delimiter = ',')]
        targets: Vec<f64>,
        #[arg(long, default_value_t = DEFAULT_MAX_EPOCHS)]
        max_epochs: usize,
        #[arg(long)]
        out: Option<PathBuf>,
        #[command(flatten)]
        overrides: Overrides,
    },
    /// Estimate constants and verify the per-epoch bounds on a stored trace.
    Diagnose {
        /// Trace CSV produced by `run`.
        #[arg(long)]
        trace: PathBuf,
        /// Run header JSON produced alongside the trace.
        #[arg(long)]
        header: PathBuf,
        /// Inner-iterate sidecar (written under --full-trace).
        #[arg(long)]
        inner: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Print the geometric learning-rate plan and its constants.
    SchedulePlan {
        #[arg(long)]
        eps: f64,
        #[arg(long = "d-scale", alias = "D", default_value_t = 1.0)]
        d_scale: f64,
        #[arg(long)]
        lambda: f64,
        /// Explicit C1 (otherwise derived from --l --mu --m --n).
        #[arg(long, alias = "C1")]
        c1: Option<f64>,
        #[arg(long)]
        l: Option<f64>,
        #[arg(long)]
        mu: Option<f64>,
        #[arg(long)]
        m: Option<f64>,
        #[arg(long, default_value_t = 0.0)]
        n: f64,
        #[arg(long)]
        gamma: Option<f64>,
        /// Step cap min{n/(2M), 1/(2L)} to enforce, if any.
        #[arg(long)]
        cap: Option<f64>,
        /// Use the alternative (statement-form) third term in C1.
        #[arg(long)]
        alt_c1: bool,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Compare analytic gradients against central finite differences.
    Gradcheck {
        /// Problem JSON.
        #[arg(long)]
        problem: PathBuf,
        #[arg(long, default_value_t = 50)]
        trials: usize,
        #[arg(long, default_value_t = 1e-5)]
        h: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Failure threshold on the max relative error.
        #[arg(long, default_value_t = 1e-5)]
        tol: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn main() {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            std::process::exit(code);
        }
    };
    if let Err(e) = dispatch(cli) {
        eprintln!("error: {e}");
        std::process::exit(e.exit_code());
    }
}

fn load_config(
    path: &Path,
    overrides: &Overrides,
) -> Result<(ExperimentConfig, PathBuf), CliError> {
    let mut cfg = ExperimentConfig::from_file(path)?;
    overrides.apply(&mut cfg);
    let dir = path
        .parent()
        .map(|p| p.to_path_buf())
        .unwrap_or_else(|| PathBuf::from("."));
    Ok((cfg, dir))
}

fn write_json<T: serde::Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    let text = serde_json::to_string_pretty(value).map_err(CliError::config)?;
    std::fs::write(path, text + "\n")
        .map_err(|e| CliError::Config(format!("cannot write {}: {e}", path.display())))
}

fn dispatch(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Run {
            config,
            out,
            overrides,
        } => {
            let (cfg, dir) = load_config(&config, &overrides)?;
            let resolved = resolve(&cfg, &dir)?;
            let artifacts = cmd_run(&resolved, &out)?;
            println!(
                "wrote {} trace(s) and {}",
                artifacts.trace_paths.len(),
                artifacts.summary_path.display()
            );
            for (path, f) in artifacts
                .trace_paths
                .iter()
                .zip(&artifacts.final_objectives)
            {
                println!("  {}  final objective {f:.6e}", path.display());
            }
            Ok(())
        }
        Command::Grid {
            config,
            etas,
            probe_epochs,
            out,
            overrides,
        } => {
            let (cfg, dir) = load_config(&config, &overrides)?;
            let resolved = resolve(&cfg, &dir)?;
            let grid = etas.unwrap_or_else(|| DEFAULT_GRID.to_vec());
            let result = cmd_grid(&resolved, &grid, probe_epochs)?;
            println!("eta            final objective");
            for e in &result.entries {
                match e.final_objective {
                    Some(f) => println!("{:<14.6e} {:.6e}", e.eta, f),
                    None => println!("{:<14.6e} diverged", e.eta),
                }
            }
            println!(
                "best eta: {:.6e} ({} probe epochs)",
                result.best_eta, result.probe_epochs
            );
            if let Some(path) = out {
                write_json(&path, &result)?;
            }
            Ok(())
        }
        Command::Scaling {
            config,
            targets,
            max_epochs,
            out,
            overrides,
        } => {
            let (cfg, dir) = load_config(&config, &overrides)?;
            let (resolved, family) = resolve_for_scaling(&cfg, &dir, &targets)?;
            let result = cmd_scaling(&resolved, &family, &targets, max_epochs)?;
            println!("eps_hat        epochs");
            for p in &result.points {
                match p.epochs {
                    Some(t) => println!("{:<14.6e} {t}", p.eps_hat),
                    None => println!("{:<14.6e} censored (cap {max_epochs})", p.eps_hat),
                }
            }
            println!(
                "fit: slope {:.4} intercept {:.4}",
                result.fit.slope, result.fit.intercept
            );
            if let Some(path) = out {
                write_json(&path, &result)?;
            }
            Ok(())
        }
        Command::Diagnose {
            trace,
            header,
            inner,
            out,
            seed,
        } => {
            let cfg = DiagnosticsConfig {
                seed,
                ..DiagnosticsConfig::default()
            };
            let report = cmd_diagnose(&trace, &header, inner.as_deref(), &cfg)?;
            print!("{}", render_report(&report));
            if let Some(path) = out {
                write_json(&path, &report)?;
            }
            report_exit(&report)
        }
        Command::SchedulePlan {
            eps,
            d_scale,
            lambda,
            c1,
            l,
            mu,
            m,
            n,
            gamma,
            cap,
            alt_c1,
            out,
        } => {
            let constants = match (l, mu, m) {
                (Some(l), Some(mu), Some(m)) => Some(RawConstants {
                    l,
                    mu,
                    m,
                    n_coef: n,
                    gamma,
                }),
                (None, None, None) => None,
                _ => {
                    return Err(CliError::Config(
                        "raw constants need all of --l --mu --m".into(),
                    ))
                }
            };
            let args = PlanArgs {
                epsilon: eps,
                d_scale,
                lambda,
                c1,
                constants,
                eta_cap: cap,
                c1_convention: if alt_c1 {
                    C1Convention::SixthOverM
                } else {
                    C1Convention::ThirdOverM
                },
            };
            let report = cmd_schedule_plan(&args)?;
            print!("{}", render_plan(&report));
            if let Some(path) = out {
                write_json(&path, &report)?;
            }
            Ok(())
        }
        Command::Gradcheck {
            problem,
            trials,
            h,
            seed,
            tol,
            out,
        } => {
            let result = cmd_gradcheck(&problem, trials, h, seed, tol);
            match result {
                Ok(report) => {
                    println!(
                        "max relative gradient error {:.3e} over {} trials (h = {:.1e})",
                        report.max_rel_err, report.trials, report.fd_step
                    );
                    if let Some(path) = out {
                        write_json(&path, &report)?;
                    }
                    Ok(())
                }
                Err(e) => Err(e),
            }
        }
    }
}
