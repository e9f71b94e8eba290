//! JSON problem descriptions.
//!
//! ```json
//! {"kind": "least_squares", "rows": [[1.0], [1.0]], "targets": [0.0, 2.0]}
//! {"kind": "interpolating", "n": 20, "d": 50, "seed": 1, "wstar_norm": 4.5}
//! {"kind": "bias_mlp", "arch": {"input_dim": 8, "hidden": [32, 16],
//!   "output_dim": 1, "activation": "tanh"},
//!   "data": {"source": "teacher", "samples": 24, "seed": 3}, "init_seed": 7}
//! ```
//!
//! `wstar_norm` defaults to [`DEFAULT_WSTAR_NORM`](super::DEFAULT_WSTAR_NORM);
//! explicit `bias_mlp` data uses `{"source": "explicit", "inputs": [...],
//! "labels": [...]}`.

use serde::{Deserialize, Serialize};

use super::{
    interpolating_scaled, BiasMlp, FiniteSumProblem, LeastSquares, MlpArchitecture, ProblemError,
    DEFAULT_WSTAR_NORM,
};

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ProblemSpec {
    LeastSquares {
        rows: Vec<Vec<f64>>,
        targets: Vec<f64>,
    },
    Interpolating {
        n: usize,
        d: usize,
        seed: u64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        wstar_norm: Option<f64>,
    },
    BiasMlp {
        arch: MlpArchitecture,
        data: MlpData,
        init_seed: u64,
    },
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "source", rename_all = "snake_case", deny_unknown_fields)]
pub enum MlpData {
    Explicit {
        inputs: Vec<Vec<f64>>,
        labels: Vec<Vec<f64>>,
    },
    /// Gaussian inputs labeled by a hidden same-architecture network.
    Teacher { samples: usize, seed: u64 },
}

impl ProblemSpec {
    pub fn build(&self) -> Result<Box<dyn FiniteSumProblem>, ProblemError> {
        match self {
            ProblemSpec::LeastSquares { rows, targets } => {
                Ok(Box::new(LeastSquares::new(rows.clone(), targets.clone())?))
            }
            ProblemSpec::Interpolating {
                n,
                d,
                seed,
                wstar_norm,
            } => Ok(Box::new(interpolating_scaled(
                *n,
                *d,
                *seed,
                wstar_norm.unwrap_or(DEFAULT_WSTAR_NORM),
            )?)),
            ProblemSpec::BiasMlp {
                arch,
                data,
                init_seed,
            } => match data {
                MlpData::Explicit { inputs, labels } => Ok(Box::new(BiasMlp::new(
                    arch.clone(),
                    inputs.clone(),
                    labels.clone(),
                    *init_seed,
                )?)),
                MlpData::Teacher { samples, seed } => Ok(Box::new(BiasMlp::with_teacher_data(
                    arch.clone(),
                    *samples,
                    *seed,
                    *init_seed,
                )?)),
            },
        }
    }

    /// Short label for tables and file names.
    pub fn label(&self) -> String {
        match self {
            ProblemSpec::LeastSquares { rows, .. } => format!("least_squares(n={})", rows.len()),
            ProblemSpec::Interpolating { n, d, seed, .. } => {
                format!("interpolating(n={n}, d={d}, seed={seed})")
            }
            ProblemSpec::BiasMlp { arch, .. } => format!(
                "bias_mlp({}-{}-{})",
                arch.input_dim,
                arch.hidden
                    .iter()
                    .map(|h| h.to_string())
                    .collect::<Vec<_>>()
                    .join("-"),
                arch.output_dim
            ),
        }
    }
}
