//! Trace persistence: a versioned CSV per run, a JSON run header, and an
//! optional inner-iterate sidecar for full traces.
//!
//! Trace CSV (`trace-v1`) columns, one row per epoch:
//!
//! ```text
//! epoch,eta,objective,gap,avg_sq_grad,avg_sq_grad_inner,dev_head,dev_full,
//! dist_sq_start,dist_sq_end,dist_head,telescope_rel_err,cap_ok
//! ```
//!
//! `gap`, `dist_*` and `cap_ok` are empty when the optimum or the constants
//! are unknown. Floats are written in shortest round-trip form, so a reloaded
//! trace reproduces the original values bit for bit. Readers reject any file
//! whose header row differs from the documented list.

use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::optimizer::{EpochRecord, RunTrace};
use crate::problem::{ProblemSpec, WeightVector};
use crate::schedule::Schedule;
use crate::shuffling::{Permutation, ShufflingScheme};

pub const TRACE_FORMAT: &str = "trace-v1";

pub const TRACE_COLUMNS: [&str; 13] = [
    "epoch",
    "eta",
    "objective",
    "gap",
    "avg_sq_grad",
    "avg_sq_grad_inner",
    "dev_head",
    "dev_full",
    "dist_sq_start",
    "dist_sq_end",
    "dist_head",
    "telescope_rel_err",
    "cap_ok",
];

#[derive(Debug, Error)]
pub enum TraceError {
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error("unrecognized trace header; expected the {TRACE_FORMAT} column list")]
    HeaderMismatch,
    #[error("malformed {0} row: {1}")]
    Malformed(&'static str, String),
}

/// One parsed trace row; field order matches [`TRACE_COLUMNS`].
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct TraceRow {
    pub epoch: usize,
    pub eta: f64,
    pub objective: f64,
    pub gap: Option<f64>,
    pub avg_sq_grad: f64,
    pub avg_sq_grad_inner: f64,
    pub dev_head: f64,
    pub dev_full: f64,
    pub dist_sq_start: Option<f64>,
    pub dist_sq_end: Option<f64>,
    pub dist_head: Option<f64>,
    pub telescope_rel_err: f64,
    pub cap_ok: Option<bool>,
}

impl TraceRow {
    pub fn from_record(r: &EpochRecord, f_star: Option<f64>) -> Self {
        Self {
            epoch: r.epoch,
            eta: r.eta,
            objective: r.objective_start,
            gap: f_star.map(|fs| r.objective_start - fs),
            avg_sq_grad: r.avg_sq_grad_start,
            avg_sq_grad_inner: r.avg_sq_grad_inner,
            dev_head: r.dev_head,
            dev_full: r.dev_full,
            dist_sq_start: r.dist_sq_start,
            dist_sq_end: r.dist_sq_end,
            dist_head: r.dist_head,
            telescope_rel_err: r.telescope_rel_err,
            cap_ok: r.eta_within_cap,
        }
    }

    pub fn to_record(&self) -> EpochRecord {
        EpochRecord {
            epoch: self.epoch,
            eta: self.eta,
            objective_start: self.objective,
            avg_sq_grad_start: self.avg_sq_grad,
            avg_sq_grad_inner: self.avg_sq_grad_inner,
            dev_head: self.dev_head,
            dev_full: self.dev_full,
            dist_sq_start: self.dist_sq_start,
            dist_sq_end: self.dist_sq_end,
            dist_head: self.dist_head,
            telescope_rel_err: self.telescope_rel_err,
            eta_within_cap: self.cap_ok,
            detail: None,
        }
    }
}

/// Metadata written alongside each trace CSV.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RunHeader {
    pub format: String,
    pub problem: ProblemSpec,
    pub scheme: ShufflingScheme,
    pub schedule: Schedule,
    pub epochs: usize,
    pub n: usize,
    pub d: usize,
    pub w0: Vec<f64>,
    pub f_star: Option<f64>,
    pub sigma_star_sq: Option<f64>,
    pub eta_cap: Option<f64>,
    pub full_trace: bool,
}

pub fn write_trace_csv(
    path: &Path,
    trace: &RunTrace,
    f_star: Option<f64>,
) -> Result<(), TraceError> {
    let mut w = csv::WriterBuilder::new()
        .has_headers(false)
        .from_writer(BufWriter::new(File::create(path)?));
    w.write_record(TRACE_COLUMNS)?;
    for r in &trace.records {
        w.serialize(TraceRow::from_record(r, f_star))?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_trace_csv(path: &Path) -> Result<Vec<TraceRow>, TraceError> {
    let mut rdr = csv::Reader::from_reader(BufReader::new(File::open(path)?));
    let header = rdr.headers()?.clone();
    if header.iter().ne(TRACE_COLUMNS.iter().copied()) {
        return Err(TraceError::HeaderMismatch);
    }
    let mut rows = Vec::new();
    for row in rdr.deserialize() {
        rows.push(row?);
    }
    Ok(rows)
}

pub fn write_header_json(path: &Path, header: &RunHeader) -> Result<(), TraceError> {
    let mut f = BufWriter::new(File::create(path)?);
    serde_json::to_writer_pretty(&mut f, header)?;
    f.write_all(b"\n")?;
    Ok(())
}

pub fn read_header_json(path: &Path) -> Result<RunHeader, TraceError> {
    let header: RunHeader = serde_json::from_reader(BufReader::new(File::open(path)?))?;
    if header.format != TRACE_FORMAT {
        return Err(TraceError::HeaderMismatch);
    }
    Ok(header)
}

/// Inner iterates of one epoch, parsed back from the sidecar.
#[derive(Clone, Debug)]
pub struct InnerEpoch {
    pub epoch: usize,
    /// 1-based component visited at each inner step.
    pub visits: Vec<usize>,
    /// `w_0 .. w_n`.
    pub iterates: Vec<WeightVector>,
}

/// Writes the full-trace sidecar: one row per inner iterate with columns
/// `epoch,step,component,w0..w{d-1}`; `component` (1-based) is empty on the
/// `step = 0` row that carries the epoch start point.
pub fn write_inner_csv(path: &Path, trace: &RunTrace, d: usize) -> Result<(), TraceError> {
    let mut w = csv::Writer::from_writer(BufWriter::new(File::create(path)?));
    let mut header = vec![
        "epoch".to_string(),
        "step".to_string(),
        "component".to_string(),
    ];
    header.extend((0..d).map(|k| format!("w{k}")));
    w.write_record(&header)?;
    let mut buf = Vec::with_capacity(d + 3);
    for r in &trace.records {
        let Some(detail) = &r.detail else { continue };
        let visits = detail.permutation.one_based();
        for (step, iter) in detail.iterates.iter().enumerate() {
            buf.clear();
            buf.push(r.epoch.to_string());
            buf.push(step.to_string());
            buf.push(if step == 0 {
                String::new()
            } else {
                visits[step - 1].to_string()
            });
            buf.extend(iter.as_slice().iter().map(|v| format_float(*v)));
            w.write_record(&buf)?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn read_inner_csv(path: &Path) -> Result<Vec<InnerEpoch>, TraceError> {
    let mut rdr = csv::Reader::from_reader(BufReader::new(File::open(path)?));
    let header = rdr.headers()?.clone();
    if header.len() < 4
        || &header[0] != "epoch"
        || &header[1] != "step"
        || &header[2] != "component"
    {
        return Err(TraceError::HeaderMismatch);
    }
    let d = header.len() - 3;
    let mut epochs: Vec<InnerEpoch> = Vec::new();
    for row in rdr.records() {
        let row = row?;
        let bad = |what: &'static str| TraceError::Malformed("inner", what.to_string());
        let epoch: usize = row[0].parse().map_err(|_| bad("epoch"))?;
        let step: usize = row[1].parse().map_err(|_| bad("step"))?;
        let mut w = Vec::with_capacity(d);
        for k in 0..d {
            w.push(row[3 + k].parse::<f64>().map_err(|_| bad("weight"))?);
        }
        if epochs.last().map(|e| e.epoch) != Some(epoch) {
            epochs.push(InnerEpoch {
                epoch,
                visits: Vec::new(),
                iterates: Vec::new(),
            });
        }
        let entry = epochs.last_mut().unwrap();
        if entry.iterates.len() != step {
            return Err(TraceError::Malformed(
                "inner",
                format!("non-contiguous step {step} in epoch {epoch}"),
            ));
        }
        if step > 0 {
            entry
                .visits
                .push(row[2].parse().map_err(|_| bad("component"))?);
        }
        entry.iterates.push(WeightVector::new(w));
    }
    Ok(epochs)
}

/// Per-epoch mean and confidence band across repeated runs.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct SummaryRow {
    pub epoch: usize,
    pub mean_objective: f64,
    pub sd_objective: f64,
    pub mean_gap: Option<f64>,
    pub sd_gap: Option<f64>,
}

pub fn write_summary_csv(path: &Path, rows: &[SummaryRow]) -> Result<(), TraceError> {
    let mut w = csv::Writer::from_writer(BufWriter::new(File::create(path)?));
    for row in rows {
        w.serialize(row)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_summary_csv(path: &Path) -> Result<Vec<SummaryRow>, TraceError> {
    let mut rdr = csv::Reader::from_reader(BufReader::new(File::open(path)?));
    let mut rows = Vec::new();
    for row in rdr.deserialize() {
        rows.push(row?);
    }
    Ok(rows)
}

/// Shortest round-trip decimal form; `Display` for floats is shortest and
/// matches serde's output.
fn format_float(v: f64) -> String {
    format!("{v}")
}

/// Rebuilds a [`Permutation`] from 1-based sidecar visits.
pub fn permutation_from_one_based(visits: &[usize]) -> Option<Permutation> {
    let order: Vec<usize> = visits
        .iter()
        .map(|v| v.checked_sub(1))
        .collect::<Option<_>>()?;
    let mut sorted = order.clone();
    sorted.sort_unstable();
    if sorted != (0..order.len()).collect::<Vec<_>>() {
        return None;
    }
    Some(Permutation::from_order(order))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::optimizer::{run, TraceOptions};
    use crate::problem::{interpolating, FiniteSumProblem};
    use crate::shuffling::ShufflingScheme;

    fn sample_trace(full: bool) -> (RunTrace, f64) {
        let p = interpolating(4, 8, 1).unwrap();
        let sched = Schedule::Constant { eta: 0.3 };
        let trace = run(
            &p,
            &p.initial_point(),
            &sched,
            ShufflingScheme::RandomReshuffle { seed: 9 },
            12,
            TraceOptions { full_trace: full },
        )
        .unwrap();
        (trace, p.ground_truth().f_star.unwrap())
    }

    #[test]
    fn trace_csv_round_trips_bitwise() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.csv");
        let (trace, f_star) = sample_trace(false);
        write_trace_csv(&path, &trace, Some(f_star)).unwrap();
        let rows = read_trace_csv(&path).unwrap();
        assert_eq!(rows.len(), trace.records.len());
        for (row, rec) in rows.iter().zip(&trace.records) {
            assert_eq!(row.eta.to_bits(), rec.eta.to_bits());
            assert_eq!(row.objective.to_bits(), rec.objective_start.to_bits());
            assert_eq!(row.dev_full.to_bits(), rec.dev_full.to_bits());
            assert_eq!(
                row.dist_sq_end.unwrap().to_bits(),
                rec.dist_sq_end.unwrap().to_bits()
            );
        }
    }

    #[test]
    fn foreign_headers_are_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.csv");
        std::fs::write(&path, "epoch,eta,loss\n1,0.1,2.0\n").unwrap();
        assert!(matches!(
            read_trace_csv(&path),
            Err(TraceError::HeaderMismatch)
        ));
    }

    #[test]
    fn inner_sidecar_round_trips() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("inner.csv");
        let (trace, _) = sample_trace(true);
        write_inner_csv(&path, &trace, 8).unwrap();
        let epochs = read_inner_csv(&path).unwrap();
        assert_eq!(epochs.len(), trace.records.len());
        for (parsed, rec) in epochs.iter().zip(&trace.records) {
            let detail = rec.detail.as_ref().unwrap();
            assert_eq!(parsed.visits, detail.permutation.one_based());
            assert_eq!(parsed.iterates.len(), detail.iterates.len());
            for (a, b) in parsed.iterates.iter().zip(&detail.iterates) {
                assert_eq!(a, b, "weights must round-trip exactly");
            }
        }
    }

    #[test]
    fn header_json_round_trips() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.json");
        let header = RunHeader {
            format: TRACE_FORMAT.to_string(),
            problem: ProblemSpec::Interpolating {
                n: 4,
                d: 8,
                seed: 1,
                wstar_norm: None,
            },
            scheme: ShufflingScheme::RandomReshuffle { seed: 9 },
            schedule: Schedule::Constant { eta: 0.3 },
            epochs: 12,
            n: 4,
            d: 8,
            w0: vec![0.0; 8],
            f_star: Some(0.0),
            sigma_star_sq: Some(0.0),
            eta_cap: Some(0.5),
            full_trace: false,
        };
        write_header_json(&path, &header).unwrap();
        let back = read_header_json(&path).unwrap();
        assert_eq!(back.epochs, 12);
        assert_eq!(back.scheme, header.scheme);
    }
}
