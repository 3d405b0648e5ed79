//! Ensemble runs, sampling-sufficiency verdicts and acceptability filters.

use std::collections::BTreeMap;
use std::fmt;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metrics::{MetricId, ObservedReference};
use crate::models::{score_run, FluxFractions, ModelId, ModelParams};
use crate::sampling::ParameterSet;
use crate::series::{Forcing, Series};

/// Largest |Ensemble-HMV - SCE-HMV| still judged sufficient.
pub const SUFFICIENCY_TOLERANCE: f64 = 0.01;
/// Absorbs binary round-off in differences such as `0.81 - 0.80`.
const TOLERANCE_SLACK: f64 = 1e-12;

pub const FLAG_DEGENERATE: &str = "degenerate";
pub const FLAG_MODEL_ERROR: &str = "model_error";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationRecord {
    pub run_id: u64,
    pub params: ParameterSet,
    pub metric_values: BTreeMap<MetricId, f64>,
    /// `None` for degenerate runs (no simulated runoff) and failed runs.
    pub fractions: Option<FluxFractions>,
    pub flags: Vec<String>,
}

impl EvaluationRecord {
    pub fn value(&self, metric: MetricId) -> Option<f64> {
        self.metric_values.get(&metric).copied()
    }

    pub fn is_degenerate(&self) -> bool {
        self.fractions.is_none()
    }
}

/// Everything needed to score one parameter set: model, forcing, the
/// observed reference and the scored window.
#[derive(Debug, Clone)]
pub struct Evaluator {
    model: ModelId,
    forcing: Forcing,
    reference: ObservedReference,
    warmup: usize,
    metrics: Vec<MetricId>,
}

impl Evaluator {
    /// `obs` may span the whole forcing period or only the post-warm-up
    /// window.
    pub fn new(
        model: ModelId,
        forcing: Forcing,
        obs: &Series,
        warmup: usize,
        metrics: &[MetricId],
    ) -> Result<Self> {
        if forcing.len() < warmup + 2 {
            return Err(Error::ForcingTooShort {
                len: forcing.len(),
                warmup,
            });
        }
        let scored = forcing.len() - warmup;
        let window: &[f64] = if obs.len() == scored {
            obs.values()
        } else if obs.len() == forcing.len() {
            &obs.values()[warmup..]
        } else {
            return Err(Error::Config(format!(
                "observed series has {} values; expected {} (full record) or {} (after warm-up)",
                obs.len(),
                forcing.len(),
                scored
            )));
        };
        let mut metrics = metrics.to_vec();
        metrics.sort();
        metrics.dedup();
        Ok(Evaluator {
            model,
            forcing,
            reference: ObservedReference::new(window)?,
            warmup,
            metrics,
        })
    }

    pub fn model(&self) -> ModelId {
        self.model
    }

    pub fn metrics(&self) -> &[MetricId] {
        &self.metrics
    }

    pub fn warmup(&self) -> usize {
        self.warmup
    }

    pub fn forcing(&self) -> &Forcing {
        &self.forcing
    }

    pub fn evaluate(&self, run_id: u64, params: &ParameterSet) -> EvaluationRecord {
        let mut record = EvaluationRecord {
            run_id,
            params: params.clone(),
            metric_values: BTreeMap::new(),
            fractions: None,
            flags: Vec::new(),
        };
        let run = match ModelParams::from_values(self.model, &params.values)
            .and_then(|p| score_run(&p, &self.forcing, self.warmup))
        {
            Ok(run) => run,
            Err(_) => {
                record.flags.push(FLAG_MODEL_ERROR.to_string());
                return record;
            }
        };
        for &metric in &self.metrics {
            match self.reference.evaluate(metric, &run.flow) {
                Ok(v) => {
                    record.metric_values.insert(metric, v);
                }
                Err(_) => record.flags.push(format!("{metric}_undefined")),
            }
        }
        record.fractions = run.fractions;
        if record.fractions.is_none() {
            record.flags.push(FLAG_DEGENERATE.to_string());
        }
        record
    }

    /// Objective for guided search: one metric of one parameter vector.
    pub fn score(&self, metric: MetricId, values: &[f64]) -> Result<f64> {
        let params = ModelParams::from_values(self.model, values)?;
        let run = score_run(&params, &self.forcing, self.warmup)?;
        self.reference.evaluate(metric, &run.flow)
    }
}

/// Scores every set; record `i` has `run_id == first_id + i` regardless of
/// how the work is scheduled.
pub fn evaluate_sets(evaluator: &Evaluator, sets: &[ParameterSet], first_id: u64) -> Vec<EvaluationRecord> {
    sets.par_iter()
        .enumerate()
        .map(|(i, p)| evaluator.evaluate(first_id + i as u64, p))
        .collect()
}

pub fn run_ensemble(
    model: ModelId,
    sets: &[ParameterSet],
    forcing: &Forcing,
    obs: &Series,
    metrics: &[MetricId],
    warmup: usize,
) -> Result<Vec<EvaluationRecord>> {
    let evaluator = Evaluator::new(model, forcing.clone(), obs, warmup, metrics)?;
    Ok(evaluate_sets(&evaluator, sets, 0))
}

/// Highest value of `metric` over the records that carry it.
pub fn ensemble_hmv<'a>(
    records: impl IntoIterator<Item = &'a EvaluationRecord>,
    metric: MetricId,
) -> Result<f64> {
    records
        .into_iter()
        .filter_map(|r| r.value(metric))
        .fold(None, |acc: Option<f64>, v| Some(acc.map_or(v, |a| a.max(v))))
        .ok_or_else(|| Error::NoValidRecords(metric.to_string()))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum InadequateSide {
    Ensemble,
    Sce,
    Neither,
}

impl fmt::Display for InadequateSide {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            InadequateSide::Ensemble => "ENSEMBLE",
            InadequateSide::Sce => "SCE",
            InadequateSide::Neither => "NEITHER",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SufficiencyVerdict {
    pub metric: MetricId,
    pub ensemble_hmv: f64,
    pub sce_hmv: f64,
    pub hmv: f64,
    pub sufficient: bool,
    pub inadequate_side: InadequateSide,
}

impl SufficiencyVerdict {
    pub fn from_hmvs(metric: MetricId, ensemble_hmv: f64, sce_hmv: f64) -> Self {
        let sufficient =
            (ensemble_hmv - sce_hmv).abs() <= SUFFICIENCY_TOLERANCE + TOLERANCE_SLACK;
        let inadequate_side = if sufficient {
            InadequateSide::Neither
        } else if ensemble_hmv < sce_hmv {
            InadequateSide::Ensemble
        } else {
            InadequateSide::Sce
        };
        SufficiencyVerdict {
            metric,
            ensemble_hmv,
            sce_hmv,
            hmv: ensemble_hmv.max(sce_hmv),
            sufficient,
            inadequate_side,
        }
    }
}

pub fn sufficiency<'a>(
    records: impl IntoIterator<Item = &'a EvaluationRecord>,
    sce_hmv: f64,
    metric: MetricId,
) -> Result<SufficiencyVerdict> {
    let ens = ensemble_hmv(records, metric)?;
    Ok(SufficiencyVerdict::from_hmvs(metric, ens, sce_hmv))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AcceptabilityFilter {
    pub metric: MetricId,
    pub hmv: f64,
    pub delta: f64,
    pub threshold: f64,
}

impl AcceptabilityFilter {
    pub fn new(metric: MetricId, hmv: f64, delta: f64) -> Result<Self> {
        if !(delta > 0.0 && delta.is_finite()) {
            return Err(Error::Config(format!(
                "acceptability delta must be > 0, got {delta}"
            )));
        }
        if !hmv.is_finite() {
            return Err(Error::Config(format!("HMV must be finite, got {hmv}")));
        }
        Ok(AcceptabilityFilter {
            metric,
            hmv,
            delta,
            threshold: hmv - delta,
        })
    }

    /// Inclusive: a value equal to the threshold is acceptable.
    pub fn accepts(&self, record: &EvaluationRecord) -> bool {
        record.fractions.is_some()
            && record
                .value(self.metric)
                .is_some_and(|v| v >= self.threshold)
    }
}

pub fn acceptable_runs<'a>(
    records: &'a [EvaluationRecord],
    filter: &AcceptabilityFilter,
) -> Vec<&'a EvaluationRecord> {
    records.iter().filter(|r| filter.accepts(r)).collect()
}

// Ensemble files -----------------------------------------------------------

fn fmt_opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

pub fn ensemble_header(param_names: &[&str]) -> String {
    let mut cols = vec!["run_id".to_string()];
    cols.extend(param_names.iter().map(|s| s.to_string()));
    cols.extend(
        [
            "nse",
            "kgess",
            "wia",
            "f_intensity",
            "f_wetness",
            "f_slow",
            "flags",
        ]
        .iter()
        .map(|s| s.to_string()),
    );
    cols.join(",")
}

pub fn ensemble_row(record: &EvaluationRecord) -> String {
    let mut cols = vec![record.run_id.to_string()];
    cols.extend(record.params.values.iter().map(|v| v.to_string()));
    for m in MetricId::ALL {
        cols.push(fmt_opt(record.value(m)));
    }
    let f = record.fractions;
    cols.push(fmt_opt(f.map(|f| f.intensity)));
    cols.push(fmt_opt(f.map(|f| f.wetness)));
    cols.push(fmt_opt(f.map(|f| f.slow)));
    cols.push(record.flags.join(";"));
    cols.join(",")
}

/// Appends records to an ensemble CSV in the order given.
pub struct EnsembleWriter {
    out: BufWriter<File>,
    path: std::path::PathBuf,
}

impl EnsembleWriter {
    /// `preamble` lines are written as `# ...` comments before the header.
    pub fn create(path: &Path, param_names: &[&str], preamble: &[String]) -> Result<Self> {
        let file = File::create(path).map_err(|e| Error::io(path, e))?;
        let mut w = EnsembleWriter {
            out: BufWriter::new(file),
            path: path.to_path_buf(),
        };
        for line in preamble {
            w.line(&format!("# {line}"))?;
        }
        w.line(&ensemble_header(param_names))?;
        Ok(w)
    }

    fn line(&mut self, s: &str) -> Result<()> {
        writeln!(self.out, "{s}").map_err(|e| Error::io(&self.path, e))
    }

    pub fn write(&mut self, record: &EvaluationRecord) -> Result<()> {
        let row = ensemble_row(record);
        self.line(&row)
    }

    pub fn finish(mut self) -> Result<()> {
        self.out.flush().map_err(|e| Error::io(&self.path, e))
    }
}

/// Running maxima and counts over streamed batches.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct EnsembleSummary {
    pub runs: usize,
    pub degenerate: usize,
    pub failed: usize,
    pub hmv: BTreeMap<MetricId, f64>,
}

impl EnsembleSummary {
    pub fn absorb(&mut self, record: &EvaluationRecord) {
        self.runs += 1;
        if record.flags.iter().any(|f| f == FLAG_MODEL_ERROR) {
            self.failed += 1;
        } else if record.is_degenerate() {
            self.degenerate += 1;
        }
        for (m, v) in &record.metric_values {
            let e = self.hmv.entry(*m).or_insert(*v);
            if *v > *e {
                *e = *v;
            }
        }
    }

    pub fn hmv(&self, metric: MetricId) -> Result<f64> {
        self.hmv
            .get(&metric)
            .copied()
            .ok_or_else(|| Error::NoValidRecords(metric.to_string()))
    }
}

/// Evaluates `sets` in fixed-size batches, writing each batch in order
/// before the next starts, so memory stays bounded by `batch_size`.
pub fn stream_ensemble(
    evaluator: &Evaluator,
    sets: &[ParameterSet],
    batch_size: usize,
    writer: &mut EnsembleWriter,
) -> Result<EnsembleSummary> {
    let mut summary = EnsembleSummary::default();
    for (b, chunk) in sets.chunks(batch_size.max(1)).enumerate() {
        let first = (b * batch_size.max(1)) as u64;
        for record in evaluate_sets(evaluator, chunk, first) {
            summary.absorb(&record);
            writer.write(&record)?;
        }
    }
    Ok(summary)
}

fn parse_opt(cell: &str, path: &Path, line: usize) -> Result<Option<f64>> {
    if cell.is_empty() {
        return Ok(None);
    }
    cell.parse::<f64>()
        .map(Some)
        .map_err(|_| Error::data(path, format!("non-numeric cell `{cell}` at line {line}")))
}

/// Streams records out of an ensemble CSV, skipping `#` comment lines.
pub fn read_ensemble(
    path: &Path,
    mut visit: impl FnMut(EvaluationRecord) -> Result<()>,
) -> Result<Vec<String>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let reader = BufReader::new(file);
    let mut names: Option<Vec<String>> = None;
    for (i, line) in reader.lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        let lineno = i + 1;
        if line.starts_with('#') || line.trim().is_empty() {
            continue;
        }
        let cells: Vec<&str> = line.split(',').collect();
        let Some(param_names) = names.as_ref() else {
            if cells.first() != Some(&"run_id") || cells.len() < 8 {
                return Err(Error::data(path, "not an ensemble file: bad header"));
            }
            let tail = &cells[cells.len() - 7..];
            if tail != ["nse", "kgess", "wia", "f_intensity", "f_wetness", "f_slow", "flags"] {
                return Err(Error::data(path, "not an ensemble file: bad trailing columns"));
            }
            names = Some(cells[1..cells.len() - 7].iter().map(|s| s.to_string()).collect());
            continue;
        };
        let np = param_names.len();
        if cells.len() != np + 8 {
            return Err(Error::data(path, format!("wrong column count at line {lineno}")));
        }
        let run_id: u64 = cells[0]
            .parse()
            .map_err(|_| Error::data(path, format!("bad run_id at line {lineno}")))?;
        let params = cells[1..=np]
            .iter()
            .map(|c| {
                parse_opt(c, path, lineno)?
                    .ok_or_else(|| Error::data(path, format!("missing parameter at line {lineno}")))
            })
            .collect::<Result<Vec<f64>>>()?;
        let mut metric_values = BTreeMap::new();
        for (k, m) in MetricId::ALL.iter().enumerate() {
            if let Some(v) = parse_opt(cells[np + 1 + k], path, lineno)? {
                metric_values.insert(*m, v);
            }
        }
        let fi = parse_opt(cells[np + 4], path, lineno)?;
        let fw = parse_opt(cells[np + 5], path, lineno)?;
        let fs = parse_opt(cells[np + 6], path, lineno)?;
        let fractions = match (fi, fw, fs) {
            (Some(a), Some(b), Some(c)) => Some(
                FluxFractions::new(a, b, c)
                    .map_err(|_| Error::data(path, format!("invalid fractions at line {lineno}")))?,
            ),
            _ => None,
        };
        let flags = cells[np + 7]
            .split(';')
            .filter(|s| !s.is_empty())
            .map(str::to_string)
            .collect();
        visit(EvaluationRecord {
            run_id,
            params: ParameterSet::new(params),
            metric_values,
            fractions,
            flags,
        })?;
    }
    names.ok_or_else(|| Error::data(path, "empty ensemble file"))
}
