//! Command implementations behind the `rrflux` binary.
//!
//! Every command is deterministic given its configuration: all randomness
//! derives from the master seed, which is written into each output header,
//! and parallel work is collected in input order so results do not depend
//! on the worker count.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::config::{read_parameter_sets, RunConfig};
use crate::corruption::{self, ErrorRegime};
use crate::error::{Error, Result};
use crate::experiment::{
    read_ensemble, stream_ensemble, AcceptabilityFilter, EnsembleSummary, EnsembleWriter,
    Evaluator, SufficiencyVerdict,
};
use crate::fluxmap::{export_fluxmap, DominanceClass, FluxMapHeader, FluxMapPoint};
use crate::metrics::MetricId;
use crate::models::{simulate, SimulationOptions};
use crate::sampling::{lhs, sce_repeats, ParameterSet, SearchResult};
use crate::series::{self, Forcing, Series, FLOW_COLUMN};

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_DATA: i32 = 3;
pub const EXIT_RUNTIME: i32 = 4;

/// Process exit code for an error: configuration, input data, or anything
/// that went wrong while computing.
pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::Config(_) | Error::InvalidParameter { .. } => EXIT_CONFIG,
        Error::Data { .. }
        | Error::Io { .. }
        | Error::Csv(_)
        | Error::NonFinite { .. }
        | Error::NegativeValue { .. }
        | Error::TooShort { .. }
        | Error::LengthMismatch { .. }
        | Error::ForcingTooShort { .. }
        | Error::ZeroVariance { .. }
        | Error::ZeroMean { .. } => EXIT_DATA,
        _ => EXIT_RUNTIME,
    }
}

/// Runs `f` on a pool of `threads` workers (0 = one per core).
pub fn with_threads<T: Send>(threads: usize, f: impl FnOnce() -> T + Send) -> Result<T> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
    Ok(pool.install(f))
}

fn create_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

fn write_file(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

fn write_json<T: Serialize + ?Sized>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    write_file(path, &text)
}

// sensitivity --------------------------------------------------------------

#[derive(Debug, Clone, Serialize)]
pub struct SensitivityReport {
    pub files: Vec<PathBuf>,
    pub final_step: BTreeMap<ErrorRegime, BTreeMap<MetricId, f64>>,
}

/// Corrupts an observed series (the built-in 45-day example when `obs` is
/// `None`) and writes `degradation.csv`, `residuals.csv` and `step20.csv`.
pub fn cmd_sensitivity(obs: Option<&Path>, seed: u64, out_dir: &Path) -> Result<SensitivityReport> {
    let series = match obs {
        Some(p) => series::load_series(p, FLOW_COLUMN)?,
        None => corruption::example_series(),
    };
    corruption::admits_all_regimes(&series)?;
    create_dir(out_dir)?;

    let curves = corruption::degradation_table(&series, seed)?;
    let mut deg = format!("# seed={seed}\nmetric,regime,step,value\n");
    for c in &curves {
        for (k, v) in c.values.iter().enumerate() {
            writeln!(deg, "{},{},{},{}", c.metric, c.regime, k, v).unwrap();
        }
    }

    let residuals = corruption::residual_table(&series, seed)?;
    let mut res = format!("# seed={seed}\nregime,step,index,obs,residual\n");
    for regime in ErrorRegime::ALL {
        for k in 0..=corruption::MAX_STEP {
            for (i, (o, r)) in series.values().iter().zip(&residuals[&(regime, k)]).enumerate() {
                writeln!(res, "{regime},{k},{i},{o},{r}").unwrap();
            }
        }
    }

    let final_step = corruption::final_step_table(&curves);
    let mut table = format!("# seed={seed}\nregime");
    for m in MetricId::ALL {
        write!(table, ",{m}").unwrap();
    }
    table.push('\n');
    for regime in ErrorRegime::ALL {
        table.push_str(regime.as_str());
        for m in MetricId::ALL {
            write!(table, ",{}", final_step[&regime][&m]).unwrap();
        }
        table.push('\n');
    }

    let files = vec![
        out_dir.join("degradation.csv"),
        out_dir.join("residuals.csv"),
        out_dir.join("step20.csv"),
    ];
    write_file(&files[0], &deg)?;
    write_file(&files[1], &res)?;
    write_file(&files[2], &table)?;
    Ok(SensitivityReport { files, final_step })
}

// simulate -----------------------------------------------------------------

fn load_forcing(cfg: &RunConfig) -> Result<(Forcing, Option<Series>)> {
    let path = cfg
        .forcing
        .as_deref()
        .ok_or_else(|| Error::Config("no forcing file configured".into()))?;
    let (forcing, flow) = series::load_forcing(path)?;
    let flow = match cfg.obs.as_deref() {
        Some(p) => Some(series::load_series(p, FLOW_COLUMN)?),
        None => flow,
    };
    Ok((forcing, flow))
}

fn load_observed(cfg: &RunConfig) -> Result<(Forcing, Series)> {
    let (forcing, flow) = load_forcing(cfg)?;
    let flow = flow.ok_or_else(|| {
        Error::Config(format!(
            "observed flow needed: add a `{FLOW_COLUMN}` column to the forcing file or set `obs`"
        ))
    })?;
    Ok((forcing, flow))
}

#[derive(Debug, Clone, Serialize)]
pub struct SimulateReport {
    pub path: PathBuf,
    pub days: usize,
    pub balance_residual: f64,
}

/// Runs the `[params]` set and writes `simulation.csv`: daily forcing,
/// flow, the three runoff modes, AET, deep loss and store levels for the
/// days after warm-up, with fractions and the full-run water balance in
/// the footer.
pub fn cmd_simulate(cfg: &RunConfig) -> Result<SimulateReport> {
    let params = cfg.model_params()?;
    let (forcing, _) = load_forcing(cfg)?;
    let options = SimulationOptions {
        warmup: cfg.warmup,
        initial_stores: cfg.initial_store_levels()?,
        record_states: true,
    };
    let run = simulate(&params, &forcing, &options)?;
    create_dir(&cfg.out)?;

    let mut text = String::new();
    writeln!(text, "# model={}", cfg.model).unwrap();
    writeln!(text, "# warmup={}", cfg.warmup).unwrap();
    let assignments: Vec<String> = cfg
        .model
        .parameter_names()
        .iter()
        .zip(params.to_values())
        .map(|(n, v)| format!("{n}={v}"))
        .collect();
    writeln!(text, "# params {}", assignments.join(" ")).unwrap();
    text.push_str("date,precip_mm,pet_mm,flow_mm,intensity,wetness,slow,aet,deep_loss");
    for s in cfg.model.store_names() {
        write!(text, ",{s}").unwrap();
    }
    text.push('\n');
    let trace = run.state_trace.as_deref().unwrap_or(&[]);
    for (i, f) in run.fluxes.iter().enumerate() {
        let day = cfg.warmup + i;
        write!(
            text,
            "{},{},{},{},{},{},{},{},{}",
            forcing.precip().date_at(day).format("%Y-%m-%d"),
            forcing.precip().values()[day],
            forcing.pet().values()[day],
            f.total,
            f.intensity,
            f.wetness,
            f.slow,
            f.aet,
            f.deep_loss
        )
        .unwrap();
        for v in &trace[i] {
            write!(text, ",{v}").unwrap();
        }
        text.push('\n');
    }
    match run.fractions {
        Some(fr) => writeln!(
            text,
            "# fractions f_intensity={} f_wetness={} f_slow={}",
            fr.intensity, fr.wetness, fr.slow
        ),
        None => writeln!(text, "# fractions degenerate"),
    }
    .unwrap();
    let b = run.balance;
    writeln!(
        text,
        "# mass_balance precip={} aet={} runoff={} deep_loss={} storage_change={} residual={}",
        b.precip,
        b.aet,
        b.runoff,
        b.deep_loss,
        b.storage_change,
        b.residual()
    )
    .unwrap();
    let path = cfg.out.join("simulation.csv");
    write_file(&path, &text)?;
    Ok(SimulateReport {
        path,
        days: run.fluxes.len(),
        balance_residual: b.residual(),
    })
}

// calibrate ----------------------------------------------------------------

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CalibrationReport {
    pub model: crate::models::ModelId,
    pub metric: MetricId,
    pub seed: u64,
    /// Best value over all repeats.
    pub hmv: f64,
    pub parameter_names: Vec<String>,
    pub results: Vec<SearchResult>,
}

fn calibrate_metric(evaluator: &Evaluator, cfg: &RunConfig, metric: MetricId) -> Result<CalibrationReport> {
    let space = cfg.space()?;
    let sce = cfg.sce_config(cfg.seed)?;
    let objective = |v: &[f64]| evaluator.score(metric, v);
    let (hmv, results) = sce_repeats(&objective, &space, &sce, cfg.sce_repeats());
    Ok(CalibrationReport {
        model: cfg.model,
        metric,
        seed: cfg.seed,
        hmv,
        parameter_names: space.names().map(str::to_string).collect(),
        results,
    })
}

/// SCE search only, one `calibrate_<metric>.json` per metric.
pub fn cmd_calibrate(cfg: &RunConfig) -> Result<Vec<CalibrationReport>> {
    cfg.validate()?;
    if cfg.sce_repeats() == 0 {
        return Err(Error::Config("sce.repeats must be at least 1".into()));
    }
    let (forcing, obs) = load_observed(cfg)?;
    let evaluator = Evaluator::new(cfg.model, forcing, &obs, cfg.warmup, &cfg.metrics)?;
    create_dir(&cfg.out)?;
    cfg.metrics
        .iter()
        .map(|&m| {
            let report = calibrate_metric(&evaluator, cfg, m)?;
            write_json(&cfg.out.join(format!("calibrate_{m}.json")), &report)?;
            Ok(report)
        })
        .collect()
}

// ensemble -----------------------------------------------------------------

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FilterReport {
    pub filter: AcceptabilityFilter,
    pub accepted: usize,
    pub classes: BTreeMap<DominanceClass, usize>,
    /// File name inside the output directory.
    pub file: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct EnsembleReport {
    pub runs: usize,
    pub degenerate: usize,
    pub failed: usize,
    pub verdicts: Vec<SufficiencyVerdict>,
    pub filters: Vec<FilterReport>,
}

/// File name of the flux map for one (metric, delta) pair.
pub fn fluxmap_file_name(metric: MetricId, delta: f64) -> String {
    format!("fluxmap_{metric}_{delta}.csv")
}

/// LHS sets (plus any `params_file` sets appended after them) in run order.
pub fn ensemble_sets(cfg: &RunConfig) -> Result<Vec<ParameterSet>> {
    let mut sets = lhs(&cfg.space()?, cfg.size, cfg.seed);
    if let Some(path) = cfg.params_file.as_deref() {
        sets.extend(
            read_parameter_sets(path, cfg.model)?
                .into_iter()
                .map(ParameterSet::new),
        );
    }
    Ok(sets)
}

/// The full experiment: ensemble file, SCE repeats per metric, sufficiency
/// verdicts and one flux map per (metric, delta).
pub fn cmd_ensemble(cfg: &RunConfig) -> Result<EnsembleReport> {
    cfg.validate()?;
    if cfg.sce_repeats() == 0 {
        return Err(Error::Config("sce.repeats must be at least 1".into()));
    }
    let (forcing, obs) = load_observed(cfg)?;
    let evaluator = Evaluator::new(cfg.model, forcing, &obs, cfg.warmup, &cfg.metrics)?;
    let sets = ensemble_sets(cfg)?;
    create_dir(&cfg.out)?;

    let ensemble_path = cfg.out.join("ensemble.csv");
    let names = cfg.model.parameter_names();
    let preamble = vec![
        format!("model={}", cfg.model),
        format!("seed={}", cfg.seed),
        format!("size={}", cfg.size),
        format!("extra_sets={}", sets.len() - cfg.size),
        format!("warmup={}", cfg.warmup),
    ];
    let mut writer = EnsembleWriter::create(&ensemble_path, names, &preamble)?;
    let summary = stream_ensemble(&evaluator, &sets, cfg.batch_size, &mut writer)?;
    writer.finish()?;

    let mut verdicts = Vec::with_capacity(cfg.metrics.len());
    for &m in &cfg.metrics {
        let report = calibrate_metric(&evaluator, cfg, m)?;
        write_json(&cfg.out.join(format!("sce_{m}.json")), &report)?;
        verdicts.push(SufficiencyVerdict::from_hmvs(m, summary.hmv(m)?, report.hmv));
    }
    write_json(&cfg.out.join("verdicts.json"), &verdicts)?;

    let hmvs: Vec<(MetricId, f64)> = verdicts.iter().map(|v| (v.metric, v.hmv)).collect();
    let filters = write_fluxmaps(&ensemble_path, &hmvs, &cfg.deltas, Some(cfg.seed), &cfg.out)?;
    write_json(&cfg.out.join("filters.json"), &filters)?;

    Ok(EnsembleReport {
        runs: summary.runs,
        degenerate: summary.degenerate,
        failed: summary.failed,
        verdicts,
        filters,
    })
}

/// One pass over an ensemble file collecting the acceptable points of
/// every (metric, delta) filter, then one flux-map file per filter.
fn write_fluxmaps(
    ensemble: &Path,
    hmvs: &[(MetricId, f64)],
    deltas: &[f64],
    seed: Option<u64>,
    out_dir: &Path,
) -> Result<Vec<FilterReport>> {
    let filters = hmvs
        .iter()
        .flat_map(|&(m, h)| deltas.iter().map(move |&d| AcceptabilityFilter::new(m, h, d)))
        .collect::<Result<Vec<_>>>()?;
    let mut points: Vec<Vec<FluxMapPoint>> = vec![Vec::new(); filters.len()];
    let mut size = 0usize;
    read_ensemble(ensemble, |r| {
        size += 1;
        for (f, pts) in filters.iter().zip(points.iter_mut()) {
            if f.accepts(&r) {
                if let (Some(fr), Some(v)) = (r.fractions, r.value(f.metric)) {
                    pts.push(FluxMapPoint::new(r.run_id, fr, v));
                }
            }
        }
        Ok(())
    })?;
    create_dir(out_dir)?;
    filters
        .into_iter()
        .zip(points)
        .map(|(filter, pts)| {
            let file = fluxmap_file_name(filter.metric, filter.delta);
            let header = FluxMapHeader {
                metric: filter.metric,
                hmv: filter.hmv,
                threshold: filter.threshold,
                ensemble_size: size,
                seed,
            };
            export_fluxmap(&pts, &header, &out_dir.join(&file))?;
            let mut classes = BTreeMap::new();
            for p in &pts {
                *classes.entry(p.class).or_insert(0) += 1;
            }
            Ok(FilterReport {
                filter,
                accepted: pts.len(),
                classes,
                file,
            })
        })
        .collect()
}

/// Leading `# key=value` lines of a file.
pub fn read_preamble(path: &Path) -> Result<BTreeMap<String, String>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut out = BTreeMap::new();
    for line in BufReader::new(file).lines() {
        let line = line.map_err(|e| Error::io(path, e))?;
        let Some(meta) = line.strip_prefix("# ") else {
            break;
        };
        if let Some((k, v)) = meta.split_once('=') {
            out.insert(k.to_string(), v.to_string());
        }
    }
    Ok(out)
}

fn summarize(ensemble: &Path) -> Result<EnsembleSummary> {
    let mut summary = EnsembleSummary::default();
    read_ensemble(ensemble, |r| {
        summary.absorb(&r);
        Ok(())
    })?;
    Ok(summary)
}

/// Re-filters an existing ensemble file. The HMV of each metric is the
/// override when given, otherwise the ensemble's best value.
pub fn cmd_fluxmap(
    ensemble: &Path,
    metrics: &[MetricId],
    deltas: &[f64],
    hmv: Option<f64>,
    out_dir: &Path,
) -> Result<Vec<FilterReport>> {
    let summary = summarize(ensemble)?;
    let hmvs = metrics
        .iter()
        .map(|&m| Ok((m, hmv.map_or_else(|| summary.hmv(m), Ok)?)))
        .collect::<Result<Vec<_>>>()?;
    let seed = read_preamble(ensemble)?
        .get("seed")
        .and_then(|s| s.parse().ok());
    write_fluxmaps(ensemble, &hmvs, deltas, seed, out_dir)
}

/// Recomputes verdicts from an ensemble file and per-metric SCE HMVs.
pub fn cmd_sufficiency(
    ensemble: &Path,
    sce_hmvs: &BTreeMap<MetricId, f64>,
    out_dir: &Path,
) -> Result<Vec<SufficiencyVerdict>> {
    if sce_hmvs.is_empty() {
        return Err(Error::Config("no SCE results given".into()));
    }
    let summary = summarize(ensemble)?;
    let verdicts = sce_hmvs
        .iter()
        .map(|(&m, &s)| Ok(SufficiencyVerdict::from_hmvs(m, summary.hmv(m)?, s)))
        .collect::<Result<Vec<_>>>()?;
    create_dir(out_dir)?;
    write_json(&out_dir.join("verdicts.json"), &verdicts)?;
    Ok(verdicts)
}

/// Reads the metric and HMV out of a `calibrate_<metric>.json` or
/// `sce_<metric>.json` file.
pub fn read_calibration(path: &Path) -> Result<CalibrationReport> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| Error::data(path, e.to_string()))
}
