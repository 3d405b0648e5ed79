use std::collections::BTreeMap;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use rrflux::cli::{self, EXIT_CONFIG};
use rrflux::config::RunConfig;
use rrflux::metrics::MetricId;
use rrflux::models::ModelId;
use rrflux::{Error, Result};

/// Ensemble evaluation of the SIMHYD and SACRAMENTO rainfall-runoff models.
///
/// Settings come from an optional TOML file (`--config`), then from flags.
/// Defaults: model simhyd, all three metrics, size 1000000, seed 42,
/// warm-up 365 days, deltas 0.05 and 0.10, SCE repeats 10, threads = cores.
/// Exit codes: 0 success, 2 configuration error, 3 input data error,
/// 4 runtime error.
#[derive(Debug, Parser)]
#[command(name = "rrflux", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Degrade an observed series under bias, variability and correlation
    /// errors and tabulate NSE, KGEss and WIA along each curve.
    Sensitivity {
        /// Flow file (`date,flow_mm`); the built-in 45-day series when omitted.
        #[arg(long)]
        obs: Option<PathBuf>,
        /// Seed for the correlation regime's orthogonal draw.
        #[arg(long, default_value_t = 42)]
        seed: u64,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// Run one parameter set and write daily fluxes and store levels.
    Simulate {
        #[command(flatten)]
        common: CommonArgs,
        /// TOML file of `name = value` parameter assignments.
        #[arg(long)]
        params: Option<PathBuf>,
    },
    /// LHS ensemble, SCE benchmark, sufficiency verdicts and flux maps.
    Ensemble(CommonArgs),
    /// SCE search only.
    Calibrate(CommonArgs),
    /// Re-filter an existing ensemble file into flux maps.
    Fluxmap {
        #[arg(long)]
        ensemble: PathBuf,
        /// Metric to filter on (repeatable; default all).
        #[arg(long = "metric")]
        metrics: Vec<MetricId>,
        /// Acceptability distance below the HMV (repeatable; default 0.05, 0.10).
        #[arg(long = "delta")]
        deltas: Vec<f64>,
        /// HMV to use instead of the ensemble's best value.
        #[arg(long)]
        hmv: Option<f64>,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// Recompute sufficiency verdicts from an ensemble file and SCE results.
    Sufficiency {
        #[arg(long)]
        ensemble: PathBuf,
        /// `calibrate_<metric>.json` or `sce_<metric>.json` file (repeatable).
        #[arg(long = "sce")]
        sce_files: Vec<PathBuf>,
        /// SCE HMV given directly as `metric=value` (repeatable).
        #[arg(long = "sce-hmv", value_parser = parse_metric_value)]
        sce_hmvs: Vec<(MetricId, f64)>,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
}

#[derive(Debug, Args)]
struct CommonArgs {
    /// TOML run configuration; flags below override its values.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    model: Option<ModelId>,
    /// Forcing file `date,precip_mm,pet_mm[,flow_mm]`.
    #[arg(long)]
    forcing: Option<PathBuf>,
    /// Observed flow file `date,flow_mm`.
    #[arg(long)]
    obs: Option<PathBuf>,
    /// Metric (repeatable): nse, kgess or wia.
    #[arg(long = "metric")]
    metrics: Vec<MetricId>,
    /// Number of LHS parameter sets.
    #[arg(long)]
    size: Option<usize>,
    /// Master seed for every random draw.
    #[arg(long)]
    seed: Option<u64>,
    /// Days excluded from scoring and fractions.
    #[arg(long)]
    warmup: Option<usize>,
    /// Acceptability distance below the HMV (repeatable).
    #[arg(long = "delta")]
    deltas: Vec<f64>,
    /// Worker threads; 0 uses every core.
    #[arg(long)]
    threads: Option<usize>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Parameter-set CSV `run_id,<names>` appended to the LHS sets.
    #[arg(long)]
    params_file: Option<PathBuf>,
    /// Independent SCE searches per metric.
    #[arg(long)]
    sce_repeats: Option<usize>,
    /// Evaluation budget of each SCE search.
    #[arg(long)]
    sce_max_evals: Option<usize>,
    /// Parameter sets evaluated per streamed batch.
    #[arg(long)]
    batch_size: Option<usize>,
}

impl CommonArgs {
    fn resolve(self) -> Result<RunConfig> {
        let mut cfg = match &self.config {
            Some(p) => RunConfig::load(p)?,
            None => RunConfig::default(),
        };
        if let Some(v) = self.model {
            cfg.model = v;
        }
        if self.forcing.is_some() {
            cfg.forcing = self.forcing;
        }
        if self.obs.is_some() {
            cfg.obs = self.obs;
        }
        if self.params_file.is_some() {
            cfg.params_file = self.params_file;
        }
        if !self.metrics.is_empty() {
            cfg.metrics = self.metrics;
        }
        if !self.deltas.is_empty() {
            cfg.deltas = self.deltas;
        }
        if let Some(v) = self.size {
            cfg.size = v;
        }
        if let Some(v) = self.seed {
            cfg.seed = v;
        }
        if let Some(v) = self.warmup {
            cfg.warmup = v;
        }
        if let Some(v) = self.threads {
            cfg.threads = v;
        }
        if let Some(v) = self.out {
            cfg.out = v;
        }
        if let Some(v) = self.sce_repeats {
            cfg.sce.repeats = Some(v);
        }
        if let Some(v) = self.sce_max_evals {
            cfg.sce.max_evals = Some(v);
        }
        if let Some(v) = self.batch_size {
            cfg.batch_size = v;
        }
        Ok(cfg)
    }
}

fn parse_metric_value(s: &str) -> std::result::Result<(MetricId, f64), String> {
    let (m, v) = s.split_once('=').ok_or("expected metric=value")?;
    let m = m.parse::<MetricId>().map_err(|e| e.to_string())?;
    let v = v.parse::<f64>().map_err(|e| e.to_string())?;
    Ok((m, v))
}

fn print_json<T: serde::Serialize>(value: &T) -> Result<()> {
    println!("{}", serde_json::to_string_pretty(value)?);
    Ok(())
}

fn run(command: Command) -> Result<()> {
    match command {
        Command::Sensitivity { obs, seed, out } => {
            let report = cli::cmd_sensitivity(obs.as_deref(), seed, &out)?;
            print_json(&report.final_step)
        }
        Command::Simulate { common, params } => {
            let mut cfg = common.resolve()?;
            if let Some(p) = params {
                let text = std::fs::read_to_string(&p).map_err(|e| Error::Config(format!("{}: {e}", p.display())))?;
                let table: BTreeMap<String, f64> =
                    toml::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", p.display())))?;
                cfg.params.extend(table);
            }
            let report = cli::with_threads(cfg.threads, || cli::cmd_simulate(&cfg))??;
            print_json(&report)
        }
        Command::Ensemble(common) => {
            let cfg = common.resolve()?;
            let report = cli::with_threads(cfg.threads, || cli::cmd_ensemble(&cfg))??;
            print_json(&report)
        }
        Command::Calibrate(common) => {
            let cfg = common.resolve()?;
            let reports = cli::with_threads(cfg.threads, || cli::cmd_calibrate(&cfg))??;
            let best: BTreeMap<MetricId, f64> = reports.iter().map(|r| (r.metric, r.hmv)).collect();
            print_json(&best)
        }
        Command::Fluxmap {
            ensemble,
            metrics,
            deltas,
            hmv,
            out,
        } => {
            let metrics = if metrics.is_empty() { MetricId::ALL.to_vec() } else { metrics };
            let deltas = if deltas.is_empty() {
                rrflux::config::DEFAULT_DELTAS.to_vec()
            } else {
                deltas
            };
            let reports = cli::cmd_fluxmap(&ensemble, &metrics, &deltas, hmv, &out)?;
            print_json(&reports)
        }
        Command::Sufficiency {
            ensemble,
            sce_files,
            sce_hmvs,
            out,
        } => {
            let mut hmvs: BTreeMap<MetricId, f64> = BTreeMap::new();
            for p in &sce_files {
                let r = cli::read_calibration(p)?;
                hmvs.insert(r.metric, r.hmv);
            }
            hmvs.extend(sce_hmvs);
            let verdicts = cli::cmd_sufficiency(&ensemble, &hmvs, &out)?;
            print_json(&verdicts)
        }
    }
}

fn main() -> ExitCode {
    let parsed = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_CONFIG as u8 } else { 0 });
        }
    };
    match run(parsed.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(cli::exit_code(&e) as u8)
        }
    }
}
