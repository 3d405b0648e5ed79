//! Daily rainfall-runoff models with per-mode flux accounting.
//!
//! Every runoff flux is assigned to one of three response modes:
//! intensity-based (infiltration excess), wetness-based (saturation excess
//! and interflow) and slow (baseflow). Volumetric shares of the three
//! modes over the scored window locate a run on the flux map.

pub mod sacramento;
pub mod simhyd;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

pub use sacramento::{SacramentoParams, SacramentoState};
pub use simhyd::{SimhydParams, SimhydState};

use crate::error::{Error, Result};
use crate::sampling::ParameterSpace;
use crate::series::{Forcing, Series};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelId {
    Simhyd,
    Sacramento,
}

impl ModelId {
    pub fn as_str(self) -> &'static str {
        match self {
            ModelId::Simhyd => "simhyd",
            ModelId::Sacramento => "sacramento",
        }
    }

    pub fn parameter_names(self) -> &'static [&'static str] {
        match self {
            ModelId::Simhyd => SimhydParams::NAMES,
            ModelId::Sacramento => SacramentoParams::NAMES,
        }
    }

    pub fn store_names(self) -> &'static [&'static str] {
        match self {
            ModelId::Simhyd => <SimhydParams as RunoffModel>::STORE_NAMES,
            ModelId::Sacramento => <SacramentoParams as RunoffModel>::STORE_NAMES,
        }
    }

    /// Feasible parameter ranges used when none are configured.
    pub fn default_space(self) -> ParameterSpace {
        let dims: &[(&str, f64, f64)] = match self {
            ModelId::Simhyd => &[
                ("insc", 0.5, 5.0),
                ("coeff", 50.0, 400.0),
                ("sq", 0.0, 6.0),
                ("smsc", 50.0, 500.0),
                ("sub", 0.0, 1.0),
                ("crak", 0.0, 1.0),
                ("k", 0.003, 0.3),
            ],
            ModelId::Sacramento => &[
                ("uztwm", 10.0, 150.0),
                ("uzfwm", 10.0, 150.0),
                ("lztwm", 50.0, 400.0),
                ("lzfsm", 10.0, 300.0),
                ("lzfpm", 20.0, 600.0),
                ("uzk", 0.1, 0.75),
                ("lzsk", 0.02, 0.3),
                ("lzpk", 0.001, 0.05),
                ("zperc", 1.0, 250.0),
                ("rexp", 1.0, 5.0),
                ("pfree", 0.0, 0.6),
                ("pctim", 0.0, 0.1),
                ("adimp", 0.0, 0.3),
                ("side", 0.0, 0.5),
                ("rserv", 0.0, 0.4),
            ],
        };
        ParameterSpace::new(
            dims.iter()
                .map(|(n, lo, hi)| (n.to_string(), *lo, *hi))
                .collect(),
        )
        .expect("built-in ranges are valid")
    }
}

impl fmt::Display for ModelId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ModelId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "simhyd" => Ok(ModelId::Simhyd),
            "sacramento" | "sacsma" => Ok(ModelId::Sacramento),
            other => Err(Error::Config(format!("unknown model `{other}`"))),
        }
    }
}

/// One day of model output in mm/day.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct DailyFluxes {
    pub intensity: f64,
    pub wetness: f64,
    pub slow: f64,
    pub total: f64,
    pub aet: f64,
    /// Water lost to deep groundwater (SACRAMENTO `side`); not streamflow.
    pub deep_loss: f64,
}

impl DailyFluxes {
    pub fn new(intensity: f64, wetness: f64, slow: f64, aet: f64, deep_loss: f64) -> Self {
        DailyFluxes {
            intensity,
            wetness,
            slow,
            total: intensity + wetness + slow,
            aet,
            deep_loss,
        }
    }
}

/// Volumetric share of each response mode; sums to 1.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FluxFractions {
    pub intensity: f64,
    pub wetness: f64,
    pub slow: f64,
}

impl FluxFractions {
    /// Normalizes mode volumes. Fails when the total is not positive.
    pub fn from_volumes(intensity: f64, wetness: f64, slow: f64) -> Result<Self> {
        let total = intensity + wetness + slow;
        if !(total > 0.0) || intensity < 0.0 || wetness < 0.0 || slow < 0.0 {
            return Err(Error::DegenerateFractions);
        }
        Ok(FluxFractions {
            intensity: intensity / total,
            wetness: wetness / total,
            slow: slow / total,
        })
    }

    /// Accepts fractions that are each in [0, 1] and sum to 1 within 1e-9.
    pub fn new(intensity: f64, wetness: f64, slow: f64) -> Result<Self> {
        let ok = [intensity, wetness, slow]
            .iter()
            .all(|f| f.is_finite() && (0.0..=1.0).contains(f))
            && ((intensity + wetness + slow) - 1.0).abs() <= 1e-9;
        if !ok {
            return Err(Error::DegenerateFractions);
        }
        Ok(FluxFractions {
            intensity,
            wetness,
            slow,
        })
    }

    pub fn sum(&self) -> f64 {
        self.intensity + self.wetness + self.slow
    }
}

/// Maps a named parameter struct to and from a value vector ordered as
/// `NAMES`.
pub trait ParameterVector: Sized {
    const NAMES: &'static [&'static str];

    fn from_values(values: &[f64]) -> Result<Self>;

    fn to_values(&self) -> Vec<f64>;
}

pub(crate) fn expect_len<'a>(values: &'a [f64], names: &[&str]) -> Result<&'a [f64]> {
    if values.len() != names.len() {
        return Err(Error::Config(format!(
            "expected {} values ({}), got {}",
            names.len(),
            names.join(","),
            values.len()
        )));
    }
    Ok(values)
}

/// A parameterized model that advances its stores one day at a time.
pub trait RunoffModel {
    type State: Copy + Default + fmt::Debug;

    const STORE_NAMES: &'static [&'static str];

    /// Area-weighted water held in all stores (mm).
    fn storage(&self, state: &Self::State) -> f64;

    fn store_levels(state: &Self::State) -> Vec<f64>;

    fn state_from_levels(&self, levels: &[f64]) -> Result<Self::State>;

    fn step(&self, state: &Self::State, precip: f64, pet: f64) -> (Self::State, DailyFluxes);
}

/// Parameters of either model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "lowercase")]
pub enum ModelParams {
    Simhyd(SimhydParams),
    Sacramento(SacramentoParams),
}

impl ModelParams {
    pub fn from_values(model: ModelId, values: &[f64]) -> Result<Self> {
        Ok(match model {
            ModelId::Simhyd => ModelParams::Simhyd(SimhydParams::from_values(values)?),
            ModelId::Sacramento => ModelParams::Sacramento(SacramentoParams::from_values(values)?),
        })
    }

    pub fn model(&self) -> ModelId {
        match self {
            ModelParams::Simhyd(_) => ModelId::Simhyd,
            ModelParams::Sacramento(_) => ModelId::Sacramento,
        }
    }

    pub fn to_values(&self) -> Vec<f64> {
        match self {
            ModelParams::Simhyd(p) => p.to_values(),
            ModelParams::Sacramento(p) => p.to_values(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            ModelParams::Simhyd(p) => p.validate(),
            ModelParams::Sacramento(p) => p.validate(),
        }
    }
}

/// Water budget over the whole run, warm-up included.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct MassBalance {
    pub precip: f64,
    pub aet: f64,
    pub runoff: f64,
    pub deep_loss: f64,
    pub storage_change: f64,
}

impl MassBalance {
    /// `P - AET - Q - deep loss - dS`; zero for a conserving model.
    pub fn residual(&self) -> f64 {
        self.precip - self.aet - self.runoff - self.deep_loss - self.storage_change
    }

    pub fn within(&self, relative: f64) -> bool {
        self.residual().abs() <= relative * self.precip.max(f64::MIN_POSITIVE)
    }
}

#[derive(Debug, Clone, Default)]
pub struct SimulationOptions {
    pub warmup: usize,
    /// Initial store levels in `STORE_NAMES` order; empty stores when `None`.
    pub initial_stores: Option<Vec<f64>>,
    pub record_states: bool,
}

impl SimulationOptions {
    pub fn with_warmup(warmup: usize) -> Self {
        SimulationOptions {
            warmup,
            ..Default::default()
        }
    }
}

#[derive(Debug, Clone)]
pub struct SimulationOutput {
    /// Total flow over the scored (post-warm-up) window.
    pub flow: Series,
    pub fluxes: Vec<DailyFluxes>,
    /// Store levels at the end of each scored day, when requested.
    pub state_trace: Option<Vec<Vec<f64>>>,
    /// `None` when the scored window produced no runoff.
    pub fractions: Option<FluxFractions>,
    pub balance: MassBalance,
}

/// Flow and fractions only, for ensemble scoring.
#[derive(Debug, Clone)]
pub struct ScoredRun {
    pub flow: Vec<f64>,
    pub fractions: Option<FluxFractions>,
    pub balance: MassBalance,
}

fn check_window(forcing: &Forcing, warmup: usize) -> Result<()> {
    if forcing.len() < warmup + 2 {
        return Err(Error::ForcingTooShort {
            len: forcing.len(),
            warmup,
        });
    }
    Ok(())
}

/// Steps `model` over the full forcing, calling `sink` for every day.
fn drive<M: RunoffModel>(
    model: &M,
    forcing: &Forcing,
    initial: M::State,
    mut sink: impl FnMut(usize, &M::State, &DailyFluxes),
) -> MassBalance {
    let mut state = initial;
    let mut balance = MassBalance::default();
    let start_storage = model.storage(&state);
    for (day, (p, e)) in forcing
        .precip()
        .values()
        .iter()
        .zip(forcing.pet().values())
        .enumerate()
    {
        let (next, fluxes) = model.step(&state, *p, *e);
        state = next;
        balance.precip += p;
        balance.aet += fluxes.aet;
        balance.runoff += fluxes.total;
        balance.deep_loss += fluxes.deep_loss;
        sink(day, &state, &fluxes);
    }
    balance.storage_change = model.storage(&state) - start_storage;
    balance
}

fn initial_state<M: RunoffModel>(model: &M, stores: Option<&[f64]>) -> Result<M::State> {
    match stores {
        Some(levels) => model.state_from_levels(levels),
        None => Ok(M::State::default()),
    }
}

fn simulate_model<M: RunoffModel>(
    model: &M,
    forcing: &Forcing,
    options: &SimulationOptions,
) -> Result<SimulationOutput> {
    check_window(forcing, options.warmup)?;
    let init = initial_state(model, options.initial_stores.as_deref())?;
    let scored = forcing.len() - options.warmup;
    let mut fluxes = Vec::with_capacity(scored);
    let mut trace = options.record_states.then(|| Vec::with_capacity(scored));
    let balance = drive(model, forcing, init, |day, state, f| {
        if day >= options.warmup {
            fluxes.push(*f);
            if let Some(t) = trace.as_mut() {
                t.push(M::store_levels(state));
            }
        }
    });
    let (vi, vw, vs) = fluxes.iter().fold((0.0, 0.0, 0.0), |acc, f| {
        (acc.0 + f.intensity, acc.1 + f.wetness, acc.2 + f.slow)
    });
    let flow = Series::new(
        forcing.precip().date_at(options.warmup),
        fluxes.iter().map(|f| f.total).collect(),
    )?;
    Ok(SimulationOutput {
        flow,
        fluxes,
        state_trace: trace,
        fractions: FluxFractions::from_volumes(vi, vw, vs).ok(),
        balance,
    })
}

fn score_model<M: RunoffModel>(model: &M, forcing: &Forcing, warmup: usize) -> Result<ScoredRun> {
    check_window(forcing, warmup)?;
    let mut flow = Vec::with_capacity(forcing.len() - warmup);
    let (mut vi, mut vw, mut vs) = (0.0, 0.0, 0.0);
    let balance = drive(model, forcing, M::State::default(), |day, _, f| {
        if day >= warmup {
            flow.push(f.total);
            vi += f.intensity;
            vw += f.wetness;
            vs += f.slow;
        }
    });
    Ok(ScoredRun {
        flow,
        fractions: FluxFractions::from_volumes(vi, vw, vs).ok(),
        balance,
    })
}

/// Runs a model over `forcing`; flow, fluxes and fractions cover the days
/// after `options.warmup`, the mass balance covers every day.
pub fn simulate(
    params: &ModelParams,
    forcing: &Forcing,
    options: &SimulationOptions,
) -> Result<SimulationOutput> {
    params.validate()?;
    match params {
        ModelParams::Simhyd(p) => simulate_model(p, forcing, options),
        ModelParams::Sacramento(p) => simulate_model(p, forcing, options),
    }
}

/// Lean variant of [`simulate`] from empty stores, used for ensembles and
/// calibration. Produces the same flow bit for bit.
pub fn score_run(params: &ModelParams, forcing: &Forcing, warmup: usize) -> Result<ScoredRun> {
    params.validate()?;
    match params {
        ModelParams::Simhyd(p) => score_model(p, forcing, warmup),
        ModelParams::Sacramento(p) => score_model(p, forcing, warmup),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::series::Series;

    fn forcing(precip: Vec<f64>, pet: Vec<f64>) -> Forcing {
        Forcing::new(
            Series::from_values(precip).unwrap(),
            Series::from_values(pet).unwrap(),
        )
        .unwrap()
    }

    fn simhyd() -> ModelParams {
        ModelParams::Simhyd(SimhydParams {
            insc: 2.0,
            coeff: 150.0,
            sq: 2.0,
            smsc: 200.0,
            sub: 0.4,
            crak: 0.3,
            k: 0.05,
        })
    }

    #[test]
    fn zero_forcing_gives_zero_flow_and_no_fractions() {
        let f = forcing(vec![0.0; 30], vec![0.0; 30]);
        let out = simulate(&simhyd(), &f, &SimulationOptions::with_warmup(5)).unwrap();
        assert!(out.flow.values().iter().all(|q| *q == 0.0));
        assert!(out.fractions.is_none());
        assert_eq!(out.flow.len(), 25);
    }

    #[test]
    fn warmup_must_leave_two_days() {
        let f = forcing(vec![1.0; 10], vec![1.0; 10]);
        assert!(matches!(
            simulate(&simhyd(), &f, &SimulationOptions::with_warmup(9)),
            Err(Error::ForcingTooShort { .. })
        ));
    }

    #[test]
    fn score_run_matches_simulate() {
        let p: Vec<f64> = (0..400).map(|i| ((i * 37) % 23) as f64 * 1.3).collect();
        let e: Vec<f64> = (0..400).map(|i| 2.0 + ((i * 11) % 5) as f64 * 0.5).collect();
        let f = forcing(p, e);
        let full = simulate(&simhyd(), &f, &SimulationOptions::with_warmup(30)).unwrap();
        let lean = score_run(&simhyd(), &f, 30).unwrap();
        assert_eq!(full.flow.values(), lean.flow.as_slice());
        assert_eq!(full.fractions, lean.fractions);
        assert_eq!(full.balance, lean.balance);
        assert_eq!(full.flow.start_date(), f.precip().date_at(30));
    }

    #[test]
    fn fraction_constructors() {
        let f = FluxFractions::from_volumes(1.0, 1.0, 2.0).unwrap();
        assert_eq!((f.intensity, f.wetness, f.slow), (0.25, 0.25, 0.5));
        assert!(FluxFractions::from_volumes(0.0, 0.0, 0.0).is_err());
        assert!(FluxFractions::new(0.5, 0.5, 0.5).is_err());
        assert!(FluxFractions::new(0.2, 0.2, 0.6).is_ok());
    }

    #[test]
    fn initial_stores_are_validated() {
        let f = forcing(vec![1.0; 10], vec![1.0; 10]);
        let mut opts = SimulationOptions::with_warmup(0);
        opts.initial_stores = Some(vec![500.0, 0.0]);
        assert!(simulate(&simhyd(), &f, &opts).is_err());
        opts.initial_stores = Some(vec![100.0, 20.0]);
        opts.record_states = true;
        let out = simulate(&simhyd(), &f, &opts).unwrap();
        assert_eq!(out.state_trace.unwrap().len(), 10);
    }

    #[test]
    fn model_ids_parse() {
        assert_eq!("SIMHYD".parse::<ModelId>().unwrap(), ModelId::Simhyd);
        assert_eq!("sacramento".parse::<ModelId>().unwrap(), ModelId::Sacramento);
        assert_eq!(ModelId::Sacramento.default_space().len(), 15);
        assert_eq!(ModelId::Simhyd.default_space().len(), 7);
    }
}
