//! C ABI for the rrflux engine.
//!
//! Every function returns an [`RrfluxStatus`]; on failure the message is
//! available from [`rrflux_last_error`] on the same thread. Simulations
//! are returned as opaque handles released with
//! [`rrflux_simulation_free`]. Output buffers are caller-allocated; pass a
//! capacity and receive the required length.

use std::cell::RefCell;
use std::ffi::{c_char, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;
use std::slice;

use rrflux::experiment::{InadequateSide, SufficiencyVerdict};
use rrflux::fluxmap::{self, DominanceClass};
use rrflux::metrics::{self, MetricId};
use rrflux::models::{self, FluxFractions, ModelId, ModelParams, SimulationOptions};
use rrflux::sampling;
use rrflux::series::{Forcing, Series};
use rrflux::Error;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RrfluxStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    DataError = 3,
    RuntimeError = 4,
    BufferTooSmall = 5,
    Panic = 6,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RrfluxModel {
    Simhyd = 0,
    Sacramento = 1,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RrfluxMetric {
    Nse = 0,
    KgeSs = 1,
    Wia = 2,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RrfluxClass {
    SlowDominated = 0,
    WetnessDominated = 1,
    IntensityDominated = 2,
    NoDominantMode = 3,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RrfluxInadequateSide {
    Neither = 0,
    Ensemble = 1,
    Sce = 2,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct RrfluxFractions {
    pub intensity: f64,
    pub wetness: f64,
    pub slow: f64,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct RrfluxKgeComponents {
    pub bias_term: f64,
    pub variability_term: f64,
    pub correlation_term: f64,
    pub kge: f64,
    pub kge_ss: f64,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct RrfluxMassBalance {
    pub precip: f64,
    pub aet: f64,
    pub runoff: f64,
    pub deep_loss: f64,
    pub storage_change: f64,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RrfluxVerdict {
    pub ensemble_hmv: f64,
    pub sce_hmv: f64,
    pub hmv: f64,
    pub sufficient: bool,
    pub inadequate_side: RrfluxInadequateSide,
}

/// Result of one model run. Opaque to C.
pub struct RrfluxSimulation {
    flow: Vec<f64>,
    fractions: Option<FluxFractions>,
    balance: models::MassBalance,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(err: &Error) -> RrfluxStatus {
    match rrflux::cli::exit_code(err) {
        rrflux::cli::EXIT_CONFIG => RrfluxStatus::InvalidArgument,
        rrflux::cli::EXIT_DATA => RrfluxStatus::DataError,
        _ => RrfluxStatus::RuntimeError,
    }
}

struct Fail(RrfluxStatus, String);

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        Fail(status_of(&e), e.to_string())
    }
}

fn guard(f: impl FnOnce() -> Result<(), Fail>) -> RrfluxStatus {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => RrfluxStatus::Ok,
        Ok(Err(Fail(status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal panic".into());
            RrfluxStatus::Panic
        }
    }
}

unsafe fn input<'a>(ptr: *const f64, len: usize, what: &str) -> Result<&'a [f64], Fail> {
    if len == 0 {
        return Ok(&[]);
    }
    if ptr.is_null() {
        return Err(Fail(RrfluxStatus::NullPointer, format!("{what} is null")));
    }
    Ok(slice::from_raw_parts(ptr, len))
}

fn out_ref<'a, T>(ptr: *mut T, what: &str) -> Result<&'a mut T, Fail> {
    // SAFETY: the caller passes a valid, writable pointer or null.
    unsafe { ptr.as_mut() }.ok_or_else(|| Fail(RrfluxStatus::NullPointer, format!("{what} is null")))
}

fn model_id(m: RrfluxModel) -> ModelId {
    match m {
        RrfluxModel::Simhyd => ModelId::Simhyd,
        RrfluxModel::Sacramento => ModelId::Sacramento,
    }
}

fn metric_id(m: RrfluxMetric) -> MetricId {
    match m {
        RrfluxMetric::Nse => MetricId::Nse,
        RrfluxMetric::KgeSs => MetricId::KgeSs,
        RrfluxMetric::Wia => MetricId::Wia,
    }
}

fn fractions_in(f: &RrfluxFractions) -> Result<FluxFractions, Fail> {
    FluxFractions::new(f.intensity, f.wetness, f.slow).map_err(|_| {
        Fail(
            RrfluxStatus::InvalidArgument,
            "fractions must lie in [0, 1] and sum to 1".into(),
        )
    })
}

/// Message of the last failed call on this thread, or NULL. The pointer
/// stays valid until the next rrflux call on the same thread.
#[no_mangle]
pub extern "C" fn rrflux_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Number of parameters of `model`.
#[no_mangle]
pub extern "C" fn rrflux_parameter_count(model: RrfluxModel) -> usize {
    model_id(model).parameter_names().len()
}

/// Scores `sim` against `obs` (both of length `len`).
///
/// # Safety
/// `obs` and `sim` must point to `len` readable doubles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn rrflux_metric(
    metric: RrfluxMetric,
    obs: *const f64,
    sim: *const f64,
    len: usize,
    out: *mut f64,
) -> RrfluxStatus {
    guard(|| {
        let o = input(obs, len, "obs")?;
        let s = input(sim, len, "sim")?;
        *out_ref(out, "out")? = metrics::evaluate(metric_id(metric), o, s)?;
        Ok(())
    })
}

/// KGE decomposition and skill score.
///
/// # Safety
/// As for [`rrflux_metric`].
#[no_mangle]
pub unsafe extern "C" fn rrflux_kge_components(
    obs: *const f64,
    sim: *const f64,
    len: usize,
    out: *mut RrfluxKgeComponents,
) -> RrfluxStatus {
    guard(|| {
        let o = input(obs, len, "obs")?;
        let s = input(sim, len, "sim")?;
        let c = metrics::kge_components(o, s)?;
        *out_ref(out, "out")? = RrfluxKgeComponents {
            bias_term: c.bias_term,
            variability_term: c.variability_term,
            correlation_term: c.correlation_term,
            kge: c.kge,
            kge_ss: c.kge_ss,
        };
        Ok(())
    })
}

/// Runs `model` from empty stores. Flow and fractions cover the days after
/// `warmup`; the mass balance covers every day. On success `*out` owns a
/// handle to release with [`rrflux_simulation_free`].
///
/// # Safety
/// `params` must hold `n_params` doubles, `precip` and `pet` `days` doubles
/// each; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn rrflux_simulate(
    model: RrfluxModel,
    params: *const f64,
    n_params: usize,
    precip: *const f64,
    pet: *const f64,
    days: usize,
    warmup: usize,
    out: *mut *mut RrfluxSimulation,
) -> RrfluxStatus {
    guard(|| {
        let slot = out_ref(out, "out")?;
        *slot = ptr::null_mut();
        let p = ModelParams::from_values(model_id(model), input(params, n_params, "params")?)?;
        let forcing = Forcing::new(
            Series::from_values(input(precip, days, "precip")?.to_vec())?,
            Series::from_values(input(pet, days, "pet")?.to_vec())?,
        )?;
        let run = models::simulate(&p, &forcing, &SimulationOptions::with_warmup(warmup))?;
        *slot = Box::into_raw(Box::new(RrfluxSimulation {
            flow: run.flow.into_values(),
            fractions: run.fractions,
            balance: run.balance,
        }));
        Ok(())
    })
}

/// Number of scored days in a simulation.
///
/// # Safety
/// `sim` must be a live handle or NULL.
#[no_mangle]
pub unsafe extern "C" fn rrflux_simulation_len(sim: *const RrfluxSimulation) -> usize {
    sim.as_ref().map_or(0, |s| s.flow.len())
}

/// Copies the scored flow into `buf`. `*written` receives the flow length;
/// `BufferTooSmall` is returned when `capacity` is less than that.
///
/// # Safety
/// `sim` must be a live handle; `buf` must hold `capacity` doubles.
#[no_mangle]
pub unsafe extern "C" fn rrflux_simulation_flow(
    sim: *const RrfluxSimulation,
    buf: *mut f64,
    capacity: usize,
    written: *mut usize,
) -> RrfluxStatus {
    guard(|| {
        let s = sim
            .as_ref()
            .ok_or_else(|| Fail(RrfluxStatus::NullPointer, "sim is null".into()))?;
        *out_ref(written, "written")? = s.flow.len();
        if capacity < s.flow.len() {
            return Err(Fail(
                RrfluxStatus::BufferTooSmall,
                format!("need {} doubles, got {capacity}", s.flow.len()),
            ));
        }
        if !s.flow.is_empty() {
            let dst = out_ref(buf, "buf")? as *mut f64;
            ptr::copy_nonoverlapping(s.flow.as_ptr(), dst, s.flow.len());
        }
        Ok(())
    })
}

/// Runoff-mode shares over the scored window; `RuntimeError` when the run
/// produced no runoff.
///
/// # Safety
/// `sim` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn rrflux_simulation_fractions(
    sim: *const RrfluxSimulation,
    out: *mut RrfluxFractions,
) -> RrfluxStatus {
    guard(|| {
        let s = sim
            .as_ref()
            .ok_or_else(|| Fail(RrfluxStatus::NullPointer, "sim is null".into()))?;
        let f = s.fractions.ok_or(Error::DegenerateFractions)?;
        *out_ref(out, "out")? = RrfluxFractions {
            intensity: f.intensity,
            wetness: f.wetness,
            slow: f.slow,
        };
        Ok(())
    })
}

/// Whole-run water budget.
///
/// # Safety
/// `sim` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn rrflux_simulation_balance(
    sim: *const RrfluxSimulation,
    out: *mut RrfluxMassBalance,
) -> RrfluxStatus {
    guard(|| {
        let s = sim
            .as_ref()
            .ok_or_else(|| Fail(RrfluxStatus::NullPointer, "sim is null".into()))?;
        let b = s.balance;
        *out_ref(out, "out")? = RrfluxMassBalance {
            precip: b.precip,
            aet: b.aet,
            runoff: b.runoff,
            deep_loss: b.deep_loss,
            storage_change: b.storage_change,
        };
        Ok(())
    })
}

/// Releases a simulation handle. NULL is ignored.
///
/// # Safety
/// `sim` must come from [`rrflux_simulate`] and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn rrflux_simulation_free(sim: *mut RrfluxSimulation) {
    if !sim.is_null() {
        drop(Box::from_raw(sim));
    }
}

/// Latin hypercube sample over the model's default feasible ranges,
/// written row-major (`count` rows of `rrflux_parameter_count(model)`).
///
/// # Safety
/// `buf` must hold `capacity` doubles; `written` must be writable.
#[no_mangle]
pub unsafe extern "C" fn rrflux_lhs(
    model: RrfluxModel,
    count: usize,
    seed: u64,
    buf: *mut f64,
    capacity: usize,
    written: *mut usize,
) -> RrfluxStatus {
    guard(|| {
        let id = model_id(model);
        let need = count * id.parameter_names().len();
        *out_ref(written, "written")? = need;
        if capacity < need {
            return Err(Fail(
                RrfluxStatus::BufferTooSmall,
                format!("need {need} doubles, got {capacity}"),
            ));
        }
        let sample = sampling::lhs(&id.default_space(), count, seed);
        if need > 0 {
            let dst = slice::from_raw_parts_mut(out_ref(buf, "buf")? as *mut f64, need);
            for (row, p) in dst.chunks_mut(id.parameter_names().len()).zip(&sample) {
                row.copy_from_slice(&p.values);
            }
        }
        Ok(())
    })
}

/// Dominance class of a fraction triple (strict majority rule).
///
/// # Safety
/// `fractions` must be readable and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn rrflux_classify(
    fractions: *const RrfluxFractions,
    out: *mut RrfluxClass,
) -> RrfluxStatus {
    guard(|| {
        let f = fractions
            .as_ref()
            .ok_or_else(|| Fail(RrfluxStatus::NullPointer, "fractions is null".into()))?;
        *out_ref(out, "out")? = match fluxmap::classify(&fractions_in(f)?) {
            DominanceClass::SlowDominated => RrfluxClass::SlowDominated,
            DominanceClass::WetnessDominated => RrfluxClass::WetnessDominated,
            DominanceClass::IntensityDominated => RrfluxClass::IntensityDominated,
            DominanceClass::NoDominantMode => RrfluxClass::NoDominantMode,
        };
        Ok(())
    })
}

/// Plot coordinates: slow at (0, 0), wetness at (1, 0), intensity at
/// (0.5, sqrt(3)/2).
///
/// # Safety
/// `fractions` must be readable, `x` and `y` writable.
#[no_mangle]
pub unsafe extern "C" fn rrflux_ternary_coords(
    fractions: *const RrfluxFractions,
    x: *mut f64,
    y: *mut f64,
) -> RrfluxStatus {
    guard(|| {
        let f = fractions
            .as_ref()
            .ok_or_else(|| Fail(RrfluxStatus::NullPointer, "fractions is null".into()))?;
        let (px, py) = fluxmap::ternary_coords(&fractions_in(f)?);
        *out_ref(x, "x")? = px;
        *out_ref(y, "y")? = py;
        Ok(())
    })
}

/// Sampling-sufficiency verdict for a pair of HMVs.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn rrflux_sufficiency(
    ensemble_hmv: f64,
    sce_hmv: f64,
    out: *mut RrfluxVerdict,
) -> RrfluxStatus {
    guard(|| {
        if !(ensemble_hmv.is_finite() && sce_hmv.is_finite()) {
            return Err(Fail(RrfluxStatus::InvalidArgument, "HMVs must be finite".into()));
        }
        let v = SufficiencyVerdict::from_hmvs(MetricId::KgeSs, ensemble_hmv, sce_hmv);
        *out_ref(out, "out")? = RrfluxVerdict {
            ensemble_hmv: v.ensemble_hmv,
            sce_hmv: v.sce_hmv,
            hmv: v.hmv,
            sufficient: v.sufficient,
            inadequate_side: match v.inadequate_side {
                InadequateSide::Neither => RrfluxInadequateSide::Neither,
                InadequateSide::Ensemble => RrfluxInadequateSide::Ensemble,
                InadequateSide::Sce => RrfluxInadequateSide::Sce,
            },
        };
        Ok(())
    })
}
