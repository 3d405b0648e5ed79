//! One-factor-at-a-time metric sensitivity.
//!
//! An observed series is corrupted in 20 equal steps under three error
//! regimes while the other two moments are held fixed:
//!
//! * bias: the mean grows by 5% of the original mean per step,
//! * variability: the standard deviation grows by 5% per step,
//! * correlation: the correlation with the original drops by 0.05 per step.
//!
//! Each corrupted series is scored against the original with every metric
//! to produce degradation curves, and its residuals are kept for
//! heteroscedasticity plots.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metrics::{MetricId, ObservedReference};
use crate::rng::{self, Domain};
use crate::series::{mean, summary_stats, Series};

pub const MAX_STEP: u32 = 20;
pub const STEP_SIZE: f64 = 0.05;
const MAX_ORTHO_ATTEMPTS: u32 = 16;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ErrorRegime {
    Bias,
    Variability,
    Correlation,
}

impl ErrorRegime {
    pub const ALL: [ErrorRegime; 3] = [
        ErrorRegime::Bias,
        ErrorRegime::Variability,
        ErrorRegime::Correlation,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ErrorRegime::Bias => "bias",
            ErrorRegime::Variability => "variability",
            ErrorRegime::Correlation => "correlation",
        }
    }
}

impl fmt::Display for ErrorRegime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ErrorRegime {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "bias" => Ok(ErrorRegime::Bias),
            "variability" => Ok(ErrorRegime::Variability),
            "correlation" => Ok(ErrorRegime::Correlation),
            other => Err(Error::Config(format!("unknown error regime `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CorruptionStep {
    pub regime: ErrorRegime,
    pub k: u32,
    pub series: Series,
    /// `series - original`, elementwise.
    pub residuals: Vec<f64>,
}

impl CorruptionStep {
    fn build(regime: ErrorRegime, k: u32, original: &Series, values: Vec<f64>) -> Result<Self> {
        let residuals = values
            .iter()
            .zip(original.values())
            .map(|(c, o)| c - o)
            .collect();
        Ok(CorruptionStep {
            regime,
            k,
            series: Series::new(original.start_date(), values)?,
            residuals,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DegradationCurve {
    pub metric: MetricId,
    pub regime: ErrorRegime,
    /// Metric value at steps `0..=20`.
    pub values: Vec<f64>,
}

fn check_step(k: u32) -> Result<()> {
    if k > MAX_STEP {
        return Err(Error::StepOutOfRange { k, max: MAX_STEP });
    }
    Ok(())
}

fn step_fraction(k: u32) -> f64 {
    STEP_SIZE * f64::from(k)
}

pub fn corrupt_bias(original: &Series, k: u32) -> Result<CorruptionStep> {
    check_step(k)?;
    let stats = original.stats();
    if stats.mean == 0.0 {
        return Err(Error::ZeroMean {
            what: "original series",
        });
    }
    if k == 0 {
        return CorruptionStep::build(ErrorRegime::Bias, 0, original, original.values().to_vec());
    }
    let shift = step_fraction(k) * stats.mean;
    let values = original.values().iter().map(|o| o + shift).collect();
    CorruptionStep::build(ErrorRegime::Bias, k, original, values)
}

pub fn corrupt_variability(original: &Series, k: u32) -> Result<CorruptionStep> {
    check_step(k)?;
    let stats = original.stats();
    if stats.std == 0.0 {
        return Err(Error::ZeroVariance {
            what: "original series",
        });
    }
    if k == 0 {
        return CorruptionStep::build(
            ErrorRegime::Variability,
            0,
            original,
            original.values().to_vec(),
        );
    }
    let factor = 1.0 + step_fraction(k);
    let values = original
        .values()
        .iter()
        .map(|o| stats.mean + factor * (o - stats.mean))
        .collect();
    CorruptionStep::build(ErrorRegime::Variability, k, original, values)
}

/// The standardized original together with a zero-mean, unit-variance
/// direction orthogonal to it. Reused across all correlation steps so the
/// corruption path is continuous in `k`.
#[derive(Debug, Clone)]
pub struct CorrelationBasis {
    mean: f64,
    std: f64,
    standardized: Vec<f64>,
    orthogonal: Vec<f64>,
}

impl CorrelationBasis {
    pub fn new(original: &Series, seed: u64) -> Result<Self> {
        let n = original.len();
        if n < 3 {
            return Err(Error::TooShort { min: 3, got: n });
        }
        let stats = original.stats();
        if stats.std == 0.0 {
            return Err(Error::ZeroVariance {
                what: "original series",
            });
        }
        let standardized: Vec<f64> = original
            .values()
            .iter()
            .map(|o| (o - stats.mean) / stats.std)
            .collect();
        let orthogonal = orthogonal_direction(&standardized, seed)?;
        Ok(CorrelationBasis {
            mean: stats.mean,
            std: stats.std,
            standardized,
            orthogonal,
        })
    }

    pub fn orthogonal(&self) -> &[f64] {
        &self.orthogonal
    }

    fn blend(&self, rho: f64) -> Vec<f64> {
        let w = (1.0 - rho * rho).max(0.0).sqrt();
        self.standardized
            .iter()
            .zip(&self.orthogonal)
            .map(|(z, p)| self.mean + self.std * (rho * z + w * p))
            .collect()
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn remove_component(v: &mut [f64], basis: &[f64], basis_norm_sq: f64) {
    let c = dot(v, basis) / basis_norm_sq;
    for (x, b) in v.iter_mut().zip(basis) {
        *x -= c * b;
    }
}

fn center(v: &mut [f64]) {
    let m = mean(v);
    for x in v.iter_mut() {
        *x -= m;
    }
}

/// Gram-Schmidt a seeded uniform draw against the constant vector and
/// `standardized`, then scale to unit population standard deviation.
fn orthogonal_direction(standardized: &[f64], seed: u64) -> Result<Vec<f64>> {
    let n = standardized.len();
    let z_norm_sq = dot(standardized, standardized);
    for attempt in 0..MAX_ORTHO_ATTEMPTS {
        let mut draw = rng::stream(seed, Domain::Orthogonal, u64::from(attempt));
        let mut v: Vec<f64> = (0..n).map(|_| draw.gen_range(-1.0..1.0)).collect();
        // Two passes keep the residual correlation at round-off level.
        for _ in 0..2 {
            center(&mut v);
            remove_component(&mut v, standardized, z_norm_sq);
        }
        center(&mut v);
        let norm = dot(&v, &v).sqrt();
        if norm < 1e-8 * n as f64 {
            continue;
        }
        let std = (dot(&v, &v) / n as f64).sqrt();
        v.iter_mut().for_each(|x| *x /= std);
        return Ok(v);
    }
    Err(Error::DegenerateOrthogonalization {
        attempts: MAX_ORTHO_ATTEMPTS,
    })
}

pub fn corrupt_correlation(original: &Series, k: u32, seed: u64) -> Result<CorruptionStep> {
    check_step(k)?;
    let basis = CorrelationBasis::new(original, seed)?;
    corrupt_correlation_with(original, k, &basis)
}

pub fn corrupt_correlation_with(
    original: &Series,
    k: u32,
    basis: &CorrelationBasis,
) -> Result<CorruptionStep> {
    check_step(k)?;
    if k == 0 {
        return CorruptionStep::build(
            ErrorRegime::Correlation,
            0,
            original,
            original.values().to_vec(),
        );
    }
    let rho = 1.0 - step_fraction(k);
    CorruptionStep::build(ErrorRegime::Correlation, k, original, basis.blend(rho))
}

/// All 21 steps (`k = 0..=20`) of every regime, ordered by regime then `k`.
pub fn all_steps(original: &Series, seed: u64) -> Result<Vec<CorruptionStep>> {
    let basis = CorrelationBasis::new(original, seed)?;
    let mut steps = Vec::with_capacity(3 * (MAX_STEP as usize + 1));
    for regime in ErrorRegime::ALL {
        for k in 0..=MAX_STEP {
            steps.push(match regime {
                ErrorRegime::Bias => corrupt_bias(original, k)?,
                ErrorRegime::Variability => corrupt_variability(original, k)?,
                ErrorRegime::Correlation => corrupt_correlation_with(original, k, &basis)?,
            });
        }
    }
    Ok(steps)
}

/// Nine curves, one per (metric, regime), ordered metric-major.
pub fn degradation_table(original: &Series, seed: u64) -> Result<Vec<DegradationCurve>> {
    let steps = all_steps(original, seed)?;
    let reference = ObservedReference::new(original.values())?;
    let mut curves = Vec::with_capacity(9);
    for metric in MetricId::ALL {
        for regime in ErrorRegime::ALL {
            let values = steps
                .iter()
                .filter(|s| s.regime == regime)
                .map(|s| reference.evaluate(metric, s.series.values()))
                .collect::<Result<Vec<f64>>>()?;
            curves.push(DegradationCurve {
                metric,
                regime,
                values,
            });
        }
    }
    Ok(curves)
}

pub fn residual_table(original: &Series, seed: u64) -> Result<BTreeMap<(ErrorRegime, u32), Vec<f64>>> {
    Ok(all_steps(original, seed)?
        .into_iter()
        .map(|s| ((s.regime, s.k), s.residuals))
        .collect())
}

/// Step-20 value of every curve, as a (regime -> metric -> value) table.
pub fn final_step_table(curves: &[DegradationCurve]) -> BTreeMap<ErrorRegime, BTreeMap<MetricId, f64>> {
    let mut table: BTreeMap<ErrorRegime, BTreeMap<MetricId, f64>> = BTreeMap::new();
    for c in curves {
        if let Some(v) = c.values.last() {
            table.entry(c.regime).or_default().insert(c.metric, *v);
        }
    }
    table
}

/// A 45-day positive flow record with several distinct high- and low-flow
/// sequences, used as the default input of the sensitivity harness.
pub fn example_series() -> Series {
    Series::from_values(vec![
        0.4, 0.35, 0.3, 2.8, 14.6, 7.9, 3.1, 1.4, 0.8, 0.6, 0.5, 0.45, 0.4, 0.9, 5.2, 21.3, 11.0,
        4.6, 2.0, 1.1, 0.7, 0.55, 0.5, 0.42, 0.38, 0.33, 0.3, 0.28, 1.9, 9.7, 30.5, 16.2, 6.8, 2.9,
        1.3, 0.8, 0.6, 3.4, 12.8, 6.1, 2.4, 1.0, 0.65, 0.5, 0.42,
    ])
    .expect("static series is valid")
}

/// Sanity check used by callers that accept arbitrary user series.
pub fn admits_all_regimes(original: &Series) -> Result<()> {
    let stats = summary_stats(original.values())?;
    if stats.mean == 0.0 {
        return Err(Error::ZeroMean {
            what: "original series",
        });
    }
    if stats.std == 0.0 {
        return Err(Error::ZeroVariance {
            what: "original series",
        });
    }
    if original.len() < 3 {
        return Err(Error::TooShort {
            min: 3,
            got: original.len(),
        });
    }
    Ok(())
}
