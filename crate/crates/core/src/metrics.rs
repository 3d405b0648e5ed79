//! Efficiency metrics: NSE, the KGE skill score and the refined index of
//! agreement. All three equal 1 for a perfect match and decrease as the
//! simulation departs from the observations.

use std::f64::consts::SQRT_2;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::series::mean;

/// KGE of a simulation equal to the observed mean everywhere.
pub const KGE_MEAN_BENCHMARK: f64 = 1.0 - SQRT_2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MetricId {
    Nse,
    #[serde(rename = "kgess")]
    KgeSs,
    Wia,
}

impl MetricId {
    pub const ALL: [MetricId; 3] = [MetricId::Nse, MetricId::KgeSs, MetricId::Wia];

    pub fn as_str(self) -> &'static str {
        match self {
            MetricId::Nse => "nse",
            MetricId::KgeSs => "kgess",
            MetricId::Wia => "wia",
        }
    }
}

impl fmt::Display for MetricId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for MetricId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "nse" => Ok(MetricId::Nse),
            "kgess" | "kge_ss" => Ok(MetricId::KgeSs),
            "wia" => Ok(MetricId::Wia),
            other => Err(Error::Config(format!("unknown metric `{other}`"))),
        }
    }
}

/// The three squared KGE error terms with the resulting KGE and skill score.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KgeComponents {
    pub bias_term: f64,
    pub variability_term: f64,
    pub correlation_term: f64,
    pub kge: f64,
    pub kge_ss: f64,
}

impl KgeComponents {
    fn from_terms(bias_term: f64, variability_term: f64, correlation_term: f64) -> Self {
        let kge = 1.0 - (bias_term + variability_term + correlation_term).sqrt();
        KgeComponents {
            bias_term,
            variability_term,
            correlation_term,
            kge,
            kge_ss: kge_skill_score(kge),
        }
    }
}

/// Rescales KGE so that the observed-mean benchmark scores 0.
pub fn kge_skill_score(kge: f64) -> f64 {
    1.0 - (1.0 - kge) / SQRT_2
}

fn check_lengths(obs: &[f64], sim: &[f64]) -> Result<()> {
    if obs.len() != sim.len() {
        return Err(Error::LengthMismatch {
            left: obs.len(),
            right: sim.len(),
        });
    }
    if obs.len() < 2 {
        return Err(Error::TooShort {
            min: 2,
            got: obs.len(),
        });
    }
    Ok(())
}

pub fn nse(obs: &[f64], sim: &[f64]) -> Result<f64> {
    check_lengths(obs, sim)?;
    ObservedReference::new(obs)?.nse(sim)
}

pub fn kge_components(obs: &[f64], sim: &[f64]) -> Result<KgeComponents> {
    check_lengths(obs, sim)?;
    ObservedReference::new(obs)?.kge_components(sim)
}

pub fn wia(obs: &[f64], sim: &[f64]) -> Result<f64> {
    check_lengths(obs, sim)?;
    ObservedReference::new(obs)?.wia(sim)
}

pub fn evaluate(metric: MetricId, obs: &[f64], sim: &[f64]) -> Result<f64> {
    match metric {
        MetricId::Nse => nse(obs, sim),
        MetricId::KgeSs => kge_components(obs, sim).map(|c| c.kge_ss),
        MetricId::Wia => wia(obs, sim),
    }
}

/// Observed-series statistics computed once and reused across many
/// simulations, as in ensemble runs.
#[derive(Debug, Clone)]
pub struct ObservedReference {
    obs: Vec<f64>,
    mean: f64,
    sum_sq_dev: f64,
    sum_abs_dev: f64,
}

impl ObservedReference {
    pub fn new(obs: &[f64]) -> Result<Self> {
        if obs.len() < 2 {
            return Err(Error::TooShort {
                min: 2,
                got: obs.len(),
            });
        }
        let m = mean(obs);
        let sum_sq_dev = obs.iter().map(|o| (o - m) * (o - m)).sum();
        let sum_abs_dev = obs.iter().map(|o| (o - m).abs()).sum();
        Ok(ObservedReference {
            obs: obs.to_vec(),
            mean: m,
            sum_sq_dev,
            sum_abs_dev,
        })
    }

    pub fn observed(&self) -> &[f64] {
        &self.obs
    }

    pub fn len(&self) -> usize {
        self.obs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.obs.is_empty()
    }

    fn check(&self, sim: &[f64]) -> Result<()> {
        if sim.len() != self.obs.len() {
            return Err(Error::LengthMismatch {
                left: self.obs.len(),
                right: sim.len(),
            });
        }
        Ok(())
    }

    pub fn nse(&self, sim: &[f64]) -> Result<f64> {
        self.check(sim)?;
        if self.sum_sq_dev == 0.0 {
            return Err(Error::ZeroVariance {
                what: "observed series",
            });
        }
        let sse: f64 = sim
            .iter()
            .zip(&self.obs)
            .map(|(m, o)| (m - o) * (m - o))
            .sum();
        Ok(1.0 - sse / self.sum_sq_dev)
    }

    pub fn kge_components(&self, sim: &[f64]) -> Result<KgeComponents> {
        self.check(sim)?;
        if self.mean == 0.0 {
            return Err(Error::ZeroMean {
                what: "observed series",
            });
        }
        if self.sum_sq_dev == 0.0 {
            return Err(Error::ZeroVariance {
                what: "observed series",
            });
        }
        let n = sim.len() as f64;
        let sim_mean = mean(sim);
        let (mut sab, mut sbb) = (0.0, 0.0);
        for (m, o) in sim.iter().zip(&self.obs) {
            let dm = m - sim_mean;
            sab += dm * (o - self.mean);
            sbb += dm * dm;
        }
        if sbb == 0.0 {
            return Err(Error::ZeroVariance {
                what: "simulated series",
            });
        }
        if sim_mean == 0.0 {
            return Err(Error::ZeroMean {
                what: "simulated series",
            });
        }
        let obs_cv = (self.sum_sq_dev / n).sqrt() / self.mean;
        let sim_cv = (sbb / n).sqrt() / sim_mean;
        let cc = (sab / (self.sum_sq_dev * sbb).sqrt()).clamp(-1.0, 1.0);
        let bias_term = (1.0 - sim_mean / self.mean).powi(2);
        let variability_term = (1.0 - sim_cv / obs_cv).powi(2);
        let correlation_term = (1.0 - cc).powi(2);
        Ok(KgeComponents::from_terms(
            bias_term,
            variability_term,
            correlation_term,
        ))
    }

    pub fn wia(&self, sim: &[f64]) -> Result<f64> {
        self.check(sim)?;
        if self.sum_abs_dev == 0.0 {
            return Err(Error::ZeroVariance {
                what: "observed series",
            });
        }
        let abs_err: f64 = sim.iter().zip(&self.obs).map(|(m, o)| (m - o).abs()).sum();
        Ok(wia_from_sums(abs_err, 2.0 * self.sum_abs_dev))
    }

    pub fn evaluate(&self, metric: MetricId, sim: &[f64]) -> Result<f64> {
        match metric {
            MetricId::Nse => self.nse(sim),
            MetricId::KgeSs => self.kge_components(sim).map(|c| c.kge_ss),
            MetricId::Wia => self.wia(sim),
        }
    }
}

/// Two-branch WIA given the absolute error sum and twice the absolute
/// deviation sum of the observations. Equality takes the first branch.
pub fn wia_from_sums(abs_err: f64, scaled_abs_dev: f64) -> f64 {
    if abs_err <= scaled_abs_dev {
        1.0 - abs_err / scaled_abs_dev
    } else {
        scaled_abs_dev / abs_err - 1.0
    }
}
