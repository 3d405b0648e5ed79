//! Seeded synthetic forcing and perfect-model observations.

use std::f64::consts::TAU;

use rand::Rng;

use crate::error::Result;
use crate::models::{simulate, ModelParams, SimulationOptions};
use crate::rng::{self, Domain};
use crate::series::{default_start, Forcing, Series};

/// Daily climate with a wet/dry Markov chain for rain occurrence,
/// exponential depths and a seasonal PET cycle. Mean annual rainfall is
/// roughly 900 mm, mean PET roughly 1100 mm.
pub fn synthetic_forcing(days: usize, seed: u64) -> Result<Forcing> {
    let mut rng = rng::stream(seed, Domain::Synthetic, 0);
    let mut wet = false;
    let mut precip = Vec::with_capacity(days);
    let mut pet = Vec::with_capacity(days);
    for day in 0..days {
        let season = (TAU * day as f64 / 365.25).cos();
        let p_wet = if wet { 0.65 } else { 0.25 };
        wet = rng.gen::<f64>() < p_wet;
        let depth = if wet {
            let u: f64 = rng.gen();
            -(1.0 - u).ln() * 5.5 * (1.0 + 0.3 * season)
        } else {
            0.0
        };
        precip.push(depth);
        pet.push(3.0 - 2.0 * season);
    }
    Forcing::new(
        Series::new(default_start(), precip)?,
        Series::new(default_start(), pet)?,
    )
}

/// Full-length flow simulated by `params` from empty stores, for use as
/// observations in perfect-model experiments.
pub fn perfect_model_flow(params: &ModelParams, forcing: &Forcing) -> Result<Series> {
    Ok(simulate(params, forcing, &SimulationOptions::with_warmup(0))?.flow)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn plausible_and_reproducible() {
        let f = synthetic_forcing(3653, 1).unwrap();
        let annual = f.precip().values().iter().sum::<f64>() / 10.0;
        assert!((600.0..1300.0).contains(&annual), "{annual}");
        assert!(f.pet().values().iter().all(|&e| e >= 1.0 - 1e-12));
        let g = synthetic_forcing(3653, 1).unwrap();
        assert_eq!(f.precip().values(), g.precip().values());
        let h = synthetic_forcing(3653, 2).unwrap();
        assert_ne!(f.precip().values(), h.precip().values());
    }
}
