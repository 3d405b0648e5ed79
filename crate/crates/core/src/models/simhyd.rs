//! SIMHYD: daily seven-parameter bucket model.
//!
//! Interception is evaporated the same day (no carry-over). Throughfall
//! infiltrates up to `coeff * exp(-sq * SMS/SMSC)`; the rest is
//! infiltration-excess runoff. Of the infiltrated water, `sub * SMS/SMSC`
//! leaves as interflow/saturation-excess runoff and `crak * SMS/SMSC` of
//! the remainder recharges groundwater. Soil evaporation is limited by
//! `10 * SMS/SMSC`; soil overflow above SMSC spills to groundwater, which
//! drains linearly at rate `k`.

use serde::{Deserialize, Serialize};

use super::{DailyFluxes, ParameterVector, RunoffModel};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimhydParams {
    pub insc: f64,
    pub coeff: f64,
    pub sq: f64,
    pub smsc: f64,
    pub sub: f64,
    pub crak: f64,
    pub k: f64,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct SimhydState {
    /// Soil moisture store (mm).
    pub sms: f64,
    /// Groundwater store (mm).
    pub gw: f64,
}

impl ParameterVector for SimhydParams {
    const NAMES: &'static [&'static str] = &["insc", "coeff", "sq", "smsc", "sub", "crak", "k"];

    fn from_values(values: &[f64]) -> Result<Self> {
        let v = super::expect_len(values, Self::NAMES)?;
        let p = SimhydParams {
            insc: v[0],
            coeff: v[1],
            sq: v[2],
            smsc: v[3],
            sub: v[4],
            crak: v[5],
            k: v[6],
        };
        p.validate()?;
        Ok(p)
    }

    fn to_values(&self) -> Vec<f64> {
        vec![
            self.insc, self.coeff, self.sq, self.smsc, self.sub, self.crak, self.k,
        ]
    }
}

impl SimhydParams {
    pub fn validate(&self) -> Result<()> {
        for (name, value) in Self::NAMES.iter().zip(self.to_values()) {
            if !value.is_finite() || value < 0.0 {
                return Err(Error::invalid_param(name, value, "must be finite and >= 0"));
            }
        }
        if self.smsc <= 0.0 {
            return Err(Error::invalid_param("smsc", self.smsc, "must be > 0"));
        }
        for (name, value) in [("sub", self.sub), ("crak", self.crak), ("k", self.k)] {
            if value > 1.0 {
                return Err(Error::invalid_param(name, value, "must be <= 1"));
            }
        }
        Ok(())
    }
}

impl RunoffModel for SimhydParams {
    type State = SimhydState;

    const STORE_NAMES: &'static [&'static str] = &["sms", "gw"];

    fn storage(&self, state: &SimhydState) -> f64 {
        state.sms + state.gw
    }

    fn store_levels(state: &SimhydState) -> Vec<f64> {
        vec![state.sms, state.gw]
    }

    fn state_from_levels(&self, levels: &[f64]) -> Result<SimhydState> {
        let v = super::expect_len(levels, Self::STORE_NAMES)?;
        let state = SimhydState { sms: v[0], gw: v[1] };
        if !(0.0..=self.smsc).contains(&state.sms) {
            return Err(Error::invalid_param("sms", state.sms, "outside [0, smsc]"));
        }
        if !(state.gw >= 0.0 && state.gw.is_finite()) {
            return Err(Error::invalid_param("gw", state.gw, "must be finite and >= 0"));
        }
        Ok(state)
    }

    fn step(&self, state: &SimhydState, precip: f64, pet: f64) -> (SimhydState, DailyFluxes) {
        let interception = precip.min(self.insc).min(pet);
        let throughfall = precip - interception;

        let wetness = (state.sms / self.smsc).clamp(0.0, 1.0);
        let capacity = self.coeff * (-self.sq * wetness).exp();
        let infiltration_excess = (throughfall - capacity).max(0.0);
        let infiltration = throughfall - infiltration_excess;

        let interflow = self.sub * wetness * infiltration;
        let recharge = self.crak * wetness * (infiltration - interflow);
        let to_soil = infiltration - interflow - recharge;

        let mut sms = state.sms + to_soil;
        let soil_et = (10.0 * wetness)
            .min(pet - interception)
            .min(sms)
            .max(0.0);
        sms -= soil_et;

        let mut gw = state.gw + recharge;
        if sms > self.smsc {
            gw += sms - self.smsc;
            sms = self.smsc;
        }
        let baseflow = self.k * gw;
        gw -= baseflow;

        let fluxes = DailyFluxes::new(
            infiltration_excess,
            interflow,
            baseflow,
            interception + soil_et,
            0.0,
        );
        (SimhydState { sms, gw }, fluxes)
    }
}
