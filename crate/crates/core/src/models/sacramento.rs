//! SACRAMENTO soil moisture accounting, daily step.
//!
//! The catchment is split into three areas:
//!
//! * permanently impervious (`pctim`): all rain runs off directly,
//! * additional impervious (`adimp`): a single tension store `adimc` of
//!   capacity `uztwm + lztwm` that sheds direct runoff as it saturates,
//! * pervious (the rest): upper-zone tension/free stores over three
//!   lower-zone stores (tension, supplemental free, primary free).
//!
//! Each area conserves mass on its own, so total storage is the
//! area-weighted sum of the stores. The inner loop splits the day into
//! `1 + floor(0.2 * (uzfwc + excess))` increments as in the classic code.
//!
//! Runoff fluxes and their response modes:
//!
//! | flux | source | mode |
//! |------|--------|------|
//! | 1 | impervious runoff | intensity |
//! | 2 | ADIMP direct runoff | wetness |
//! | 3 | surface runoff from full upper free water | intensity |
//! | 4 | interflow | wetness |
//! | 5 | primary + supplemental baseflow, net of side loss | slow |

use serde::{Deserialize, Serialize};

use super::{DailyFluxes, ParameterVector, RunoffModel};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SacramentoParams {
    pub uztwm: f64,
    pub uzfwm: f64,
    pub lztwm: f64,
    pub lzfsm: f64,
    pub lzfpm: f64,
    pub uzk: f64,
    pub lzsk: f64,
    pub lzpk: f64,
    pub zperc: f64,
    pub rexp: f64,
    pub pfree: f64,
    pub pctim: f64,
    pub adimp: f64,
    pub side: f64,
    pub rserv: f64,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct SacramentoState {
    pub uztwc: f64,
    pub uzfwc: f64,
    pub lztwc: f64,
    pub lzfsc: f64,
    pub lzfpc: f64,
    pub adimc: f64,
}

/// Per-step breakdown of the five runoff fluxes, catchment-area weighted.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct SacramentoRunoff {
    pub impervious: f64,
    pub direct: f64,
    pub surface: f64,
    pub interflow: f64,
    pub baseflow: f64,
    pub side_loss: f64,
}

impl ParameterVector for SacramentoParams {
    const NAMES: &'static [&'static str] = &[
        "uztwm", "uzfwm", "lztwm", "lzfsm", "lzfpm", "uzk", "lzsk", "lzpk", "zperc", "rexp",
        "pfree", "pctim", "adimp", "side", "rserv",
    ];

    fn from_values(values: &[f64]) -> Result<Self> {
        let v = super::expect_len(values, Self::NAMES)?;
        let p = SacramentoParams {
            uztwm: v[0],
            uzfwm: v[1],
            lztwm: v[2],
            lzfsm: v[3],
            lzfpm: v[4],
            uzk: v[5],
            lzsk: v[6],
            lzpk: v[7],
            zperc: v[8],
            rexp: v[9],
            pfree: v[10],
            pctim: v[11],
            adimp: v[12],
            side: v[13],
            rserv: v[14],
        };
        p.validate()?;
        Ok(p)
    }

    fn to_values(&self) -> Vec<f64> {
        vec![
            self.uztwm, self.uzfwm, self.lztwm, self.lzfsm, self.lzfpm, self.uzk, self.lzsk,
            self.lzpk, self.zperc, self.rexp, self.pfree, self.pctim, self.adimp, self.side,
            self.rserv,
        ]
    }
}

impl SacramentoParams {
    pub fn validate(&self) -> Result<()> {
        for (name, value) in Self::NAMES.iter().zip(self.to_values()) {
            if !value.is_finite() || value < 0.0 {
                return Err(Error::invalid_param(name, value, "must be finite and >= 0"));
            }
        }
        for (name, value) in [
            ("uztwm", self.uztwm),
            ("uzfwm", self.uzfwm),
            ("lztwm", self.lztwm),
            ("lzfsm", self.lzfsm),
            ("lzfpm", self.lzfpm),
            ("rexp", self.rexp),
        ] {
            if value <= 0.0 {
                return Err(Error::invalid_param(name, value, "must be > 0"));
            }
        }
        for (name, value) in [("uzk", self.uzk), ("lzsk", self.lzsk), ("lzpk", self.lzpk)] {
            if value <= 0.0 || value > 1.0 {
                return Err(Error::invalid_param(name, value, "must lie in (0, 1]"));
            }
        }
        for (name, value) in [
            ("pfree", self.pfree),
            ("pctim", self.pctim),
            ("adimp", self.adimp),
            ("rserv", self.rserv),
        ] {
            if value > 1.0 {
                return Err(Error::invalid_param(name, value, "must lie in [0, 1]"));
            }
        }
        if self.pctim + self.adimp > 1.0 {
            return Err(Error::invalid_param(
                "adimp",
                self.adimp,
                "pctim + adimp must not exceed 1",
            ));
        }
        Ok(())
    }

    fn pervious_fraction(&self) -> f64 {
        (1.0 - self.pctim - self.adimp).max(0.0)
    }

    fn lower_capacity(&self) -> f64 {
        self.lztwm + self.lzfpm + self.lzfsm
    }

    /// One day with the five fluxes reported separately.
    pub fn step_detailed(
        &self,
        state: &SacramentoState,
        precip: f64,
        pet: f64,
    ) -> (SacramentoState, SacramentoRunoff, f64) {
        let mut st = *state;
        let parea = self.pervious_fraction();

        // Evapotranspiration from the pervious area, upper zone first.
        let e1 = (pet * st.uztwc / self.uztwm).min(st.uztwc);
        st.uztwc -= e1;
        let mut red = pet - e1;
        let mut e2 = 0.0;
        if st.uztwc <= 0.0 && red > 0.0 {
            e2 = red.min(st.uzfwc);
            st.uzfwc -= e2;
            red -= e2;
        }
        if st.uztwc / self.uztwm < st.uzfwc / self.uzfwm {
            // Free water refills tension water until both ratios match.
            let total = st.uztwc + st.uzfwc;
            st.uztwc = self.uztwm * total / (self.uztwm + self.uzfwm);
            st.uzfwc = (total - st.uztwc).max(0.0);
        }

        let e3 = (red * st.lztwc / (self.uztwm + self.lztwm)).min(st.lztwc);
        st.lztwc -= e3;

        // Lower-zone free water tops up tension water, keeping `rserv` of
        // the free capacity out of reach of transpiration.
        let saved = self.rserv * (self.lzfpm + self.lzfsm);
        let ratlzt = st.lztwc / self.lztwm;
        let ratlz = (st.lztwc + st.lzfpc + st.lzfsc - saved) / (self.lower_capacity() - saved);
        if ratlzt < ratlz {
            let transfer = ((ratlz - ratlzt) * self.lztwm)
                .min(st.lzfsc + st.lzfpc)
                .min(self.lztwm - st.lztwc)
                .max(0.0);
            let from_supplemental = transfer.min(st.lzfsc);
            st.lzfsc -= from_supplemental;
            st.lzfpc = (st.lzfpc - (transfer - from_supplemental)).max(0.0);
            st.lztwc += transfer;
        }

        // ADIMP area evaporation.
        let e5 = (e1 + (red + e2) * (st.adimc - e1 - st.uztwc) / (self.uztwm + self.lztwm))
            .max(0.0)
            .min(st.adimc);
        st.adimc -= e5;

        // Rain fills upper tension water; the excess feeds free water.
        let excess = if precip + st.uztwc > self.uztwm {
            let x = precip + st.uztwc - self.uztwm;
            st.uztwc = self.uztwm;
            x
        } else {
            st.uztwc += precip;
            0.0
        };
        st.adimc += precip - excess;

        let ninc = ((1.0 + 0.2 * (st.uzfwc + excess)).floor() as usize).clamp(1, 10_000);
        let dinc = 1.0 / ninc as f64;
        let pinc = excess * dinc;
        let duz = 1.0 - (1.0 - self.uzk).powf(dinc);
        let dlzp = 1.0 - (1.0 - self.lzpk).powf(dinc);
        let dlzs = 1.0 - (1.0 - self.lzsk).powf(dinc);
        let adimp_capacity = self.uztwm + self.lztwm;
        let hpl = self.lzfpm / (self.lzfpm + self.lzfsm);

        let (mut sbf, mut sif, mut ssur, mut sdro, mut sadsur) = (0.0, 0.0, 0.0, 0.0, 0.0);
        for _ in 0..ninc {
            let ratio = ((st.adimc - st.uztwc) / self.lztwm).clamp(0.0, 1.0);
            let mut addro = pinc * ratio * ratio;

            let bfp = st.lzfpc * dlzp;
            st.lzfpc -= bfp;
            let bfs = st.lzfsc * dlzs;
            st.lzfsc -= bfs;
            sbf += bfp + bfs;

            // Percolation demand grows with lower-zone deficiency.
            let lower_content = st.lztwc + st.lzfpc + st.lzfsc;
            let deficiency = (1.0 - lower_content / self.lower_capacity()).max(0.0);
            let demand = self.lzfpm * dlzp + self.lzfsm * dlzs;
            let perc = (demand * st.uzfwc / self.uzfwm
                * (1.0 + self.zperc * deficiency.powf(self.rexp)))
            .min(st.uzfwc)
            .min((self.lower_capacity() - lower_content).max(0.0));
            st.uzfwc -= perc;

            let interflow = st.uzfwc * duz;
            st.uzfwc -= interflow;
            sif += interflow;

            let to_tension = perc * (1.0 - self.pfree);
            let mut to_free = if to_tension + st.lztwc <= self.lztwm {
                st.lztwc += to_tension;
                0.0
            } else {
                let spill = to_tension + st.lztwc - self.lztwm;
                st.lztwc = self.lztwm;
                spill
            };
            to_free += perc * self.pfree;
            if to_free > 0.0 {
                self.distribute_free_water(&mut st, to_free, hpl);
            }

            let mut adsur = 0.0;
            if pinc > 0.0 {
                if pinc + st.uzfwc <= self.uzfwm {
                    st.uzfwc += pinc;
                } else {
                    let sur = pinc + st.uzfwc - self.uzfwm;
                    st.uzfwc = self.uzfwm;
                    ssur += sur;
                    adsur = sur * (1.0 - addro / pinc);
                }
            }

            st.adimc += pinc - addro - adsur;
            if st.adimc > adimp_capacity {
                addro += st.adimc - adimp_capacity;
                st.adimc = adimp_capacity;
            }
            sdro += addro;
            sadsur += adsur;
        }

        let channel_baseflow = sbf / (1.0 + self.side);
        let runoff = SacramentoRunoff {
            impervious: precip * self.pctim,
            direct: sdro * self.adimp,
            surface: ssur * parea + sadsur * self.adimp,
            interflow: sif * parea,
            baseflow: channel_baseflow * parea,
            side_loss: (sbf - channel_baseflow) * parea,
        };
        let aet = (e1 + e2 + e3) * parea + e5 * self.adimp;
        (st, runoff, aet)
    }

    /// Splits percolated free water between the primary and supplemental
    /// stores, overflowing primary excess back into tension water.
    fn distribute_free_water(&self, st: &mut SacramentoState, to_free: f64, hpl: f64) {
        let ratlp = st.lzfpc / self.lzfpm;
        let ratls = st.lzfsc / self.lzfsm;
        let denom = (1.0 - ratlp) + (1.0 - ratls);
        let fracp = if denom > 0.0 {
            (hpl * 2.0 * (1.0 - ratlp) / denom).clamp(0.0, 1.0)
        } else {
            hpl
        };
        let mut to_primary = to_free * fracp;
        st.lzfsc += to_free - to_primary;
        if st.lzfsc > self.lzfsm {
            to_primary += st.lzfsc - self.lzfsm;
            st.lzfsc = self.lzfsm;
        }
        st.lzfpc += to_primary;
        if st.lzfpc > self.lzfpm {
            st.lztwc += st.lzfpc - self.lzfpm;
            st.lzfpc = self.lzfpm;
        }
        // Round-off spill from tension water back into free stores with room.
        if st.lztwc > self.lztwm {
            let mut over = st.lztwc - self.lztwm;
            st.lztwc = self.lztwm;
            let room_s = (self.lzfsm - st.lzfsc).max(0.0).min(over);
            st.lzfsc += room_s;
            over -= room_s;
            let room_p = (self.lzfpm - st.lzfpc).max(0.0).min(over);
            st.lzfpc += room_p;
            over -= room_p;
            st.lztwc += over;
        }
    }
}

impl RunoffModel for SacramentoParams {
    type State = SacramentoState;

    const STORE_NAMES: &'static [&'static str] =
        &["uztwc", "uzfwc", "lztwc", "lzfsc", "lzfpc", "adimc"];

    fn storage(&self, s: &SacramentoState) -> f64 {
        self.pervious_fraction() * (s.uztwc + s.uzfwc + s.lztwc + s.lzfsc + s.lzfpc)
            + self.adimp * s.adimc
    }

    fn store_levels(s: &SacramentoState) -> Vec<f64> {
        vec![s.uztwc, s.uzfwc, s.lztwc, s.lzfsc, s.lzfpc, s.adimc]
    }

    fn state_from_levels(&self, levels: &[f64]) -> Result<SacramentoState> {
        let v = super::expect_len(levels, Self::STORE_NAMES)?;
        let caps = [
            self.uztwm,
            self.uzfwm,
            self.lztwm,
            self.lzfsm,
            self.lzfpm,
            self.uztwm + self.lztwm,
        ];
        for ((name, value), cap) in Self::STORE_NAMES.iter().zip(v).zip(caps) {
            if !(0.0..=cap).contains(value) {
                return Err(Error::invalid_param(name, *value, format!("outside [0, {cap}]")));
            }
        }
        Ok(SacramentoState {
            uztwc: v[0],
            uzfwc: v[1],
            lztwc: v[2],
            lzfsc: v[3],
            lzfpc: v[4],
            adimc: v[5],
        })
    }

    fn step(&self, state: &SacramentoState, precip: f64, pet: f64) -> (SacramentoState, DailyFluxes) {
        let (st, r, aet) = self.step_detailed(state, precip, pet);
        let fluxes = DailyFluxes::new(
            r.impervious + r.surface,
            r.direct + r.interflow,
            r.baseflow,
            aet,
            r.side_loss,
        );
        (st, fluxes)
    }
}
