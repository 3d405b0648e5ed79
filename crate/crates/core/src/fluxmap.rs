//! Ternary flux maps of acceptable runs.
//!
//! Vertices: slow at (0, 0), wetness at (1, 0), intensity at
//! (1/2, sqrt(3)/2). A run belongs to a mode's corner triangle when that
//! mode produces strictly more than half of the simulated runoff; the
//! central triangle collects everything else.

use std::fmt;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::experiment::{AcceptabilityFilter, EvaluationRecord};
use crate::metrics::MetricId;
use crate::models::FluxFractions;

const SQRT3_2: f64 = 0.866_025_403_784_438_6;

pub const FLUXMAP_HEADER: &str = "run_id,f_intensity,f_wetness,f_slow,x,y,metric,class";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DominanceClass {
    SlowDominated,
    WetnessDominated,
    IntensityDominated,
    NoDominantMode,
}

impl DominanceClass {
    pub fn as_str(self) -> &'static str {
        match self {
            DominanceClass::SlowDominated => "slow_dominated",
            DominanceClass::WetnessDominated => "wetness_dominated",
            DominanceClass::IntensityDominated => "intensity_dominated",
            DominanceClass::NoDominantMode => "no_dominant_mode",
        }
    }
}

impl fmt::Display for DominanceClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for DominanceClass {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "slow_dominated" => Ok(DominanceClass::SlowDominated),
            "wetness_dominated" => Ok(DominanceClass::WetnessDominated),
            "intensity_dominated" => Ok(DominanceClass::IntensityDominated),
            "no_dominant_mode" => Ok(DominanceClass::NoDominantMode),
            other => Err(Error::Config(format!("unknown dominance class `{other}`"))),
        }
    }
}

pub fn classify(f: &FluxFractions) -> DominanceClass {
    if f.slow > 0.5 {
        DominanceClass::SlowDominated
    } else if f.wetness > 0.5 {
        DominanceClass::WetnessDominated
    } else if f.intensity > 0.5 {
        DominanceClass::IntensityDominated
    } else {
        DominanceClass::NoDominantMode
    }
}

pub fn ternary_coords(f: &FluxFractions) -> (f64, f64) {
    (f.wetness + 0.5 * f.intensity, SQRT3_2 * f.intensity)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FluxMapPoint {
    pub run_id: u64,
    pub fractions: FluxFractions,
    pub x: f64,
    pub y: f64,
    pub metric_value: f64,
    pub class: DominanceClass,
}

impl FluxMapPoint {
    pub fn new(run_id: u64, fractions: FluxFractions, metric_value: f64) -> Self {
        let (x, y) = ternary_coords(&fractions);
        FluxMapPoint {
            run_id,
            fractions,
            x,
            y,
            metric_value,
            class: classify(&fractions),
        }
    }
}

/// Metadata written as comment lines above the table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FluxMapHeader {
    pub metric: MetricId,
    pub hmv: f64,
    pub threshold: f64,
    pub ensemble_size: usize,
    pub seed: Option<u64>,
}

/// Points for every record the filter accepts, in record order.
pub fn points_for<'a>(
    records: impl IntoIterator<Item = &'a EvaluationRecord>,
    filter: &AcceptabilityFilter,
) -> Vec<FluxMapPoint> {
    records
        .into_iter()
        .filter(|r| filter.accepts(r))
        .filter_map(|r| {
            let f = r.fractions?;
            Some(FluxMapPoint::new(r.run_id, f, r.value(filter.metric)?))
        })
        .collect()
}

/// Writes `fluxmap.csv`. Every point must lie in `[threshold, hmv + 0.01]`.
pub fn export_fluxmap(points: &[FluxMapPoint], header: &FluxMapHeader, path: &Path) -> Result<()> {
    let upper = header.hmv + 0.01;
    if let Some(p) = points
        .iter()
        .find(|p| p.metric_value < header.threshold || p.metric_value > upper)
    {
        return Err(Error::Config(format!(
            "run {} scores {} outside [{}, {}]",
            p.run_id, p.metric_value, header.threshold, upper
        )));
    }
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut out = BufWriter::new(file);
    let mut write = |s: String| writeln!(out, "{s}").map_err(|e| Error::io(path, e));
    write(format!("# metric={}", header.metric))?;
    write(format!("# hmv={}", header.hmv))?;
    write(format!("# threshold={}", header.threshold))?;
    write(format!("# ensemble_size={}", header.ensemble_size))?;
    if let Some(seed) = header.seed {
        write(format!("# seed={seed}"))?;
    }
    write(FLUXMAP_HEADER.to_string())?;
    for p in points {
        write(format!(
            "{},{},{},{},{},{},{},{}",
            p.run_id,
            p.fractions.intensity,
            p.fractions.wetness,
            p.fractions.slow,
            p.x,
            p.y,
            p.metric_value,
            p.class
        ))?;
    }
    out.flush().map_err(|e| Error::io(path, e))
}

pub fn import_fluxmap(path: &Path) -> Result<(FluxMapHeader, Vec<FluxMapPoint>)> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut metric = None;
    let mut hmv = None;
    let mut threshold = None;
    let mut ensemble_size = None;
    let mut seed = None;
    let mut points = Vec::new();
    let mut seen_header = false;
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        let bad = |what: &str| Error::data(path, format!("{what} at line {}", i + 1));
        if let Some(meta) = line.strip_prefix("# ") {
            let (k, v) = meta.split_once('=').ok_or_else(|| bad("malformed comment"))?;
            match k {
                "metric" => metric = Some(v.parse::<MetricId>()?),
                "hmv" => hmv = Some(v.parse::<f64>().map_err(|_| bad("bad hmv"))?),
                "threshold" => threshold = Some(v.parse::<f64>().map_err(|_| bad("bad threshold"))?),
                "ensemble_size" => {
                    ensemble_size = Some(v.parse::<usize>().map_err(|_| bad("bad size"))?)
                }
                "seed" => seed = Some(v.parse::<u64>().map_err(|_| bad("bad seed"))?),
                _ => {}
            }
            continue;
        }
        if !seen_header {
            if line != FLUXMAP_HEADER {
                return Err(bad("unexpected header"));
            }
            seen_header = true;
            continue;
        }
        let c: Vec<&str> = line.split(',').collect();
        if c.len() != 8 {
            return Err(bad("wrong column count"));
        }
        let num = |s: &str| s.parse::<f64>().map_err(|_| bad("non-numeric cell"));
        let fractions = FluxFractions::new(num(c[1])?, num(c[2])?, num(c[3])?)
            .map_err(|_| bad("invalid fractions"))?;
        points.push(FluxMapPoint {
            run_id: c[0].parse().map_err(|_| bad("bad run_id"))?,
            fractions,
            x: num(c[4])?,
            y: num(c[5])?,
            metric_value: num(c[6])?,
            class: c[7].parse()?,
        });
    }
    let missing = |k: &str| Error::data(path, format!("missing `# {k}=` line"));
    Ok((
        FluxMapHeader {
            metric: metric.ok_or_else(|| missing("metric"))?,
            hmv: hmv.ok_or_else(|| missing("hmv"))?,
            threshold: threshold.ok_or_else(|| missing("threshold"))?,
            ensemble_size: ensemble_size.ok_or_else(|| missing("ensemble_size"))?,
            seed,
        },
        points,
    ))
}
