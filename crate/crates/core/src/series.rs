//! Daily series container, summary statistics and CSV ingestion.
//!
//! Standard deviations use the population convention (divide by `n`)
//! everywhere in the crate, including the KGE variability term and the
//! moment targets of the corruption harness.

use std::fs::File;
use std::io::Write;
use std::path::Path;

use chrono::{Duration, NaiveDate};

use crate::error::{Error, Result};

pub const DATE_COLUMN: &str = "date";
pub const PRECIP_COLUMN: &str = "precip_mm";
pub const PET_COLUMN: &str = "pet_mm";
pub const FLOW_COLUMN: &str = "flow_mm";

/// Anchor used when a series is built from bare values.
pub fn default_start() -> NaiveDate {
    NaiveDate::from_ymd_opt(2000, 1, 1).expect("valid date")
}

/// A daily series in mm/day anchored at `start`.
///
/// Values are finite; negative values are allowed here because corrupted
/// series may contain them. Ingestion enforces non-negativity.
#[derive(Debug, Clone, PartialEq)]
pub struct Series {
    start: NaiveDate,
    values: Vec<f64>,
}

impl Series {
    pub fn new(start: NaiveDate, values: Vec<f64>) -> Result<Self> {
        if values.len() < 2 {
            return Err(Error::TooShort {
                min: 2,
                got: values.len(),
            });
        }
        if let Some(index) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite { index });
        }
        Ok(Series { start, values })
    }

    pub fn from_values(values: Vec<f64>) -> Result<Self> {
        Series::new(default_start(), values)
    }

    pub fn start_date(&self) -> NaiveDate {
        self.start
    }

    pub fn date_at(&self, index: usize) -> NaiveDate {
        self.start + Duration::days(index as i64)
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn stats(&self) -> SummaryStats {
        summary_stats(&self.values).expect("series holds at least two values")
    }

    /// Sub-series starting at `offset`, keeping the calendar anchor aligned.
    pub fn window(&self, offset: usize) -> Result<Series> {
        let tail = self.values.get(offset..).unwrap_or(&[]).to_vec();
        Series::new(self.date_at(offset), tail)
    }

    pub(crate) fn ensure_non_negative(&self, column: &str) -> Result<()> {
        match self.values.iter().position(|v| *v < 0.0) {
            Some(i) => Err(Error::NegativeValue {
                column: column.to_string(),
                row: i + 1,
                value: self.values[i],
            }),
            None => Ok(()),
        }
    }
}

impl AsRef<[f64]> for Series {
    fn as_ref(&self) -> &[f64] {
        &self.values
    }
}

/// Precipitation and potential evapotranspiration on a shared calendar.
#[derive(Debug, Clone, PartialEq)]
pub struct Forcing {
    precip: Series,
    pet: Series,
}

impl Forcing {
    pub fn new(precip: Series, pet: Series) -> Result<Self> {
        if precip.len() != pet.len() {
            return Err(Error::LengthMismatch {
                left: precip.len(),
                right: pet.len(),
            });
        }
        if precip.start_date() != pet.start_date() {
            return Err(Error::Config(format!(
                "precipitation starts {} but PET starts {}",
                precip.start_date(),
                pet.start_date()
            )));
        }
        precip.ensure_non_negative(PRECIP_COLUMN)?;
        pet.ensure_non_negative(PET_COLUMN)?;
        Ok(Forcing { precip, pet })
    }

    pub fn precip(&self) -> &Series {
        &self.precip
    }

    pub fn pet(&self) -> &Series {
        &self.pet
    }

    pub fn len(&self) -> usize {
        self.precip.len()
    }

    pub fn is_empty(&self) -> bool {
        self.precip.is_empty()
    }

    pub fn start_date(&self) -> NaiveDate {
        self.precip.start_date()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SummaryStats {
    pub mean: f64,
    pub std: f64,
}

impl SummaryStats {
    /// Coefficient of variation; undefined for a zero mean.
    pub fn cv(&self) -> Result<f64> {
        if self.mean == 0.0 {
            return Err(Error::ZeroMean { what: "series" });
        }
        Ok(self.std / self.mean)
    }
}

pub fn mean(values: &[f64]) -> f64 {
    values.iter().sum::<f64>() / values.len() as f64
}

pub fn summary_stats(values: &[f64]) -> Result<SummaryStats> {
    if values.len() < 2 {
        return Err(Error::TooShort {
            min: 2,
            got: values.len(),
        });
    }
    let m = mean(values);
    let var = values.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / values.len() as f64;
    Ok(SummaryStats {
        mean: m,
        std: var.sqrt(),
    })
}

/// Pearson correlation with population covariance.
pub fn pearson_cc(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::LengthMismatch {
            left: a.len(),
            right: b.len(),
        });
    }
    if a.len() < 2 {
        return Err(Error::TooShort {
            min: 2,
            got: a.len(),
        });
    }
    let ma = mean(a);
    let mb = mean(b);
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        let (da, db) = (x - ma, y - mb);
        sab += da * db;
        saa += da * da;
        sbb += db * db;
    }
    if saa == 0.0 {
        return Err(Error::ZeroVariance { what: "first series" });
    }
    if sbb == 0.0 {
        return Err(Error::ZeroVariance {
            what: "second series",
        });
    }
    // sqrt(saa * sbb) is exact when a == b, which keeps self-correlation at 1.
    Ok((sab / (saa * sbb).sqrt()).clamp(-1.0, 1.0))
}

/// A parsed daily table: the date anchor plus the requested columns.
#[derive(Debug, Clone)]
pub struct DailyTable {
    pub start: NaiveDate,
    pub columns: Vec<(String, Vec<f64>)>,
}

impl DailyTable {
    pub fn column(&self, name: &str) -> Option<&[f64]> {
        self.columns
            .iter()
            .find(|(n, _)| n == name)
            .map(|(_, v)| v.as_slice())
    }
}

/// Reads `date` plus each named column from a daily CSV file.
///
/// Columns listed in `optional` are skipped when absent from the header.
pub fn read_daily_table(path: &Path, required: &[&str], optional: &[&str]) -> Result<DailyTable> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(file);
    let headers = reader.headers()?.clone();
    let position = |name: &str| headers.iter().position(|h| h == name);

    let date_idx =
        position(DATE_COLUMN).ok_or_else(|| Error::data(path, "missing column `date`"))?;
    let mut wanted: Vec<(String, usize)> = Vec::new();
    for name in required {
        let idx = position(name)
            .ok_or_else(|| Error::data(path, format!("missing column `{name}`")))?;
        wanted.push((name.to_string(), idx));
    }
    for name in optional {
        if let Some(idx) = position(name) {
            wanted.push((name.to_string(), idx));
        }
    }

    let mut start = None;
    let mut prev: Option<NaiveDate> = None;
    let mut columns: Vec<Vec<f64>> = vec![Vec::new(); wanted.len()];
    for (i, record) in reader.records().enumerate() {
        let row = i + 1;
        let record = record?;
        let raw_date = record.get(date_idx).unwrap_or("");
        let date = NaiveDate::parse_from_str(raw_date, "%Y-%m-%d")
            .map_err(|_| Error::data(path, format!("invalid date `{raw_date}` at row {row}")))?;
        if let Some(p) = prev {
            if date != p + Duration::days(1) {
                return Err(Error::data(
                    path,
                    format!("date gap between {p} and {date} at row {row}"),
                ));
            }
        } else {
            start = Some(date);
        }
        prev = Some(date);
        for ((name, idx), out) in wanted.iter().zip(columns.iter_mut()) {
            let cell = record.get(*idx).unwrap_or("");
            if cell.is_empty() {
                return Err(Error::data(
                    path,
                    format!("missing value in column `{name}` at row {row}"),
                ));
            }
            let value: f64 = cell.parse().map_err(|_| {
                Error::data(
                    path,
                    format!("non-numeric cell at row {row} in column `{name}`: `{cell}`"),
                )
            })?;
            if !value.is_finite() {
                return Err(Error::data(
                    path,
                    format!("non-finite cell at row {row} in column `{name}`"),
                ));
            }
            out.push(value);
        }
    }
    let start = start.ok_or_else(|| Error::data(path, "no data rows"))?;
    Ok(DailyTable {
        start,
        columns: wanted.into_iter().map(|(n, _)| n).zip(columns).collect(),
    })
}

fn check_non_negative(path: &Path, column: &str, values: &[f64]) -> Result<()> {
    if let Some(i) = values.iter().position(|v| *v < 0.0) {
        return Err(Error::data(
            path,
            format!("negative value {} at row {} in column `{column}`", values[i], i + 1),
        ));
    }
    Ok(())
}

/// Loads one non-negative column (observed flow or forcing).
pub fn load_series(path: &Path, column: &str) -> Result<Series> {
    let series = load_series_signed(path, column)?;
    check_non_negative(path, column, series.values())?;
    Ok(series)
}

/// Loads one column without the sign constraint.
pub fn load_series_signed(path: &Path, column: &str) -> Result<Series> {
    let mut table = read_daily_table(path, &[column], &[])?;
    let (_, values) = table.columns.remove(0);
    Series::new(table.start, values).map_err(|e| Error::data(path, e.to_string()))
}

/// Loads forcing and, when present, observed flow from a
/// `date,precip_mm,pet_mm[,flow_mm]` file.
pub fn load_forcing(path: &Path) -> Result<(Forcing, Option<Series>)> {
    let table = read_daily_table(path, &[PRECIP_COLUMN, PET_COLUMN], &[FLOW_COLUMN])?;
    let build = |name: &str| -> Result<Option<Series>> {
        match table.column(name) {
            Some(v) => {
                check_non_negative(path, name, v)?;
                Series::new(table.start, v.to_vec())
                    .map(Some)
                    .map_err(|e| Error::data(path, e.to_string()))
            }
            None => Ok(None),
        }
    };
    let precip = build(PRECIP_COLUMN)?.expect("required column");
    let pet = build(PET_COLUMN)?.expect("required column");
    let flow = build(FLOW_COLUMN)?;
    Ok((Forcing::new(precip, pet)?, flow))
}

/// Writes `date,<column>` rows using shortest round-trip float formatting.
pub fn write_series(path: &Path, column: &str, series: &Series) -> Result<()> {
    let mut out = String::with_capacity(series.len() * 24);
    out.push_str(DATE_COLUMN);
    out.push(',');
    out.push_str(column);
    out.push('\n');
    for (i, v) in series.values().iter().enumerate() {
        out.push_str(&format!("{},{}\n", series.date_at(i), v));
    }
    let mut file = File::create(path).map_err(|e| Error::io(path, e))?;
    file.write_all(out.as_bytes()).map_err(|e| Error::io(path, e))
}

/// Writes a forcing file, optionally with an observed flow column.
pub fn write_forcing(path: &Path, forcing: &Forcing, flow: Option<&Series>) -> Result<()> {
    let mut out = String::with_capacity(forcing.len() * 48);
    out.push_str("date,precip_mm,pet_mm");
    if flow.is_some() {
        out.push_str(",flow_mm");
    }
    out.push('\n');
    for i in 0..forcing.len() {
        out.push_str(&format!(
            "{},{},{}",
            forcing.precip().date_at(i),
            forcing.precip().values()[i],
            forcing.pet().values()[i]
        ));
        if let Some(q) = flow {
            out.push_str(&format!(",{}", q.values()[i]));
        }
        out.push('\n');
    }
    let mut file = File::create(path).map_err(|e| Error::io(path, e))?;
    file.write_all(out.as_bytes()).map_err(|e| Error::io(path, e))
}
