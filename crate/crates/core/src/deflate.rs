//! Conversion of nominal series to real series relative to a base year.
//!
//! The cumulative price factor follows the backward recurrence
//! `T(base) = 1`, `T(y) = inflation(y) * T(y+1)` for consecutive years
//! before the base, where `inflation(y)` is the year-over-year price
//! factor recorded for year `y`. The deflator is `1 / T(y)` and the real
//! value is `nominal(y) * T(y)`. Everything is computed at full floating
//! precision; rounding happens only at presentation.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::dataio::{MacroRecord, SmeRecord};
use crate::error::{Error, Result};

/// One year of a deflated series.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeflatedYear {
    pub year: i32,
    pub nominal: Option<f64>,
    pub inflation: f64,
    /// Cumulative price factor up to the base year.
    pub total_inflation: f64,
    pub deflator: f64,
    /// Real value in base-year prices; absent only for a base year whose
    /// nominal value was not recorded.
    pub real: Option<f64>,
}

/// A nominal series converted to base-year prices, sorted by year.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeflatedSeries {
    pub base_year: i32,
    pub years: Vec<DeflatedYear>,
}

impl DeflatedSeries {
    /// Real values keyed by year (years without a real value are omitted).
    pub fn real_map(&self) -> BTreeMap<i32, f64> {
        self.years
            .iter()
            .filter_map(|y| y.real.map(|r| (y.year, r)))
            .collect()
    }

    pub fn total_inflation_map(&self) -> BTreeMap<i32, f64> {
        self.years
            .iter()
            .map(|y| (y.year, y.total_inflation))
            .collect()
    }
}

/// Cumulative price factors relative to `base_year`.
///
/// The series must contain the base year, contain no year after it, and
/// be gap-free so the recurrence is well defined.
pub fn cumulative_inflation(series: &[MacroRecord], base_year: i32) -> Result<BTreeMap<i32, f64>> {
    if !series.iter().any(|r| r.year == base_year) {
        return Err(Error::MissingBaseYear { base_year });
    }
    let mut sorted: Vec<&MacroRecord> = series.iter().collect();
    sorted.sort_by_key(|r| r.year);
    if let Some(r) = sorted.iter().find(|r| r.year > base_year) {
        return Err(Error::YearBeyondBase {
            year: r.year,
            base_year,
        });
    }
    for pair in sorted.windows(2) {
        if pair[1].year != pair[0].year + 1 {
            return Err(Error::GapInYears {
                prev: pair[0].year,
                next: pair[1].year,
            });
        }
    }

    let mut totals = BTreeMap::new();
    let mut factor = 1.0;
    totals.insert(base_year, 1.0);
    for record in sorted.iter().rev() {
        if record.year == base_year {
            continue;
        }
        factor *= record.inflation;
        totals.insert(record.year, factor);
    }
    Ok(totals)
}

/// Deflate a nominal macro series to base-year prices.
///
/// Every non-base year must carry a nominal value; the base year may
/// leave it blank, in which case its real value is also blank.
pub fn deflate_series(series: &[MacroRecord], base_year: i32) -> Result<DeflatedSeries> {
    let totals = cumulative_inflation(series, base_year)?;
    let mut sorted: Vec<&MacroRecord> = series.iter().collect();
    sorted.sort_by_key(|r| r.year);

    let mut years = Vec::with_capacity(sorted.len());
    for record in sorted {
        let total_inflation = totals[&record.year];
        let real = match record.nominal_gdp {
            Some(nominal) => Some(nominal * total_inflation),
            None if record.year == base_year => None,
            None => return Err(Error::MissingNominal { year: record.year }),
        };
        years.push(DeflatedYear {
            year: record.year,
            nominal: record.nominal_gdp,
            inflation: record.inflation,
            total_inflation,
            deflator: 1.0 / total_inflation,
            real,
        });
    }
    Ok(DeflatedSeries { base_year, years })
}

/// Apply the same deflation to an arbitrary per-year value series
/// (e.g. enterprise turnover). Every year must be covered by the
/// cumulative-inflation map.
pub fn deflate_values(
    values: &BTreeMap<i32, f64>,
    total_inflation: &BTreeMap<i32, f64>,
) -> Result<BTreeMap<i32, f64>> {
    let mut out = BTreeMap::new();
    for (&year, &value) in values {
        let factor = total_inflation
            .get(&year)
            .ok_or(Error::UncoveredYear { year })?;
        out.insert(year, value * factor);
    }
    Ok(out)
}

/// Deflate every turnover column of an SME series (counts are untouched).
/// Every year must be covered by the cumulative-inflation map.
pub fn deflate_sme_records(
    records: &[SmeRecord],
    total_inflation: &BTreeMap<i32, f64>,
) -> Result<Vec<SmeRecord>> {
    records
        .iter()
        .map(|r| {
            let factor = *total_inflation
                .get(&r.year)
                .ok_or(Error::UncoveredYear { year: r.year })?;
            Ok(SmeRecord {
                year: r.year,
                individual_count: r.individual_count,
                micro_count: r.micro_count,
                small_count: r.small_count,
                medium_count: r.medium_count,
                individual_turnover: r.individual_turnover * factor,
                micro_turnover: r.micro_turnover * factor,
                small_turnover: r.small_turnover * factor,
                medium_turnover: r.medium_turnover * factor,
                total_turnover: r.total_turnover * factor,
            })
        })
        .collect()
}
