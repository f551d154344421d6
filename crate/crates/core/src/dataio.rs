//! External data: macro series, SME series, and report emission.
//!
//! All series arrive as headered CSV with a decimal point and currency in
//! billions. Parsing is total: every malformed row maps to a named error,
//! never to a silent default, and parsed series come out strictly
//! year-ordered regardless of input row order.

use std::collections::BTreeSet;
use std::fmt;
use std::io::Read;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::potential::PotentialReport;

/// One year of national accounts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MacroRecord {
    pub year: i32,
    /// Nominal GDP in billions. May be blank for the base year, whose
    /// deflation never needs it.
    pub nominal_gdp: Option<f64>,
    /// Year-over-year price factor (1.085 means prices grew 8.5%).
    pub inflation: f64,
}

/// One year of SME statistics, split over the four category columns of
/// the sme CSV schema.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SmeRecord {
    pub year: i32,
    pub individual_count: u64,
    pub micro_count: u64,
    pub small_count: u64,
    pub medium_count: u64,
    pub individual_turnover: f64,
    pub micro_turnover: f64,
    pub small_turnover: f64,
    pub medium_turnover: f64,
    /// Turnover of all enterprises (not just SME), in billions.
    pub total_turnover: f64,
}

impl SmeRecord {
    pub fn count(&self, category: CategoryName) -> u64 {
        match category {
            CategoryName::Individual => self.individual_count,
            CategoryName::Micro => self.micro_count,
            CategoryName::Small => self.small_count,
            CategoryName::Medium => self.medium_count,
        }
    }

    pub fn turnover(&self, category: CategoryName) -> f64 {
        match category {
            CategoryName::Individual => self.individual_turnover,
            CategoryName::Micro => self.micro_turnover,
            CategoryName::Small => self.small_turnover,
            CategoryName::Medium => self.medium_turnover,
        }
    }

    /// Combined turnover of the four SME categories.
    pub fn sme_turnover(&self) -> f64 {
        self.individual_turnover + self.micro_turnover + self.small_turnover + self.medium_turnover
    }
}

/// The four SME categories used by Russian statistics.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CategoryName {
    Individual,
    Micro,
    Small,
    Medium,
}

impl CategoryName {
    pub const ALL: [CategoryName; 4] = [
        CategoryName::Individual,
        CategoryName::Micro,
        CategoryName::Small,
        CategoryName::Medium,
    ];
}

impl fmt::Display for CategoryName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            CategoryName::Individual => "individual",
            CategoryName::Micro => "micro",
            CategoryName::Small => "small",
            CategoryName::Medium => "medium",
        };
        f.write_str(s)
    }
}

impl FromStr for CategoryName {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "individual" => Ok(CategoryName::Individual),
            "micro" => Ok(CategoryName::Micro),
            "small" => Ok(CategoryName::Small),
            "medium" => Ok(CategoryName::Medium),
            other => Err(format!(
                "unknown category '{other}' (expected individual | micro | small | medium)"
            )),
        }
    }
}

/// Definition of one SME category: headcount ceiling and revenue band.
///
/// These are configuration, not hardcoded constants — other countries
/// partition small business differently. Revenue bounds are in billions,
/// like every other currency figure in this crate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SmeCategory {
    pub name: CategoryName,
    pub max_employees: u32,
    pub revenue_min: f64,
    pub revenue_max: Option<f64>,
}

/// The default Russian category scheme: individual entrepreneurs up to 5
/// employees; micro up to 16 employees and 0.06 bn revenue; small 16-100
/// employees or 0.06-0.4 bn; medium 100-500 employees or above 0.4 bn.
pub fn default_categories() -> Vec<SmeCategory> {
    vec![
        SmeCategory {
            name: CategoryName::Individual,
            max_employees: 5,
            revenue_min: 0.0,
            revenue_max: None,
        },
        SmeCategory {
            name: CategoryName::Micro,
            max_employees: 16,
            revenue_min: 0.0,
            revenue_max: Some(0.06),
        },
        SmeCategory {
            name: CategoryName::Small,
            max_employees: 100,
            revenue_min: 0.06,
            revenue_max: Some(0.4),
        },
        SmeCategory {
            name: CategoryName::Medium,
            max_employees: 500,
            revenue_min: 0.4,
            revenue_max: None,
        },
    ]
}

const MACRO_HEADER: [&str; 3] = ["year", "nominal_gdp", "inflation"];
const SME_HEADER: [&str; 10] = [
    "year",
    "individual_count",
    "micro_count",
    "small_count",
    "medium_count",
    "individual_turnover",
    "micro_turnover",
    "small_turnover",
    "medium_turnover",
    "total_turnover",
];

/// Parse the macro CSV (`year,nominal_gdp,inflation`).
///
/// Records come back sorted by year; duplicate years are rejected.
pub fn parse_macro_series<R: Read>(source: R) -> Result<Vec<MacroRecord>> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(source);
    check_header(&mut reader, &MACRO_HEADER)?;

    let mut records = Vec::new();
    for result in reader.records() {
        let record = result?;
        let row = record.position().map_or(0, |p| p.line() as usize);
        if record.len() != MACRO_HEADER.len() {
            return Err(Error::MalformedRow {
                row,
                column: "(row)",
                value: format!("{} fields, expected {}", record.len(), MACRO_HEADER.len()),
            });
        }
        let year: i32 = parse_field(row, "year", &record[0])?;
        let nominal_gdp = if record[1].is_empty() {
            None
        } else {
            let value: f64 = parse_field(row, "nominal_gdp", &record[1])?;
            if !value.is_finite() || value <= 0.0 {
                return Err(Error::MalformedRow {
                    row,
                    column: "nominal_gdp",
                    value: record[1].to_string(),
                });
            }
            Some(value)
        };
        let inflation: f64 = parse_field(row, "inflation", &record[2])?;
        if !inflation.is_finite() {
            return Err(Error::MalformedRow {
                row,
                column: "inflation",
                value: record[2].to_string(),
            });
        }
        if inflation <= 0.0 {
            return Err(Error::NonPositiveInflation {
                row,
                value: inflation,
            });
        }
        records.push(MacroRecord {
            year,
            nominal_gdp,
            inflation,
        });
    }
    sort_and_check_years(&mut records, |r| r.year)?;
    Ok(records)
}

/// Parse the sme CSV (see [`SME_HEADER`] for the column order).
pub fn parse_sme_series<R: Read>(source: R) -> Result<Vec<SmeRecord>> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(source);
    check_header(&mut reader, &SME_HEADER)?;

    let mut records = Vec::new();
    for result in reader.records() {
        let record = result?;
        let row = record.position().map_or(0, |p| p.line() as usize);
        if record.len() != SME_HEADER.len() {
            return Err(Error::MalformedRow {
                row,
                column: "(row)",
                value: format!("{} fields, expected {}", record.len(), SME_HEADER.len()),
            });
        }
        let year: i32 = parse_field(row, "year", &record[0])?;
        let counts: [u64; 4] = [
            parse_field(row, "individual_count", &record[1])?,
            parse_field(row, "micro_count", &record[2])?,
            parse_field(row, "small_count", &record[3])?,
            parse_field(row, "medium_count", &record[4])?,
        ];
        let mut turnovers = [0.0f64; 4];
        for (slot, idx) in turnovers.iter_mut().zip(5..9) {
            let column = SME_HEADER[idx];
            let value: f64 = parse_field(row, column, &record[idx])?;
            if !value.is_finite() || value < 0.0 {
                return Err(Error::MalformedRow {
                    row,
                    column,
                    value: record[idx].to_string(),
                });
            }
            *slot = value;
        }
        let total_turnover: f64 = parse_field(row, "total_turnover", &record[9])?;
        if !total_turnover.is_finite() || total_turnover <= 0.0 {
            return Err(Error::MalformedRow {
                row,
                column: "total_turnover",
                value: record[9].to_string(),
            });
        }
        let sum: f64 = turnovers.iter().sum();
        // Slack of 1e-9 relative absorbs decimal-to-binary dust when the
        // categories sum exactly to the total in the source file.
        if sum > total_turnover && sum - total_turnover > 1e-9 * total_turnover.max(1.0) {
            return Err(Error::CategoryExceedsTotal {
                row,
                sum,
                total: total_turnover,
            });
        }
        records.push(SmeRecord {
            year,
            individual_count: counts[0],
            micro_count: counts[1],
            small_count: counts[2],
            medium_count: counts[3],
            individual_turnover: turnovers[0],
            micro_turnover: turnovers[1],
            small_turnover: turnovers[2],
            medium_turnover: turnovers[3],
            total_turnover,
        });
    }
    sort_and_check_years(&mut records, |r| r.year)?;
    Ok(records)
}

/// Output format for the potential report.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Json,
    Csv,
}

/// Serialize a report. JSON is the full-fidelity form and round-trips
/// bit-exactly through [`parse_report_json`]; CSV is the plot-ready rows
/// table.
pub fn emit_report(report: &PotentialReport, format: ReportFormat) -> String {
    match format {
        ReportFormat::Json => {
            let mut s = serde_json::to_string_pretty(report).expect("report serializes");
            s.push('\n');
            s
        }
        ReportFormat::Csv => {
            let mut s = String::from("beta,year,g,delta_g,epsilon\n");
            for row in &report.rows {
                s.push_str(&format!(
                    "{},{},{},{},{}\n",
                    row.beta, row.year, row.g, row.delta_g, row.epsilon
                ));
            }
            s
        }
    }
}

/// Parse a JSON report emitted by [`emit_report`].
pub fn parse_report_json(source: &str) -> Result<PotentialReport> {
    Ok(serde_json::from_str(source)?)
}

/// Serialize a macro series back to its CSV schema.
pub fn emit_macro_csv(series: &[MacroRecord]) -> String {
    let mut s = format!("{}\n", MACRO_HEADER.join(","));
    for r in series {
        let nominal = r.nominal_gdp.map_or(String::new(), |v| v.to_string());
        s.push_str(&format!("{},{},{}\n", r.year, nominal, r.inflation));
    }
    s
}

/// Serialize an SME series back to its CSV schema.
pub fn emit_sme_csv(series: &[SmeRecord]) -> String {
    let mut s = format!("{}\n", SME_HEADER.join(","));
    for r in series {
        s.push_str(&format!(
            "{},{},{},{},{},{},{},{},{},{}\n",
            r.year,
            r.individual_count,
            r.micro_count,
            r.small_count,
            r.medium_count,
            r.individual_turnover,
            r.micro_turnover,
            r.small_turnover,
            r.medium_turnover,
            r.total_turnover
        ));
    }
    s
}

/// Parse an exclusion list like `medium,small` into category names.
pub fn parse_category_set(names: &[String]) -> std::result::Result<BTreeSet<CategoryName>, String> {
    names.iter().map(|n| n.parse()).collect()
}

fn check_header<R: Read>(reader: &mut csv::Reader<R>, expected: &[&str]) -> Result<()> {
    let headers = reader.headers()?;
    let got: Vec<&str> = headers.iter().map(str::trim).collect();
    if got != expected {
        return Err(Error::BadHeader {
            expected: expected.join(","),
            got: got.join(","),
        });
    }
    Ok(())
}

fn parse_field<T: FromStr>(row: usize, column: &'static str, raw: &str) -> Result<T> {
    raw.parse().map_err(|_| Error::MalformedRow {
        row,
        column,
        value: raw.to_string(),
    })
}

fn sort_and_check_years<T, F: Fn(&T) -> i32>(records: &mut [T], year_of: F) -> Result<()> {
    records.sort_by_key(&year_of);
    for pair in records.windows(2) {
        if year_of(&pair[0]) == year_of(&pair[1]) {
            return Err(Error::DuplicateYear {
                year: year_of(&pair[0]),
            });
        }
    }
    Ok(())
}
