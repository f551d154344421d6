//! The parametric what-if engine: compose the fitted flip model with
//! scenario parameters to produce the indicator `g(beta, t)`, its
//! increment `delta_g = epsilon * beta`, and beta sweeps.
//!
//! `k` is the share of start-ups surviving without technology parks,
//! `beta` the additional surviving share attributable to them (so
//! `beta <= 1 - k`), `d` the SME share of total turnover, `n0` the
//! observed surviving-SME count, `s1sse` the average annual revenue of
//! one SME, and `alpha` an optional multiplier on that revenue capturing
//! park-driven innovation gains (default 1, which reproduces the plain
//! survival-only composition).

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::dataio::SmeRecord;
use crate::error::{Error, Result};
use crate::regress::PolyModel;

/// Validated scenario parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScenarioParams {
    pub k: f64,
    pub beta: f64,
    pub d: f64,
    pub n0: u64,
    pub s1sse: f64,
    pub alpha: f64,
}

impl ScenarioParams {
    pub fn new(k: f64, beta: f64, d: f64, n0: u64, s1sse: f64, alpha: f64) -> Result<Self> {
        validate_k(k)?;
        validate_beta(k, beta)?;
        if !(0.0..=1.0).contains(&d) {
            return Err(Error::DOutOfRange { d });
        }
        if n0 == 0 {
            return Err(Error::NonPositiveN0);
        }
        if !(s1sse > 0.0) || !s1sse.is_finite() {
            return Err(Error::NonPositiveAar { s1sse });
        }
        if !(alpha >= 1.0) || !alpha.is_finite() {
            return Err(Error::AlphaOutOfRange { alpha });
        }
        Ok(ScenarioParams {
            k,
            beta,
            d,
            n0,
            s1sse,
            alpha,
        })
    }

    /// The same scenario at a different uplift and average revenue.
    pub fn with(&self, beta: f64, s1sse: f64) -> Result<Self> {
        ScenarioParams::new(self.k, beta, self.d, self.n0, s1sse, self.alpha)
    }
}

fn validate_k(k: f64) -> Result<()> {
    if !(k > 0.0 && k <= 1.0) {
        return Err(Error::KOutOfRange { k });
    }
    Ok(())
}

fn validate_beta(k: f64, beta: f64) -> Result<()> {
    let max = 1.0 - k;
    if !(beta >= 0.0 && beta <= max) {
        return Err(Error::BetaOutOfRange { beta, max });
    }
    Ok(())
}

/// Potential SME count when every start-up forms inside a park
/// environment: `n0 * (k + beta) / k`.
///
/// The no-uplift and total-survival cases are computed through their
/// algebraic simplifications so the identities `beta = 0 -> n0` and
/// `beta = 1 - k -> n0 / k` hold exactly in floating point.
pub fn potential_count(n0: f64, k: f64, beta: f64) -> Result<f64> {
    validate_k(k)?;
    validate_beta(k, beta)?;
    if beta == 0.0 {
        Ok(n0)
    } else if k + beta == 1.0 {
        Ok(n0 / k)
    } else {
        Ok(n0 * ((k + beta) / k))
    }
}

/// Turnover of all non-SME enterprises: `(1 - d) * S`.
pub fn other_turnover(total: f64, d: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&d) {
        return Err(Error::DOutOfRange { d });
    }
    Ok((1.0 - d) * total)
}

/// Parametric SME turnover: `alpha * s1sse * n0 * (k + beta) / k`.
/// With `alpha = 1` this is the plain survival-scaled revenue product.
pub fn sme_turnover_param(s1sse: f64, n0: f64, k: f64, beta: f64, alpha: f64) -> Result<f64> {
    if !(alpha >= 1.0) {
        return Err(Error::AlphaOutOfRange { alpha });
    }
    let count = potential_count(n0, k, beta)?;
    Ok(alpha * s1sse * count)
}

/// The indicator at one year: the flip model evaluated on the recomposed
/// turnover `(1 - d) * S(t) + alpha * s1sse * n0 * (k + beta) / k`.
pub fn indicator(fmi: &PolyModel, total_turnover: f64, scenario: &ScenarioParams) -> Result<f64> {
    require_linear(fmi)?;
    let other = other_turnover(total_turnover, scenario.d)?;
    let sme = sme_turnover_param(
        scenario.s1sse,
        scenario.n0 as f64,
        scenario.k,
        scenario.beta,
        scenario.alpha,
    )?;
    Ok(fmi.predict(other + sme))
}

/// The sensitivity `epsilon` of the indicator per unit of uplift, and the
/// increment `delta_g = epsilon * beta` for the scenario's beta.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Increment {
    pub epsilon: f64,
    pub delta_g: f64,
}

/// `epsilon = b1 * alpha * s1sse * n0 / k`, `delta_g = epsilon * beta`.
pub fn increment(fmi: &PolyModel, scenario: &ScenarioParams) -> Result<Increment> {
    require_linear(fmi)?;
    validate_k(scenario.k)?;
    validate_beta(scenario.k, scenario.beta)?;
    let slope = fmi.coefficients[1];
    let epsilon = slope * scenario.alpha * scenario.s1sse * scenario.n0 as f64 / scenario.k;
    Ok(Increment {
        epsilon,
        delta_g: epsilon * scenario.beta,
    })
}

fn require_linear(fmi: &PolyModel) -> Result<()> {
    if fmi.degree() != 1 {
        return Err(Error::NotDegreeOne { got: fmi.degree() });
    }
    Ok(())
}

/// One sweep year: observed total turnover plus the average revenue to
/// use for it. `aar_from_year` records when the revenue was carried
/// forward from an earlier year because this year had none.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepYear {
    pub year: i32,
    pub total_turnover: f64,
    pub s1sse: f64,
    pub aar_from_year: Option<i32>,
}

/// Scenario values echoed into the report.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScenarioEcho {
    pub k: f64,
    pub d: f64,
    pub n0: u64,
    pub s1sse: f64,
    pub alpha: f64,
}

/// One `(beta, year)` evaluation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PotentialRow {
    pub beta: f64,
    pub year: i32,
    pub g: f64,
    pub delta_g: f64,
    /// Sensitivity per unit beta at this year's average revenue.
    pub epsilon: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub aar_from_year: Option<i32>,
}

/// How far the observed SME turnover share sits from the parametric
/// baseline `s1sse * n0` at one year; reported rather than reconciled.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct YearDiagnostic {
    pub year: i32,
    /// `|d * S(t) - s1sse(t) * n0|`
    pub baseline_gap: f64,
}

/// The sweep output. `epsilon` at the top level is the scenario-level
/// sensitivity (computed from the scenario's own `s1sse`); each row also
/// carries the per-year value, and the two coincide whenever a single
/// year is swept or the average revenue is constant.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PotentialReport {
    pub base_year: i32,
    pub epsilon: f64,
    pub scenario: ScenarioEcho,
    pub rows: Vec<PotentialRow>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub diagnostics: Vec<YearDiagnostic>,
}

/// Evaluate the indicator and its increment over every `(beta, year)`
/// pair. Rows come out ordered by `(beta, year)`; every beta must lie in
/// `[0, 1 - k]` or the whole sweep is rejected before any evaluation.
pub fn beta_sweep(
    fmi: &PolyModel,
    template: &ScenarioParams,
    betas: &[f64],
    years: &[SweepYear],
    base_year: i32,
) -> Result<PotentialReport> {
    require_linear(fmi)?;
    for &beta in betas {
        validate_beta(template.k, beta)?;
    }

    let mut sorted_betas = betas.to_vec();
    sorted_betas.sort_by(f64::total_cmp);
    let mut sorted_years = years.to_vec();
    sorted_years.sort_by_key(|y| y.year);

    let mut rows = Vec::with_capacity(sorted_betas.len() * sorted_years.len());
    for &beta in &sorted_betas {
        for sweep_year in &sorted_years {
            let params = template.with(beta, sweep_year.s1sse)?;
            let g = indicator(fmi, sweep_year.total_turnover, &params)?;
            let inc = increment(fmi, &params)?;
            rows.push(PotentialRow {
                beta,
                year: sweep_year.year,
                g,
                delta_g: inc.delta_g,
                epsilon: inc.epsilon,
                aar_from_year: sweep_year.aar_from_year,
            });
        }
    }

    let diagnostics = sorted_years
        .iter()
        .map(|y| YearDiagnostic {
            year: y.year,
            baseline_gap: (template.d * y.total_turnover - y.s1sse * template.n0 as f64).abs(),
        })
        .collect();

    Ok(PotentialReport {
        base_year,
        epsilon: increment(fmi, template)?.epsilon,
        scenario: ScenarioEcho {
            k: template.k,
            d: template.d,
            n0: template.n0,
            s1sse: template.s1sse,
            alpha: template.alpha,
        },
        rows,
        diagnostics,
    })
}

/// Build the sweep years from an SME series (already deflated if that
/// was requested) and the per-year AAR map. A year missing from the AAR
/// map borrows the nearest prior year's value and records where it came
/// from; with an override every year uses that value unflagged.
pub fn sweep_years_from_records(
    records: &[SmeRecord],
    aar_series: &BTreeMap<i32, f64>,
    s1sse_override: Option<f64>,
) -> Result<Vec<SweepYear>> {
    let mut sorted: Vec<&SmeRecord> = records.iter().collect();
    sorted.sort_by_key(|r| r.year);

    let mut years = Vec::with_capacity(sorted.len());
    for record in sorted {
        let (s1sse, aar_from_year) = match s1sse_override {
            Some(value) => (value, None),
            None => match aar_series.get(&record.year) {
                Some(&value) => (value, None),
                None => {
                    let prior = aar_series
                        .range(..record.year)
                        .next_back()
                        .map(|(&y, &v)| (y, v));
                    match prior {
                        Some((year, value)) => (value, Some(year)),
                        None => return Err(Error::ZeroIncludedCount),
                    }
                }
            },
        };
        years.push(SweepYear {
            year: record.year,
            total_turnover: record.total_turnover,
            s1sse,
            aar_from_year,
        });
    }
    Ok(years)
}
