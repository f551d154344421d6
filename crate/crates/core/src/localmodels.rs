//! The four fitted local models and the average-revenue computation.
//!
//! - MID: linear trend of real GDP over time.
//! - SMEGM: quadratic trend of total SME count over time.
//! - FMI: linear regression of real GDP on total enterprise turnover.
//! - SMEFM: proportional share of SME turnover in total turnover.
//!
//! MID and SMEGM are descriptive outputs of the chain; FMI and SMEFM feed
//! the potential computation together with the per-year average annual
//! revenue (AAR) of one SME, from which medium-sized enterprises are
//! excluded by default since technology-park residents are almost never
//! medium-sized.

use std::collections::BTreeMap;
use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::dataio::{CategoryName, SmeRecord};
use crate::error::{Error, Result};
use crate::regress::{fit_poly, fit_proportional, Degree, PolyModel, ProportionalModel};

/// The default AAR exclusion set.
pub fn default_exclusions() -> BTreeSet<CategoryName> {
    BTreeSet::from([CategoryName::Medium])
}

/// All local models fitted from one pair of (macro, SME) series.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LocalModelSet {
    pub mid: PolyModel,
    pub smegm: PolyModel,
    pub fmi: PolyModel,
    pub smefm: ProportionalModel,
    /// Per-year AAR; defined only for years whose included categories
    /// have both a positive count and positive turnover.
    pub aar_series: BTreeMap<i32, f64>,
}

/// Linear trend of real GDP over time, centered on the first year.
pub fn fit_mid(real_gdp: &BTreeMap<i32, f64>) -> Result<PolyModel> {
    let (xs, ys, origin) = to_time_series(real_gdp);
    fit_poly(&xs, &ys, Degree::Linear, origin).map_err(|e| Error::fit("MID", e))
}

/// Quadratic trend of total SME count over time, centered on the first year.
pub fn fit_smegm(sme_counts: &BTreeMap<i32, f64>) -> Result<PolyModel> {
    let (xs, ys, origin) = to_time_series(sme_counts);
    fit_poly(&xs, &ys, Degree::Quadratic, origin).map_err(|e| Error::fit("SMEGM", e))
}

/// Linear regression of real GDP on total enterprise turnover, over the
/// overlapping years of the two series. Turnover needs no re-centering.
pub fn fit_fmi(
    turnover: &BTreeMap<i32, f64>,
    real_gdp: &BTreeMap<i32, f64>,
) -> Result<PolyModel> {
    let (xs, ys) = overlap(turnover, real_gdp)?;
    fit_poly(&xs, &ys, Degree::Linear, 0).map_err(|e| Error::fit("FMI", e))
}

/// Proportional share of SME turnover in total turnover, over the
/// overlapping years of the two series.
pub fn fit_smefm(
    turnover: &BTreeMap<i32, f64>,
    sme_turnover: &BTreeMap<i32, f64>,
) -> Result<ProportionalModel> {
    let (xs, ys) = overlap(turnover, sme_turnover)?;
    fit_proportional(&xs, &ys).map_err(|e| Error::fit("SMEFM", e))
}

/// Average annual revenue of one SME: included-category turnover divided
/// by included-category headcount.
pub fn compute_aar(sme: &SmeRecord, exclude: &BTreeSet<CategoryName>) -> Result<f64> {
    let mut turnover = 0.0;
    let mut count = 0u64;
    for category in CategoryName::ALL {
        if exclude.contains(&category) {
            continue;
        }
        turnover += sme.turnover(category);
        count += sme.count(category);
    }
    if count == 0 {
        return Err(Error::ZeroIncludedCount);
    }
    Ok(turnover / count as f64)
}

/// Fit all four local models on the years shared by both series, plus the
/// per-year AAR over every SME year. The shared-range restriction keeps
/// the models comparable; callers wanting a wider range for one model can
/// invoke its fitter directly.
pub fn fit_local_models(
    real_gdp: &BTreeMap<i32, f64>,
    sme: &[SmeRecord],
    exclude: &BTreeSet<CategoryName>,
) -> Result<LocalModelSet> {
    let shared_years: Vec<i32> = sme
        .iter()
        .map(|r| r.year)
        .filter(|y| real_gdp.contains_key(y))
        .collect();
    if shared_years.is_empty() {
        return Err(Error::NoYearOverlap);
    }

    let gdp: BTreeMap<i32, f64> = shared_years
        .iter()
        .map(|&y| (y, real_gdp[&y]))
        .collect();
    let counts: BTreeMap<i32, f64> = sme
        .iter()
        .filter(|r| gdp.contains_key(&r.year))
        .map(|r| (r.year, total_count(r) as f64))
        .collect();
    let turnover: BTreeMap<i32, f64> = sme
        .iter()
        .filter(|r| gdp.contains_key(&r.year))
        .map(|r| (r.year, r.total_turnover))
        .collect();
    let sme_turnover: BTreeMap<i32, f64> = sme
        .iter()
        .filter(|r| gdp.contains_key(&r.year))
        .map(|r| (r.year, r.sme_turnover()))
        .collect();

    let mid = fit_mid(&gdp)?;
    let smegm = fit_smegm(&counts)?;
    let fmi = fit_fmi(&turnover, &gdp)?;
    let smefm = fit_smefm(&turnover, &sme_turnover)?;

    let mut aar_series = BTreeMap::new();
    for record in sme {
        if let Ok(aar) = compute_aar(record, exclude) {
            if aar > 0.0 {
                aar_series.insert(record.year, aar);
            }
        }
    }

    Ok(LocalModelSet {
        mid,
        smegm,
        fmi,
        smefm,
        aar_series,
    })
}

/// Total SME count over all four categories.
pub fn total_count(record: &SmeRecord) -> u64 {
    record.individual_count + record.micro_count + record.small_count + record.medium_count
}

/// Count over the included (non-excluded) categories; the default
/// surviving-SME count `n0` for a reference year.
pub fn included_count(record: &SmeRecord, exclude: &BTreeSet<CategoryName>) -> u64 {
    CategoryName::ALL
        .iter()
        .filter(|c| !exclude.contains(c))
        .map(|&c| record.count(c))
        .sum()
}

fn to_time_series(map: &BTreeMap<i32, f64>) -> (Vec<f64>, Vec<f64>, i32) {
    let origin = map.keys().next().copied().unwrap_or(0);
    let xs: Vec<f64> = map.keys().map(|&y| f64::from(y)).collect();
    let ys: Vec<f64> = map.values().copied().collect();
    (xs, ys, origin)
}

fn overlap(
    xs_by_year: &BTreeMap<i32, f64>,
    ys_by_year: &BTreeMap<i32, f64>,
) -> Result<(Vec<f64>, Vec<f64>)> {
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for (year, &x) in xs_by_year {
        if let Some(&y) = ys_by_year.get(year) {
            xs.push(x);
            ys.push(y);
        }
    }
    if xs.is_empty() {
        return Err(Error::NoYearOverlap);
    }
    Ok((xs, ys))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::error::FitError;

    fn map(pairs: &[(i32, f64)]) -> BTreeMap<i32, f64> {
        pairs.iter().copied().collect()
    }

    #[test]
    fn mid_slope_on_published_real_gdp() {
        // Closed-form OLS slope over the three published real-GDP values:
        // 5125 / 2 = 2562.5 billions per year.
        let gdp = map(&[(2010, 55278.0), (2011, 61564.0), (2012, 60403.0)]);
        let m = fit_mid(&gdp).unwrap();
        assert!((m.coefficients[1] - 2562.5).abs() < 1e-9);
        assert_eq!(m.x_origin, 2010);
    }

    #[test]
    fn mid_constant_series_has_zero_slope() {
        let gdp = map(&[(2010, 500.0), (2011, 500.0), (2012, 500.0)]);
        let m = fit_mid(&gdp).unwrap();
        assert!(m.coefficients[1].abs() < 1e-12);
        assert_eq!(m.r_squared, 1.0);
    }

    #[test]
    fn mid_exact_line_is_perfect_fit() {
        let gdp = map(&[(2010, 100.0), (2011, 110.0), (2012, 120.0), (2013, 130.0)]);
        let m = fit_mid(&gdp).unwrap();
        assert!((m.r_squared - 1.0).abs() < 1e-12);
    }

    #[test]
    fn smegm_exact_quadratic() {
        let counts: BTreeMap<i32, f64> = (0..6)
            .map(|t| (2008 + t, 100.0 + 10.0 * f64::from(t) + f64::from(t * t)))
            .collect();
        let m = fit_smegm(&counts).unwrap();
        assert!((m.coefficients[0] - 100.0).abs() < 1e-9);
        assert!((m.coefficients[1] - 10.0).abs() < 1e-9);
        assert!((m.coefficients[2] - 1.0).abs() < 1e-9);
    }

    #[test]
    fn smegm_linear_counts_have_vanishing_quadratic_term() {
        let counts: BTreeMap<i32, f64> = (0..6)
            .map(|t| (2008 + t, 50.0 + 4.0 * f64::from(t)))
            .collect();
        let m = fit_smegm(&counts).unwrap();
        assert!(m.coefficients[2].abs() < 1e-9);
    }

    #[test]
    fn fmi_exact_relation() {
        let turnover = map(&[(2010, 100.0), (2011, 200.0), (2012, 300.0)]);
        let gdp: BTreeMap<i32, f64> = turnover
            .iter()
            .map(|(&y, &s)| (y, 5.0 + 2.0 * s))
            .collect();
        let m = fit_fmi(&turnover, &gdp).unwrap();
        assert!((m.coefficients[0] - 5.0).abs() < 1e-9);
        assert!((m.coefficients[1] - 2.0).abs() < 1e-9);
        assert_eq!(m.x_origin, 0);
    }

    #[test]
    fn fmi_constant_gdp_has_zero_slope() {
        let turnover = map(&[(2010, 100.0), (2011, 200.0), (2012, 300.0)]);
        let gdp = map(&[(2010, 42.0), (2011, 42.0), (2012, 42.0)]);
        let m = fit_fmi(&turnover, &gdp).unwrap();
        assert!(m.coefficients[1].abs() < 1e-12);
    }

    #[test]
    fn fmi_requires_overlap() {
        let turnover = map(&[(2000, 1.0), (2001, 2.0)]);
        let gdp = map(&[(2010, 1.0), (2011, 2.0)]);
        assert!(matches!(
            fit_fmi(&turnover, &gdp).unwrap_err(),
            Error::NoYearOverlap
        ));
    }

    #[test]
    fn insufficient_years_names_the_model() {
        let gdp = map(&[(2010, 1.0), (2011, 2.0)]);
        match fit_mid(&gdp).unwrap_err() {
            Error::Fit { model, source } => {
                assert_eq!(model, "MID");
                assert_eq!(source, FitError::InsufficientData { needed: 3, got: 2 });
            }
            other => panic!("unexpected error: {other}"),
        }
    }

    fn record(counts: [u64; 4], turnovers: [f64; 4]) -> SmeRecord {
        SmeRecord {
            year: 2012,
            individual_count: counts[0],
            micro_count: counts[1],
            small_count: counts[2],
            medium_count: counts[3],
            individual_turnover: turnovers[0],
            micro_turnover: turnovers[1],
            small_turnover: turnovers[2],
            medium_turnover: turnovers[3],
            total_turnover: 1e6,
        }
    }

    #[test]
    fn aar_excludes_medium_by_default() {
        let r = record([100, 50, 50, 10], [100.0, 200.0, 300.0, 900.0]);
        let aar = compute_aar(&r, &default_exclusions()).unwrap();
        assert_eq!(aar, 3.0); // 600 / 200
    }

    #[test]
    fn aar_single_included_category() {
        let r = record([0, 0, 30, 10], [0.0, 0.0, 60.0, 900.0]);
        let exclude = BTreeSet::from([
            CategoryName::Individual,
            CategoryName::Micro,
            CategoryName::Medium,
        ]);
        assert_eq!(compute_aar(&r, &exclude).unwrap(), 2.0);
    }

    #[test]
    fn aar_zero_included_count_rejected() {
        let r = record([0, 0, 0, 10], [0.0, 0.0, 0.0, 900.0]);
        assert!(matches!(
            compute_aar(&r, &default_exclusions()).unwrap_err(),
            Error::ZeroIncludedCount
        ));
    }

    #[test]
    fn aar_is_bounded_by_per_category_extremes() {
        let r = record([10, 20, 5, 3], [15.0, 10.0, 40.0, 33.0]);
        let exclude = BTreeSet::new();
        let aar = compute_aar(&r, &exclude).unwrap();
        let per_category: Vec<f64> = CategoryName::ALL
            .iter()
            .filter(|&&c| r.count(c) > 0)
            .map(|&c| r.turnover(c) / r.count(c) as f64)
            .collect();
        let min = per_category.iter().copied().fold(f64::INFINITY, f64::min);
        let max = per_category
            .iter()
            .copied()
            .fold(f64::NEG_INFINITY, f64::max);
        assert!(min <= aar && aar <= max);
    }

    #[test]
    fn fmi_predictions_match_observations_within_reported_residuals() {
        let turnover = map(&[(2009, 90.0), (2010, 100.0), (2011, 210.0), (2012, 280.0)]);
        let gdp = map(&[(2009, 12.0), (2010, 15.1), (2011, 24.2), (2012, 30.9)]);
        let m = fit_fmi(&turnover, &gdp).unwrap();
        for (i, (year, &s)) in turnover.iter().enumerate() {
            let predicted = m.predict(s);
            let observed = gdp[year];
            assert!(
                ((observed - predicted) - m.residuals[i]).abs() < 1e-12,
                "residual mismatch at {year}"
            );
        }
    }

    #[test]
    fn smegm_noisy_quadratic_matches_independent_closed_form() {
        // Oracle: solve the 3x3 normal equations by Cramer's rule, a
        // different algebraic route than the elimination in the fitter.
        let noise = [0.4, -0.3, 0.2, -0.1, 0.5, -0.2, 0.1, -0.4];
        let counts: BTreeMap<i32, f64> = (0..8)
            .map(|t| {
                let tf = f64::from(t);
                (
                    2008 + t,
                    200.0 + 12.0 * tf + 2.5 * tf * tf + noise[t as usize],
                )
            })
            .collect();
        let m = fit_smegm(&counts).unwrap();

        let ts: Vec<f64> = (0..8).map(f64::from).collect();
        let ys: Vec<f64> = counts.values().copied().collect();
        let s = |p: i32| ts.iter().map(|t| t.powi(p)).sum::<f64>();
        let sy = |p: i32| ts.iter().zip(&ys).map(|(t, y)| t.powi(p) * y).sum::<f64>();
        let a = [
            [s(0), s(1), s(2)],
            [s(1), s(2), s(3)],
            [s(2), s(3), s(4)],
        ];
        let b = [sy(0), sy(1), sy(2)];
        let det3 = |m: &[[f64; 3]; 3]| {
            m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
                - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
                + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
        };
        let det = det3(&a);
        for i in 0..3 {
            let mut ai = a;
            for row in 0..3 {
                ai[row][i] = b[row];
            }
            let expected = det3(&ai) / det;
            assert!(
                (m.coefficients[i] - expected).abs() <= 1e-9 * expected.abs().max(1.0),
                "coefficient {i}: {} vs {expected}",
                m.coefficients[i]
            );
        }
    }

    #[test]
    fn fitters_are_deterministic() {
        let gdp = map(&[(2010, 55278.0), (2011, 61564.0), (2012, 60403.0)]);
        let a = fit_mid(&gdp).unwrap();
        let b = fit_mid(&gdp).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.coefficients[0].to_bits(), b.coefficients[0].to_bits());
    }
}
