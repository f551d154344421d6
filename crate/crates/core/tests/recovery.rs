//! End-to-end recovery: synthetic economies with known ground truth are
//! pushed through deflation, fitting, and the sweep, and the chain must
//! hand back the truth — exactly (up to float dust) when noiseless, and
//! within closed-form standard-error bounds when noisy.

use metpp::deflate::deflate_series;
use metpp::localmodels::{default_exclusions, fit_local_models, included_count};
use metpp::oracle::{generate, NoiseSource, SyntheticSpec};
use metpp::potential::{beta_sweep, sweep_years_from_records, ScenarioParams};

fn rel_err(actual: f64, truth: f64) -> f64 {
    (actual - truth).abs() / truth.abs().max(f64::MIN_POSITIVE)
}

/// Build a spec that is valid by construction: the turnover path is laid
/// out first and the GDP trend derived from it, counts grow from a solid
/// floor, and `s1sse` is capped so the SME turnover share always covers
/// the included categories' revenue.
fn random_spec(seed: u64) -> SyntheticSpec {
    let mut r = NoiseSource::new(seed);
    let mut uniform = |lo: f64, hi: f64| lo + (hi - lo) * r.next_uniform();

    let s0 = uniform(5_000.0, 20_000.0);
    let s_step = uniform(50.0, 500.0);
    let b1 = uniform(0.3, 3.0);
    let b0 = uniform(0.0, 5_000.0);
    let c0 = uniform(1_000.0, 5_000.0).round();
    let c1 = uniform(0.0, 200.0).round();
    let c2 = uniform(0.0, 20.0).round();
    let n_years = 6 + (uniform(0.0, 6.0) as i32);
    let last_t = f64::from(n_years - 1);
    let count_last = c0 + c1 * last_t + c2 * last_t * last_t;

    let d = uniform(0.2, 0.8);
    let k = uniform(0.2, 1.0);
    let beta = uniform(0.0, 1.0) * (1.0 - k);
    let n0 = uniform(1.0, 0.9 * count_last).round().max(1.0) as u64;
    let s1sse = uniform(0.1, 1.0) * 0.9 * d * s0 / count_last;

    SyntheticSpec {
        start_year: 2000,
        end_year: 2000 + n_years - 1,
        mid: [b0 + b1 * s0, b1 * s_step],
        fmi: [b0, b1],
        smegm: [c0, c1, c2],
        d,
        k,
        beta,
        n0,
        s1sse,
        alpha: uniform(1.0, 3.0),
        inflation: uniform(1.0, 1.12),
        medium_share: 0.05,
        gdp_sigma: 0.0,
        turnover_sigma: 0.0,
        count_sigma: 0.0,
        seed: seed ^ 0xD1B5_4A32_D192_ED03,
    }
}

/// Run the library-level chain the way the front end wires it:
/// deflate the macro series, fit on the shared years, derive the
/// scenario from data, sweep the spec's own beta.
fn run_chain(spec: &SyntheticSpec) -> (f64, f64, f64, Vec<f64>) {
    let (macro_series, sme_series) = generate(spec).unwrap();
    let deflated = deflate_series(&macro_series, spec.end_year).unwrap();
    let exclude = default_exclusions();
    let models = fit_local_models(&deflated.real_map(), &sme_series, &exclude).unwrap();

    let n0 = included_count(sme_series.last().unwrap(), &exclude);
    let ref_aar = *models.aar_series.iter().next_back().unwrap().1;
    let template = ScenarioParams::new(
        spec.k,
        spec.beta,
        models.smefm.d,
        n0,
        ref_aar,
        spec.alpha,
    )
    .unwrap();
    let years = sweep_years_from_records(&sme_series, &models.aar_series, None).unwrap();
    let report = beta_sweep(&models.fmi, &template, &[spec.beta], &years, spec.end_year).unwrap();

    let delta_gs = report.rows.iter().map(|row| row.delta_g).collect();
    (
        models.fmi.coefficients[0],
        models.fmi.coefficients[1],
        models.smefm.d,
        delta_gs,
    )
}

#[test]
fn noiseless_chain_reproduces_true_increment() {
    for seed in 0..25u64 {
        let spec = random_spec(seed);
        let (b0_hat, b1_hat, d_hat, delta_gs) = run_chain(&spec);

        assert!(rel_err(b0_hat, spec.fmi[0]) < 1e-9, "seed {seed} b0");
        assert!(rel_err(b1_hat, spec.fmi[1]) < 1e-9, "seed {seed} b1");
        assert!(rel_err(d_hat, spec.d) < 1e-9, "seed {seed} d");

        let truth = spec.true_delta_g();
        for delta_g in delta_gs {
            if truth == 0.0 {
                assert_eq!(delta_g, 0.0, "seed {seed}");
            } else {
                assert!(
                    rel_err(delta_g, truth) < 1e-6,
                    "seed {seed}: {delta_g} vs {truth}"
                );
            }
        }
    }
}

#[test]
fn noiseless_chain_recovers_descriptive_trend_models() {
    for seed in 100..110u64 {
        let spec = random_spec(seed);
        let (macro_series, sme_series) = generate(&spec).unwrap();
        let deflated = deflate_series(&macro_series, spec.end_year).unwrap();
        let models =
            fit_local_models(&deflated.real_map(), &sme_series, &default_exclusions()).unwrap();

        assert!(rel_err(models.mid.coefficients[0], spec.mid[0]) < 1e-9);
        assert!(rel_err(models.mid.coefficients[1], spec.mid[1]) < 1e-9);
        // integer-valued count trend: rounding in generation is exact
        for (fitted, &truth) in models.smegm.coefficients.iter().zip(&spec.smegm) {
            assert!(
                (fitted - truth).abs() <= 1e-9 * truth.abs().max(1.0),
                "seed {seed}: smegm {fitted} vs {truth}"
            );
        }
        for (&year, &aar) in &models.aar_series {
            assert!(rel_err(aar, spec.s1sse) < 1e-12, "seed {seed} year {year}");
        }
    }
}

#[test]
fn noisy_fit_lands_within_three_standard_errors() {
    // Single-seed sanity check of the standard-error bound; the full
    // 500-trial coverage test lives in the acceptance suite.
    let mut spec = random_spec(7);
    spec.gdp_sigma = 0.005 * spec.mid[0];
    spec.turnover_sigma = 0.01 * spec.d * spec.turnover_at(0);

    let (macro_series, sme_series) = generate(&spec).unwrap();
    let deflated = deflate_series(&macro_series, spec.end_year).unwrap();
    let models =
        fit_local_models(&deflated.real_map(), &sme_series, &default_exclusions()).unwrap();

    let ss: Vec<f64> = (0..spec.n_years() as i32)
        .map(|t| spec.turnover_at(t))
        .collect();
    let n = ss.len() as f64;
    let mean = ss.iter().sum::<f64>() / n;
    let sxx: f64 = ss.iter().map(|s| (s - mean) * (s - mean)).sum();
    let se_b1 = spec.gdp_sigma / sxx.sqrt();
    let se_b0 = spec.gdp_sigma * (1.0 / n + mean * mean / sxx).sqrt();
    let se_d = spec.turnover_sigma / ss.iter().map(|s| s * s).sum::<f64>().sqrt();

    assert!((models.fmi.coefficients[0] - spec.fmi[0]).abs() <= 3.0 * se_b0);
    assert!((models.fmi.coefficients[1] - spec.fmi[1]).abs() <= 3.0 * se_b1);
    assert!((models.smefm.d - spec.d).abs() <= 3.0 * se_d);
}
