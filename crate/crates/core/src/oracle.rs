//! Synthetic-economy generation and a brute-force recomposition of the
//! indicator, used as independent correctness checks for the fitters and
//! the potential engine.
//!
//! Generation is deterministic: the noise source is ChaCha20 keyed with
//! the 64-bit seed written little-endian into the first 8 bytes of the
//! 256-bit key (remaining bytes zero). Uniform draws take the top 53 bits
//! of each 64-bit output word (two successive little-endian 32-bit words)
//! and Gaussian draws apply the Box-Muller cosine transform
//! `z = sqrt(-2 ln u1) * cos(2 pi u2)` to two successive uniforms, with
//! `u1` shifted into `(0, 1]`. Per year, exactly three Gaussians are
//! drawn in order: GDP, SME turnover, SME count. Any implementation of
//! ChaCha20 can therefore regenerate the fixtures from the seed alone.

use rand_chacha::ChaCha20Rng;
use rand_core::{RngCore, SeedableRng};

use crate::dataio::{MacroRecord, SmeRecord};
use crate::error::{Error, Result};
use crate::potential::ScenarioParams;

/// Deterministic Gaussian source (see module docs for the exact scheme).
pub struct NoiseSource {
    rng: ChaCha20Rng,
}

impl NoiseSource {
    pub fn new(seed: u64) -> Self {
        let mut key = [0u8; 32];
        key[..8].copy_from_slice(&seed.to_le_bytes());
        NoiseSource {
            rng: ChaCha20Rng::from_seed(key),
        }
    }

    /// Uniform in `[0, 1)`: top 53 bits of the next 64-bit word.
    pub fn next_uniform(&mut self) -> f64 {
        (self.rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Standard Gaussian via Box-Muller (cosine branch).
    pub fn next_gaussian(&mut self) -> f64 {
        let u1 = ((self.rng.next_u64() >> 11) + 1) as f64 * (1.0 / (1u64 << 53) as f64);
        let u2 = self.next_uniform();
        (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
    }
}

/// A fully specified synthetic economy.
///
/// The GDP trend `mid`, the flip relation `fmi`, the count trend `smegm`,
/// the turnover share `d`, and the scenario values are all free; the
/// turnover path is derived so that the trend and the flip relation hold
/// simultaneously: `S(t) = (a0 + a1 t - b0) / b1`. The medium-sized
/// category absorbs the slack that makes the remaining constraints
/// consistent: its count at the final year is `n(T) - n0` (so the
/// included count is exactly `n0` there), and its turnover each year is
/// `d S(t)` minus the included categories' `s1sse`-proportional turnover.
#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticSpec {
    pub start_year: i32,
    /// Final year; also the deflation base year of the generated series.
    pub end_year: i32,
    /// True GDP trend coefficients `(a0, a1)` on `t = year - start_year`.
    pub mid: [f64; 2],
    /// True flip coefficients `(b0, b1)`, `b1 != 0`.
    pub fmi: [f64; 2],
    /// True count trend coefficients `(c0, c1, c2)`.
    pub smegm: [f64; 3],
    /// True SME turnover share.
    pub d: f64,
    pub k: f64,
    pub beta: f64,
    /// Surviving included-SME count at the final year.
    pub n0: u64,
    /// True average annual revenue of one included SME.
    pub s1sse: f64,
    pub alpha: f64,
    /// Constant year-over-year price factor for the nominal series.
    pub inflation: f64,
    /// Share of the total count assigned to medium-sized enterprises in
    /// non-final years.
    pub medium_share: f64,
    pub gdp_sigma: f64,
    pub turnover_sigma: f64,
    pub count_sigma: f64,
    pub seed: u64,
}

impl SyntheticSpec {
    fn invalid(reason: impl Into<String>) -> Error {
        Error::InvalidSyntheticSpec {
            reason: reason.into(),
        }
    }

    pub fn n_years(&self) -> usize {
        (self.end_year - self.start_year + 1) as usize
    }

    /// Noiseless turnover path at `t = year - start_year`.
    pub fn turnover_at(&self, t: i32) -> f64 {
        (self.mid[0] + self.mid[1] * f64::from(t) - self.fmi[0]) / self.fmi[1]
    }

    /// Noiseless real GDP at `t`.
    pub fn gdp_at(&self, t: i32) -> f64 {
        self.mid[0] + self.mid[1] * f64::from(t)
    }

    /// Noiseless total SME count at `t`.
    pub fn count_at(&self, t: i32) -> f64 {
        let t = f64::from(t);
        self.smegm[0] + self.smegm[1] * t + self.smegm[2] * t * t
    }

    fn included_count_at(&self, t: i32) -> u64 {
        let total = self.count_at(t).round().max(0.0) as u64;
        if t == self.end_year - self.start_year {
            self.n0
        } else {
            let medium = (self.medium_share * total as f64).round() as u64;
            total.saturating_sub(medium)
        }
    }

    /// The scenario this spec describes.
    pub fn scenario(&self) -> Result<ScenarioParams> {
        ScenarioParams::new(self.k, self.beta, self.d, self.n0, self.s1sse, self.alpha)
    }

    /// True sensitivity per unit beta and the true increment at the
    /// spec's own beta; constant across years since `s1sse` is.
    pub fn true_epsilon(&self) -> f64 {
        self.fmi[1] * self.alpha * self.s1sse * self.n0 as f64 / self.k
    }

    pub fn true_delta_g(&self) -> f64 {
        self.true_epsilon() * self.beta
    }

    pub fn validate(&self) -> Result<()> {
        if self.end_year < self.start_year {
            return Err(Self::invalid("end_year precedes start_year"));
        }
        if self.n_years() < 4 {
            return Err(Self::invalid(
                "need at least 4 years for the quadratic count trend",
            ));
        }
        if self.fmi[1] == 0.0 {
            return Err(Self::invalid(
                "flip slope b1 must be nonzero to derive the turnover path",
            ));
        }
        self.scenario()?;
        if !(self.inflation > 0.0) {
            return Err(Self::invalid("inflation factor must be positive"));
        }
        if !(0.0..1.0).contains(&self.medium_share) {
            return Err(Self::invalid("medium_share must lie in [0, 1)"));
        }
        for sigma in [self.gdp_sigma, self.turnover_sigma, self.count_sigma] {
            if !(sigma >= 0.0) || !sigma.is_finite() {
                return Err(Self::invalid("noise sigmas must be finite and >= 0"));
            }
        }
        for t in 0..self.n_years() as i32 {
            let s = self.turnover_at(t);
            if !(s > 0.0) {
                return Err(Self::invalid(format!(
                    "derived turnover path is non-positive at t = {t}"
                )));
            }
            if !(self.gdp_at(t) > 0.0) {
                return Err(Self::invalid(format!("GDP trend non-positive at t = {t}")));
            }
            if self.count_at(t).round() < 1.0 {
                return Err(Self::invalid(format!(
                    "count trend below one enterprise at t = {t}"
                )));
            }
            let included = self.included_count_at(t);
            if self.d * s < self.s1sse * included as f64 {
                return Err(Self::invalid(format!(
                    "SME turnover share d*S(t) cannot cover included revenue at t = {t}"
                )));
            }
        }
        let last_t = self.end_year - self.start_year;
        if (self.count_at(last_t).round() as u64) < self.n0 {
            return Err(Self::invalid(
                "count trend at the final year is below n0",
            ));
        }
        Ok(())
    }
}

/// Generate one macro and one SME series from the spec. Deterministic
/// for a given seed; with all sigmas zero the series lie exactly on the
/// true models.
///
/// Turnover columns are written in final-year (base-year) prices, so the
/// fixtures pair with `deflate_turnover = false`; only the nominal GDP
/// column needs deflating.
pub fn generate(spec: &SyntheticSpec) -> Result<(Vec<MacroRecord>, Vec<SmeRecord>)> {
    spec.validate()?;
    let mut noise = NoiseSource::new(spec.seed);
    let n_years = spec.n_years() as i32;
    let last_t = n_years - 1;

    // Cumulative price factor from each year up to the final (base) year.
    let mut price_factor = vec![1.0f64; n_years as usize];
    for t in (0..last_t).rev() {
        price_factor[t as usize] = spec.inflation * price_factor[t as usize + 1];
    }

    let mut macro_series = Vec::with_capacity(n_years as usize);
    let mut sme_series = Vec::with_capacity(n_years as usize);

    for t in 0..n_years {
        let year = spec.start_year + t;
        let z_gdp = noise.next_gaussian();
        let z_turnover = noise.next_gaussian();
        let z_count = noise.next_gaussian();

        let real_gdp = spec.gdp_at(t) + z_gdp * spec.gdp_sigma;
        let nominal = real_gdp / price_factor[t as usize];
        macro_series.push(MacroRecord {
            year,
            nominal_gdp: Some(nominal),
            inflation: spec.inflation,
        });

        let total_turnover = spec.turnover_at(t);
        let total_count = (spec.count_at(t) + z_count * spec.count_sigma)
            .round()
            .max(1.0) as u64;
        let included = if t == last_t {
            spec.n0.min(total_count)
        } else {
            let medium = (spec.medium_share * total_count as f64).round() as u64;
            (total_count - medium.min(total_count)).max(1)
        };
        let medium_count = total_count - included.min(total_count);

        let individual_count = included / 2;
        let micro_count = included * 3 / 10;
        let small_count = included - individual_count - micro_count;

        let included_turnover = spec.s1sse * included as f64;
        // Clamp keeps the record valid even under extreme noise draws;
        // validated specs leave a wide margin so this almost never binds.
        let sme_turnover = (spec.d * total_turnover + z_turnover * spec.turnover_sigma)
            .clamp(included_turnover, total_turnover);
        let medium_turnover = sme_turnover - included_turnover;

        sme_series.push(SmeRecord {
            year,
            individual_count,
            micro_count,
            small_count,
            medium_count,
            individual_turnover: spec.s1sse * individual_count as f64,
            micro_turnover: spec.s1sse * micro_count as f64,
            small_turnover: spec.s1sse * small_count as f64,
            medium_turnover,
            total_turnover,
        });
    }

    Ok((macro_series, sme_series))
}

/// The indicator computed by literal substitution:
/// `g = b0 + b1 * ((1 - d) S + alpha s1sse n0 (k + beta) / k)`.
///
/// An independent re-derivation path for cross-checking the composed
/// implementation; performs no validation.
#[allow(clippy::too_many_arguments)]
pub fn brute_force_indicator(
    b0: f64,
    b1: f64,
    total_turnover: f64,
    d: f64,
    s1sse: f64,
    n0: f64,
    k: f64,
    beta: f64,
    alpha: f64,
) -> f64 {
    let composed = (1.0 - d) * total_turnover + alpha * s1sse * n0 * ((k + beta) / k);
    b0 + b1 * composed
}
