//! Ordinary least-squares fitting for the three regression shapes the
//! model chain needs: degree-1 polynomial, degree-2 polynomial, and a
//! proportional (through-origin) fit.
//!
//! The normal equations are solved by direct 2x2 / 3x3 Gaussian
//! elimination with partial pivoting; systems this small need no general
//! linear-algebra dependency. Regressors that are calendar years must be
//! re-centered before fitting (see [`fit_poly`]'s `x_origin`), otherwise
//! the cubed design columns wreck conditioning.

use serde::{Deserialize, Serialize};

use crate::error::FitError;

/// Polynomial degree admitted by the fitters.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Degree {
    Linear,
    Quadratic,
}

impl Degree {
    pub fn as_usize(self) -> usize {
        match self {
            Degree::Linear => 1,
            Degree::Quadratic => 2,
        }
    }
}

/// A fitted polynomial regression.
///
/// `coefficients` are stored lowest order first and apply to the shifted
/// regressor `x - x_origin`. For time-trend models `x_origin` is the year
/// mapped to t = 0; for regressions on turnover it stays 0.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolyModel {
    pub coefficients: Vec<f64>,
    pub x_origin: i32,
    pub r_squared: f64,
    pub residuals: Vec<f64>,
}

impl PolyModel {
    pub fn degree(&self) -> usize {
        self.coefficients.len() - 1
    }

    pub fn n_points(&self) -> usize {
        self.residuals.len()
    }

    /// Evaluate the polynomial at `x` (Horner form on `x - x_origin`).
    pub fn predict(&self, x: f64) -> f64 {
        let t = x - f64::from(self.x_origin);
        let mut acc = 0.0;
        for &c in self.coefficients.iter().rev() {
            acc = acc * t + c;
        }
        acc
    }
}

/// A fitted through-origin share model `y = d x`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProportionalModel {
    pub d: f64,
    pub r_squared: f64,
    pub residuals: Vec<f64>,
}

impl ProportionalModel {
    pub fn n_points(&self) -> usize {
        self.residuals.len()
    }

    pub fn predict(&self, x: f64) -> f64 {
        self.d * x
    }
}

/// Least-squares polynomial fit of `ys` on `xs - x_origin`.
///
/// Requires `degree + 2` points so at least one residual degree of
/// freedom remains. Returns [`FitError::DegenerateDesign`] when the
/// shifted design has no information (e.g. all `xs` identical).
pub fn fit_poly(
    xs: &[f64],
    ys: &[f64],
    degree: Degree,
    x_origin: i32,
) -> Result<PolyModel, FitError> {
    if xs.len() != ys.len() {
        return Err(FitError::LengthMismatch {
            xs: xs.len(),
            ys: ys.len(),
        });
    }
    let deg = degree.as_usize();
    let needed = deg + 2;
    if xs.len() < needed {
        return Err(FitError::InsufficientData {
            needed,
            got: xs.len(),
        });
    }

    let shifted: Vec<f64> = xs.iter().map(|&x| x - f64::from(x_origin)).collect();
    let n_coef = deg + 1;

    // Accumulate the normal equations X'X b = X'y over power sums.
    let mut xtx = [[0.0f64; 3]; 3];
    let mut xty = [0.0f64; 3];
    for (&t, &y) in shifted.iter().zip(ys) {
        let mut pow_i = 1.0;
        for i in 0..n_coef {
            // entry (i, j) accumulates t^(i+j)
            let mut pow_ij = pow_i * pow_i;
            for j in i..n_coef {
                xtx[i][j] += pow_ij;
                pow_ij *= t;
            }
            xty[i] += pow_i * y;
            pow_i *= t;
        }
    }
    for i in 0..n_coef {
        for j in 0..i {
            xtx[i][j] = xtx[j][i];
        }
    }

    let coefficients = solve_small(xtx, xty, n_coef).ok_or(FitError::DegenerateDesign)?;

    let residuals: Vec<f64> = shifted
        .iter()
        .zip(ys)
        .map(|(&t, &y)| {
            let mut acc = 0.0;
            for &c in coefficients.iter().rev() {
                acc = acc * t + c;
            }
            y - acc
        })
        .collect();

    let r_squared = r_squared_about_mean(ys, &residuals);

    Ok(PolyModel {
        coefficients,
        x_origin,
        r_squared,
        residuals,
    })
}

/// Least-squares through-origin fit `ys = d xs`.
///
/// The closed form is `d = sum(y x) / sum(x^2)`. A fitted `d` outside
/// [0, 1] is rejected: the share interpretation does not admit it.
pub fn fit_proportional(xs: &[f64], ys: &[f64]) -> Result<ProportionalModel, FitError> {
    if xs.len() != ys.len() {
        return Err(FitError::LengthMismatch {
            xs: xs.len(),
            ys: ys.len(),
        });
    }
    if xs.is_empty() {
        return Err(FitError::InsufficientData { needed: 1, got: 0 });
    }
    let sxx: f64 = xs.iter().map(|&x| x * x).sum();
    if sxx == 0.0 {
        return Err(FitError::AllZeroRegressor);
    }
    let sxy: f64 = xs.iter().zip(ys).map(|(&x, &y)| x * y).sum();
    let d = sxy / sxx;
    if !(0.0..=1.0).contains(&d) {
        return Err(FitError::ShareOutOfRange { d });
    }

    let residuals: Vec<f64> = xs.iter().zip(ys).map(|(&x, &y)| y - d * x).collect();
    // Share model has no intercept, so r^2 is taken about zero.
    let ss_tot: f64 = ys.iter().map(|&y| y * y).sum();
    let ss_res: f64 = residuals.iter().map(|&r| r * r).sum();
    let r_squared = if ss_tot == 0.0 {
        1.0
    } else {
        (1.0 - ss_res / ss_tot).clamp(0.0, 1.0)
    };

    Ok(ProportionalModel {
        d,
        r_squared,
        residuals,
    })
}

/// Evaluate a fitted polynomial at `x`. Thin wrapper over
/// [`PolyModel::predict`] for call sites that read better as a function.
pub fn predict(model: &PolyModel, x: f64) -> f64 {
    model.predict(x)
}

fn r_squared_about_mean(ys: &[f64], residuals: &[f64]) -> f64 {
    let n = ys.len() as f64;
    let mean = ys.iter().sum::<f64>() / n;
    let ss_tot: f64 = ys.iter().map(|&y| (y - mean) * (y - mean)).sum();
    let ss_res: f64 = residuals.iter().map(|&r| r * r).sum();
    if ss_tot == 0.0 {
        // Constant response: the fit reproduces it, call it a perfect fit.
        1.0
    } else {
        (1.0 - ss_res / ss_tot).clamp(0.0, 1.0)
    }
}

/// Solve an `n x n` (n <= 3) system by Gaussian elimination with partial
/// pivoting. Returns `None` when a pivot is too small relative to the
/// matrix scale to be trusted.
fn solve_small(mut a: [[f64; 3]; 3], mut b: [f64; 3], n: usize) -> Option<Vec<f64>> {
    let scale = a
        .iter()
        .take(n)
        .flat_map(|row| row.iter().take(n))
        .fold(0.0f64, |m, &v| m.max(v.abs()));
    if scale == 0.0 {
        return None;
    }
    let tiny = scale * 1e-13;

    for col in 0..n {
        let pivot_row = (col..n)
            .max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))
            .unwrap();
        if a[pivot_row][col].abs() <= tiny {
            return None;
        }
        a.swap(col, pivot_row);
        b.swap(col, pivot_row);
        for row in col + 1..n {
            let factor = a[row][col] / a[col][col];
            for k in col..n {
                a[row][k] -= factor * a[col][k];
            }
            b[row] -= factor * b[col];
        }
    }

    let mut x = vec![0.0; n];
    for row in (0..n).rev() {
        let mut acc = b[row];
        for k in row + 1..n {
            acc -= a[row][k] * x[k];
        }
        x[row] = acc / a[row][row];
    }
    Some(x)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn assert_close(a: f64, b: f64, tol: f64) {
        assert!((a - b).abs() <= tol, "{a} vs {b} (tol {tol})");
    }

    #[test]
    fn exact_line_recovers_coefficients() {
        let xs = [0.0, 1.0, 2.0, 3.0];
        let ys: Vec<f64> = xs.iter().map(|&x| 2.0 + 3.0 * x).collect();
        let m = fit_poly(&xs, &ys, Degree::Linear, 0).unwrap();
        assert_close(m.coefficients[0], 2.0, 1e-12);
        assert_close(m.coefficients[1], 3.0, 1e-12);
        assert_close(m.r_squared, 1.0, 1e-12);
        for r in &m.residuals {
            assert!(r.abs() < 1e-10);
        }
    }

    #[test]
    fn exact_parabola_recovers_coefficients() {
        let xs = [-1.0, 0.0, 1.0, 2.0, 3.0];
        let ys: Vec<f64> = xs.iter().map(|&x| 1.0 - 2.0 * x + 0.5 * x * x).collect();
        let m = fit_poly(&xs, &ys, Degree::Quadratic, 0).unwrap();
        assert_close(m.coefficients[0], 1.0, 1e-10);
        assert_close(m.coefficients[1], -2.0, 1e-10);
        assert_close(m.coefficients[2], 0.5, 1e-10);
    }

    #[test]
    fn noisy_line_matches_closed_form_ols() {
        // Independent oracle: the mean/covariance closed form, a different
        // algebraic route than the normal-equation elimination.
        let xs: Vec<f64> = (0..12).map(f64::from).collect();
        let noise = [
            0.3, -0.1, 0.2, -0.4, 0.05, 0.15, -0.25, 0.1, -0.05, 0.2, -0.3, 0.12,
        ];
        let ys: Vec<f64> = xs
            .iter()
            .zip(noise)
            .map(|(&x, e)| 4.0 + 1.5 * x + e)
            .collect();

        let n = xs.len() as f64;
        let xbar = xs.iter().sum::<f64>() / n;
        let ybar = ys.iter().sum::<f64>() / n;
        let sxx: f64 = xs.iter().map(|&x| (x - xbar) * (x - xbar)).sum();
        let sxy: f64 = xs
            .iter()
            .zip(&ys)
            .map(|(&x, &y)| (x - xbar) * (y - ybar))
            .sum();
        let slope = sxy / sxx;
        let intercept = ybar - slope * xbar;

        let m = fit_poly(&xs, &ys, Degree::Linear, 0).unwrap();
        assert_close(m.coefficients[0], intercept, 1e-9 * intercept.abs());
        assert_close(m.coefficients[1], slope, 1e-9 * slope.abs());
    }

    #[test]
    fn insufficient_points_rejected() {
        let err = fit_poly(&[0.0, 1.0], &[1.0, 2.0], Degree::Linear, 0).unwrap_err();
        assert_eq!(err, FitError::InsufficientData { needed: 3, got: 2 });
        let err = fit_poly(&[0.0, 1.0, 2.0], &[1.0, 2.0, 3.0], Degree::Quadratic, 0).unwrap_err();
        assert_eq!(err, FitError::InsufficientData { needed: 4, got: 3 });
    }

    #[test]
    fn identical_regressors_are_degenerate() {
        let err = fit_poly(&[5.0, 5.0, 5.0], &[1.0, 2.0, 3.0], Degree::Linear, 0).unwrap_err();
        assert_eq!(err, FitError::DegenerateDesign);
    }

    #[test]
    fn proportional_exact_share() {
        let xs = [10.0, 20.0, 40.0];
        let ys: Vec<f64> = xs.iter().map(|&x| 0.25 * x).collect();
        let m = fit_proportional(&xs, &ys).unwrap();
        assert_close(m.d, 0.25, 1e-15);
        assert_close(m.r_squared, 1.0, 1e-15);
    }

    #[test]
    fn proportional_hand_case() {
        // d = (2*1 + 4*1) / (4 + 16) = 0.3, r^2 about zero = 0.9
        let m = fit_proportional(&[2.0, 4.0], &[1.0, 1.0]).unwrap();
        assert_close(m.d, 0.3, 1e-15);
        assert_close(m.r_squared, 0.9, 1e-12);
    }

    #[test]
    fn proportional_rejects_share_above_one() {
        let xs = [1.0, 2.0];
        let ys: Vec<f64> = xs.iter().map(|&x| 1.5 * x).collect();
        match fit_proportional(&xs, &ys).unwrap_err() {
            FitError::ShareOutOfRange { d } => assert_close(d, 1.5, 1e-12),
            other => panic!("unexpected error: {other:?}"),
        }
    }

    #[test]
    fn proportional_rejects_zero_regressor() {
        let err = fit_proportional(&[0.0, 0.0], &[1.0, 2.0]).unwrap_err();
        assert_eq!(err, FitError::AllZeroRegressor);
    }

    #[test]
    fn predict_examples() {
        let line = PolyModel {
            coefficients: vec![2.0, 3.0],
            x_origin: 0,
            r_squared: 1.0,
            residuals: vec![],
        };
        assert_close(predict(&line, 0.0), 2.0, 0.0);

        let parab = PolyModel {
            coefficients: vec![1.0, -2.0, 0.5],
            x_origin: 0,
            r_squared: 1.0,
            residuals: vec![],
        };
        assert_close(predict(&parab, 2.0), -1.0, 1e-15);

        let flip = PolyModel {
            coefficients: vec![5.0, 2.0],
            x_origin: 0,
            r_squared: 1.0,
            residuals: vec![],
        };
        assert_close(predict(&flip, 10.0), 25.0, 0.0);
    }

    #[test]
    fn shifted_origin_agrees_on_predictions() {
        let years: Vec<f64> = (2005..2015).map(f64::from).collect();
        let ys: Vec<f64> = years
            .iter()
            .map(|&y| 10.0 + 0.7 * (y - 2005.0) + 0.02 * (y - 2005.0).powi(2))
            .collect();
        let a = fit_poly(&years, &ys, Degree::Quadratic, 2005).unwrap();
        let b = fit_poly(&years, &ys, Degree::Quadratic, 2010).unwrap();
        for &y in &years {
            let pa = a.predict(y);
            let pb = b.predict(y);
            assert_close(pa, pb, 1e-9 * pa.abs().max(1.0));
        }
    }
}
