//! Regular start at the singular origin.
//!
//! Regular solutions are even power series in `r`:
//!
//! ```text
//! w(r) = 1 + w₂ r² + w₄ r⁴ + …,   w₂ = -λ/2
//! A(r) = 1 + a₂ r² + a₄ r⁴ + …,   a₂ = -λ²
//! ```
//!
//! with `w₄ = (3w₂² + 8w₂³)/10` and `a₄ = -(8w₂²a₂ + 40w₂w₄ + 4w₂³)/5`, obtained
//! by matching the `r⁴` terms of both field equations. Ignition happens at a
//! small `r0` where the truncated series is evaluated.

use serde::{Deserialize, Serialize};

use crate::error::{EymError, Result};
#[cfg(doc)]
use crate::system::{residual_2a, residual_2b};
use crate::system::{FieldState, ShootingParameter};

pub const MAX_IGNITION_RADIUS: f64 = 0.01;

/// Coefficients of the even series, indexed by half-power: `w[k]` multiplies `r^(2k)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeriesCoefficients {
    pub order: u32,
    pub w: Vec<f64>,
    pub a: Vec<f64>,
}

impl SeriesCoefficients {
    /// Value and first two derivatives of `Σ c[k] r^(2k)`.
    fn eval(coeffs: &[f64], r: f64) -> (f64, f64, f64) {
        let r2 = r * r;
        let (mut f, mut df, mut ddf) = (0.0, 0.0, 0.0);
        // Horner in r² from the top coefficient down.
        for (k, &c) in coeffs.iter().enumerate().rev() {
            let p = 2.0 * k as f64;
            f = f * r2 + c;
            if k >= 1 {
                df = df * r2 + p * c;
                ddf = ddf * r2 + p * (p - 1.0) * c;
            }
        }
        // df accumulated Σ p c r^(p-2) · r, ddf accumulated Σ p(p-1) c r^(p-2).
        (f, df * r, ddf)
    }

    pub fn w_at(&self, r: f64) -> (f64, f64, f64) {
        Self::eval(&self.w, r)
    }

    pub fn a_at(&self, r: f64) -> (f64, f64, f64) {
        Self::eval(&self.a, r)
    }
}

pub fn series_coefficients(lambda: f64, order: u32) -> Result<SeriesCoefficients> {
    let lambda = ShootingParameter::new(lambda)?.value();
    let w2 = -0.5 * lambda;
    let a2 = -lambda * lambda;
    match order {
        2 => Ok(SeriesCoefficients { order, w: vec![1.0, w2], a: vec![1.0, a2] }),
        4 => {
            let w4 = (3.0 * w2 * w2 + 8.0 * w2 * w2 * w2) / 10.0;
            let a4 = -(8.0 * w2 * w2 * a2 + 40.0 * w2 * w4 + 4.0 * w2 * w2 * w2) / 5.0;
            Ok(SeriesCoefficients { order, w: vec![1.0, w2, w4], a: vec![1.0, a2, a4] })
        }
        other => Err(EymError::UnsupportedOrder(other)),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeriesStart {
    pub lambda: f64,
    pub r0: f64,
    pub order: u32,
    pub state: FieldState,
    /// `|residual_2a| + |residual_2b|` of the truncated series at `r0`.
    pub truncation_estimate: f64,
}

pub fn launch_state(lambda: f64, r0: f64, order: u32) -> Result<SeriesStart> {
    if !(r0 > 0.0 && r0 <= MAX_IGNITION_RADIUS) {
        return Err(EymError::IgnitionRadius(r0));
    }
    let coeffs = series_coefficients(lambda, order)?;
    let (w, wp, _) = coeffs.w_at(r0);
    let (a, _, _) = coeffs.a_at(r0);
    let (res_a, res_b) = series_residuals(&coeffs, r0);
    Ok(SeriesStart {
        lambda,
        r0,
        order,
        state: FieldState::new(r0, w, wp, a),
        truncation_estimate: res_a.abs() + res_b.abs(),
    })
}

/// Residuals of both field equations for the truncated series at `r`.
///
/// Evaluated on the deviations `w - 1` and `A - 1` taken straight from the
/// series, so the result resolves truncation terms far below `f64::EPSILON`.
/// Agrees with [`residual_2a`]/[`residual_2b`] on the series data up to
/// rounding.
pub fn series_residuals(coeffs: &SeriesCoefficients, r: f64) -> (f64, f64) {
    let r2 = r * r;
    let tail = |c: &[f64]| c.iter().skip(1).rev().fold(0.0, |acc, &x| acc * r2 + x) * r2;
    let dw = tail(&coeffs.w);
    let da = tail(&coeffs.a);
    let (_, wp, wpp) = coeffs.w_at(r);
    let (_, ap, _) = coeffs.a_at(r);
    let w = 1.0 + dw;
    let a = 1.0 + da;
    let q = -dw * (2.0 + dw);
    let phi = -r * da - q * q / r;
    let res_a = r2 * a * wpp + phi * wp + w * q;
    let res_b = r * ap + da + 2.0 * wp * wp * a + q * q / r2;
    (res_a, res_b)
}
