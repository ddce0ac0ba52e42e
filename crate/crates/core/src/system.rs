//! Reduced field equations for the static, spherically symmetric SU(2)
//! Einstein-Yang/Mills problem.
//!
//! The line element is `ds² = -T⁻² dt² + A⁻¹ dr² + r² dΩ²` and the gauge
//! connection is parameterized by the single radial function `w(r)`. The
//! `(w, A)` subsystem decouples from `T`:
//!
//! ```text
//! r² A w'' + Φ w' + w (1 - w²) = 0
//! r A' + (1 + 2 w'²) A = 1 - (1 - w²)² / r²
//! Φ = r (1 - A) - (1 - w²)² / r
//! ```
//!
//! The second equation carries the factor `(1 + 2w'²)` on `A`. It is the only
//! form compatible with the regular origin `A(0) = 1, w(0) = 1` and it makes
//! the mass function `m = r(1 - A)/2` obey `m' = A w'² + (1 - w²)² / (2r²)`.
//!
//! The field strength is `F = dα + α ∧ α`. Its squared norm is available
//! both as `2w'²/r² + (1-w²)²/r⁴` ([`f_norm_sq`]) and with the radial metric
//! factor on the first term ([`f_norm_sq_metric`]).

use serde::{Deserialize, Serialize};

use crate::error::{EymError, Result};

/// One point of the reduced system.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FieldState {
    pub r: f64,
    pub w: f64,
    pub wp: f64,
    pub a: f64,
}

impl FieldState {
    pub const fn new(r: f64, w: f64, wp: f64, a: f64) -> Self {
        Self { r, w, wp, a }
    }

    /// The rest point `w = ±1, w' = 0, A = 1` at radius `r`.
    pub const fn flat(r: f64, w: f64) -> Self {
        Self { r, w, wp: 0.0, a: 1.0 }
    }

    pub(crate) fn fields(&self) -> [f64; 3] {
        [self.w, self.wp, self.a]
    }

    pub(crate) fn from_fields(r: f64, y: [f64; 3]) -> Self {
        Self { r, w: y[0], wp: y[1], a: y[2] }
    }

    pub fn is_finite(&self) -> bool {
        self.r.is_finite() && self.w.is_finite() && self.wp.is_finite() && self.a.is_finite()
    }
}

/// Radial derivatives `(w', w'', A')`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DerivativeState {
    pub dw: f64,
    pub dwp: f64,
    pub da: f64,
}

impl DerivativeState {
    pub(crate) fn as_array(&self) -> [f64; 3] {
        [self.dw, self.dwp, self.da]
    }
}

/// `λ = -w''(0)`, the single free parameter of regular solutions.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ShootingParameter(f64);

impl ShootingParameter {
    pub fn new(lambda: f64) -> Result<Self> {
        if lambda.is_finite() && lambda >= 0.0 {
            Ok(Self(lambda))
        } else {
            Err(EymError::domain("ShootingParameter", format!("lambda = {lambda} must be finite and >= 0")))
        }
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

fn check_radius(op: &'static str, r: f64) -> Result<()> {
    if r > 0.0 && r.is_finite() {
        Ok(())
    } else {
        Err(EymError::domain(op, format!("radius r = {r} must be > 0")))
    }
}

#[inline]
fn one_minus_w2(w: f64) -> f64 {
    1.0 - w * w
}

/// `Φ = r(1 - A) - (1 - w²)²/r`.
pub fn phi(s: &FieldState) -> Result<f64> {
    check_radius("phi", s.r)?;
    Ok(phi_unchecked(s.r, s.w, s.a))
}

#[inline]
fn phi_unchecked(r: f64, w: f64, a: f64) -> f64 {
    let q = one_minus_w2(w);
    r * (1.0 - a) - q * q / r
}

/// Right-hand side of the first-order system in `(w, w', A)`.
pub fn field_rhs(s: &FieldState) -> Result<DerivativeState> {
    check_radius("field_rhs", s.r)?;
    if s.a == 0.0 {
        return Err(EymError::domain("field_rhs", format!("A = 0 at r = {}", s.r)));
    }
    let FieldState { r, w, wp, a } = *s;
    let q = one_minus_w2(w);
    let phi = r * (1.0 - a) - q * q / r;
    let dwp = -(phi * wp + w * q) / (r * r * a);
    let da = (1.0 - q * q / (r * r) - (1.0 + 2.0 * wp * wp) * a) / r;
    let out = DerivativeState { dw: wp, dwp, da };
    if out.dw.is_finite() && out.dwp.is_finite() && out.da.is_finite() {
        Ok(out)
    } else {
        Err(EymError::NonFinite { op: "field_rhs", r })
    }
}

/// Residual of the `w` equation; zero exactly when the sample satisfies it.
pub fn residual_2a(r: f64, w: f64, wp: f64, wpp: f64, a: f64) -> Result<f64> {
    check_radius("residual_2a", r)?;
    Ok(r * r * a * wpp + phi_unchecked(r, w, a) * wp + w * one_minus_w2(w))
}

/// Residual of the `A` equation: `r A' + (1 + 2w'²) A - 1 + (1 - w²)²/r²`.
pub fn residual_2b(r: f64, w: f64, wp: f64, a: f64, ap: f64) -> Result<f64> {
    check_radius("residual_2b", r)?;
    let q = one_minus_w2(w);
    Ok(r * ap + (1.0 + 2.0 * wp * wp) * a - 1.0 + q * q / (r * r))
}

/// The exact family `(w, A) = (0, 1 + 1/r² - c/r)`.
pub fn rn_solution(c: f64, r: f64) -> Result<FieldState> {
    check_radius("rn_solution", r)?;
    Ok(FieldState { r, w: 0.0, wp: 0.0, a: 1.0 + 1.0 / (r * r) - c / r })
}

/// `dA/dr` of [`rn_solution`], from the closed form.
pub fn rn_solution_da(c: f64, r: f64) -> Result<f64> {
    check_radius("rn_solution_da", r)?;
    Ok(-2.0 / (r * r * r) + c / (r * r))
}

/// `|F|² = 2w'²/r² + (1 - w²)²/r⁴`.
pub fn f_norm_sq(s: &FieldState) -> Result<f64> {
    check_radius("f_norm_sq", s.r)?;
    let q = one_minus_w2(s.w);
    let r2 = s.r * s.r;
    Ok(2.0 * s.wp * s.wp / r2 + q * q / (r2 * r2))
}

/// `|F|²` with the radial metric factor: `2Aw'²/r² + (1 - w²)²/r⁴`.
pub fn f_norm_sq_metric(s: &FieldState) -> Result<f64> {
    check_radius("f_norm_sq_metric", s.r)?;
    let q = one_minus_w2(s.w);
    let r2 = s.r * s.r;
    Ok(2.0 * s.a * s.wp * s.wp / r2 + q * q / (r2 * r2))
}

/// `v = A w'`, stays bounded where `w'` grows as `A` collapses.
pub fn v_diag(s: &FieldState) -> f64 {
    s.a * s.wp
}

/// A first-order right-hand side in `(w, w', A)`.
///
/// [`EymSystem`] is the physical system; other implementations exist for
/// negative controls.
pub trait RadialSystem: Sync {
    fn rhs(&self, s: &FieldState) -> Result<DerivativeState>;
}

#[derive(Debug, Clone, Copy, Default)]
pub struct EymSystem;

impl RadialSystem for EymSystem {
    #[inline]
    fn rhs(&self, s: &FieldState) -> Result<DerivativeState> {
        field_rhs(s)
    }
}

/// The field equations with the sign of the `Φ w'` term flipped.
#[derive(Debug, Clone, Copy, Default)]
pub struct CorruptedSystem;

impl RadialSystem for CorruptedSystem {
    fn rhs(&self, s: &FieldState) -> Result<DerivativeState> {
        let mut d = field_rhs(s)?;
        let phi = phi_unchecked(s.r, s.w, s.a);
        d.dwp += 2.0 * phi * s.wp / (s.r * s.r * s.a);
        Ok(d)
    }
}

impl<S: RadialSystem + ?Sized> RadialSystem for &S {
    fn rhs(&self, s: &FieldState) -> Result<DerivativeState> {
        (**self).rhs(s)
    }
}
