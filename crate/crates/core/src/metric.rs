//! Metric reconstruction and far-field diagnostics.
//!
//! `T` follows from the linear homogeneous equation
//! `2rA T' + (2w'²A + Φ/r) T = 0`, i.e.
//! `(ln T)' = -(2w'²A + Φ/r) / (2rA)`, integrated along the profile samples
//! and normalized so that `T = 1` at the outermost sample. Near the origin
//! `2w'²A + Φ/r = O(r²)`, so `(ln T)'` vanishes linearly and `T'(0) = 0`.
//!
//! Mass is reported in two conventions: `μ = lim r(1 - A)` and the
//! Schwarzschild-style `m = μ/2` (with `A ~ 1 - 2m/r`).

use serde::{Deserialize, Serialize};

use crate::error::{EymError, Result};
use crate::integrator::{OrbitFate, SolutionProfile};
use crate::system::{f_norm_sq, f_norm_sq_metric, phi, FieldState};

/// `(ln T)'` at one sample.
pub fn log_t_derivative(s: &FieldState) -> Result<f64> {
    if s.a.is_nan() || s.a <= 0.0 {
        return Err(EymError::NonPositiveA { op: "log_t_derivative", r: s.r, a: s.a });
    }
    let phi = phi(s)?;
    Ok(-(2.0 * s.wp * s.wp * s.a + phi / s.r) / (2.0 * s.r * s.a))
}

/// `(r, (ln T)')` at every sample.
pub fn log_t_derivative_samples(profile: &SolutionProfile) -> Result<Vec<(f64, f64)>> {
    profile.samples.iter().map(|s| Ok((s.r, log_t_derivative(s)?))).collect()
}

/// Integral over `[x[i], x[i+1]]` of the cubic through the four stencil points
/// around the interval (fewer when the profile is short).
fn interval_integral(x: &[f64], y: &[f64], i: usize) -> f64 {
    const GL_NODES: [f64; 3] = [-0.774_596_669_241_483_4, 0.0, 0.774_596_669_241_483_4];
    const GL_WEIGHTS: [f64; 3] = [5.0 / 9.0, 8.0 / 9.0, 5.0 / 9.0];
    let n = x.len();
    let width = n.min(4);
    let j0 = i.saturating_sub(1).min(n - width);
    let xs = &x[j0..j0 + width];
    let ys = &y[j0..j0 + width];
    let lagrange = |t: f64| -> f64 {
        let mut sum = 0.0;
        for (k, (&xk, &yk)) in xs.iter().zip(ys).enumerate() {
            let mut basis = 1.0;
            for (m, &xm) in xs.iter().enumerate() {
                if m != k {
                    basis *= (t - xm) / (xk - xm);
                }
            }
            sum += yk * basis;
        }
        sum
    };
    let (a, b) = (x[i], x[i + 1]);
    let half = 0.5 * (b - a);
    let mid = 0.5 * (a + b);
    half * GL_NODES.iter().zip(GL_WEIGHTS).map(|(&t, wgt)| wgt * lagrange(mid + half * t)).sum::<f64>()
}

/// `(r, T)` along the profile with `T = 1` at the last sample.
pub fn integrate_t(profile: &SolutionProfile) -> Result<Vec<(f64, f64)>> {
    let g = log_t_derivative_samples(profile)?;
    let x: Vec<f64> = g.iter().map(|p| p.0).collect();
    let y: Vec<f64> = g.iter().map(|p| p.1).collect();
    let n = x.len();
    let mut log_t = vec![0.0; n];
    for i in (0..n.saturating_sub(1)).rev() {
        log_t[i] = log_t[i + 1] - interval_integral(&x, &y, i);
    }
    Ok(x.into_iter().zip(log_t).map(|(r, l)| (r, l.exp())).collect())
}

/// `(r, m)` with `m = r(1 - A)/2`.
pub fn mass_function(profile: &SolutionProfile) -> Vec<(f64, f64)> {
    profile.samples.iter().map(|s| (s.r, 0.5 * s.r * (1.0 - s.a))).collect()
}

/// Largest decrease of `m` between consecutive samples with `A > 0`
/// (zero when `m` is non-decreasing).
pub fn worst_mass_drop(profile: &SolutionProfile) -> f64 {
    let m: Vec<f64> = profile.samples.iter().filter(|s| s.a > 0.0).map(|s| 0.5 * s.r * (1.0 - s.a)).collect();
    m.windows(2).map(|p| p[0] - p[1]).fold(0.0, f64::max)
}

/// Least-squares fit `y = c0 + c1/r` over samples with `r ∈ [lo, hi]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InverseRadiusFit {
    pub c0: f64,
    pub c1: f64,
    pub window: (f64, f64),
    pub samples: usize,
    /// Largest absolute residual of the fit.
    pub max_residual: f64,
}

pub const MIN_FIT_SAMPLES: usize = 3;

pub fn fit_inverse_radius(
    op: &'static str,
    points: impl IntoIterator<Item = (f64, f64)>,
    lo: f64,
    hi: f64,
) -> Result<InverseRadiusFit> {
    let pts: Vec<(f64, f64)> =
        points.into_iter().filter(|(r, _)| *r >= lo && *r <= hi).map(|(r, y)| (1.0 / r, y)).collect();
    if pts.len() < MIN_FIT_SAMPLES {
        return Err(EymError::InsufficientSamples { op, found: pts.len(), needed: MIN_FIT_SAMPLES, lo, hi });
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let c1 = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    let c0 = my - c1 * mx;
    let max_residual = pts.iter().map(|p| (p.1 - c0 - c1 * p.0).abs()).fold(0.0, f64::max);
    Ok(InverseRadiusFit { c0, c1, window: (lo, hi), samples: pts.len(), max_residual })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdmMass {
    /// `lim r(1 - A)`.
    pub mu: f64,
    /// `μ/2`, the mass in the `A ~ 1 - 2m/r` convention.
    pub m_schwarzschild: f64,
    pub convention_note: String,
    pub fit: InverseRadiusFit,
    /// Same fit on a window shifted inward by a factor of two.
    pub shifted_fit: InverseRadiusFit,
    /// `|μ - μ_shifted| / |μ|` (zero when both vanish).
    pub relative_drift: f64,
}

fn relative_difference(a: f64, b: f64) -> f64 {
    let d = (a - b).abs();
    if d == 0.0 {
        0.0
    } else {
        d / a.abs().max(b.abs())
    }
}

/// Far-field fit of `r(1 - A)` without any fate precondition.
pub fn far_field_mass(profile: &SolutionProfile) -> Result<AdmMass> {
    let r_end = profile.last().r;
    let pts = || profile.samples.iter().map(|s| (s.r, s.r * (1.0 - s.a)));
    let fit = fit_inverse_radius("adm_mass", pts(), r_end / 10.0, r_end)?;
    let shifted_fit = fit_inverse_radius("adm_mass", pts(), r_end / 20.0, r_end / 2.0)?;
    Ok(AdmMass {
        mu: fit.c0,
        m_schwarzschild: 0.5 * fit.c0,
        convention_note: "mu = lim r(1-A); m_schwarzschild = mu/2 with A ~ 1 - 2m/r".into(),
        relative_drift: relative_difference(fit.c0, shifted_fit.c0),
        fit,
        shifted_fit,
    })
}

fn require_in_gamma(op: &'static str, profile: &SolutionProfile) -> Result<()> {
    match profile.fate {
        OrbitFate::StayedInGamma { .. } | OrbitFate::RestPoint => Ok(()),
        fate => Err(EymError::WrongFate { op, fate: Box::new(fate) }),
    }
}

/// ADM mass from a profile that reached `r_max` inside Γ.
pub fn adm_mass(profile: &SolutionProfile) -> Result<AdmMass> {
    require_in_gamma("adm_mass", profile)?;
    far_field_mass(profile)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FlatnessTolerances {
    /// Slack on `|A(r_end) - 1|` beyond the `2μ/r_end` allowance.
    pub a_tol: f64,
    /// Relative agreement of the fitted `1/r` coefficient of `T - 1` with `μ/2`.
    pub t_coefficient_rel: f64,
    /// Largest fit residual of `T - 1`, relative to `max |T - 1|` on the window.
    pub t_fit_rel: f64,
}

impl Default for FlatnessTolerances {
    fn default() -> Self {
        Self { a_tol: 1e-3, t_coefficient_rel: 0.05, t_fit_rel: 0.05 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FlatnessReport {
    pub r_end: f64,
    pub a_end: f64,
    pub a_bound: f64,
    pub a_margin: f64,
    pub a_ok: bool,
    pub t_end: f64,
    pub t_fit: InverseRadiusFit,
    pub t_coefficient_expected: f64,
    pub t_coefficient_margin: f64,
    pub t_fit_margin: f64,
    pub t_ok: bool,
    pub passed: bool,
    pub tolerances: FlatnessTolerances,
}

const ROUNDOFF: f64 = 1e-12;

/// Checks `A → 1` and `T → 1` at the outer edge of the profile.
pub fn flatness_report(
    profile: &SolutionProfile,
    t_samples: &[(f64, f64)],
    tol: &FlatnessTolerances,
) -> Result<FlatnessReport> {
    require_in_gamma("flatness_report", profile)?;
    let mass = far_field_mass(profile)?;
    let last = profile.last();
    let a_bound = 2.0 * mass.mu.abs() / last.r + tol.a_tol;
    let a_margin = a_bound - (last.a - 1.0).abs();

    let r_end = last.r;
    let t_fit = fit_inverse_radius(
        "flatness_report",
        t_samples.iter().map(|&(r, t)| (r, t - 1.0)),
        r_end / 10.0,
        r_end,
    )?;
    let t_scale = t_samples
        .iter()
        .filter(|(r, _)| *r >= r_end / 10.0)
        .map(|(_, t)| (t - 1.0).abs())
        .fold(0.0, f64::max);
    let expected = 0.5 * mass.mu;
    let t_coefficient_margin =
        tol.t_coefficient_rel * expected.abs() + ROUNDOFF - (t_fit.c1 - expected).abs();
    let t_fit_margin = tol.t_fit_rel * t_scale + ROUNDOFF - t_fit.max_residual;
    let t_end = t_samples.last().map_or(f64::NAN, |p| p.1);

    let a_ok = a_margin >= 0.0;
    let t_ok = t_coefficient_margin >= 0.0 && t_fit_margin >= 0.0 && t_end == 1.0;
    Ok(FlatnessReport {
        r_end,
        a_end: last.a,
        a_bound,
        a_margin,
        a_ok,
        t_end,
        t_fit,
        t_coefficient_expected: expected,
        t_coefficient_margin,
        t_fit_margin,
        t_ok,
        passed: a_ok && t_ok,
        tolerances: *tol,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub t_samples: Vec<(f64, f64)>,
    pub mass_samples: Vec<(f64, f64)>,
    pub worst_mass_drop: f64,
    pub adm_mass: Option<AdmMass>,
    /// `(r, |F|²)` with the printed normalization.
    pub energy: Vec<(f64, f64)>,
    /// `(r, |F|²)` with the `A` factor on the `w'²` term.
    pub energy_metric: Vec<(f64, f64)>,
    /// Whether `|F|²` is non-increasing over the last decade (reported only).
    pub energy_tail_non_increasing: bool,
    pub flatness: Option<FlatnessReport>,
}

/// All metric diagnostics for a profile; far-field parts are present only for
/// orbits that stayed in Γ.
pub fn metric_report(profile: &SolutionProfile, tol: &FlatnessTolerances) -> Result<MetricReport> {
    let t_samples = integrate_t(profile)?;
    let mass_samples = mass_function(profile);
    let energy = profile.samples.iter().map(|s| Ok((s.r, f_norm_sq(s)?))).collect::<Result<Vec<_>>>()?;
    let energy_metric =
        profile.samples.iter().map(|s| Ok((s.r, f_norm_sq_metric(s)?))).collect::<Result<Vec<_>>>()?;
    let r_end = profile.last().r;
    let tail: Vec<f64> = energy.iter().filter(|(r, _)| *r >= r_end / 10.0).map(|p| p.1).collect();
    let energy_tail_non_increasing = tail.windows(2).all(|p| p[1] <= p[0] * (1.0 + 1e-12));
    let (adm_mass, flatness) = if require_in_gamma("metric_report", profile).is_ok() {
        (Some(adm_mass(profile)?), Some(flatness_report(profile, &t_samples, tol)?))
    } else {
        (None, None)
    };
    Ok(MetricReport {
        worst_mass_drop: worst_mass_drop(profile),
        t_samples,
        mass_samples,
        adm_mass,
        energy,
        energy_metric,
        energy_tail_non_increasing,
        flatness,
    })
}

/// Least-squares slope of `ln|y|` against `ln r` for `r ∈ [lo, hi]`.
pub fn log_log_slope(points: &[(f64, f64)], lo: f64, hi: f64) -> Option<(f64, usize)> {
    let pts: Vec<(f64, f64)> = points
        .iter()
        .filter(|(r, y)| *r >= lo && *r <= hi && *y != 0.0)
        .map(|(r, y)| (r.ln(), y.abs().ln()))
        .collect();
    if pts.len() < 2 {
        return None;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    (sxx > 0.0).then(|| (sxy / sxx, pts.len()))
}
