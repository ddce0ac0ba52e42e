//! Adaptive integration of a single orbit from the ignition radius and
//! classification of how it leaves the region `Γ = {w² ≤ 1, w' ≤ 0}`.
//!
//! An orbit stops at the first of these events, located on the dense output:
//!
//! * `w` reaches `-1` (exit through the lower edge of Γ),
//! * `w'` returns to zero with `-1 < w < 1`,
//! * `A` drops to `a_min`,
//! * `|w'|` reaches `wp_blowup`, or the step size collapses below `min_step`,
//! * `r` reaches `r_max` while still inside Γ.

use serde::{Deserialize, Serialize};

use crate::error::{EymError, Result};
use crate::rk::{trial_step, Controller, DenseSegment, Scheme, Vec3};
use crate::series::{launch_state, MAX_IGNITION_RADIUS};
use crate::system::{v_diag, EymSystem, FieldState, RadialSystem, ShootingParameter};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IntegrationConfig {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub r_max: f64,
    /// Terminal threshold for `A`.
    pub a_min: f64,
    /// Terminal threshold for `|w'|`.
    pub wp_blowup: f64,
    pub min_step: f64,
    pub max_steps: usize,
    pub r0: f64,
    pub series_order: u32,
    pub scheme: Scheme,
}

impl Default for IntegrationConfig {
    fn default() -> Self {
        Self {
            rel_tol: 1e-10,
            abs_tol: 1e-12,
            r_max: 1e3,
            a_min: 1e-14,
            wp_blowup: 1e6,
            min_step: 1e-14,
            max_steps: 2_000_000,
            r0: 1e-3,
            series_order: 4,
            scheme: Scheme::DormandPrince54,
        }
    }
}

impl IntegrationConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(EymError::InvalidConfig(msg));
        let finite = [
            ("rel_tol", self.rel_tol),
            ("abs_tol", self.abs_tol),
            ("r_max", self.r_max),
            ("a_min", self.a_min),
            ("wp_blowup", self.wp_blowup),
            ("min_step", self.min_step),
            ("r0", self.r0),
        ];
        if let Some((name, v)) = finite.iter().find(|(_, v)| !v.is_finite()) {
            return bad(format!("{name} = {v} is not finite"));
        }
        if !(self.rel_tol > 0.0 && self.abs_tol > 0.0) {
            return bad(format!("tolerances must be positive (rel {}, abs {})", self.rel_tol, self.abs_tol));
        }
        if !(self.r0 > 0.0 && self.r0 <= MAX_IGNITION_RADIUS) {
            return bad(format!("r0 = {} outside (0, {MAX_IGNITION_RADIUS}]", self.r0));
        }
        if self.r_max <= self.r0 {
            return bad(format!("r_max = {} must exceed r0 = {}", self.r_max, self.r0));
        }
        if self.a_min <= 0.0 {
            return bad(format!("a_min = {} must be positive", self.a_min));
        }
        if self.wp_blowup <= 1.0 {
            return bad(format!("wp_blowup = {} must exceed 1", self.wp_blowup));
        }
        if self.min_step <= 0.0 {
            return bad(format!("min_step = {} must be positive", self.min_step));
        }
        if self.max_steps == 0 {
            return bad("max_steps must be positive".into());
        }
        if !matches!(self.series_order, 2 | 4) {
            return bad(format!("series_order = {} must be 2 or 4", self.series_order));
        }
        Ok(())
    }

    /// Same config with both tolerances scaled by `factor`.
    pub fn with_tolerance_scale(mut self, factor: f64) -> Self {
        self.rel_tol *= factor;
        self.abs_tol *= factor;
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BlowUpCause {
    Threshold,
    StepCollapse,
    NonFinite,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum OrbitFate {
    /// `w` reached `-1` with `w' < 0`.
    #[serde(rename = "exit_w_minus_one")]
    ExitThroughWMinusOne { r_exit: f64 },
    /// `w'` returned to zero inside the strip.
    WPrimeVanished { r: f64, w: f64 },
    /// `A` fell to the terminal threshold.
    AVanished { r: f64, w: f64 },
    /// `w'` became unbounded.
    #[serde(rename = "derivative_blow_up")]
    DerivativeBlowUp { r: f64, w: f64, cause: BlowUpCause },
    /// Reached `r_max` without leaving Γ (truncated).
    StayedInGamma { r_reached: f64 },
    /// `λ = 0`: the flat solution.
    RestPoint,
}

impl OrbitFate {
    pub fn label(&self) -> &'static str {
        match self {
            OrbitFate::ExitThroughWMinusOne { .. } => "exit_w_minus_one",
            OrbitFate::WPrimeVanished { .. } => "w_prime_vanished",
            OrbitFate::AVanished { .. } => "a_vanished",
            OrbitFate::DerivativeBlowUp { .. } => "derivative_blow_up",
            OrbitFate::StayedInGamma { .. } => "stayed_in_gamma",
            OrbitFate::RestPoint => "rest_point",
        }
    }

    pub fn exits_through_w_minus_one(&self) -> bool {
        matches!(self, OrbitFate::ExitThroughWMinusOne { .. })
    }

    /// Radius of the terminal event, if any.
    pub fn radius(&self) -> Option<f64> {
        match *self {
            OrbitFate::ExitThroughWMinusOne { r_exit } => Some(r_exit),
            OrbitFate::WPrimeVanished { r, .. }
            | OrbitFate::AVanished { r, .. }
            | OrbitFate::DerivativeBlowUp { r, .. } => Some(r),
            OrbitFate::StayedInGamma { r_reached } => Some(r_reached),
            OrbitFate::RestPoint => None,
        }
    }

    /// Same variant, ignoring payloads.
    pub fn same_kind(&self, other: &OrbitFate) -> bool {
        std::mem::discriminant(self) == std::mem::discriminant(other)
    }
}

impl std::fmt::Display for OrbitFate {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            OrbitFate::ExitThroughWMinusOne { r_exit } => write!(f, "exit_w_minus_one r={r_exit:.10}"),
            OrbitFate::WPrimeVanished { r, w } => write!(f, "w_prime_vanished r={r:.10} w={w:.10}"),
            OrbitFate::AVanished { r, w } => write!(f, "a_vanished r={r:.10} w={w:.10}"),
            OrbitFate::DerivativeBlowUp { r, w, cause } => {
                write!(f, "derivative_blow_up r={r:.10} w={w:.10} cause={cause:?}")
            }
            OrbitFate::StayedInGamma { r_reached } => write!(f, "stayed_in_gamma r={r_reached:.10}"),
            OrbitFate::RestPoint => write!(f, "rest_point"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    pub min_a: f64,
    pub min_wp: f64,
    pub max_abs_wp: f64,
    /// Sign changes of `w` across the samples.
    pub node_count: usize,
    pub max_abs_v: f64,
    pub accepted_steps: usize,
    pub rejected_steps: usize,
    pub rhs_evals: usize,
    pub min_step: f64,
    pub max_step: f64,
    pub truncation_estimate: f64,
}

impl Diagnostics {
    fn new(start: &FieldState, truncation_estimate: f64) -> Self {
        Self {
            min_a: start.a,
            min_wp: start.wp,
            max_abs_wp: start.wp.abs(),
            node_count: 0,
            max_abs_v: v_diag(start).abs(),
            accepted_steps: 0,
            rejected_steps: 0,
            rhs_evals: 1,
            min_step: f64::INFINITY,
            max_step: 0.0,
            truncation_estimate,
        }
    }

    fn record(&mut self, prev: &FieldState, s: &FieldState) {
        self.min_a = self.min_a.min(s.a);
        self.min_wp = self.min_wp.min(s.wp);
        self.max_abs_wp = self.max_abs_wp.max(s.wp.abs());
        self.max_abs_v = self.max_abs_v.max(v_diag(s).abs());
        if (prev.w > 0.0 && s.w <= 0.0) || (prev.w < 0.0 && s.w >= 0.0) {
            // A sample landing exactly on zero counts once, on the way in.
            if prev.w != 0.0 {
                self.node_count += 1;
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolutionProfile {
    pub lambda: f64,
    pub samples: Vec<FieldState>,
    pub fate: OrbitFate,
    pub diagnostics: Diagnostics,
}

impl SolutionProfile {
    pub fn last(&self) -> &FieldState {
        self.samples.last().expect("profiles always hold the launch sample")
    }

    /// Builds a profile from externally supplied samples, recomputing diagnostics.
    pub fn from_samples(lambda: f64, samples: Vec<FieldState>, fate: OrbitFate) -> Result<Self> {
        let first = *samples
            .first()
            .ok_or_else(|| EymError::domain("SolutionProfile::from_samples", "no samples"))?;
        if samples.windows(2).any(|p| p[1].r.partial_cmp(&p[0].r) != Some(std::cmp::Ordering::Greater)) {
            return Err(EymError::domain("SolutionProfile::from_samples", "radii not strictly increasing"));
        }
        let mut diagnostics = Diagnostics::new(&first, 0.0);
        diagnostics.rhs_evals = 0;
        for p in samples.windows(2) {
            diagnostics.record(&p[0], &p[1]);
        }
        Ok(Self { lambda, samples, fate, diagnostics })
    }
}

/// Integrates the orbit with shooting parameter `lambda`.
pub fn integrate_orbit(lambda: f64, cfg: &IntegrationConfig) -> Result<SolutionProfile> {
    integrate_orbit_with(&EymSystem, lambda, cfg)
}

#[derive(Clone, Copy)]
enum Event {
    Exit,
    WPrimeZero,
    AFloor,
    Blowup,
}

impl Event {
    const ALL: [Event; 4] = [Event::Exit, Event::WPrimeZero, Event::AFloor, Event::Blowup];

    fn triggered(self, y: &Vec3, cfg: &IntegrationConfig) -> bool {
        match self {
            Event::Exit => y[0] <= -1.0,
            Event::WPrimeZero => y[1] >= 0.0,
            Event::AFloor => y[2] <= cfg.a_min,
            Event::Blowup => y[1].abs() >= cfg.wp_blowup,
        }
    }

    fn fate(self, s: &FieldState) -> OrbitFate {
        match self {
            Event::Exit => OrbitFate::ExitThroughWMinusOne { r_exit: s.r },
            Event::WPrimeZero => OrbitFate::WPrimeVanished { r: s.r, w: s.w },
            Event::AFloor => OrbitFate::AVanished { r: s.r, w: s.w },
            Event::Blowup => OrbitFate::DerivativeBlowUp { r: s.r, w: s.w, cause: BlowUpCause::Threshold },
        }
    }
}

/// Smallest radius in the step at which `event` holds, by bisection on the
/// dense output down to relative width `rel_tol`.
fn locate(event: Event, seg: &DenseSegment, cfg: &IntegrationConfig) -> FieldState {
    let mut lo = seg.start();
    let mut hi = seg.end();
    let mut y_hi = seg.at(hi);
    for _ in 0..200 {
        if hi - lo <= cfg.rel_tol * hi.abs() {
            break;
        }
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let y = seg.at(mid);
        if event.triggered(&y, cfg) {
            hi = mid;
            y_hi = y;
        } else {
            lo = mid;
        }
    }
    FieldState::from_fields(hi, y_hi)
}

/// [`integrate_orbit`] for an arbitrary right-hand side.
pub fn integrate_orbit_with<S: RadialSystem>(
    sys: &S,
    lambda: f64,
    cfg: &IntegrationConfig,
) -> Result<SolutionProfile> {
    cfg.validate()?;
    let lambda = ShootingParameter::new(lambda)?.value();
    let start = launch_state(lambda, cfg.r0, cfg.series_order)?;
    let rest = lambda == 0.0;

    let mut diag = Diagnostics::new(&start.state, start.truncation_estimate);
    let mut samples = vec![start.state];
    let mut r = start.state.r;
    let mut y = start.state.fields();
    let mut f0 = sys.rhs(&start.state)?.as_array();
    let mut h = 0.01 * cfg.r0;
    let mut ctrl = Controller::new(cfg.scheme);
    let mut prev = start.state;

    let fate = loop {
        if diag.accepted_steps + diag.rejected_steps >= cfg.max_steps {
            return Err(EymError::StepLimit { max_steps: cfg.max_steps, r });
        }
        let remaining = cfg.r_max - r;
        let clipped = h >= remaining;
        let h_try = if clipped { remaining } else { h };
        if !clipped && h_try < cfg.min_step {
            break OrbitFate::DerivativeBlowUp { r, w: y[0], cause: BlowUpCause::StepCollapse };
        }

        let trial = match trial_step(cfg.scheme, sys, r, &y, &f0, h_try, cfg.rel_tol, cfg.abs_tol) {
            Ok(t) => t,
            Err(_) => {
                diag.rejected_steps += 1;
                h = h_try * ctrl.reject(f64::INFINITY);
                continue;
            }
        };
        diag.rhs_evals += trial.evals;
        let err = if trial.err.is_nan() { f64::INFINITY } else { trial.err };
        if err > 1.0 {
            diag.rejected_steps += 1;
            h = h_try * ctrl.reject(err);
            continue;
        }

        diag.accepted_steps += 1;
        diag.min_step = diag.min_step.min(h_try);
        diag.max_step = diag.max_step.max(h_try);
        let r_new = if clipped { cfg.r_max } else { r + h_try };

        if !rest {
            let hit = Event::ALL
                .iter()
                .filter(|e| e.triggered(&trial.y1, cfg))
                .map(|&e| (e, locate(e, &trial.dense, cfg)))
                .min_by(|a, b| a.1.r.total_cmp(&b.1.r));
            if let Some((event, state)) = hit {
                let state = if state.r > r { state } else { FieldState::from_fields(r_new, trial.y1) };
                diag.record(&prev, &state);
                samples.push(state);
                break event.fate(&state);
            }
        }

        let state = FieldState::from_fields(r_new, trial.y1);
        if !state.is_finite() {
            break OrbitFate::DerivativeBlowUp { r, w: y[0], cause: BlowUpCause::NonFinite };
        }
        diag.record(&prev, &state);
        samples.push(state);
        prev = state;
        r = r_new;
        y = trial.y1;
        f0 = trial.f1;

        if clipped {
            break if rest { OrbitFate::RestPoint } else { OrbitFate::StayedInGamma { r_reached: r } };
        }
        h = h_try * ctrl.accept(err);
    };

    Ok(SolutionProfile { lambda, samples, fate, diagnostics: diag })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Theorem1Report {
    pub lambda: f64,
    pub fate: OrbitFate,
    pub min_a: f64,
    pub min_wp: f64,
    /// `(r, w)` where `w'` returned to zero, when that is how the orbit left Γ.
    pub wp_turned_positive_at: Option<(f64, f64)>,
    pub passed: bool,
    pub detail: String,
}

/// While the orbit stays in Γ, `A` stays positive and `w'` stays bounded below
/// for `0 ≤ λ ≤ 1`.
pub fn theorem1_check(lambda: f64, cfg: &IntegrationConfig) -> Result<Theorem1Report> {
    theorem1_check_with(&EymSystem, lambda, cfg)
}

pub fn theorem1_check_with<S: RadialSystem>(
    sys: &S,
    lambda: f64,
    cfg: &IntegrationConfig,
) -> Result<Theorem1Report> {
    if !(0.0..=1.0).contains(&lambda) {
        return Err(EymError::domain("theorem1_check", format!("lambda = {lambda} outside [0, 1]")));
    }
    let profile = integrate_orbit_with(sys, lambda, cfg)?;
    let d = &profile.diagnostics;
    let bad_fate = matches!(profile.fate, OrbitFate::AVanished { .. } | OrbitFate::DerivativeBlowUp { .. });
    let passed = d.min_a > 0.0 && d.min_wp.is_finite() && !bad_fate;
    let wp_turned_positive_at = match profile.fate {
        OrbitFate::WPrimeVanished { r, w } => Some((r, w)),
        _ => None,
    };
    let detail = if passed {
        format!("min A = {:.6e}, min w' = {:.6e}", d.min_a, d.min_wp)
    } else if bad_fate {
        format!("orbit failed inside Gamma: {}", profile.fate)
    } else {
        format!("min A = {:.6e} not positive or w' unbounded", d.min_a)
    };
    Ok(Theorem1Report {
        lambda,
        fate: profile.fate,
        min_a: d.min_a,
        min_wp: d.min_wp,
        wp_turned_positive_at,
        passed,
        detail,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Theorem2Report {
    pub lambda: f64,
    pub fate: OrbitFate,
    pub r_event: Option<f64>,
    pub w_event: f64,
    pub max_abs_v: f64,
    /// Event radius with `wp_blowup` doubled.
    pub r_event_doubled_threshold: Option<f64>,
    pub relative_shift: f64,
    pub passed: bool,
    pub detail: String,
}

/// Maximum relative shift of the blow-up radius when the threshold doubles.
pub const BLOWUP_ROBUSTNESS: f64 = 0.01;

/// For `λ > 2` the orbit blows up inside Γ.
pub fn theorem2_check(lambda: f64, cfg: &IntegrationConfig) -> Result<Theorem2Report> {
    theorem2_check_with(&EymSystem, lambda, cfg)
}

pub fn theorem2_check_with<S: RadialSystem>(
    sys: &S,
    lambda: f64,
    cfg: &IntegrationConfig,
) -> Result<Theorem2Report> {
    if !(lambda > 2.0 && lambda.is_finite()) {
        return Err(EymError::domain("theorem2_check", format!("lambda = {lambda} must exceed 2")));
    }
    let profile = integrate_orbit_with(sys, lambda, cfg)?;
    let mut doubled = *cfg;
    doubled.wp_blowup *= 2.0;
    let profile2 = integrate_orbit_with(sys, lambda, &doubled)?;

    let last = profile.last();
    let in_strip = last.w * last.w <= 1.0;
    let fate_ok = match profile.fate {
        OrbitFate::DerivativeBlowUp { .. } => true,
        OrbitFate::AVanished { .. } => {
            profile.diagnostics.max_abs_v.is_finite() && profile.diagnostics.max_abs_wp >= cfg.wp_blowup
        }
        _ => false,
    };
    let r_event = profile.fate.radius();
    let r_event2 = profile2.fate.radius();
    let relative_shift = match (r_event, r_event2) {
        (Some(a), Some(b)) => (a - b).abs() / a.abs(),
        _ => f64::INFINITY,
    };
    let robust = relative_shift < BLOWUP_ROBUSTNESS && profile.fate.same_kind(&profile2.fate);
    let passed = fate_ok && in_strip && robust;
    let detail = if passed {
        format!("{} (shift {:.3e} with doubled threshold)", profile.fate, relative_shift)
    } else if !fate_ok {
        format!("expected blow-up, got {}", profile.fate)
    } else if !in_strip {
        format!("w = {} outside [-1, 1] at termination", last.w)
    } else {
        format!(
            "event radius not threshold-robust: {} vs {} (shift {:.3e})",
            profile.fate, profile2.fate, relative_shift
        )
    };
    Ok(Theorem2Report {
        lambda,
        fate: profile.fate,
        r_event,
        w_event: last.w,
        max_abs_v: profile.diagnostics.max_abs_v,
        r_event_doubled_threshold: r_event2,
        relative_shift,
        passed,
        detail,
    })
}
