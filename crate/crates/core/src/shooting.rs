//! Fate sweeps and bisection for the connecting parameter `λ̄`.
//!
//! `λ̄` is the boundary of the set of `λ` whose orbits exit Γ through
//! `w = -1`. The bisection predicate is exactly that exit; every other fate
//! counts as "does not exit through the line". Since the exit set is not known
//! to be an interval, the result is a bracket boundary, and [`sweep`] gives the
//! empirical fate record.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{EymError, Result};
use crate::integrator::{integrate_orbit_with, IntegrationConfig, OrbitFate, SolutionProfile};
use crate::metric::{far_field_mass, AdmMass};
use crate::system::{EymSystem, RadialSystem};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FateSummary {
    pub min_a: f64,
    pub min_wp: f64,
    pub node_count: usize,
    pub max_abs_v: f64,
    pub r_end: f64,
    pub w_end: f64,
    pub wp_end: f64,
    pub a_end: f64,
    pub accepted_steps: usize,
}

impl FateSummary {
    fn of(p: &SolutionProfile) -> Self {
        let last = p.last();
        Self {
            min_a: p.diagnostics.min_a,
            min_wp: p.diagnostics.min_wp,
            node_count: p.diagnostics.node_count,
            max_abs_v: p.diagnostics.max_abs_v,
            r_end: last.r,
            w_end: last.w,
            wp_end: last.wp,
            a_end: last.a,
            accepted_steps: p.diagnostics.accepted_steps,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FateEntry {
    pub lambda: f64,
    pub fate: Option<OrbitFate>,
    pub summary: Option<FateSummary>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FateMap {
    pub entries: Vec<FateEntry>,
}

impl FateMap {
    /// Adjacent grid pairs where the exit predicate flips.
    pub fn exit_transitions(&self) -> Vec<(f64, f64)> {
        self.entries
            .windows(2)
            .filter_map(|p| match (&p[0].fate, &p[1].fate) {
                (Some(a), Some(b)) if a.exits_through_w_minus_one() != b.exits_through_w_minus_one() => {
                    Some((p[0].lambda, p[1].lambda))
                }
                _ => None,
            })
            .collect()
    }
}

fn validate_grid(grid: &[f64]) -> Result<()> {
    if grid.is_empty() {
        return Err(EymError::domain("sweep", "empty lambda grid"));
    }
    if let Some(bad) = grid.iter().find(|l| !(l.is_finite() && **l >= 0.0)) {
        return Err(EymError::domain("sweep", format!("grid value {bad} must be finite and >= 0")));
    }
    if grid.windows(2).any(|p| p[1].partial_cmp(&p[0]) != Some(std::cmp::Ordering::Greater)) {
        return Err(EymError::domain("sweep", "grid must be strictly increasing"));
    }
    Ok(())
}

/// One orbit per grid value. Per-entry failures are recorded, not raised.
pub fn sweep(grid: &[f64], cfg: &IntegrationConfig) -> Result<FateMap> {
    sweep_with(&EymSystem, grid, cfg)
}

pub fn sweep_with<S: RadialSystem>(sys: &S, grid: &[f64], cfg: &IntegrationConfig) -> Result<FateMap> {
    validate_grid(grid)?;
    cfg.validate()?;
    let entries = grid
        .par_iter()
        .map(|&lambda| match integrate_orbit_with(sys, lambda, cfg) {
            Ok(p) => {
                FateEntry { lambda, fate: Some(p.fate), summary: Some(FateSummary::of(&p)), error: None }
            }
            Err(e) => FateEntry { lambda, fate: None, summary: None, error: Some(e.to_string()) },
        })
        .collect();
    Ok(FateMap { entries })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConnectionTolerances {
    pub tol_w: f64,
    pub tol_wp: f64,
    pub tol_a: f64,
}

impl Default for ConnectionTolerances {
    fn default() -> Self {
        Self { tol_w: 0.05, tol_wp: 0.01, tol_a: 0.01 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConnectionReport {
    pub r_end: f64,
    pub w_end: f64,
    pub wp_end: f64,
    pub a_end: f64,
    /// `|w + 1|` at the outer edge.
    pub w_residual: f64,
    pub wp_residual: f64,
    pub a_residual: f64,
    pub a_bound: f64,
    pub w_ok: bool,
    pub wp_ok: bool,
    pub a_ok: bool,
    pub mass: AdmMass,
    pub node_count: usize,
    pub tolerances: ConnectionTolerances,
    pub passed: bool,
}

/// Far-field limits `(w, w') → (-1, 0)` and `A → 1` on an orbit that stayed in Γ.
///
/// The reflection `w → -w` maps solutions to solutions, so the rest point
/// `w ≡ 1` passes as well when fed with `w ≡ -1`.
pub fn verify_connection(profile: &SolutionProfile, tol: &ConnectionTolerances) -> Result<ConnectionReport> {
    if !matches!(profile.fate, OrbitFate::StayedInGamma { .. }) {
        return Err(EymError::WrongFate { op: "verify_connection", fate: Box::new(profile.fate) });
    }
    let last = *profile.last();
    let mass = far_field_mass(profile)?;
    let w_residual = (last.w + 1.0).abs();
    let wp_residual = last.wp.abs();
    let a_residual = (last.a - 1.0).abs();
    let a_bound = tol.tol_a + 2.0 * mass.mu.abs() / last.r;
    let w_ok = w_residual <= tol.tol_w;
    let wp_ok = wp_residual <= tol.tol_wp;
    let a_ok = a_residual <= a_bound;
    Ok(ConnectionReport {
        r_end: last.r,
        w_end: last.w,
        wp_end: last.wp,
        a_end: last.a,
        w_residual,
        wp_residual,
        a_residual,
        a_bound,
        w_ok,
        wp_ok,
        a_ok,
        passed: w_ok && wp_ok && a_ok && mass.mu.is_finite(),
        mass,
        node_count: profile.diagnostics.node_count,
        tolerances: *tol,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BisectionStep {
    pub lo: f64,
    pub hi: f64,
    pub mid: f64,
    pub fate: OrbitFate,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShootingResult {
    pub lambda_lo: f64,
    pub lambda_hi: f64,
    pub lambda_bar: f64,
    pub fate_lo: OrbitFate,
    pub fate_hi: OrbitFate,
    /// Bisection steps needed to bring the bracket below the tolerance.
    pub iterations: usize,
    /// Extra steps taken until the midpoint orbit reached `r_max` inside Γ.
    pub polish_iterations: usize,
    pub tol: f64,
    pub history: Vec<BisectionStep>,
    pub profile: SolutionProfile,
    pub connection: Option<ConnectionReport>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ShootingOptions {
    pub max_iterations: usize,
    /// Cap on bisection steps past the tolerance while looking for a
    /// midpoint orbit that stays in Γ out to `r_max`.
    pub max_polish: usize,
    pub connection: ConnectionTolerances,
}

impl Default for ShootingOptions {
    fn default() -> Self {
        Self { max_iterations: 200, max_polish: 40, connection: ConnectionTolerances::default() }
    }
}

pub const DEFAULT_BRACKET: (f64, f64) = (0.1, 2.0);

pub fn find_lambda_bar(lo: f64, hi: f64, tol: f64, cfg: &IntegrationConfig) -> Result<ShootingResult> {
    find_lambda_bar_with(&EymSystem, lo, hi, tol, cfg, &ShootingOptions::default())
}

pub fn find_lambda_bar_with<S: RadialSystem>(
    sys: &S,
    lo: f64,
    hi: f64,
    tol: f64,
    cfg: &IntegrationConfig,
    opts: &ShootingOptions,
) -> Result<ShootingResult> {
    cfg.validate()?;
    if !(tol > 0.0 && tol.is_finite()) {
        return Err(EymError::domain("find_lambda_bar", format!("tolerance {tol} must be positive")));
    }
    if !(lo >= 0.0 && hi > lo && hi.is_finite()) {
        return Err(EymError::domain(
            "find_lambda_bar",
            format!("bracket ({lo}, {hi}) must satisfy 0 <= lo < hi"),
        ));
    }
    let mut fate_lo = integrate_orbit_with(sys, lo, cfg)?.fate;
    let mut fate_hi = integrate_orbit_with(sys, hi, cfg)?.fate;
    if !fate_lo.exits_through_w_minus_one() || fate_hi.exits_through_w_minus_one() {
        return Err(EymError::InvalidBracket {
            lo,
            hi,
            fate_lo: Box::new(fate_lo),
            fate_hi: Box::new(fate_hi),
        });
    }

    let (mut lo, mut hi) = (lo, hi);
    let mut history = Vec::new();
    let mut iterations = 0;
    let mut polish_iterations = 0;
    let mut connected: Option<SolutionProfile> = None;

    loop {
        let converged = hi - lo <= tol;
        if converged && polish_iterations >= opts.max_polish {
            break;
        }
        if !converged && iterations >= opts.max_iterations {
            return Err(EymError::ToleranceUnreachable { tol, iterations, width: hi - lo });
        }
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            if converged {
                break;
            }
            return Err(EymError::ToleranceUnreachable { tol, iterations, width: hi - lo });
        }
        let profile = integrate_orbit_with(sys, mid, cfg)?;
        history.push(BisectionStep { lo, hi, mid, fate: profile.fate });
        if converged {
            polish_iterations += 1;
        } else {
            iterations += 1;
        }
        if converged && matches!(profile.fate, OrbitFate::StayedInGamma { .. }) {
            connected = Some(profile);
            break;
        }
        if profile.fate.exits_through_w_minus_one() {
            lo = mid;
            fate_lo = profile.fate;
        } else {
            hi = mid;
            fate_hi = profile.fate;
        }
    }

    let (lambda_bar, profile) = match connected {
        Some(p) => (p.lambda, p),
        None => {
            let mid = 0.5 * (lo + hi);
            (mid, integrate_orbit_with(sys, mid, cfg)?)
        }
    };
    let connection = verify_connection(&profile, &opts.connection).ok();
    Ok(ShootingResult {
        lambda_lo: lo,
        lambda_hi: hi,
        lambda_bar,
        fate_lo,
        fate_hi,
        iterations,
        polish_iterations,
        tol,
        history,
        profile,
        connection,
    })
}
