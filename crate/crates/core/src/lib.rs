//! Shooting solver for static, spherically symmetric SU(2)
//! Einstein-Yang/Mills solitons.
//!
//! Orbits are launched from the regular origin with `w''(0) = -λ`, integrated
//! until they leave the region `Γ = {w² ≤ 1, w' ≤ 0}`, and classified by how
//! they leave it. Bisection on the fate locates the connecting parameter `λ̄`
//! whose orbit joins `(w, w') = (1, 0)` at the origin to `(-1, 0)` at
//! infinity; the metric module then reconstructs `T`, the mass function and
//! the far-field checks.

pub mod error;
pub mod integrator;
pub mod metric;
pub mod rk;
pub mod series;
pub mod shooting;
pub mod system;

pub use error::{EymError, Result};
pub use integrator::{
    integrate_orbit, integrate_orbit_with, theorem1_check, theorem1_check_with, theorem2_check,
    theorem2_check_with, BlowUpCause, Diagnostics, IntegrationConfig, OrbitFate, SolutionProfile,
    Theorem1Report, Theorem2Report,
};
pub use metric::{
    adm_mass, flatness_report, integrate_t, mass_function, metric_report, AdmMass, FlatnessReport,
    FlatnessTolerances, MetricReport,
};
pub use rk::Scheme;
pub use series::{launch_state, series_coefficients, SeriesCoefficients, SeriesStart};
pub use shooting::{
    find_lambda_bar, find_lambda_bar_with, sweep, sweep_with, verify_connection, ConnectionReport,
    ConnectionTolerances, FateEntry, FateMap, ShootingOptions, ShootingResult, DEFAULT_BRACKET,
};
pub use system::{
    f_norm_sq, f_norm_sq_metric, field_rhs, phi, residual_2a, residual_2b, rn_solution, v_diag,
    CorruptedSystem, DerivativeState, EymSystem, FieldState, RadialSystem, ShootingParameter,
};
