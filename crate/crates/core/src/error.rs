use thiserror::Error;

use crate::integrator::OrbitFate;

pub type Result<T> = std::result::Result<T, EymError>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EymError {
    #[error("domain error in {op}: {detail}")]
    Domain { op: &'static str, detail: String },

    #[error("non-finite value produced by {op} at r = {r}")]
    NonFinite { op: &'static str, r: f64 },

    #[error("unsupported series order {0} (expected 2 or 4)")]
    UnsupportedOrder(u32),

    #[error("ignition radius r0 = {0} outside (0, 0.01]")]
    IgnitionRadius(f64),

    #[error("invalid integration config: {0}")]
    InvalidConfig(String),

    #[error("step budget of {max_steps} exhausted at r = {r}")]
    StepLimit { max_steps: usize, r: f64 },

    #[error("invalid bracket: fate at lo = {lo} is {fate_lo:?}, fate at hi = {hi} is {fate_hi:?}")]
    InvalidBracket { lo: f64, hi: f64, fate_lo: Box<OrbitFate>, fate_hi: Box<OrbitFate> },

    #[error("bisection could not reach tolerance {tol} within {iterations} iterations (width {width})")]
    ToleranceUnreachable { tol: f64, iterations: usize, width: f64 },

    #[error("{op} requires an orbit that stayed in Gamma, got {fate:?}")]
    WrongFate { op: &'static str, fate: Box<OrbitFate> },

    #[error("{op}: only {found} samples in fit window [{lo}, {hi}], need at least {needed}")]
    InsufficientSamples { op: &'static str, found: usize, needed: usize, lo: f64, hi: f64 },

    #[error("{op}: metric coefficient A = {a} is not positive at r = {r}")]
    NonPositiveA { op: &'static str, r: f64, a: f64 },
}

impl EymError {
    pub(crate) fn domain(op: &'static str, detail: impl Into<String>) -> Self {
        EymError::Domain { op, detail: detail.into() }
    }
}
