//! Embedded explicit Runge-Kutta pairs with continuous extensions.
//!
//! Two schemes with independent coefficients and step controllers:
//! Dormand-Prince 5(4) with its native fourth-order dense output and a PI
//! controller, and Cash-Karp 4(5) with cubic Hermite interpolation and a plain
//! integral controller.

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::system::{FieldState, RadialSystem};

pub type Vec3 = [f64; 3];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    #[default]
    DormandPrince54,
    CashKarp45,
}

impl Scheme {
    pub fn name(self) -> &'static str {
        match self {
            Scheme::DormandPrince54 => "dormand_prince_54",
            Scheme::CashKarp45 => "cash_karp_45",
        }
    }
}

impl std::str::FromStr for Scheme {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "dormand_prince_54" | "dp54" | "dopri5" => Ok(Scheme::DormandPrince54),
            "cash_karp_45" | "ck45" => Ok(Scheme::CashKarp45),
            other => Err(format!("unknown scheme '{other}'")),
        }
    }
}

#[inline]
fn axpy(y: &Vec3, h: f64, terms: &[(f64, &Vec3)]) -> Vec3 {
    let mut out = *y;
    for (c, k) in terms {
        if *c != 0.0 {
            for i in 0..3 {
                out[i] += h * c * k[i];
            }
        }
    }
    out
}

fn eval<S: RadialSystem>(sys: &S, r: f64, y: Vec3) -> Result<Vec3> {
    Ok(sys.rhs(&FieldState::from_fields(r, y))?.as_array())
}

/// Continuous extension over one accepted step.
#[derive(Debug, Clone)]
pub enum DenseSegment {
    Dopri { r0: f64, h: f64, rcont: [Vec3; 5] },
    Hermite { r0: f64, h: f64, y0: Vec3, y1: Vec3, f0: Vec3, f1: Vec3 },
}

impl DenseSegment {
    pub fn start(&self) -> f64 {
        match self {
            DenseSegment::Dopri { r0, .. } | DenseSegment::Hermite { r0, .. } => *r0,
        }
    }

    pub fn end(&self) -> f64 {
        match self {
            DenseSegment::Dopri { r0, h, .. } | DenseSegment::Hermite { r0, h, .. } => r0 + h,
        }
    }

    /// Interpolated state at `r` inside the step.
    pub fn at(&self, r: f64) -> Vec3 {
        match self {
            DenseSegment::Dopri { r0, h, rcont } => {
                let s = (r - r0) / h;
                let s1 = 1.0 - s;
                let mut out = [0.0; 3];
                for i in 0..3 {
                    out[i] = rcont[0][i]
                        + s * (rcont[1][i] + s1 * (rcont[2][i] + s * (rcont[3][i] + s1 * rcont[4][i])));
                }
                out
            }
            DenseSegment::Hermite { r0, h, y0, y1, f0, f1 } => {
                let s = (r - r0) / h;
                let h00 = (1.0 + 2.0 * s) * (1.0 - s) * (1.0 - s);
                let h10 = s * (1.0 - s) * (1.0 - s);
                let h01 = s * s * (3.0 - 2.0 * s);
                let h11 = s * s * (s - 1.0);
                let mut out = [0.0; 3];
                for i in 0..3 {
                    out[i] = h00 * y0[i] + h10 * h * f0[i] + h01 * y1[i] + h11 * h * f1[i];
                }
                out
            }
        }
    }
}

/// Result of one trial step.
pub struct Trial {
    pub y1: Vec3,
    /// Derivative at the new point (reused as the next step's first stage).
    pub f1: Vec3,
    pub err: f64,
    pub dense: DenseSegment,
    pub evals: usize,
}

pub fn error_norm(y0: &Vec3, y1: &Vec3, err: &Vec3, rel_tol: f64, abs_tol: f64) -> f64 {
    let mut acc = 0.0;
    for i in 0..3 {
        let sc = abs_tol + rel_tol * y0[i].abs().max(y1[i].abs());
        let e = err[i] / sc;
        acc += e * e;
    }
    (acc / 3.0).sqrt()
}

// Dormand-Prince 5(4).
const DP_C: [f64; 7] = [0.0, 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];
const DP_A21: f64 = 1.0 / 5.0;
const DP_A3: [f64; 2] = [3.0 / 40.0, 9.0 / 40.0];
const DP_A4: [f64; 3] = [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0];
const DP_A5: [f64; 4] = [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0];
const DP_A6: [f64; 5] = [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0];
const DP_B: [f64; 6] = [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0];
const DP_E: [f64; 7] =
    [71.0 / 57600.0, 0.0, -71.0 / 16695.0, 71.0 / 1920.0, -17253.0 / 339200.0, 22.0 / 525.0, -1.0 / 40.0];
const DP_D: [f64; 7] = [
    -12715105075.0 / 11282082432.0,
    0.0,
    87487479700.0 / 32700410799.0,
    -10690763975.0 / 1880347072.0,
    701980252875.0 / 199316789632.0,
    -1453857185.0 / 822651844.0,
    69997945.0 / 29380423.0,
];

fn dopri_step<S: RadialSystem>(
    sys: &S,
    r: f64,
    y: &Vec3,
    k1: &Vec3,
    h: f64,
    rel_tol: f64,
    abs_tol: f64,
) -> Result<Trial> {
    let k2 = eval(sys, r + DP_C[1] * h, axpy(y, h, &[(DP_A21, k1)]))?;
    let k3 = eval(sys, r + DP_C[2] * h, axpy(y, h, &[(DP_A3[0], k1), (DP_A3[1], &k2)]))?;
    let k4 = eval(sys, r + DP_C[3] * h, axpy(y, h, &[(DP_A4[0], k1), (DP_A4[1], &k2), (DP_A4[2], &k3)]))?;
    let k5 = eval(
        sys,
        r + DP_C[4] * h,
        axpy(y, h, &[(DP_A5[0], k1), (DP_A5[1], &k2), (DP_A5[2], &k3), (DP_A5[3], &k4)]),
    )?;
    let k6 = eval(
        sys,
        r + h,
        axpy(y, h, &[(DP_A6[0], k1), (DP_A6[1], &k2), (DP_A6[2], &k3), (DP_A6[3], &k4), (DP_A6[4], &k5)]),
    )?;
    let y1 = axpy(y, h, &[(DP_B[0], k1), (DP_B[2], &k3), (DP_B[3], &k4), (DP_B[4], &k5), (DP_B[5], &k6)]);
    let k7 = eval(sys, r + h, y1)?;

    let ks = [k1, &k2, &k3, &k4, &k5, &k6, &k7];
    let mut err = [0.0; 3];
    let mut d = [0.0; 3];
    for i in 0..3 {
        for (j, k) in ks.iter().enumerate() {
            err[i] += h * DP_E[j] * k[i];
            d[i] += h * DP_D[j] * k[i];
        }
    }
    let err = error_norm(y, &y1, &err, rel_tol, abs_tol);

    let mut rcont = [[0.0; 3]; 5];
    for i in 0..3 {
        let ydiff = y1[i] - y[i];
        let bspl = h * k1[i] - ydiff;
        rcont[0][i] = y[i];
        rcont[1][i] = ydiff;
        rcont[2][i] = bspl;
        rcont[3][i] = ydiff - h * k7[i] - bspl;
        rcont[4][i] = d[i];
    }
    Ok(Trial { y1, f1: k7, err, dense: DenseSegment::Dopri { r0: r, h, rcont }, evals: 6 })
}

// Cash-Karp 4(5); the fifth-order solution is propagated.
const CK_C: [f64; 6] = [0.0, 1.0 / 5.0, 3.0 / 10.0, 3.0 / 5.0, 1.0, 7.0 / 8.0];
const CK_A21: f64 = 1.0 / 5.0;
const CK_A3: [f64; 2] = [3.0 / 40.0, 9.0 / 40.0];
const CK_A4: [f64; 3] = [3.0 / 10.0, -9.0 / 10.0, 6.0 / 5.0];
const CK_A5: [f64; 4] = [-11.0 / 54.0, 5.0 / 2.0, -70.0 / 27.0, 35.0 / 27.0];
const CK_A6: [f64; 5] =
    [1631.0 / 55296.0, 175.0 / 512.0, 575.0 / 13824.0, 44275.0 / 110592.0, 253.0 / 4096.0];
const CK_B5: [f64; 6] = [37.0 / 378.0, 0.0, 250.0 / 621.0, 125.0 / 594.0, 0.0, 512.0 / 1771.0];
const CK_B4: [f64; 6] =
    [2825.0 / 27648.0, 0.0, 18575.0 / 48384.0, 13525.0 / 55296.0, 277.0 / 14336.0, 1.0 / 4.0];

fn cash_karp_step<S: RadialSystem>(
    sys: &S,
    r: f64,
    y: &Vec3,
    k1: &Vec3,
    h: f64,
    rel_tol: f64,
    abs_tol: f64,
) -> Result<Trial> {
    let k2 = eval(sys, r + CK_C[1] * h, axpy(y, h, &[(CK_A21, k1)]))?;
    let k3 = eval(sys, r + CK_C[2] * h, axpy(y, h, &[(CK_A3[0], k1), (CK_A3[1], &k2)]))?;
    let k4 = eval(sys, r + CK_C[3] * h, axpy(y, h, &[(CK_A4[0], k1), (CK_A4[1], &k2), (CK_A4[2], &k3)]))?;
    let k5 = eval(
        sys,
        r + CK_C[4] * h,
        axpy(y, h, &[(CK_A5[0], k1), (CK_A5[1], &k2), (CK_A5[2], &k3), (CK_A5[3], &k4)]),
    )?;
    let k6 = eval(
        sys,
        r + CK_C[5] * h,
        axpy(y, h, &[(CK_A6[0], k1), (CK_A6[1], &k2), (CK_A6[2], &k3), (CK_A6[3], &k4), (CK_A6[4], &k5)]),
    )?;
    let ks = [k1, &k2, &k3, &k4, &k5, &k6];
    let mut y1 = *y;
    let mut err = [0.0; 3];
    for i in 0..3 {
        for (j, k) in ks.iter().enumerate() {
            y1[i] += h * CK_B5[j] * k[i];
            err[i] += h * (CK_B5[j] - CK_B4[j]) * k[i];
        }
    }
    let f1 = eval(sys, r + h, y1)?;
    let err = error_norm(y, &y1, &err, rel_tol, abs_tol);
    Ok(Trial { y1, f1, err, dense: DenseSegment::Hermite { r0: r, h, y0: *y, y1, f0: *k1, f1 }, evals: 6 })
}

/// Step-size controller state.
#[derive(Debug, Clone)]
pub struct Controller {
    scheme: Scheme,
    err_old: f64,
}

const SAFETY: f64 = 0.9;
const MIN_FACTOR: f64 = 0.2;
const MAX_FACTOR: f64 = 10.0;
const PI_BETA: f64 = 0.04;

impl Controller {
    pub fn new(scheme: Scheme) -> Self {
        Self { scheme, err_old: 1e-4 }
    }

    /// Step factor after an accepted step with error `err <= 1`.
    pub fn accept(&mut self, err: f64) -> f64 {
        let err = err.max(1e-10);
        let factor = match self.scheme {
            Scheme::DormandPrince54 => {
                let expo = 0.2 - 0.75 * PI_BETA;
                SAFETY * err.powf(-expo) * self.err_old.powf(PI_BETA)
            }
            Scheme::CashKarp45 => SAFETY * err.powf(-0.2),
        };
        self.err_old = err.max(1e-4);
        factor.clamp(MIN_FACTOR, MAX_FACTOR)
    }

    /// Step factor after a rejected step; never grows the step.
    pub fn reject(&self, err: f64) -> f64 {
        if !err.is_finite() {
            return 0.25;
        }
        let expo = match self.scheme {
            Scheme::DormandPrince54 => 0.2 - 0.75 * PI_BETA,
            Scheme::CashKarp45 => 0.2,
        };
        (SAFETY * err.powf(-expo)).clamp(MIN_FACTOR, 1.0)
    }
}

#[allow(clippy::too_many_arguments)]
pub fn trial_step<S: RadialSystem>(
    scheme: Scheme,
    sys: &S,
    r: f64,
    y: &Vec3,
    f0: &Vec3,
    h: f64,
    rel_tol: f64,
    abs_tol: f64,
) -> Result<Trial> {
    match scheme {
        Scheme::DormandPrince54 => dopri_step(sys, r, y, f0, h, rel_tol, abs_tol),
        Scheme::CashKarp45 => cash_karp_step(sys, r, y, f0, h, rel_tol, abs_tol),
    }
}
