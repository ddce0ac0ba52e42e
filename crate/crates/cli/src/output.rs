//! File writers: profile CSV, sweep CSV, JSON reports and plot scripts.
//!
//! Everything is rendered into memory first and written in one go, so a
//! failed run never leaves a half-written file behind.

use std::fmt::Write as _;
use std::path::Path;

use bkshoot_core::{f_norm_sq, integrate_t, v_diag, FateMap, SolutionProfile};
use serde::Serialize;

pub const SCHEMA_VERSION: u32 = 1;

pub const PROFILE_HEADER: [&str; 8] = ["r", "w", "wp", "A", "T", "m", "F2", "v"];

/// 17 significant digits, so values round-trip exactly.
pub fn num(x: f64) -> String {
    format!("{x:.16e}")
}

fn opt(x: Option<f64>) -> String {
    x.filter(|v| v.is_finite()).map(num).unwrap_or_default()
}

/// One profile sample with every derived column.
#[derive(Debug, Clone, Serialize)]
pub struct ProfileRow {
    pub r: f64,
    pub w: f64,
    pub wp: f64,
    #[serde(rename = "A")]
    pub a: f64,
    #[serde(rename = "T")]
    pub t: Option<f64>,
    pub m: f64,
    #[serde(rename = "F2")]
    pub f2: Option<f64>,
    pub v: f64,
}

pub fn profile_rows(profile: &SolutionProfile) -> Vec<ProfileRow> {
    // T needs A > 0 throughout; leave the column empty otherwise.
    let t = integrate_t(profile).ok().filter(|t| t.len() == profile.samples.len());
    profile
        .samples
        .iter()
        .enumerate()
        .map(|(i, s)| ProfileRow {
            r: s.r,
            w: s.w,
            wp: s.wp,
            a: s.a,
            t: t.as_ref().map(|t| t[i].1),
            m: 0.5 * s.r * (1.0 - s.a),
            f2: f_norm_sq(s).ok(),
            v: v_diag(s),
        })
        .collect()
}

pub fn profile_csv(rows: &[ProfileRow]) -> Result<Vec<u8>, csv::Error> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(PROFILE_HEADER)?;
    for row in rows {
        w.write_record([
            num(row.r),
            num(row.w),
            num(row.wp),
            num(row.a),
            opt(row.t),
            num(row.m),
            opt(row.f2),
            num(row.v),
        ])?;
    }
    w.into_inner().map_err(|e| e.into_error().into())
}

pub const SWEEP_HEADER: [&str; 14] = [
    "lambda",
    "fate",
    "fate_code",
    "r_event",
    "w_event",
    "min_A",
    "min_wp",
    "node_count",
    "max_abs_v",
    "r_end",
    "w_end",
    "wp_end",
    "A_end",
    "error",
];

/// Small integer per fate kind, used for plotting.
pub fn fate_code(label: &str) -> i32 {
    match label {
        "exit_w_minus_one" => 1,
        "w_prime_vanished" => 2,
        "a_vanished" => 3,
        "derivative_blow_up" => 4,
        "stayed_in_gamma" => 5,
        "rest_point" => 0,
        _ => -1,
    }
}

pub fn sweep_csv(map: &FateMap) -> Result<Vec<u8>, csv::Error> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(SWEEP_HEADER)?;
    for e in &map.entries {
        let label = e.fate.as_ref().map(|f| f.label()).unwrap_or("error");
        let w_event = e.fate.as_ref().and_then(|f| match f {
            bkshoot_core::OrbitFate::ExitThroughWMinusOne { .. } => Some(-1.0),
            bkshoot_core::OrbitFate::WPrimeVanished { w, .. }
            | bkshoot_core::OrbitFate::AVanished { w, .. }
            | bkshoot_core::OrbitFate::DerivativeBlowUp { w, .. } => Some(*w),
            _ => None,
        });
        let s = e.summary.as_ref();
        w.write_record([
            num(e.lambda),
            label.to_owned(),
            fate_code(label).to_string(),
            opt(e.fate.as_ref().and_then(|f| f.radius())),
            opt(w_event),
            opt(s.map(|s| s.min_a)),
            opt(s.map(|s| s.min_wp)),
            s.map(|s| s.node_count.to_string()).unwrap_or_default(),
            opt(s.map(|s| s.max_abs_v)),
            opt(s.map(|s| s.r_end)),
            opt(s.map(|s| s.w_end)),
            opt(s.map(|s| s.wp_end)),
            opt(s.map(|s| s.a_end)),
            e.error.clone().unwrap_or_default(),
        ])?;
    }
    w.into_inner().map_err(|e| e.into_error().into())
}

/// Phase-portrait data: blank-line separated `(w, w')` blocks, one per λ.
pub fn phase_data(profiles: &[SolutionProfile]) -> String {
    let mut out = String::from("# lambda r w wp\n");
    for p in profiles {
        for s in &p.samples {
            let _ = writeln!(out, "{} {} {} {}", num(p.lambda), num(s.r), num(s.w), num(s.wp));
        }
        out.push_str("\n\n");
    }
    out
}

/// gnuplot script drawing the fate map and the phase portraits.
pub fn plot_script(sweep_csv: &Path, phase: &Path, lambdas: &[f64]) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "# fate codes: 0 rest point, 1 exit w=-1, 2 w' vanished, 3 A vanished,");
    let _ = writeln!(s, "# 4 derivative blow-up, 5 stayed in Gamma");
    let _ = writeln!(s, "set datafile separator ','");
    let _ = writeln!(s, "set multiplot layout 1,2");
    let _ = writeln!(s, "set xlabel 'lambda'\nset ylabel 'fate'\nset yrange [-0.5:5.5]");
    let _ = writeln!(s, "plot '{}' using 1:3 skip 1 with points pt 7 title 'fate'", sweep_csv.display());
    let _ = writeln!(s, "set datafile separator whitespace");
    let _ = writeln!(s, "set xlabel 'w'\nset ylabel \"w'\"\nset autoscale y");
    let _ = write!(s, "plot");
    for (i, l) in lambdas.iter().enumerate() {
        let sep = if i + 1 < lambdas.len() { ", \\\n    " } else { "\n" };
        let _ = write!(s, " '{}' index {i} using 3:4 with lines title 'lambda = {l}'{sep}", phase.display());
    }
    if lambdas.is_empty() {
        let _ = writeln!(s, " NaN notitle");
    }
    let _ = writeln!(s, "unset multiplot");
    s
}

/// Top-level JSON document shared by every command.
#[derive(Debug, Serialize)]
pub struct Report<'a, C, F, D, N, M, X> {
    pub schema_version: u32,
    pub command: &'a str,
    pub config: C,
    pub fate: F,
    pub lambda: Option<f64>,
    pub diagnostics: D,
    pub connection: N,
    pub metric: M,
    #[serde(flatten)]
    pub extra: X,
}

pub fn to_json<T: Serialize>(value: &T) -> serde_json::Result<Vec<u8>> {
    // Non-finite floats serialize as null.
    let mut v = serde_json::to_vec_pretty(value)?;
    v.push(b'\n');
    Ok(v)
}
