//! Acceptance suite. Run with
//! `cargo test -p bkshoot-core --test acceptance -- --nocapture`
//! to see one PASS/FAIL line per criterion.

use std::time::{Duration, Instant};

use bkshoot_core::metric::{log_log_slope, log_t_derivative_samples};
use bkshoot_core::{
    find_lambda_bar, integrate_orbit, integrate_t, metric_report, residual_2a, residual_2b, rn_solution,
    theorem1_check, theorem2_check, FlatnessTolerances, IntegrationConfig, OrbitFate, Scheme,
    SolutionProfile,
};

struct Outcome {
    passed: bool,
    detail: String,
}

fn outcome(passed: bool, detail: String) -> Outcome {
    Outcome { passed, detail }
}

fn run(id: u32, name: &str, budget: Duration, f: impl FnOnce() -> Outcome) -> bool {
    let start = Instant::now();
    let out = f();
    let elapsed = start.elapsed();
    let in_time = elapsed < budget;
    let passed = out.passed && in_time;
    println!(
        "[{}] criterion {id} {name}: {} ({:.3} s of {:.0} s budget)",
        if passed { "PASS" } else { "FAIL" },
        out.detail,
        elapsed.as_secs_f64(),
        budget.as_secs_f64()
    );
    passed
}

fn cfg() -> IntegrationConfig {
    IntegrationConfig::default()
}

fn state_at(lambda: f64, r: f64, cfg: &IntegrationConfig) -> [f64; 3] {
    let mut c = *cfg;
    c.r_max = r;
    let p = integrate_orbit(lambda, &c).unwrap();
    assert!(matches!(p.fate, OrbitFate::StayedInGamma { .. }), "λ = {lambda} left Γ before r = {r}");
    let s = p.last();
    assert_eq!(s.r, r);
    [s.w, s.wp, s.a]
}

fn sup_diff(a: [f64; 3], b: [f64; 3]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

fn criterion1() -> Outcome {
    let mut worst_a: f64 = 0.0;
    let mut worst_b: f64 = 0.0;
    for c in [0.0, 1.0, 3.0] {
        for i in 0..200 {
            let r = 0.1 * 1000f64.powf(i as f64 / 199.0);
            let s = rn_solution(c, r).unwrap();
            // A' of 1 + 1/r² - c/r, written out by hand.
            let ap = -2.0 / r.powi(3) + c / (r * r);
            worst_a = worst_a.max(residual_2a(r, s.w, s.wp, 0.0, s.a).unwrap().abs());
            worst_b = worst_b.max(residual_2b(r, s.w, s.wp, s.a, ap).unwrap().abs());
        }
    }
    outcome(
        worst_a == 0.0 && worst_b <= 1e-12,
        format!("max |res_a| = {worst_a:.2e}, max |res_b| = {worst_b:.2e}"),
    )
}

fn criterion2() -> Outcome {
    let mut ok = true;
    let mut worst_min_a = f64::INFINITY;
    let mut worst_min_wp = f64::INFINITY;
    for k in 1..=10 {
        let lambda = k as f64 / 10.0;
        let rep = theorem1_check(lambda, &cfg()).unwrap();
        let bad = matches!(rep.fate, OrbitFate::AVanished { .. } | OrbitFate::DerivativeBlowUp { .. });
        ok &= rep.passed && rep.min_a > 0.0 && rep.min_wp.is_finite() && !bad;
        worst_min_a = worst_min_a.min(rep.min_a);
        worst_min_wp = worst_min_wp.min(rep.min_wp);
    }
    outcome(
        ok,
        format!("10 orbits, smallest min A = {worst_min_a:.4e}, smallest min w' = {worst_min_wp:.4e}"),
    )
}

fn criterion3() -> Outcome {
    let mut ok = true;
    let mut worst_shift: f64 = 0.0;
    let mut radii = Vec::new();
    for lambda in [2.1, 2.5, 3.0, 5.0] {
        let rep = theorem2_check(lambda, &cfg()).unwrap();
        let blown = matches!(rep.fate, OrbitFate::DerivativeBlowUp { .. });
        let r = rep.r_event.unwrap_or(f64::NAN);
        ok &= rep.passed
            && blown
            && r.is_finite()
            && rep.w_event * rep.w_event <= 1.0
            && rep.relative_shift < 0.01;
        worst_shift = worst_shift.max(rep.relative_shift);
        radii.push(format!("{r:.4}"));
    }
    outcome(ok, format!("blow-up radii [{}], worst threshold shift {worst_shift:.2e}", radii.join(", ")))
}

fn shoot(scheme: Scheme, scale: f64) -> bkshoot_core::ShootingResult {
    let mut c = cfg().with_tolerance_scale(scale);
    c.scheme = scheme;
    find_lambda_bar(0.1, 2.0, 1e-6, &c).unwrap()
}

fn criterion4(dp: &bkshoot_core::ShootingResult) -> Outcome {
    let ck = shoot(Scheme::CashKarp45, 1.0);
    let agree = (dp.lambda_bar - ck.lambda_bar).abs();
    let bracket_ok = dp.lambda_hi - dp.lambda_lo <= 1e-6;
    let Some(conn) = dp.connection.as_ref() else {
        return outcome(false, format!("no connection report, fate {}", dp.profile.fate));
    };
    let ok = bracket_ok
        && dp.lambda_bar > 0.0
        && dp.lambda_bar < 1.0
        && agree <= 1e-5
        && conn.r_end == 1e3
        && (conn.w_end + 1.0).abs() <= 0.05
        && conn.wp_end.abs() <= 0.01
        && dp.profile.diagnostics.node_count == 1;
    outcome(
        ok,
        format!(
            "lambda_bar = {:.9} (DP) vs {:.9} (CK), |diff| = {agree:.2e}; |w+1| = {:.2e}, |w'| = {:.2e}, nodes = {}",
            dp.lambda_bar,
            ck.lambda_bar,
            (conn.w_end + 1.0).abs(),
            conn.wp_end.abs(),
            dp.profile.diagnostics.node_count
        ),
    )
}

fn criterion5(profile: &SolutionProfile) -> Outcome {
    let Ok(rep) = metric_report(profile, &FlatnessTolerances::default()) else {
        return outcome(false, "metric report failed".into());
    };
    let (Some(mass), Some(flat)) = (rep.adm_mass.as_ref(), rep.flatness.as_ref()) else {
        return outcome(false, format!("no far-field data, fate {}", profile.fate));
    };
    let mono = rep.mass_samples.windows(2).all(|p| p[1].1 - p[0].1 >= -1e-10);
    let a_dev = (profile.last().a - 1.0).abs();
    let a_ok = a_dev <= 2.0 * mass.mu / 1e3 + 1e-3;
    // T is pinned to 1 at r_end, so T - 1 = c0 + c1/r; after removing the
    // constant the remainder should fall off like 1/r over the last decade.
    let c0 = flat.t_fit.c0;
    let tail: Vec<(f64, f64)> = rep.t_samples.iter().map(|&(r, t)| (r, t - 1.0 - c0)).collect();
    let slope = log_log_slope(&tail, 100.0, 900.0).map_or(f64::NAN, |s| s.0);
    let t_ok = flat.t_ok && (slope + 1.0).abs() <= 0.1;
    let ok = mono && mass.mu.is_finite() && mass.relative_drift < 0.01 && a_ok && t_ok;
    outcome(
        ok,
        format!(
            "mu = {:.6}, drift = {:.2e}, worst m drop = {:.1e}, |A-1| = {a_dev:.2e}, T-1 ~ r^{slope:.3}, c1/(mu/2) = {:.4}",
            mass.mu,
            mass.relative_drift,
            rep.worst_mass_drop,
            flat.t_fit.c1 / flat.t_coefficient_expected
        ),
    )
}

fn criterion6() -> Outcome {
    let mut worst: f64 = 0.0;
    for lambda in [0.5, 1.0] {
        let coarse = IntegrationConfig { r0: 1e-3, ..cfg() };
        let fine = IntegrationConfig { r0: 5e-4, ..cfg() };
        worst = worst.max(sup_diff(state_at(lambda, 0.1, &coarse), state_at(lambda, 0.1, &fine)));
    }
    outcome(worst <= 1e-8, format!("sup-norm difference at r = 0.1: {worst:.2e}"))
}

fn criterion7(lambda_bar: f64) -> Outcome {
    let halved = shoot(Scheme::DormandPrince54, 0.5);
    let d_lambda = (halved.lambda_bar - lambda_bar).abs();

    // λ = 0.5 exits Γ near r ≈ 4.56, before r = 10, so the profile is compared
    // at r = 4.5 (the last round radius inside Γ) together with the exit radius.
    let full = cfg();
    let half = cfg().with_tolerance_scale(0.5);
    let d_state = sup_diff(state_at(0.5, 4.5, &full), state_at(0.5, 4.5, &half));
    let r_exit = |c: &IntegrationConfig| match integrate_orbit(0.5, c).unwrap().fate {
        OrbitFate::ExitThroughWMinusOne { r_exit } => r_exit,
        _ => f64::NAN,
    };
    let d_exit = (r_exit(&full) - r_exit(&half)).abs();
    outcome(
        d_lambda <= 1e-5 && d_state <= 1e-6 && d_exit <= 1e-6,
        format!("|d lambda_bar| = {d_lambda:.2e}, lambda = 0.5: |d state(4.5)| = {d_state:.2e}, |d r_exit| = {d_exit:.2e}"),
    )
}

fn criterion8() -> Outcome {
    let p = integrate_orbit(0.5, &cfg()).unwrap();
    let g = log_t_derivative_samples(&p).unwrap();
    let r0 = p.samples[0].r;
    let Some((slope, n)) = log_log_slope(&g, r0, 10.0 * r0) else {
        return outcome(false, "too few samples in the first decade".into());
    };
    // (ln T)' ≈ -λ² r near the origin.
    let ratio = g[0].1 / (-0.25 * g[0].0);
    let t = integrate_t(&p).unwrap();
    let positive = t.iter().all(|&(_, t)| t > 0.0);
    outcome(
        (slope - 1.0).abs() <= 0.05 && (ratio - 1.0).abs() <= 1e-3 && positive,
        format!("slope of (ln T)' over [r0, 10 r0] = {slope:.5} from {n} samples, (ln T)'(r0)/(-lambda^2 r0) = {ratio:.6}"),
    )
}

#[test]
fn acceptance() {
    println!();
    let mut results = Vec::new();
    results.push(run(1, "exact-solution regression", Duration::from_secs(1), criterion1));
    results.push(run(2, "trapping for 0 < lambda <= 1", Duration::from_secs(30), criterion2));
    results.push(run(3, "blow-up for lambda > 2", Duration::from_secs(30), criterion3));

    let start = Instant::now();
    let dp = shoot(Scheme::DormandPrince54, 1.0);
    let shoot_time = start.elapsed();
    results.push(run(4, "connecting orbit", Duration::from_secs(120) - shoot_time, || criterion4(&dp)));
    results.push(run(5, "mass and flatness", Duration::from_secs(60), || criterion5(&dp.profile)));
    results.push(run(6, "singular-start consistency", Duration::from_secs(10), criterion6));
    results.push(run(7, "self-convergence", Duration::from_secs(120), || criterion7(dp.lambda_bar)));
    results.push(run(8, "T'(0) = 0 consistency", Duration::from_secs(5), criterion8));

    let passed = results.iter().filter(|p| **p).count();
    println!("acceptance: {passed}/{} criteria passed", results.len());
    assert_eq!(passed, results.len(), "acceptance criteria failed");
}
