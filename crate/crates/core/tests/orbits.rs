//! Whole-orbit properties checked against independent references.

use bkshoot_core::{
    field_rhs, find_lambda_bar, integrate_orbit, launch_state, sweep, FieldState, IntegrationConfig,
    OrbitFate,
};

fn cfg() -> IntegrationConfig {
    IntegrationConfig::default()
}

fn end_state(lambda: f64, r: f64, cfg: &IntegrationConfig) -> FieldState {
    let c = IntegrationConfig { r_max: r, ..*cfg };
    let p = integrate_orbit(lambda, &c).unwrap();
    assert!(matches!(p.fate, OrbitFate::StayedInGamma { .. }), "λ = {lambda}: {}", p.fate);
    *p.last()
}

fn sup(a: &FieldState, b: &FieldState) -> f64 {
    [(a.w - b.w).abs(), (a.wp - b.wp).abs(), (a.a - b.a).abs()].into_iter().fold(0.0, f64::max)
}

/// Classical RK4 on a geometric grid (step proportional to r, which the
/// 1/r² terms near the origin need), sharing nothing with the adaptive
/// integrator.
fn rk4(mut s: FieldState, r_end: f64, n: usize) -> FieldState {
    let q = (r_end / s.r).powf(1.0 / n as f64);
    let f = |s: &FieldState| {
        let d = field_rhs(s).unwrap();
        [d.dw, d.dwp, d.da]
    };
    let shift = |s: &FieldState, k: [f64; 3], c: f64| {
        FieldState::new(s.r + c, s.w + c * k[0], s.wp + c * k[1], s.a + c * k[2])
    };
    for i in 0..n {
        let h = if i + 1 == n { r_end - s.r } else { s.r * (q - 1.0) };
        let k1 = f(&s);
        let k2 = f(&shift(&s, k1, 0.5 * h));
        let k3 = f(&shift(&s, k2, 0.5 * h));
        let k4 = f(&shift(&s, k3, h));
        let step = |i: usize| h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        let r = if i + 1 == n { r_end } else { s.r + h };
        s = FieldState::new(r, s.w + step(0), s.wp + step(1), s.a + step(2));
    }
    s
}

#[test]
fn adaptive_orbit_matches_fixed_step_reference() {
    for lambda in [0.3, 0.9, 1.2] {
        let start = launch_state(lambda, 1e-3, 4).unwrap().state;
        let reference = rk4(start, 2.0, 20_000);
        let got = end_state(lambda, 2.0, &cfg());
        assert!(sup(&got, &reference) < 1e-8, "λ = {lambda}: {got:?} vs {reference:?}");
    }
}

#[test]
fn mirrored_start_reproduces_mirrored_profile() {
    // w → -w maps solutions to solutions; launch the reference from w(0) = -1.
    let lambda = 0.6;
    let s = launch_state(lambda, 1e-3, 4).unwrap().state;
    let mirrored = rk4(FieldState::new(s.r, -s.w, -s.wp, s.a), 3.0, 20_000);
    let got = end_state(lambda, 3.0, &cfg());
    let reflected = FieldState::new(got.r, -got.w, -got.wp, got.a);
    assert!(sup(&reflected, &mirrored) < 1e-8, "{reflected:?} vs {mirrored:?}");
}

#[test]
fn self_convergence_under_halved_tolerances() {
    for lambda in [0.3, 0.7, 1.5] {
        let coarse = integrate_orbit(lambda, &cfg()).unwrap();
        let fine = integrate_orbit(lambda, &cfg().with_tolerance_scale(0.5)).unwrap();
        assert!(coarse.fate.same_kind(&fine.fate), "λ = {lambda}: {} vs {}", coarse.fate, fine.fate);
        let r_event = coarse.fate.radius().unwrap();
        // Compare at r = 10, or just inside Γ when the orbit leaves earlier.
        let r_cmp = if r_event > 10.0 { 10.0 } else { 0.95 * r_event };
        let a = end_state(lambda, r_cmp, &cfg());
        let b = end_state(lambda, r_cmp, &cfg().with_tolerance_scale(0.5));
        assert!(sup(&a, &b) <= 1e-6, "λ = {lambda} at r = {r_cmp}: {}", sup(&a, &b));
        assert!((r_event - fine.fate.radius().unwrap()).abs() <= 1e-6 * r_event, "λ = {lambda}");
    }
}

#[test]
fn events_stable_under_tenfold_finer_tolerance() {
    for lambda in [0.5, 0.9, 1.0, 1.3, 2.5] {
        let base = integrate_orbit(lambda, &cfg()).unwrap().fate;
        let fine = integrate_orbit(lambda, &cfg().with_tolerance_scale(0.1)).unwrap().fate;
        assert!(base.same_kind(&fine), "λ = {lambda}: {base} vs {fine}");
        let (r0, r1) = (base.radius().unwrap(), fine.radius().unwrap());
        assert!((r0 - r1).abs() <= 1e-6 * r0, "λ = {lambda}: {r0} vs {r1}");
    }
}

#[test]
fn ignition_radius_refinement() {
    for lambda in [0.1, 0.5, 1.0, 2.0] {
        let a = end_state(lambda, 0.1, &IntegrationConfig { r0: 1e-3, ..cfg() });
        let b = end_state(lambda, 0.1, &IntegrationConfig { r0: 5e-4, ..cfg() });
        assert!(sup(&a, &b) <= 1e-8, "λ = {lambda}: {}", sup(&a, &b));
        // Order 2 leaves an O(r0³) error in w', so it needs a smaller start.
        let c = end_state(lambda, 0.1, &IntegrationConfig { r0: 1e-4, series_order: 2, ..cfg() });
        assert!(sup(&a, &c) <= 1e-8, "order 2 vs 4 at λ = {lambda}: {}", sup(&a, &c));
    }
}

#[test]
fn mass_identity_by_finite_differences() {
    let p = integrate_orbit(0.5, &cfg()).unwrap();
    let s = &p.samples;
    let m = |s: &FieldState| 0.5 * s.r * (1.0 - s.a);
    let mut worst: f64 = 0.0;
    let mut scale: f64 = 0.0;
    for i in 1..s.len() - 1 {
        let (x0, x1, x2) = (s[i - 1].r, s[i].r, s[i + 1].r);
        if x1 < 0.05 {
            continue;
        }
        // Three-point derivative on a non-uniform grid.
        let (h0, h1) = (x1 - x0, x2 - x1);
        let fd = (-h1 / (h0 * (h0 + h1))) * m(&s[i - 1])
            + ((h1 - h0) / (h0 * h1)) * m(&s[i])
            + (h0 / (h1 * (h0 + h1))) * m(&s[i + 1]);
        let c = &s[i];
        let exact = c.a * c.wp * c.wp + (1.0 - c.w * c.w).powi(2) / (2.0 * c.r * c.r);
        worst = worst.max((fd - exact).abs());
        scale = scale.max(exact.abs());
    }
    assert!(worst <= 1e-3 * scale, "worst {worst:e} vs scale {scale:e}");
}

#[test]
fn mass_monotone_and_a_bounded_across_lambda() {
    for k in 0..=30 {
        let lambda = 0.1 * k as f64;
        let p = integrate_orbit(lambda, &cfg()).unwrap();
        let m: Vec<f64> = p.samples.iter().filter(|s| s.a > 0.0).map(|s| 0.5 * s.r * (1.0 - s.a)).collect();
        assert!(m.windows(2).all(|w| w[1] - w[0] >= -1e-12), "λ = {lambda}");
        assert!(p.samples.iter().all(|s| s.a <= 1.0 + 1e-9), "λ = {lambda}");
    }
}

#[test]
fn sweep_has_single_exit_boundary() {
    let grid: Vec<f64> = (1..=40).map(|k| 0.05 * k as f64).collect();
    let map = sweep(&grid, &cfg()).unwrap();
    let transitions = map.exit_transitions();
    assert_eq!(transitions.len(), 1, "{transitions:?}");
    let (a, b) = transitions[0];
    assert!(a < 0.9075 && b > 0.9074, "{a} {b}");
}

#[test]
fn sweep_independent_of_thread_count() {
    let grid: Vec<f64> = (0..=20).map(|k| 0.1 * k as f64).collect();
    let one = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
    let four = rayon::ThreadPoolBuilder::new().num_threads(4).build().unwrap();
    let a = one.install(|| sweep(&grid, &cfg()).unwrap());
    let b = four.install(|| sweep(&grid, &cfg()).unwrap());
    assert_eq!(a, b);
}

#[test]
fn lambda_bar_stable_under_tighter_rel_tol() {
    let tol = 1e-6;
    let a = find_lambda_bar(0.1, 2.0, tol, &cfg()).unwrap();
    let b = find_lambda_bar(0.1, 2.0, tol, &IntegrationConfig { rel_tol: 1e-11, ..cfg() }).unwrap();
    assert!((a.lambda_bar - b.lambda_bar).abs() <= 10.0 * tol);
    assert_eq!(a.profile.diagnostics.node_count, 1);
    assert_eq!(b.profile.diagnostics.node_count, 1);
    // Every recorded midpoint respects the bracket.
    for step in &a.history {
        assert!(step.lo < step.mid && step.mid < step.hi);
    }
}
