use bkshoot_core::metric::{log_log_slope, log_t_derivative_samples};
use bkshoot_core::{
    adm_mass, find_lambda_bar, integrate_orbit, integrate_t, metric_report, FlatnessTolerances,
    IntegrationConfig, OrbitFate,
};

#[test]
fn connecting_profile_metric() {
    let res = find_lambda_bar(0.1, 2.0, 1e-6, &IntegrationConfig::default()).unwrap();
    let p = &res.profile;
    assert!(matches!(p.fate, OrbitFate::StayedInGamma { .. }));

    let t = integrate_t(p).unwrap();
    assert_eq!(t.len(), p.samples.len());
    assert!(t.iter().all(|&(_, t)| t > 0.0));
    assert_eq!(t.last().unwrap().1, 1.0);

    let mass = adm_mass(p).unwrap();
    assert!(mass.relative_drift < 0.01);
    assert!((mass.m_schwarzschild - 0.5 * mass.mu).abs() < 1e-15);

    let rep = metric_report(p, &FlatnessTolerances::default()).unwrap();
    assert!(rep.flatness.unwrap().passed);
    assert_eq!(rep.worst_mass_drop, 0.0);
    assert_eq!(rep.energy.len(), p.samples.len());
    assert!(rep.energy.iter().zip(&rep.energy_metric).all(|(a, b)| a.1 >= 0.0 && b.1 >= 0.0));
}

#[test]
fn log_t_derivative_linear_near_origin() {
    for lambda in [0.3, 0.5, 1.0] {
        let p = integrate_orbit(lambda, &IntegrationConfig::default()).unwrap();
        let g = log_t_derivative_samples(&p).unwrap();
        let r0 = g[0].0;
        let (slope, _) = log_log_slope(&g, r0, 10.0 * r0).unwrap();
        assert!((slope - 1.0).abs() < 0.01, "λ = {lambda}: slope {slope}");
        // Leading behaviour (ln T)' ≈ -λ² r.
        assert!((g[0].1 / (-lambda * lambda * r0) - 1.0).abs() < 1e-3);
    }
}

#[test]
fn far_field_parts_absent_for_exiting_orbit() {
    let p = integrate_orbit(0.3, &IntegrationConfig::default()).unwrap();
    let rep = metric_report(&p, &FlatnessTolerances::default()).unwrap();
    assert!(rep.adm_mass.is_none() && rep.flatness.is_none());
    assert!(adm_mass(&p).is_err());
}
