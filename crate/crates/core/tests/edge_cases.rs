use epinet_core::efficiency::price_of_anarchy;
use epinet_core::equilibrium::{best_response, integrate_best_response, solve_ce, solve_ce_immunized, solve_hetero_ce};
use epinet_core::meanfield::Regime;
use epinet_core::protection::{extinction_eta, optimal_eta_strategic, strategic_theta_of_eta, ProtectionRegime};
use epinet_core::utility::{make_utility, Family};
use epinet_core::{Error, ModelParams, PopulationMix, StepControl};

#[test]
fn free_links_have_unbounded_peak() {
    let p = ModelParams { c0: 0.0, ..ModelParams::default() };
    for family in [Family::Log, Family::Sqrt] {
        let u = make_utility(family, &[], 0.0).unwrap();
        assert!(u.peak().is_infinite());
        let ce = solve_ce(&u, &p).unwrap();
        assert!(ce.action.is_finite() && ce.action > 3.0);
        assert!(ce.residual < 1e-10);
        let br = best_response(0.0, &u, &p).unwrap();
        assert!(br.capped && br.action.is_infinite());
        assert!(price_of_anarchy(&u, &p).unwrap().trivial_bound.is_none());
        let trace = integrate_best_response(0.05, &u, &p, 500.0, &StepControl::default()).unwrap();
        assert!((trace.terminal_theta - ce.theta).abs() < 1e-6);
    }
}

#[test]
fn costly_links_leave_heterogeneous_population_clean() {
    // W = 25/16 keeps every type below its threshold
    let u = make_utility(Family::Sqrt, &[1.0], 0.4).unwrap();
    let mix = PopulationMix::new(vec![0.5, 0.5], vec![0.2, 0.4]).unwrap();
    let eq = solve_hetero_ce(&u, &mix, &ModelParams::default()).unwrap();
    assert_eq!(eq.regime, Regime::Extinct);
    assert_eq!(eq.actions, vec![u.peak(); 2]);
    assert!(matches!(solve_ce(&u, &ModelParams::default()), Err(Error::TrivialRegime(_))));
}

#[test]
fn immunized_equilibrium_dies_below_extinction_level() {
    let p = ModelParams::default();
    let u = make_utility(Family::Cubic, &[1.0, 1e-5], 0.1).unwrap();
    let eta_ext = extinction_eta(&u, &p);
    assert_eq!(solve_ce_immunized(&u, &p, 0.99 * eta_ext).unwrap().regime, Regime::Extinct);
    let just_above = strategic_theta_of_eta(eta_ext * 1.01, &u, &p).unwrap();
    assert!(just_above > 0.0 && just_above < 1e-3);
    let cheap = optimal_eta_strategic(0.1, &u, &p).unwrap();
    assert_eq!(cheap.regime, ProtectionRegime::ImmunizeAll);
    assert_eq!(cheap.eta_star, eta_ext);
    assert!((cheap.total_cost - 0.1 * (1.0 - eta_ext)).abs() < 1e-15);
}

#[test]
fn invalid_inputs_are_rejected() {
    let p = ModelParams::default();
    let u = make_utility(Family::Sqrt, &[], 0.1).unwrap();
    assert!(best_response(1.5, &u, &p).is_err());
    assert!(solve_ce_immunized(&u, &p, -0.1).is_err());
    assert!(make_utility(Family::Sqrt, &[1.0, 2.0], 0.1).is_err());
    assert!(make_utility(Family::Log, &[1.0], 2.0).is_err());
}
