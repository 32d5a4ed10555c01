mod common;

use epinet_core::efficiency::{efficiency, price_of_anarchy, social_optimum};
use epinet_core::equilibrium::{best_response, solve_ce, solve_ce_immunized};
use epinet_core::meanfield::{hetero_balance, stationary_theta, stationary_theta_immunized};
use epinet_core::protection::{fixed_cost_argmin, optimal_eta_fixed};
use epinet_core::utility::{make_utility, Family, UtilityFunction};
use epinet_core::{ModelParams, PopulationMix};
use proptest::prelude::*;

fn family() -> impl Strategy<Value = Family> {
    prop::sample::select(Family::ALL.to_vec())
}

fn params() -> impl Strategy<Value = ModelParams> {
    (0.05..0.5f64, 0.1..0.5f64, 0.01..0.2f64).prop_map(|(beta, delta, rho)| ModelParams::new(beta, delta, rho, 0.1).unwrap())
}

/// Family default shape with link cost 0.1, paired with rates that keep `W > a_c`.
fn instance() -> impl Strategy<Value = (UtilityFunction, ModelParams)> {
    (family(), params())
        .prop_map(|(f, p)| (make_utility(f, &[], 0.1).unwrap(), p))
        .prop_filter("peak beyond threshold", |(u, p)| u.peak() > 1.01 * p.critical_action())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn stationary_level_below_susceptible_share(a in 0.0..50.0f64, eta in 0.0..=1.0f64, p in params()) {
        let theta = stationary_theta_immunized(a, eta, &p).unwrap().theta;
        prop_assert!((0.0..1.0).contains(&theta));
        prop_assert!(theta <= eta);
        if eta > 0.0 {
            prop_assert!(theta < eta);
        }
        prop_assert!(theta <= stationary_theta(a, &p).unwrap().theta);
    }

    #[test]
    fn response_ratio_increasing(f in family(), x in 0.01..0.98f64) {
        let u = make_utility(f, &[], 0.1).unwrap();
        let w = u.peak();
        let (lo, hi) = (x * w, (x + 0.01) * w);
        prop_assert!(u.ratio(hi) > u.ratio(lo));
        prop_assert!(u.response_lhs_slope(lo) > 0.0);
    }

    #[test]
    fn best_response_falls_with_risk((u, p) in instance(), t in 0.01..0.98f64) {
        let lo = best_response(t, &u, &p).unwrap();
        let hi = best_response(t + 0.01, &u, &p).unwrap();
        prop_assert!(hi.action <= lo.action);
        prop_assert!(lo.action <= u.peak());
    }

    #[test]
    fn equilibrium_is_consistent((u, p) in instance()) {
        let ce = solve_ce(&u, &p).unwrap();
        prop_assert!(ce.action > p.critical_action() && ce.action < u.peak());
        prop_assert!((ce.theta - stationary_theta(ce.action, &p).unwrap().theta).abs() < 1e-12);
        let br = best_response(ce.theta, &u, &p).unwrap();
        prop_assert!((br.action - ce.action).abs() < 1e-6 * ce.action);
    }

    #[test]
    fn immunization_lowers_infection((u, p) in instance(), eta in 0.05..1.0f64) {
        let partial = solve_ce_immunized(&u, &p, eta).unwrap();
        let full = solve_ce(&u, &p).unwrap();
        prop_assert!(partial.theta <= full.theta + 1e-12);
        prop_assert!(partial.theta < eta);
    }

    #[test]
    fn scale_leaves_equilibrium_and_poa((u, p) in instance(), factor in 0.2..5.0f64) {
        let scaled = u.scaled(factor).unwrap();
        let (a, b) = (price_of_anarchy(&u, &p).unwrap(), price_of_anarchy(&scaled, &p).unwrap());
        prop_assert!((a.a_ce - b.a_ce).abs() < 1e-8 * a.a_ce);
        prop_assert!((a.poa - b.poa).abs() < 1e-8 * a.poa);
        prop_assert_eq!(a.a_opt, b.a_opt);
    }

    #[test]
    fn poa_within_trivial_bound((u, p) in instance()) {
        let r = price_of_anarchy(&u, &p).unwrap();
        prop_assert!(r.poa >= 1.0);
        if let Some(bound) = r.trivial_bound {
            prop_assert!(r.poa < bound);
        }
    }

    #[test]
    fn efficiency_peaks_at_threshold((u, p) in instance(), x in 0.0..1.0f64) {
        let opt = social_optimum(&u, &p);
        let a = p.critical_action() + x * (u.peak() - p.critical_action()) + 1e-9;
        prop_assert!(efficiency(a, &u, &p).unwrap() < opt.efficiency);
    }

    #[test]
    fn fixed_protection_matches_grid(a in 3.1..30.0f64, gamma in 0.0..3.0f64) {
        let p = ModelParams::default();
        let rule = optimal_eta_fixed(a, gamma, &p).unwrap();
        let (eta, cost) = fixed_cost_argmin(a, gamma, &p, 1001).unwrap();
        prop_assert!((eta - rule.eta_star).abs() <= 1e-3 + 1e-12);
        prop_assert!(rule.total_cost <= cost + 1e-12);
    }

    #[test]
    fn hetero_balance_decreasing(w in 0.05..0.95f64, x1 in 0.1..20.0f64, x2 in 0.1..20.0f64, t in 0.0..0.99f64) {
        let mix = PopulationMix::new(vec![w, 1.0 - w], vec![0.2, 0.4]).unwrap();
        prop_assert!(hetero_balance(&mix, &[x1, x2], t + 0.01) < hetero_balance(&mix, &[x1, x2], t));
    }
}
