//! Social efficiency of symmetric link choices and the price of anarchy of
//! the conjectural equilibrium.

use serde::Serialize;

use crate::equilibrium::solve_ce;
use crate::error::{Error, Result};
use crate::meanfield::check_action;
use crate::params::ModelParams;
use crate::utility::UtilityFunction;

/// Relative gap below which the bound comparison counts as a tie.
const TIE_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum PoaClass {
    PoaBelowKappa,
    PoaAboveKappa,
    PoaEqualsKappa,
    /// `W <= a†`: only the bound `E^OPT / E(W)` applies.
    TrivialWRegime,
}

/// Long-run average utility per agent, `(1 - θ(a)) u(a)`.
pub fn efficiency(a: f64, u: &UtilityFunction, params: &ModelParams) -> Result<f64> {
    check_action(a)?;
    Ok(efficiency_unchecked(a, u, params))
}

fn efficiency_unchecked(a: f64, u: &UtilityFunction, params: &ModelParams) -> f64 {
    let healthy = if params.beta * a > params.delta { params.delta / (params.beta * a) } else { 1.0 };
    healthy * u.value(a)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SocialOptimum {
    pub action: f64,
    pub efficiency: f64,
    /// The peak action is reached before the epidemic threshold, so the optimum is `W`.
    pub trivial: bool,
}

/// Efficiency-maximizing symmetric action: the epidemic threshold `a_c`, or `W` below it.
pub fn social_optimum(u: &UtilityFunction, params: &ModelParams) -> SocialOptimum {
    let a_c = params.critical_action();
    let w = u.peak();
    if w <= a_c {
        SocialOptimum { action: w, efficiency: u.value(w), trivial: true }
    } else {
        SocialOptimum { action: a_c, efficiency: u.value(a_c), trivial: false }
    }
}

/// `a† = (δ + sqrt(δ² + ρδ))/β`, the minimizer of `(βa² + ρa)/(βa - δ)` on `(a_c, inf)`.
pub fn dagger_action(params: &ModelParams) -> f64 {
    let ModelParams { beta, delta, rho, .. } = *params;
    (delta + (delta * delta + rho * delta).sqrt()) / beta
}

/// `f(a) = (βa² + ρa)/(βa - δ)`; its minimum value is `2a† + ρ/β`.
pub fn dagger_objective(a: f64, params: &ModelParams) -> f64 {
    let ModelParams { beta, delta, rho, .. } = *params;
    (beta * a * a + rho * a) / (beta * a - delta)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PoaBound {
    pub classification: PoaClass,
    pub a_dagger: f64,
    pub kappa: f64,
    /// `u'(a†)`.
    pub marginal: f64,
    /// `u(a†) / (2a† + ρ/β)`.
    pub threshold: f64,
}

/// Classifies the price of anarchy against `κ = a† u(a_c) / (a_c u(a†))` from
/// the marginal utility at `a†` alone.
pub fn poa_bound_classify(u: &UtilityFunction, params: &ModelParams) -> Result<PoaBound> {
    let a_c = params.critical_action();
    if u.peak() <= a_c {
        return Err(Error::TrivialRegime(format!("peak action W = {} does not exceed a_c = {a_c}", u.peak())));
    }
    let a_dagger = dagger_action(params);
    let kappa = a_dagger * u.value(a_c) / (a_c * u.value(a_dagger));
    let marginal = u.d1(a_dagger);
    let threshold = u.value(a_dagger) / (2.0 * a_dagger + params.rho / params.beta);
    let classification = if u.peak() <= a_dagger {
        PoaClass::TrivialWRegime
    } else if (marginal - threshold).abs() <= TIE_TOL * threshold.abs() {
        PoaClass::PoaEqualsKappa
    } else if marginal < threshold {
        PoaClass::PoaBelowKappa
    } else {
        PoaClass::PoaAboveKappa
    };
    Ok(PoaBound { classification, a_dagger, kappa, marginal, threshold })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EfficiencyReport {
    pub a_opt: f64,
    pub e_opt: f64,
    pub a_ce: f64,
    pub e_ce: f64,
    pub theta_ce: f64,
    pub poa: f64,
    /// `E^OPT / E(W)`; `None` when `W` is unbounded.
    pub trivial_bound: Option<f64>,
    pub a_dagger: f64,
    pub kappa: f64,
    pub classification: PoaClass,
}

/// Price of anarchy `E^OPT / E^CE` of the (unique) conjectural equilibrium.
pub fn price_of_anarchy(u: &UtilityFunction, params: &ModelParams) -> Result<EfficiencyReport> {
    let ce = solve_ce(u, params)?;
    let opt = social_optimum(u, params);
    let e_ce = efficiency_unchecked(ce.action, u, params);
    let w = u.peak();
    let trivial_bound = w.is_finite().then(|| opt.efficiency / efficiency_unchecked(w, u, params));
    let bound = poa_bound_classify(u, params)?;
    Ok(EfficiencyReport {
        a_opt: opt.action,
        e_opt: opt.efficiency,
        a_ce: ce.action,
        e_ce,
        theta_ce: ce.theta,
        poa: opt.efficiency / e_ce,
        trivial_bound,
        a_dagger: bound.a_dagger,
        kappa: bound.kappa,
        classification: bound.classification,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::utility::{make_utility, Family};

    fn sqrt() -> UtilityFunction {
        make_utility(Family::Sqrt, &[1.0], 0.1).unwrap()
    }

    #[test]
    fn efficiency_values() {
        let p = ModelParams::default();
        let u = sqrt();
        assert_eq!(efficiency(0.0, &u, &p).unwrap(), 0.0);
        assert_eq!(efficiency(p.critical_action(), &u, &p).unwrap(), u.value(p.critical_action()));
        assert!((efficiency(4.94, &u, &p).unwrap() - 1.049_763_811_997_543).abs() < 1e-12);
        assert!((efficiency(25.0, &u, &p).unwrap() - 0.3).abs() < 1e-12);
        assert!(efficiency(-1.0, &u, &p).is_err());
    }

    #[test]
    fn optimum_and_poa() {
        let p = ModelParams::default();
        let u = sqrt();
        let opt = social_optimum(&u, &p);
        assert!(!opt.trivial);
        assert!((opt.efficiency - (3f64.sqrt() - 0.3)).abs() < 1e-12);
        let r = price_of_anarchy(&u, &p).unwrap();
        assert!((r.poa - 1.364_804_668_575_219).abs() < 1e-9);
        assert!((r.e_ce - 1.049_271_621_457_640).abs() < 1e-10);
        assert!((r.trivial_bound.unwrap() - 4.773_502_691_896_258).abs() < 1e-9);
        assert!(r.poa < r.trivial_bound.unwrap());
        assert_eq!(r.classification, PoaClass::PoaBelowKappa);
        assert!(r.poa < r.kappa);
    }

    #[test]
    fn dagger_values() {
        let p = ModelParams::default();
        let b = poa_bound_classify(&sqrt(), &p).unwrap();
        assert!((b.a_dagger - 6.240_370_349_203_930).abs() < 1e-12);
        assert!((b.kappa - 1.589_532_965_794_687).abs() < 1e-12);
        assert!((b.marginal - 0.100_154_252_683_578).abs() < 1e-12);
        assert!((b.threshold - 0.144_370_520_608_027).abs() < 1e-12);
        let fmin = dagger_objective(b.a_dagger, &p);
        assert!((fmin - (2.0 * b.a_dagger + 0.5)).abs() < 1e-9);
        assert!(b.a_dagger > 2.0 * p.critical_action());
    }

    #[test]
    fn trivial_regimes() {
        let p = ModelParams::default();
        // W = 25/16 < a_c
        let small = make_utility(Family::Sqrt, &[1.0], 0.4).unwrap();
        let opt = social_optimum(&small, &p);
        assert!(opt.trivial && opt.action == small.peak());
        // W = 4 lies between a_c and a† = 6.24
        let mid = make_utility(Family::Sqrt, &[1.0], 0.25).unwrap();
        assert_eq!(poa_bound_classify(&mid, &p).unwrap().classification, PoaClass::TrivialWRegime);
    }
}
