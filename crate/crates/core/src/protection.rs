//! Immunization policies: total cost `D(η) = θ(η) + γ(1 - η)` of leaving a
//! fraction `η` of agents susceptible, minimized for a fixed network and for a
//! population that re-equilibrates its links after every choice of `η`.

use rayon::prelude::*;
use serde::Serialize;

use crate::equilibrium::{solve_ce, solve_ce_immunized};
use crate::error::{Error, Result};
use crate::meanfield::{check_action, stationary_theta_immunized};
use crate::params::ModelParams;
use crate::roots::{self, RootOptions};
use crate::utility::UtilityFunction;

/// Offset from the ends of the susceptible range at which `θ'` is evaluated.
pub const EDGE_OFFSET: f64 = 1e-4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ProtectionRegime {
    ImmunizeNone,
    Interior,
    /// Immunize everyone the epidemic needs to die out: `η* = 0` for an
    /// unbounded peak action, `η* = δ/(βW)` otherwise.
    ImmunizeAll,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ProtectionPolicy {
    pub eta_star: f64,
    pub regime: ProtectionRegime,
    pub total_cost: f64,
    /// Infected fraction at `eta_star`.
    pub theta: f64,
    pub gamma1: Option<f64>,
    pub gamma2: Option<f64>,
}

fn check_gamma(gamma: f64) -> Result<()> {
    if gamma.is_finite() && gamma >= 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!("gamma must be finite and >= 0, got {gamma}")))
    }
}

/// `D(a, η) = θ(a, η) + γ(1 - η)` for a fixed number of links `a`.
pub fn total_cost_fixed(a: f64, eta: f64, gamma: f64, params: &ModelParams) -> Result<f64> {
    check_gamma(gamma)?;
    let theta = stationary_theta_immunized(a, eta, params)?.theta;
    Ok(theta + gamma * (1.0 - eta))
}

/// Cost-minimizing susceptible fraction for agents that keep `a` links.
///
/// Immunizing down to `δ/(βa)` eradicates the infection; it pays off exactly
/// when one immunization is no dearer than one infection (`γ <= 1`).
pub fn optimal_eta_fixed(a: f64, gamma: f64, params: &ModelParams) -> Result<ProtectionPolicy> {
    check_action(a)?;
    check_gamma(gamma)?;
    if stationary_theta_immunized(a, 1.0, params)?.theta == 0.0 {
        return Err(Error::TrivialRegime(format!(
            "a = {a} does not exceed a_c = {}; no immunization is needed",
            params.critical_action()
        )));
    }
    let (eta_star, regime) = if gamma <= 1.0 {
        (params.delta / (params.beta * a), ProtectionRegime::Interior)
    } else {
        (1.0, ProtectionRegime::ImmunizeNone)
    };
    let theta = stationary_theta_immunized(a, eta_star, params)?.theta;
    Ok(ProtectionPolicy {
        eta_star,
        regime,
        total_cost: theta + gamma * (1.0 - eta_star),
        theta,
        gamma1: None,
        gamma2: None,
    })
}

/// Grid minimizer of `D(a, η)` over `n` evenly spaced `η`, ties toward smaller `η`.
pub fn fixed_cost_argmin(a: f64, gamma: f64, params: &ModelParams, n: usize) -> Result<(f64, f64)> {
    let costs = (0..n)
        .map(|i| {
            let eta = grid_point(i, n);
            total_cost_fixed(a, eta, gamma, params).map(|d| (eta, d))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(argmin(costs.into_iter()))
}

fn grid_point(i: usize, n: usize) -> f64 {
    if n < 2 { 1.0 } else { i as f64 / (n - 1) as f64 }
}

fn argmin(points: impl Iterator<Item = (f64, f64)>) -> (f64, f64) {
    points.fold((f64::NAN, f64::INFINITY), |best, p| if p.1 < best.1 { p } else { best })
}

/// Infected fraction when agents re-equilibrate their links for susceptible fraction `eta`.
pub fn strategic_theta_of_eta(eta: f64, u: &UtilityFunction, params: &ModelParams) -> Result<f64> {
    Ok(solve_ce_immunized(u, params, eta)?.theta)
}

/// Susceptible fraction at or below which the strategic population is infection free.
pub fn extinction_eta(u: &UtilityFunction, params: &ModelParams) -> f64 {
    (params.delta / (params.beta * u.peak())).min(1.0)
}

fn check_strategic(u: &UtilityFunction, params: &ModelParams) -> Result<()> {
    if !u.third_derivative_negative() {
        return Err(Error::Precondition(format!(
            "the {} utility does not have u''' < 0 on its domain; strategic protection needs it",
            u.family()
        )));
    }
    let floor = 10.0 * params.critical_action();
    if u.peak() <= floor {
        return Err(Error::Precondition(format!(
            "peak action W = {} must exceed 10 a_c = {floor}",
            u.peak()
        )));
    }
    Ok(())
}

/// Richardson-extrapolated central difference of `θ(η)` with base step `EDGE_OFFSET / 2`.
pub fn strategic_theta_prime(eta: f64, u: &UtilityFunction, params: &ModelParams) -> Result<f64> {
    let h = 0.5 * EDGE_OFFSET;
    let theta = |e: f64| strategic_theta_of_eta(e, u, params);
    if eta - h < 0.0 || eta + h > 1.0 {
        return Err(Error::InvalidArgument(format!("eta = {eta} is within {h} of the range ends")));
    }
    let central = |step: f64| -> Result<f64> { Ok((theta(eta + step)? - theta(eta - step)?) / (2.0 * step)) };
    let coarse = central(h)?;
    let fine = central(0.5 * h)?;
    Ok((4.0 * fine - coarse) / 3.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ThresholdCosts {
    /// `θ'` just above the extinction level.
    pub gamma1: f64,
    /// `θ'` just below `η = 1`.
    pub gamma2: f64,
    pub extinction_eta: f64,
}

/// One-sided limits of `θ'(η)` at the two ends of the endemic range.
///
/// With a finite peak action the lower end is `δ/(βW)` rather than 0; below it
/// `θ` vanishes identically.
pub fn theta_prime_limits(u: &UtilityFunction, params: &ModelParams) -> Result<ThresholdCosts> {
    check_strategic(u, params)?;
    let extinction_eta = extinction_eta(u, params);
    let gamma1 = strategic_theta_prime(extinction_eta + EDGE_OFFSET, u, params)?;
    let gamma2 = strategic_theta_prime(1.0 - EDGE_OFFSET, u, params)?;
    if gamma1 >= gamma2 {
        return Err(Error::Precondition(format!(
            "theta' is not increasing across the endemic range (gamma1 = {gamma1}, gamma2 = {gamma2})"
        )));
    }
    Ok(ThresholdCosts { gamma1, gamma2, extinction_eta })
}

/// Cost-minimizing susceptible fraction when agents respond strategically.
pub fn optimal_eta_strategic(gamma: f64, u: &UtilityFunction, params: &ModelParams) -> Result<ProtectionPolicy> {
    check_gamma(gamma)?;
    let limits = theta_prime_limits(u, params)?;
    optimal_eta_with_limits(gamma, &limits, u, params)
}

fn optimal_eta_with_limits(
    gamma: f64,
    limits: &ThresholdCosts,
    u: &UtilityFunction,
    params: &ModelParams,
) -> Result<ProtectionPolicy> {
    let (eta_star, regime) = if gamma <= limits.gamma1 {
        (limits.extinction_eta, ProtectionRegime::ImmunizeAll)
    } else if gamma >= limits.gamma2 {
        (1.0, ProtectionRegime::ImmunizeNone)
    } else {
        let lo = limits.extinction_eta + EDGE_OFFSET;
        let hi = 1.0 - EDGE_OFFSET;
        let failure = std::cell::Cell::new(None::<Error>);
        let slope_gap = |eta: f64| match strategic_theta_prime(eta, u, params) {
            Ok(d) => d - gamma,
            Err(e) => {
                failure.set(Some(e));
                f64::NAN
            }
        };
        let root = roots::bisect(slope_gap, lo, hi, RootOptions { x_tol: 1e-10, ..Default::default() });
        if let Some(e) = failure.take() {
            return Err(e);
        }
        (root?.x, ProtectionRegime::Interior)
    };
    let theta = strategic_theta_of_eta(eta_star, u, params)?;
    Ok(ProtectionPolicy {
        eta_star,
        regime,
        total_cost: theta + gamma * (1.0 - eta_star),
        theta,
        gamma1: Some(limits.gamma1),
        gamma2: Some(limits.gamma2),
    })
}

/// `θ(η)` on `n` evenly spaced susceptible fractions in `[0, 1]`.
pub fn strategic_theta_curve(u: &UtilityFunction, params: &ModelParams, n: usize) -> Result<Vec<(f64, f64)>> {
    (0..n)
        .into_par_iter()
        .map(|i| {
            let eta = grid_point(i, n);
            strategic_theta_of_eta(eta, u, params).map(|theta| (eta, theta))
        })
        .collect()
}

/// Grid minimizer of `D(η)` along a precomputed `θ(η)` curve, ties toward smaller `η`.
pub fn curve_cost_argmin(curve: &[(f64, f64)], gamma: f64) -> (f64, f64) {
    argmin(curve.iter().map(|&(eta, theta)| (eta, theta + gamma * (1.0 - eta))))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MisdesignRow {
    pub gamma: f64,
    /// Policy chosen as if links stayed at the unprotected equilibrium.
    pub eta_fixed: f64,
    pub eta_strategic: f64,
    pub cost_fixed: f64,
    pub cost_strategic: f64,
    /// `cost_fixed / cost_strategic`.
    pub ratio: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MisdesignReport {
    pub rows: Vec<MisdesignRow>,
    pub gamma1: f64,
    pub gamma2: f64,
    /// Cost at which the fixed-network policy happens to be optimal.
    pub crossover_gamma: Option<f64>,
    /// Action `a^CE` the fixed-network designer plans around.
    pub planning_action: f64,
}

/// Cost of designing immunization for a fixed network when agents actually
/// re-equilibrate, relative to the strategic optimum.
pub fn misdesign_cost(gammas: &[f64], u: &UtilityFunction, params: &ModelParams) -> Result<MisdesignReport> {
    if gammas.is_empty() {
        return Err(Error::InvalidArgument("gamma grid is empty".into()));
    }
    if let Some(g) = gammas.iter().find(|g| !(g.is_finite() && **g > 0.0)) {
        return Err(Error::InvalidArgument(format!("misdesign costs need gamma > 0, got {g}")));
    }
    let limits = theta_prime_limits(u, params)?;
    let ce = solve_ce(u, params)?;
    let rows = gammas
        .par_iter()
        .map(|&gamma| {
            let fixed = optimal_eta_fixed(ce.action, gamma, params)?;
            let strategic = optimal_eta_with_limits(gamma, &limits, u, params)?;
            let cost_fixed = strategic_theta_of_eta(fixed.eta_star, u, params)? + gamma * (1.0 - fixed.eta_star);
            Ok(MisdesignRow {
                gamma,
                eta_fixed: fixed.eta_star,
                eta_strategic: strategic.eta_star,
                cost_fixed,
                cost_strategic: strategic.total_cost,
                ratio: cost_fixed / strategic.total_cost,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let planned = params.delta / (params.beta * ce.action);
    let crossover_gamma = if planned > limits.extinction_eta + EDGE_OFFSET && planned < 1.0 - EDGE_OFFSET {
        Some(strategic_theta_prime(planned, u, params)?)
    } else {
        None
    };
    Ok(MisdesignReport {
        rows,
        gamma1: limits.gamma1,
        gamma2: limits.gamma2,
        crossover_gamma,
        planning_action: ce.action,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::utility::{make_utility, Family};

    fn cubic() -> UtilityFunction {
        make_utility(Family::Cubic, &[1.0, 1e-5], 0.1).unwrap()
    }

    #[test]
    fn fixed_cost_examples() {
        let p = ModelParams::default();
        assert!((total_cost_fixed(6.0, 1.0, 0.5, &p).unwrap() - 0.5).abs() < 1e-15);
        assert_eq!(total_cost_fixed(6.0, 0.0, 0.7, &p).unwrap(), 0.7);
        let eta = 0.3 / (0.1 * 6.0);
        assert!((total_cost_fixed(6.0, eta, 0.4, &p).unwrap() - 0.4 * (1.0 - eta)).abs() < 1e-15);
    }

    #[test]
    fn fixed_policy() {
        let p = ModelParams::default();
        let low = optimal_eta_fixed(4.47, 0.3, &p).unwrap();
        assert!((low.eta_star - 0.3 / 0.447).abs() < 1e-15);
        assert_eq!((low.eta_star * 100.0).round() / 100.0, 0.67);
        assert_eq!(low.regime, ProtectionRegime::Interior);
        assert_eq!(optimal_eta_fixed(4.47, 0.9, &p).unwrap().eta_star, optimal_eta_fixed(4.47, 0.1, &p).unwrap().eta_star);
        let high = optimal_eta_fixed(4.47, 1.5, &p).unwrap();
        assert_eq!((high.eta_star, high.regime), (1.0, ProtectionRegime::ImmunizeNone));
        assert!(matches!(optimal_eta_fixed(2.0, 0.3, &p), Err(Error::TrivialRegime(_))));
    }

    #[test]
    fn fixed_grid_agrees() {
        let p = ModelParams::default();
        for (a, gamma) in [(4.47, 0.3), (8.0, 0.95), (5.0, 1.2)] {
            let rule = optimal_eta_fixed(a, gamma, &p).unwrap();
            let (eta, _) = fixed_cost_argmin(a, gamma, &p, 1001).unwrap();
            assert!((eta - rule.eta_star).abs() <= 1e-3 + 1e-12, "a = {a}, gamma = {gamma}");
        }
    }

    #[test]
    fn strategic_reductions() {
        let p = ModelParams::default();
        let u = cubic();
        assert_eq!(strategic_theta_of_eta(0.0, &u, &p).unwrap(), 0.0);
        assert_eq!(strategic_theta_of_eta(1.0, &u, &p).unwrap(), solve_ce(&u, &p).unwrap().theta);
        assert_eq!(strategic_theta_of_eta(0.5 * extinction_eta(&u, &p), &u, &p).unwrap(), 0.0);
    }

    #[test]
    fn assumption_gate() {
        let p = ModelParams::default();
        let sqrt = make_utility(Family::Sqrt, &[1.0], 0.1).unwrap();
        assert!(matches!(theta_prime_limits(&sqrt, &p), Err(Error::Precondition(_))));
        // W = 17.3 < 10 a_c
        let narrow = make_utility(Family::Cubic, &[1.0, 1e-3], 0.1).unwrap();
        assert!(matches!(optimal_eta_strategic(0.5, &narrow, &p), Err(Error::Precondition(_))));
    }

    #[test]
    fn strategic_thresholds() {
        let p = ModelParams::default();
        let u = cubic();
        let t = theta_prime_limits(&u, &p).unwrap();
        // central differences on a 1e-15 bisection of the equilibrium condition
        assert!((t.gamma1 - 0.778).abs() < 2e-3, "{}", t.gamma1);
        assert!((t.gamma2 - 0.98174).abs() < 1e-4, "{}", t.gamma2);
        assert!((t.extinction_eta - 0.3 / (0.1 * u.peak())).abs() < 1e-15);

        let all = optimal_eta_strategic(0.5 * t.gamma1, &u, &p).unwrap();
        assert_eq!(all.regime, ProtectionRegime::ImmunizeAll);
        assert_eq!(all.theta, 0.0);
        let none = optimal_eta_strategic(1.01 * t.gamma2, &u, &p).unwrap();
        assert_eq!((none.regime, none.eta_star), (ProtectionRegime::ImmunizeNone, 1.0));
        let mid = optimal_eta_strategic(0.5 * (t.gamma1 + t.gamma2), &u, &p).unwrap();
        assert_eq!(mid.regime, ProtectionRegime::Interior);
        let slope = strategic_theta_prime(mid.eta_star, &u, &p).unwrap();
        assert!((slope - 0.5 * (t.gamma1 + t.gamma2)).abs() < 1e-7);
    }

    #[test]
    fn misdesign_never_beats_optimum() {
        let p = ModelParams::default();
        let u = cubic();
        let report = misdesign_cost(&[0.1, 0.5, 0.8, 0.9, 0.97, 1.5], &u, &p).unwrap();
        for row in &report.rows {
            assert!(row.ratio >= 1.0 - 1e-9, "{row:?}");
        }
        let x = report.crossover_gamma.unwrap();
        assert!(x > report.gamma1 && x < report.gamma2);
        let at = misdesign_cost(&[x], &u, &p).unwrap();
        assert!((at.rows[0].ratio - 1.0).abs() < 1e-6);
        assert!(misdesign_cost(&[0.0], &u, &p).is_err());
    }
}
