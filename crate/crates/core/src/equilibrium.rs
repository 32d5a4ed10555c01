//! Strategic link formation: long-term utilities, best responses, the
//! conjectural equilibrium (CE), best-response dynamics and their convergence
//! bounds, immunized and heterogeneous equilibria.
//!
//! Every solve reduces to a monotone scalar equation. The best response to an
//! infected fraction θ solves `u(a)/u'(a) - a = (ρ+δ)/(βθ)`; the left side rises
//! from 0 at `a = 0` to `+inf` at the peak `W`, so a bracketed bisection on
//! `(0, W)` always succeeds. The CE substitutes the stationary level
//! `θ = η - δ/(βa)` into the same condition.

use std::cell::Cell;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::meanfield::{check_fraction, hetero_balance, Regime};
use crate::ode::{self, StepControl, TrajectoryTrace};
use crate::params::{ModelParams, PopulationMix};
use crate::roots::{self, RootOptions};
use crate::utility::UtilityFunction;

/// Upper bracket end as a fraction of `W`; `u'` vanishes at `W` itself.
const PEAK_SHRINK: f64 = 1.0 - 1e-9;

/// Discounted long-term utilities of a healthy and an infected agent.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LongTermUtility {
    pub healthy: f64,
    pub infected: f64,
}

/// `U_H = ((ρ+δ)/ρ) u(a) / (ρ + δ + βθa)` and `U_I = δ/(ρ+δ) U_H`.
pub fn long_term_utility(a: f64, theta: f64, u: &UtilityFunction, params: &ModelParams) -> Result<LongTermUtility> {
    crate::meanfield::check_action(a)?;
    check_fraction("theta", theta)?;
    let ModelParams { beta, delta, rho, .. } = *params;
    let healthy = (rho + delta) / rho * u.value(a) / (rho + delta + beta * theta * a);
    Ok(LongTermUtility { healthy, infected: delta / (rho + delta) * healthy })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BestResponse {
    pub action: f64,
    /// The response hit the peak action `W` (θ = 0 or numerically indistinguishable from it).
    pub capped: bool,
    pub residual: f64,
}

/// Best response `a*(θ)` of a healthy agent that observes infected fraction `theta`.
pub fn best_response(theta: f64, u: &UtilityFunction, params: &ModelParams) -> Result<BestResponse> {
    check_fraction("theta", theta)?;
    best_response_for(theta, u, params, None)
}

/// Best response with the curing rate of `params`, optionally warm-started near `hint`.
pub(crate) fn best_response_for(theta: f64, u: &UtilityFunction, params: &ModelParams, hint: Option<f64>) -> Result<BestResponse> {
    let w = u.peak();
    if theta <= 0.0 {
        return Ok(BestResponse { action: w, capped: true, residual: 0.0 });
    }
    let target = (params.rho + params.delta) / (params.beta * theta);
    let f = |a: f64| u.response_lhs(a) - target;
    let df = |a: f64| u.response_lhs_slope(a);

    if let Some(h) = hint.filter(|h| h.is_finite() && *h > 0.0) {
        let (lo, hi) = (0.9 * h, (1.1 * h).min(w * PEAK_SHRINK));
        if lo < hi && f(lo) < 0.0 && f(hi) > 0.0 {
            let root = roots::bisect_newton(f, df, lo, hi, RootOptions::default())?;
            return Ok(BestResponse { action: root.x, capped: false, residual: root.residual });
        }
    }

    let hi = if w.is_finite() {
        let top = w * PEAK_SHRINK;
        if f(top) <= 0.0 {
            return Ok(BestResponse { action: w, capped: true, residual: 0.0 });
        }
        top
    } else {
        expand_upper(f, 1.0)?
    };
    let root = roots::bisect_newton(f, df, 0.0, hi, RootOptions::default())?;
    Ok(BestResponse { action: root.x, capped: false, residual: root.residual })
}

/// Doubles `start` until `f` turns positive (unbounded peak action).
fn expand_upper(f: impl Fn(f64) -> f64, start: f64) -> Result<f64> {
    let mut hi = start.max(1.0);
    for _ in 0..2000 {
        if f(hi) > 0.0 {
            return Ok(hi);
        }
        hi *= 2.0;
        if !hi.is_finite() {
            break;
        }
    }
    Err(Error::NonConvergence("could not bracket the best response from above".into()))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EquilibriumResult {
    /// Equilibrium number of links `a^CE`.
    pub action: f64,
    /// Stationary infected fraction at the equilibrium.
    pub theta: f64,
    /// Absolute residual of the equilibrium condition.
    pub residual: f64,
    pub bracket: (f64, f64),
    /// Susceptible fraction the equilibrium was computed for.
    pub eta: f64,
    pub regime: Regime,
}

/// Conjectural equilibrium without immunization.
pub fn solve_ce(u: &UtilityFunction, params: &ModelParams) -> Result<EquilibriumResult> {
    if u.peak() <= params.critical_action() {
        return Err(Error::TrivialRegime(format!(
            "peak action W = {} does not exceed a_c = {}; the epidemic always dies out",
            u.peak(),
            params.critical_action()
        )));
    }
    solve_ce_immunized(u, params, 1.0)
}

/// Residual of the equilibrium condition at action `a` for susceptible fraction `eta`.
pub fn ce_residual(a: f64, eta: f64, u: &UtilityFunction, params: &ModelParams) -> f64 {
    let ModelParams { beta, delta, rho, .. } = *params;
    u.response_lhs(a) - (rho + delta) / (eta * beta - delta / a)
}

/// Conjectural equilibrium when a fraction `1 - eta` of agents is immunized.
///
/// With a finite peak action the epidemic cannot persist once `ηβW <= δ`;
/// that case returns the extinct state with every agent at `W`.
pub fn solve_ce_immunized(u: &UtilityFunction, params: &ModelParams, eta: f64) -> Result<EquilibriumResult> {
    check_fraction("eta", eta)?;
    let ModelParams { beta, delta, rho, .. } = *params;
    let w = u.peak();
    let extinct = EquilibriumResult {
        action: w,
        theta: 0.0,
        residual: 0.0,
        bracket: (w, w),
        eta,
        regime: Regime::Extinct,
    };
    if eta == 0.0 || eta * beta * w <= delta {
        return Ok(extinct);
    }

    let floor = delta / (eta * beta);
    let f = |a: f64| ce_residual(a, eta, u, params);
    let df = |a: f64| {
        let gap = eta * beta - delta / a;
        u.response_lhs_slope(a) + (rho + delta) * delta / (a * a * gap * gap)
    };
    let lo = next_up(floor);
    let hi = if w.is_finite() { w * PEAK_SHRINK } else { expand_upper(f, 2.0 * floor)? };
    if hi <= lo {
        return Ok(extinct);
    }
    let root = match roots::bisect_newton(f, df, lo, hi, RootOptions::default()) {
        Ok(root) => root,
        // the equilibrium sits within float resolution of W
        Err(Error::NoBracket { f_hi, .. }) if f_hi <= 0.0 => return Ok(extinct),
        Err(e) => return Err(e),
    };
    let theta = eta - delta / (beta * root.x);
    if theta <= 0.0 {
        return Ok(extinct);
    }
    Ok(EquilibriumResult {
        action: root.x,
        theta,
        residual: root.residual,
        bracket: root.bracket,
        eta,
        regime: Regime::Endemic,
    })
}

fn next_up(x: f64) -> f64 {
    let bumped = x * (1.0 + 4.0 * f64::EPSILON);
    if bumped > x { bumped } else { x + f64::MIN_POSITIVE }
}

/// Parameter perturbed along a comparative-statics grid.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StaticsAxis {
    Rho,
    Delta,
    Beta,
}

impl StaticsAxis {
    /// Predicted direction of `a^CE` as the parameter grows.
    pub fn expected_increasing(self) -> bool {
        !matches!(self, StaticsAxis::Beta)
    }

    pub fn apply(self, params: &ModelParams, value: f64) -> ModelParams {
        match self {
            StaticsAxis::Rho => ModelParams { rho: value, ..*params },
            StaticsAxis::Delta => ModelParams { delta: value, ..*params },
            StaticsAxis::Beta => ModelParams { beta: value, ..*params },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StaticsReport {
    pub axis: StaticsAxis,
    pub values: Vec<f64>,
    pub actions: Vec<f64>,
    pub expected_increasing: bool,
    /// `a^CE` moves strictly in the predicted direction along the sorted grid.
    pub holds: bool,
}

/// Tabulates `a^CE` along one parameter axis and checks its direction.
pub fn comparative_statics(
    u: &UtilityFunction,
    params: &ModelParams,
    axis: StaticsAxis,
    values: &[f64],
) -> Result<StaticsReport> {
    let mut values = values.to_vec();
    values.sort_by(f64::total_cmp);
    let actions = values
        .iter()
        .map(|&v| {
            let p = axis.apply(params, v);
            p.validate()?;
            solve_ce(u, &p).map(|ce| ce.action)
        })
        .collect::<Result<Vec<_>>>()?;
    let expected_increasing = axis.expected_increasing();
    let holds = actions
        .windows(2)
        .all(|w| if expected_increasing { w[1] > w[0] } else { w[1] < w[0] });
    Ok(StaticsReport { axis, values, actions, expected_increasing, holds })
}

/// Drift `(1-θ)βa*(θ) - δ` of `ln θ` under best-response dynamics.
pub fn log_drift(theta: f64, u: &UtilityFunction, params: &ModelParams) -> Result<f64> {
    let br = best_response(theta, u, params)?;
    Ok((1.0 - theta) * params.beta * br.action - params.delta)
}

/// Integrates `dθ/dt = θ((1-θ)βa*(θ) - δ)` with a fresh best response at every stage.
pub fn integrate_best_response(
    theta0: f64,
    u: &UtilityFunction,
    params: &ModelParams,
    horizon: f64,
    control: &StepControl,
) -> Result<TrajectoryTrace> {
    check_fraction("theta0", theta0)?;
    if theta0 == 0.0 {
        return Err(Error::TrivialRegime("theta0 = 0 stays at zero; there is no epidemic to analyze".into()));
    }
    let last = Cell::new(None::<f64>);
    let failure = Cell::new(None::<Error>);
    let ModelParams { beta, delta, .. } = *params;
    let rhs = |theta: f64| {
        if theta <= 0.0 {
            return 0.0;
        }
        match best_response_for(theta, u, params, last.get()) {
            Ok(br) => {
                last.set(Some(br.action));
                theta * ((1.0 - theta) * beta * br.action - delta)
            }
            Err(e) => {
                failure.set(Some(e));
                f64::NAN
            }
        }
    };
    let result = ode::integrate(rhs, theta0, horizon, (0.0, 1.0), control);
    if let Some(e) = failure.take() {
        return Err(e);
    }
    let mut trace = result?;
    let mut hint = None;
    let actions = trace
        .thetas
        .iter()
        .map(|&theta| {
            let br = best_response_for(theta, u, params, hint)?;
            hint = Some(br.action);
            Ok(br.action)
        })
        .collect::<Result<Vec<_>>>()?;
    trace.actions = Some(actions);
    Ok(trace)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ConvergenceBounds {
    pub lower: f64,
    pub upper: f64,
    /// `θ^CE ± ε`, the level whose first hitting time is bounded.
    pub target_theta: f64,
    pub theta_ce: f64,
}

/// Bounds on the time best-response dynamics need to come within `epsilon` of `θ^CE`.
///
/// The log drift is monotone in θ, so its magnitude at `theta0` and at the
/// target level bound the average speed of `ln θ` along the way.
pub fn convergence_time_bounds(
    theta0: f64,
    epsilon: f64,
    u: &UtilityFunction,
    params: &ModelParams,
) -> Result<ConvergenceBounds> {
    check_fraction("theta0", theta0)?;
    if theta0 == 0.0 {
        return Err(Error::TrivialRegime("theta0 = 0 never converges".into()));
    }
    if !(epsilon.is_finite() && epsilon > 0.0) {
        return Err(Error::InvalidArgument(format!("epsilon must be > 0, got {epsilon}")));
    }
    let ce = solve_ce(u, params)?;
    if theta0 == ce.theta {
        return Err(Error::Precondition("theta0 equals the equilibrium level; the bounds degenerate".into()));
    }
    let target = if theta0 > ce.theta { ce.theta + epsilon } else { ce.theta - epsilon };
    if !(target > 0.0 && target < 1.0) {
        return Err(Error::InvalidArgument(format!("target level {target} leaves (0, 1)")));
    }
    if (theta0 - ce.theta).abs() <= epsilon {
        return Err(Error::InvalidArgument(format!(
            "theta0 = {theta0} is already within epsilon = {epsilon} of the equilibrium"
        )));
    }
    let distance = (theta0.ln() - target.ln()).abs();
    let fast = log_drift(theta0, u, params)?.abs();
    let slow = log_drift(target, u, params)?.abs();
    Ok(ConvergenceBounds { lower: distance / fast, upper: distance / slow, target_theta: target, theta_ce: ce.theta })
}

/// Per-type equilibrium of a heterogeneous population.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HeteroEquilibrium {
    pub actions: Vec<f64>,
    pub theta: f64,
    pub per_type_theta: Vec<f64>,
    /// `|g(θ) - 1|` of the outer consistency condition.
    pub residual: f64,
    /// Largest residual among the per-type best responses.
    pub inner_residual: f64,
    pub bracket: (f64, f64),
    pub regime: Regime,
}

/// Per-type best responses `a_k*(θ)` and the scaled loads `β a_k/δ_k`.
fn hetero_responses(
    theta: f64,
    u: &UtilityFunction,
    mix: &PopulationMix,
    params: &ModelParams,
) -> Result<Vec<(BestResponse, f64)>> {
    mix.deltas()
        .iter()
        .map(|&d| {
            let br = best_response_for(theta, u, &params.with_delta(d), None)?;
            Ok((br, params.beta * br.action / d))
        })
        .collect()
}

/// Conjectural equilibrium of a population whose types differ in curing rate.
///
/// Outer bisection on θ for the consistency condition `g(θ) = 1` (g is
/// decreasing because every `a_k*` decreases in θ), inner best responses per type.
pub fn solve_hetero_ce(u: &UtilityFunction, mix: &PopulationMix, params: &ModelParams) -> Result<HeteroEquilibrium> {
    let g = |theta: f64| -> Result<f64> {
        if theta <= 0.0 && !u.peak().is_finite() {
            return Ok(f64::INFINITY);
        }
        let x: Vec<f64> = hetero_responses(theta, u, mix, params)?.into_iter().map(|(_, x)| x).collect();
        Ok(hetero_balance(mix, &x, theta))
    };
    let dg = |theta: f64| -> Result<f64> {
        let responses = hetero_responses(theta, u, mix, params)?;
        Ok(responses
            .iter()
            .zip(mix.iter())
            .map(|((br, x), (w, d))| {
                let da = if br.capped {
                    0.0
                } else {
                    let target = (params.rho + d) / (params.beta * theta);
                    -(target / theta) / u.response_lhs_slope(br.action)
                };
                let dx = params.beta * da / d;
                w * (dx - x * x) / (theta * x + 1.0).powi(2)
            })
            .sum())
    };

    if g(0.0)? <= 0.0 {
        let w = u.peak();
        return Ok(HeteroEquilibrium {
            actions: vec![w; mix.len()],
            theta: 0.0,
            per_type_theta: vec![0.0; mix.len()],
            residual: 0.0,
            inner_residual: 0.0,
            bracket: (0.0, 0.0),
            regime: Regime::Extinct,
        });
    }

    let failure = Cell::new(None::<Error>);
    let capture = |r: Result<f64>| {
        r.unwrap_or_else(|e| {
            failure.set(Some(e));
            f64::NAN
        })
    };
    let root = roots::bisect_newton(|t| capture(g(t)), |t| capture(dg(t)), 0.0, 1.0, RootOptions::default());
    if let Some(e) = failure.take() {
        return Err(e);
    }
    let root = root?;
    let theta = root.x;
    let responses = hetero_responses(theta, u, mix, params)?;
    let inner_residual = responses.iter().map(|(br, _)| br.residual).fold(0.0, f64::max);
    Ok(HeteroEquilibrium {
        actions: responses.iter().map(|(br, _)| br.action).collect(),
        per_type_theta: responses.iter().map(|(_, x)| theta * x / (theta * x + 1.0)).collect(),
        theta,
        residual: root.residual,
        inner_residual,
        bracket: root.bracket,
        regime: Regime::Endemic,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::utility::{make_utility, Family};

    fn sqrt() -> UtilityFunction {
        make_utility(Family::Sqrt, &[1.0], 0.1).unwrap()
    }

    // 40-digit bisection of the equilibrium condition, sqrt family, c0 = 0.1
    const A_CE: f64 = 4.943_604_707_455_912;
    const THETA_CE: f64 = 0.393_155_363_843_023_3;

    #[test]
    fn reference_equilibrium() {
        let ce = solve_ce(&sqrt(), &ModelParams::default()).unwrap();
        assert!((ce.action - A_CE).abs() < 1e-10, "{}", ce.action);
        assert!((ce.theta - THETA_CE).abs() < 1e-10);
        assert!(ce.residual < 1e-10);
        assert!(ce.action > 3.0);
        assert!((ce.theta - (1.0 - 0.3 / (0.1 * ce.action))).abs() < 1e-12);
    }

    #[test]
    fn best_response_reference() {
        let p = ModelParams::default();
        let br = best_response(0.393, &sqrt(), &p).unwrap();
        assert!((br.action - 4.945_000_150_700_377).abs() < 1e-9);
        let br = best_response(THETA_CE, &sqrt(), &p).unwrap();
        assert!((br.action - A_CE).abs() < 1e-8);
        let zero = best_response(0.0, &sqrt(), &p).unwrap();
        assert!(zero.capped);
        assert_eq!(zero.action, 25.0);
    }

    #[test]
    fn long_term_utility_closed_form() {
        let p = ModelParams::default();
        let u = sqrt();
        let v = long_term_utility(6.0, 0.0, &u, &p).unwrap();
        assert!((v.healthy - u.value(6.0) / 0.05).abs() < 1e-12);
        assert_eq!(long_term_utility(0.0, 0.5, &u, &p).unwrap().healthy, 0.0);
        let v = long_term_utility(6.0, 0.5, &u, &p).unwrap();
        assert!((v.healthy - 19.917_581_845_357_30).abs() < 1e-10);
        assert!((v.infected - 0.3 / 0.35 * v.healthy).abs() < 1e-12);
    }

    #[test]
    fn trivial_regime_rejected() {
        // W = 0.25 < a_c = 3
        let u = make_utility(Family::Sqrt, &[1.0], 1.0).unwrap();
        assert!(matches!(solve_ce(&u, &ModelParams::default()), Err(Error::TrivialRegime(_))));
    }

    #[test]
    fn immunized_reductions() {
        let p = ModelParams::default();
        let u = sqrt();
        assert_eq!(solve_ce_immunized(&u, &p, 1.0).unwrap(), solve_ce(&u, &p).unwrap());
        assert_eq!(solve_ce_immunized(&u, &p, 0.0).unwrap().theta, 0.0);
        let r = solve_ce_immunized(&u, &p, 0.8).unwrap();
        assert!((r.action - 5.984_471_751_080_772).abs() < 1e-9);
        assert!((r.theta - 0.298_702_621_587_575_9).abs() < 1e-10);
        assert!(r.residual < 1e-10);
        // ηβW = 0.1 * 0.1 * 25 < δ
        let r = solve_ce_immunized(&u, &p, 0.1).unwrap();
        assert_eq!(r.regime, Regime::Extinct);
        assert_eq!(r.action, 25.0);
    }

    #[test]
    fn statics_directions() {
        let p = ModelParams::default();
        let u = sqrt();
        let r = comparative_statics(&u, &p, StaticsAxis::Rho, &[0.01, 0.05, 0.1, 0.2]).unwrap();
        assert!(r.holds && r.expected_increasing);
        let r = comparative_statics(&u, &p, StaticsAxis::Beta, &[0.05, 0.1, 0.2]).unwrap();
        assert!(r.holds && !r.expected_increasing);
        let r = comparative_statics(&u, &p, StaticsAxis::Delta, &[0.2, 0.3, 0.4]).unwrap();
        assert!(r.holds);
    }

    #[test]
    fn dynamics_reach_equilibrium() {
        let p = ModelParams::default();
        let u = sqrt();
        for theta0 in [0.01, 0.5, 0.99] {
            let trace = integrate_best_response(theta0, &u, &p, 400.0, &StepControl::default()).unwrap();
            assert!((trace.terminal_theta - THETA_CE).abs() < 1e-5, "theta0 = {theta0}");
            assert!(trace.monotonicity_violation() < 1e-12);
            assert_eq!(trace.actions.as_ref().unwrap().len(), trace.len());
        }
        let still = integrate_best_response(THETA_CE, &u, &p, 50.0, &StepControl::default()).unwrap();
        assert!(still.thetas.iter().all(|t| (t - THETA_CE).abs() < 1e-8));
        assert!(integrate_best_response(0.0, &u, &p, 10.0, &StepControl::default()).is_err());
    }

    #[test]
    fn bounds_guard_rails() {
        let p = ModelParams::default();
        let u = sqrt();
        assert!(convergence_time_bounds(0.9, 0.7, &u, &p).is_err());
        assert!(convergence_time_bounds(0.9, 0.6, &u, &p).is_err());
        let b = convergence_time_bounds(0.9, 0.01, &u, &p).unwrap();
        assert!(0.0 < b.lower && b.lower <= b.upper);
        assert!((b.target_theta - (THETA_CE + 0.01)).abs() < 1e-12);
    }

    #[test]
    fn hetero_two_types_reference() {
        let p = ModelParams::default();
        let mix = PopulationMix::new(vec![0.5, 0.5], vec![0.2, 0.4]).unwrap();
        let eq = solve_hetero_ce(&sqrt(), &mix, &p).unwrap();
        // nested 40-digit bisection
        assert!((eq.theta - 0.400_245_843_251_554_3).abs() < 1e-10);
        assert!((eq.actions[0] - 3.808_300_849_312_599).abs() < 1e-8);
        assert!((eq.actions[1] - 5.818_889_437_145_238).abs() < 1e-8);
        assert!(eq.residual < 1e-10);
    }
}
