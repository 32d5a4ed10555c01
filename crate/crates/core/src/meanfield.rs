//! Stationary infection levels and mean-field dynamics under fixed strategies.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::ode::{self, StepControl, TrajectoryTrace};
use crate::params::{ModelParams, PopulationMix};
use crate::roots::{self, RootOptions};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Regime {
    Extinct,
    Endemic,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StationaryState {
    pub theta: f64,
    pub regime: Regime,
    /// Infected fraction within each type (heterogeneous populations only).
    pub per_type_theta: Option<Vec<f64>>,
    /// Residual of the defining stationarity equation (zero for closed forms).
    pub residual: f64,
}

impl StationaryState {
    fn extinct() -> Self {
        Self { theta: 0.0, regime: Regime::Extinct, per_type_theta: None, residual: 0.0 }
    }

    fn from_theta(theta: f64) -> Self {
        if theta > 0.0 {
            Self { theta, regime: Regime::Endemic, per_type_theta: None, residual: 0.0 }
        } else {
            Self::extinct()
        }
    }
}

/// `a_c = δ/β`: fixed symmetric strategies at or below it die out.
pub fn critical_action(params: &ModelParams) -> f64 {
    params.critical_action()
}

/// Stationary infected fraction `1 - δ/(βa)` above the threshold, zero at or below it.
pub fn stationary_theta(a: f64, params: &ModelParams) -> Result<StationaryState> {
    stationary_theta_immunized(a, 1.0, params)
}

/// Critical effective infection rate `1/a` for a network of degree `a`.
pub fn critical_effective_rate(a: f64) -> Result<f64> {
    if !(a.is_finite() && a > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "critical effective rate is undefined for degree {a}"
        )));
    }
    Ok(1.0 / a)
}

/// Stationary infected fraction as a function of the effective rate `υ = β/δ`.
pub fn theta_of_effective_rate(a: f64, upsilon: f64) -> Result<f64> {
    let critical = critical_effective_rate(a)?;
    if !(upsilon.is_finite() && upsilon >= 0.0) {
        return Err(Error::InvalidArgument(format!("effective rate must be >= 0, got {upsilon}")));
    }
    Ok(if upsilon <= critical { 0.0 } else { 1.0 - 1.0 / (upsilon * a) })
}

/// Stationary infected fraction when only a fraction `eta` of agents is susceptible.
pub fn stationary_theta_immunized(a: f64, eta: f64, params: &ModelParams) -> Result<StationaryState> {
    check_action(a)?;
    check_fraction("eta", eta)?;
    if a == 0.0 {
        return Ok(StationaryState::extinct());
    }
    let threshold = params.delta / (params.beta * a);
    // a few ulps of slack so that a = δ/β lands on the extinct side
    let endemic = eta * params.beta * a > params.delta * (1.0 + 4.0 * f64::EPSILON);
    Ok(StationaryState::from_theta(if endemic { eta - threshold } else { 0.0 }))
}

/// Integrates `dθ/dt = θ((1-θ)aβ - δ)` from `theta0` over `[0, horizon]`.
pub fn integrate_fixed(
    theta0: f64,
    a: f64,
    params: &ModelParams,
    horizon: f64,
    control: &StepControl,
) -> Result<TrajectoryTrace> {
    check_fraction("theta0", theta0)?;
    check_action(a)?;
    let (beta, delta) = (params.beta, params.delta);
    let mut trace = ode::integrate(
        |theta| theta * ((1.0 - theta) * a * beta - delta),
        theta0,
        horizon,
        (0.0, 1.0),
        control,
    )?;
    trace.actions = Some(vec![a; trace.len()]);
    Ok(trace)
}

fn scaled_actions(mix: &PopulationMix, actions: &[f64], beta: f64) -> Result<Vec<f64>> {
    if actions.len() != mix.len() {
        return Err(Error::DimensionMismatch { expected: mix.len(), got: actions.len() });
    }
    actions.iter().try_for_each(|&a| check_action(a))?;
    Ok(mix.deltas().iter().zip(actions).map(|(d, a)| beta * a / d).collect())
}

/// Left side of the heterogeneous stationarity condition minus one.
///
/// `x[k] = β a_k / δ_k`; decreasing in `theta`.
pub fn hetero_balance(mix: &PopulationMix, x: &[f64], theta: f64) -> f64 {
    mix.weights().iter().zip(x).map(|(w, x)| w * x / (theta * x + 1.0)).sum::<f64>() - 1.0
}

/// Stationary state of a heterogeneous population playing per-type actions.
pub fn hetero_stationary(mix: &PopulationMix, actions: &[f64], params: &ModelParams) -> Result<StationaryState> {
    let x = scaled_actions(mix, actions, params.beta)?;
    let load: f64 = mix.weights().iter().zip(&x).map(|(w, x)| w * x).sum();
    if load <= 1.0 {
        return Ok(StationaryState {
            per_type_theta: Some(vec![0.0; mix.len()]),
            ..StationaryState::extinct()
        });
    }
    let root = roots::bisect_newton(
        |theta| hetero_balance(mix, &x, theta),
        |theta| -mix.weights().iter().zip(&x).map(|(w, x)| w * x * x / (theta * x + 1.0).powi(2)).sum::<f64>(),
        0.0,
        1.0,
        RootOptions::default(),
    )?;
    let theta = root.x;
    let per_type: Vec<f64> = x.iter().map(|x| theta * x / (theta * x + 1.0)).collect();
    Ok(StationaryState {
        theta,
        regime: Regime::Endemic,
        per_type_theta: Some(per_type),
        residual: root.residual,
    })
}

/// `β_c = 1/Σ w_k a_k/δ_k`; `None` when every action is zero (no threshold).
pub fn hetero_critical_beta(mix: &PopulationMix, actions: &[f64]) -> Result<Option<f64>> {
    let load: f64 = scaled_actions(mix, actions, 1.0)?.iter().zip(mix.weights()).map(|(x, w)| w * x).sum();
    Ok(if load > 0.0 { Some(1.0 / load) } else { None })
}

pub(crate) fn check_fraction(name: &str, v: f64) -> Result<()> {
    if (0.0..=1.0).contains(&v) {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!("{name} must lie in [0, 1], got {v}")))
    }
}

pub(crate) fn check_action(a: f64) -> Result<()> {
    if a.is_finite() && a >= 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!("action must be finite and >= 0, got {a}")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn reference() -> ModelParams {
        ModelParams::default()
    }

    #[test]
    fn critical_values() {
        assert!((critical_action(&reference()) - 3.0).abs() < 1e-15);
        assert_eq!(critical_action(&ModelParams::new(0.3, 0.3, 0.05, 0.1).unwrap()), 1.0);
        assert!((critical_action(&ModelParams::new(0.2, 0.3, 0.05, 0.1).unwrap()) - 1.5).abs() < 1e-15);
    }

    #[test]
    fn threshold_boundary_is_extinct() {
        let p = reference();
        let s = stationary_theta(3.0, &p).unwrap();
        assert_eq!(s.theta, 0.0);
        assert_eq!(s.regime, Regime::Extinct);
        assert_eq!(stationary_theta(0.0, &p).unwrap().theta, 0.0);
        let s = stationary_theta(6.0, &p).unwrap();
        assert!((s.theta - 0.5).abs() < 1e-15);
        assert_eq!(s.regime, Regime::Endemic);
    }

    #[test]
    fn effective_rate() {
        assert_eq!(critical_effective_rate(4.0).unwrap(), 0.25);
        assert!(critical_effective_rate(0.0).is_err());
        assert_eq!(theta_of_effective_rate(3.0, 0.1).unwrap(), 0.0);
        let theta = theta_of_effective_rate(6.0, 1.0 / 3.0).unwrap();
        assert!((theta - stationary_theta(6.0, &reference()).unwrap().theta).abs() < 1e-15);
    }

    #[test]
    fn immunized_levels() {
        let p = reference();
        assert_eq!(stationary_theta_immunized(6.0, 0.0, &p).unwrap().theta, 0.0);
        assert_eq!(
            stationary_theta_immunized(6.0, 1.0, &p).unwrap(),
            stationary_theta(6.0, &p).unwrap()
        );
        // η equal to δ/(βa) sits on the extinction boundary
        let a = 4.47;
        let s = stationary_theta_immunized(a, 0.3 / (0.1 * a), &p).unwrap();
        assert!(s.theta.abs() < 1e-15);
        let s = stationary_theta_immunized(a, 0.67, &p).unwrap();
        assert!(s.theta < 1e-3);
        assert!(stationary_theta_immunized(6.0, 1.1, &p).is_err());
    }

    #[test]
    fn fixed_dynamics() {
        let p = reference();
        let control = StepControl::default();
        let zero = integrate_fixed(0.0, 6.0, &p, 50.0, &control).unwrap();
        assert!(zero.thetas.iter().all(|&t| t == 0.0));
        let down = integrate_fixed(0.9, 6.0, &p, 200.0, &control).unwrap();
        assert!((down.terminal_theta - 0.5).abs() < 1e-6);
        assert!(down.converged);
        let dies = integrate_fixed(0.5, 2.0, &p, 300.0, &control).unwrap();
        assert!(dies.terminal_theta < 1e-6);
        assert!(integrate_fixed(0.5, 2.0, &p, 0.0, &control).is_err());
    }

    #[test]
    fn hetero_single_type_reduces() {
        let p = reference();
        let mix = PopulationMix::homogeneous(0.3).unwrap();
        let s = hetero_stationary(&mix, &[6.0], &p).unwrap();
        assert!((s.theta - 0.5).abs() < 1e-12);
    }

    #[test]
    fn hetero_two_types() {
        let p = reference();
        let mix = PopulationMix::new(vec![0.5, 0.5], vec![0.2, 0.4]).unwrap();
        let s = hetero_stationary(&mix, &[5.0, 5.0], &p).unwrap();
        // reference value from a 40-digit bisection of the stationarity equation
        assert!((s.theta - 0.438_516_480_713_450_4).abs() < 1e-12);
        let per = s.per_type_theta.unwrap();
        assert!((per[0] - 0.522_967_038_573_099_2).abs() < 1e-12);
        assert!((per[1] - 0.354_065_922_853_801_6).abs() < 1e-12);
        assert!(per[0] > per[1]);
        assert!((0.5 * per[0] + 0.5 * per[1] - s.theta).abs() < 1e-10);
        assert!(s.residual < 1e-12);
    }

    #[test]
    fn hetero_inside_extinction_set() {
        let p = reference();
        let mix = PopulationMix::new(vec![0.5, 0.5], vec![0.2, 0.4]).unwrap();
        // β Σ w_k a_k/δ_k = 0.1 * (0.5*a/0.2 + 0.5*a/0.4) = 0.375 a = 0.9
        let a = 0.9 / 0.375;
        let s = hetero_stationary(&mix, &[a, a], &p).unwrap();
        assert_eq!(s.regime, Regime::Extinct);
        assert!(matches!(hetero_stationary(&mix, &[1.0], &p), Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn hetero_beta_threshold() {
        let one = PopulationMix::homogeneous(0.3).unwrap();
        assert!((hetero_critical_beta(&one, &[3.0]).unwrap().unwrap() - 0.1).abs() < 1e-15);
        let two = PopulationMix::new(vec![0.5, 0.5], vec![0.2, 0.4]).unwrap();
        assert!((hetero_critical_beta(&two, &[4.0, 4.0]).unwrap().unwrap() - 1.0 / 15.0).abs() < 1e-15);
        assert_eq!(hetero_critical_beta(&two, &[0.0, 0.0]).unwrap(), None);
    }
}
