//! Adaptive Dormand–Prince 5(4) integrator for the scalar infection ODEs.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Step-size and termination control for [`integrate`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StepControl {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_step: f64,
    pub initial_step: f64,
    /// `|dθ/dt|` below which the trajectory counts as converged.
    pub convergence_tol: f64,
    /// End the integration as soon as the convergence test passes.
    pub stop_on_convergence: bool,
    pub max_steps: usize,
}

impl Default for StepControl {
    fn default() -> Self {
        Self {
            abs_tol: 1e-9,
            rel_tol: 0.0,
            max_step: 0.1,
            initial_step: 1e-3,
            convergence_tol: 1e-8,
            stop_on_convergence: false,
            max_steps: 10_000_000,
        }
    }
}

/// Time series of the infected fraction produced by an ODE or simulation run.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrajectoryTrace {
    pub times: Vec<f64>,
    pub thetas: Vec<f64>,
    /// `dθ/dt` at each sample.
    pub rates: Vec<f64>,
    /// Action played at each sample when the strategy is state dependent.
    pub actions: Option<Vec<f64>>,
    pub terminal_theta: f64,
    pub converged: bool,
    pub convergence_tol: f64,
}

impl TrajectoryTrace {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn horizon(&self) -> f64 {
        *self.times.last().unwrap_or(&0.0)
    }

    /// Cubic Hermite interpolation of θ at time `t` (clamped to the trace span).
    pub fn theta_at(&self, t: f64) -> f64 {
        if t <= self.times[0] {
            return self.thetas[0];
        }
        let last = self.times.len() - 1;
        if t >= self.times[last] {
            return self.thetas[last];
        }
        let i = self.times.partition_point(|&s| s <= t) - 1;
        self.hermite(i, t)
    }

    fn hermite(&self, i: usize, t: f64) -> f64 {
        let (t0, t1) = (self.times[i], self.times[i + 1]);
        let h = t1 - t0;
        let s = (t - t0) / h;
        let (y0, y1) = (self.thetas[i], self.thetas[i + 1]);
        let (m0, m1) = (self.rates[i] * h, self.rates[i + 1] * h);
        let s2 = s * s;
        let s3 = s2 * s;
        (2.0 * s3 - 3.0 * s2 + 1.0) * y0
            + (s3 - 2.0 * s2 + s) * m0
            + (-2.0 * s3 + 3.0 * s2) * y1
            + (s3 - s2) * m1
    }

    /// First time θ reaches `level`, from whichever side the trace starts on.
    pub fn first_crossing(&self, level: f64) -> Option<f64> {
        let start = self.thetas[0] - level;
        if start == 0.0 {
            return Some(self.times[0]);
        }
        let i = (1..self.thetas.len()).find(|&i| (self.thetas[i] - level) * start.signum() <= 0.0)? - 1;
        let (mut lo, mut hi) = (self.times[i], self.times[i + 1]);
        for _ in 0..100 {
            let mid = 0.5 * (lo + hi);
            if (self.hermite(i, mid) - level) * start.signum() > 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        Some(0.5 * (lo + hi))
    }

    /// Largest backwards move against the initial direction of travel.
    pub fn monotonicity_violation(&self) -> f64 {
        let end = self.terminal_theta - self.thetas[0];
        self.thetas
            .windows(2)
            .map(|w| if end >= 0.0 { w[0] - w[1] } else { w[1] - w[0] })
            .fold(0.0, f64::max)
    }
}

// Dormand–Prince tableau; the system is autonomous so the nodes are unused.
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
const E: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];

/// Integrates the autonomous scalar ODE `y' = rhs(y)` on `[0, horizon]`,
/// clamping `y` to `bounds` after every accepted step.
pub fn integrate<F>(
    mut rhs: F,
    y0: f64,
    horizon: f64,
    bounds: (f64, f64),
    control: &StepControl,
) -> Result<TrajectoryTrace>
where
    F: FnMut(f64) -> f64,
{
    if !(horizon.is_finite() && horizon > 0.0) {
        return Err(Error::InvalidArgument(format!("horizon must be > 0, got {horizon}")));
    }
    if !(control.abs_tol > 0.0 && control.max_step > 0.0 && control.initial_step > 0.0) {
        return Err(Error::InvalidArgument("tolerances and step sizes must be > 0".into()));
    }
    let mut t = 0.0;
    let mut y = y0.clamp(bounds.0, bounds.1);
    let mut k = [0.0; 7];
    k[0] = rhs(y);
    let mut times = vec![t];
    let mut thetas = vec![y];
    let mut rates = vec![k[0]];
    let mut h = control.initial_step.min(control.max_step);
    let mut steps = 0usize;

    let converged = |rate: f64| rate.abs() < control.convergence_tol;

    while t < horizon {
        if control.stop_on_convergence && converged(k[0]) && steps > 0 {
            break;
        }
        if steps >= control.max_steps {
            return Err(Error::NonConvergence(format!("ODE exceeded {} steps at t = {t}", control.max_steps)));
        }
        h = h.min(control.max_step).min(horizon - t);
        for stage in 1..7 {
            let incr: f64 = (0..stage).map(|j| A[stage][j] * k[j]).sum();
            k[stage] = rhs(y + h * incr);
        }
        let y_new = y + h * (0..6).map(|j| A[6][j] * k[j]).sum::<f64>();
        let err = h * (0..7).map(|j| E[j] * k[j]).sum::<f64>();
        let scale = control.abs_tol + control.rel_tol * y.abs().max(y_new.abs());
        let ratio = err.abs() / scale;
        if !ratio.is_finite() {
            return Err(Error::NonConvergence(format!("non-finite ODE error estimate at t = {t}")));
        }
        steps += 1;
        if ratio <= 1.0 {
            t = if horizon - t - h <= 1e-12 * horizon { horizon } else { t + h };
            let clamped = y_new.clamp(bounds.0, bounds.1);
            y = clamped;
            k[0] = if clamped == y_new { k[6] } else { rhs(y) };
            times.push(t);
            thetas.push(y);
            rates.push(k[0]);
        }
        let factor = if ratio == 0.0 { 5.0 } else { (0.9 * ratio.powf(-0.2)).clamp(0.2, 5.0) };
        h *= factor;
        if h < 1e-14 * horizon.max(1.0) {
            return Err(Error::NonConvergence(format!("ODE step size underflow at t = {t}")));
        }
    }

    Ok(TrajectoryTrace {
        terminal_theta: y,
        converged: converged(k[0]),
        convergence_tol: control.convergence_tol,
        times,
        thetas,
        rates,
        actions: None,
    })
}
