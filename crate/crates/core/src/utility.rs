//! Benefit families and the net instantaneous utility `u(x) = b(x) - c0 x`.
//!
//! Every family is concave and increasing with `b(0) = 0`, and all derivatives
//! up to third order are analytic. The peak action `W` (the maximiser of `u`)
//! is closed form for each family; it bounds every root bracket downstream.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Benefit function family together with its shape parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "kebab-case", deny_unknown_fields)]
pub enum Benefit {
    /// `b(x) = kappa * ln(1 + x)`
    #[serde(rename = "log-benefit", alias = "log")]
    Log { kappa: f64 },
    /// `b(x) = kappa * sqrt(x)`
    #[serde(rename = "sqrt-benefit", alias = "sqrt")]
    Sqrt { kappa: f64 },
    /// `b(x) = kappa * (1 - exp(-lambda x))`
    #[serde(rename = "bounded-exponential", alias = "exp")]
    BoundedExp { kappa: f64, lambda: f64 },
    /// `b(x) = kappa * (x - epsilon x^3)`; the only family with `u''' < 0`.
    #[serde(rename = "cubic-benefit", alias = "cubic")]
    Cubic { kappa: f64, epsilon: f64 },
}

/// Family tag without shape parameters.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Family {
    Log,
    Sqrt,
    #[serde(alias = "exp", alias = "bounded-exponential")]
    BoundedExp,
    Cubic,
}

impl Family {
    pub const ALL: [Family; 4] = [Family::Log, Family::Sqrt, Family::BoundedExp, Family::Cubic];

    /// Default shape parameters for this family.
    pub fn default_benefit(self) -> Benefit {
        match self {
            Family::Log => Benefit::Log { kappa: 1.0 },
            Family::Sqrt => Benefit::Sqrt { kappa: 1.0 },
            Family::BoundedExp => Benefit::BoundedExp { kappa: 10.0, lambda: 0.1 },
            Family::Cubic => Benefit::Cubic { kappa: 1.0, epsilon: 1e-3 },
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Family::Log => "log",
            Family::Sqrt => "sqrt",
            Family::BoundedExp => "exp",
            Family::Cubic => "cubic",
        }
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Family {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "log" | "log-benefit" => Ok(Family::Log),
            "sqrt" | "sqrt-benefit" => Ok(Family::Sqrt),
            "exp" | "bounded-exponential" => Ok(Family::BoundedExp),
            "cubic" | "cubic-benefit" => Ok(Family::Cubic),
            other => Err(Error::InvalidUtility(format!("unknown utility family `{other}`"))),
        }
    }
}

impl Benefit {
    pub fn family(&self) -> Family {
        match self {
            Benefit::Log { .. } => Family::Log,
            Benefit::Sqrt { .. } => Family::Sqrt,
            Benefit::BoundedExp { .. } => Family::BoundedExp,
            Benefit::Cubic { .. } => Family::Cubic,
        }
    }

    fn kappa(&self) -> f64 {
        match *self {
            Benefit::Log { kappa }
            | Benefit::Sqrt { kappa }
            | Benefit::BoundedExp { kappa, .. }
            | Benefit::Cubic { kappa, .. } => kappa,
        }
    }

    fn with_kappa(self, kappa: f64) -> Self {
        match self {
            Benefit::Log { .. } => Benefit::Log { kappa },
            Benefit::Sqrt { .. } => Benefit::Sqrt { kappa },
            Benefit::BoundedExp { lambda, .. } => Benefit::BoundedExp { kappa, lambda },
            Benefit::Cubic { epsilon, .. } => Benefit::Cubic { kappa, epsilon },
        }
    }

    fn shape_error(&self) -> Option<String> {
        let kappa = self.kappa();
        if !(kappa.is_finite() && kappa >= 0.0) {
            return Some(format!("kappa must be finite and >= 0, got {kappa}"));
        }
        match *self {
            Benefit::BoundedExp { lambda, .. } if !(lambda.is_finite() && lambda > 0.0) => {
                Some(format!("lambda must be finite and > 0, got {lambda}"))
            }
            Benefit::Cubic { epsilon, .. } if !(epsilon.is_finite() && epsilon >= 0.0) => {
                Some(format!("epsilon must be finite and >= 0, got {epsilon}"))
            }
            _ => None,
        }
    }

    pub fn value(&self, x: f64) -> f64 {
        match *self {
            Benefit::Log { kappa } => kappa * x.ln_1p(),
            Benefit::Sqrt { kappa } => kappa * x.sqrt(),
            Benefit::BoundedExp { kappa, lambda } => -kappa * (-lambda * x).exp_m1(),
            Benefit::Cubic { kappa, epsilon } => kappa * (x - epsilon * x * x * x),
        }
    }

    pub fn d1(&self, x: f64) -> f64 {
        match *self {
            Benefit::Log { kappa } => kappa / (1.0 + x),
            Benefit::Sqrt { kappa } => 0.5 * kappa / x.sqrt(),
            Benefit::BoundedExp { kappa, lambda } => kappa * lambda * (-lambda * x).exp(),
            Benefit::Cubic { kappa, epsilon } => kappa * (1.0 - 3.0 * epsilon * x * x),
        }
    }

    pub fn d2(&self, x: f64) -> f64 {
        match *self {
            Benefit::Log { kappa } => -kappa / ((1.0 + x) * (1.0 + x)),
            Benefit::Sqrt { kappa } => -0.25 * kappa * x.powf(-1.5),
            Benefit::BoundedExp { kappa, lambda } => -kappa * lambda * lambda * (-lambda * x).exp(),
            Benefit::Cubic { kappa, epsilon } => -6.0 * kappa * epsilon * x,
        }
    }

    pub fn d3(&self, x: f64) -> f64 {
        match *self {
            Benefit::Log { kappa } => 2.0 * kappa / (1.0 + x).powi(3),
            Benefit::Sqrt { kappa } => 0.375 * kappa * x.powf(-2.5),
            Benefit::BoundedExp { kappa, lambda } => kappa * lambda.powi(3) * (-lambda * x).exp(),
            Benefit::Cubic { kappa, epsilon } => -6.0 * kappa * epsilon,
        }
    }

    /// Largest action on which `b` is increasing.
    pub fn domain_max(&self) -> f64 {
        match *self {
            Benefit::Cubic { epsilon, .. } if epsilon > 0.0 => (1.0 / (3.0 * epsilon)).sqrt(),
            _ => f64::INFINITY,
        }
    }

    /// Closed-form solution of `b'(W) = c0`, or `None` when `b'(0) <= c0`.
    fn peak(&self, c0: f64) -> Option<f64> {
        let kappa = self.kappa();
        let w = match *self {
            Benefit::Log { .. } => {
                if kappa <= c0 {
                    return None;
                }
                if c0 == 0.0 { f64::INFINITY } else { kappa / c0 - 1.0 }
            }
            Benefit::Sqrt { .. } => {
                if kappa <= 0.0 {
                    return None;
                }
                if c0 == 0.0 { f64::INFINITY } else { (0.5 * kappa / c0).powi(2) }
            }
            Benefit::BoundedExp { lambda, .. } => {
                if kappa * lambda <= c0 {
                    return None;
                }
                if c0 == 0.0 { f64::INFINITY } else { (kappa * lambda / c0).ln() / lambda }
            }
            Benefit::Cubic { epsilon, .. } => {
                if kappa <= c0 {
                    return None;
                }
                if epsilon == 0.0 {
                    f64::INFINITY
                } else {
                    ((1.0 - c0 / kappa) / (3.0 * epsilon)).sqrt()
                }
            }
        };
        Some(w)
    }
}

/// Pass/fail per modelling assumption for a benefit family and a link cost.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ValidationReport {
    pub shape_ok: bool,
    pub zero_at_origin: bool,
    pub increasing: bool,
    pub strictly_concave: bool,
    pub marginal_exceeds_cost: bool,
    /// Peak action when `b'(0) > c0`.
    pub peak: Option<f64>,
    /// `u'''(x) < 0` on `(0, W]`; gates the strategic immunization analysis.
    pub third_derivative_negative: bool,
    pub messages: Vec<String>,
}

impl ValidationReport {
    /// All standing assumptions hold (the third-derivative condition is optional).
    pub fn passes(&self) -> bool {
        self.shape_ok
            && self.zero_at_origin
            && self.increasing
            && self.strictly_concave
            && self.marginal_exceeds_cost
            && self.peak.is_some_and(|w| w > 0.0)
    }
}

const CHECK_GRID: usize = 1000;

/// Checks the benefit assumptions for `benefit` with link cost `c0`.
///
/// `b(0)` and `b'(0)` are evaluated analytically; monotonicity, concavity and
/// the sign of `u'''` are sign-checked on a grid over the open domain.
pub fn validate_utility(benefit: &Benefit, c0: f64) -> ValidationReport {
    let mut messages = Vec::new();
    let shape_error = benefit.shape_error();
    let shape_ok = shape_error.is_none();
    if let Some(msg) = shape_error {
        messages.push(msg);
    }

    let zero_at_origin = benefit.value(0.0) == 0.0;
    if !zero_at_origin {
        messages.push("b(0) != 0".into());
    }
    let marginal_exceeds_cost = c0.is_finite() && c0 >= 0.0 && benefit.d1(0.0) > c0;
    if !marginal_exceeds_cost {
        messages.push(format!("b'(0) = {} does not exceed c0 = {c0}", benefit.d1(0.0)));
    }
    let peak = if marginal_exceeds_cost && shape_ok { benefit.peak(c0) } else { None };

    let domain_max = benefit.domain_max();
    let grid_max = match (domain_max.is_finite(), peak) {
        (true, _) => domain_max,
        (false, Some(w)) if w.is_finite() => 10.0 * w,
        _ => 1e4,
    };
    let grid = (1..=CHECK_GRID).map(|i| grid_max * i as f64 / (CHECK_GRID as f64 + 1.0));

    let mut increasing = shape_ok;
    let mut strictly_concave = shape_ok;
    for x in grid {
        if !(benefit.d1(x) > 0.0) {
            increasing = false;
        }
        if !(benefit.d2(x) < 0.0) {
            strictly_concave = false;
        }
    }
    if !increasing {
        messages.push("b' is not positive on the domain".into());
    }
    if !strictly_concave {
        messages.push("b'' is not negative on the domain".into());
    }

    let third_derivative_negative = match peak {
        Some(w) => {
            let top = if w.is_finite() { w } else { grid_max };
            (1..=CHECK_GRID).all(|i| benefit.d3(top * i as f64 / CHECK_GRID as f64) < 0.0)
        }
        None => false,
    };

    ValidationReport {
        shape_ok,
        zero_at_origin,
        increasing,
        strictly_concave,
        marginal_exceeds_cost,
        peak,
        third_derivative_negative,
        messages,
    }
}

/// Net instantaneous utility `u(x) = b(x) - c0 x` of a validated benefit family.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct UtilityFunction {
    benefit: Benefit,
    c0: f64,
    peak: f64,
    third_derivative_negative: bool,
}

impl UtilityFunction {
    /// Builds a utility, rejecting any family that violates the model assumptions.
    pub fn new(benefit: Benefit, c0: f64) -> Result<Self> {
        let report = validate_utility(&benefit, c0);
        if !report.passes() {
            return Err(Error::InvalidUtility(report.messages.join("; ")));
        }
        Ok(Self {
            benefit,
            c0,
            peak: report.peak.expect("validated peak"),
            third_derivative_negative: report.third_derivative_negative,
        })
    }

    pub fn benefit(&self) -> &Benefit {
        &self.benefit
    }

    pub fn family(&self) -> Family {
        self.benefit.family()
    }

    pub fn c0(&self) -> f64 {
        self.c0
    }

    /// Peak action `W` with `u'(W) = 0`; infinite when `c0 = 0` on an unbounded family.
    pub fn peak(&self) -> f64 {
        self.peak
    }

    pub fn domain_max(&self) -> f64 {
        self.benefit.domain_max()
    }

    pub fn third_derivative_negative(&self) -> bool {
        self.third_derivative_negative
    }

    pub fn value(&self, x: f64) -> f64 {
        self.benefit.value(x) - self.c0 * x
    }

    pub fn d1(&self, x: f64) -> f64 {
        self.benefit.d1(x) - self.c0
    }

    pub fn d2(&self, x: f64) -> f64 {
        self.benefit.d2(x)
    }

    pub fn d3(&self, x: f64) -> f64 {
        self.benefit.d3(x)
    }

    /// `u(x) / u'(x)`, zero at the origin and `+inf` at or beyond the peak.
    pub fn ratio(&self, x: f64) -> f64 {
        if x <= 0.0 {
            return 0.0;
        }
        if let Benefit::Sqrt { kappa } = self.benefit {
            // multiplied through by 2 sqrt(x) to stay finite near 0
            let s = x.sqrt();
            let den = kappa - 2.0 * self.c0 * s;
            return if den > 0.0 { 2.0 * x * (kappa - self.c0 * s) / den } else { f64::INFINITY };
        }
        let du = self.d1(x);
        if du > 0.0 { self.value(x) / du } else { f64::INFINITY }
    }

    /// Left side of the best-response condition, `u(a)/u'(a) - a`.
    pub fn response_lhs(&self, a: f64) -> f64 {
        self.ratio(a) - a
    }

    /// Derivative of [`Self::response_lhs`], `-u u'' / u'^2`, positive on `(0, W)`.
    pub fn response_lhs_slope(&self, a: f64) -> f64 {
        if a <= 0.0 {
            return 0.0;
        }
        let du = self.d1(a);
        if du <= 0.0 {
            return f64::INFINITY;
        }
        -self.value(a) * self.d2(a) / (du * du)
    }

    /// Same family with `u` multiplied by `factor > 0` (benefit and cost both scale).
    pub fn scaled(&self, factor: f64) -> Result<Self> {
        if !(factor.is_finite() && factor > 0.0) {
            return Err(Error::InvalidArgument(format!("scale factor must be > 0, got {factor}")));
        }
        let benefit = self.benefit.with_kappa(self.benefit.kappa() * factor);
        Self::new(benefit, self.c0 * factor)
    }
}

/// Builds a utility from a family tag, its shape parameters and the link cost.
///
/// Shape parameters are `[kappa]` for `log` and `sqrt`, `[kappa, lambda]` for
/// `exp` and `[kappa, epsilon]` for `cubic`; missing trailing values fall back
/// to the family defaults.
pub fn make_utility(family: Family, shape: &[f64], c0: f64) -> Result<UtilityFunction> {
    let benefit = match (family, family.default_benefit()) {
        (Family::Log, Benefit::Log { kappa }) => Benefit::Log { kappa: *shape.first().unwrap_or(&kappa) },
        (Family::Sqrt, Benefit::Sqrt { kappa }) => Benefit::Sqrt { kappa: *shape.first().unwrap_or(&kappa) },
        (Family::BoundedExp, Benefit::BoundedExp { kappa, lambda }) => Benefit::BoundedExp {
            kappa: *shape.first().unwrap_or(&kappa),
            lambda: *shape.get(1).unwrap_or(&lambda),
        },
        (Family::Cubic, Benefit::Cubic { kappa, epsilon }) => Benefit::Cubic {
            kappa: *shape.first().unwrap_or(&kappa),
            epsilon: *shape.get(1).unwrap_or(&epsilon),
        },
        _ => unreachable!("default benefit matches its family"),
    };
    let expected = match family {
        Family::Log | Family::Sqrt => 1,
        Family::BoundedExp | Family::Cubic => 2,
    };
    if shape.len() > expected {
        return Err(Error::InvalidUtility(format!(
            "{family} takes at most {expected} shape parameters, got {}",
            shape.len()
        )));
    }
    UtilityFunction::new(benefit, c0)
}

/// Peak action `W` of a validated utility.
pub fn peak_action(u: &UtilityFunction) -> f64 {
    u.peak()
}
