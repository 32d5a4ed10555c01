use std::fs;
use std::path::{Path, PathBuf};

use clap::ValueEnum;
use epinet_core::{Family, ModelParams};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    Steady,
    Ce,
    Dynamics,
    Protect,
    Poa,
    Hetero,
    Abm,
    Sweep,
    Misdesign,
}

impl Mode {
    pub fn name(self) -> &'static str {
        match self {
            Mode::Steady => "steady",
            Mode::Ce => "ce",
            Mode::Dynamics => "dynamics",
            Mode::Protect => "protect",
            Mode::Poa => "poa",
            Mode::Hetero => "hetero",
            Mode::Abm => "abm",
            Mode::Sweep => "sweep",
            Mode::Misdesign => "misdesign",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum ProtectMode {
    Fixed,
    Strategic,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Scenario {
    Fig1,
    Fig2,
    Fig3,
    Fig4,
    Fig5,
    Fig6,
    Fig7,
    Fig8,
}

impl Scenario {
    pub fn name(self) -> &'static str {
        match self {
            Scenario::Fig1 => "fig1",
            Scenario::Fig2 => "fig2",
            Scenario::Fig3 => "fig3",
            Scenario::Fig4 => "fig4",
            Scenario::Fig5 => "fig5",
            Scenario::Fig6 => "fig6",
            Scenario::Fig7 => "fig7",
            Scenario::Fig8 => "fig8",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum StrategyKind {
    Fixed,
    Adaptive,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum MatchingKind {
    MeanField,
    RandomPartners,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AxisName {
    A,
    Delta,
    Beta,
    Rho,
    Gamma,
    Eta,
    Theta0,
}

impl AxisName {
    pub fn name(self) -> &'static str {
        match self {
            AxisName::A => "a",
            AxisName::Delta => "delta",
            AxisName::Beta => "beta",
            AxisName::Rho => "rho",
            AxisName::Gamma => "gamma",
            AxisName::Eta => "eta",
            AxisName::Theta0 => "theta0",
        }
    }

    fn parse(s: &str) -> CliResult<Self> {
        Ok(match s {
            "a" => AxisName::A,
            "delta" => AxisName::Delta,
            "beta" => AxisName::Beta,
            "rho" => AxisName::Rho,
            "gamma" => AxisName::Gamma,
            "eta" => AxisName::Eta,
            "theta0" => AxisName::Theta0,
            other => {
                return Err(CliError::config(format!(
                    "unknown sweep axis `{other}` (expected a, delta, beta, rho, gamma, eta or theta0)"
                )))
            }
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Axis {
    pub name: AxisName,
    pub values: Vec<f64>,
}

impl Axis {
    /// Parses `name=start:stop:points` (inclusive, evenly spaced) or `name=v1,v2,...`.
    pub fn parse(spec: &str) -> CliResult<Self> {
        let (name, rest) = spec
            .split_once('=')
            .ok_or_else(|| CliError::config(format!("axis `{spec}` is not of the form name=values")))?;
        let name = AxisName::parse(name.trim())?;
        let number = |s: &str| {
            s.trim().parse::<f64>().map_err(|_| CliError::config(format!("axis `{spec}`: `{s}` is not a number")))
        };
        let values = if rest.contains(':') {
            let parts: Vec<&str> = rest.split(':').collect();
            let [start, stop, points] = parts[..] else {
                return Err(CliError::config(format!("axis `{spec}`: range must be start:stop:points")));
            };
            let (start, stop) = (number(start)?, number(stop)?);
            let points: usize = points
                .trim()
                .parse()
                .map_err(|_| CliError::config(format!("axis `{spec}`: `{points}` is not a point count")))?;
            linspace(start, stop, points)
        } else {
            rest.split(',').map(number).collect::<CliResult<Vec<_>>>()?
        };
        if values.is_empty() {
            return Err(CliError::config(format!("axis `{spec}` has no values")));
        }
        Ok(Axis { name, values })
    }
}

pub fn linspace(start: f64, stop: f64, points: usize) -> Vec<f64> {
    match points {
        0 => Vec::new(),
        1 => vec![start],
        _ => (0..points).map(|i| start + (stop - start) * i as f64 / (points - 1) as f64).collect(),
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AbmSettings {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub agents: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub replicates: Option<usize>,
    /// Fraction of the horizon discarded before averaging.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub burn_in: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sample_interval: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub immunized: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub matching: Option<MatchingKind>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub strategy: Option<StrategyKind>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub refresh_threshold: Option<f64>,
}

/// Everything a run needs. Files, flags and presets all produce this shape;
/// later layers only fill fields the earlier ones left empty.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mode: Option<Mode>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub scenario: Option<Scenario>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub beta: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub delta: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rho: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub c0: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub utility: Option<Family>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub shape: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub a: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gamma: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub eta: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub theta0: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub horizon: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub jobs: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub protect_mode: Option<ProtectMode>,
    /// Distance from `θ^CE` for the convergence-time bounds of `dynamics`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub epsilon: Option<f64>,
    /// Points per exported trajectory.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub samples: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub weights: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub deltas: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub axes: Option<Vec<Axis>>,
    /// Mode evaluated in every sweep cell.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub over: Option<Mode>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub abm: Option<AbmSettings>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
}

macro_rules! fill {
    ($base:expr, $top:expr; $($field:ident),* $(,)?) => {
        $( if $base.$field.is_none() { $base.$field = $top.$field.clone(); } )*
    };
}

impl AbmSettings {
    fn fill_from(&mut self, other: &AbmSettings) {
        fill!(self, other; agents, replicates, burn_in, sample_interval, immunized, matching, strategy, refresh_threshold);
    }
}

impl RunConfig {
    /// Fills every empty field of `self` from `other`.
    pub fn fill_from(&mut self, other: &RunConfig) {
        fill!(self, other;
            mode, scenario, beta, delta, rho, c0, utility, shape, a, gamma, eta, theta0, horizon, seed,
            jobs, protect_mode, epsilon, samples, weights, deltas, axes, over, out);
        match (&mut self.abm, &other.abm) {
            (Some(mine), Some(theirs)) => mine.fill_from(theirs),
            (mine @ None, Some(theirs)) => *mine = Some(theirs.clone()),
            _ => {}
        }
    }

    pub fn params(&self) -> ModelParams {
        let d = ModelParams::default();
        ModelParams {
            beta: self.beta.unwrap_or(d.beta),
            delta: self.delta.unwrap_or(d.delta),
            rho: self.rho.unwrap_or(d.rho),
            c0: self.c0.unwrap_or(d.c0),
        }
    }

    pub fn abm_settings(&self) -> AbmSettings {
        self.abm.clone().unwrap_or_default()
    }
}

/// Reads a config file. A run manifest is accepted too; its embedded config is used.
pub fn load(path: &Path) -> CliResult<RunConfig> {
    let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    let value: serde_json::Value = serde_json::from_str(&text)
        .map_err(|e| CliError::config(format!("{}: {e}", path.display())))?;
    let value = match value {
        serde_json::Value::Object(mut map) if map.contains_key(crate::output::MANIFEST_MARKER) => {
            map.remove("config").ok_or_else(|| CliError::config(format!("{}: manifest has no config", path.display())))?
        }
        other => other,
    };
    serde_json::from_value(value).map_err(|e| CliError::config(format!("{}: {e}", path.display())))
}
