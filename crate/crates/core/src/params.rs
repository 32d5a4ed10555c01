//! Model parameters shared by every solver.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Epidemiological and economic rates of the homogeneous model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    /// Per-link infection rate.
    pub beta: f64,
    /// Curing rate.
    pub delta: f64,
    /// Discount rate.
    pub rho: f64,
    /// Direct cost per link per unit time.
    pub c0: f64,
}

impl ModelParams {
    pub fn new(beta: f64, delta: f64, rho: f64, c0: f64) -> Result<Self> {
        let p = Self { beta, delta, rho, c0 };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        let positive = |name: &str, v: f64| {
            if v.is_finite() && v > 0.0 {
                Ok(())
            } else {
                Err(Error::InvalidParams(format!("{name} must be finite and > 0, got {v}")))
            }
        };
        positive("beta", self.beta)?;
        positive("delta", self.delta)?;
        positive("rho", self.rho)?;
        if !(self.c0.is_finite() && self.c0 >= 0.0) {
            return Err(Error::InvalidParams(format!("c0 must be finite and >= 0, got {}", self.c0)));
        }
        Ok(())
    }

    /// Number of links at which a fixed symmetric strategy stops sustaining infection.
    pub fn critical_action(&self) -> f64 {
        self.delta / self.beta
    }

    /// Same rates with a different curing rate; used for per-type solves.
    pub fn with_delta(&self, delta: f64) -> Self {
        Self { delta, ..*self }
    }
}

impl Default for ModelParams {
    /// The reference operating point `beta = 0.1, delta = 0.3, rho = 0.05, c0 = 0.1`.
    fn default() -> Self {
        Self { beta: 0.1, delta: 0.3, rho: 0.05, c0: 0.1 }
    }
}

/// Type weights and per-type curing rates of a heterogeneous population.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PopulationMix {
    weights: Vec<f64>,
    deltas: Vec<f64>,
}

impl PopulationMix {
    pub fn new(weights: Vec<f64>, deltas: Vec<f64>) -> Result<Self> {
        if weights.is_empty() {
            return Err(Error::InvalidMix("at least one type is required".into()));
        }
        if weights.len() != deltas.len() {
            return Err(Error::DimensionMismatch { expected: weights.len(), got: deltas.len() });
        }
        if let Some(w) = weights.iter().find(|w| !(w.is_finite() && **w > 0.0)) {
            return Err(Error::InvalidMix(format!("weights must be > 0, got {w}")));
        }
        if let Some(d) = deltas.iter().find(|d| !(d.is_finite() && **d > 0.0)) {
            return Err(Error::InvalidMix(format!("curing rates must be > 0, got {d}")));
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidMix(format!("weights must sum to 1, got {total}")));
        }
        Ok(Self { weights, deltas })
    }

    /// Single-type population with curing rate `delta`.
    pub fn homogeneous(delta: f64) -> Result<Self> {
        Self::new(vec![1.0], vec![delta])
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn deltas(&self) -> &[f64] {
        &self.deltas
    }

    pub fn iter(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.weights.iter().copied().zip(self.deltas.iter().copied())
    }
}
