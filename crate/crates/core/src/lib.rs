//! Epidemics on strategically formed networks.
//!
//! Agents choose how many links to keep, trading the benefit of connections
//! against the risk of an SIS infection that spreads along them. The crate
//! solves the mean-field model (stationary infection levels, conjectural
//! equilibria, best-response dynamics), optimizes immunization, measures
//! efficiency loss, and cross-checks everything with a stochastic simulator.

pub mod abm;
pub mod efficiency;
pub mod equilibrium;
pub mod error;
pub mod meanfield;
pub mod ode;
pub mod params;
pub mod protection;
pub mod roots;
pub mod utility;

pub use abm::{AbmConfig, AbmTrace, Matching, Strategy};
pub use efficiency::{EfficiencyReport, PoaClass};
pub use equilibrium::{ConvergenceBounds, EquilibriumResult, HeteroEquilibrium};
pub use error::{Error, Result};
pub use meanfield::{Regime, StationaryState};
pub use ode::{StepControl, TrajectoryTrace};
pub use params::{ModelParams, PopulationMix};
pub use protection::{ProtectionPolicy, ProtectionRegime};
pub use utility::{make_utility, Benefit, Family, UtilityFunction};
