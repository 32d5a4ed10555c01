//! Event-driven stochastic simulation of the finite-population SIS process,
//! used as an independent check of the mean-field predictions.
//!
//! A run is a Gillespie race over per-type aggregate hazards: the next event
//! time is exponential in the total hazard, the event class and agent type are
//! picked in proportion to their share, and the acting agent is uniform within
//! its type.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::Exp1;
use rayon::prelude::*;
use serde::Serialize;
use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::equilibrium::best_response_for;
use crate::error::{Error, Result};
use crate::ode::TrajectoryTrace;
use crate::params::{ModelParams, PopulationMix};
use crate::utility::UtilityFunction;

/// Events between full recomputations of the aggregate hazards.
pub const HAZARD_REFRESH_EVENTS: u64 = 10_000;

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "kebab-case", tag = "kind")]
pub enum Strategy {
    Fixed { a: f64 },
    FixedPerType { actions: Vec<f64> },
    /// Every type plays its best response to the current infected fraction.
    AdaptiveBestResponse { utility: UtilityFunction },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Matching {
    /// Infection hazard `a β θ` straight from the population aggregate.
    MeanField,
    /// Contacts at rate `a β`, each with a uniformly drawn partner.
    RandomPartners,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AbmConfig {
    pub n_agents: usize,
    pub params: ModelParams,
    pub strategy: Strategy,
    pub mix: Option<PopulationMix>,
    /// Fraction `1 - η` of agents that can never be infected.
    pub immunized_fraction: f64,
    pub initial_infected_fraction: f64,
    pub horizon: f64,
    pub seed: u64,
    /// Independent RNG stream under the same seed (one per replicate).
    pub stream: u64,
    pub sample_interval: f64,
    /// Change in θ that triggers a fresh best-response solve in adaptive mode.
    pub refresh_threshold: f64,
    pub matching: Matching,
    /// Start of the window for the exact time average of θ.
    pub average_from: f64,
    pub record_cure_durations: bool,
}

impl AbmConfig {
    pub fn new(n_agents: usize, params: ModelParams, strategy: Strategy) -> Self {
        Self {
            n_agents,
            params,
            strategy,
            mix: None,
            immunized_fraction: 0.0,
            initial_infected_fraction: 0.1,
            horizon: 100.0,
            seed: 0,
            stream: 0,
            sample_interval: 1.0,
            refresh_threshold: 1e-3,
            matching: Matching::MeanField,
            average_from: 0.0,
            record_cure_durations: false,
        }
    }

    fn mix(&self) -> Result<PopulationMix> {
        match &self.mix {
            Some(mix) => Ok(mix.clone()),
            None => PopulationMix::homogeneous(self.params.delta),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidArgument(msg));
        self.params.validate()?;
        if self.n_agents < 100 {
            return bad(format!("n_agents must be >= 100, got {}", self.n_agents));
        }
        if !(0.0..=1.0).contains(&self.immunized_fraction) {
            return bad(format!("immunized fraction must lie in [0, 1], got {}", self.immunized_fraction));
        }
        let eta = 1.0 - self.immunized_fraction;
        let theta0 = self.initial_infected_fraction;
        if !(0.0..=1.0).contains(&theta0) || theta0 > eta + 1e-12 {
            return bad(format!("initial infected fraction {theta0} must lie in [0, eta = {eta}]"));
        }
        if !(self.horizon.is_finite() && self.horizon > 0.0) {
            return bad(format!("horizon must be > 0, got {}", self.horizon));
        }
        if !(self.sample_interval > 0.0 && self.sample_interval <= self.horizon) {
            return bad(format!("sample interval must lie in (0, horizon], got {}", self.sample_interval));
        }
        if !(self.refresh_threshold > 0.0) {
            return bad(format!("refresh threshold must be > 0, got {}", self.refresh_threshold));
        }
        if !(self.average_from >= 0.0 && self.average_from < self.horizon) {
            return Err(Error::InvalidArgument(format!(
                "averaging window start {} must lie in [0, horizon = {})",
                self.average_from, self.horizon
            )));
        }
        let mix = self.mix()?;
        let smallest = mix.weights().iter().copied().fold(f64::INFINITY, f64::min);
        if mix.len() > 1 && (self.n_agents as f64) * smallest < 10.0 {
            return bad(format!("each type needs at least 10 agents (n * min w = {})", self.n_agents as f64 * smallest));
        }
        match &self.strategy {
            Strategy::Fixed { a } => crate::meanfield::check_action(*a)?,
            Strategy::FixedPerType { actions } => {
                if actions.len() != mix.len() {
                    return Err(Error::DimensionMismatch { expected: mix.len(), got: actions.len() });
                }
                actions.iter().try_for_each(|&a| crate::meanfield::check_action(a))?;
            }
            Strategy::AdaptiveBestResponse { .. } => {}
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AbmTrace {
    pub times: Vec<f64>,
    pub thetas: Vec<f64>,
    /// Infected fraction within each type, per sample (heterogeneous runs only).
    pub per_type: Option<Vec<Vec<f64>>>,
    /// Actions in force per sample and type (adaptive runs only).
    pub actions: Option<Vec<Vec<f64>>>,
    pub infections: u64,
    pub curings: u64,
    /// Contacts with a non-infected partner (random-partner matching only).
    pub null_contacts: u64,
    pub initial_infected: usize,
    pub final_infected: usize,
    pub extinction_time: Option<f64>,
    /// Exact time average of θ over `[average_from, horizon]`.
    pub time_average: f64,
    /// Largest relative drift of the incremental hazard sums at a recomputation.
    pub max_hazard_drift: f64,
    pub refreshes: u64,
    /// Completed infections as `(infection time, duration)`, when recorded.
    pub cure_durations: Vec<(f64, f64)>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum State {
    Immunized,
    Healthy,
    Infected,
}

/// Agents of one type, split into swap-remove lists by state.
struct Group {
    size: usize,
    delta: f64,
    action: f64,
    healthy: Vec<usize>,
    infected: Vec<usize>,
}

struct Population {
    state: Vec<State>,
    slot: Vec<usize>,
    infected_since: Vec<f64>,
    groups: Vec<Group>,
    infected: usize,
}

impl Population {
    fn build(config: &AbmConfig, mix: &PopulationMix) -> Self {
        let n = config.n_agents;
        let sizes = apportion(n, mix.weights());
        let mut state = vec![State::Healthy; n];
        let mut slot = vec![0; n];
        let mut groups = Vec::with_capacity(sizes.len());
        let mut start = 0;
        let mut infected = 0;
        for (k, &size) in sizes.iter().enumerate() {
            let immune = ((config.immunized_fraction * size as f64).round() as usize).min(size);
            let sick = ((config.initial_infected_fraction * size as f64).round() as usize).min(size - immune);
            let mut group =
                Group { size, delta: mix.deltas()[k], action: 0.0, healthy: Vec::new(), infected: Vec::new() };
            for (offset, id) in (start..start + size).enumerate() {
                if offset < immune {
                    state[id] = State::Immunized;
                } else if offset < immune + sick {
                    state[id] = State::Infected;
                    slot[id] = group.infected.len();
                    group.infected.push(id);
                } else {
                    slot[id] = group.healthy.len();
                    group.healthy.push(id);
                }
            }
            infected += group.infected.len();
            groups.push(group);
            start += size;
        }
        Self { state, slot, infected_since: vec![0.0; n], groups, infected }
    }

    fn theta(&self) -> f64 {
        self.infected as f64 / self.state.len() as f64
    }

    fn infect(&mut self, k: usize, pos: usize, t: f64) {
        let g = &mut self.groups[k];
        let id = g.healthy.swap_remove(pos);
        if let Some(&moved) = g.healthy.get(pos) {
            self.slot[moved] = pos;
        }
        self.slot[id] = g.infected.len();
        g.infected.push(id);
        self.state[id] = State::Infected;
        self.infected_since[id] = t;
        self.infected += 1;
    }

    /// Cures the agent at `pos` and returns when it was infected.
    fn cure(&mut self, k: usize, pos: usize) -> f64 {
        let g = &mut self.groups[k];
        let id = g.infected.swap_remove(pos);
        if let Some(&moved) = g.infected.get(pos) {
            self.slot[moved] = pos;
        }
        self.slot[id] = g.healthy.len();
        g.healthy.push(id);
        self.state[id] = State::Healthy;
        self.infected -= 1;
        self.infected_since[id]
    }

    /// `Σ_healthy a_i` and `Σ_infected δ_i` from scratch.
    fn hazard_sums(&self) -> (f64, f64) {
        self.groups.iter().fold((0.0, 0.0), |(s, c), g| {
            (s + g.healthy.len() as f64 * g.action, c + g.infected.len() as f64 * g.delta)
        })
    }
}

/// Splits `n` into integer counts proportional to `weights` (largest remainder).
fn apportion(n: usize, weights: &[f64]) -> Vec<usize> {
    let raw: Vec<f64> = weights.iter().map(|w| w * n as f64).collect();
    let mut counts: Vec<usize> = raw.iter().map(|r| r.floor() as usize).collect();
    let mut order: Vec<usize> = (0..weights.len()).collect();
    order.sort_by(|&i, &j| (raw[j] - raw[j].floor()).total_cmp(&(raw[i] - raw[i].floor())).then(i.cmp(&j)));
    let missing = n - counts.iter().sum::<usize>();
    for &k in order.iter().take(missing) {
        counts[k] += 1;
    }
    counts
}

fn rng_for(config: &AbmConfig) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    rng.set_stream(config.stream);
    rng
}

fn relative_gap(a: f64, b: f64) -> f64 {
    let scale = a.abs().max(b.abs());
    if scale == 0.0 { 0.0 } else { (a - b).abs() / scale }
}

/// Runs one replicate; deterministic given the seed and stream.
pub fn simulate(config: &AbmConfig) -> Result<AbmTrace> {
    config.validate()?;
    let mix = config.mix()?;
    let ModelParams { beta, .. } = config.params;
    let n = config.n_agents;
    let mut pop = Population::build(config, &mix);
    let mut rng = rng_for(config);

    let adaptive = match &config.strategy {
        Strategy::AdaptiveBestResponse { utility } => Some(utility),
        _ => None,
    };
    let set_actions = |pop: &mut Population, theta: f64| -> Result<()> {
        match &config.strategy {
            Strategy::Fixed { a } => pop.groups.iter_mut().for_each(|g| g.action = *a),
            Strategy::FixedPerType { actions } => {
                pop.groups.iter_mut().zip(actions).for_each(|(g, a)| g.action = *a)
            }
            Strategy::AdaptiveBestResponse { utility } => {
                for g in pop.groups.iter_mut() {
                    g.action = best_response_for(theta, utility, &config.params.with_delta(g.delta), None)?.action;
                }
            }
        }
        Ok(())
    };
    let mut refreshed_at = pop.theta();
    set_actions(&mut pop, refreshed_at)?;

    let hetero = mix.len() > 1;
    let samples = (config.horizon / config.sample_interval + 1e-9).floor() as usize + 1;
    let mut trace = AbmTrace {
        times: Vec::with_capacity(samples),
        thetas: Vec::with_capacity(samples),
        per_type: hetero.then(|| Vec::with_capacity(samples)),
        actions: adaptive.map(|_| Vec::with_capacity(samples)),
        infections: 0,
        curings: 0,
        null_contacts: 0,
        initial_infected: pop.infected,
        final_infected: 0,
        extinction_time: None,
        time_average: 0.0,
        max_hazard_drift: 0.0,
        refreshes: 0,
        cure_durations: Vec::new(),
    };
    let record = |trace: &mut AbmTrace, pop: &Population, until: f64| {
        while trace.times.len() < samples {
            let ts = trace.times.len() as f64 * config.sample_interval;
            if ts > until {
                break;
            }
            trace.times.push(ts);
            trace.thetas.push(pop.theta());
            if let Some(per_type) = trace.per_type.as_mut() {
                per_type.push(pop.groups.iter().map(|g| g.infected.len() as f64 / g.size as f64).collect());
            }
            if let Some(actions) = trace.actions.as_mut() {
                actions.push(pop.groups.iter().map(|g| g.action).collect());
            }
        }
    };

    let (mut contact_sum, mut cure_sum) = pop.hazard_sums();
    let mut integral = 0.0;
    let mut t = 0.0;
    let mut events: u64 = 0;
    if pop.infected == 0 {
        trace.extinction_time = Some(0.0);
    }

    loop {
        let contact_scale = match config.matching {
            Matching::MeanField => beta * pop.theta(),
            Matching::RandomPartners => beta,
        };
        let total = if pop.infected == 0 { 0.0 } else { contact_scale * contact_sum + cure_sum };
        let t_next = if total > 0.0 { t + rng.sample::<f64, _>(Exp1) / total } else { f64::INFINITY };

        let end = t_next.min(config.horizon);
        record(&mut trace, &pop, end);
        let window = end - t.max(config.average_from);
        if window > 0.0 {
            integral += window * pop.theta();
        }
        if t_next > config.horizon {
            break;
        }
        t = t_next;

        // pick the event class and type in proportion to hazard
        let mut pick = rng.random::<f64>() * total;
        let mut chosen = None;
        for (k, g) in pop.groups.iter().enumerate() {
            let contact = contact_scale * g.healthy.len() as f64 * g.action;
            if pick < contact {
                chosen = Some((k, true));
                break;
            }
            pick -= contact;
            let cure = g.infected.len() as f64 * g.delta;
            if pick < cure {
                chosen = Some((k, false));
                break;
            }
            pick -= cure;
        }
        // rounding can leave `pick` marginally past the last bucket
        let (k, is_contact) = chosen.unwrap_or_else(|| {
            let k = pop.groups.iter().rposition(|g| !g.infected.is_empty()).expect("infected agent exists");
            (k, false)
        });

        if is_contact {
            let pos = rng.random_range(0..pop.groups[k].healthy.len());
            let infected = match config.matching {
                Matching::MeanField => true,
                Matching::RandomPartners => {
                    let me = pop.groups[k].healthy[pos];
                    let mut other = rng.random_range(0..n - 1);
                    if other >= me {
                        other += 1;
                    }
                    pop.state[other] == State::Infected
                }
            };
            if infected {
                let a = pop.groups[k].action;
                pop.infect(k, pos, t);
                contact_sum -= a;
                cure_sum += pop.groups[k].delta;
                trace.infections += 1;
            } else {
                trace.null_contacts += 1;
            }
        } else {
            let pos = rng.random_range(0..pop.groups[k].infected.len());
            let since = pop.cure(k, pos);
            if config.record_cure_durations {
                trace.cure_durations.push((since, t - since));
            }
            contact_sum += pop.groups[k].action;
            cure_sum -= pop.groups[k].delta;
            trace.curings += 1;
            if pop.infected == 0 {
                trace.extinction_time = Some(t);
            }
        }

        events += 1;
        if events % HAZARD_REFRESH_EVENTS == 0 {
            let (contact_exact, cure_exact) = pop.hazard_sums();
            let drift = relative_gap(contact_sum, contact_exact).max(relative_gap(cure_sum, cure_exact));
            trace.max_hazard_drift = trace.max_hazard_drift.max(drift);
            contact_sum = contact_exact;
            cure_sum = cure_exact;
        }
        if adaptive.is_some() && (pop.theta() - refreshed_at).abs() > config.refresh_threshold {
            refreshed_at = pop.theta();
            set_actions(&mut pop, refreshed_at)?;
            contact_sum = pop.hazard_sums().0;
            trace.refreshes += 1;
        }
    }

    trace.final_infected = pop.infected;
    trace.time_average = integral / (config.horizon - config.average_from);
    Ok(trace)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StationaryEstimate {
    pub mean: f64,
    pub std_error: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub n_replicates: usize,
    /// Replicates in which the infection died out before the horizon.
    pub n_extinct: usize,
    pub replicate_means: Vec<f64>,
    pub seed: u64,
}

impl StationaryEstimate {
    pub fn covers(&self, value: f64) -> bool {
        self.ci_low <= value && value <= self.ci_high
    }
}

fn replicate_configs(config: &AbmConfig, n_replicates: usize) -> Vec<AbmConfig> {
    (0..n_replicates as u64)
        .map(|r| AbmConfig { stream: config.stream + r, ..config.clone() })
        .collect()
}

/// Mean of per-replicate time averages after burn-in, with a 95% Student-t interval.
pub fn estimate_stationary(config: &AbmConfig, n_replicates: usize, burn_in_fraction: f64) -> Result<StationaryEstimate> {
    if n_replicates < 2 {
        return Err(Error::InvalidArgument(format!("need at least 2 replicates, got {n_replicates}")));
    }
    if !(0.0..1.0).contains(&burn_in_fraction) {
        return Err(Error::InvalidArgument(format!(
            "burn-in fraction {burn_in_fraction} leaves no averaging window before the horizon"
        )));
    }
    let base = AbmConfig { average_from: burn_in_fraction * config.horizon, ..config.clone() };
    let traces = replicate_configs(&base, n_replicates)
        .par_iter()
        .map(simulate)
        .collect::<Result<Vec<_>>>()?;
    let replicate_means: Vec<f64> = traces.iter().map(|t| t.time_average).collect();
    let n_extinct = traces.iter().filter(|t| t.extinction_time.is_some()).count();
    let k = n_replicates as f64;
    let mean = replicate_means.iter().sum::<f64>() / k;
    let var = replicate_means.iter().map(|m| (m - mean).powi(2)).sum::<f64>() / (k - 1.0);
    let std_error = (var / k).sqrt();
    let t = StudentsT::new(0.0, 1.0, k - 1.0)
        .map_err(|e| Error::InvalidArgument(e.to_string()))?
        .inverse_cdf(0.975);
    Ok(StationaryEstimate {
        mean,
        std_error,
        ci_low: mean - t * std_error,
        ci_high: mean + t * std_error,
        n_replicates,
        n_extinct,
        replicate_means,
        seed: config.seed,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DeviationReport {
    pub times: Vec<f64>,
    pub ensemble_mean: Vec<f64>,
    pub ode: Vec<f64>,
    pub sup_norm: f64,
    /// Mean absolute deviation over the sample times.
    pub time_average: f64,
    pub n_replicates: usize,
}

/// Compares the ensemble-mean ABM path with an ODE trajectory on the ABM sample grid.
pub fn trajectory_comparison(config: &AbmConfig, ode: &TrajectoryTrace, n_replicates: usize) -> Result<DeviationReport> {
    if n_replicates == 0 {
        return Err(Error::InvalidArgument("need at least one replicate".into()));
    }
    if ode.is_empty() {
        return Err(Error::InvalidArgument("ODE trace is empty".into()));
    }
    let tolerance = 1.0 / config.n_agents as f64 + 1e-12;
    if (ode.thetas[0] - config.initial_infected_fraction).abs() > tolerance {
        return Err(Error::InvalidArgument(format!(
            "initial conditions differ: ODE starts at {}, simulation at {}",
            ode.thetas[0], config.initial_infected_fraction
        )));
    }
    if ode.horizon() < config.horizon {
        return Err(Error::InvalidArgument(format!(
            "ODE horizon {} is shorter than the simulation horizon {}",
            ode.horizon(),
            config.horizon
        )));
    }
    let traces = replicate_configs(config, n_replicates)
        .par_iter()
        .map(simulate)
        .collect::<Result<Vec<_>>>()?;
    let times = traces[0].times.clone();
    let ensemble_mean: Vec<f64> = (0..times.len())
        .map(|i| traces.iter().map(|t| t.thetas[i]).sum::<f64>() / n_replicates as f64)
        .collect();
    let reference: Vec<f64> = times.iter().map(|&t| ode.theta_at(t)).collect();
    let gaps: Vec<f64> = ensemble_mean.iter().zip(&reference).map(|(m, r)| (m - r).abs()).collect();
    Ok(DeviationReport {
        sup_norm: gaps.iter().copied().fold(0.0, f64::max),
        time_average: gaps.iter().sum::<f64>() / gaps.len() as f64,
        times,
        ensemble_mean,
        ode: reference,
        n_replicates,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RenewalEstimate {
    pub mean: f64,
    pub std_error: f64,
    pub cycles: usize,
}

/// Monte Carlo value of a healthy agent with fixed action `a` in a fixed
/// environment `theta`, from independent healthy/infected renewal cycles.
///
/// A cycle earns `u(a)` (discounted) while healthy and nothing while infected;
/// the value is `E[reward] / (1 - E[discount over the cycle])`.
pub fn simulate_renewal_utility(
    a: f64,
    theta: f64,
    u: &UtilityFunction,
    params: &ModelParams,
    cycles: usize,
    seed: u64,
) -> Result<RenewalEstimate> {
    crate::meanfield::check_action(a)?;
    crate::meanfield::check_fraction("theta", theta)?;
    if cycles < 2 {
        return Err(Error::InvalidArgument(format!("need at least 2 cycles, got {cycles}")));
    }
    let ModelParams { beta, delta, rho, .. } = *params;
    let flow = u.value(a);
    let infection_rate = beta * theta * a;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut sr, mut sd, mut srr, mut sdd, mut srd) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for _ in 0..cycles {
        let (reward, discount) = if infection_rate > 0.0 {
            let healthy = rng.sample::<f64, _>(Exp1) / infection_rate;
            let sick = rng.sample::<f64, _>(Exp1) / delta;
            (flow * -(-rho * healthy).exp_m1() / rho, (-rho * (healthy + sick)).exp())
        } else {
            (flow / rho, 0.0)
        };
        sr += reward;
        sd += discount;
        srr += reward * reward;
        sdd += discount * discount;
        srd += reward * discount;
    }
    let m = cycles as f64;
    let (r, d) = (sr / m, sd / m);
    let var_r = (srr / m - r * r) * m / (m - 1.0);
    let var_d = (sdd / m - d * d) * m / (m - 1.0);
    let cov = (srd / m - r * d) * m / (m - 1.0);
    let keep = 1.0 - d;
    let mean = r / keep;
    // delta method for the ratio r / (1 - d)
    let var = (var_r / keep.powi(2) + r * r * var_d / keep.powi(4) + 2.0 * r * cov / keep.powi(3)) / m;
    Ok(RenewalEstimate { mean, std_error: var.max(0.0).sqrt(), cycles })
}
