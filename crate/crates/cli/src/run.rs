use epinet_core::abm::{estimate_stationary, simulate, AbmConfig, Matching, Strategy};
use epinet_core::efficiency::price_of_anarchy;
use epinet_core::equilibrium::{
    best_response, convergence_time_bounds, integrate_best_response, solve_ce, solve_ce_immunized, solve_hetero_ce,
};
use epinet_core::meanfield::{hetero_critical_beta, hetero_stationary, integrate_fixed, stationary_theta_immunized};
use epinet_core::protection::{
    misdesign_cost, optimal_eta_fixed, optimal_eta_strategic, strategic_theta_of_eta, theta_prime_limits,
    total_cost_fixed,
};
use epinet_core::utility::{make_utility, Benefit};
use epinet_core::{
    Family, ModelParams, PoaClass, PopulationMix, ProtectionRegime, Regime, StepControl, TrajectoryTrace,
    UtilityFunction,
};
use rayon::prelude::*;

use crate::config::{linspace, AbmSettings, MatchingKind, Mode, ProtectMode, RunConfig, StrategyKind};
use crate::error::{CliError, CliResult};
use crate::output::{Report, Row, Table};
use crate::sweep;

/// Largest solver residual accepted before a run counts as non-converged.
pub const RESIDUAL_TOL: f64 = 1e-8;

pub fn default_shape(family: Family) -> Vec<f64> {
    match family.default_benefit() {
        Benefit::Log { kappa } | Benefit::Sqrt { kappa } => vec![kappa],
        Benefit::BoundedExp { kappa, lambda } => vec![kappa, lambda],
        Benefit::Cubic { kappa, epsilon } => vec![kappa, epsilon],
    }
}

/// Mode-specific defaults, applied beneath whatever the user supplied.
fn defaults(mode: Mode, cfg: &RunConfig) -> RunConfig {
    let p = ModelParams::default();
    let family = cfg.utility.unwrap_or(Family::Sqrt);
    let mut d = RunConfig {
        beta: Some(p.beta),
        delta: Some(p.delta),
        rho: Some(p.rho),
        c0: Some(p.c0),
        utility: Some(family),
        shape: Some(default_shape(family)),
        ..Default::default()
    };
    match mode {
        Mode::Steady => d.a = Some(vec![6.0]),
        Mode::Dynamics => {
            d.theta0 = Some(vec![0.01, 0.5, 0.99]);
            d.horizon = Some(100.0);
            d.samples = Some(201);
        }
        Mode::Protect => {
            d.protect_mode = Some(ProtectMode::Fixed);
            if cfg.protect_mode != Some(ProtectMode::Strategic) {
                d.a = Some(vec![4.47]);
            }
            d.gamma = Some(vec![0.3]);
        }
        Mode::Hetero => {
            d.weights = Some(vec![0.5, 0.5]);
            d.deltas = Some(vec![0.2, 0.4]);
        }
        Mode::Abm => {
            d.theta0 = Some(vec![0.1]);
            d.horizon = Some(200.0);
            d.seed = Some(0);
            d.abm = Some(AbmSettings {
                agents: Some(10_000),
                replicates: Some(20),
                burn_in: Some(0.25),
                sample_interval: Some(1.0),
                immunized: Some(0.0),
                matching: Some(MatchingKind::MeanField),
                strategy: Some(if cfg.a.is_some() { StrategyKind::Fixed } else { StrategyKind::Adaptive }),
                refresh_threshold: Some(1e-3),
            });
        }
        Mode::Misdesign => d.gamma = Some(linspace(0.05, 1.5, 30)),
        Mode::Ce | Mode::Poa | Mode::Sweep => {}
    }
    d
}

/// Fills the defaults of `mode` (and of the swept mode) into `cfg`.
pub fn resolve(mode: Mode, mut cfg: RunConfig) -> RunConfig {
    cfg.mode = Some(mode);
    if mode == Mode::Sweep {
        if let Some(over) = cfg.over {
            let d = defaults(over, &cfg);
            cfg.fill_from(&d);
        }
    }
    let d = defaults(mode, &cfg);
    cfg.fill_from(&d);
    cfg
}

pub fn utility(cfg: &RunConfig) -> CliResult<UtilityFunction> {
    let family = cfg.utility.unwrap_or(Family::Sqrt);
    let shape = cfg.shape.clone().unwrap_or_else(|| default_shape(family));
    Ok(make_utility(family, &shape, cfg.params().c0)?)
}

pub fn params(cfg: &RunConfig) -> CliResult<ModelParams> {
    let p = cfg.params();
    p.validate()?;
    Ok(p)
}

pub fn list<'a>(values: &'a Option<Vec<f64>>, name: &str) -> CliResult<&'a [f64]> {
    match values {
        Some(v) if !v.is_empty() => Ok(v),
        _ => Err(CliError::config(format!("`{name}` needs at least one value"))),
    }
}

pub fn single(values: &Option<Vec<f64>>, name: &str) -> CliResult<f64> {
    match list(values, name)? {
        [v] => Ok(*v),
        many => Err(CliError::config(format!("`{name}` takes a single value here, got {}", many.len()))),
    }
}

pub fn optional_single(values: &Option<Vec<f64>>, name: &str) -> CliResult<Option<f64>> {
    values.as_ref().map(|_| single(values, name)).transpose()
}

pub fn flag(b: bool) -> f64 {
    if b {
        1.0
    } else {
        0.0
    }
}

pub fn regime_code(r: ProtectionRegime) -> f64 {
    match r {
        ProtectionRegime::ImmunizeNone => 0.0,
        ProtectionRegime::Interior => 1.0,
        ProtectionRegime::ImmunizeAll => 2.0,
    }
}

pub fn class_code(c: PoaClass) -> f64 {
    match c {
        PoaClass::PoaBelowKappa => 0.0,
        PoaClass::PoaAboveKappa => 1.0,
        PoaClass::PoaEqualsKappa => 2.0,
        PoaClass::TrivialWRegime => 3.0,
    }
}

fn regime_name(r: Regime) -> &'static str {
    match r {
        Regime::Extinct => "extinct",
        Regime::Endemic => "endemic",
    }
}

fn protection_name(r: ProtectionRegime) -> &'static str {
    match r {
        ProtectionRegime::ImmunizeNone => "immunize-none",
        ProtectionRegime::Interior => "interior",
        ProtectionRegime::ImmunizeAll => "immunize-all",
    }
}

/// Pushes `(quantity, value)` pairs, skipping values that are not finite.
fn push_all(report: &mut Report, base: Row, quantities: Vec<(&str, f64)>) {
    for (q, v) in quantities {
        if v.is_finite() {
            report.push(Row { quantity: q.to_string(), value: v, ..base.clone() });
        } else {
            log::warn!("dropping non-finite {q} = {v}");
        }
    }
}

pub fn run_mode(mode: Mode, cfg: &RunConfig) -> CliResult<Report> {
    match mode {
        Mode::Steady => steady(cfg),
        Mode::Ce => ce(cfg),
        Mode::Dynamics => dynamics(cfg),
        Mode::Protect => protect(cfg),
        Mode::Poa => poa(cfg),
        Mode::Hetero => hetero(cfg),
        Mode::Abm => abm(cfg),
        Mode::Sweep => sweep::run(cfg),
        Mode::Misdesign => misdesign(cfg),
    }
}

pub fn steady_point(a: f64, eta: Option<f64>, p: &ModelParams) -> CliResult<Vec<(&'static str, f64)>> {
    let st = stationary_theta_immunized(a, eta.unwrap_or(1.0), p)?;
    Ok(vec![("theta", st.theta), ("endemic", flag(st.regime == Regime::Endemic))])
}

fn steady(cfg: &RunConfig) -> CliResult<Report> {
    let p = params(cfg)?;
    let mut report = Report::default();
    let etas: Vec<Option<f64>> = match &cfg.eta {
        Some(list) => list.iter().copied().map(Some).collect(),
        None => vec![None],
    };
    report.push(Row::new("steady", "critical_action", p.critical_action()));
    report.say(format!("critical action a_c = {}", p.critical_action()));
    for &a in list(&cfg.a, "a")? {
        for &eta in &etas {
            let mut base = Row::new("steady", "", 0.0).key1("a", a);
            if let Some(eta) = eta {
                base = base.key2("eta", eta);
            }
            let st = stationary_theta_immunized(a, eta.unwrap_or(1.0), &p)?;
            push_all(&mut report, base, steady_point(a, eta, &p)?);
            let susceptible = eta.map(|e| format!(", eta = {e}")).unwrap_or_default();
            report.say(format!("a = {a}{susceptible}: theta = {} ({})", st.theta, regime_name(st.regime)));
        }
    }
    Ok(report)
}

pub fn ce_point(
    u: &UtilityFunction,
    p: &ModelParams,
    eta: Option<f64>,
    report: &mut Report,
) -> CliResult<Vec<(&'static str, f64)>> {
    let eq = match eta {
        Some(eta) => solve_ce_immunized(u, p, eta)?,
        None => solve_ce(u, p)?,
    };
    report.residual("ce", eq.residual);
    Ok(vec![
        ("a_ce", eq.action),
        ("theta_ce", eq.theta),
        ("residual", eq.residual),
        ("critical_action", p.critical_action()),
    ])
}

fn ce(cfg: &RunConfig) -> CliResult<Report> {
    let (u, p) = (utility(cfg)?, params(cfg)?);
    let mut report = Report::default();
    let etas: Vec<Option<f64>> = match &cfg.eta {
        Some(list) => list.iter().copied().map(Some).collect(),
        None => vec![None],
    };
    report.say(format!("peak action W = {}", u.peak()));
    for eta in etas {
        let quantities = ce_point(&u, &p, eta, &mut report)?;
        let value = |name: &str| quantities.iter().find(|(q, _)| *q == name).map(|&(_, v)| v).unwrap_or(f64::NAN);
        let prefix = eta.map(|e| format!("eta = {e}: ")).unwrap_or_default();
        report.say(format!(
            "{prefix}a_ce = {:.6} theta_ce = {:.6} residual = {:.3e}",
            value("a_ce"),
            value("theta_ce"),
            value("residual")
        ));
        let base = match eta {
            Some(eta) => Row::new("ce", "", 0.0).key1("eta", eta),
            None => Row::new("ce", "", 0.0),
        };
        push_all(&mut report, base, quantities);
    }
    if u.peak().is_finite() {
        report.push(Row::new("ce", "peak_action", u.peak()));
    }
    Ok(report)
}

fn control() -> StepControl {
    StepControl::default()
}

/// Fixed-action trajectory when `a` is given, best-response dynamics otherwise.
pub fn trajectory(
    theta0: f64,
    a: Option<f64>,
    u: &UtilityFunction,
    p: &ModelParams,
    horizon: f64,
) -> CliResult<TrajectoryTrace> {
    Ok(match a {
        Some(a) => integrate_fixed(theta0, a, p, horizon, &control())?,
        None => integrate_best_response(theta0, u, p, horizon, &control())?,
    })
}

fn dynamics(cfg: &RunConfig) -> CliResult<Report> {
    let (u, p) = (utility(cfg)?, params(cfg)?);
    let horizon = cfg.horizon.unwrap_or(100.0);
    let samples = cfg.samples.unwrap_or(201).max(2);
    let theta0s = list(&cfg.theta0, "theta0")?;
    let cases: Vec<(&'static str, f64, f64, Option<f64>)> = match &cfg.a {
        Some(actions) if actions.len() > 1 => {
            let theta0 = single(&cfg.theta0, "theta0 (with several a)")?;
            actions.iter().map(|&a| ("a", a, theta0, Some(a))).collect()
        }
        Some(_) => {
            let a = single(&cfg.a, "a")?;
            theta0s.iter().map(|&t| ("theta0", t, t, Some(a))).collect()
        }
        None => theta0s.iter().map(|&t| ("theta0", t, t, None)).collect(),
    };
    let traces = cases
        .par_iter()
        .map(|&(_, _, theta0, a)| trajectory(theta0, a, &u, &p, horizon))
        .collect::<CliResult<Vec<_>>>()?;
    let times = linspace(0.0, horizon, samples);
    let mut report = Report::default();
    for (&(key, value, theta0, a), trace) in cases.iter().zip(&traces) {
        for &t in &times {
            let theta = trace.theta_at(t);
            let base = Row::new("dynamics", "", 0.0).key1(key, value).key2("t", t);
            let mut samples = vec![("theta", theta)];
            if a.is_none() {
                samples.push(("action", best_response(theta, &u, &p)?.action));
            }
            push_all(&mut report, base, samples);
        }
        let base = Row::new("dynamics", "", 0.0).key1(key, value);
        let mut scalars = vec![("terminal_theta", trace.terminal_theta), ("converged", flag(trace.converged))];
        if let (Some(eps), None) = (cfg.epsilon, a) {
            let bounds = convergence_time_bounds(theta0, eps, &u, &p)?;
            scalars.push(("bound_lower", bounds.lower));
            scalars.push(("bound_upper", bounds.upper));
            match trace.first_crossing(bounds.target_theta) {
                Some(t) => scalars.push(("crossing_time", t)),
                None => log::warn!("theta0 = {theta0}: level {} not reached before t = {horizon}", bounds.target_theta),
            }
        }
        report.say(format!("{key} = {value}: theta({horizon}) = {:.6}", trace.terminal_theta));
        push_all(&mut report, base, scalars);
    }
    Ok(report)
}

pub fn fixed_protection_point(a: f64, gamma: f64, p: &ModelParams) -> CliResult<Vec<(&'static str, f64)>> {
    let policy = optimal_eta_fixed(a, gamma, p)?;
    Ok(vec![
        ("eta_star", policy.eta_star),
        ("total_cost", policy.total_cost),
        ("theta", policy.theta),
        ("regime", regime_code(policy.regime)),
    ])
}

pub fn fixed_curve_point(a: f64, eta: f64, gamma: f64, p: &ModelParams) -> CliResult<Vec<(&'static str, f64)>> {
    Ok(vec![
        ("curve_cost", total_cost_fixed(a, eta, gamma, p)?),
        ("curve_theta", stationary_theta_immunized(a, eta, p)?.theta),
    ])
}

pub fn strategic_protection_point(
    gamma: f64,
    u: &UtilityFunction,
    p: &ModelParams,
) -> CliResult<Vec<(&'static str, f64)>> {
    let policy = optimal_eta_strategic(gamma, u, p)?;
    Ok(vec![
        ("eta_star", policy.eta_star),
        ("total_cost", policy.total_cost),
        ("theta", policy.theta),
        ("regime", regime_code(policy.regime)),
    ])
}

pub fn require_cubic_shape(u: &UtilityFunction) -> CliResult<()> {
    if u.third_derivative_negative() {
        Ok(())
    } else {
        Err(epinet_core::Error::Precondition(format!(
            "strategic protection needs u''' < 0; the {} family does not satisfy it",
            u.family()
        ))
        .into())
    }
}

fn protect(cfg: &RunConfig) -> CliResult<Report> {
    let p = params(cfg)?;
    let gammas = list(&cfg.gamma, "gamma")?;
    let mut report = Report::default();
    match cfg.protect_mode.unwrap_or(ProtectMode::Fixed) {
        ProtectMode::Fixed => {
            for &a in list(&cfg.a, "a")? {
                for &gamma in gammas {
                    let policy = optimal_eta_fixed(a, gamma, &p)?;
                    report.say(format!(
                        "a = {a}, gamma = {gamma}: eta* = {:.4} ({}), cost = {:.6}",
                        policy.eta_star,
                        protection_name(policy.regime),
                        policy.total_cost
                    ));
                    let base = Row::new("protect", "", 0.0).key1("a", a).key2("gamma", gamma);
                    push_all(&mut report, base, fixed_protection_point(a, gamma, &p)?);
                }
            }
            if let Some(etas) = &cfg.eta {
                let a = single(&cfg.a, "a (with an eta grid)")?;
                for &gamma in gammas {
                    for &eta in etas {
                        let base = Row::new("protect", "", 0.0).key1("gamma", gamma).key2("eta", eta);
                        push_all(&mut report, base, fixed_curve_point(a, eta, gamma, &p)?);
                    }
                }
            }
        }
        ProtectMode::Strategic => {
            let u = utility(cfg)?;
            require_cubic_shape(&u)?;
            let limits = theta_prime_limits(&u, &p)?;
            report.say(format!(
                "gamma1 = {:.6} gamma2 = {:.6} extinction eta = {:.6}",
                limits.gamma1, limits.gamma2, limits.extinction_eta
            ));
            push_all(
                &mut report,
                Row::new("protect", "", 0.0),
                vec![
                    ("gamma1", limits.gamma1),
                    ("gamma2", limits.gamma2),
                    ("extinction_eta", limits.extinction_eta),
                ],
            );
            let policies =
                gammas.par_iter().map(|&g| optimal_eta_strategic(g, &u, &p)).collect::<Result<Vec<_>, _>>()?;
            for (&gamma, policy) in gammas.iter().zip(&policies) {
                report.say(format!(
                    "gamma = {gamma}: eta* = {:.4} ({}), cost = {:.6}",
                    policy.eta_star,
                    protection_name(policy.regime),
                    policy.total_cost
                ));
                push_all(
                    &mut report,
                    Row::new("protect", "", 0.0).key1("gamma", gamma),
                    vec![
                        ("eta_star", policy.eta_star),
                        ("total_cost", policy.total_cost),
                        ("theta", policy.theta),
                        ("regime", regime_code(policy.regime)),
                    ],
                );
            }
            if let Some(etas) = &cfg.eta {
                let thetas =
                    etas.par_iter().map(|&e| strategic_theta_of_eta(e, &u, &p)).collect::<Result<Vec<_>, _>>()?;
                for (&eta, &theta) in etas.iter().zip(&thetas) {
                    report.push(Row::new("protect", "curve_theta", theta).key1("eta", eta));
                }
                for &gamma in gammas {
                    for (&eta, &theta) in etas.iter().zip(&thetas) {
                        let cost = theta + gamma * (1.0 - eta);
                        report.push(Row::new("protect", "curve_cost", cost).key1("gamma", gamma).key2("eta", eta));
                    }
                }
            }
        }
    }
    Ok(report)
}

pub fn poa_point(u: &UtilityFunction, p: &ModelParams) -> CliResult<Vec<(&'static str, f64)>> {
    let r = price_of_anarchy(u, p)?;
    Ok(vec![
        ("poa", r.poa),
        ("a_opt", r.a_opt),
        ("e_opt", r.e_opt),
        ("a_ce", r.a_ce),
        ("e_ce", r.e_ce),
        ("theta_ce", r.theta_ce),
        ("trivial_bound", r.trivial_bound.unwrap_or(f64::INFINITY)),
        ("a_dagger", r.a_dagger),
        ("kappa", r.kappa),
        ("classification", class_code(r.classification)),
    ])
}

fn poa(cfg: &RunConfig) -> CliResult<Report> {
    let (u, p) = (utility(cfg)?, params(cfg)?);
    let r = price_of_anarchy(&u, &p)?;
    let mut report = Report::default();
    report.say(format!("social optimum a = {:.6}, E = {:.6}", r.a_opt, r.e_opt));
    report.say(format!("equilibrium a = {:.6}, E = {:.6}", r.a_ce, r.e_ce));
    report.say(format!("price of anarchy = {:.6}, kappa = {:.6} ({:?})", r.poa, r.kappa, r.classification));
    push_all(&mut report, Row::new("poa", "", 0.0), poa_point(&u, &p)?);
    Ok(report)
}

fn mix(cfg: &RunConfig) -> CliResult<PopulationMix> {
    let weights = list(&cfg.weights, "weights")?.to_vec();
    let deltas = list(&cfg.deltas, "deltas")?.to_vec();
    Ok(PopulationMix::new(weights, deltas)?)
}

fn hetero(cfg: &RunConfig) -> CliResult<Report> {
    let p = params(cfg)?;
    let mix = mix(cfg)?;
    let mut report = Report::default();
    let base = Row::new("hetero", "", 0.0);
    match &cfg.a {
        Some(actions) => {
            let st = hetero_stationary(&mix, actions, &p)?;
            report.residual("hetero-stationary", st.residual);
            report.say(format!("theta = {} ({})", st.theta, regime_name(st.regime)));
            let mut scalars = vec![("theta", st.theta), ("residual", st.residual)];
            if let Some(beta_c) = hetero_critical_beta(&mix, actions)? {
                report.say(format!("critical beta = {beta_c}"));
                scalars.push(("critical_beta", beta_c));
            }
            push_all(&mut report, base, scalars);
            let per_type = st.per_type_theta.unwrap_or_else(|| vec![0.0; mix.len()]);
            for (k, (&a, &theta)) in actions.iter().zip(&per_type).enumerate() {
                let row = Row::new("hetero", "", 0.0).key1("type", k as f64);
                push_all(&mut report, row, vec![("action", a), ("theta", theta)]);
            }
        }
        None => {
            let u = utility(cfg)?;
            let eq = solve_hetero_ce(&u, &mix, &p)?;
            report.residual("hetero-ce", eq.residual);
            report.residual("hetero-best-response", eq.inner_residual);
            report.say(format!("theta = {:.6} residual = {:.3e} ({})", eq.theta, eq.residual, regime_name(eq.regime)));
            push_all(
                &mut report,
                base,
                vec![("theta", eq.theta), ("residual", eq.residual), ("inner_residual", eq.inner_residual)],
            );
            for (k, (&a, &theta)) in eq.actions.iter().zip(&eq.per_type_theta).enumerate() {
                report.say(format!("type {k} (delta = {}): a = {a:.6}, theta = {theta:.6}", mix.deltas()[k]));
                let row = Row::new("hetero", "", 0.0).key1("type", k as f64);
                push_all(&mut report, row, vec![("action", a), ("theta", theta)]);
            }
        }
    }
    Ok(report)
}

/// Simulator configuration from the resolved run settings.
pub fn abm_config(cfg: &RunConfig) -> CliResult<(AbmConfig, AbmSettings)> {
    let p = params(cfg)?;
    let s = cfg.abm_settings();
    let need = |v: Option<f64>, name: &str| v.ok_or_else(|| CliError::config(format!("abm.{name} is missing")));
    let mix = if cfg.weights.is_some() || cfg.deltas.is_some() { Some(mix(cfg)?) } else { None };
    let strategy = match s.strategy.unwrap_or(StrategyKind::Adaptive) {
        StrategyKind::Adaptive => Strategy::AdaptiveBestResponse { utility: utility(cfg)? },
        StrategyKind::Fixed => {
            let actions = list(&cfg.a, "a")?;
            match (&mix, actions) {
                (None, _) => Strategy::Fixed { a: single(&cfg.a, "a")? },
                (Some(m), [a]) => Strategy::FixedPerType { actions: vec![*a; m.len()] },
                (Some(_), many) => Strategy::FixedPerType { actions: many.to_vec() },
            }
        }
    };
    let agents = s.agents.ok_or_else(|| CliError::config("abm.agents is missing"))?;
    let config = AbmConfig {
        mix,
        immunized_fraction: need(s.immunized, "immunized")?,
        initial_infected_fraction: single(&cfg.theta0, "theta0")?,
        horizon: cfg.horizon.ok_or_else(|| CliError::config("horizon is missing"))?,
        seed: cfg.seed.unwrap_or(0),
        sample_interval: need(s.sample_interval, "sample_interval")?,
        refresh_threshold: need(s.refresh_threshold, "refresh_threshold")?,
        matching: match s.matching.unwrap_or(MatchingKind::MeanField) {
            MatchingKind::MeanField => Matching::MeanField,
            MatchingKind::RandomPartners => Matching::RandomPartners,
        },
        ..AbmConfig::new(agents, p, strategy)
    };
    config.validate()?;
    Ok((config, s))
}

/// Mean-field level the simulation should settle at, when one is available.
fn abm_prediction(config: &AbmConfig) -> CliResult<Option<f64>> {
    let eta = 1.0 - config.immunized_fraction;
    let p = &config.params;
    Ok(match (&config.strategy, &config.mix) {
        (Strategy::Fixed { a }, None) => Some(stationary_theta_immunized(*a, eta, p)?.theta),
        (Strategy::AdaptiveBestResponse { utility }, None) => Some(solve_ce_immunized(utility, p, eta)?.theta),
        (Strategy::FixedPerType { actions }, Some(m)) if eta == 1.0 => Some(hetero_stationary(m, actions, p)?.theta),
        (Strategy::AdaptiveBestResponse { utility }, Some(m)) if eta == 1.0 => Some(solve_hetero_ce(utility, m, p)?.theta),
        _ => None,
    })
}

fn abm(cfg: &RunConfig) -> CliResult<Report> {
    let (config, s) = abm_config(cfg)?;
    let replicates = s.replicates.ok_or_else(|| CliError::config("abm.replicates is missing"))?;
    let burn_in = s.burn_in.ok_or_else(|| CliError::config("abm.burn_in is missing"))?;
    let est = estimate_stationary(&config, replicates, burn_in)?;
    let mut report = Report::default();
    report.seeds.push(config.seed);
    for (r, &m) in est.replicate_means.iter().enumerate() {
        report.push(Row::new("abm", "time_average", m).key1("replicate", r as f64));
    }
    let mut scalars = vec![
        ("mean", est.mean),
        ("std_error", est.std_error),
        ("ci_low", est.ci_low),
        ("ci_high", est.ci_high),
        ("n_extinct", est.n_extinct as f64),
    ];
    report.say(format!(
        "stationary theta = {:.5} (95% CI [{:.5}, {:.5}], {} of {} replicates extinct)",
        est.mean, est.ci_low, est.ci_high, est.n_extinct, est.n_replicates
    ));
    if let Some(predicted) = abm_prediction(&config)? {
        scalars.push(("predicted", predicted));
        scalars.push(("covers", flag(est.covers(predicted))));
        report.say(format!("mean-field prediction = {predicted:.5}"));
    }
    push_all(&mut report, Row::new("abm", "", 0.0), scalars);

    let trace = simulate(&config)?;
    let mut header = vec!["time".to_string(), "theta".to_string()];
    let types = trace.per_type.as_ref().map_or(0, |rows| rows.first().map_or(0, Vec::len));
    header.extend((0..types).map(|k| format!("theta_{k}")));
    let kinds = trace.actions.as_ref().map_or(0, |rows| rows.first().map_or(0, Vec::len));
    header.extend((0..kinds).map(|k| format!("action_{k}")));
    let rows = (0..trace.times.len())
        .map(|i| {
            let mut row = vec![trace.times[i], trace.thetas[i]];
            if let Some(per_type) = &trace.per_type {
                row.extend(&per_type[i]);
            }
            if let Some(actions) = &trace.actions {
                row.extend(&actions[i]);
            }
            row
        })
        .collect();
    report.tables.push(Table { file: "trace.csv".into(), header, rows });
    Ok(report)
}

fn misdesign(cfg: &RunConfig) -> CliResult<Report> {
    let (u, p) = (utility(cfg)?, params(cfg)?);
    require_cubic_shape(&u)?;
    let gammas = list(&cfg.gamma, "gamma")?;
    let r = misdesign_cost(gammas, &u, &p)?;
    let mut report = Report::default();
    for row in &r.rows {
        push_all(
            &mut report,
            Row::new("misdesign", "", 0.0).key1("gamma", row.gamma),
            vec![
                ("eta_fixed", row.eta_fixed),
                ("eta_strategic", row.eta_strategic),
                ("cost_fixed", row.cost_fixed),
                ("cost_strategic", row.cost_strategic),
                ("ratio", row.ratio),
            ],
        );
    }
    let mut scalars = vec![("gamma1", r.gamma1), ("gamma2", r.gamma2), ("planning_action", r.planning_action)];
    if let Some(x) = r.crossover_gamma {
        scalars.push(("crossover_gamma", x));
        report.say(format!("fixed-network policy is optimal at gamma = {x:.4}"));
    }
    let worst = r.rows.iter().map(|row| row.ratio).fold(1.0, f64::max);
    report.say(format!("planning action a_ce = {:.4}, worst cost ratio = {worst:.4}", r.planning_action));
    push_all(&mut report, Row::new("misdesign", "", 0.0), scalars);
    Ok(report)
}

pub fn misdesign_point(gamma: f64, u: &UtilityFunction, p: &ModelParams) -> CliResult<Vec<(&'static str, f64)>> {
    require_cubic_shape(u)?;
    let r = misdesign_cost(&[gamma], u, p)?;
    let row = r.rows[0];
    Ok(vec![
        ("eta_fixed", row.eta_fixed),
        ("eta_strategic", row.eta_strategic),
        ("cost_fixed", row.cost_fixed),
        ("cost_strategic", row.cost_strategic),
        ("ratio", row.ratio),
    ])
}

pub fn dynamics_point(
    theta0: f64,
    a: Option<f64>,
    u: &UtilityFunction,
    p: &ModelParams,
    horizon: f64,
) -> CliResult<Vec<(&'static str, f64)>> {
    let trace = trajectory(theta0, a, u, p, horizon)?;
    Ok(vec![("terminal_theta", trace.terminal_theta), ("converged", flag(trace.converged))])
}

pub fn strategic_curve_point(
    eta: f64,
    gamma: Option<f64>,
    u: &UtilityFunction,
    p: &ModelParams,
) -> CliResult<Vec<(&'static str, f64)>> {
    let theta = strategic_theta_of_eta(eta, u, p)?;
    let mut out = vec![("curve_theta", theta)];
    if let Some(gamma) = gamma {
        out.push(("curve_cost", theta + gamma * (1.0 - eta)));
    }
    Ok(out)
}

