use epinet_core::abm::{trajectory_comparison, Strategy};
use epinet_core::efficiency::{efficiency, social_optimum};
use epinet_core::equilibrium::solve_ce;
use epinet_core::Family;

use crate::config::{linspace, AbmSettings, Axis, AxisName, Mode, ProtectMode, RunConfig, Scenario, StrategyKind};
use crate::error::CliResult;
use crate::output::{Report, Row};
use crate::run::{abm_config, params, resolve, run_mode, trajectory, utility};

/// Cubic benefit flat enough that `W` sits far above the epidemic threshold.
const CUBIC_SHAPE: [f64; 2] = [1.0, 1e-5];

fn panel(user: &RunConfig, preset: RunConfig, mode: Mode, label: &str) -> CliResult<Report> {
    let mut cfg = user.clone();
    cfg.fill_from(&preset);
    let cfg = resolve(mode, cfg);
    Ok(run_mode(mode, &cfg)?.relabel(label))
}

/// Protection presets need `u''' < 0`; keep the user's family if one was chosen.
fn cubic_unless_chosen(user: &RunConfig) -> RunConfig {
    match user.utility {
        Some(_) => RunConfig::default(),
        None => RunConfig { utility: Some(Family::Cubic), shape: Some(CUBIC_SHAPE.to_vec()), ..Default::default() },
    }
}

pub fn run(scenario: Scenario, user: &RunConfig) -> CliResult<Report> {
    let mut user = user.clone();
    user.mode = None;
    user.scenario = None;
    let user = &user;
    let name = scenario.name();
    let mut report = Report::default();
    match scenario {
        Scenario::Fig1 => {
            let preset = RunConfig {
                a: Some(vec![2.0, 3.0, 4.0, 5.0, 6.0]),
                theta0: Some(vec![0.5]),
                horizon: Some(50.0),
                ..Default::default()
            };
            report.extend(panel(user, preset, Mode::Dynamics, "fig1-dynamics")?);
            let preset = RunConfig { a: Some(linspace(0.0, 10.0, 101)), ..Default::default() };
            report.extend(panel(user, preset, Mode::Steady, "fig1-steady")?);
        }
        Scenario::Fig2 => {
            for delta in [0.2, 0.3, 0.4, 0.5] {
                let mut cfg = user.clone();
                cfg.delta = Some(delta);
                let preset = RunConfig { theta0: Some(vec![0.05]), horizon: Some(100.0), ..Default::default() };
                let mut part = panel(&cfg, preset, Mode::Dynamics, "fig2-dynamics")?;
                for row in &mut part.rows {
                    row.key1 = Some(("delta", delta));
                }
                report.extend(part);
            }
            let sweep = RunConfig {
                over: Some(Mode::Ce),
                axes: Some(vec![Axis { name: AxisName::Delta, values: linspace(0.1, 0.5, 21) }]),
                ..Default::default()
            };
            report.extend(panel(&forced(user, &sweep), RunConfig::default(), Mode::Sweep, "fig2-equilibrium")?);
        }
        Scenario::Fig3 => {
            let forced_mode = RunConfig { protect_mode: Some(ProtectMode::Fixed), ..Default::default() };
            let preset = RunConfig {
                a: Some(vec![4.47]),
                gamma: Some(vec![0.1, 0.3, 0.5, 0.7, 0.9, 1.1, 1.5]),
                eta: Some(linspace(0.0, 1.0, 101)),
                ..Default::default()
            };
            report.extend(panel(&forced(user, &forced_mode), preset, Mode::Protect, name)?);
        }
        Scenario::Fig4 => {
            let forced_mode = RunConfig { protect_mode: Some(ProtectMode::Strategic), ..Default::default() };
            let mut preset = RunConfig {
                gamma: Some(vec![0.5, 0.8, 0.85, 0.9, 0.95, 1.2]),
                eta: Some(linspace(0.0, 1.0, 101)),
                ..Default::default()
            };
            preset.fill_from(&cubic_unless_chosen(user));
            report.extend(panel(&forced(user, &forced_mode), preset, Mode::Protect, name)?);
        }
        Scenario::Fig5 => {
            report.extend(panel(user, cubic_unless_chosen(user), Mode::Misdesign, name)?);
        }
        Scenario::Fig6 => report.extend(efficiency_curve(user)?),
        Scenario::Fig7 => {
            let sweep = RunConfig {
                over: Some(Mode::Poa),
                axes: Some(vec![Axis { name: AxisName::Delta, values: linspace(0.1, 0.5, 21) }]),
                ..Default::default()
            };
            report.extend(panel(&forced(user, &sweep), RunConfig::default(), Mode::Sweep, name)?);
        }
        Scenario::Fig8 => report.extend(simulation_vs_ode(user)?),
    }
    report.say(format!("scenario {name}: {} rows", report.rows.len()));
    Ok(report)
}

/// `user` with the fields of `force` taking precedence.
fn forced(user: &RunConfig, force: &RunConfig) -> RunConfig {
    let mut cfg = force.clone();
    cfg.fill_from(user);
    cfg
}

fn efficiency_curve(user: &RunConfig) -> CliResult<Report> {
    let cfg = resolve(Mode::Poa, user.clone());
    let (u, p) = (utility(&cfg)?, params(&cfg)?);
    let upper = if u.peak().is_finite() { u.peak() } else { 10.0 * p.critical_action() };
    let grid = user.a.clone().unwrap_or_else(|| linspace(0.0, upper, 201));
    let mut report = Report::default();
    for a in grid {
        report.push(Row::new("fig6", "efficiency", efficiency(a, &u, &p)?).key1("a", a));
    }
    let opt = social_optimum(&u, &p);
    report.push(Row::new("fig6", "a_opt", opt.action));
    report.push(Row::new("fig6", "e_opt", opt.efficiency));
    report.say(format!("social optimum a = {:.6}, E = {:.6}", opt.action, opt.efficiency));
    if !opt.trivial {
        let ce = solve_ce(&u, &p)?;
        report.residual("ce", ce.residual);
        report.push(Row::new("fig6", "a_ce", ce.action));
        report.push(Row::new("fig6", "e_ce", efficiency(ce.action, &u, &p)?));
    }
    Ok(report)
}

fn simulation_vs_ode(user: &RunConfig) -> CliResult<Report> {
    let preset = RunConfig {
        a: Some(vec![6.0]),
        theta0: Some(vec![0.9]),
        horizon: Some(60.0),
        abm: Some(AbmSettings {
            sample_interval: Some(0.5),
            strategy: Some(StrategyKind::Fixed),
            ..Default::default()
        }),
        ..Default::default()
    };
    let mut cfg = user.clone();
    cfg.fill_from(&preset);
    let cfg = resolve(Mode::Abm, cfg);
    let (config, settings) = abm_config(&cfg)?;
    let replicates = settings.replicates.unwrap_or(20);
    let a = match &config.strategy {
        Strategy::Fixed { a } => Some(*a),
        _ => None,
    };
    let ode = trajectory(config.initial_infected_fraction, a, &utility(&cfg)?, &config.params, config.horizon)?;
    let dev = trajectory_comparison(&config, &ode, replicates)?;
    let mut report = Report::default();
    report.seeds.push(config.seed);
    for ((&t, &mean), &reference) in dev.times.iter().zip(&dev.ensemble_mean).zip(&dev.ode) {
        report.push(Row::new("fig8", "abm_mean", mean).key1("t", t));
        report.push(Row::new("fig8", "ode", reference).key1("t", t));
    }
    report.push(Row::new("fig8", "sup_norm", dev.sup_norm));
    report.push(Row::new("fig8", "mean_gap", dev.time_average));
    report.say(format!(
        "{} agents, {replicates} replicates: sup-norm gap {:.4}, mean gap {:.4}",
        config.n_agents, dev.sup_norm, dev.time_average
    ));
    Ok(report)
}
