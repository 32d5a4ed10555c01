use rayon::prelude::*;

use crate::config::{Axis, AxisName, Mode, ProtectMode, RunConfig};
use crate::error::{CliError, CliResult};
use crate::output::{Report, Row};
use crate::run::{
    ce_point, dynamics_point, fixed_curve_point, fixed_protection_point, misdesign_point, optional_single, params,
    poa_point, require_cubic_shape, single, steady_point, strategic_curve_point, strategic_protection_point, utility,
};

pub const MAX_AXES: usize = 2;

fn allowed_axes(over: Mode, protect: ProtectMode) -> CliResult<&'static [AxisName]> {
    use AxisName::*;
    Ok(match (over, protect) {
        (Mode::Steady, _) => &[A, Beta, Delta, Eta],
        (Mode::Ce, _) => &[Beta, Delta, Rho, Eta],
        (Mode::Poa, _) => &[Beta, Delta, Rho],
        (Mode::Protect, ProtectMode::Fixed) => &[A, Beta, Delta, Gamma, Eta],
        (Mode::Protect, ProtectMode::Strategic) => &[Beta, Delta, Rho, Gamma, Eta],
        (Mode::Dynamics, _) => &[A, Beta, Delta, Rho, Theta0],
        (Mode::Misdesign, _) => &[Beta, Delta, Rho, Gamma],
        (other, _) => return Err(CliError::config(format!("`{}` cannot be swept", other.name()))),
    })
}

fn check_axes(axes: &[Axis], over: Mode, protect: ProtectMode) -> CliResult<()> {
    if axes.is_empty() {
        return Err(CliError::config("sweep needs at least one axis"));
    }
    if axes.len() > MAX_AXES {
        return Err(CliError::config(format!("sweep takes at most {MAX_AXES} axes, got {}", axes.len())));
    }
    if axes.len() == 2 && axes[0].name == axes[1].name {
        return Err(CliError::config(format!("axis `{}` is given twice", axes[0].name.name())));
    }
    let allowed = allowed_axes(over, protect)?;
    for axis in axes {
        if !allowed.contains(&axis.name) {
            return Err(CliError::config(format!(
                "axis `{}` has no effect on `{}`",
                axis.name.name(),
                over.name()
            )));
        }
        if axis.values.iter().any(|v| !v.is_finite()) {
            return Err(CliError::config(format!("axis `{}` has a non-finite value", axis.name.name())));
        }
    }
    Ok(())
}

fn apply(cfg: &mut RunConfig, axis: AxisName, value: f64) {
    match axis {
        AxisName::Beta => cfg.beta = Some(value),
        AxisName::Delta => cfg.delta = Some(value),
        AxisName::Rho => cfg.rho = Some(value),
        AxisName::A => cfg.a = Some(vec![value]),
        AxisName::Gamma => cfg.gamma = Some(vec![value]),
        AxisName::Eta => cfg.eta = Some(vec![value]),
        AxisName::Theta0 => cfg.theta0 = Some(vec![value]),
    }
}

type Quantities = Vec<(&'static str, f64)>;

fn cell(over: Mode, cfg: &RunConfig, eta_swept: bool) -> CliResult<(Quantities, Report)> {
    let p = params(cfg)?;
    let mut side = Report::default();
    let quantities = match over {
        Mode::Steady => steady_point(single(&cfg.a, "a")?, optional_single(&cfg.eta, "eta")?, &p)?,
        Mode::Ce => ce_point(&utility(cfg)?, &p, optional_single(&cfg.eta, "eta")?, &mut side)?,
        Mode::Poa => poa_point(&utility(cfg)?, &p)?,
        Mode::Protect => match cfg.protect_mode.unwrap_or(ProtectMode::Fixed) {
            ProtectMode::Fixed if eta_swept => {
                fixed_curve_point(single(&cfg.a, "a")?, single(&cfg.eta, "eta")?, single(&cfg.gamma, "gamma")?, &p)?
            }
            ProtectMode::Fixed => fixed_protection_point(single(&cfg.a, "a")?, single(&cfg.gamma, "gamma")?, &p)?,
            ProtectMode::Strategic => {
                let u = utility(cfg)?;
                require_cubic_shape(&u)?;
                if eta_swept {
                    strategic_curve_point(single(&cfg.eta, "eta")?, optional_single(&cfg.gamma, "gamma")?, &u, &p)?
                } else {
                    strategic_protection_point(single(&cfg.gamma, "gamma")?, &u, &p)?
                }
            }
        },
        Mode::Dynamics => {
            let horizon = cfg.horizon.unwrap_or(100.0);
            let a = optional_single(&cfg.a, "a")?;
            dynamics_point(single(&cfg.theta0, "theta0")?, a, &utility(cfg)?, &p, horizon)?
        }
        Mode::Misdesign => misdesign_point(single(&cfg.gamma, "gamma")?, &utility(cfg)?, &p)?,
        other => return Err(CliError::config(format!("`{}` cannot be swept", other.name()))),
    };
    Ok((quantities, side))
}

/// Cartesian sweep over one or two axes; the first axis varies slowest.
pub fn run(cfg: &RunConfig) -> CliResult<Report> {
    let over = cfg.over.ok_or_else(|| CliError::config("sweep needs `over`, the mode evaluated per cell"))?;
    let axes = cfg.axes.clone().unwrap_or_default();
    let protect = cfg.protect_mode.unwrap_or(ProtectMode::Fixed);
    check_axes(&axes, over, protect)?;
    let eta_swept = axes.iter().any(|a| a.name == AxisName::Eta);
    let cells: Vec<Vec<(AxisName, f64)>> = match axes.as_slice() {
        [x] => x.values.iter().map(|&v| vec![(x.name, v)]).collect(),
        [x, y] => x
            .values
            .iter()
            .flat_map(|&vx| y.values.iter().map(move |&vy| vec![(x.name, vx), (y.name, vy)]))
            .collect(),
        _ => unreachable!("axis count checked above"),
    };
    log::info!("sweeping {} over {} cells", over.name(), cells.len());
    let results = cells
        .par_iter()
        .map(|coords| {
            let mut local = cfg.clone();
            for &(axis, value) in coords {
                apply(&mut local, axis, value);
            }
            cell(over, &local, eta_swept)
        })
        .collect::<CliResult<Vec<_>>>()?;
    let mut report = Report::default();
    for (coords, (quantities, side)) in cells.iter().zip(results) {
        let mut base = Row::new(over.name(), "", 0.0).key1(coords[0].0.name(), coords[0].1);
        if let Some(&(axis, value)) = coords.get(1) {
            base = base.key2(axis.name(), value);
        }
        for (q, v) in quantities {
            if v.is_finite() {
                report.push(Row { quantity: q.to_string(), value: v, ..base.clone() });
            }
        }
        report.extend(side);
    }
    report.say(format!("{} cells of `{}` evaluated", cells.len(), over.name()));
    Ok(report)
}
