use super::{offset, SEED_F, SEED_G};
use crate::config::{FlowSection, IntegratorChoice, ModeChoice};
use crate::{CliError, ExperimentConfig, Report};
use dilaton_core::flow::{
    density, monotonicity_report, run_coupled, run_decoupled, FlowConfig, FlowMode, FlowState, Integrator,
};
use dilaton_core::geometry::linalg::spd_diagnostics;
use dilaton_core::{par, Error, GridSpec, StencilOrder};

fn flow_config(s: &FlowSection, grid: &GridSpec) -> Result<FlowConfig, CliError> {
    let mut c = FlowConfig::for_grid(grid, s.t_end);
    if let Some(dt) = s.dt {
        c.dt = dt;
    }
    c.lambda = s.lambda;
    c.integrator = match s.integrator {
        IntegratorChoice::Euler => Integrator::Euler,
        IntegratorChoice::Rk4 => Integrator::Rk4,
    };
    c.mode = match s.mode {
        ModeChoice::Coupled => FlowMode::Coupled,
        ModeChoice::Decoupled => FlowMode::Decoupled,
    };
    c.filter_cutoff = s.filter_cutoff;
    c.snapshot_stride = s.snapshot_stride;
    c.order = StencilOrder::from_order(s.order)?;
    c.divergence_limit = s.divergence_limit;
    c.validate()?;
    if c.mode == FlowMode::Decoupled && c.lambda != 0.0 {
        return Err(CliError::Config("decoupled mode is only defined for lambda = 0".into()));
    }
    Ok(c)
}

fn deviation(s: &FlowState) -> Result<f64, CliError> {
    let rho = density(&s.g, &s.f)?;
    let r0 = s.rho0();
    Ok(par::max_indices(rho.grid().len(), |n| ((rho.at(n) - r0.at(n)) / r0.at(n)).abs()))
}

fn min_eigenvalue(s: &FlowState) -> f64 {
    let g = &s.g;
    par::map_indices(g.grid().len(), |n| spd_diagnostics(g.dim(), g.node(n)).0)
        .into_iter()
        .fold(f64::INFINITY, f64::min)
}

/// Runs the flow and tabulates `𝓕_λ`, its rate, the dissipation integral,
/// the drift of the conserved density and the smallest metric eigenvalue.
pub fn flow(cfg: &ExperimentConfig) -> Result<Report, CliError> {
    let s = cfg.flow()?;
    let grid = GridSpec::cube(s.dim, s.resolution, s.period)?;
    let c = flow_config(s, &grid)?;
    let g0 = s.g.build(&grid, offset(cfg.seed, SEED_G))?;
    let f0 = s.f.build(&grid, offset(cfg.seed, SEED_F))?;
    dilaton_core::geometry::validate_metric(&g0)?;

    let mut report = Report::new(
        "flow",
        &[
            "t",
            "f_lambda",
            "dissipation",
            "df_dt",
            "ratio",
            "sign",
            "constraint_deviation",
            "min_eigenvalue",
        ],
    );
    if let Some(seed) = cfg.seed {
        report.note(format!("seed: {seed}"));
    }
    report.note(format!("grid: dim={} resolution={} period={}", s.dim, s.resolution, s.period));
    report.note(format!(
        "flow: mode={:?} integrator={:?} lambda={} dt={:e} steps={} filter_cutoff={} snapshot_stride={} stencil order={}",
        c.mode,
        c.integrator,
        c.lambda,
        c.dt,
        c.steps(),
        c.filter_cutoff,
        c.snapshot_stride,
        s.order
    ));
    report.note(format!("g0: {:?}", s.g));
    report.note(format!(
        "{}: {:?}",
        if c.mode == FlowMode::Coupled { "f0" } else { "f(T)" },
        s.f
    ));
    report.note(format!("tolerance: divergence when osc f > {} * max(osc f0, 0.01)", c.divergence_limit));
    if c.mode == FlowMode::Coupled {
        report.note(format!("tolerance: constraint_deviation <= {:e}", s.constraint_tolerance));
    }
    if c.lambda == 0.0 {
        report.note("tolerance: f_lambda monotone over the snapshots");
    }
    report.note("column f_lambda: integral of (R + (lambda+1)|grad f|^2) e^-f over M");
    report.note("column dissipation: 2 * integral of |Ric + Hess f + lambda df(x)df|^2 e^-f over M");
    report.note("column df_dt: centered difference of f_lambda between neighbouring snapshots");
    report.note("column ratio: df_dt / dissipation");
    report.note("column constraint_deviation: max over nodes of |e^-f sqrt(det g) / (its initial value) - 1|");

    let run = match c.mode {
        FlowMode::Coupled => run_coupled(g0, f0, &c),
        FlowMode::Decoupled => run_decoupled(g0, f0, &c),
    };
    let traj = match run {
        Ok(t) => t,
        Err(e @ (Error::FlowDiverged { .. } | Error::FlowDegenerate { .. } | Error::NonPositiveDensity { .. })) => {
            report.fail(e.to_string());
            return Ok(report);
        }
        Err(e) => return Err(e.into()),
    };
    let mono = monotonicity_report(&traj, c.lambda, c.order)?;
    let mut worst: f64 = 0.0;
    for (state, row) in traj.iter().zip(&mono.rows) {
        let dev = deviation(state)?;
        worst = worst.max(dev);
        let sign = match row.df_dt {
            Some(d) if d > 0.0 => "+",
            Some(d) if d < 0.0 => "-",
            Some(_) => "0",
            None => "",
        };
        report.push(vec![
            row.t.into(),
            row.f_lambda.into(),
            row.dissipation.into(),
            row.df_dt.into(),
            row.ratio.into(),
            sign.into(),
            dev.into(),
            min_eigenvalue(state).into(),
        ]);
    }
    match mono.trend {
        Some(t) => report.note(format!("observed trend: {}", t.name())),
        None => {
            report.note("observed trend: mixed");
            if c.lambda == 0.0 {
                report.fail("f_lambda is not monotone over the snapshots");
            }
        }
    }
    if c.mode == FlowMode::Coupled && !(worst <= s.constraint_tolerance) {
        report.fail(format!(
            "constraint deviation {worst:e} exceeds {:e}",
            s.constraint_tolerance
        ));
    }
    Ok(report)
}
