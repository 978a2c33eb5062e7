//! Evolution of `(g, f)` on `M`.
//!
//! Coupled mode integrates the constrained-gradient system
//!
//! * `∂_t g = −2 (Ric + ∇²f + λ df ⊗ df)`
//! * `∂_t f = −Δf − R − λ|∇f|²`
//!
//! whose `f` equation is a backward heat equation; it is only meaningful over
//! short horizons and with spectral filtering. Here `Δf` is the trace of the
//! discrete covariant Hessian, so `∂_t f = ½ tr_g ∂_t g` holds node by node and
//! the density `e^{−f} √det g` is conserved up to the time integrator's error.
//!
//! Decoupled mode (λ = 0 only) runs Ricci flow `∂_t g = −2 Ric` forward and
//! then the conjugate heat equation for `u = e^{−f}` backward from the
//! terminal data, where it is parabolic.

use crate::functionals::{dissipation_integral, f_lambda, integrate_density, s_lambda_tensor};
use crate::geometry::linalg::{spd_diagnostics, spd_inverse, MAX_DIM};
use crate::geometry::{
    curvature, grad_norm_sq, hessian, laplace_beltrami, trace, volume_density,
};
use crate::grid::{integrate, spectral_filter, ScalarField, StencilOrder, SymTensorField};
use crate::{par, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Integrator {
    Euler,
    Rk4,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum FlowMode {
    Coupled,
    Decoupled,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FlowConfig {
    pub lambda: f64,
    pub dt: f64,
    pub t_end: f64,
    pub integrator: Integrator,
    pub mode: FlowMode,
    /// Spectral cutoff applied to `f` and the metric components after each
    /// step; 1 disables filtering.
    pub filter_cutoff: f64,
    pub snapshot_stride: usize,
    pub order: StencilOrder,
    /// The run is declared divergent once the oscillation of `f` exceeds
    /// `limit · max(osc f₀, OSCILLATION_FLOOR)`, where `osc f = max|f − mean f|`.
    pub divergence_limit: f64,
}

impl FlowConfig {
    /// Default configuration for `grid`: `dt = 0.1 h²`, RK4, coupled, no filter.
    pub fn for_grid(grid: &crate::GridSpec, t_end: f64) -> Self {
        let h = grid.max_spacing();
        Self {
            lambda: 0.0,
            dt: 0.1 * h * h,
            t_end,
            integrator: Integrator::Rk4,
            mode: FlowMode::Coupled,
            filter_cutoff: 1.0,
            snapshot_stride: 1,
            order: StencilOrder::Second,
            divergence_limit: 10.0,
        }
    }

    /// `round(t_end / dt)`.
    pub fn steps(&self) -> usize {
        (self.t_end / self.dt).round() as usize
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidArgument(m));
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return bad(format!("dt must be positive, got {}", self.dt));
        }
        if !(self.t_end >= 0.0 && self.t_end.is_finite()) {
            return bad(format!("t_end must be non-negative, got {}", self.t_end));
        }
        if !(self.filter_cutoff > 0.0 && self.filter_cutoff <= 1.0) {
            return bad(format!("filter cutoff {} outside (0, 1]", self.filter_cutoff));
        }
        if self.snapshot_stride == 0 {
            return bad("snapshot stride must be positive".into());
        }
        if !(self.divergence_limit > 0.0) {
            return bad("divergence limit must be positive".into());
        }
        if !self.lambda.is_finite() {
            return bad("lambda must be finite".into());
        }
        Ok(())
    }
}

/// Smallest reference oscillation used by the divergence detector.
pub const OSCILLATION_FLOOR: f64 = 1e-2;

/// `max |f − mean f|` with the unweighted node mean.
pub fn oscillation(f: &ScalarField) -> f64 {
    let n = f.grid().len();
    let mean = par::sum_indices(n, |i| f.at(i)) / n as f64;
    par::max_indices(n, |i| (f.at(i) - mean).abs())
}

/// `h² / (2 · dim · max g^{ii})`, the explicit-step estimate for the parabolic parts.
pub fn stability_bound(g: &SymTensorField) -> f64 {
    let d = g.dim();
    let h = g.grid().max_spacing();
    let worst = par::max_indices(g.grid().len(), |n| {
        let mut inv = [0.0; MAX_DIM * MAX_DIM];
        match spd_inverse(d, g.node(n), &mut inv) {
            Some(_) => (0..d).map(|i| inv[i * d + i]).fold(0.0, f64::max),
            None => f64::INFINITY,
        }
    });
    h * h / (2.0 * d as f64 * worst)
}

/// `e^{−f} √det g` per node.
pub fn density(g: &SymTensorField, f: &ScalarField) -> Result<ScalarField> {
    volume_density(g)?.zip_with(f, |v, fv| (-fv).exp() * v)
}

#[derive(Debug, Clone, PartialEq)]
pub struct FlowState {
    pub t: f64,
    pub g: SymTensorField,
    pub f: ScalarField,
    rho0: ScalarField,
    f0_scale: f64,
}

impl FlowState {
    /// Initial state at `t = 0`; records the conserved density.
    pub fn new(g: SymTensorField, f: ScalarField) -> Result<Self> {
        g.grid().check_same(f.grid(), "flow state")?;
        let rho0 = density(&g, &f)?;
        let f0_scale = oscillation(&f).max(OSCILLATION_FLOOR);
        Ok(Self {
            t: 0.0,
            g,
            f,
            rho0,
            f0_scale,
        })
    }

    /// `e^{−f} √det g` at `t = 0`.
    pub fn rho0(&self) -> &ScalarField {
        &self.rho0
    }

    fn advanced(&self, t: f64, g: SymTensorField, f: ScalarField) -> Self {
        Self {
            t,
            g,
            f,
            rho0: self.rho0.clone(),
            f0_scale: self.f0_scale,
        }
    }
}

fn flow_error(t: f64, e: Error) -> Error {
    match e {
        Error::DegenerateMetric {
            node,
            min_eigenvalue,
            ..
        } => Error::FlowDegenerate {
            t,
            node,
            min_eigenvalue,
        },
        Error::NonFinite { .. } => Error::FlowDiverged {
            t,
            oscillation: f64::NAN,
            limit: f64::NAN,
        },
        other => other,
    }
}

/// Right-hand side of the coupled system.
pub fn coupled_rhs(
    g: &SymTensorField,
    f: &ScalarField,
    lambda: f64,
    order: StencilOrder,
) -> Result<(SymTensorField, ScalarField)> {
    let curv = curvature(g, order)?;
    let hess = hessian(f, &curv.christoffel, order)?;
    let dfdf = crate::geometry::df_outer_df(f, order)?;
    let s = curv.ricci.axpy(1.0, &hess)?.axpy(lambda, &dfdf)?;
    let dg = s.scaled(-2.0);
    let lap = trace(&hess, g)?;
    let grad2 = grad_norm_sq(f, g, order)?;
    let df = ScalarField::new(
        f.grid().clone(),
        (0..f.grid().len())
            .map(|n| -lap.at(n) - curv.scalar.at(n) - lambda * grad2.at(n))
            .collect(),
    )?;
    Ok((dg, df))
}

type Pair = (SymTensorField, ScalarField);

fn axpy_pair(base: &Pair, s: f64, k: &Pair) -> Result<Pair> {
    Ok((base.0.axpy(s, &k.0)?, base.1.zip_with(&k.1, |a, b| a + s * b)?))
}

fn rk_combine(base: &Pair, dt: f64, k: [&Pair; 4]) -> Result<Pair> {
    let w = [1.0, 2.0, 2.0, 1.0];
    let mut g = base.0.clone();
    let mut f = base.1.clone();
    for (wi, ki) in w.iter().zip(k) {
        g = g.axpy(dt * wi / 6.0, &ki.0)?;
        f = f.zip_with(&ki.1, |a, b| a + dt * wi / 6.0 * b)?;
    }
    Ok((g, f))
}

fn integrate_pair<R>(y: &Pair, dt: f64, integrator: Integrator, rhs: R) -> Result<Pair>
where
    R: Fn(&Pair, f64) -> Result<Pair>,
{
    match integrator {
        Integrator::Euler => axpy_pair(y, dt, &rhs(y, 0.0)?),
        Integrator::Rk4 => {
            let k1 = rhs(y, 0.0)?;
            let k2 = rhs(&axpy_pair(y, 0.5 * dt, &k1)?, 0.5)?;
            let k3 = rhs(&axpy_pair(y, 0.5 * dt, &k2)?, 0.5)?;
            let k4 = rhs(&axpy_pair(y, dt, &k3)?, 1.0)?;
            rk_combine(y, dt, [&k1, &k2, &k3, &k4])
        }
    }
}

fn filter_metric(g: &SymTensorField, cutoff: f64) -> Result<SymTensorField> {
    if cutoff == 1.0 {
        return Ok(g.clone());
    }
    let d = g.dim();
    let mut comps = Vec::with_capacity(d * (d + 1) / 2);
    for i in 0..d {
        for j in i..d {
            comps.push(spectral_filter(&g.component(i, j), cutoff)?);
        }
    }
    SymTensorField::from_components(&comps)
}

fn check_health(state: &FlowState, limit: f64) -> Result<()> {
    let t = state.t;
    let bound = limit * state.f0_scale;
    let max_f = oscillation(&state.f);
    if !max_f.is_finite() || max_f > bound || !state.g.is_finite() {
        return Err(Error::FlowDiverged {
            t,
            oscillation: max_f,
            limit: bound,
        });
    }
    let d = state.g.dim();
    let g = &state.g;
    if let Some(node) = par::position_first(g.grid().len(), |n| {
        let mut inv = [0.0; MAX_DIM * MAX_DIM];
        spd_inverse(d, g.node(n), &mut inv).is_none()
    }) {
        return Err(Error::FlowDegenerate {
            t,
            node,
            min_eigenvalue: spd_diagnostics(d, g.node(node)).0,
        });
    }
    Ok(())
}

/// One step of the coupled system with step `dt` (which may be negative).
fn coupled_step(state: &FlowState, cfg: &FlowConfig, dt: f64, t_next: f64) -> Result<FlowState> {
    let t = state.t;
    let y = (state.g.clone(), state.f.clone());
    let (g, f) = integrate_pair(&y, dt, cfg.integrator, |p, _| {
        coupled_rhs(&p.0, &p.1, cfg.lambda, cfg.order).map_err(|e| flow_error(t, e))
    })?;
    let (g, f) = if cfg.filter_cutoff < 1.0 {
        (
            filter_metric(&g, cfg.filter_cutoff)?,
            spectral_filter(&f, cfg.filter_cutoff)?,
        )
    } else {
        (g, f)
    };
    let next = state.advanced(t_next, g, f);
    check_health(&next, cfg.divergence_limit)?;
    Ok(next)
}

/// One coupled step of size `config.dt`.
pub fn step(state: &FlowState, config: &FlowConfig) -> Result<FlowState> {
    config.validate()?;
    coupled_step(state, config, config.dt, state.t + config.dt)
}

fn warn_if_unstable(g: &SymTensorField, cfg: &FlowConfig) {
    let bound = stability_bound(g);
    if cfg.dt > bound {
        log::warn!("dt = {:e} exceeds the explicit stability estimate {:e}", cfg.dt, bound);
    }
}

/// Coupled run from `(g0, f0)`; snapshots at `t = 0`, every
/// `snapshot_stride` steps and at the final step.
pub fn run_coupled(g0: SymTensorField, f0: ScalarField, config: &FlowConfig) -> Result<Vec<FlowState>> {
    config.validate()?;
    if config.mode != FlowMode::Coupled {
        return Err(Error::InvalidArgument("run_coupled needs coupled mode".into()));
    }
    warn_if_unstable(&g0, config);
    let mut state = FlowState::new(g0, f0)?;
    check_health(&state, config.divergence_limit)?;
    let steps = config.steps();
    let mut out = vec![state.clone()];
    for k in 1..=steps {
        state = coupled_step(&state, config, config.dt, k as f64 * config.dt)?;
        if k % config.snapshot_stride == 0 || k == steps {
            out.push(state.clone());
        }
    }
    Ok(out)
}

/// Ricci-flow velocity `−2 Ric`.
fn ricci_velocity(g: &SymTensorField, order: StencilOrder) -> Result<SymTensorField> {
    Ok(curvature(g, order)?.ricci.scaled(-2.0))
}

/// `Δ_g u − R u`.
fn conjugate_rhs(g: &SymTensorField, u: &ScalarField, order: StencilOrder) -> Result<ScalarField> {
    let lap = laplace_beltrami(u, g, order)?;
    let r = curvature(g, order)?.scalar;
    ScalarField::new(
        u.grid().clone(),
        (0..u.grid().len()).map(|n| lap.at(n) - r.at(n) * u.at(n)).collect(),
    )
}

/// Decoupled run: Ricci flow for `g` on `[0, T]`, then `u = e^{−f}` from
/// `u(T) = e^{−f_T}` backward in `t`. The metric between stored steps comes
/// from cubic Hermite interpolation of `(g, ∂_t g)`.
pub fn run_decoupled(g0: SymTensorField, f_terminal: ScalarField, config: &FlowConfig) -> Result<Vec<FlowState>> {
    config.validate()?;
    if config.mode != FlowMode::Decoupled {
        return Err(Error::InvalidArgument("run_decoupled needs decoupled mode".into()));
    }
    if config.lambda != 0.0 {
        return Err(Error::InvalidArgument(
            "decoupled mode is only defined for lambda = 0".into(),
        ));
    }
    g0.grid().check_same(f_terminal.grid(), "decoupled flow")?;
    warn_if_unstable(&g0, config);
    let steps = config.steps();
    let dt = config.dt;
    let order = config.order;

    // forward Ricci flow, keeping every step for the backward sweep
    let mut metrics = vec![g0];
    let mut velocities = Vec::with_capacity(steps + 1);
    for k in 0..steps {
        let t = k as f64 * dt;
        let g = &metrics[k];
        let v = ricci_velocity(g, order).map_err(|e| flow_error(t, e))?;
        let next = match config.integrator {
            Integrator::Euler => g.axpy(dt, &v)?,
            Integrator::Rk4 => {
                let rhs = |x: &SymTensorField| ricci_velocity(x, order).map_err(|e| flow_error(t, e));
                let k2 = rhs(&g.axpy(0.5 * dt, &v)?)?;
                let k3 = rhs(&g.axpy(0.5 * dt, &k2)?)?;
                let k4 = rhs(&g.axpy(dt, &k3)?)?;
                g.axpy(dt / 6.0, &v)?
                    .axpy(dt / 3.0, &k2)?
                    .axpy(dt / 3.0, &k3)?
                    .axpy(dt / 6.0, &k4)?
            }
        };
        let next = filter_metric(&next, config.filter_cutoff)?;
        velocities.push(v);
        metrics.push(next);
    }
    velocities.push(ricci_velocity(&metrics[steps], order).map_err(|e| flow_error(steps as f64 * dt, e))?);
    for (k, g) in metrics.iter().enumerate() {
        if let Some(node) = par::position_first(g.grid().len(), |n| {
            let mut inv = [0.0; MAX_DIM * MAX_DIM];
            spd_inverse(g.dim(), g.node(n), &mut inv).is_none()
        }) {
            return Err(Error::FlowDegenerate {
                t: k as f64 * dt,
                node,
                min_eigenvalue: spd_diagnostics(g.dim(), g.node(node)).0,
            });
        }
    }

    // backward sweep in s = T − t
    let check_u = |u: &ScalarField, t: f64| -> Result<()> {
        match u.values().iter().position(|&v| !(v > 0.0)) {
            Some(node) => Err(Error::NonPositiveDensity {
                t,
                node,
                value: u.at(node),
            }),
            None => Ok(()),
        }
    };
    let mut u = f_terminal.map(|v| (-v).exp());
    check_u(&u, steps as f64 * dt)?;
    let mut us = vec![ScalarField::zeros(u.grid()); steps + 1];
    us[steps] = u.clone();
    for k in (1..=steps).rev() {
        // from t_k to t_{k−1}
        let (g1, g0) = (&metrics[k], &metrics[k - 1]);
        let next = match config.integrator {
            Integrator::Euler => u.zip_with(&conjugate_rhs(g1, &u, order)?, |a, b| a + dt * b)?,
            Integrator::Rk4 => {
                // Hermite midpoint of g on [t_{k−1}, t_k]
                let mid = g0
                    .axpy(1.0, g1)?
                    .scaled(0.5)
                    .axpy(dt / 8.0, &velocities[k - 1].axpy(-1.0, &velocities[k])?)?;
                let k1 = conjugate_rhs(g1, &u, order)?;
                let k2 = conjugate_rhs(&mid, &u.zip_with(&k1, |a, b| a + 0.5 * dt * b)?, order)?;
                let k3 = conjugate_rhs(&mid, &u.zip_with(&k2, |a, b| a + 0.5 * dt * b)?, order)?;
                let k4 = conjugate_rhs(g0, &u.zip_with(&k3, |a, b| a + dt * b)?, order)?;
                ScalarField::from_nodes(u.grid(), |n| {
                    u.at(n) + dt / 6.0 * (k1.at(n) + 2.0 * k2.at(n) + 2.0 * k3.at(n) + k4.at(n))
                })
            }
        };
        u = spectral_filter(&next, config.filter_cutoff)?;
        check_u(&u, (k - 1) as f64 * dt)?;
        us[k - 1] = u.clone();
    }

    let f0 = us[0].map(|v| -v.ln());
    let first = FlowState::new(metrics[0].clone(), f0)?;
    let mut out = vec![first.clone()];
    for k in 1..=steps {
        if k % config.snapshot_stride == 0 || k == steps {
            out.push(first.advanced(k as f64 * dt, metrics[k].clone(), us[k].map(|v| -v.ln())));
        }
    }
    Ok(out)
}

/// `max |e^{−f} √det g − ρ₀| / ρ₀` over all nodes and snapshots.
pub fn conserved_measure_check(trajectory: &[FlowState]) -> Result<f64> {
    let mut worst: f64 = 0.0;
    for s in trajectory {
        let rho = density(&s.g, &s.f)?;
        let r0 = s.rho0();
        let dev = par::max_indices(rho.grid().len(), |n| ((rho.at(n) - r0.at(n)) / r0.at(n)).abs());
        worst = worst.max(dev);
    }
    Ok(worst)
}

/// `∫ e^{−f} dμ`.
pub fn total_measure(state: &FlowState) -> Result<f64> {
    integrate(&state.f.map(|v| (-v).exp()), &volume_density(&state.g)?)
}

/// Direction of change of a monotone sequence.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Trend {
    Nondecreasing,
    Nonincreasing,
    Constant,
}

impl Trend {
    pub fn name(self) -> &'static str {
        match self {
            Trend::Nondecreasing => "nondecreasing",
            Trend::Nonincreasing => "nonincreasing",
            Trend::Constant => "constant",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MonotonicityRow {
    pub t: f64,
    pub f_lambda: f64,
    /// Centered difference; absent at the first and last snapshot.
    pub df_dt: Option<f64>,
    pub dissipation: f64,
    /// `(d𝓕_λ/dt) / D`.
    pub ratio: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MonotonicityReport {
    pub rows: Vec<MonotonicityRow>,
    /// Observed direction, or `None` when the sequence changes direction.
    pub trend: Option<Trend>,
}

impl MonotonicityReport {
    pub fn consistent(&self) -> bool {
        self.trend.is_some()
    }
}

/// Classifies the increments of `values`; changes smaller than `tol` count as zero.
pub fn trend_of(values: &[f64], tol: f64) -> Option<Trend> {
    let (mut up, mut down) = (false, false);
    for w in values.windows(2) {
        let d = w[1] - w[0];
        up |= d > tol;
        down |= d < -tol;
    }
    match (up, down) {
        (false, false) => Some(Trend::Constant),
        (true, false) => Some(Trend::Nondecreasing),
        (false, true) => Some(Trend::Nonincreasing),
        (true, true) => None,
    }
}

/// `𝓕_λ`, its centered time derivative and the dissipation at each snapshot.
pub fn monotonicity_report(trajectory: &[FlowState], lambda: f64, order: StencilOrder) -> Result<MonotonicityReport> {
    let values: Vec<f64> = trajectory
        .iter()
        .map(|s| f_lambda(&s.g, &s.f, lambda, order))
        .collect::<Result<_>>()?;
    let mut rows = Vec::with_capacity(trajectory.len());
    for (i, s) in trajectory.iter().enumerate() {
        let dissipation = dissipation_integral(&s.g, &s.f, lambda, order)?;
        let df_dt = (i > 0 && i + 1 < trajectory.len()).then(|| {
            (values[i + 1] - values[i - 1]) / (trajectory[i + 1].t - trajectory[i - 1].t)
        });
        rows.push(MonotonicityRow {
            t: s.t,
            f_lambda: values[i],
            df_dt,
            dissipation,
            ratio: df_dt.filter(|_| dissipation > 0.0).map(|r| r / dissipation),
        });
    }
    let scale = values.iter().fold(0.0f64, |a, v| a.max(v.abs())).max(1.0);
    Ok(MonotonicityReport {
        rows,
        trend: trend_of(&values, 1e-14 * scale),
    })
}

/// Instantaneous rate of `𝓕_λ` at `t = 0` from one step forward and one step
/// backward, next to the dissipation integral.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DissipationCheck {
    pub rate: f64,
    pub dissipation: f64,
}

impl DissipationCheck {
    /// `|rate| / D`.
    pub fn ratio(&self) -> f64 {
        self.rate.abs() / self.dissipation
    }
}

pub fn instantaneous_dissipation(g: &SymTensorField, f: &ScalarField, config: &FlowConfig) -> Result<DissipationCheck> {
    config.validate()?;
    let state = FlowState::new(g.clone(), f.clone())?;
    let fwd = coupled_step(&state, config, config.dt, config.dt)?;
    let bwd = coupled_step(&state, config, -config.dt, -config.dt)?;
    let fl = |s: &FlowState| f_lambda(&s.g, &s.f, config.lambda, config.order);
    Ok(DissipationCheck {
        rate: (fl(&fwd)? - fl(&bwd)?) / (2.0 * config.dt),
        dissipation: dissipation_integral(g, f, config.lambda, config.order)?,
    })
}

/// `d𝓕_λ/dt` along the coupled flow at `(g, f)`:
/// `D − 2λ ∫ tr_g S_λ (|∇f|² − Δf) e^{−f} dμ`.
///
/// For `λ ≠ 0` the flow is not the gradient flow of `𝓕_λ`, and the second
/// term makes the rate differ from `D`.
pub fn predicted_rate(g: &SymTensorField, f: &ScalarField, lambda: f64, order: StencilOrder) -> Result<f64> {
    let d = dissipation_integral(g, f, lambda, order)?;
    if lambda == 0.0 {
        return Ok(d);
    }
    let tr = trace(&s_lambda_tensor(g, f, lambda, order)?, g)?;
    let lap = laplace_beltrami(f, g, order)?;
    let grad2 = grad_norm_sq(f, g, order)?;
    let w = ScalarField::from_nodes(g.grid(), |n| tr.at(n) * (grad2.at(n) - lap.at(n)) * (-f.at(n)).exp());
    Ok(d - 2.0 * lambda * integrate_density(g, &w)?)
}
