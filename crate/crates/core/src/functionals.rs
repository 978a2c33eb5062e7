//! The functionals `𝓕`, `𝓕_λ` and `𝓢`, and the identities relating them.
//!
//! * `𝓕_λ(g, f) = ∫ (R + (λ+1)|∇f|²) e^{−f} dμ`, with `𝓕 = 𝓕_0`
//! * `𝓢(g̃) = ∫ R̃ dμ̃` over the product grid
//! * for `(A, B)` on the normalisation line with `Z(A, B) = λ`:
//!   `𝓢 = Vol(N) 𝓕_λ + (∫_M e^{(B−A−1)f} dμ)(∫_N R^N dσ)`

use crate::geometry::{
    contract, curvature, df_outer_df, grad_norm_sq, hessian, laplace_beltrami, norm_sq, trace,
    volume_density,
    volume_density_at, MetricSource,
};
use crate::grid::{integrate, integrate_nodes, ScalarField, StencilOrder, SymTensorField};
use crate::warped::{ClosedForm, ConstraintLevel, Formula, ProductGeometry, ALGEBRAIC_TOL};
use crate::{Error, Result};

/// How `R̃` is obtained when integrating over the product grid.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ScalarSource {
    /// Closed-form general formula from `M`- and `N`-grid data.
    ClosedForm,
    /// Generic finite-difference curvature of the assembled product metric.
    Oracle,
}

/// The three terms of the product identity and their residual.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FunctionalReport {
    pub f: f64,
    pub f_lambda: f64,
    pub s_tilde: f64,
    pub vol_n: f64,
    /// `∫_N R^N dσ`.
    pub total_scalar_n: f64,
    /// `(∫_M e^{(B−A−1)f} dμ)(∫_N R^N dσ)`.
    pub correction: f64,
    /// `𝓢 − Vol(N) 𝓕_λ − correction`.
    pub residual: f64,
    pub lambda: f64,
}

/// `𝓕_λ(g, f)`.
pub fn f_lambda(g: &SymTensorField, f: &ScalarField, lambda: f64, order: StencilOrder) -> Result<f64> {
    let r = curvature(g, order)?.scalar;
    let grad2 = grad_norm_sq(f, g, order)?;
    let vol = volume_density(g)?;
    Ok(integrate_nodes(g.grid(), |n| {
        (r.at(n) + (lambda + 1.0) * grad2.at(n)) * (-f.at(n)).exp() * vol.at(n)
    }))
}

/// Perelman's `𝓕(g, f) = ∫ (R + |∇f|²) e^{−f} dμ`.
pub fn perelman_f(g: &SymTensorField, f: &ScalarField, order: StencilOrder) -> Result<f64> {
    f_lambda(g, f, 0.0, order)
}

/// `∫ w dμ` for a scalar `w`.
pub fn integrate_density(g: &SymTensorField, w: &ScalarField) -> Result<f64> {
    integrate(w, &volume_density(g)?)
}

/// Rescales `h` by a constant so that its discrete volume is one. Returns the
/// rescaled metric and the factor `c` with `h' = c h`.
pub fn unit_volume(h: &SymTensorField) -> Result<(SymTensorField, f64)> {
    let vol = integrate(&ScalarField::constant(h.grid(), 1.0), &volume_density(h)?)?;
    let c = vol.powf(-2.0 / h.dim() as f64);
    Ok((h.scaled(c), c))
}

/// `𝓢(g̃) = ∫ R̃ dμ̃`, with `dμ̃` from the determinant of `g̃` at every node.
pub fn einstein_hilbert_s(pg: &ProductGeometry, order: StencilOrder, source: ScalarSource) -> Result<f64> {
    let view = pg.metric();
    view.validate()?;
    let grid = pg.grid();
    match source {
        ScalarSource::ClosedForm => {
            let cf = ClosedForm::new(pg, order)?;
            try_integrate(grid, |p| {
                Ok(cf.scalar_at(Formula::General, p)? * volume_density_at(&view, p)?)
            })
        }
        ScalarSource::Oracle => try_integrate(grid, |p| {
            let r = crate::geometry::curvature_at(&view, p, order)?.scalar;
            Ok(r * volume_density_at(&view, p)?)
        }),
    }
}

fn try_integrate<F>(grid: &crate::GridSpec, f: F) -> Result<f64>
where
    F: Fn(usize) -> Result<f64> + Sync + Send,
{
    let first_bad = std::sync::Mutex::new(None::<(usize, Error)>);
    let total = integrate_nodes(grid, |p| match f(p) {
        Ok(v) => v,
        Err(e) => {
            let mut guard = first_bad.lock().unwrap();
            if guard.as_ref().is_none_or(|(q, _)| p < *q) {
                *guard = Some((p, e));
            }
            0.0
        }
    });
    match first_bad.into_inner().unwrap() {
        Some((_, e)) => Err(e),
        None => Ok(total),
    }
}

fn require_line(pg: &ProductGeometry) -> Result<()> {
    let c = pg.constants();
    if c.level() == ConstraintLevel::Unconstrained {
        return Err(Error::Constants(format!(
            "identity needs A(m-2)+Bn=2; residual {:e}",
            c.c2_residual()
        )));
    }
    Ok(())
}

/// Evaluates the product identity term by term. `λ` is `Z(A, B)` of the
/// geometry's constants, so Perelman constants give `λ = 0`.
pub fn identity_residual(pg: &ProductGeometry, order: StencilOrder) -> Result<FunctionalReport> {
    require_line(pg)?;
    let c = pg.constants();
    let lambda = c.lambda();
    let (g, h, f) = (pg.g(), pg.h(), pg.f());
    let f0 = perelman_f(g, f, order)?;
    let fl = f_lambda(g, f, lambda, order)?;
    let s_tilde = einstein_hilbert_s(pg, order, ScalarSource::ClosedForm)?;
    let vol_h = volume_density(h)?;
    let vol_n = integrate(&ScalarField::constant(h.grid(), 1.0), &vol_h)?;
    let total_scalar_n = integrate(&curvature(h, order)?.scalar, &vol_h)?;
    let k = c.b() - c.a() - 1.0;
    let weight_m = integrate_density(g, &f.map(move |v| (k * v).exp()))?;
    let correction = weight_m * total_scalar_n;
    Ok(FunctionalReport {
        f: f0,
        f_lambda: fl,
        s_tilde,
        vol_n,
        total_scalar_n,
        correction,
        residual: s_tilde - vol_n * fl - correction,
        lambda,
    })
}

/// `Ric + ∇²f + λ df ⊗ df`.
pub fn s_lambda_tensor(
    g: &SymTensorField,
    f: &ScalarField,
    lambda: f64,
    order: StencilOrder,
) -> Result<SymTensorField> {
    let curv = curvature(g, order)?;
    let hess = hessian(f, &curv.christoffel, order)?;
    curv.ricci.axpy(1.0, &hess)?.axpy(lambda, &df_outer_df(f, order)?)
}

/// `D = 2 ∫ |Ric + ∇²f + λ df⊗df|²_g e^{−f} dμ`.
pub fn dissipation_integral(g: &SymTensorField, f: &ScalarField, lambda: f64, order: StencilOrder) -> Result<f64> {
    let s = s_lambda_tensor(g, f, lambda, order)?;
    let w = norm_sq(&s, g)?.zip_with(f, |q, fv| q * (-fv).exp())?;
    Ok(2.0 * integrate_density(g, &w)?)
}

/// Relative step used by [`first_variation_check`].
pub const VARIATION_STEP: f64 = 1e-3;

/// Both sides of the first-variation identity for one direction `δg`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VariationCheck {
    /// Richardson-extrapolated central difference of `ε ↦ 2𝓢`.
    pub numeric: f64,
    /// `−2 Vol(N) ∫ ⟨Ric + ∇²f + λ df⊗df, δg⟩_g e^{−f} dμ`.
    pub closed_form: f64,
    /// `2λ Vol(N) ∫ tr_g δg (|∇f|² − Δf) e^{−f} dμ`: the contribution of the
    /// `λ|∇f|²` term through `δf`, absent from `closed_form`.
    pub trace_term: f64,
    /// Central differences with steps `ε` and `ε/2`.
    pub central: [f64; 2],
    pub step: f64,
}

impl VariationCheck {
    pub fn relative_mismatch(&self) -> f64 {
        let scale = self.numeric.abs().max(self.closed_form.abs());
        if scale == 0.0 {
            0.0
        } else {
            (self.numeric - self.closed_form).abs() / scale
        }
    }

    /// Mismatch against `closed_form + trace_term`.
    pub fn corrected_mismatch(&self) -> f64 {
        let full = self.closed_form + self.trace_term;
        let scale = self.numeric.abs().max(full.abs());
        if scale == 0.0 {
            0.0
        } else {
            (self.numeric - full).abs() / scale
        }
    }
}

/// Differentiates `2𝓢` along `(g + εδg, f + ε tr_g δg / 2)` and compares with
/// the closed-form first variation.
///
/// The step is `ε = 10⁻³ / max(1, max|δg|)`; central differences at `ε` and
/// `ε/2` are combined by Richardson extrapolation. `N` must have vanishing
/// total scalar curvature, and `λ` must equal `Z(A, B)`.
///
/// For `λ ≠ 0` the numeric derivative matches `closed_form + trace_term`,
/// not `closed_form` alone.
pub fn first_variation_check(
    pg: &ProductGeometry,
    dg: &SymTensorField,
    lambda: f64,
    order: StencilOrder,
) -> Result<VariationCheck> {
    require_line(pg)?;
    let c = pg.constants();
    if (c.lambda() - lambda).abs() > ALGEBRAIC_TOL * lambda.abs().max(1.0) {
        return Err(Error::Constants(format!(
            "lambda {lambda} does not match Z(A,B) = {}",
            c.lambda()
        )));
    }
    let (g, h, f) = (pg.g(), pg.h(), pg.f());
    dg.grid().check_same(g.grid(), "variation direction")?;
    if dg.dim() != g.dim() {
        return Err(Error::GridMismatch("variation direction dimension".into()));
    }
    let vol_h = volume_density(h)?;
    let total_scalar_n = integrate(&curvature(h, order)?.scalar, &vol_h)?;
    if total_scalar_n.abs() > 1e-12 {
        return Err(Error::InvalidArgument(format!(
            "first variation formula assumes zero total scalar curvature of N, got {total_scalar_n:e}"
        )));
    }
    let vol_n = integrate(&ScalarField::constant(h.grid(), 1.0), &vol_h)?;

    let s = s_lambda_tensor(g, f, lambda, order)?;
    let pairing = contract(&s, dg, g)?.zip_with(f, |q, fv| q * (-fv).exp())?;
    let closed_form = -2.0 * vol_n * integrate_density(g, &pairing)?;

    let tr = trace(dg, g)?;
    let lap = laplace_beltrami(f, g, order)?;
    let grad2 = grad_norm_sq(f, g, order)?;
    let defect = ScalarField::from_nodes(g.grid(), |n| {
        tr.at(n) * (grad2.at(n) - lap.at(n)) * (-f.at(n)).exp()
    });
    let trace_term = 2.0 * lambda * vol_n * integrate_density(g, &defect)?;

    let df = tr.map(|t| 0.5 * t);
    let step = VARIATION_STEP / dg.max_abs().max(1.0);
    let two_s = |eps: f64| -> Result<f64> {
        let ge = g.axpy(eps, dg)?;
        let fe = f.zip_with(&df, |a, b| a + eps * b)?;
        Ok(2.0 * einstein_hilbert_s(&pg.with_fields(ge, fe)?, order, ScalarSource::ClosedForm)?)
    };
    let central = |eps: f64| -> Result<f64> { Ok((two_s(eps)? - two_s(-eps)?) / (2.0 * eps)) };
    let d1 = central(step)?;
    let d2 = central(0.5 * step)?;
    Ok(VariationCheck {
        numeric: (4.0 * d2 - d1) / 3.0,
        closed_form,
        trace_term,
        central: [d1, d2],
        step,
    })
}
