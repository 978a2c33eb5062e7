//! The warped product `g̃ = e^{−Af} g ⊕ e^{−Bf} h` on `M × N`.
//!
//! Index conventions: Latin indices `i, j, k, l` run over the `m` directions
//! of `M`, Greek indices `α, β, γ` over the `n` directions of `N`. On the
//! product grid the `M` axes come first.
//!
//! The closed forms use `K = (Am + Bn)/2 − A` and
//! `C₁ = 2ABn + (m−2)A² − B²n`:
//!
//! * `R̃_jl = R_jl + K ∇²_jl f + (A/2) g_jl (Δf − K|∇f|²) + (C₁/4) ∂_j f ∂_l f`
//! * `R̃_βγ = R_βγ + (B/2) e^{(A−B)f} h_βγ (Δf − K|∇f|²)`
//! * `R̃_jβ = 0`
//!
//! and reduce, for `K = 1` and `C₁ = 0`, to
//! `R̃ = e^{Af} R^M + e^{Bf} R^N + e^{Af} ((A+2)Δf − (A+1)|∇f|²)`.

mod closed_form;
mod constants;
mod product;
mod verify;

pub use closed_form::{
    christoffel_closed_form, ricci_closed_ansatz, ricci_closed_general, ClosedForm, Formula,
};
pub use constants::{
    c1_residual, c2_residual, lambda_max, lambda_to_constants, max_z_on_line, solve_perelman_constants,
    solve_theta, z_value, Branch, ConstraintLevel, WarpedConstants, ALGEBRAIC_TOL,
};
pub use product::{assemble_product_metric, ProductGeometry, ProductMetric, MAX_MATERIALIZED_VALUES};
pub use verify::{
    closed_form_errors, curvature_study, sample_nodes, CurvatureStudy, Family, FamilyStudy,
    EXACT_FLOOR,
};
