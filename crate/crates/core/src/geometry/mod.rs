//! Generic finite-difference tensor calculus for an arbitrary metric field.
//!
//! Everything here is dimension-agnostic and knows nothing about warped
//! products; it is the reference the closed-form curvature in
//! [`crate::warped`] is checked against.
//!
//! Conventions:
//!
//! * `Γ^k_ij = ½ g^{kl} (∂_i g_jl + ∂_j g_il − ∂_l g_ij)`
//! * `R_bd = ∂_a Γ^a_bd − ∂_b Γ^a_ad + Γ^p_bd Γ^a_ap − Γ^p_ad Γ^a_bp`
//!   (round spheres have positive scalar curvature)
//! * `Δ = g^{jl} ∇²_jl`, discretised in divergence form
//!   `(1/√g) ∂_i (√g g^{ij} ∂_j ·)`.

mod curvature;
pub mod linalg;
mod operators;

pub use curvature::{
    christoffel, christoffel_at, curvature, curvature_at, ricci, scalar_curvature,
    CurvatureBundle, NodeCurvature, SourceTag,
};
pub use operators::{
    contract, df_outer_df, gradient, grad_norm_sq, hessian, hessian_trace, inverse_metric,
    laplace_beltrami, norm_sq, trace, volume_density, volume_density_at,
};

use crate::grid::{sym_len, GridSpec, SymTensorField};
use crate::par;
use crate::{Error, Result};
use linalg::{spd_diagnostics, MAX_CONDITION, MAX_DIM};

/// Anything that can produce packed metric components at a grid node.
///
/// Implemented by materialized [`SymTensorField`]s and by lazy views such as
/// the warped product metric, whose full field would not fit in memory for
/// four-dimensional grids.
pub trait MetricSource: Sync {
    fn grid(&self) -> &GridSpec;

    /// Writes the packed upper triangle of `g` at `node` into `out`.
    fn metric_at(&self, node: usize, out: &mut [f64]);

    /// Checks positive definiteness and conditioning at every node.
    fn validate(&self) -> Result<()> {
        validate_nodes(self)
    }
}

impl MetricSource for SymTensorField {
    fn grid(&self) -> &GridSpec {
        SymTensorField::grid(self)
    }

    #[inline]
    fn metric_at(&self, node: usize, out: &mut [f64]) {
        out.copy_from_slice(self.node(node));
    }
}

/// Checks that `g` is a usable metric: finite, positive definite and with
/// condition number at most 1e12 at every node.
pub fn validate_metric<M: MetricSource + ?Sized>(g: &M) -> Result<()> {
    g.validate()
}

/// Node-by-node eigenvalue scan; reports the first offending node.
pub fn validate_nodes<M: MetricSource + ?Sized>(g: &M) -> Result<()> {
    let grid = g.grid();
    let d = grid.dim();
    if d > MAX_DIM {
        return Err(Error::InvalidArgument(format!(
            "metric dimension {d} exceeds supported maximum {MAX_DIM}"
        )));
    }
    let check = |node: usize| -> Option<(f64, f64)> {
        let mut buf = [0.0; MAX_DIM * (MAX_DIM + 1) / 2];
        let packed = &mut buf[..sym_len(d)];
        g.metric_at(node, packed);
        if packed.iter().any(|v| !v.is_finite()) {
            return Some((f64::NAN, f64::NAN));
        }
        let (lo, cond) = spd_diagnostics(d, packed);
        if lo > 0.0 && cond <= MAX_CONDITION {
            None
        } else {
            Some((lo, cond))
        }
    };
    match par::position_first(grid.len(), |n| check(n).is_some()) {
        None => Ok(()),
        Some(node) => {
            let (lo, cond) = check(node).unwrap();
            if lo.is_nan() {
                Err(Error::NonFinite { node })
            } else {
                Err(Error::DegenerateMetric {
                    node,
                    min_eigenvalue: lo,
                    condition: cond,
                })
            }
        }
    }
}

/// Smallest eigenvalue of the metric over all nodes.
pub fn min_eigenvalue(g: &SymTensorField) -> f64 {
    let d = g.dim();
    par::map_indices(g.grid().len(), |n| spd_diagnostics(d, g.node(n)).0)
        .into_iter()
        .fold(f64::INFINITY, f64::min)
}
