use super::{GridSpec, ScalarField};
use crate::par;
use crate::Result;

/// `Σ_nodes field · weight · Π h_i`.
///
/// On a periodic grid this is the trapezoid rule, exact for every Fourier mode
/// the grid resolves. Nodes are summed in lexicographic order within fixed
/// chunks (see [`crate::par`]), so the result is bit-reproducible.
pub fn integrate(field: &ScalarField, weight: &ScalarField) -> Result<f64> {
    field.grid().check_same(weight.grid(), "integrate")?;
    let (f, w) = (field.values(), weight.values());
    Ok(integrate_nodes(field.grid(), |n| f[n] * w[n]))
}

/// Quadrature of a lazily evaluated integrand.
pub fn integrate_nodes<F>(grid: &GridSpec, integrand: F) -> f64
where
    F: Fn(usize) -> f64 + Sync + Send,
{
    par::sum_indices(grid.len(), integrand) * grid.cell_volume()
}
