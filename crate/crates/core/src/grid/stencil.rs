use super::{GridSpec, ScalarField};
use crate::par;
use crate::{Error, Result};

/// Accuracy order of the central-difference stencils.
///
/// Second derivatives are always formed by composing two first-derivative
/// stencils (`D_a D_b`). The composed operator is antisymmetric-squared on a
/// periodic grid, which is what makes discrete integration by parts exact.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum StencilOrder {
    #[default]
    Second,
    Fourth,
}

const SECOND: [(isize, f64); 2] = [(-1, -0.5), (1, 0.5)];
// antisymmetric pairs adjacent so that constants difference to exactly zero
const FOURTH: [(isize, f64); 4] = [
    (-1, -8.0 / 12.0),
    (1, 8.0 / 12.0),
    (-2, 1.0 / 12.0),
    (2, -1.0 / 12.0),
];

impl StencilOrder {
    pub fn from_order(order: usize) -> Result<Self> {
        match order {
            2 => Ok(Self::Second),
            4 => Ok(Self::Fourth),
            o => Err(Error::InvalidArgument(format!(
                "stencil order {o} not supported (2 or 4)"
            ))),
        }
    }

    pub fn order(self) -> usize {
        match self {
            Self::Second => 2,
            Self::Fourth => 4,
        }
    }

    /// `(offset, weight)` pairs of the first-derivative stencil for unit spacing.
    pub fn weights(self) -> &'static [(isize, f64)] {
        match self {
            Self::Second => &SECOND,
            Self::Fourth => &FOURTH,
        }
    }

    /// Largest |offset| of the first-derivative stencil.
    pub fn radius(self) -> usize {
        match self {
            Self::Second => 1,
            Self::Fourth => 2,
        }
    }
}

/// First derivative along `axis` at `node` of the values returned by `get`.
#[inline]
pub(crate) fn derivative_at<F: Fn(usize) -> f64>(
    grid: &GridSpec,
    node: usize,
    axis: usize,
    order: StencilOrder,
    get: F,
) -> f64 {
    let inv_h = 1.0 / grid.spacing(axis);
    order
        .weights()
        .iter()
        .map(|&(o, w)| w * get(grid.shift(node, axis, o)))
        .sum::<f64>()
        * inv_h
}

/// Periodic central-difference `∂_axis field`.
pub fn partial_derivative(
    field: &ScalarField,
    axis: usize,
    order: StencilOrder,
) -> Result<ScalarField> {
    let grid = field.grid();
    grid.check_axis(axis)?;
    let v = field.values();
    let values = par::map_indices(grid.len(), |node| {
        derivative_at(grid, node, axis, order, |n| v[n])
    });
    Ok(ScalarField::from_raw(grid.clone(), values))
}

/// `∂_a ∂_b field` as the composition of two first-derivative stencils.
pub fn second_derivative(
    field: &ScalarField,
    a: usize,
    b: usize,
    order: StencilOrder,
) -> Result<ScalarField> {
    partial_derivative(&partial_derivative(field, b, order)?, a, order)
}
