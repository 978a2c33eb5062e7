//! Periodic structured grids (flat tori) and the fields living on them.
//!
//! Nodes are numbered row-major with the last axis varying fastest. The
//! Cartesian product of two grids therefore numbers node `(x, y)` as
//! `x * other.len() + y`.

mod field;
mod filter;
mod quadrature;
mod stencil;

pub use field::{sym_index, sym_len, Christoffel3Field, ScalarField, SymTensorField};
pub use filter::spectral_filter;
pub use quadrature::{integrate, integrate_nodes};
pub use stencil::{partial_derivative, second_derivative, StencilOrder};

use crate::{Error, Result};

/// Smallest admissible number of points per axis.
pub const MIN_POINTS: usize = 8;

#[derive(Debug, Clone, PartialEq)]
pub struct GridSpec {
    points: Vec<usize>,
    periods: Vec<f64>,
    strides: Vec<usize>,
    len: usize,
}

impl GridSpec {
    pub fn new(points: Vec<usize>, periods: Vec<f64>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::InvalidGrid("dimension must be positive".into()));
        }
        if points.len() != periods.len() {
            return Err(Error::InvalidGrid(format!(
                "{} point counts but {} periods",
                points.len(),
                periods.len()
            )));
        }
        if let Some(&p) = points.iter().find(|&&p| p < MIN_POINTS) {
            return Err(Error::InvalidGrid(format!(
                "{p} points on an axis, at least {MIN_POINTS} required"
            )));
        }
        if let Some(&l) = periods.iter().find(|l| !(l.is_finite() && **l > 0.0)) {
            return Err(Error::InvalidGrid(format!("period {l} is not positive")));
        }
        let mut strides = vec![1; points.len()];
        for a in (0..points.len() - 1).rev() {
            strides[a] = strides[a + 1] * points[a + 1];
        }
        let len = points.iter().product();
        Ok(Self {
            points,
            periods,
            strides,
            len,
        })
    }

    /// `dim` axes with the same resolution and period.
    pub fn cube(dim: usize, points: usize, period: f64) -> Result<Self> {
        Self::new(vec![points; dim], vec![period; dim])
    }

    pub fn dim(&self) -> usize {
        self.points.len()
    }

    pub fn points(&self) -> &[usize] {
        &self.points
    }

    pub fn periods(&self) -> &[f64] {
        &self.periods
    }

    pub fn spacing(&self, axis: usize) -> f64 {
        self.periods[axis] / self.points[axis] as f64
    }

    pub fn spacings(&self) -> Vec<f64> {
        (0..self.dim()).map(|a| self.spacing(a)).collect()
    }

    pub fn max_spacing(&self) -> f64 {
        (0..self.dim()).map(|a| self.spacing(a)).fold(0.0, f64::max)
    }

    /// Total number of nodes.
    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    /// Volume of one grid cell, `Π h_i`.
    pub fn cell_volume(&self) -> f64 {
        (0..self.dim()).map(|a| self.spacing(a)).product()
    }

    pub fn volume(&self) -> f64 {
        self.periods.iter().product()
    }

    pub fn stride(&self, axis: usize) -> usize {
        self.strides[axis]
    }

    /// Integer coordinate of `node` along `axis`.
    pub fn coord(&self, node: usize, axis: usize) -> usize {
        (node / self.strides[axis]) % self.points[axis]
    }

    pub fn coords(&self, node: usize) -> Vec<usize> {
        (0..self.dim()).map(|a| self.coord(node, a)).collect()
    }

    pub fn node_index(&self, coords: &[usize]) -> usize {
        coords
            .iter()
            .zip(&self.strides)
            .zip(&self.points)
            .map(|((&c, &s), &p)| (c % p) * s)
            .sum()
    }

    /// Physical position of `node`, `x_i = c_i h_i`.
    pub fn position(&self, node: usize) -> Vec<f64> {
        (0..self.dim())
            .map(|a| self.coord(node, a) as f64 * self.spacing(a))
            .collect()
    }

    /// Periodic neighbour of `node` displaced by `offset` points along `axis`.
    #[inline]
    pub fn shift(&self, node: usize, axis: usize, offset: isize) -> usize {
        let n = self.points[axis] as isize;
        let c = ((node / self.strides[axis]) % self.points[axis]) as isize;
        let shifted = (c + offset).rem_euclid(n);
        (node as isize + (shifted - c) * self.strides[axis] as isize) as usize
    }

    /// Cartesian product grid: axes of `self` first, then those of `other`.
    pub fn product(&self, other: &GridSpec) -> GridSpec {
        let points = self.points.iter().chain(&other.points).copied().collect();
        let periods = self.periods.iter().chain(&other.periods).copied().collect();
        GridSpec::new(points, periods).expect("product of valid grids is valid")
    }

    /// Grid with every axis refined by an integer factor.
    pub fn refined(&self, factor: usize) -> GridSpec {
        GridSpec::new(
            self.points.iter().map(|p| p * factor).collect(),
            self.periods.clone(),
        )
        .expect("refinement of a valid grid is valid")
    }

    pub(crate) fn check_axis(&self, axis: usize) -> Result<()> {
        if axis >= self.dim() {
            Err(Error::AxisOutOfRange {
                axis,
                dim: self.dim(),
            })
        } else {
            Ok(())
        }
    }

    pub(crate) fn check_same(&self, other: &GridSpec, what: &str) -> Result<()> {
        if self == other {
            Ok(())
        } else {
            Err(Error::GridMismatch(format!(
                "{what}: {:?} vs {:?}",
                self.points, other.points
            )))
        }
    }
}
