use super::GridSpec;
use crate::par;
use crate::{Error, Result};

/// Number of independent components of a symmetric `dim × dim` tensor.
#[inline]
pub const fn sym_len(dim: usize) -> usize {
    dim * (dim + 1) / 2
}

/// Packed upper-triangle index of `(i, j)`; symmetric in its arguments.
#[inline]
pub fn sym_index(dim: usize, i: usize, j: usize) -> usize {
    let (i, j) = if i <= j { (i, j) } else { (j, i) };
    // row i starts after sum_{r<i} (dim - r) entries
    i * dim - i * i.saturating_sub(1) / 2 + (j - i)
}

/// A real value per node.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarField {
    grid: GridSpec,
    values: Vec<f64>,
}

impl ScalarField {
    pub fn new(grid: GridSpec, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::GridMismatch(format!(
                "{} values for {} nodes",
                values.len(),
                grid.len()
            )));
        }
        if let Some(node) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite { node });
        }
        Ok(Self { grid, values })
    }

    /// Unchecked constructor for internal results known to be finite or whose
    /// finiteness is checked by the caller.
    pub(crate) fn from_raw(grid: GridSpec, values: Vec<f64>) -> Self {
        debug_assert_eq!(values.len(), grid.len());
        Self { grid, values }
    }

    pub fn constant(grid: &GridSpec, value: f64) -> Self {
        Self::from_raw(grid.clone(), vec![value; grid.len()])
    }

    pub fn zeros(grid: &GridSpec) -> Self {
        Self::constant(grid, 0.0)
    }

    /// Samples `f` at the physical node positions.
    pub fn from_fn<F>(grid: &GridSpec, f: F) -> Self
    where
        F: Fn(&[f64]) -> f64 + Sync + Send,
    {
        let values = par::map_indices(grid.len(), |node| f(&grid.position(node)));
        Self::from_raw(grid.clone(), values)
    }

    /// Evaluates `f` at every node index.
    pub fn from_nodes<F>(grid: &GridSpec, f: F) -> Self
    where
        F: Fn(usize) -> f64 + Sync + Send,
    {
        Self::from_raw(grid.clone(), par::map_indices(grid.len(), f))
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    #[inline]
    pub fn at(&self, node: usize) -> f64 {
        self.values[node]
    }

    pub fn map<F: Fn(f64) -> f64 + Sync + Send>(&self, f: F) -> Self {
        let values = par::map_indices(self.values.len(), |i| f(self.values[i]));
        Self::from_raw(self.grid.clone(), values)
    }

    /// Node-wise combination of two fields on the same grid.
    pub fn zip_with<F>(&self, other: &ScalarField, f: F) -> Result<Self>
    where
        F: Fn(f64, f64) -> f64 + Sync + Send,
    {
        self.grid.check_same(&other.grid, "zip_with")?;
        let values = par::map_indices(self.values.len(), |i| f(self.values[i], other.values[i]));
        Ok(Self::from_raw(self.grid.clone(), values))
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }

    /// `max |self - other|` over nodes.
    pub fn max_abs_diff(&self, other: &ScalarField) -> Result<f64> {
        self.grid.check_same(&other.grid, "max_abs_diff")?;
        Ok(self
            .values
            .iter()
            .zip(&other.values)
            .fold(0.0, |m, (a, b)| m.max((a - b).abs())))
    }
}

/// Symmetric 2-tensor per node, stored as the packed upper triangle.
///
/// The tensor rank equals the grid dimension. When used as a metric the field
/// must be positive definite at every node; [`crate::geometry::validate_metric`]
/// checks this.
#[derive(Debug, Clone, PartialEq)]
pub struct SymTensorField {
    grid: GridSpec,
    values: Vec<f64>,
}

impl SymTensorField {
    pub fn new(grid: GridSpec, values: Vec<f64>) -> Result<Self> {
        let width = sym_len(grid.dim());
        if values.len() != grid.len() * width {
            return Err(Error::GridMismatch(format!(
                "{} values for {} nodes of width {width}",
                values.len(),
                grid.len()
            )));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite { node: i / width });
        }
        Ok(Self { grid, values })
    }

    pub(crate) fn from_raw(grid: GridSpec, values: Vec<f64>) -> Self {
        debug_assert_eq!(values.len(), grid.len() * sym_len(grid.dim()));
        Self { grid, values }
    }

    pub fn zeros(grid: &GridSpec) -> Self {
        Self::from_raw(grid.clone(), vec![0.0; grid.len() * sym_len(grid.dim())])
    }

    /// The flat metric `δ_ij`.
    pub fn identity(grid: &GridSpec) -> Self {
        let d = grid.dim();
        let mut out = Self::zeros(grid);
        par::fill_nodes(&mut out.values, sym_len(d), |_, s| {
            for i in 0..d {
                s[sym_index(d, i, i)] = 1.0;
            }
        });
        out
    }

    /// Samples `f(position, packed_out)` at every node.
    pub fn from_fn<F>(grid: &GridSpec, f: F) -> Self
    where
        F: Fn(&[f64], &mut [f64]) + Sync + Send,
    {
        let mut out = Self::zeros(grid);
        par::fill_nodes(&mut out.values, sym_len(grid.dim()), |node, s| {
            f(&grid.position(node), s)
        });
        out
    }

    /// Scalar multiple of the identity: `φ(x) δ_ij`.
    pub fn conformal(factor: &ScalarField) -> Self {
        let grid = factor.grid();
        let d = grid.dim();
        let mut out = Self::zeros(grid);
        par::fill_nodes(&mut out.values, sym_len(d), |node, s| {
            for i in 0..d {
                s[sym_index(d, i, i)] = factor.at(node);
            }
        });
        out
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn dim(&self) -> usize {
        self.grid.dim()
    }

    pub fn width(&self) -> usize {
        sym_len(self.dim())
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    /// Packed components at `node`.
    #[inline]
    pub fn node(&self, node: usize) -> &[f64] {
        let w = self.width();
        &self.values[node * w..(node + 1) * w]
    }

    #[inline]
    pub fn get(&self, node: usize, i: usize, j: usize) -> f64 {
        self.values[node * self.width() + sym_index(self.dim(), i, j)]
    }

    pub fn set(&mut self, node: usize, i: usize, j: usize, v: f64) {
        let w = self.width();
        let d = self.dim();
        self.values[node * w + sym_index(d, i, j)] = v;
    }

    /// The `(i, j)` component as a scalar field.
    pub fn component(&self, i: usize, j: usize) -> ScalarField {
        let k = sym_index(self.dim(), i, j);
        let w = self.width();
        let values = (0..self.grid.len()).map(|n| self.values[n * w + k]).collect();
        ScalarField::from_raw(self.grid.clone(), values)
    }

    /// Builds a field from its packed component fields (length `sym_len(dim)`).
    pub fn from_components(components: &[ScalarField]) -> Result<Self> {
        let grid = components
            .first()
            .ok_or_else(|| Error::InvalidArgument("no components".into()))?
            .grid()
            .clone();
        let w = sym_len(grid.dim());
        if components.len() != w {
            return Err(Error::InvalidArgument(format!(
                "{} components given, {w} expected",
                components.len()
            )));
        }
        for c in components {
            grid.check_same(c.grid(), "from_components")?;
        }
        let mut out = Self::zeros(&grid);
        par::fill_nodes(&mut out.values, w, |node, s| {
            for (k, c) in components.iter().enumerate() {
                s[k] = c.at(node);
            }
        });
        Ok(out)
    }

    /// `self + s * other`.
    pub fn axpy(&self, s: f64, other: &SymTensorField) -> Result<Self> {
        self.grid.check_same(&other.grid, "axpy")?;
        let values = par::map_indices(self.values.len(), |i| self.values[i] + s * other.values[i]);
        Ok(Self::from_raw(self.grid.clone(), values))
    }

    pub fn scaled(&self, s: f64) -> Self {
        Self::from_raw(
            self.grid.clone(),
            self.values.iter().map(|v| v * s).collect(),
        )
    }

    /// Multiplies the tensor at each node by the scalar field value there.
    pub fn scaled_by(&self, factor: &ScalarField) -> Result<Self> {
        self.grid.check_same(factor.grid(), "scaled_by")?;
        let w = self.width();
        let values = par::map_indices(self.values.len(), |i| self.values[i] * factor.at(i / w));
        Ok(Self::from_raw(self.grid.clone(), values))
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn max_abs_diff(&self, other: &SymTensorField) -> Result<f64> {
        self.grid.check_same(&other.grid, "max_abs_diff")?;
        Ok(self
            .values
            .iter()
            .zip(&other.values)
            .fold(0.0, |m, (a, b)| m.max((a - b).abs())))
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }
}

/// Connection coefficients `Γ^k_ij`, `dim³` values per node laid out `[k][i][j]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Christoffel3Field {
    grid: GridSpec,
    values: Vec<f64>,
}

impl Christoffel3Field {
    pub(crate) fn from_raw(grid: GridSpec, values: Vec<f64>) -> Self {
        let d = grid.dim();
        debug_assert_eq!(values.len(), grid.len() * d * d * d);
        Self { grid, values }
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn dim(&self) -> usize {
        self.grid.dim()
    }

    pub fn width(&self) -> usize {
        let d = self.dim();
        d * d * d
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    #[inline]
    pub fn node(&self, node: usize) -> &[f64] {
        let w = self.width();
        &self.values[node * w..(node + 1) * w]
    }

    /// `Γ^k_ij` at `node`.
    #[inline]
    pub fn get(&self, node: usize, k: usize, i: usize, j: usize) -> f64 {
        let d = self.dim();
        self.values[node * d * d * d + (k * d + i) * d + j]
    }

    /// `max |Γ^k_ij - Γ^k_ji|` over the field.
    pub fn max_asymmetry(&self) -> f64 {
        let d = self.dim();
        let mut m: f64 = 0.0;
        for node in 0..self.grid.len() {
            for k in 0..d {
                for i in 0..d {
                    for j in i + 1..d {
                        m = m.max((self.get(node, k, i, j) - self.get(node, k, j, i)).abs());
                    }
                }
            }
        }
        m
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn packed_index_enumerates_upper_triangle() {
        for d in 1..7 {
            let mut seen = vec![false; sym_len(d)];
            let mut expect = 0;
            for i in 0..d {
                for j in i..d {
                    let k = sym_index(d, i, j);
                    assert_eq!(k, expect, "d={d} i={i} j={j}");
                    assert_eq!(k, sym_index(d, j, i));
                    seen[k] = true;
                    expect += 1;
                }
            }
            assert!(seen.into_iter().all(|s| s));
        }
    }

    #[test]
    fn rejects_non_finite_values() {
        let g = GridSpec::cube(1, 8, 1.0).unwrap();
        let mut v = vec![0.0; 8];
        v[5] = f64::NAN;
        assert_eq!(
            ScalarField::new(g.clone(), v).unwrap_err(),
            Error::NonFinite { node: 5 }
        );
        assert!(ScalarField::new(g, vec![0.0; 7]).is_err());
    }

    #[test]
    fn components_round_trip() {
        let g = GridSpec::cube(2, 8, 1.0).unwrap();
        let t = SymTensorField::from_fn(&g, |x, s| {
            s[0] = 1.0 + x[0];
            s[1] = x[1];
            s[2] = 2.0;
        });
        let comps: Vec<_> = (0..2)
            .flat_map(|i| (i..2).map(move |j| (i, j)))
            .map(|(i, j)| t.component(i, j))
            .collect();
        assert_eq!(SymTensorField::from_components(&comps).unwrap(), t);
        assert_eq!(t.get(9, 1, 0), t.get(9, 0, 1));
    }
}
