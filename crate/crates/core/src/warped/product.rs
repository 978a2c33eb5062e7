use super::WarpedConstants;
use crate::geometry::linalg::{spd_diagnostics, MAX_CONDITION};
use crate::geometry::{validate_metric, MetricSource};
use crate::grid::{sym_index, sym_len, GridSpec, ScalarField, SymTensorField};
use crate::{par, Error, Result};

/// Largest number of `f64` values a materialized product-grid field may hold.
pub const MAX_MATERIALIZED_VALUES: usize = 1 << 27;

/// The data `(g, h, f, A, B)` defining `g̃ = e^{−Af} g ⊕ e^{−Bf} h` on `M × N`.
///
/// Product nodes are numbered with the `M` axes first, so node
/// `p = x · |N| + y` for an `M` node `x` and an `N` node `y`.
#[derive(Debug, Clone)]
pub struct ProductGeometry {
    grid: GridSpec,
    g: SymTensorField,
    h: SymTensorField,
    f: ScalarField,
    constants: WarpedConstants,
}

impl ProductGeometry {
    pub fn new(
        g: SymTensorField,
        h: SymTensorField,
        f: ScalarField,
        constants: WarpedConstants,
    ) -> Result<Self> {
        if g.dim() != constants.m() || h.dim() != constants.n() {
            return Err(Error::GridMismatch(format!(
                "metrics of dimension ({}, {}) for constants with (m, n) = ({}, {})",
                g.dim(),
                h.dim(),
                constants.m(),
                constants.n()
            )));
        }
        g.grid().check_same(f.grid(), "dilaton and M-metric")?;
        if let Some(node) = f.values().iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite { node });
        }
        validate_metric(&g)?;
        validate_metric(&h)?;
        let grid = g.grid().product(h.grid());
        Ok(Self {
            grid,
            g,
            h,
            f,
            constants,
        })
    }

    /// Same `h`, new `(g, f)`.
    pub fn with_fields(&self, g: SymTensorField, f: ScalarField) -> Result<Self> {
        Self::new(g, self.h.clone(), f, self.constants)
    }

    pub fn with_constants(&self, constants: WarpedConstants) -> Result<Self> {
        Self::new(self.g.clone(), self.h.clone(), self.f.clone(), constants)
    }

    /// The `(m+n)`-dimensional product grid.
    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }
    pub fn grid_m(&self) -> &GridSpec {
        self.g.grid()
    }
    pub fn grid_n(&self) -> &GridSpec {
        self.h.grid()
    }
    pub fn g(&self) -> &SymTensorField {
        &self.g
    }
    pub fn h(&self) -> &SymTensorField {
        &self.h
    }
    pub fn f(&self) -> &ScalarField {
        &self.f
    }
    pub fn constants(&self) -> &WarpedConstants {
        &self.constants
    }

    /// `(x, y)` constituents of a product node.
    #[inline]
    pub fn split(&self, node: usize) -> (usize, usize) {
        let ln = self.h.grid().len();
        (node / ln, node % ln)
    }

    /// Lazy view of `g̃`; nothing of product-grid size is allocated.
    pub fn metric(&self) -> ProductMetric<'_> {
        let a = self.constants.a();
        let b = self.constants.b();
        ProductMetric {
            pg: self,
            warp_m: self.f.values().iter().map(|f| (-a * f).exp()).collect(),
            warp_n: self.f.values().iter().map(|f| (-b * f).exp()).collect(),
        }
    }

    /// `√det g̃ = e^{−(Am+Bn)f/2} √det g √det h` at a product node.
    pub fn volume_density_closed_at(&self, vol_g: &ScalarField, vol_h: &ScalarField, node: usize) -> f64 {
        let (x, y) = self.split(node);
        let c = &self.constants;
        let e = (c.a() * c.m() as f64 + c.b() * c.n() as f64) / 2.0;
        (-e * self.f.at(x)).exp() * vol_g.at(x) * vol_h.at(y)
    }
}

/// `g̃` evaluated on demand from the `M`- and `N`-grid fields.
pub struct ProductMetric<'a> {
    pg: &'a ProductGeometry,
    warp_m: Vec<f64>,
    warp_n: Vec<f64>,
}

impl MetricSource for ProductMetric<'_> {
    fn grid(&self) -> &GridSpec {
        &self.pg.grid
    }

    #[inline]
    fn metric_at(&self, node: usize, out: &mut [f64]) {
        let (x, y) = self.pg.split(node);
        let (m, n) = (self.pg.g.dim(), self.pg.h.dim());
        let d = m + n;
        out.fill(0.0);
        let gx = self.pg.g.node(x);
        for i in 0..m {
            for j in i..m {
                out[sym_index(d, i, j)] = self.warp_m[x] * gx[sym_index(m, i, j)];
            }
        }
        let hy = self.pg.h.node(y);
        for a in 0..n {
            for b in a..n {
                out[sym_index(d, m + a, m + b)] = self.warp_n[x] * hy[sym_index(n, a, b)];
            }
        }
    }

    /// The blocks are validated separately; the product is then positive
    /// definite and its worst condition number follows from the block spectra.
    fn validate(&self) -> Result<()> {
        let (g, h) = (&self.pg.g, &self.pg.h);
        let spectra = |t: &SymTensorField| -> Vec<(f64, f64)> {
            let d = t.dim();
            par::map_indices(t.grid().len(), |k| {
                let (lo, cond) = spd_diagnostics(d, t.node(k));
                (lo, lo * cond)
            })
        };
        let sn = spectra(h);
        let h_lo = sn.iter().map(|s| s.0).fold(f64::INFINITY, f64::min);
        let h_hi = sn.iter().map(|s| s.1).fold(0.0, f64::max);
        for (x, (g_lo, g_hi)) in spectra(g).into_iter().enumerate() {
            let (wa, wb) = (self.warp_m[x], self.warp_n[x]);
            if !(wa.is_finite() && wb.is_finite() && wa > 0.0 && wb > 0.0) {
                return Err(Error::NonFinite {
                    node: x * h.grid().len(),
                });
            }
            let lo = (wa * g_lo).min(wb * h_lo);
            let hi = (wa * g_hi).max(wb * h_hi);
            if hi / lo > MAX_CONDITION {
                return Err(Error::DegenerateMetric {
                    node: x * h.grid().len(),
                    min_eigenvalue: lo,
                    condition: hi / lo,
                });
            }
        }
        Ok(())
    }
}

pub(crate) fn check_size(values: usize) -> Result<()> {
    if values > MAX_MATERIALIZED_VALUES {
        Err(Error::TooLarge {
            values,
            limit: MAX_MATERIALIZED_VALUES,
        })
    } else {
        Ok(())
    }
}

/// Materializes `g̃` on the product grid.
pub fn assemble_product_metric(pg: &ProductGeometry) -> Result<SymTensorField> {
    let d = pg.grid.dim();
    let w = sym_len(d);
    check_size(pg.grid.len() * w)?;
    let view = pg.metric();
    let mut values = vec![0.0; pg.grid.len() * w];
    par::fill_nodes(&mut values, w, |node, out| view.metric_at(node, out));
    SymTensorField::new(pg.grid.clone(), values)
}
