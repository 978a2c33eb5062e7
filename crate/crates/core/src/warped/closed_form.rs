//! Closed-form connection and curvature of the warped product.
//!
//! Everything is assembled from `M`-grid and `N`-grid quantities; the product
//! grid is only ever visited one node at a time.

use super::product::{check_size, ProductGeometry};
use super::ConstraintLevel;
use crate::geometry::{
    curvature, grad_norm_sq, gradient, hessian, inverse_metric, laplace_beltrami,
    CurvatureBundle, SourceTag,
};
use crate::grid::{
    sym_index, sym_len, Christoffel3Field, ScalarField, StencilOrder, SymTensorField,
};
use crate::{par, Error, Result};

/// Which Ricci formula to evaluate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Formula {
    /// Valid for arbitrary `(A, B)`.
    General,
    /// The simplified form that assumes both constraints on `(A, B)`.
    Ansatz,
}

struct MBlock {
    ricci: SymTensorField,
    /// `Δf − K|∇f|²`, or `Δf − |∇f|²` for the ansatz.
    bracket: ScalarField,
    /// `e^{Af}`-weighted `M` part of the scalar curvature.
    scalar: ScalarField,
}

/// Precomputed constituent data for evaluating the closed forms at any
/// product node.
pub struct ClosedForm<'a> {
    pg: &'a ProductGeometry,
    order: StencilOrder,
    gamma_m: Christoffel3Field,
    gamma_n: Christoffel3Field,
    ricci_n: SymTensorField,
    scalar_n: ScalarField,
    /// `∂_i f`, node-major.
    df: Vec<f64>,
    /// `g^{kl} ∂_l f`, node-major.
    df_up: Vec<f64>,
    /// `(B/2) e^{(A−B)f}`.
    n_coef: Vec<f64>,
    /// `e^{Bf}`.
    e_bf: Vec<f64>,
    general: MBlock,
    ansatz: Option<MBlock>,
}

impl<'a> ClosedForm<'a> {
    pub fn new(pg: &'a ProductGeometry, order: StencilOrder) -> Result<Self> {
        let (g, h, f) = (pg.g(), pg.h(), pg.f());
        let c = *pg.constants();
        let (m, n) = (c.m(), c.n());
        let (a, b) = (c.a(), c.b());
        let cm = curvature(g, order)?;
        let cn = curvature(h, order)?;
        let grads = gradient(f, order)?;
        let hess = hessian(f, &cm.christoffel, order)?;
        let lap = laplace_beltrami(f, g, order)?;
        let grad2 = grad_norm_sq(f, g, order)?;
        let ginv = inverse_metric(g)?;
        let lm = g.grid().len();

        let mut df = vec![0.0; lm * m];
        let mut df_up = vec![0.0; lm * m];
        for x in 0..lm {
            for i in 0..m {
                df[x * m + i] = grads[i].at(x);
            }
            for k in 0..m {
                df_up[x * m + k] = (0..m).map(|l| ginv.get(x, k, l) * grads[l].at(x)).sum();
            }
        }
        let n_coef = f.values().iter().map(|v| 0.5 * b * ((a - b) * v).exp()).collect();
        let e_bf = f.values().iter().map(|v| (b * v).exp()).collect();

        let (mf, nf) = (m as f64, n as f64);
        let block = |k: f64, c1: f64, lap_coef: f64, grad_coef: f64| -> MBlock {
            let mut ricci = SymTensorField::zeros(g.grid());
            par::fill_nodes(ricci.values_mut(), sym_len(m), |x, out| {
                let br = lap.at(x) - k * grad2.at(x);
                for j in 0..m {
                    for l in j..m {
                        out[sym_index(m, j, l)] = cm.ricci.get(x, j, l)
                            + k * hess.get(x, j, l)
                            + 0.5 * a * g.get(x, j, l) * br
                            + 0.25 * c1 * df[x * m + j] * df[x * m + l];
                    }
                }
            });
            let bracket = lap.zip_with(&grad2, |l, q| l - k * q).expect("same grid");
            let scalar = ScalarField::from_nodes(g.grid(), |x| {
                (a * f.at(x)).exp()
                    * (cm.scalar.at(x) + lap_coef * lap.at(x) + grad_coef * grad2.at(x))
            });
            MBlock {
                ricci,
                bracket,
                scalar,
            }
        };
        let poly = 4.0 * a * b * nf - 2.0 * a * b * mf * nf + 3.0 * mf * a * a
            - 2.0 * a * a
            - mf * mf * a * a
            - b * b * nf
            - b * b * nf * nf;
        let general = block(c.k_factor(), c.c1_residual(), a * mf + b * nf - a, 0.25 * poly);
        let ansatz = (c.level() == ConstraintLevel::Perelman)
            .then(|| block(1.0, 0.0, a + 2.0, -(a + 1.0)));

        Ok(Self {
            pg,
            order,
            gamma_m: cm.christoffel,
            gamma_n: cn.christoffel,
            ricci_n: cn.ricci,
            scalar_n: cn.scalar,
            df,
            df_up,
            n_coef,
            e_bf,
            general,
            ansatz,
        })
    }

    pub fn geometry(&self) -> &ProductGeometry {
        self.pg
    }

    pub fn order(&self) -> StencilOrder {
        self.order
    }

    /// Scalar curvature of `h` on the `N` grid.
    pub fn scalar_n(&self) -> &ScalarField {
        &self.scalar_n
    }

    fn block(&self, formula: Formula) -> Result<&MBlock> {
        match formula {
            Formula::General => Ok(&self.general),
            Formula::Ansatz => self.ansatz.as_ref().ok_or_else(|| {
                let c = self.pg.constants();
                Error::Constants(format!(
                    "simplified formulas need both constraints; residuals C1 = {:e}, C2 = {:e}",
                    c.c1_residual(),
                    c.c2_residual()
                ))
            }),
        }
    }

    /// `Γ̃^c_ab` at product node `p`, written `[c][a][b]` into `out[..(m+n)³]`.
    pub fn christoffel_at(&self, p: usize, out: &mut [f64]) {
        let (x, y) = self.pg.split(p);
        let c = self.pg.constants();
        let (m, n) = (c.m(), c.n());
        let d = m + n;
        let (a, b) = (c.a(), c.b());
        let df = &self.df[x * m..(x + 1) * m];
        let up = &self.df_up[x * m..(x + 1) * m];
        let g = self.pg.g();
        let h = self.pg.h();
        let e_ab = (2.0 / b) * self.n_coef[x];
        let at = |k: usize, i: usize, j: usize| (k * d + i) * d + j;
        out[..d * d * d].fill(0.0);
        for k in 0..m {
            for i in 0..m {
                for j in 0..m {
                    let dk_j = if k == j { df[i] } else { 0.0 };
                    let dk_i = if k == i { df[j] } else { 0.0 };
                    out[at(k, i, j)] = self.gamma_m.get(x, k, i, j)
                        - 0.5 * a * (dk_j + dk_i - up[k] * g.get(x, i, j));
                }
            }
            for al in 0..n {
                for be in 0..n {
                    out[at(k, m + al, m + be)] = 0.5 * b * e_ab * up[k] * h.get(y, al, be);
                }
            }
        }
        for ga in 0..n {
            for i in 0..m {
                let v = -0.5 * b * df[i];
                out[at(m + ga, i, m + ga)] = v;
                out[at(m + ga, m + ga, i)] = v;
            }
            for al in 0..n {
                for be in 0..n {
                    out[at(m + ga, m + al, m + be)] = self.gamma_n.get(y, ga, al, be);
                }
            }
        }
    }

    /// Packed `R̃_ab` at product node `p`; the mixed block is identically zero.
    pub fn ricci_at(&self, formula: Formula, p: usize, out: &mut [f64]) -> Result<()> {
        let blk = self.block(formula)?;
        let (x, y) = self.pg.split(p);
        let (m, n) = (self.pg.g().dim(), self.pg.h().dim());
        let d = m + n;
        out[..sym_len(d)].fill(0.0);
        for j in 0..m {
            for l in j..m {
                out[sym_index(d, j, l)] = blk.ricci.get(x, j, l);
            }
        }
        let s = self.n_coef[x] * blk.bracket.at(x);
        for be in 0..n {
            for ga in be..n {
                out[sym_index(d, m + be, m + ga)] =
                    self.ricci_n.get(y, be, ga) + s * self.pg.h().get(y, be, ga);
            }
        }
        Ok(())
    }

    /// `R̃` at product node `p`.
    pub fn scalar_at(&self, formula: Formula, p: usize) -> Result<f64> {
        let blk = self.block(formula)?;
        let (x, y) = self.pg.split(p);
        Ok(blk.scalar.at(x) + self.e_bf[x] * self.scalar_n.at(y))
    }

    /// `M` block of `R̃`, which depends on the `M` node only.
    pub fn ricci_m_block(&self, formula: Formula) -> Result<&SymTensorField> {
        Ok(&self.block(formula)?.ricci)
    }

    fn bundle(&self, formula: Formula) -> Result<CurvatureBundle> {
        self.block(formula)?;
        let grid = self.pg.grid();
        let d = grid.dim();
        check_size(grid.len() * (d * d * d + sym_len(d) + 1))?;
        let christoffel = christoffel_field(self)?;
        let mut ricci = vec![0.0; grid.len() * sym_len(d)];
        par::try_fill_nodes(&mut ricci, sym_len(d), |p, out| self.ricci_at(formula, p, out))?;
        let scalar = par::map_indices(grid.len(), |p| {
            self.scalar_at(formula, p).expect("formula checked above")
        });
        Ok(CurvatureBundle {
            christoffel,
            ricci: SymTensorField::new(grid.clone(), ricci)?,
            scalar: ScalarField::new(grid.clone(), scalar)?,
            source: match formula {
                Formula::General => SourceTag::ClosedFormGeneral,
                Formula::Ansatz => SourceTag::ClosedFormAnsatz,
            },
            max_asymmetry: 0.0,
        })
    }
}

fn christoffel_field(cf: &ClosedForm<'_>) -> Result<Christoffel3Field> {
    let grid = cf.pg.grid();
    let d = grid.dim();
    check_size(grid.len() * d * d * d)?;
    let mut values = vec![0.0; grid.len() * d * d * d];
    par::fill_nodes(&mut values, d * d * d, |p, out| cf.christoffel_at(p, out));
    if let Some(node) = values.iter().position(|v| !v.is_finite()) {
        return Err(Error::NonFinite { node: node / (d * d * d) });
    }
    Ok(Christoffel3Field::from_raw(grid.clone(), values))
}

/// Closed-form `Γ̃` on the whole product grid.
pub fn christoffel_closed_form(pg: &ProductGeometry, order: StencilOrder) -> Result<Christoffel3Field> {
    christoffel_field(&ClosedForm::new(pg, order)?)
}

/// Curvature of `g̃` from the formulas valid for arbitrary `(A, B)`.
pub fn ricci_closed_general(pg: &ProductGeometry, order: StencilOrder) -> Result<CurvatureBundle> {
    ClosedForm::new(pg, order)?.bundle(Formula::General)
}

/// Curvature of `g̃` from the simplified formulas; refuses constants that do
/// not satisfy both constraints.
pub fn ricci_closed_ansatz(pg: &ProductGeometry, order: StencilOrder) -> Result<CurvatureBundle> {
    if pg.constants().level() != ConstraintLevel::Perelman {
        let c = pg.constants();
        return Err(Error::Constants(format!(
            "simplified formulas need both constraints; residuals C1 = {:e}, C2 = {:e}",
            c.c1_residual(),
            c.c2_residual()
        )));
    }
    ClosedForm::new(pg, order)?.bundle(Formula::Ansatz)
}
