use super::linalg::{spd_determinant, spd_inverse, MAX_DIM};
use super::{christoffel, MetricSource};
use crate::grid::{
    partial_derivative, sym_index, sym_len, Christoffel3Field, ScalarField, StencilOrder,
    SymTensorField,
};
use crate::par;
use crate::{Error, Result};

const SYM_MAX: usize = MAX_DIM * (MAX_DIM + 1) / 2;

/// Node-wise inverse `g^{ij}`, packed.
pub fn inverse_metric(g: &SymTensorField) -> Result<SymTensorField> {
    g.validate()?;
    let d = g.dim();
    let mut out = SymTensorField::zeros(g.grid());
    par::fill_nodes(out.values_mut(), sym_len(d), |node, s| {
        let mut inv = [0.0; MAX_DIM * MAX_DIM];
        spd_inverse(d, g.node(node), &mut inv).expect("validated metric");
        for i in 0..d {
            for j in i..d {
                s[sym_index(d, i, j)] = inv[i * d + j];
            }
        }
    });
    Ok(out)
}

/// `√det g` at one node.
pub fn volume_density_at<M: MetricSource + ?Sized>(g: &M, node: usize) -> Result<f64> {
    let d = g.grid().dim();
    let mut m = [0.0; SYM_MAX];
    g.metric_at(node, &mut m[..sym_len(d)]);
    let det = spd_determinant(d, &m[..sym_len(d)]).ok_or(Error::DegenerateMetric {
        node,
        min_eigenvalue: f64::NAN,
        condition: f64::INFINITY,
    })?;
    Ok(det.sqrt())
}

/// Riemannian volume density `√det g` per node.
pub fn volume_density<M: MetricSource + ?Sized>(g: &M) -> Result<ScalarField> {
    g.validate()?;
    let grid = g.grid();
    let mut values = vec![0.0; grid.len()];
    par::try_fill_nodes(&mut values, 1, |node, s| {
        s[0] = volume_density_at(g, node)?;
        Ok::<(), Error>(())
    })?;
    Ok(ScalarField::from_raw(grid.clone(), values))
}

/// Coordinate gradient `(∂_1 f, …, ∂_d f)`.
pub fn gradient(f: &ScalarField, order: StencilOrder) -> Result<Vec<ScalarField>> {
    (0..f.grid().dim())
        .map(|a| partial_derivative(f, a, order))
        .collect()
}

fn check_grid(f: &ScalarField, g: &SymTensorField, what: &str) -> Result<()> {
    f.grid().check_same(g.grid(), what)
}

/// `|∇f|²_g = g^{ij} ∂_i f ∂_j f`.
pub fn grad_norm_sq(f: &ScalarField, g: &SymTensorField, order: StencilOrder) -> Result<ScalarField> {
    check_grid(f, g, "grad_norm_sq")?;
    let ginv = inverse_metric(g)?;
    let df = gradient(f, order)?;
    let d = g.dim();
    let values = par::map_indices(f.grid().len(), |n| {
        let mut s = 0.0;
        for i in 0..d {
            for j in 0..d {
                s += ginv.get(n, i, j) * df[i].at(n) * df[j].at(n);
            }
        }
        s
    });
    Ok(ScalarField::from_raw(f.grid().clone(), values))
}

/// `df ⊗ df`.
pub fn df_outer_df(f: &ScalarField, order: StencilOrder) -> Result<SymTensorField> {
    let df = gradient(f, order)?;
    let d = f.grid().dim();
    let mut out = SymTensorField::zeros(f.grid());
    par::fill_nodes(out.values_mut(), sym_len(d), |n, s| {
        for i in 0..d {
            for j in i..d {
                s[sym_index(d, i, j)] = df[i].at(n) * df[j].at(n);
            }
        }
    });
    Ok(out)
}

/// Covariant Hessian `∇²_jl f = ∂_j ∂_l f − Γ^k_jl ∂_k f`, with `∂_j ∂_l` the
/// composition of first-derivative stencils.
pub fn hessian(
    f: &ScalarField,
    gamma: &Christoffel3Field,
    order: StencilOrder,
) -> Result<SymTensorField> {
    f.grid().check_same(gamma.grid(), "hessian")?;
    let d = f.grid().dim();
    let df = gradient(f, order)?;
    let mut second = Vec::with_capacity(sym_len(d));
    for j in 0..d {
        for dl in &df[j..] {
            second.push(partial_derivative(dl, j, order)?);
        }
    }
    let mut out = SymTensorField::zeros(f.grid());
    par::fill_nodes(out.values_mut(), sym_len(d), |n, s| {
        for j in 0..d {
            for l in j..d {
                let k_idx = sym_index(d, j, l);
                let corr: f64 = (0..d).map(|k| gamma.get(n, k, j, l) * df[k].at(n)).sum();
                s[k_idx] = second[k_idx].at(n) - corr;
            }
        }
    });
    Ok(out)
}

/// `g^{ij} t_ij`.
pub fn trace(t: &SymTensorField, g: &SymTensorField) -> Result<ScalarField> {
    t.grid().check_same(g.grid(), "trace")?;
    let ginv = inverse_metric(g)?;
    let d = g.dim();
    let values = par::map_indices(g.grid().len(), |n| {
        let mut s = 0.0;
        for i in 0..d {
            for j in 0..d {
                s += ginv.get(n, i, j) * t.get(n, i, j);
            }
        }
        s
    });
    Ok(ScalarField::from_raw(g.grid().clone(), values))
}

/// Laplacian as the trace of the covariant Hessian. Agrees with
/// [`laplace_beltrami`] to truncation order; used where a pointwise identity
/// with `tr_g ∇²f` must hold exactly.
pub fn hessian_trace(f: &ScalarField, g: &SymTensorField, order: StencilOrder) -> Result<ScalarField> {
    check_grid(f, g, "hessian_trace")?;
    let gamma = christoffel(g, order)?;
    trace(&hessian(f, &gamma, order)?, g)
}

/// Laplace–Beltrami operator in divergence form,
/// `Δf = (1/√g) ∂_i (√g g^{ij} ∂_j f)`.
///
/// With central differences on a periodic grid this satisfies the discrete
/// integration-by-parts identity
/// `Σ (Δu) v √g = −Σ g^{ij} ∂_i u ∂_j v √g` up to roundoff.
pub fn laplace_beltrami(f: &ScalarField, g: &SymTensorField, order: StencilOrder) -> Result<ScalarField> {
    check_grid(f, g, "laplace_beltrami")?;
    let ginv = inverse_metric(g)?;
    let vol = volume_density(g)?;
    let df = gradient(f, order)?;
    let d = g.dim();
    let grid = f.grid();
    let mut div = ScalarField::zeros(grid);
    for i in 0..d {
        let flux = par::map_indices(grid.len(), |n| {
            let s: f64 = (0..d).map(|j| ginv.get(n, i, j) * df[j].at(n)).sum();
            vol.at(n) * s
        });
        let flux = ScalarField::from_raw(grid.clone(), flux);
        let dflux = partial_derivative(&flux, i, order)?;
        div = div.zip_with(&dflux, |a, b| a + b)?;
    }
    div.zip_with(&vol, |a, v| a / v)
}

/// Full metric contraction `g^{ik} g^{jl} t_ij s_kl` per node.
pub fn contract(t: &SymTensorField, s: &SymTensorField, g: &SymTensorField) -> Result<ScalarField> {
    t.grid().check_same(g.grid(), "contract")?;
    s.grid().check_same(g.grid(), "contract")?;
    let ginv = inverse_metric(g)?;
    let d = g.dim();
    let values = par::map_indices(g.grid().len(), |n| {
        // tr(G^-1 T G^-1 S)
        let mut a = [0.0; MAX_DIM * MAX_DIM];
        let mut b = [0.0; MAX_DIM * MAX_DIM];
        for i in 0..d {
            for j in 0..d {
                let mut x = 0.0;
                let mut y = 0.0;
                for k in 0..d {
                    x += ginv.get(n, i, k) * t.get(n, k, j);
                    y += ginv.get(n, i, k) * s.get(n, k, j);
                }
                a[i * d + j] = x;
                b[i * d + j] = y;
            }
        }
        let mut tr = 0.0;
        for i in 0..d {
            for j in 0..d {
                tr += a[i * d + j] * b[j * d + i];
            }
        }
        tr
    });
    Ok(ScalarField::from_raw(g.grid().clone(), values))
}

/// `|t|²_g = g^{ik} g^{jl} t_ij t_kl`.
pub fn norm_sq(t: &SymTensorField, g: &SymTensorField) -> Result<ScalarField> {
    contract(t, t, g)
}
