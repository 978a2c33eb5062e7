use super::linalg::{spd_diagnostics, spd_inverse, MAX_DIM};
use super::MetricSource;
use crate::grid::{sym_index, sym_len, Christoffel3Field, ScalarField, StencilOrder, SymTensorField};
use crate::par;
use crate::{Error, Result};

const SYM_MAX: usize = MAX_DIM * (MAX_DIM + 1) / 2;
const CUBE_MAX: usize = MAX_DIM * MAX_DIM * MAX_DIM;

/// Which computation produced a [`CurvatureBundle`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SourceTag {
    GenericOracle,
    ClosedFormGeneral,
    ClosedFormAnsatz,
}

/// Christoffel symbols, symmetrized Ricci tensor and scalar curvature on one grid.
#[derive(Debug, Clone)]
pub struct CurvatureBundle {
    pub christoffel: Christoffel3Field,
    pub ricci: SymTensorField,
    pub scalar: ScalarField,
    pub source: SourceTag,
    /// `max |R_bd − R_db|` before symmetrization (zero for closed forms).
    pub max_asymmetry: f64,
}

impl CurvatureBundle {
    /// Diagnostic level for the pre-symmetrization asymmetry:
    /// `10 h² · max(1, max|R|)`.
    pub fn asymmetry_threshold(&self) -> f64 {
        let h = self.ricci.grid().max_spacing();
        10.0 * h * h * self.ricci.max_abs().max(1.0)
    }

    pub fn asymmetry_flagged(&self) -> bool {
        self.max_asymmetry > self.asymmetry_threshold()
    }
}

/// Curvature data at a single node, computed without materializing any field.
#[derive(Debug, Clone, PartialEq)]
pub struct NodeCurvature {
    /// `Γ^k_ij` laid out `[k][i][j]`.
    pub christoffel: Vec<f64>,
    /// Packed symmetrized Ricci tensor.
    pub ricci: Vec<f64>,
    pub scalar: f64,
    pub asymmetry: f64,
}

fn degenerate<M: MetricSource + ?Sized>(g: &M, node: usize) -> Error {
    let d = g.grid().dim();
    let mut packed = vec![0.0; sym_len(d)];
    g.metric_at(node, &mut packed);
    if packed.iter().any(|v| !v.is_finite()) {
        return Error::NonFinite { node };
    }
    let (min_eigenvalue, condition) = spd_diagnostics(d, &packed);
    Error::DegenerateMetric {
        node,
        min_eigenvalue,
        condition,
    }
}

fn check_dim(d: usize) -> Result<()> {
    if d > MAX_DIM {
        Err(Error::InvalidArgument(format!(
            "dimension {d} exceeds supported maximum {MAX_DIM}"
        )))
    } else {
        Ok(())
    }
}

/// `Γ^k_ij` at one node, written `[k][i][j]` into `out[..d³]`.
pub fn christoffel_at<M: MetricSource + ?Sized>(
    g: &M,
    node: usize,
    order: StencilOrder,
    out: &mut [f64],
) -> Result<()> {
    let grid = g.grid();
    let d = grid.dim();
    check_dim(d)?;
    let w = sym_len(d);
    let mut center = [0.0; SYM_MAX];
    g.metric_at(node, &mut center[..w]);
    let mut inv = [0.0; MAX_DIM * MAX_DIM];
    if spd_inverse(d, &center[..w], &mut inv).is_none() {
        return Err(degenerate(g, node));
    }
    let mut dg = [0.0; MAX_DIM * SYM_MAX];
    let mut nb = [0.0; SYM_MAX];
    for a in 0..d {
        let inv_h = 1.0 / grid.spacing(a);
        let row = &mut dg[a * w..(a + 1) * w];
        for &(o, wt) in order.weights() {
            g.metric_at(grid.shift(node, a, o), &mut nb[..w]);
            for (r, v) in row.iter_mut().zip(&nb[..w]) {
                *r += wt * v;
            }
        }
        for r in row.iter_mut() {
            *r *= inv_h;
        }
    }
    christoffel_from_derivatives(d, &inv, &dg, out);
    Ok(())
}

fn christoffel_from_derivatives(d: usize, inv: &[f64], dg: &[f64], out: &mut [f64]) {
    let w = sym_len(d);
    let mut low = [0.0; CUBE_MAX];
    for l in 0..d {
        for i in 0..d {
            for j in i..d {
                let v = 0.5
                    * (dg[i * w + sym_index(d, j, l)] + dg[j * w + sym_index(d, i, l)]
                        - dg[l * w + sym_index(d, i, j)]);
                low[(l * d + i) * d + j] = v;
                low[(l * d + j) * d + i] = v;
            }
        }
    }
    for k in 0..d {
        for i in 0..d {
            for j in i..d {
                let s: f64 = (0..d).map(|l| inv[k * d + l] * low[(l * d + i) * d + j]).sum();
                out[(k * d + i) * d + j] = s;
                out[(k * d + j) * d + i] = s;
            }
        }
    }
}

/// Ricci tensor at `node` from the connection at the node and at its stencil
/// neighbours. `neighbor(axis, slot)` returns `Γ` at the node shifted by the
/// `slot`-th offset of `order.weights()` along `axis`. Writes the packed
/// symmetrized tensor into `ricci` and returns `(scalar, asymmetry)`.
fn ricci_from_stencil<'a, F>(
    grid: &crate::grid::GridSpec,
    inv: &[f64],
    order: StencilOrder,
    center: &[f64],
    neighbor: F,
    ricci: &mut [f64],
) -> (f64, f64)
where
    F: Fn(usize, usize) -> &'a [f64],
{
    let d = grid.dim();
    let weights = order.weights();
    let at = |k: usize, i: usize, j: usize| (k * d + i) * d + j;
    let mut raw = [0.0; MAX_DIM * MAX_DIM];
    // ∂_a Γ^a_bd and ∂_b (Γ^a_ad)
    for a in 0..d {
        let inv_h = 1.0 / grid.spacing(a);
        for (slot, &(_, wt)) in weights.iter().enumerate() {
            let gam = neighbor(a, slot);
            let c = wt * inv_h;
            for b in 0..d {
                for e in 0..d {
                    raw[b * d + e] += c * gam[at(a, b, e)];
                }
            }
            // contraction at the neighbour, differentiated along axis a (= b)
            for e in 0..d {
                let contr: f64 = (0..d).map(|p| gam[at(p, p, e)]).sum();
                raw[a * d + e] -= c * contr;
            }
        }
    }
    let mut contr_c = [0.0; MAX_DIM];
    for (p, slot) in contr_c.iter_mut().enumerate().take(d) {
        *slot = (0..d).map(|a| center[at(a, a, p)]).sum();
    }
    for b in 0..d {
        for e in 0..d {
            let mut s = 0.0;
            for p in 0..d {
                s += center[at(p, b, e)] * contr_c[p];
                for a in 0..d {
                    s -= center[at(p, a, e)] * center[at(a, b, p)];
                }
            }
            raw[b * d + e] += s;
        }
    }
    let mut asym: f64 = 0.0;
    let mut scalar = 0.0;
    for b in 0..d {
        for e in b..d {
            let v = 0.5 * (raw[b * d + e] + raw[e * d + b]);
            asym = asym.max((raw[b * d + e] - raw[e * d + b]).abs());
            ricci[sym_index(d, b, e)] = v;
            scalar += if b == e { 1.0 } else { 2.0 } * inv[b * d + e] * v;
        }
    }
    (scalar, asym)
}

/// Christoffel symbols of a metric field.
pub fn christoffel<M: MetricSource + ?Sized>(
    g: &M,
    order: StencilOrder,
) -> Result<Christoffel3Field> {
    g.validate()?;
    let grid = g.grid();
    let d = grid.dim();
    let mut values = vec![0.0; grid.len() * d * d * d];
    par::try_fill_nodes(&mut values, d * d * d, |node, out| {
        christoffel_at(g, node, order, out)
    })?;
    Ok(Christoffel3Field::from_raw(grid.clone(), values))
}

/// Full generic curvature computation: connection, Ricci and scalar curvature.
pub fn curvature<M: MetricSource + ?Sized>(g: &M, order: StencilOrder) -> Result<CurvatureBundle> {
    let gamma = christoffel(g, order)?;
    let grid = g.grid();
    let d = grid.dim();
    let w = sym_len(d);
    let weights = order.weights();
    let mut packed = vec![0.0; grid.len() * (w + 2)];
    par::try_fill_nodes(&mut packed, w + 2, |node, out| {
        let mut m = [0.0; SYM_MAX];
        g.metric_at(node, &mut m[..w]);
        let mut inv = [0.0; MAX_DIM * MAX_DIM];
        spd_inverse(d, &m[..w], &mut inv).ok_or_else(|| degenerate(g, node))?;
        let (ric, rest) = out.split_at_mut(w);
        let (scalar, asym) = ricci_from_stencil(
            grid,
            &inv,
            order,
            gamma.node(node),
            |a, s| gamma.node(grid.shift(node, a, weights[s].0)),
            ric,
        );
        rest[0] = scalar;
        rest[1] = asym;
        Ok::<(), Error>(())
    })?;
    let mut ricci = Vec::with_capacity(grid.len() * w);
    let mut scalar = Vec::with_capacity(grid.len());
    let mut max_asymmetry: f64 = 0.0;
    for chunk in packed.chunks_exact(w + 2) {
        ricci.extend_from_slice(&chunk[..w]);
        scalar.push(chunk[w]);
        max_asymmetry = max_asymmetry.max(chunk[w + 1]);
    }
    let bundle = CurvatureBundle {
        christoffel: gamma,
        ricci: SymTensorField::from_raw(grid.clone(), ricci),
        scalar: ScalarField::from_raw(grid.clone(), scalar),
        source: SourceTag::GenericOracle,
        max_asymmetry,
    };
    if bundle.asymmetry_flagged() {
        log::warn!(
            "Ricci asymmetry {:e} above diagnostic threshold {:e}",
            bundle.max_asymmetry,
            bundle.asymmetry_threshold()
        );
    }
    Ok(bundle)
}

/// Symmetrized Ricci tensor of a metric field.
pub fn ricci<M: MetricSource + ?Sized>(g: &M, order: StencilOrder) -> Result<SymTensorField> {
    Ok(curvature(g, order)?.ricci)
}

/// Scalar curvature `g^{jl} R_jl`.
pub fn scalar_curvature<M: MetricSource + ?Sized>(
    g: &M,
    order: StencilOrder,
) -> Result<ScalarField> {
    Ok(curvature(g, order)?.scalar)
}

/// Curvature at one node, evaluating the connection on the fly at the stencil
/// neighbours. Bit-identical to the corresponding node of [`curvature`].
pub fn curvature_at<M: MetricSource + ?Sized>(
    g: &M,
    node: usize,
    order: StencilOrder,
) -> Result<NodeCurvature> {
    let grid = g.grid();
    let d = grid.dim();
    check_dim(d)?;
    let w = sym_len(d);
    let cube = d * d * d;
    let weights = order.weights();
    let mut center = vec![0.0; cube];
    christoffel_at(g, node, order, &mut center)?;
    let mut nbrs = vec![0.0; d * weights.len() * cube];
    for a in 0..d {
        for (s, &(o, _)) in weights.iter().enumerate() {
            let off = (a * weights.len() + s) * cube;
            christoffel_at(g, grid.shift(node, a, o), order, &mut nbrs[off..off + cube])?;
        }
    }
    let mut m = [0.0; SYM_MAX];
    g.metric_at(node, &mut m[..w]);
    let mut inv = [0.0; MAX_DIM * MAX_DIM];
    spd_inverse(d, &m[..w], &mut inv).ok_or_else(|| degenerate(g, node))?;
    let mut ricci = vec![0.0; w];
    let (scalar, asymmetry) = ricci_from_stencil(
        grid,
        &inv,
        order,
        &center,
        |a, s| {
            let off = (a * weights.len() + s) * cube;
            &nbrs[off..off + cube]
        },
        &mut ricci,
    );
    Ok(NodeCurvature {
        christoffel: center,
        ricci,
        scalar,
        asymmetry,
    })
}
