//! Closed form against the generic oracle, component family by family.

use super::closed_form::{ClosedForm, Formula};
use super::product::ProductGeometry;
use crate::convergence::{verdict, OrderVerdict};
use crate::geometry::{curvature_at, MetricSource};
use crate::grid::{sym_index, sym_len, StencilOrder};
use crate::{par, Error, Result};

/// Errors at or below this level count as agreement to roundoff.
pub const EXACT_FLOOR: f64 = 1e-10;

/// A group of closed-form components checked together.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Family {
    /// `Γ̃^k_ij`.
    ChristoffelMmm,
    /// `Γ̃^α_ij` and `Γ̃^k_iα`, which vanish.
    ChristoffelMixedZero,
    /// `Γ̃^k_αβ`.
    ChristoffelMnn,
    /// `Γ̃^γ_iβ`.
    ChristoffelNmn,
    /// `Γ̃^γ_αβ`.
    ChristoffelNnn,
    RicciM,
    RicciN,
    /// `R̃_iα`, which vanishes.
    RicciMixedZero,
    RicciMSimplified,
    RicciNSimplified,
    ScalarGeneral,
    ScalarSimplified,
}

impl Family {
    pub const ALL: [Family; 12] = [
        Family::ChristoffelMmm,
        Family::ChristoffelMixedZero,
        Family::ChristoffelMnn,
        Family::ChristoffelNmn,
        Family::ChristoffelNnn,
        Family::RicciM,
        Family::RicciN,
        Family::RicciMixedZero,
        Family::RicciMSimplified,
        Family::RicciNSimplified,
        Family::ScalarGeneral,
        Family::ScalarSimplified,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Family::ChristoffelMmm => "christoffel_mmm",
            Family::ChristoffelMixedZero => "christoffel_mixed_zero",
            Family::ChristoffelMnn => "christoffel_mnn",
            Family::ChristoffelNmn => "christoffel_nmn",
            Family::ChristoffelNnn => "christoffel_nnn",
            Family::RicciM => "ricci_m",
            Family::RicciN => "ricci_n",
            Family::RicciMixedZero => "ricci_mixed_zero",
            Family::RicciMSimplified => "ricci_m_simplified",
            Family::RicciNSimplified => "ricci_n_simplified",
            Family::ScalarGeneral => "scalar_general",
            Family::ScalarSimplified => "scalar_simplified",
        }
    }

    /// Whether the family is checked only for constants on both constraints.
    pub fn needs_ansatz(self) -> bool {
        matches!(
            self,
            Family::RicciMSimplified | Family::RicciNSimplified | Family::ScalarSimplified
        )
    }

    fn christoffel(m: usize, c: usize, a: usize, b: usize) -> Family {
        match (c < m, a < m, b < m) {
            (true, true, true) => Family::ChristoffelMmm,
            (true, false, false) => Family::ChristoffelMnn,
            (false, false, false) => Family::ChristoffelNnn,
            (false, true, false) | (false, false, true) => Family::ChristoffelNmn,
            _ => Family::ChristoffelMixedZero,
        }
    }

    fn ricci(m: usize, a: usize, b: usize, simplified: bool) -> Family {
        match (a < m, b < m, simplified) {
            (true, true, false) => Family::RicciM,
            (false, false, false) => Family::RicciN,
            (true, true, true) => Family::RicciMSimplified,
            (false, false, true) => Family::RicciNSimplified,
            _ => Family::RicciMixedZero,
        }
    }
}

/// Product nodes whose coordinates are multiples of `stride` on every axis.
pub fn sample_nodes(pg: &ProductGeometry, stride: usize) -> Result<Vec<usize>> {
    let grid = pg.grid();
    if stride == 0 || grid.points().iter().any(|&p| p % stride != 0) {
        return Err(Error::InvalidArgument(format!(
            "sampling stride {stride} does not divide grid {:?}",
            grid.points()
        )));
    }
    let coarse: Vec<usize> = grid.points().iter().map(|p| p / stride).collect();
    let count: usize = coarse.iter().product();
    let mut nodes = Vec::with_capacity(count);
    let mut idx = vec![0usize; coarse.len()];
    for _ in 0..count {
        let coords: Vec<usize> = idx.iter().map(|i| i * stride).collect();
        nodes.push(grid.node_index(&coords));
        for a in (0..idx.len()).rev() {
            idx[a] += 1;
            if idx[a] < coarse[a] {
                break;
            }
            idx[a] = 0;
        }
    }
    Ok(nodes)
}

/// Maximum closed-form vs oracle discrepancy per family over the sample nodes.
/// Families needing the simplified formulas are omitted when the constants do
/// not satisfy both constraints.
pub fn closed_form_errors(
    pg: &ProductGeometry,
    order: StencilOrder,
    stride: usize,
) -> Result<Vec<(Family, f64)>> {
    let view = pg.metric();
    view.validate()?;
    let cf = ClosedForm::new(pg, order)?;
    let simplified = cf.ricci_m_block(Formula::Ansatz).is_ok();
    let nodes = sample_nodes(pg, stride)?;
    let m = pg.constants().m();
    let d = pg.grid().dim();
    let nf = Family::ALL.len();
    let per_node = par::map_indices(nodes.len(), |s| -> Result<Vec<f64>> {
        let p = nodes[s];
        let oracle = curvature_at(&view, p, order)?;
        let mut err = vec![0.0f64; nf];
        let mut bump = |fam: Family, e: f64| {
            let slot = &mut err[fam as usize];
            *slot = if e.is_nan() { f64::NAN } else { slot.max(e) };
        };
        let mut gamma = vec![0.0; d * d * d];
        cf.christoffel_at(p, &mut gamma);
        for c in 0..d {
            for a in 0..d {
                for b in 0..d {
                    let k = (c * d + a) * d + b;
                    bump(Family::christoffel(m, c, a, b), (gamma[k] - oracle.christoffel[k]).abs());
                }
            }
        }
        let mut ric = vec![0.0; sym_len(d)];
        let mut formulas = vec![(Formula::General, false, Family::ScalarGeneral)];
        if simplified {
            formulas.push((Formula::Ansatz, true, Family::ScalarSimplified));
        }
        for (formula, simp, scalar_family) in formulas {
            cf.ricci_at(formula, p, &mut ric)?;
            for a in 0..d {
                for b in a..d {
                    let k = sym_index(d, a, b);
                    bump(Family::ricci(m, a, b, simp), (ric[k] - oracle.ricci[k]).abs());
                }
            }
            bump(scalar_family, (cf.scalar_at(formula, p)? - oracle.scalar).abs());
        }
        Ok(err)
    });
    let mut total = vec![0.0f64; nf];
    for node_err in per_node {
        for (t, e) in total.iter_mut().zip(node_err?) {
            *t = if e.is_nan() { f64::NAN } else { t.max(e) };
        }
    }
    Ok(Family::ALL
        .iter()
        .filter(|f| simplified || !f.needs_ansatz())
        .map(|&f| (f, total[f as usize]))
        .collect())
}

/// Errors of one family across a refinement sequence.
#[derive(Debug, Clone, PartialEq)]
pub struct FamilyStudy {
    pub family: Family,
    pub errors: Vec<f64>,
    pub verdict: OrderVerdict,
}

/// Refinement study of every family.
#[derive(Debug, Clone, PartialEq)]
pub struct CurvatureStudy {
    pub resolutions: Vec<usize>,
    pub spacings: Vec<f64>,
    pub families: Vec<FamilyStudy>,
}

impl CurvatureStudy {
    pub fn passes(&self, min_order: f64) -> bool {
        self.families.iter().all(|f| f.verdict.passes(min_order))
    }

    /// Largest error at the finest resolution over all families.
    pub fn finest_max_error(&self) -> f64 {
        self.families
            .iter()
            .map(|f| *f.errors.last().unwrap())
            .fold(0.0, f64::max)
    }
}

/// Runs [`closed_form_errors`] at each resolution, comparing on the lattice of
/// the coarsest grid so every resolution is sampled at the same points.
/// Each resolution must be twice the previous one.
pub fn curvature_study<F>(
    resolutions: &[usize],
    order: StencilOrder,
    build: F,
) -> Result<CurvatureStudy>
where
    F: Fn(usize) -> Result<ProductGeometry>,
{
    if resolutions.len() < 2 || resolutions.windows(2).any(|w| w[1] != 2 * w[0]) {
        return Err(Error::InvalidArgument(format!(
            "resolutions {resolutions:?} must double at each step"
        )));
    }
    let mut spacings = Vec::new();
    let mut table: Vec<Vec<(Family, f64)>> = Vec::new();
    for &r in resolutions {
        let pg = build(r)?;
        spacings.push(pg.grid().max_spacing());
        table.push(closed_form_errors(&pg, order, r / resolutions[0])?);
    }
    let families = table[0]
        .iter()
        .enumerate()
        .map(|(i, &(family, _))| {
            let errors: Vec<f64> = table.iter().map(|row| row[i].1).collect();
            FamilyStudy {
                family,
                verdict: verdict(&errors, 2.0, EXACT_FLOOR),
                errors,
            }
        })
        .collect();
    Ok(CurvatureStudy {
        resolutions: resolutions.to_vec(),
        spacings,
        families,
    })
}
