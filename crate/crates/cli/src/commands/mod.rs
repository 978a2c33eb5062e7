//! One function per subcommand.

mod constants;
mod curvature;
mod flow;
mod identity;
mod variation;

pub use constants::constants;
pub use curvature::verify_curvature;
pub use flow::flow;
pub use identity::verify_identity;
pub use variation::verify_variation;

use crate::config::ProductConfig;
use crate::{CliError, Report};
use dilaton_core::functionals::unit_volume;
use dilaton_core::warped::{ProductGeometry, WarpedConstants};

/// Seed offsets per role; see the module docs of [`crate::config`].
pub(crate) const SEED_G: u64 = 0;
pub(crate) const SEED_H: u64 = 1;
pub(crate) const SEED_F: u64 = 2;
pub(crate) const SEED_DIRECTIONS: u64 = 3;

pub(crate) fn offset(seed: Option<u64>, k: u64) -> Option<u64> {
    seed.map(|s| s.wrapping_add(k))
}

pub(crate) fn build_product(
    p: &ProductConfig,
    constants: WarpedConstants,
    resolution: usize,
    seed: Option<u64>,
) -> Result<ProductGeometry, CliError> {
    let (gm, gn) = p.grids(resolution)?;
    let g = p.g.build(&gm, offset(seed, SEED_G))?;
    let mut h = p.h.build(&gn, offset(seed, SEED_H))?;
    if p.unit_volume_n {
        h = unit_volume(&h)?.0;
    }
    let f = p.f.build(&gm, offset(seed, SEED_F))?;
    Ok(ProductGeometry::new(g, h, f, constants)?)
}

pub(crate) fn describe_product(report: &mut Report, p: &ProductConfig, seed: Option<u64>) {
    if let Some(s) = seed {
        report.note(format!("seed: {s}"));
    }
    report.note(format!("dimensions: m={} n={}", p.m, p.n));
    report.note(format!("resolutions: {:?}", p.resolutions));
    if let Some(r) = p.n_resolution {
        report.note(format!("fiber resolution: {r}"));
    }
    report.note(format!("periods: M={} N={}", p.period_m, p.period_n));
    report.note(format!("stencil order: {}", p.order));
    report.note(format!("g: {:?}", p.g));
    report.note(format!("h: {:?}{}", p.h, if p.unit_volume_n { " rescaled to unit volume" } else { "" }));
    report.note(format!("f: {:?}", p.f));
}
