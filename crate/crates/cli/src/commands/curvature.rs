use super::{build_product, describe_product};
use crate::{CliError, ExperimentConfig, Report};
use dilaton_core::convergence::OrderVerdict;
use dilaton_core::warped::{curvature_study, EXACT_FLOOR};

/// Closed-form connection, Ricci and scalar curvature of the product against
/// the finite-difference oracle, per formula family and resolution.
pub fn verify_curvature(cfg: &ExperimentConfig) -> Result<Report, CliError> {
    let p = cfg.product()?;
    let tol = cfg.tolerances;
    let order = p.stencil()?;
    let mut report = Report::new(
        "verify-curvature",
        &["constants", "family", "resolution", "spacing", "max_error", "observed_order"],
    );
    describe_product(&mut report, p, cfg.seed);
    report.note(format!("tolerance: observed order >= {} between the two finest grids", tol.min_order));
    if let Some(e) = tol.max_error {
        report.note(format!("tolerance: max_error at the finest grid < {e:e}"));
    }
    report.note(format!("errors <= {EXACT_FLOOR:e} at the finest grid count as exact agreement"));
    report.note("column max_error: max over the coarsest-lattice nodes of |closed form - oracle|");
    report.note("column observed_order: log2 of the error ratio to the previous resolution");
    for (label, c) in p.constants.resolve(p.m, p.n)? {
        report.note(format!("{label}: A={:.12e} B={:.12e}", c.a(), c.b()));
        let study = curvature_study(&p.resolutions, order, |r| {
            build_product(p, c, r, cfg.seed).map_err(|e| match e {
                CliError::Core(e) => e,
                other => dilaton_core::Error::InvalidArgument(other.to_string()),
            })
        })?;
        for fam in &study.families {
            for (i, (&r, &h)) in study.resolutions.iter().zip(&study.spacings).enumerate() {
                let order = (i > 0 && fam.errors[i] > EXACT_FLOOR).then(|| (fam.errors[i - 1] / fam.errors[i]).log2());
                report.push(vec![
                    label.as_str().into(),
                    fam.family.name().into(),
                    r.into(),
                    h.into(),
                    fam.errors[i].into(),
                    order.into(),
                ]);
            }
            if !fam.verdict.passes(tol.min_order) {
                if let OrderVerdict::Order(q) = fam.verdict {
                    report.fail(format!("{label} {}: order {q:.3} below {}", fam.family.name(), tol.min_order));
                }
            }
            let finest = *fam.errors.last().unwrap();
            if let Some(e) = tol.max_error {
                if !(finest < e) {
                    report.fail(format!("{label} {}: finest error {finest:e} not below {e:e}", fam.family.name()));
                }
            }
        }
    }
    Ok(report)
}
