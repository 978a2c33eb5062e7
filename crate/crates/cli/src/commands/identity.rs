use super::{build_product, describe_product};
use crate::{CliError, ExperimentConfig, Report};
use dilaton_core::convergence::{verdict, OrderVerdict};
use dilaton_core::functionals::identity_residual;
use dilaton_core::warped::EXACT_FLOOR;

/// Total scalar curvature of the product against `Vol(N) 𝓕_λ(g, f)` plus the
/// fiber-curvature correction, under refinement.
pub fn verify_identity(cfg: &ExperimentConfig) -> Result<Report, CliError> {
    let p = cfg.product()?;
    let tol = cfg.tolerances;
    let order = p.stencil()?;
    let mut report = Report::new(
        "verify-identity",
        &[
            "constants",
            "lambda",
            "resolution",
            "product_action",
            "vol_n_f_lambda",
            "correction",
            "residual",
            "observed_order",
        ],
    );
    describe_product(&mut report, p, cfg.seed);
    report.note(format!("tolerance: observed order of |residual| >= {} between the two finest grids", tol.min_order));
    if let Some(e) = tol.max_error {
        report.note(format!("tolerance: |residual| at the finest grid < {e:e}"));
    }
    report.note(format!("|residual| <= {EXACT_FLOOR:e} at the finest grid counts as exact agreement"));
    report.note("column product_action: integral of the product scalar curvature over M x N");
    report.note("column vol_n_f_lambda: Vol(N) * integral of (R + (lambda+1)|grad f|^2) e^-f over M");
    report.note("column correction: (integral of e^((B-A-1)f) over M) * (integral of R^N over N)");
    report.note("column residual: product_action - vol_n_f_lambda - correction");
    for (label, c) in p.constants.resolve(p.m, p.n)? {
        let mut residuals = Vec::new();
        for &r in &p.resolutions {
            let pg = build_product(p, c, r, cfg.seed)?;
            let rep = identity_residual(&pg, order)?;
            let res = rep.residual.abs();
            let observed = residuals
                .last()
                .filter(|_| res > EXACT_FLOOR)
                .map(|&prev: &f64| (prev / res).log2());
            residuals.push(res);
            report.push(vec![
                label.as_str().into(),
                rep.lambda.into(),
                r.into(),
                rep.s_tilde.into(),
                (rep.vol_n * rep.f_lambda).into(),
                rep.correction.into(),
                rep.residual.into(),
                observed.into(),
            ]);
        }
        if residuals.len() >= 2 {
            if let OrderVerdict::Order(q) = verdict(&residuals, 2.0, EXACT_FLOOR) {
                if q < tol.min_order {
                    report.fail(format!("{label}: residual order {q:.3} below {}", tol.min_order));
                }
            }
        }
        if let Some(e) = tol.max_error {
            let finest = *residuals.last().unwrap();
            if !(finest < e) {
                report.fail(format!("{label}: finest residual {finest:e} not below {e:e}"));
            }
        }
    }
    Ok(report)
}
