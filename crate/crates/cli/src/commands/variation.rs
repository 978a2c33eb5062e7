use super::{build_product, describe_product, offset, SEED_DIRECTIONS};
use crate::config::VariationFormula;
use crate::{CliError, ExperimentConfig, Report};
use dilaton_core::functionals::first_variation_check;
use dilaton_core::recipes::random_sym_tensor;

/// Numeric derivative of the product action along seeded directions `δg`
/// against the closed-form first variation. Runs at the first listed
/// resolution.
pub fn verify_variation(cfg: &ExperimentConfig) -> Result<Report, CliError> {
    let p = cfg.product()?;
    let v = cfg.variation()?;
    let order = p.stencil()?;
    let base_seed = v
        .seed
        .or(offset(cfg.seed, SEED_DIRECTIONS))
        .ok_or_else(|| CliError::Config("variation directions are randomized and need a seed".into()))?;
    if v.draws == 0 {
        return Err(CliError::Config("variation needs at least one draw".into()));
    }
    let r = p.resolutions[0];
    let mut report = Report::new(
        "verify-variation",
        &[
            "constants",
            "lambda",
            "draw",
            "seed",
            "numeric",
            "closed_form",
            "trace_term",
            "relative_mismatch",
            "corrected_mismatch",
        ],
    );
    describe_product(&mut report, p, cfg.seed);
    report.note(format!("resolution: {r}"));
    report.note(format!(
        "directions: {} draws, amplitude {}, max mode {}, seeds {}..",
        v.draws, v.amplitude, v.max_mode, base_seed
    ));
    let checked = match v.formula {
        VariationFormula::AsStated => "relative_mismatch",
        VariationFormula::WithTraceTerm => "corrected_mismatch",
    };
    report.note(format!("tolerance: max {checked} <= {:e}", v.tolerance));
    report.note("column numeric: Richardson-extrapolated central difference of twice the product action along (g + e dg, f + e tr(dg)/2)");
    report.note("column closed_form: -2 Vol(N) integral of <Ric + Hess f + lambda df(x)df, dg> e^-f over M");
    report.note("column trace_term: 2 lambda Vol(N) integral of tr(dg)(|grad f|^2 - Lap f) e^-f over M");
    report.note("column relative_mismatch: |numeric - closed_form| / max(|numeric|, |closed_form|)");
    report.note("column corrected_mismatch: the same against closed_form + trace_term");
    for (label, c) in p.constants.resolve(p.m, p.n)? {
        let pg = build_product(p, c, r, cfg.seed)?;
        let mut worst: f64 = 0.0;
        for k in 0..v.draws {
            let seed = base_seed.wrapping_add(k as u64);
            let dg = random_sym_tensor(pg.grid_m(), v.amplitude, v.max_mode, seed);
            let chk = first_variation_check(&pg, &dg, c.lambda(), order)?;
            let mism = match v.formula {
                VariationFormula::AsStated => chk.relative_mismatch(),
                VariationFormula::WithTraceTerm => chk.corrected_mismatch(),
            };
            worst = worst.max(mism);
            report.push(vec![
                label.as_str().into(),
                c.lambda().into(),
                k.into(),
                seed.into(),
                chk.numeric.into(),
                chk.closed_form.into(),
                chk.trace_term.into(),
                chk.relative_mismatch().into(),
                chk.corrected_mismatch().into(),
            ]);
        }
        report.note(format!("{label}: max {checked} = {worst:.3e}"));
        if !(worst <= v.tolerance) {
            report.fail(format!("{label}: max {checked} {worst:e} exceeds {:e}", v.tolerance));
        }
    }
    Ok(report)
}
