use crate::{CliError, Report};
use dilaton_core::warped::{lambda_max, max_z_on_line, solve_perelman_constants, solve_theta, Branch, ALGEBRAIC_TOL};

/// Tolerance on `|max_A Z − 1/(m−2)|`.
pub const LAMBDA_MAX_TOL: f64 = 1e-10;

/// Both roots `(θ, A, B)` with their constraint residuals, and the top of the
/// `λ` range for `m > 2`.
pub fn constants(m: usize, n: usize) -> Result<Report, CliError> {
    let thetas = solve_theta(m, n)?;
    let mut report = Report::new(
        "constants",
        &["branch", "theta", "a", "b", "c1_residual", "c2_residual"],
    );
    report.note(format!("dimensions: m={m} n={n}"));
    report.note(format!("tolerance: |c1_residual|, |c2_residual| <= {ALGEBRAIC_TOL:e}"));
    report.note("column c1_residual: 2ABn + (m-2)A^2 - B^2 n (vanishing df(x)df coefficient)");
    report.note("column c2_residual: A(m-2) + Bn - 2 (normalisation line)");
    let branches: &[(&str, Branch)] = if thetas.len() == 1 {
        &[("single", Branch::Plus)]
    } else {
        &[("plus", Branch::Plus), ("minus", Branch::Minus)]
    };
    for &(label, branch) in branches {
        let c = solve_perelman_constants(m, n, branch)?;
        let (r1, r2) = (c.c1_residual(), c.c2_residual());
        report.push(vec![
            label.into(),
            c.theta().into(),
            c.a().into(),
            c.b().into(),
            r1.into(),
            r2.into(),
        ]);
        if !(r1.abs() <= ALGEBRAIC_TOL && r2.abs() <= ALGEBRAIC_TOL) {
            report.fail(format!("{label}: residuals {r1:e}, {r2:e} exceed {ALGEBRAIC_TOL:e}"));
        }
    }
    match (lambda_max(m), max_z_on_line(m, n)) {
        (Some(formula), Some((a_star, z_star))) => {
            let gap = (z_star - formula).abs();
            report.note(format!(
                "lambda_max: 1/(m-2) = {formula:.12e}; max of Z on the line = {z_star:.12e} at A = {a_star:.12e}; gap {gap:.3e} (tolerance {LAMBDA_MAX_TOL:e})"
            ));
            if !(gap <= LAMBDA_MAX_TOL) {
                report.fail(format!("lambda_max gap {gap:e} exceeds {LAMBDA_MAX_TOL:e}"));
            }
        }
        _ => report.note("lambda_max: none (Z unbounded above on the line)"),
    }
    Ok(report)
}
