//! Algebra of the warping exponents `(A, B)`.
//!
//! With `K = (Am + Bn)/2 − A` and `Z = (2ABn + (m−2)A² − B²n)/4`:
//!
//! * the normalisation line is `K = 1`, i.e. `A(m−2) + Bn = 2`;
//! * Perelman constants additionally have `Z = 0`, equivalently
//!   `(m−2)θ² + 2nθ − n = 0` for `θ = A/B`;
//! * along the normalisation line `Z` takes every value in `(−∞, 1/(m−2)]`
//!   for `m > 2` and every real value for `m = 2`.

use crate::{Error, Result};

/// Tolerance for the purely algebraic residuals.
pub const ALGEBRAIC_TOL: f64 = 1e-12;

/// How much structure a pair `(A, B)` carries.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ConstraintLevel {
    /// Arbitrary exponents; only the general curvature formulas apply.
    Unconstrained,
    /// On the normalisation line `A(m−2) + Bn = 2`.
    NormalisationLine,
    /// On the line and with vanishing `df ⊗ df` coefficient, `A, B ≠ 0`.
    Perelman,
}

/// Root selector for the two-root cases.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Branch {
    /// The larger root.
    Plus,
    /// The smaller root.
    Minus,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WarpedConstants {
    m: usize,
    n: usize,
    a: f64,
    b: f64,
    theta: Option<f64>,
    lambda: f64,
    level: ConstraintLevel,
}

fn check_dims(m: usize, n: usize) -> Result<()> {
    if m == 0 || n == 0 || m + n <= 2 {
        Err(Error::InadmissibleDimensions { m, n })
    } else {
        Ok(())
    }
}

/// `2ABn + (m−2)A² − B²n`, the `df ⊗ df` coefficient (times 4).
pub fn c1_residual(m: usize, n: usize, a: f64, b: f64) -> f64 {
    let (mf, nf) = (m as f64, n as f64);
    2.0 * a * b * nf + (mf - 2.0) * a * a - b * b * nf
}

/// `A(m−2) + Bn − 2`.
pub fn c2_residual(m: usize, n: usize, a: f64, b: f64) -> f64 {
    a * (m as f64 - 2.0) + b * n as f64 - 2.0
}

/// `Z_{m,n}(A, B) = (2ABn + (m−2)A² − B²n) / 4`.
pub fn z_value(m: usize, n: usize, a: f64, b: f64) -> f64 {
    c1_residual(m, n, a, b) / 4.0
}

/// Largest attainable `Z` on the normalisation line, `1/(m−2)`, for `m > 2`.
pub fn lambda_max(m: usize) -> Option<f64> {
    (m > 2).then(|| 1.0 / (m as f64 - 2.0))
}

/// Maximiser of `Z` along the normalisation line, found from the exact
/// quadratic dependence of `Z` on `A` there: `(A*, Z(A*))`. `None` when `Z` is
/// unbounded above (`m ≤ 2`).
pub fn max_z_on_line(m: usize, n: usize) -> Option<(f64, f64)> {
    let z = |a: f64| {
        let b = (2.0 - a * (m as f64 - 2.0)) / n as f64;
        z_value(m, n, a, b)
    };
    let curvature = 0.5 * (z(1.0) + z(-1.0) - 2.0 * z(0.0));
    if !(curvature < 0.0) {
        return None;
    }
    let a_star = -0.5 * (z(1.0) - z(-1.0)) / (2.0 * curvature);
    Some((a_star, z(a_star)))
}

impl WarpedConstants {
    /// Exponents on the normalisation line. The level is upgraded to
    /// [`ConstraintLevel::Perelman`] when the `df ⊗ df` coefficient vanishes.
    pub fn new(m: usize, n: usize, a: f64, b: f64) -> Result<Self> {
        let c = Self::unconstrained(m, n, a, b)?;
        if c.level == ConstraintLevel::Unconstrained {
            return Err(Error::Constants(format!(
                "A={a}, B={b} violate A(m-2)+Bn=2 (residual {:e})",
                c.c2_residual()
            )));
        }
        Ok(c)
    }

    /// Arbitrary exponents, for the general curvature formulas.
    pub fn unconstrained(m: usize, n: usize, a: f64, b: f64) -> Result<Self> {
        check_dims(m, n)?;
        if !(a.is_finite() && b.is_finite()) {
            return Err(Error::Constants(format!("non-finite exponents A={a}, B={b}")));
        }
        let on_line = c2_residual(m, n, a, b).abs() <= ALGEBRAIC_TOL;
        let level = if on_line && c1_residual(m, n, a, b).abs() <= ALGEBRAIC_TOL && a != 0.0 && b != 0.0 {
            ConstraintLevel::Perelman
        } else if on_line {
            ConstraintLevel::NormalisationLine
        } else {
            ConstraintLevel::Unconstrained
        };
        Ok(Self {
            m,
            n,
            a,
            b,
            theta: (b != 0.0).then(|| a / b),
            lambda: z_value(m, n, a, b),
            level,
        })
    }

    pub fn m(&self) -> usize {
        self.m
    }
    pub fn n(&self) -> usize {
        self.n
    }
    pub fn a(&self) -> f64 {
        self.a
    }
    pub fn b(&self) -> f64 {
        self.b
    }
    /// `A/B`, undefined when `B = 0`.
    pub fn theta(&self) -> Option<f64> {
        self.theta
    }
    /// `Z_{m,n}(A, B)`.
    pub fn lambda(&self) -> f64 {
        self.lambda
    }
    pub fn level(&self) -> ConstraintLevel {
        self.level
    }
    pub fn c1_residual(&self) -> f64 {
        c1_residual(self.m, self.n, self.a, self.b)
    }
    pub fn c2_residual(&self) -> f64 {
        c2_residual(self.m, self.n, self.a, self.b)
    }
    /// `K = (Am + Bn)/2 − A`; equals one on the normalisation line.
    pub fn k_factor(&self) -> f64 {
        (self.a * self.m as f64 + self.b * self.n as f64) / 2.0 - self.a
    }
}

/// Roots of `(m−2)θ² + 2nθ − n = 0`, larger first; the single root `½` when `m = 2`.
pub fn solve_theta(m: usize, n: usize) -> Result<Vec<f64>> {
    check_dims(m, n)?;
    let (mf, nf) = (m as f64, n as f64);
    if m == 2 {
        return Ok(vec![0.5]);
    }
    let disc = (nf * (nf + mf - 2.0)).sqrt();
    let mut roots = [(-nf + disc) / (mf - 2.0), (-nf - disc) / (mf - 2.0)];
    roots.sort_by(|a, b| b.total_cmp(a));
    Ok(roots.to_vec())
}

/// Exponents satisfying both the normalisation and the `Z = 0` condition.
/// For `m = 2` the branch is ignored.
pub fn solve_perelman_constants(m: usize, n: usize, branch: Branch) -> Result<WarpedConstants> {
    let roots = solve_theta(m, n)?;
    let theta = match (branch, roots.len()) {
        (_, 1) | (Branch::Plus, _) => roots[0],
        (Branch::Minus, _) => roots[1],
    };
    let denom = theta * (m as f64 - 2.0) + n as f64;
    assert!(denom != 0.0, "θ(m−2)+n vanishes only for m=n=1");
    let b = 2.0 / denom;
    let a = theta * b;
    let c = WarpedConstants::new(m, n, a, b)?;
    if c.level() != ConstraintLevel::Perelman {
        return Err(Error::Constants(format!(
            "root θ={theta} gives C1 residual {:e}",
            c.c1_residual()
        )));
    }
    Ok(c)
}

/// All exponent pairs on the normalisation line with `Z = λ`, larger `A` first.
pub fn lambda_to_constants(m: usize, n: usize, lambda: f64) -> Result<Vec<WarpedConstants>> {
    check_dims(m, n)?;
    if !lambda.is_finite() {
        return Err(Error::InvalidArgument(format!("lambda {lambda}")));
    }
    let (mf, nf) = (m as f64, n as f64);
    let b_of = |a: f64| (2.0 - a * (mf - 2.0)) / nf;
    let pairs: Vec<f64> = if m == 2 {
        // Z = A − 1/n with B = 2/n
        vec![lambda + 1.0 / nf]
    } else {
        // Z(A) = −A² s(m−2)/(4n) + A s/n − 1/n with s = m+n−2
        let s = mf + nf - 2.0;
        let q2 = -s * (mf - 2.0) / (4.0 * nf);
        let q1 = s / nf;
        let q0 = -1.0 / nf - lambda;
        let slack = 1.0 - lambda * (mf - 2.0);
        let disc = (s / nf) * slack;
        if slack < -ALGEBRAIC_TOL {
            let reason = if m > 2 {
                format!("lambda must not exceed 1/(m-2) = {}", 1.0 / (mf - 2.0))
            } else {
                format!("lambda must be at least 1/(m-2) = {}", 1.0 / (mf - 2.0))
            };
            return Err(Error::LambdaOutOfRange { m, lambda, reason });
        }
        if slack.abs() <= ALGEBRAIC_TOL {
            vec![-q1 / (2.0 * q2)]
        } else {
            let sq = disc.sqrt();
            // stable pair of roots
            let t = -0.5 * (q1 + q1.signum() * sq);
            let mut r = [t / q2, q0 / t];
            r.sort_by(|a, b| b.total_cmp(a));
            r.to_vec()
        }
    };
    pairs
        .into_iter()
        .map(|a| {
            let c = WarpedConstants::new(m, n, a, b_of(a))?;
            if (c.lambda() - lambda).abs() > ALGEBRAIC_TOL * lambda.abs().max(1.0) {
                return Err(Error::Constants(format!(
                    "Z(A={a}) = {} differs from requested {lambda}",
                    c.lambda()
                )));
            }
            Ok(c)
        })
        .collect()
}
