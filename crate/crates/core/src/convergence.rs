//! Observed-order estimates for grid-refinement studies.

/// Verdict for one quantity measured on a sequence of refined grids.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum OrderVerdict {
    /// Finest error at or below the roundoff floor; the two computations agree
    /// exactly and no order can be measured.
    Exact,
    /// Observed order between the two finest grids.
    Order(f64),
}

impl OrderVerdict {
    pub fn passes(self, min_order: f64) -> bool {
        match self {
            Self::Exact => true,
            Self::Order(p) => p >= min_order,
        }
    }

    pub fn as_f64(self) -> Option<f64> {
        match self {
            Self::Exact => None,
            Self::Order(p) => Some(p),
        }
    }
}

/// `log(e_i / e_{i+1}) / log(refinement)` for consecutive pairs.
pub fn observed_orders(errors: &[f64], refinement: f64) -> Vec<f64> {
    errors
        .windows(2)
        .map(|w| (w[0] / w[1]).ln() / refinement.ln())
        .collect()
}

/// Order from the two finest entries of `errors`, or [`OrderVerdict::Exact`]
/// when the finest error does not exceed `floor`.
pub fn verdict(errors: &[f64], refinement: f64, floor: f64) -> OrderVerdict {
    assert!(errors.len() >= 2, "need at least two resolutions");
    let last = errors[errors.len() - 1];
    if last <= floor {
        OrderVerdict::Exact
    } else {
        OrderVerdict::Order(*observed_orders(errors, refinement).last().unwrap())
    }
}

/// Least-squares slope of `ln y` against `ln x`.
pub fn loglog_slope(x: &[f64], y: &[f64]) -> f64 {
    assert_eq!(x.len(), y.len());
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let n = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxy: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = lx.iter().map(|a| (a - mx) * (a - mx)).sum();
    sxy / sxx
}
