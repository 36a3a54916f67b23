use crate::{Error, Result};

/// Trapezoidal area under `ys` over the unit interval `xs`.
///
/// `xs` must start at 0, end at 1 and be strictly increasing.
pub fn trapezoid_auc(xs: &[f64], ys: &[f64]) -> Result<f64> {
    if xs.len() != ys.len() {
        return Err(Error::LengthMismatch { expected: xs.len(), found: ys.len() });
    }
    if xs.len() < 2 {
        return Err(Error::BadDomain("need at least two points"));
    }
    if xs[0].abs() > 1e-12 || (xs[xs.len() - 1] - 1.0).abs() > 1e-12 {
        return Err(Error::BadDomain("x must span [0, 1]"));
    }
    if xs.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::BadDomain("x must be strictly increasing"));
    }
    if ys.iter().any(|y| !y.is_finite()) {
        return Err(Error::BadDomain("non-finite y"));
    }
    Ok(xs.windows(2).zip(ys.windows(2)).map(|(x, y)| (x[1] - x[0]) * (y[0] + y[1]) / 2.0).sum())
}
