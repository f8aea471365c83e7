//! Small numerical building blocks: golden-section minimization, a
//! three-point parabolic polish, and ordinary least squares.

use crate::error::{Error, Result};

/// Golden-section search for the minimum of `f` on `[a, b]`.
///
/// Shrinks the bracket to `tol` and returns its midpoint. `f` may fail;
/// errors propagate unchanged.
pub(crate) fn golden_section_min<F>(f: F, mut a: f64, mut b: f64, tol: f64) -> Result<f64>
where
    F: Fn(f64) -> Result<f64>,
{
    const INV_PHI: f64 = 0.618_033_988_749_894_9;
    let mut x1 = b - INV_PHI * (b - a);
    let mut x2 = a + INV_PHI * (b - a);
    let mut f1 = f(x1)?;
    let mut f2 = f(x2)?;
    while b - a > tol {
        if f1 < f2 {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - INV_PHI * (b - a);
            f1 = f(x1)?;
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + INV_PHI * (b - a);
            f2 = f(x2)?;
        }
    }
    Ok(0.5 * (a + b))
}

/// One parabolic interpolation through (x−h, x, x+h), clamped to ±h.
///
/// Near a smooth minimum the vertex is a far better estimate than the
/// bare golden-section midpoint, and it varies smoothly with the data,
/// which matters when minima are differenced against each other. Falls
/// back to `x` when the three points are not convex.
pub(crate) fn parabolic_refine<F>(f: F, x: f64, h: f64) -> Result<f64>
where
    F: Fn(f64) -> Result<f64>,
{
    let fm = f(x - h)?;
    let f0 = f(x)?;
    let fp = f(x + h)?;
    let curvature = fm - 2.0 * f0 + fp;
    if curvature <= 0.0 || !curvature.is_finite() {
        return Ok(x);
    }
    let step = 0.5 * h * (fm - fp) / curvature;
    Ok(x + step.clamp(-h, h))
}

/// Ordinary least squares of y on x with a free intercept.
#[derive(Debug, Clone, Copy)]
pub(crate) struct LinearFit {
    pub slope: f64,
    pub intercept: f64,
    pub slope_stderr: f64,
    pub r_squared: f64,
}

pub(crate) fn linear_fit(x: &[f64], y: &[f64]) -> Result<LinearFit> {
    let n = x.len();
    if n != y.len() || n < 2 {
        return Err(Error::Fit(format!(
            "numerics::linear_fit: need ≥ 2 paired points, got {n} x {}",
            y.len()
        )));
    }
    let nf = n as f64;
    let mean_x = x.iter().sum::<f64>() / nf;
    let mean_y = y.iter().sum::<f64>() / nf;
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    let mut syy = 0.0;
    for (&xi, &yi) in x.iter().zip(y) {
        let dx = xi - mean_x;
        let dy = yi - mean_y;
        sxx += dx * dx;
        sxy += dx * dy;
        syy += dy * dy;
    }
    if sxx <= 0.0 {
        return Err(Error::Fit(
            "numerics::linear_fit: degenerate design (all x identical)".into(),
        ));
    }
    let slope = sxy / sxx;
    let intercept = mean_y - slope * mean_x;
    let sse = (syy - slope * sxy).max(0.0);
    let slope_stderr = if n > 2 { (sse / ((nf - 2.0) * sxx)).sqrt() } else { 0.0 };
    let r_squared = if syy > 0.0 { 1.0 - sse / syy } else { 1.0 };
    Ok(LinearFit { slope, intercept, slope_stderr, r_squared })
}
