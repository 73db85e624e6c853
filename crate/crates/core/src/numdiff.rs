//! Central finite differences with one Richardson extrapolation step.
//!
//! Used only for cross-checks and condition scans; the equations of motion
//! never differentiate numerically.

use crate::error::Result;

/// Default step for gradients of potentials on O(1) grids (2^-12).
pub const DEFAULT_STEP: f64 = 2.44140625e-4;

/// `(4 D(h/2) - D(h)) / 3` with `D` the central difference; error `O(h^4)`.
pub fn richardson<F>(mut f: F, x: f64, h: f64) -> Result<f64>
where
    F: FnMut(f64) -> Result<f64>,
{
    let mut central =
        |step: f64| -> Result<f64> { Ok((f(x + step)? - f(x - step)?) / (2.0 * step)) };
    let coarse = central(h)?;
    let fine = central(0.5 * h)?;
    Ok((4.0 * fine - coarse) / 3.0)
}

/// Gradient of a two-argument function.
pub fn gradient<F>(mut f: F, x: f64, y: f64, h: f64) -> Result<(f64, f64)>
where
    F: FnMut(f64, f64) -> Result<f64>,
{
    let gx = richardson(|a| f(a, y), x, h)?;
    let gy = richardson(|b| f(x, b), y, h)?;
    Ok((gx, gy))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fourth_order_on_exponential() {
        let d = richardson(|x: f64| Ok(x.exp()), 0.3, 1e-2).unwrap();
        assert!((d - 0.3f64.exp()).abs() < 1e-10);
    }

    #[test]
    fn gradient_of_product() {
        let (gx, gy) = gradient(|x, y| Ok(x * x * y), 1.5, -2.0, 1e-3).unwrap();
        assert!((gx - 2.0 * 1.5 * -2.0).abs() < 1e-10);
        assert!((gy - 2.25).abs() < 1e-10);
    }
}
