//! Globally adaptive Gauss–Kronrod (7/15) quadrature.
//!
//! The interval with the largest error estimate is bisected until the summed
//! estimate drops below the tolerance. No interval is bisected more than
//! [`MAX_DEPTH`] times and at most [`MAX_INTERVALS`] live intervals are kept;
//! exceeding either cap is reported as non-convergence.

use std::fmt::Display;

use thiserror::Error;

/// Bisection cap per interval.
pub const MAX_DEPTH: u32 = 50;
/// Cap on the number of intervals in the partition.
pub const MAX_INTERVALS: usize = 4000;

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
// Gauss weights for the odd Kronrod nodes (1, 3, 5) and the centre.
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

#[derive(Debug, Clone, PartialEq, Error)]
pub enum QuadError {
    #[error("tolerance must be positive and finite, got {0}")]
    InvalidTolerance(f64),
    #[error("integration limits must be finite, got [{0}, {1}]")]
    InvalidLimits(f64, f64),
    #[error("integrand failed at {at}: {message}")]
    Integrand { at: f64, message: String },
    #[error(
        "no convergence after {intervals} intervals: estimate {estimate}, error bound {error} > {tol}"
    )]
    NonConvergence {
        estimate: f64,
        error: f64,
        tol: f64,
        intervals: usize,
    },
}

#[derive(Debug, Clone, Copy)]
struct Piece {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
    magnitude: f64,
    depth: u32,
}

fn kronrod<F, E>(f: &mut F, a: f64, b: f64, depth: u32) -> Result<Piece, QuadError>
where
    F: FnMut(f64) -> Result<f64, E>,
    E: Display,
{
    let centre = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let mut sample = |x: f64| -> Result<f64, QuadError> {
        match f(x) {
            Ok(v) if v.is_finite() => Ok(v),
            Ok(v) => Err(QuadError::Integrand {
                at: x,
                message: format!("non-finite value {v}"),
            }),
            Err(e) => Err(QuadError::Integrand {
                at: x,
                message: e.to_string(),
            }),
        }
    };
    let fc = sample(centre)?;
    let mut kronrod = WGK[7] * fc;
    let mut gauss = WG[3] * fc;
    let mut magnitude = WGK[7] * fc.abs();
    for (j, (&x, &w)) in XGK[..7].iter().zip(&WGK[..7]).enumerate() {
        let dx = half * x;
        let f1 = sample(centre - dx)?;
        let f2 = sample(centre + dx)?;
        kronrod += w * (f1 + f2);
        magnitude += w * (f1.abs() + f2.abs());
        if j % 2 == 1 {
            gauss += WG[j / 2] * (f1 + f2);
        }
    }
    Ok(Piece {
        a,
        b,
        value: kronrod * half,
        error: ((kronrod - gauss) * half).abs(),
        magnitude: magnitude * half.abs(),
        depth,
    })
}

/// Integrates `f` over `[a, b]` to absolute accuracy `tol`.
///
/// Reversed limits return the exact negation of the forward result; `a == b`
/// returns exactly zero without evaluating `f`. Integrand errors and
/// non-finite values abort with [`QuadError::Integrand`].
pub fn integrate<F, E>(mut f: F, a: f64, b: f64, tol: f64) -> Result<f64, QuadError>
where
    F: FnMut(f64) -> Result<f64, E>,
    E: Display,
{
    if !(tol > 0.0 && tol.is_finite()) {
        return Err(QuadError::InvalidTolerance(tol));
    }
    if !(a.is_finite() && b.is_finite()) {
        return Err(QuadError::InvalidLimits(a, b));
    }
    if a == b {
        return Ok(0.0);
    }
    if a > b {
        return integrate(f, b, a, tol).map(|v| -v);
    }

    let mut pieces = vec![kronrod(&mut f, a, b, 0)?];
    loop {
        let value: f64 = pieces.iter().map(|p| p.value).sum();
        let error: f64 = pieces.iter().map(|p| p.error).sum();
        let magnitude: f64 = pieces.iter().map(|p| p.magnitude).sum();
        // Below this the estimate is dominated by rounding in the sums.
        let floor = 50.0 * f64::EPSILON * magnitude;
        if error <= tol.max(floor) {
            return Ok(value);
        }
        let (worst, _) = pieces
            .iter()
            .enumerate()
            .max_by(|x, y| x.1.error.total_cmp(&y.1.error))
            .expect("partition is never empty");
        let p = pieces[worst];
        let mid = 0.5 * (p.a + p.b);
        if p.depth >= MAX_DEPTH || pieces.len() >= MAX_INTERVALS || mid <= p.a || mid >= p.b {
            return Err(QuadError::NonConvergence {
                estimate: value,
                error,
                tol,
                intervals: pieces.len(),
            });
        }
        pieces[worst] = kronrod(&mut f, p.a, mid, p.depth + 1)?;
        pieces.push(kronrod(&mut f, mid, p.b, p.depth + 1)?);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::convert::Infallible;

    fn ok(f: impl Fn(f64) -> f64) -> impl FnMut(f64) -> Result<f64, Infallible> {
        move |x| Ok(f(x))
    }

    #[test]
    fn polynomials_are_exact() {
        let v = integrate(ok(|x| x.powi(5) - 3.0 * x), -1.0, 2.0, 1e-14).unwrap();
        assert!((v - (64.0 / 6.0 - 1.0 / 6.0 - 4.5)).abs() < 1e-13);
    }

    #[test]
    fn oscillatory_integrand() {
        let v = integrate(ok(|x| (10.0 * x).sin()), 0.0, 3.0, 1e-12).unwrap();
        let exact = (1.0 - 30f64.cos()) / 10.0;
        assert!((v - exact).abs() < 1e-12);
    }

    #[test]
    fn integrable_endpoint_singularity() {
        let v = integrate(ok(|x: f64| 1.0 / x.sqrt()), 0.0, 1.0, 1e-8).unwrap();
        assert!((v - 2.0).abs() < 1e-8);
    }

    #[test]
    fn nonintegrable_singularity_fails() {
        let err = integrate(ok(|x: f64| 1.0 / x), 0.0, 1.0, 1e-10).unwrap_err();
        assert!(matches!(err, QuadError::NonConvergence { .. }), "{err}");
    }

    #[test]
    fn additivity_over_adjacent_intervals() {
        let tol = 1e-11;
        let f = |x: f64| (x * x).exp() / (1.0 + x);
        let ab = integrate(ok(f), 0.0, 0.8, tol).unwrap();
        let bc = integrate(ok(f), 0.8, 1.5, tol).unwrap();
        let ac = integrate(ok(f), 0.0, 1.5, tol).unwrap();
        assert!((ab + bc - ac).abs() <= 2.0 * tol);
    }

    #[test]
    fn rejects_bad_tolerance() {
        assert!(matches!(
            integrate(ok(|x| x), 0.0, 1.0, 0.0),
            Err(QuadError::InvalidTolerance(_))
        ));
    }
}
