//! Closed-form polar solution of the autonomous conservative system.
//!
//! With `Fbar(theta) = (tan^2 theta + 1) N(tan theta)` the integrals read
//! `I0 = p_theta^2/2 + Fbar(theta)` and `r^2 = ((2HT - I2)^2 + 2 I0) / (2H)`.
//! Eliminating `dT/r^2` gives
//!
//! ```text
//! int dtheta / sqrt(I0 - Fbar) = +-(1/sqrt(I0)) arctan((2HT - I2) / sqrt(2 I0))
//! ```
//!
//! which is checked as a difference identity along a stretch of monotone
//! `theta`.

use crate::error::{Error, Result};
use crate::expr::Expression;
use crate::integrate::Trajectory;
use crate::invariants::{ermakov_i0, fi_i2, hamiltonian};
use crate::model::{CartesianState, SystemSpec};
use crate::quad;

/// Absolute tolerance of each theta quadrature piece in [`verify_solution`].
pub const THETA_QUAD_TOL: f64 = 1e-12;
/// Interior points probed for turning points before integrating in theta.
const TURNING_SCAN: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolutionConstants {
    pub h: f64,
    pub i0: f64,
    pub i2: f64,
}

impl SolutionConstants {
    /// `H`, anchored `I0` and `I2` at `s` (with `s.time` as `T`).
    pub fn from_state(spec: &SystemSpec, s: &CartesianState) -> Result<Self> {
        Ok(SolutionConstants {
            h: hamiltonian(spec, s)?,
            i0: ermakov_i0(spec, s)?,
            i2: fi_i2(spec, s)?,
        })
    }

    fn require_positive_energy(&self) -> Result<()> {
        if !(self.h > 0.0) {
            return Err(Error::OutOfRange(format!(
                "the polar solution needs H > 0, got H = {}",
                self.h
            )));
        }
        Ok(())
    }

    fn require_positive_i0(&self) -> Result<()> {
        self.require_positive_energy()?;
        if !(self.i0 > 0.0) {
            return Err(Error::OutOfRange(format!(
                "the arctan form needs I0 > 0, got I0 = {}",
                self.i0
            )));
        }
        Ok(())
    }
}

/// `(tan^2 theta + 1) N(tan theta)`.
pub fn fbar(n: &Expression, theta: f64) -> Result<f64> {
    let (sin, cos) = theta.sin_cos();
    // cos of an odd multiple of pi/2 rounds to about 6e-17 times the multiple
    if cos.abs() <= 4.0 * f64::EPSILON * theta.abs().max(1.0) {
        return Err(Error::Singular {
            reason: "Fbar undefined where cos(theta) = 0",
            state: CartesianState::new(f64::NAN, 0.0, 1.0, f64::NAN, f64::NAN),
        });
    }
    let u = sin / cos;
    Ok((u * u + 1.0) * n.evaluate(u)?)
}

/// `r^2(T) = (2HT - I2)^2 / (2H) + I0/H`.
pub fn radial_solution(k: &SolutionConstants, t: f64) -> Result<f64> {
    k.require_positive_energy()?;
    let z = 2.0 * k.h * t - k.i2;
    Ok(z * z / (2.0 * k.h) + k.i0 / k.h)
}

/// Inverse function in the right side of the theta relation. `Circular`
/// (arctan) is the correct one; `Hyperbolic` (artanh) is kept only to show
/// that it fails.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum AngleMap {
    #[default]
    Circular,
    Hyperbolic,
}

/// `sign (1/sqrt(I0)) arctan((2HT - I2) / sqrt(2 I0))`.
pub fn theta_time_rhs(k: &SolutionConstants, t: f64, sign: f64) -> Result<f64> {
    theta_time_rhs_with(AngleMap::Circular, k, t, sign)
}

/// As [`theta_time_rhs`] with a chosen inverse function. The hyperbolic map
/// returns a non-finite value outside `(-1, 1)`.
pub fn theta_time_rhs_with(map: AngleMap, k: &SolutionConstants, t: f64, sign: f64) -> Result<f64> {
    k.require_positive_i0()?;
    let arg = (2.0 * k.h * t - k.i2) / (2.0 * k.i0).sqrt();
    let angle = match map {
        AngleMap::Circular => arg.atan(),
        AngleMap::Hyperbolic => arg.atanh(),
    };
    Ok(sign.signum() * angle / k.i0.sqrt())
}

fn radicand(n: &Expression, theta: f64, i0: f64) -> Result<f64> {
    Ok(i0 - fbar(n, theta)?)
}

/// `int_{theta0}^{theta1} dtheta / sqrt(I0 - Fbar(theta))` to absolute
/// accuracy `tol`.
///
/// Endpoints may be turning points (`Fbar = I0`): the substitution
/// `theta = a + (b - a)(3s^2 - 2s^3)` removes the inverse square root
/// singularities there. A turning point inside the interval is an error
/// carrying the bracketing angles.
pub fn theta_quadrature(
    n: &Expression,
    theta0: f64,
    theta1: f64,
    i0: f64,
    tol: f64,
) -> Result<f64> {
    if theta0 == theta1 {
        return Ok(0.0);
    }
    let delta = theta1 - theta0;
    let slack = 1e-12 * i0.abs().max(1.0);
    let mut prev = (theta0, radicand(n, theta0, i0)?);
    if prev.1 < -slack {
        return Err(Error::TurningPoint {
            from: theta0,
            to: theta0,
        });
    }
    for j in 1..=TURNING_SCAN + 1 {
        let theta = theta0 + delta * j as f64 / (TURNING_SCAN + 1) as f64;
        let value = radicand(n, theta, i0)?;
        let interior = j <= TURNING_SCAN;
        if (interior && value <= 0.0) || (!interior && value < -slack) {
            return Err(Error::TurningPoint {
                from: prev.0,
                to: theta,
            });
        }
        prev = (theta, value);
    }
    let value = quad::integrate(
        |s: f64| -> Result<f64> {
            let theta = theta0 + delta * s * s * (3.0 - 2.0 * s);
            let jacobian = 6.0 * s * (1.0 - s);
            let rad = radicand(n, theta, i0)?;
            if rad <= 0.0 {
                if jacobian == 0.0 {
                    return Ok(0.0);
                }
                return Err(Error::TurningPoint {
                    from: theta,
                    to: theta,
                });
            }
            Ok(jacobian / rad.sqrt())
        },
        0.0,
        1.0,
        tol / delta.abs(),
    )?;
    Ok(delta * value)
}

/// Where the angular motion reverses, between two consecutive samples.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TurningPointInfo {
    pub time_from: f64,
    pub time_to: f64,
    pub theta_from: f64,
    pub theta_to: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AnalyticReport {
    pub constants: SolutionConstants,
    pub map: AngleMap,
    /// Sign of `theta'` on the checked stretch.
    pub sign: f64,
    pub max_radial_residual: f64,
    /// Infinite when the right side overflows.
    pub max_theta_residual: f64,
    /// Samples covered by the theta check (from the first).
    pub theta_samples: usize,
    pub turning_point: Option<TurningPointInfo>,
    pub tolerance: f64,
    pub radial_passes: bool,
    pub theta_passes: bool,
}

impl AnalyticReport {
    pub fn passes(&self) -> bool {
        self.radial_passes && self.theta_passes
    }
}

/// Checks the closed-form radial and angular solution along `traj`.
pub fn verify_solution(traj: &Trajectory, tol: f64) -> Result<AnalyticReport> {
    verify_solution_with(traj, tol, AngleMap::Circular)
}

/// As [`verify_solution`] with a chosen inverse function in the theta
/// relation.
pub fn verify_solution_with(traj: &Trajectory, tol: f64, map: AngleMap) -> Result<AnalyticReport> {
    let spec = traj.spec();
    let n = spec.potential_function().ok_or(Error::NotConservative)?;
    let first = traj.first();
    let k = SolutionConstants::from_state(spec, first)?;
    k.require_positive_i0()?;

    let mut max_radial_residual: f64 = 0.0;
    for s in traj.samples() {
        let r2 = s.x * s.x + s.y * s.y;
        max_radial_residual = max_radial_residual.max((r2 - radial_solution(&k, s.time)?).abs());
    }

    let samples = traj.samples();
    let p_theta: Vec<f64> = samples.iter().map(|s| s.x * s.vy - s.y * s.vx).collect();
    let sign = p_theta
        .iter()
        .copied()
        .find(|&p| p != 0.0)
        .map_or(1.0, f64::signum);
    let mut thetas: Vec<f64> = Vec::with_capacity(samples.len());
    for s in samples {
        let raw = s.y.atan2(s.x);
        let theta = match thetas.last() {
            None => raw,
            Some(&prev) => {
                let turns = ((prev - raw) / std::f64::consts::TAU).round();
                raw + turns * std::f64::consts::TAU
            }
        };
        thetas.push(theta);
    }
    let mut end = samples.len();
    let mut turning_point = None;
    for i in 1..samples.len() {
        let reversed = p_theta[i] * sign < 0.0 || (thetas[i] - thetas[i - 1]) * sign < 0.0;
        if reversed {
            end = i;
            turning_point = Some(TurningPointInfo {
                time_from: samples[i - 1].time,
                time_to: samples[i].time,
                theta_from: thetas[i - 1],
                theta_to: thetas[i],
            });
            break;
        }
    }

    let rhs0 = theta_time_rhs_with(map, &k, first.time, sign)?;
    let mut lhs = 0.0;
    let mut max_theta_residual: f64 = 0.0;
    for i in 1..end {
        lhs += theta_quadrature(n, thetas[i - 1], thetas[i], k.i0, THETA_QUAD_TOL)?;
        let rhs = theta_time_rhs_with(map, &k, samples[i].time, sign)? - rhs0;
        let residual = (lhs - rhs).abs();
        max_theta_residual = if residual.is_finite() {
            max_theta_residual.max(residual)
        } else {
            f64::INFINITY
        };
    }

    Ok(AnalyticReport {
        constants: k,
        map,
        sign,
        max_radial_residual,
        max_theta_residual,
        theta_samples: end,
        turning_point,
        tolerance: tol,
        radial_passes: max_radial_residual < tol,
        theta_passes: max_theta_residual < tol,
    })
}
