//! Reduction of the time-dependent system to the autonomous one.
//!
//! With `rho'' + w(t)^2 rho = 0` and `rho != 0`, the substitution
//! `X = x/rho`, `Y = y/rho`, `T = int rho^-2 dt` removes the `-w^2 q` terms.
//! The velocities follow from the chain rule: `X' = dX/dT = rho vx - rho' x`,
//! and back, `vx = X'/rho + rho' X`.

use crate::error::{Error, Result};
use crate::expr::Expression;
use crate::integrate::{self, run, sign_kept, Control, OdeSystem, StopReason, Trajectory};
use crate::invariants::ermakov_i0;
use crate::model::CartesianState;
use crate::quad;

/// Absolute tolerance of the `int rho^-2 dt` pieces between nodes.
const TMAP_QUAD_TOL: f64 = 1e-13;

/// `rho`, `rho'` and `T` at one time.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RhoPoint {
    pub rho: f64,
    pub rhodot: f64,
    pub tmap: f64,
}

/// A nonvanishing solution of the auxiliary oscillator on a time grid,
/// with the cumulative time map `T(t) = int_{t0}^t rho^-2`.
///
/// Between nodes, `rho` is the quintic Hermite interpolant built from
/// `rho`, `rho'` and `rho'' = -w^2 rho`.
#[derive(Debug, Clone, PartialEq)]
pub struct RhoSolution {
    omega: Option<Expression>,
    times: Vec<f64>,
    rho: Vec<f64>,
    rhodot: Vec<f64>,
    rhoddot: Vec<f64>,
    tmap: Vec<f64>,
}

fn omega_sq(omega: Option<&Expression>, t: f64) -> Result<f64> {
    match omega {
        None => Ok(0.0),
        Some(w) => {
            let w = w.evaluate(t)?;
            Ok(w * w)
        }
    }
}

/// Quintic Hermite interpolation on `[t0, t0 + h]`; returns the value and
/// the time derivative.
fn hermite(h: f64, s: f64, p: [f64; 3], q: [f64; 3]) -> (f64, f64) {
    let (s2, s3, s4, s5) = (s * s, s * s * s, s.powi(4), s.powi(5));
    let value = (1.0 - 10.0 * s3 + 15.0 * s4 - 6.0 * s5) * p[0]
        + h * (s - 6.0 * s3 + 8.0 * s4 - 3.0 * s5) * p[1]
        + h * h * 0.5 * (s2 - 3.0 * s3 + 3.0 * s4 - s5) * p[2]
        + (10.0 * s3 - 15.0 * s4 + 6.0 * s5) * q[0]
        + h * (-4.0 * s3 + 7.0 * s4 - 3.0 * s5) * q[1]
        + h * h * 0.5 * (s3 - 2.0 * s4 + s5) * q[2];
    let slope = (-30.0 * s2 + 60.0 * s3 - 30.0 * s4) * p[0]
        + h * (1.0 - 18.0 * s2 + 32.0 * s3 - 15.0 * s4) * p[1]
        + h * h * 0.5 * (2.0 * s - 9.0 * s2 + 12.0 * s3 - 5.0 * s4) * p[2]
        + (30.0 * s2 - 60.0 * s3 + 30.0 * s4) * q[0]
        + h * (-12.0 * s2 + 28.0 * s3 - 15.0 * s4) * q[1]
        + h * h * 0.5 * (3.0 * s2 - 8.0 * s3 + 5.0 * s4) * q[2];
    (value, slope / h)
}

impl RhoSolution {
    /// Builds a solution from nodal values, e.g. a closed form sampled on a
    /// grid. `rho` must keep one sign and `times` must increase strictly.
    pub fn from_nodes(
        omega: Option<Expression>,
        times: Vec<f64>,
        rho: Vec<f64>,
        rhodot: Vec<f64>,
    ) -> Result<Self> {
        if times.is_empty() || times.len() != rho.len() || times.len() != rhodot.len() {
            return Err(Error::Precondition(
                "rho nodes need equally many times, values and derivatives (at least one)".into(),
            ));
        }
        if let Some(w) = times.windows(2).find(|w| !(w[1] > w[0])) {
            return Err(Error::Precondition(format!(
                "rho node times must increase strictly ({} then {})",
                w[0], w[1]
            )));
        }
        if rho[0] == 0.0 {
            return Err(Error::Precondition("rho must not vanish".into()));
        }
        if let Some(i) = (1..rho.len()).find(|&i| !sign_kept(rho[i - 1], rho[i])) {
            return Err(Error::RhoZeroCrossing {
                from: times[i - 1],
                to: times[i],
            });
        }
        let rhoddot = times
            .iter()
            .zip(&rho)
            .map(|(&t, &r)| Ok(-omega_sq(omega.as_ref(), t)? * r))
            .collect::<Result<Vec<f64>>>()?;
        let mut sol = RhoSolution {
            omega,
            times,
            rho,
            rhodot,
            rhoddot,
            tmap: Vec::new(),
        };
        let mut tmap = Vec::with_capacity(sol.times.len());
        tmap.push(0.0);
        for i in 1..sol.times.len() {
            let piece = sol.tmap_piece(i - 1, sol.times[i])?;
            tmap.push(tmap[i - 1] + piece);
        }
        sol.tmap = tmap;
        Ok(sol)
    }

    fn interpolate(&self, i: usize, t: f64) -> (f64, f64) {
        let h = self.times[i + 1] - self.times[i];
        let s = (t - self.times[i]) / h;
        hermite(
            h,
            s,
            [self.rho[i], self.rhodot[i], self.rhoddot[i]],
            [self.rho[i + 1], self.rhodot[i + 1], self.rhoddot[i + 1]],
        )
    }

    /// `int_{t_i}^{t} rho^-2` inside node interval `i`.
    fn tmap_piece(&self, i: usize, t: f64) -> Result<f64> {
        let piece = quad::integrate(
            |z| {
                let r = self.interpolate(i, z).0;
                if r == 0.0 || !sign_kept(self.rho[i], r) {
                    Err(Error::RhoZeroCrossing {
                        from: self.times[i],
                        to: self.times[i + 1],
                    })
                } else {
                    Ok(1.0 / (r * r))
                }
            },
            self.times[i],
            t,
            TMAP_QUAD_TOL,
        );
        piece.map_err(|e| match e {
            quad::QuadError::Integrand { .. } => Error::RhoZeroCrossing {
                from: self.times[i],
                to: self.times[i + 1],
            },
            other => other.into(),
        })
    }

    pub fn omega(&self) -> Option<&Expression> {
        self.omega.as_ref()
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn rho(&self) -> &[f64] {
        &self.rho
    }

    pub fn rhodot(&self) -> &[f64] {
        &self.rhodot
    }

    /// `T` at every node; zero at the first.
    pub fn tmap(&self) -> &[f64] {
        &self.tmap
    }

    pub fn span(&self) -> (f64, f64) {
        (self.times[0], *self.times.last().expect("nonempty"))
    }

    /// Values at any `t` inside the grid span.
    pub fn at(&self, t: f64) -> Result<RhoPoint> {
        let (a, b) = self.span();
        if !(a..=b).contains(&t) {
            return Err(Error::OutOfRange(format!(
                "t = {t} lies outside the rho solution span [{a}, {b}]"
            )));
        }
        let i = self.times.partition_point(|&node| node <= t) - 1;
        if self.times[i] == t {
            return Ok(RhoPoint {
                rho: self.rho[i],
                rhodot: self.rhodot[i],
                tmap: self.tmap[i],
            });
        }
        let (rho, rhodot) = self.interpolate(i, t);
        Ok(RhoPoint {
            rho,
            rhodot,
            tmap: self.tmap[i] + self.tmap_piece(i, t)?,
        })
    }
}

struct RhoOde<'a> {
    omega: Option<&'a Expression>,
}

impl OdeSystem<2> for RhoOde<'_> {
    fn rhs(&self, t: f64, q: &[f64; 2]) -> Result<[f64; 2]> {
        Ok([q[1], -omega_sq(self.omega, t)? * q[0]])
    }

    fn admissible(&self, from: &[f64; 2], to: &[f64; 2]) -> bool {
        to.iter().all(|v| v.is_finite()) && sign_kept(from[0], to[0])
    }
}

/// Integrates `rho'' + w^2 rho = 0` over `[t0, t_end]`. Nodes are the
/// accepted steps plus the control's sample grid.
pub fn solve_rho(
    omega: Option<&Expression>,
    rho0: f64,
    rhodot0: f64,
    t0: f64,
    t_end: f64,
    control: &Control,
) -> Result<RhoSolution> {
    if !(t_end > t0) {
        return Err(Error::Precondition(format!(
            "t_end ({t_end}) must exceed t0 ({t0})"
        )));
    }
    let outputs = integrate::output_grid(t0, t_end, control.sample_interval);
    solve(omega, rho0, rhodot0, t0, &outputs, control)
}

/// As [`solve_rho`], with nodes guaranteed at each of `times` (strictly
/// increasing, all after `t0`).
pub fn solve_rho_at(
    omega: Option<&Expression>,
    rho0: f64,
    rhodot0: f64,
    t0: f64,
    times: &[f64],
    control: &Control,
) -> Result<RhoSolution> {
    let mut prev = t0;
    for &t in times {
        if !(t > prev) {
            return Err(Error::Precondition(format!(
                "rho output times must increase strictly from t0 ({prev} then {t})"
            )));
        }
        prev = t;
    }
    solve(omega, rho0, rhodot0, t0, times, control)
}

fn solve(
    omega: Option<&Expression>,
    rho0: f64,
    rhodot0: f64,
    t0: f64,
    outputs: &[f64],
    control: &Control,
) -> Result<RhoSolution> {
    if rho0 == 0.0 || !rho0.is_finite() || !rhodot0.is_finite() {
        return Err(Error::Precondition(format!(
            "rho0 must be finite and nonzero and rhodot0 finite, got ({rho0}, {rhodot0})"
        )));
    }
    let raw = run(
        &RhoOde { omega },
        t0,
        [rho0, rhodot0],
        outputs,
        control,
        true,
    )?;
    if let StopReason::Singularity { .. } = raw.stop {
        let from = *raw.times.last().expect("run keeps the start");
        return Err(Error::RhoZeroCrossing {
            from,
            to: from + raw.failed_step.unwrap_or(0.0),
        });
    }
    let (rho, rhodot) = raw.states.iter().map(|q| (q[0], q[1])).unzip();
    RhoSolution::from_nodes(omega.cloned(), raw.times, rho, rhodot)
}

fn check_rho(rho: f64) -> Result<()> {
    if rho == 0.0 || !rho.is_finite() {
        return Err(Error::Precondition(format!(
            "rho must be finite and nonzero, got {rho}"
        )));
    }
    Ok(())
}

/// `(x, y, vx, vy)` at time `t` to `(X, Y, X', Y')` at time `tmap`.
pub fn reduce_state(
    s: &CartesianState,
    rho: f64,
    rhodot: f64,
    tmap: f64,
) -> Result<CartesianState> {
    check_rho(rho)?;
    Ok(CartesianState::new(
        tmap,
        s.x / rho,
        s.y / rho,
        rho * s.vx - rhodot * s.x,
        rho * s.vy - rhodot * s.y,
    ))
}

/// Exact inverse of [`reduce_state`]: `x = rho X`, `vx = X'/rho + rho' X`.
pub fn inverse_reduce(s: &CartesianState, rho: f64, rhodot: f64, t: f64) -> Result<CartesianState> {
    check_rho(rho)?;
    Ok(CartesianState::new(
        t,
        rho * s.x,
        rho * s.y,
        s.vx / rho + rhodot * s.x,
        s.vy / rho + rhodot * s.y,
    ))
}

/// Largest `|w_traj^2 - w_rho^2|` tolerated when matching frequency profiles.
const OMEGA_MATCH_TOL: f64 = 1e-12;

/// Maps every sample into the autonomous frame. The result carries the
/// spec without its frequency profile.
pub fn reduce_trajectory(traj: &Trajectory, rho: &RhoSolution) -> Result<Trajectory> {
    let spec = traj.spec();
    let samples = traj
        .samples()
        .iter()
        .map(|s| {
            let mismatch = (omega_sq(spec.omega(), s.time)? - omega_sq(rho.omega(), s.time)?).abs();
            if mismatch > OMEGA_MATCH_TOL {
                return Err(Error::Precondition(format!(
                    "rho solves a different frequency profile than the trajectory (t = {})",
                    s.time
                )));
            }
            let p = rho.at(s.time)?;
            reduce_state(s, p.rho, p.rhodot, p.tmap)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Trajectory::with_parts(
        spec.autonomous(),
        samples,
        traj.method(),
        traj.stats(),
        traj.stop().clone(),
    ))
}

/// Agreement of the two routes from a time-dependent initial state to the
/// autonomous frame.
#[derive(Debug, Clone, PartialEq)]
pub struct TwoPathCheck {
    /// The mapped trajectory (integrate, then reduce).
    pub reduced: Trajectory,
    /// Direct autonomous integration from the mapped initial state.
    pub direct: Trajectory,
    /// Largest componentwise state difference between the two.
    pub max_state_error: f64,
    /// Largest `|I0(x, v) - I0(X, X')|` over the samples.
    pub max_i0_mismatch: f64,
}

/// Reduces `traj`, integrates the autonomous system from the mapped first
/// sample to every mapped sample time, and compares.
pub fn two_path_check(
    traj: &Trajectory,
    rho: &RhoSolution,
    control: &Control,
) -> Result<TwoPathCheck> {
    let reduced = reduce_trajectory(traj, rho)?;
    let start = reduced.first();
    let times: Vec<f64> = reduced.samples()[1..].iter().map(|s| s.time).collect();
    let control = Control {
        sample_interval: None,
        ..*control
    };
    let direct = if times.is_empty() {
        Trajectory::from_samples(reduced.spec().clone(), vec![*start], control.method)?
    } else {
        integrate::integrate_at(reduced.spec(), start, &times, &control)?
    };
    if direct.samples().len() != reduced.samples().len() {
        return Err(Error::Precondition(format!(
            "autonomous integration stopped early: {:?}",
            direct.stop()
        )));
    }
    let max_state_error = reduced
        .samples()
        .iter()
        .zip(direct.samples())
        .flat_map(|(a, b)| {
            [a.x - b.x, a.y - b.y, a.vx - b.vx, a.vy - b.vy]
                .map(f64::abs)
                .into_iter()
        })
        .fold(0.0, f64::max);
    let mut max_i0_mismatch: f64 = 0.0;
    for (s, r) in traj.samples().iter().zip(reduced.samples()) {
        let here = ermakov_i0(traj.spec(), s)?;
        let there = ermakov_i0(reduced.spec(), r)?;
        max_i0_mismatch = max_i0_mismatch.max((here - there).abs());
    }
    Ok(TwoPathCheck {
        reduced,
        direct,
        max_state_error,
        max_i0_mismatch,
    })
}
