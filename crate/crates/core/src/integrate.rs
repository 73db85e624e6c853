//! Trajectories of the first-order system `(x, y, vx, vy)`.
//!
//! Two methods are available: classical fixed-step RK4 and the embedded
//! Dormand–Prince 5(4) pair with a PI step-size controller. Output samples
//! are placed exactly on the requested times by clamping the step, so no
//! interpolation error enters the samples.
//!
//! Near a singularity of the right-hand side the adaptive method keeps
//! rejecting and shrinking steps: stages that fail to evaluate (a division
//! by an exactly zero coordinate, a domain error of `N`, `F`, `G`) count as
//! rejections, and a blow-up of the force drives the error estimate up. When
//! the step underflows the run stops and the trajectory is returned truncated
//! with [`StopReason::Singularity`]; it never steps across. Forms whose
//! right-hand side stays regular on an axis (e.g. `x'' = -x` written as the
//! conservative form with `N = u^-2/2`) are integrated through it.

use crate::dynamics::acceleration;
use crate::error::{Error, Result};
use crate::model::{CartesianState, SystemSpec};

const SAFETY: f64 = 0.9;
const MIN_FACTOR: f64 = 0.2;
const MAX_FACTOR: f64 = 5.0;
// PI controller exponents for a 5(4) pair.
const ALPHA: f64 = 0.17;
const BETA: f64 = 0.04;
const REJECT_SHRINK: f64 = 0.25;

pub const DEFAULT_MAX_STEPS: usize = 1_000_000;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Method {
    Rk4 { step: f64 },
    DormandPrince { rtol: f64, atol: f64 },
}

/// How to integrate and where to sample.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Control {
    pub method: Method,
    /// `None` records every accepted step.
    pub sample_interval: Option<f64>,
    pub max_steps: usize,
}

impl Control {
    pub fn rk4(step: f64) -> Self {
        Control {
            method: Method::Rk4 { step },
            sample_interval: None,
            max_steps: DEFAULT_MAX_STEPS,
        }
    }

    /// Dormand–Prince with equal relative and absolute tolerance.
    pub fn dp54(tol: f64) -> Self {
        Control {
            method: Method::DormandPrince {
                rtol: tol,
                atol: tol,
            },
            sample_interval: None,
            max_steps: DEFAULT_MAX_STEPS,
        }
    }

    pub fn with_sample_interval(mut self, dt: f64) -> Self {
        self.sample_interval = Some(dt);
        self
    }

    pub fn with_max_steps(mut self, n: usize) -> Self {
        self.max_steps = n;
        self
    }

    fn validate(&self) -> Result<()> {
        match self.method {
            Method::Rk4 { step } if !(step > 0.0 && step.is_finite()) => {
                return Err(Error::Precondition(format!(
                    "RK4 step must be positive, got {step}"
                )))
            }
            Method::DormandPrince { rtol, atol } if !(rtol > 0.0 && atol > 0.0) => {
                return Err(Error::Precondition(format!(
                    "tolerances must be positive, got rtol {rtol}, atol {atol}"
                )))
            }
            _ => {}
        }
        if let Some(dt) = self.sample_interval {
            if !(dt > 0.0 && dt.is_finite()) {
                return Err(Error::Precondition(format!(
                    "sample interval must be positive, got {dt}"
                )));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Stats {
    pub accepted: usize,
    pub rejected: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub enum StopReason {
    Completed,
    /// The run was cut short in front of a singular surface; the last sample
    /// is the last good state.
    Singularity {
        reason: String,
    },
}

/// Time-ordered samples of one integration run.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    spec: SystemSpec,
    samples: Vec<CartesianState>,
    method: Method,
    stats: Stats,
    stop: StopReason,
}

impl Trajectory {
    /// Wraps externally produced samples (e.g. read back from a file).
    pub fn from_samples(
        spec: SystemSpec,
        samples: Vec<CartesianState>,
        method: Method,
    ) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::Precondition("trajectory has no samples".into()));
        }
        if let Some(w) = samples.windows(2).find(|w| !(w[1].time > w[0].time)) {
            return Err(Error::Precondition(format!(
                "sample times must increase strictly ({} then {})",
                w[0].time, w[1].time
            )));
        }
        Ok(Trajectory {
            spec,
            samples,
            method,
            stats: Stats::default(),
            stop: StopReason::Completed,
        })
    }

    pub(crate) fn with_parts(
        spec: SystemSpec,
        samples: Vec<CartesianState>,
        method: Method,
        stats: Stats,
        stop: StopReason,
    ) -> Self {
        Trajectory {
            spec,
            samples,
            method,
            stats,
            stop,
        }
    }

    pub fn spec(&self) -> &SystemSpec {
        &self.spec
    }

    pub fn samples(&self) -> &[CartesianState] {
        &self.samples
    }

    pub fn first(&self) -> &CartesianState {
        &self.samples[0]
    }

    pub fn last(&self) -> &CartesianState {
        self.samples.last().expect("trajectory is never empty")
    }

    pub fn method(&self) -> Method {
        self.method
    }

    pub fn stats(&self) -> Stats {
        self.stats
    }

    pub fn stop(&self) -> &StopReason {
        &self.stop
    }

    pub fn is_complete(&self) -> bool {
        self.stop == StopReason::Completed
    }
}

/// First-order system driven by the engine.
pub(crate) trait OdeSystem<const N: usize> {
    fn rhs(&self, t: f64, q: &[f64; N]) -> Result<[f64; N]>;
    /// `false` if moving from `from` to `to` crosses a forbidden surface.
    fn admissible(&self, from: &[f64; N], to: &[f64; N]) -> bool;
}

/// `b` is nonzero and has the sign of `a`.
pub(crate) fn sign_kept(a: f64, b: f64) -> bool {
    b != 0.0 && (a > 0.0) == (b > 0.0)
}

struct ErmakovOde<'a> {
    spec: &'a SystemSpec,
}

impl OdeSystem<4> for ErmakovOde<'_> {
    fn rhs(&self, t: f64, q: &[f64; 4]) -> Result<[f64; 4]> {
        let (ax, ay) = acceleration(self.spec, &CartesianState::from_array(t, *q))?;
        Ok([q[2], q[3], ax, ay])
    }

    fn admissible(&self, _from: &[f64; 4], to: &[f64; 4]) -> bool {
        to.iter().all(|v| v.is_finite())
    }
}

pub(crate) struct RawRun<const N: usize> {
    pub times: Vec<f64>,
    pub states: Vec<[f64; N]>,
    pub stats: Stats,
    pub stop: StopReason,
    /// Size of the step that could not be completed, when stopped early.
    pub failed_step: Option<f64>,
}

fn axpy<const N: usize>(q: &[f64; N], h: f64, terms: &[(f64, &[f64; N])]) -> [f64; N] {
    let mut out = *q;
    for (i, o) in out.iter_mut().enumerate() {
        let incr: f64 = terms.iter().map(|(c, k)| c * k[i]).sum();
        *o += h * incr;
    }
    out
}

fn rk4_step<S: OdeSystem<N>, const N: usize>(
    sys: &S,
    t: f64,
    q: &[f64; N],
    h: f64,
) -> Result<[f64; N]> {
    let k1 = sys.rhs(t, q)?;
    let k2 = sys.rhs(t + 0.5 * h, &axpy(q, 0.5 * h, &[(1.0, &k1)]))?;
    let k3 = sys.rhs(t + 0.5 * h, &axpy(q, 0.5 * h, &[(1.0, &k2)]))?;
    let k4 = sys.rhs(t + h, &axpy(q, h, &[(1.0, &k3)]))?;
    Ok(axpy(
        q,
        h / 6.0,
        &[(1.0, &k1), (2.0, &k2), (2.0, &k3), (1.0, &k4)],
    ))
}

struct DpStep<const N: usize> {
    q: [f64; N],
    k_last: [f64; N],
    error: [f64; N],
}

fn dp_step<S: OdeSystem<N>, const N: usize>(
    sys: &S,
    t: f64,
    q: &[f64; N],
    k1: &[f64; N],
    h: f64,
) -> Result<DpStep<N>> {
    let k2 = sys.rhs(t + h / 5.0, &axpy(q, h, &[(1.0 / 5.0, k1)]))?;
    let k3 = sys.rhs(
        t + 3.0 * h / 10.0,
        &axpy(q, h, &[(3.0 / 40.0, k1), (9.0 / 40.0, &k2)]),
    )?;
    let k4 = sys.rhs(
        t + 4.0 * h / 5.0,
        &axpy(
            q,
            h,
            &[(44.0 / 45.0, k1), (-56.0 / 15.0, &k2), (32.0 / 9.0, &k3)],
        ),
    )?;
    let k5 = sys.rhs(
        t + 8.0 * h / 9.0,
        &axpy(
            q,
            h,
            &[
                (19372.0 / 6561.0, k1),
                (-25360.0 / 2187.0, &k2),
                (64448.0 / 6561.0, &k3),
                (-212.0 / 729.0, &k4),
            ],
        ),
    )?;
    let k6 = sys.rhs(
        t + h,
        &axpy(
            q,
            h,
            &[
                (9017.0 / 3168.0, k1),
                (-355.0 / 33.0, &k2),
                (46732.0 / 5247.0, &k3),
                (49.0 / 176.0, &k4),
                (-5103.0 / 18656.0, &k5),
            ],
        ),
    )?;
    let q_new = axpy(
        q,
        h,
        &[
            (35.0 / 384.0, k1),
            (500.0 / 1113.0, &k3),
            (125.0 / 192.0, &k4),
            (-2187.0 / 6784.0, &k5),
            (11.0 / 84.0, &k6),
        ],
    );
    let k7 = sys.rhs(t + h, &q_new)?;
    let error = axpy(
        &[0.0; N],
        h,
        &[
            (71.0 / 57600.0, k1),
            (-71.0 / 16695.0, &k3),
            (71.0 / 1920.0, &k4),
            (-17253.0 / 339200.0, &k5),
            (22.0 / 525.0, &k6),
            (-1.0 / 40.0, &k7),
        ],
    );
    Ok(DpStep {
        q: q_new,
        k_last: k7,
        error,
    })
}

/// Weighted RMS with per-component scale `atol + rtol * max(|q|, |q_new|)`.
fn error_norm<const N: usize>(
    err: &[f64; N],
    q: &[f64; N],
    q_new: &[f64; N],
    rtol: f64,
    atol: f64,
) -> f64 {
    let sum: f64 = (0..N)
        .map(|i| {
            let scale = atol + rtol * q[i].abs().max(q_new[i].abs());
            (err[i] / scale).powi(2)
        })
        .sum();
    (sum / N as f64).sqrt()
}

fn rms<const N: usize>(v: &[f64; N], scale: &[f64; N]) -> f64 {
    let sum: f64 = v.iter().zip(scale).map(|(a, s)| (a / s).powi(2)).sum();
    (sum / N as f64).sqrt()
}

fn initial_step<S: OdeSystem<N>, const N: usize>(
    sys: &S,
    t: f64,
    q: &[f64; N],
    k1: &[f64; N],
    rtol: f64,
    atol: f64,
    span: f64,
) -> f64 {
    let scale = q.map(|v| atol + rtol * v.abs());
    let d0 = rms(q, &scale);
    let d1 = rms(k1, &scale);
    let h0 = if d0 < 1e-5 || d1 < 1e-5 {
        1e-6
    } else {
        0.01 * d0 / d1
    };
    let h0 = h0.min(span);
    let probe = axpy(q, h0, &[(1.0, k1)]);
    let d2 = match sys.rhs(t + h0, &probe) {
        Ok(k) => {
            let diff: [f64; N] = std::array::from_fn(|i| k[i] - k1[i]);
            rms(&diff, &scale) / h0
        }
        Err(_) => return h0,
    };
    let h1 = if d1.max(d2) <= 1e-15 {
        (h0 * 1e-3).max(1e-6)
    } else {
        (0.01 / d1.max(d2)).powf(0.2)
    };
    (100.0 * h0).min(h1).min(span)
}

fn underflow(h: f64, t: f64) -> bool {
    h <= 16.0 * f64::EPSILON * t.abs().max(1.0)
}

/// Drives `sys` from `t0` through every time in `outputs` (strictly
/// increasing, all `> t0`), sampling exactly there. With `every_step`, the
/// accepted step endpoints are recorded too.
pub(crate) fn run<S: OdeSystem<N>, const N: usize>(
    sys: &S,
    t0: f64,
    q0: [f64; N],
    outputs: &[f64],
    control: &Control,
    every_step: bool,
) -> Result<RawRun<N>> {
    control.validate()?;
    let mut times = vec![t0];
    let mut states = vec![q0];
    let mut stats = Stats::default();
    let mut t = t0;
    let mut q = q0;
    let Some(&t_end) = outputs.last() else {
        return Ok(RawRun {
            times,
            states,
            stats,
            stop: StopReason::Completed,
            failed_step: None,
        });
    };
    let mut next = 0;
    let stopped = |times: Vec<f64>, states, stats, reason: String, h: f64| RawRun {
        times,
        states,
        stats,
        stop: StopReason::Singularity { reason },
        failed_step: Some(h),
    };

    match control.method {
        Method::Rk4 { step } => {
            while next < outputs.len() {
                if stats.accepted + stats.rejected >= control.max_steps {
                    return Err(max_steps_error(control, t));
                }
                let target = outputs[next];
                let remaining = target - t;
                let clamped = remaining <= step * (1.0 + 1e-6);
                let h = if clamped { remaining } else { step };
                let q_new = match rk4_step(sys, t, &q, h) {
                    Ok(q_new) if sys.admissible(&q, &q_new) => q_new,
                    Ok(_) => {
                        return Ok(stopped(
                            times,
                            states,
                            stats,
                            "step leaves the admissible region".into(),
                            h,
                        ))
                    }
                    Err(e) => return Ok(stopped(times, states, stats, e.to_string(), h)),
                };
                stats.accepted += 1;
                t = if clamped { target } else { t + h };
                q = q_new;
                if clamped {
                    next += 1;
                }
                if clamped || every_step {
                    times.push(t);
                    states.push(q);
                }
            }
        }
        Method::DormandPrince { rtol, atol } => {
            let mut k1 = sys.rhs(t, &q)?;
            let mut h = initial_step(sys, t, &q, &k1, rtol, atol, t_end - t0);
            let mut err_prev: f64 = 1e-4;
            while next < outputs.len() {
                if stats.accepted + stats.rejected >= control.max_steps {
                    return Err(max_steps_error(control, t));
                }
                let target = outputs[next];
                let remaining = target - t;
                let clamped = h >= remaining;
                let h_try = if clamped { remaining } else { h };
                let attempt = dp_step(sys, t, &q, &k1, h_try);
                let (accepted, err) = match &attempt {
                    Ok(step) if sys.admissible(&q, &step.q) => {
                        let err = error_norm(&step.error, &q, &step.q, rtol, atol);
                        (err <= 1.0, err)
                    }
                    _ => (false, f64::INFINITY),
                };
                if accepted {
                    let step = attempt.expect("accepted step is Ok");
                    stats.accepted += 1;
                    t = if clamped { target } else { t + h_try };
                    q = step.q;
                    k1 = step.k_last;
                    if clamped {
                        next += 1;
                    }
                    if clamped || every_step {
                        times.push(t);
                        states.push(q);
                    }
                    let factor = if err == 0.0 {
                        MAX_FACTOR
                    } else {
                        (SAFETY * err.powf(-ALPHA) * err_prev.powf(BETA))
                            .clamp(MIN_FACTOR, MAX_FACTOR)
                    };
                    err_prev = err.max(1e-4);
                    let proposal = h_try * factor;
                    h = if clamped { proposal.max(h) } else { proposal };
                } else {
                    stats.rejected += 1;
                    h = if err.is_finite() {
                        h_try * (SAFETY * err.powf(-0.2)).clamp(MIN_FACTOR, 1.0)
                    } else {
                        h_try * REJECT_SHRINK
                    };
                    if underflow(h, t) {
                        let reason = match attempt {
                            Err(e) => format!("step size underflow: {e}"),
                            Ok(_) if err.is_finite() => {
                                "step size underflow: error control cannot be met".into()
                            }
                            Ok(_) => {
                                "step size underflow: step leaves the admissible region".into()
                            }
                        };
                        return Ok(stopped(times, states, stats, reason, h_try));
                    }
                }
            }
        }
    }
    Ok(RawRun {
        times,
        states,
        stats,
        stop: StopReason::Completed,
        failed_step: None,
    })
}

fn max_steps_error(control: &Control, t: f64) -> Error {
    Error::MaxSteps {
        limit: control.max_steps,
        time: t,
    }
}

/// Output grid `t0 + k dt` (strictly below `t_end`) followed by `t_end`.
pub(crate) fn output_grid(t0: f64, t_end: f64, sample_interval: Option<f64>) -> Vec<f64> {
    let Some(dt) = sample_interval else {
        return vec![t_end];
    };
    let mut out = Vec::new();
    let mut k = 1u64;
    loop {
        let t = t0 + k as f64 * dt;
        // Merge a sample that would sit within a hair of t_end.
        if t >= t_end - 1e-9 * dt {
            break;
        }
        out.push(t);
        k += 1;
    }
    out.push(t_end);
    out
}

/// One classical RK4 step of size `h` (negative steps integrate backwards).
pub fn step_rk4(spec: &SystemSpec, s: &CartesianState, h: f64) -> Result<CartesianState> {
    if h == 0.0 || !h.is_finite() {
        return Err(Error::Precondition(format!(
            "step must be nonzero and finite, got {h}"
        )));
    }
    let sys = ErmakovOde { spec };
    let q = rk4_step(&sys, s.time, &s.to_array(), h)?;
    Ok(CartesianState::from_array(s.time + h, q))
}

fn check_start(spec: &SystemSpec, s0: &CartesianState) -> Result<()> {
    if ![s0.time, s0.x, s0.y, s0.vx, s0.vy]
        .iter()
        .all(|v| v.is_finite())
    {
        return Err(Error::Precondition("initial state must be finite".into()));
    }
    acceleration(spec, s0).map(|_| ())
}

/// Integrates from `s0` to `t_end`.
pub fn integrate(
    spec: &SystemSpec,
    s0: &CartesianState,
    t_end: f64,
    control: &Control,
) -> Result<Trajectory> {
    if !(t_end > s0.time) {
        return Err(Error::Precondition(format!(
            "t_end ({t_end}) must exceed the initial time ({})",
            s0.time
        )));
    }
    let outputs = output_grid(s0.time, t_end, control.sample_interval);
    integrate_impl(
        spec,
        s0,
        &outputs,
        control,
        control.sample_interval.is_none(),
    )
}

/// Integrates from `s0`, sampling exactly at each of `times` (strictly
/// increasing, all after `s0.time`).
pub fn integrate_at(
    spec: &SystemSpec,
    s0: &CartesianState,
    times: &[f64],
    control: &Control,
) -> Result<Trajectory> {
    let mut prev = s0.time;
    for &t in times {
        if !(t > prev) {
            return Err(Error::Precondition(format!(
                "sample times must increase strictly from the initial time ({prev} then {t})"
            )));
        }
        prev = t;
    }
    integrate_impl(spec, s0, times, control, false)
}

fn integrate_impl(
    spec: &SystemSpec,
    s0: &CartesianState,
    outputs: &[f64],
    control: &Control,
    every_step: bool,
) -> Result<Trajectory> {
    check_start(spec, s0)?;
    let sys = ErmakovOde { spec };
    let raw = run(&sys, s0.time, s0.to_array(), outputs, control, every_step)?;
    let samples = raw
        .times
        .iter()
        .zip(&raw.states)
        .map(|(&t, q)| CartesianState::from_array(t, *q))
        .collect();
    Ok(Trajectory::with_parts(
        spec.clone(),
        samples,
        control.method,
        raw.stats,
        raw.stop,
    ))
}
