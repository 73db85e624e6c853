//! First integrals of the system and their conservation along trajectories.
//!
//! The Ermakov integral is `I0 = L^2/2 + (1 + u^2) N(u)` for the conservative
//! form, with `L = x vy - y vx`. The antiderivative is fixed so that
//! `4 H I3 - I2^2 = 2 I0` holds exactly. The other forms use a quadrature of
//! `u F - u^-3 G` (normalized) or of `f` and `g` (general) from a reference
//! point, so only their drift is meaningful.
//!
//! `H`, `I2` and `I3` exist only for autonomous conservative specs. `I2` and
//! `I3` read the autonomous time from `s.time`.

use std::fmt;
use std::str::FromStr;

use nalgebra::SMatrix;

use crate::dynamics::{potential_value, ErmakovPotential};
use crate::error::{Error, Result};
use crate::integrate::Trajectory;
use crate::model::{CartesianState, SystemForm, SystemSpec};
use crate::noether::{self, SymmetryVector};
use crate::numdiff;

/// Default reference point of the quadrature forms of `I0`.
pub const DEFAULT_U_REF: f64 = 1.0;
/// Absolute tolerance of the quadratures inside `I0`.
pub const I0_QUAD_TOL: f64 = 1e-12;
/// Singular values below this fraction of the largest count as zero.
pub const RANK_THRESHOLD: f64 = 1e-6;

pub fn angular_momentum(s: &CartesianState) -> f64 {
    s.x * s.vy - s.y * s.vx
}

fn ratio(s: &CartesianState) -> Result<f64> {
    if s.x == 0.0 {
        return Err(Error::Singular {
            reason: "u = y/x undefined at x = 0",
            state: *s,
        });
    }
    Ok(s.y / s.x)
}

/// The Ermakov integral with the default quadrature reference.
pub fn ermakov_i0(spec: &SystemSpec, s: &CartesianState) -> Result<f64> {
    ermakov_i0_with_reference(spec, s, DEFAULT_U_REF)
}

/// The Ermakov integral with quadratures anchored at `u_ref` (at `1/u_ref`
/// for the `g` term of the general form). The conservative form ignores
/// `u_ref`.
///
/// The integrands are singular at `u = 0`, so when `u` and `u_ref` have
/// opposite signs the reference is mirrored to `-u_ref`.
pub fn ermakov_i0_with_reference(spec: &SystemSpec, s: &CartesianState, u_ref: f64) -> Result<f64> {
    let u = ratio(s)?;
    let l = angular_momentum(s);
    let kinetic = 0.5 * l * l;
    match spec.form() {
        SystemForm::Conservative { n } => Ok(kinetic + (1.0 + u * u) * n.evaluate(u)?),
        SystemForm::Normalized { .. } | SystemForm::General { .. } => {
            if !(u_ref.is_finite() && u_ref != 0.0) {
                return Err(Error::Precondition(format!(
                    "quadrature reference must be finite and nonzero, got {u_ref}"
                )));
            }
            if u == 0.0 {
                return Err(Error::Singular {
                    reason: "Ermakov integral singular at u = 0",
                    state: *s,
                });
            }
            let a = u_ref.abs().copysign(u);
            let integral = match spec.form() {
                SystemForm::General { f, g } => {
                    f.quad_integral(a, u, I0_QUAD_TOL)?
                        + g.quad_integral(1.0 / a, 1.0 / u, I0_QUAD_TOL)?
                }
                _ => {
                    let (big_f, big_g) = spec.normalized_pair();
                    crate::quad::integrate(
                        |w| -> Result<f64> {
                            Ok(w * big_f.evaluate(w)? - big_g.evaluate(w)? / (w * w * w))
                        },
                        a,
                        u,
                        I0_QUAD_TOL,
                    )?
                }
            };
            Ok(kinetic + integral)
        }
    }
}

/// `L^2/2 + (x/y)^2/2`; equals the anchored `I0` of `N = u^-2/2` minus 1/2.
pub fn lewis_invariant(s: &CartesianState) -> Result<f64> {
    if s.y == 0.0 {
        return Err(Error::Singular {
            reason: "Lewis invariant undefined at y = 0",
            state: *s,
        });
    }
    let l = angular_momentum(s);
    let q = s.x / s.y;
    Ok(0.5 * l * l + 0.5 * q * q)
}

fn conservative_potential(spec: &SystemSpec) -> Result<&crate::expr::Expression> {
    let n = spec.potential_function().ok_or(Error::NotConservative)?;
    if !spec.is_autonomous() {
        return Err(Error::TimeDependent);
    }
    Ok(n)
}

/// `H = (vx^2 + vy^2)/2 + N(y/x)/x^2`.
pub fn hamiltonian(spec: &SystemSpec, s: &CartesianState) -> Result<f64> {
    let n = conservative_potential(spec)?;
    Ok(0.5 * (s.vx * s.vx + s.vy * s.vy) + potential_value(n, s.x, s.y)?)
}

/// `I2 = 2 T H - (x vx + y vy)`.
pub fn fi_i2(spec: &SystemSpec, s: &CartesianState) -> Result<f64> {
    let h = hamiltonian(spec, s)?;
    Ok(2.0 * s.time * h - (s.x * s.vx + s.y * s.vy))
}

/// `I3 = T^2 H - T (x vx + y vy) + (x^2 + y^2)/2`.
pub fn fi_i3(spec: &SystemSpec, s: &CartesianState) -> Result<f64> {
    let h = hamiltonian(spec, s)?;
    let t = s.time;
    Ok(t * t * h - t * (s.x * s.vx + s.y * s.vy) + 0.5 * (s.x * s.x + s.y * s.y))
}

/// `|I3 - (I2^2 + 2 I0) / (4 H)|` for the anchored `I0`.
pub fn check_i3_relation(h: f64, i0: f64, i2: f64, i3: f64) -> Result<f64> {
    if h == 0.0 {
        return Err(Error::ZeroHamiltonian);
    }
    Ok((i3 - (i2 * i2 + 2.0 * i0) / (4.0 * h)).abs())
}

/// The linear and quadratic integrals `I21 = b1 vx + b2 vy` and
/// `I31 = b1 (x - T vx) + b2 (y - T vy)` of a potential invariant under the
/// translation `b1 dX + b2 dY`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GradientKvIntegrals {
    b1: f64,
    b2: f64,
}

impl GradientKvIntegrals {
    /// Verifies the case-2 condition for `b1 dX + b2 dY` on the default grid.
    pub fn new(spec: &SystemSpec, b1: f64, b2: f64) -> Result<Self> {
        let n = conservative_potential(spec)?;
        let vector = SymmetryVector::gradient_kv(b1, b2);
        let check = noether::check_case2(
            &ErmakovPotential::new(n.clone()),
            &vector,
            &noether::default_grid(),
            noether::DEFAULT_TOLERANCE,
        )?;
        if !check.passes {
            return Err(Error::NoetherCondition {
                condition: "case 2 (B . grad V constant)",
                vector: vector.name,
                residual: check.max_residual,
            });
        }
        Ok(GradientKvIntegrals { b1, b2 })
    }

    pub fn evaluate(&self, s: &CartesianState) -> (f64, f64) {
        let (b1, b2, t) = (self.b1, self.b2, s.time);
        let i21 = b1 * s.vx + b2 * s.vy;
        let i31 = b1 * (s.x - t * s.vx) + b2 * (s.y - t * s.vy);
        (i21, i31)
    }
}

/// `(I21, I31)` at one state; checks the symmetry condition first.
pub fn fi_gradient_kv(
    b1: f64,
    b2: f64,
    spec: &SystemSpec,
    s: &CartesianState,
) -> Result<(f64, f64)> {
    Ok(GradientKvIntegrals::new(spec, b1, b2)?.evaluate(s))
}

/// A first integral selectable by name.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Invariant {
    Hamiltonian,
    Ermakov,
    I2,
    I3,
    AngularMomentum,
    Lewis,
    I21,
    I31,
}

impl Invariant {
    pub const ALL: [Invariant; 8] = [
        Invariant::Hamiltonian,
        Invariant::Ermakov,
        Invariant::I2,
        Invariant::I3,
        Invariant::AngularMomentum,
        Invariant::Lewis,
        Invariant::I21,
        Invariant::I31,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Invariant::Hamiltonian => "H",
            Invariant::Ermakov => "I0",
            Invariant::I2 => "I2",
            Invariant::I3 => "I3",
            Invariant::AngularMomentum => "L",
            Invariant::Lewis => "Lewis",
            Invariant::I21 => "I21",
            Invariant::I31 => "I31",
        }
    }
}

impl fmt::Display for Invariant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Invariant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Invariant::ALL
            .into_iter()
            .find(|i| i.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::UnknownInvariant(s.to_string()))
    }
}

/// Evaluates a fixed set of invariants on states of one spec.
///
/// Construction fails when an invariant is undefined for the spec, so a
/// report never stops halfway through a trajectory for that reason.
#[derive(Debug, Clone)]
pub struct InvariantSet {
    spec: SystemSpec,
    which: Vec<Invariant>,
    gradient_kv: Option<GradientKvIntegrals>,
}

impl InvariantSet {
    /// `gradient_kv` supplies `(b1, b2)` for `I21` and `I31`.
    pub fn new(
        spec: &SystemSpec,
        which: &[Invariant],
        gradient_kv: Option<(f64, f64)>,
    ) -> Result<Self> {
        let mut kv = None;
        for &inv in which {
            match inv {
                Invariant::Hamiltonian | Invariant::I2 | Invariant::I3 => {
                    conservative_potential(spec)?;
                }
                Invariant::I21 | Invariant::I31 if kv.is_none() => {
                    let (b1, b2) = gradient_kv.ok_or_else(|| {
                        Error::Precondition(format!("{inv} needs the translation (b1, b2)"))
                    })?;
                    kv = Some(GradientKvIntegrals::new(spec, b1, b2)?);
                }
                _ => {}
            }
        }
        Ok(InvariantSet {
            spec: spec.clone(),
            which: which.to_vec(),
            gradient_kv: kv,
        })
    }

    pub fn invariants(&self) -> &[Invariant] {
        &self.which
    }

    pub fn evaluate_one(&self, inv: Invariant, s: &CartesianState) -> Result<f64> {
        match inv {
            Invariant::Hamiltonian => hamiltonian(&self.spec, s),
            Invariant::Ermakov => ermakov_i0(&self.spec, s),
            Invariant::I2 => fi_i2(&self.spec, s),
            Invariant::I3 => fi_i3(&self.spec, s),
            Invariant::AngularMomentum => Ok(angular_momentum(s)),
            Invariant::Lewis => lewis_invariant(s),
            Invariant::I21 | Invariant::I31 => {
                let (i21, i31) = self
                    .gradient_kv
                    .as_ref()
                    .expect("checked at construction")
                    .evaluate(s);
                Ok(if inv == Invariant::I21 { i21 } else { i31 })
            }
        }
    }

    /// Values in the order of [`InvariantSet::invariants`].
    pub fn evaluate(&self, s: &CartesianState) -> Result<Vec<f64>> {
        self.which
            .iter()
            .map(|&inv| self.evaluate_one(inv, s))
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct InvariantSeries {
    pub invariant: Invariant,
    pub values: Vec<f64>,
    pub reference: f64,
    pub max_abs_drift: f64,
    /// Against `max(|reference|, 1)`.
    pub max_rel_drift: f64,
    pub passes: bool,
}

impl InvariantSeries {
    pub fn from_values(invariant: Invariant, values: Vec<f64>, tolerance: f64) -> Self {
        let reference = values.first().copied().unwrap_or(0.0);
        let max_abs_drift = values
            .iter()
            .map(|v| (v - reference).abs())
            .fold(0.0, f64::max);
        let max_rel_drift = max_abs_drift / reference.abs().max(1.0);
        InvariantSeries {
            invariant,
            values,
            reference,
            max_abs_drift,
            max_rel_drift,
            passes: max_rel_drift <= tolerance,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct InvariantReport {
    pub series: Vec<InvariantSeries>,
    pub tolerance: f64,
    pub passes: bool,
}

impl InvariantReport {
    pub fn get(&self, invariant: Invariant) -> Option<&InvariantSeries> {
        self.series.iter().find(|s| s.invariant == invariant)
    }
}

/// Evaluates `which` at every sample of `traj` and measures drift from the
/// first sample.
pub fn drift_report(
    traj: &Trajectory,
    which: &[Invariant],
    tolerance: f64,
) -> Result<InvariantReport> {
    drift_report_with(
        traj,
        &InvariantSet::new(traj.spec(), which, None)?,
        tolerance,
    )
}

/// As [`drift_report`] with a prepared [`InvariantSet`].
pub fn drift_report_with(
    traj: &Trajectory,
    set: &InvariantSet,
    tolerance: f64,
) -> Result<InvariantReport> {
    let mut columns = vec![Vec::with_capacity(traj.samples().len()); set.invariants().len()];
    for s in traj.samples() {
        for (column, value) in columns.iter_mut().zip(set.evaluate(s)?) {
            column.push(value);
        }
    }
    let series: Vec<InvariantSeries> = set
        .invariants()
        .iter()
        .zip(columns)
        .map(|(&inv, values)| InvariantSeries::from_values(inv, values, tolerance))
        .collect();
    let passes = series.iter().all(|s| s.passes);
    Ok(InvariantReport {
        series,
        tolerance,
        passes,
    })
}

/// Singular values of the Jacobian of `(H, I0, I2)` with respect to
/// `(x, y, vx, vy)` and the resulting numerical rank.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Independence {
    pub singular_values: [f64; 3],
    pub rank: usize,
}

/// Functional independence of `H`, `I0` and `I2` at `s`, by finite
/// differences.
pub fn independence(spec: &SystemSpec, s: &CartesianState) -> Result<Independence> {
    conservative_potential(spec)?;
    let integrals: [fn(&SystemSpec, &CartesianState) -> Result<f64>; 3] =
        [hamiltonian, ermakov_i0, fi_i2];
    let base = [s.x, s.y, s.vx, s.vy];
    let mut jac = SMatrix::<f64, 3, 4>::zeros();
    for (row, integral) in integrals.iter().enumerate() {
        for col in 0..4 {
            jac[(row, col)] = numdiff::richardson(
                |z| {
                    let mut q = base;
                    q[col] = z;
                    integral(spec, &CartesianState::new(s.time, q[0], q[1], q[2], q[3]))
                },
                base[col],
                numdiff::DEFAULT_STEP,
            )?;
        }
    }
    let sv = jac.svd(false, false).singular_values;
    let mut singular_values = [sv[0], sv[1], sv[2]];
    singular_values.sort_by(|a, b| b.total_cmp(a));
    let largest = singular_values[0];
    let rank = singular_values
        .iter()
        .filter(|&&v| largest > 0.0 && v > RANK_THRESHOLD * largest)
        .count();
    Ok(Independence {
        singular_values,
        rank,
    })
}
