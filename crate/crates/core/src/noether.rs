//! Noether point symmetries of autonomous conservative systems on the flat
//! plane.
//!
//! Generators are drawn from the homothetic algebra of the Euclidean metric:
//! the translations `dX`, `dY` (gradient Killing vectors), the rotation
//! `Y dX - X dY` (non-gradient Killing vector) and the dilation
//! `X dX + Y dY` (gradient homothetic vector, factor 1).
//!
//! For a vector `B` with homothety factor `psi` the scan checks two
//! conditions on the potential `V` over a sample grid:
//!
//! * case 2: `B . grad V + 2 psi V = -c1` for a constant `c1`; the first
//!   integral is `2 psi t H - B . v + c1 t`;
//! * case 3 (gradient `B = grad Phi`): `grad Phi . grad V + 2 psi V = c2 Phi + c3`;
//!   with `C'' = -c2 C` the first integral is
//!   `2 psi H int(C) - C grad Phi . v + C' Phi - c3 int(C)`.
//!
//! Conditions are checked numerically, with `grad V` from Richardson
//! extrapolated central differences, so arbitrary user potentials are covered.

use std::fmt;
use std::sync::Arc;

use crate::dynamics::{potential_gradient, Potential};
use crate::error::{Error, Result};
use crate::model::CartesianState;

/// Pass/fail threshold on the grid residuals.
pub const DEFAULT_TOLERANCE: f64 = 1e-8;
/// Minimum number of grid points accepted by the checks.
pub const MIN_GRID_POINTS: usize = 8;

/// A component of a generator: one of `c`, `X`, `Y`, `-X`, `-Y`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Component {
    Const(f64),
    X,
    Y,
    NegX,
    NegY,
}

impl Component {
    pub fn at(self, x: f64, y: f64) -> f64 {
        match self {
            Component::Const(c) => c,
            Component::X => x,
            Component::Y => y,
            Component::NegX => -x,
            Component::NegY => -y,
        }
    }
}

impl fmt::Display for Component {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Component::Const(c) => write!(f, "{c}"),
            Component::X => f.write_str("X"),
            Component::Y => f.write_str("Y"),
            Component::NegX => f.write_str("-X"),
            Component::NegY => f.write_str("-Y"),
        }
    }
}

/// Scalar `Phi` whose gradient is a gradient generator.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum GradientPotential {
    /// `a X + b Y`
    Linear { a: f64, b: f64 },
    /// `(X^2 + Y^2) / 2`
    HalfSquaredRadius,
}

impl GradientPotential {
    pub fn value(self, x: f64, y: f64) -> f64 {
        match self {
            GradientPotential::Linear { a, b } => a * x + b * y,
            GradientPotential::HalfSquaredRadius => 0.5 * (x * x + y * y),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SymmetryVector {
    pub name: String,
    pub components: (Component, Component),
    /// 0 for a Killing vector, 1 for the homothetic vector.
    pub psi: f64,
    /// Present iff the vector is a gradient.
    pub potential: Option<GradientPotential>,
}

impl SymmetryVector {
    pub fn translation_x() -> Self {
        SymmetryVector {
            name: "dX".into(),
            components: (Component::Const(1.0), Component::Const(0.0)),
            psi: 0.0,
            potential: Some(GradientPotential::Linear { a: 1.0, b: 0.0 }),
        }
    }

    pub fn translation_y() -> Self {
        SymmetryVector {
            name: "dY".into(),
            components: (Component::Const(0.0), Component::Const(1.0)),
            psi: 0.0,
            potential: Some(GradientPotential::Linear { a: 0.0, b: 1.0 }),
        }
    }

    /// `Y dX - X dY`.
    pub fn rotation() -> Self {
        SymmetryVector {
            name: "rotation".into(),
            components: (Component::Y, Component::NegX),
            psi: 0.0,
            potential: None,
        }
    }

    /// `X dX + Y dY`.
    pub fn dilation() -> Self {
        SymmetryVector {
            name: "dilation".into(),
            components: (Component::X, Component::Y),
            psi: 1.0,
            potential: Some(GradientPotential::HalfSquaredRadius),
        }
    }

    /// `b1 dX + b2 dY`.
    pub fn gradient_kv(b1: f64, b2: f64) -> Self {
        SymmetryVector {
            name: format!("{b1}*dX+{b2}*dY"),
            components: (Component::Const(b1), Component::Const(b2)),
            psi: 0.0,
            potential: Some(GradientPotential::Linear { a: b1, b: b2 }),
        }
    }

    pub fn at(&self, x: f64, y: f64) -> (f64, f64) {
        (self.components.0.at(x, y), self.components.1.at(x, y))
    }

    pub fn is_gradient(&self) -> bool {
        self.potential.is_some()
    }
}

/// The homothetic algebra of the flat 2d metric: `dX`, `dY`, the rotation
/// and the dilation.
pub fn homothetic_algebra() -> Vec<SymmetryVector> {
    vec![
        SymmetryVector::translation_x(),
        SymmetryVector::translation_y(),
        SymmetryVector::rotation(),
        SymmetryVector::dilation(),
    ]
}

/// 25 points in `[0.5, 2] x [-2, 2]`. The `Y` levels avoid the axis and
/// stay clear of the lines `2Y = X` on which common test potentials blow up.
pub fn default_grid() -> Vec<(f64, f64)> {
    const XS: [f64; 5] = [0.5, 0.875, 1.25, 1.625, 2.0];
    const YS: [f64; 5] = [-1.8, -1.0, -0.4, 1.2, 1.9];
    XS.iter()
        .flat_map(|&x| YS.iter().map(move |&y| (x, y)))
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum FittedConstants {
    Case2 { c1: f64 },
    Case3 { c2: f64, c3: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConditionResult {
    pub passes: bool,
    pub constants: FittedConstants,
    pub max_residual: f64,
    pub tolerance: f64,
}

fn check_grid(grid: &[(f64, f64)]) -> Result<()> {
    if grid.len() < MIN_GRID_POINTS {
        return Err(Error::Precondition(format!(
            "condition grid needs at least {MIN_GRID_POINTS} points, got {}",
            grid.len()
        )));
    }
    if let Some(p) = grid.iter().find(|p| p.0 == 0.0) {
        return Err(Error::Precondition(format!(
            "grid point {p:?} lies on X = 0"
        )));
    }
    Ok(())
}

/// `grad Phi . grad V + 2 psi V` at every grid point (with `B` in place of
/// `grad Phi` for non-gradient vectors).
fn condition_lhs(v: &dyn Potential, b: &SymmetryVector, grid: &[(f64, f64)]) -> Result<Vec<f64>> {
    grid.iter()
        .map(|&(x, y)| {
            let (vx, vy) = potential_gradient(v, x, y)?;
            let (bx, by) = b.at(x, y);
            let mut e = bx * vx + by * vy;
            if b.psi != 0.0 {
                e += 2.0 * b.psi * v.value(x, y)?;
            }
            Ok(e)
        })
        .collect()
}

/// Case 2: `B . grad V + 2 psi V` must be the same constant `-c1` on the grid.
pub fn check_case2(
    v: &dyn Potential,
    b: &SymmetryVector,
    grid: &[(f64, f64)],
    tolerance: f64,
) -> Result<ConditionResult> {
    check_grid(grid)?;
    let e = condition_lhs(v, b, grid)?;
    let mean = e.iter().sum::<f64>() / e.len() as f64;
    let max_residual = e.iter().map(|v| (v - mean).abs()).fold(0.0, f64::max);
    Ok(ConditionResult {
        passes: max_residual <= tolerance,
        constants: FittedConstants::Case2 { c1: -mean },
        max_residual,
        tolerance,
    })
}

/// Case 3: least-squares fit of `grad Phi . grad V + 2 psi V = c2 Phi + c3`;
/// passes on the largest pointwise residual.
pub fn check_case3(
    v: &dyn Potential,
    s: &SymmetryVector,
    grid: &[(f64, f64)],
    tolerance: f64,
) -> Result<ConditionResult> {
    let Some(phi) = s.potential else {
        return Err(Error::Precondition(format!(
            "case 3 needs a gradient vector; `{}` is not one",
            s.name
        )));
    };
    check_grid(grid)?;
    let e = condition_lhs(v, s, grid)?;
    let phis: Vec<f64> = grid.iter().map(|&(x, y)| phi.value(x, y)).collect();
    let n = grid.len() as f64;
    let phi_mean = phis.iter().sum::<f64>() / n;
    let e_mean = e.iter().sum::<f64>() / n;
    let spread: f64 = phis.iter().map(|p| (p - phi_mean).powi(2)).sum();
    let scale = phis.iter().map(|p| p * p).sum::<f64>().max(1.0);
    if spread <= 1e-12 * scale {
        return Err(Error::DegenerateFit(format!(
            "Phi of `{}` is constant on the grid",
            s.name
        )));
    }
    let covariance: f64 = phis
        .iter()
        .zip(&e)
        .map(|(p, ev)| (p - phi_mean) * (ev - e_mean))
        .sum();
    let c2 = covariance / spread;
    let c3 = e_mean - c2 * phi_mean;
    let max_residual = phis
        .iter()
        .zip(&e)
        .map(|(p, ev)| (ev - c2 * p - c3).abs())
        .fold(0.0, f64::max);
    Ok(ConditionResult {
        passes: max_residual <= tolerance,
        constants: FittedConstants::Case3 { c2, c3 },
        max_residual,
        tolerance,
    })
}

/// Which of the two independent solutions of `C'' = -c2 C` to use.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Branch {
    /// `t` for `c2 = 0`, `cos kt` for `c2 = k^2`, `exp(kt)` for `c2 = -k^2`.
    #[default]
    Primary,
    /// `1` for `c2 = 0` (rejected, `C' = 0`), `sin kt`, `exp(-kt)`.
    Secondary,
}

/// The time factor `C(t)` of a case-3 generator.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TimeFactor {
    Linear,
    Cos(f64),
    Sin(f64),
    Grow(f64),
    Decay(f64),
}

impl TimeFactor {
    pub fn select(c2: f64, branch: Branch) -> Result<Self> {
        if c2 == 0.0 {
            return match branch {
                Branch::Primary => Ok(TimeFactor::Linear),
                Branch::Secondary => Err(Error::Precondition(
                    "C = 1 has C' = 0 identically; case 3 needs C' != 0".into(),
                )),
            };
        }
        let k = c2.abs().sqrt();
        Ok(match (c2 > 0.0, branch) {
            (true, Branch::Primary) => TimeFactor::Cos(k),
            (true, Branch::Secondary) => TimeFactor::Sin(k),
            (false, Branch::Primary) => TimeFactor::Grow(k),
            (false, Branch::Secondary) => TimeFactor::Decay(k),
        })
    }

    /// `(C, C', int C)` at `t`; the antiderivative has no added constant.
    pub fn eval(self, t: f64) -> (f64, f64, f64) {
        match self {
            TimeFactor::Linear => (t, 1.0, 0.5 * t * t),
            TimeFactor::Cos(k) => {
                let (s, c) = (k * t).sin_cos();
                (c, -k * s, s / k)
            }
            TimeFactor::Sin(k) => {
                let (s, c) = (k * t).sin_cos();
                (s, k * c, -c / k)
            }
            TimeFactor::Grow(k) => {
                let e = (k * t).exp();
                (e, k * e, e / k)
            }
            TimeFactor::Decay(k) => {
                let e = (-k * t).exp();
                (e, -k * e, -e / k)
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum NoetherCase {
    Case2 {
        c1: f64,
    },
    Case3 {
        c2: f64,
        c3: f64,
        factor: TimeFactor,
    },
}

/// First integral produced by a Noether point symmetry.
#[derive(Clone)]
pub struct NoetherIntegral {
    vector: SymmetryVector,
    case: NoetherCase,
    potential: Arc<dyn Potential>,
}

impl fmt::Debug for NoetherIntegral {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("NoetherIntegral")
            .field("vector", &self.vector)
            .field("case", &self.case)
            .finish_non_exhaustive()
    }
}

impl NoetherIntegral {
    pub fn vector(&self) -> &SymmetryVector {
        &self.vector
    }

    pub fn case(&self) -> NoetherCase {
        self.case
    }

    fn energy(&self, s: &CartesianState) -> Result<f64> {
        Ok(0.5 * (s.vx * s.vx + s.vy * s.vy) + self.potential.value(s.x, s.y)?)
    }

    /// Value on a state; `s.time` is the autonomous time.
    pub fn evaluate(&self, s: &CartesianState) -> Result<f64> {
        let t = s.time;
        let (bx, by) = self.vector.at(s.x, s.y);
        let momentum = bx * s.vx + by * s.vy;
        let psi = self.vector.psi;
        match self.case {
            NoetherCase::Case2 { c1 } => {
                let mut value = -momentum + c1 * t;
                if psi != 0.0 {
                    value += 2.0 * psi * t * self.energy(s)?;
                }
                Ok(value)
            }
            NoetherCase::Case3 { c3, factor, .. } => {
                let phi = self
                    .vector
                    .potential
                    .expect("case-3 integrals are built from gradient vectors")
                    .value(s.x, s.y);
                let (c, dc, int_c) = factor.eval(t);
                let mut value = -c * momentum + dc * phi - c3 * int_c;
                if psi != 0.0 {
                    value += 2.0 * psi * self.energy(s)? * int_c;
                }
                Ok(value)
            }
        }
    }
}

/// `I = 2 psi t H - B . v + c1 t`.
pub fn build_case2_fi(
    b: &SymmetryVector,
    c1: f64,
    potential: Arc<dyn Potential>,
) -> NoetherIntegral {
    NoetherIntegral {
        vector: b.clone(),
        case: NoetherCase::Case2 { c1 },
        potential,
    }
}

/// `I = 2 psi H int(C) - C grad Phi . v + C' Phi - c3 int(C)` with `C` the
/// chosen solution of `C'' = -c2 C`.
pub fn build_case3_fi(
    s: &SymmetryVector,
    c2: f64,
    c3: f64,
    branch: Branch,
    potential: Arc<dyn Potential>,
) -> Result<NoetherIntegral> {
    if !s.is_gradient() {
        return Err(Error::Precondition(format!(
            "case 3 needs a gradient vector; `{}` is not one",
            s.name
        )));
    }
    let factor = TimeFactor::select(c2, branch)?;
    Ok(NoetherIntegral {
        vector: s.clone(),
        case: NoetherCase::Case3 { c2, c3, factor },
        potential,
    })
}

/// Fitted constants whose magnitude is within the condition tolerance are
/// indistinguishable from zero; snap them so the matching closed form of `C`
/// is used.
pub fn snap(value: f64, tolerance: f64) -> f64 {
    if value.abs() <= tolerance {
        0.0
    } else {
        value
    }
}

/// One row of a symmetry scan.
#[derive(Debug, Clone, PartialEq)]
pub struct ScanEntry {
    pub vector: SymmetryVector,
    pub case2: ConditionResult,
    /// `None` for non-gradient vectors.
    pub case3: Option<ConditionResult>,
}

/// Checks cases 2 and 3 for every vector.
pub fn scan(
    v: &dyn Potential,
    vectors: &[SymmetryVector],
    grid: &[(f64, f64)],
    tolerance: f64,
) -> Result<Vec<ScanEntry>> {
    vectors
        .iter()
        .map(|b| {
            let case2 = check_case2(v, b, grid, tolerance)?;
            let case3 = if b.is_gradient() {
                Some(check_case3(v, b, grid, tolerance)?)
            } else {
                None
            };
            Ok(ScanEntry {
                vector: b.clone(),
                case2,
                case3,
            })
        })
        .collect()
}

/// Builds the first integrals of every passing condition in a scan.
pub fn integrals_from_scan(
    entries: &[ScanEntry],
    potential: Arc<dyn Potential>,
) -> Result<Vec<NoetherIntegral>> {
    let mut out = Vec::new();
    for entry in entries {
        if entry.case2.passes {
            if let FittedConstants::Case2 { c1 } = entry.case2.constants {
                let c1 = snap(c1, entry.case2.tolerance);
                out.push(build_case2_fi(&entry.vector, c1, Arc::clone(&potential)));
            }
        }
        if let Some(case3) = entry.case3.as_ref().filter(|c| c.passes) {
            if let FittedConstants::Case3 { c2, c3 } = case3.constants {
                let (c2, c3) = (snap(c2, case3.tolerance), snap(c3, case3.tolerance));
                out.push(build_case3_fi(
                    &entry.vector,
                    c2,
                    c3,
                    Branch::Primary,
                    Arc::clone(&potential),
                )?);
            }
        }
    }
    Ok(out)
}
