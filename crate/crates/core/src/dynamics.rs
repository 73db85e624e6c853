//! Right-hand sides of every form of the system.

use crate::error::{Error, Result};
use crate::expr::Expression;
use crate::model::{CartesianState, SystemForm, SystemSpec};
use crate::numdiff;

/// Accelerations `(x'', y'')` at `s`.
///
/// The `-w^2 q` terms appear only when the spec carries a frequency profile.
/// `dN/du` comes from the symbolic derivative cached in the spec.
pub fn acceleration(spec: &SystemSpec, s: &CartesianState) -> Result<(f64, f64)> {
    let (needs_x, needs_y) = spec.singular_axes();
    if needs_x && s.x == 0.0 {
        return Err(Error::Singular {
            reason: "x = 0",
            state: *s,
        });
    }
    if needs_y && s.y == 0.0 {
        return Err(Error::Singular {
            reason: "y = 0",
            state: *s,
        });
    }
    let (x, y) = (s.x, s.y);
    let (ax, ay) = match spec.form() {
        SystemForm::General { f, g } => (
            f.evaluate(y / x)? / (x * x * y),
            g.evaluate(x / y)? / (x * y * y),
        ),
        SystemForm::Normalized { f, g } => {
            let u = y / x;
            (f.evaluate(u)? / x.powi(3), g.evaluate(u)? / y.powi(3))
        }
        SystemForm::Conservative { n } => {
            let u = y / x;
            let dn = spec
                .potential_derivative()
                .expect("conservative spec caches dN/du")
                .evaluate(u)?;
            let x3 = x.powi(3);
            ((2.0 * n.evaluate(u)? + u * dn) / x3, -dn / x3)
        }
    };
    match spec.omega() {
        None => Ok((ax, ay)),
        Some(omega) => {
            let w = omega.evaluate(s.time)?;
            let w2 = w * w;
            Ok((ax - w2 * x, ay - w2 * y))
        }
    }
}

/// `V = N(y/x) / x^2`.
pub fn potential_value(n: &Expression, x: f64, y: f64) -> Result<f64> {
    if x == 0.0 {
        return Err(Error::Singular {
            reason: "potential N(y/x)/x^2 undefined at x = 0",
            state: CartesianState::new(f64::NAN, x, y, f64::NAN, f64::NAN),
        });
    }
    Ok(n.evaluate(y / x)? / (x * x))
}

/// A scalar potential on the plane.
pub trait Potential: Send + Sync {
    fn value(&self, x: f64, y: f64) -> Result<f64>;
}

impl<F> Potential for F
where
    F: Fn(f64, f64) -> Result<f64> + Send + Sync,
{
    fn value(&self, x: f64, y: f64) -> Result<f64> {
        self(x, y)
    }
}

/// The conservative family `N(y/x)/x^2`.
#[derive(Debug, Clone, PartialEq)]
pub struct ErmakovPotential {
    n: Expression,
}

impl ErmakovPotential {
    pub fn new(n: Expression) -> Self {
        ErmakovPotential { n }
    }

    /// The potential of a conservative spec; `None` for the other forms.
    pub fn of_spec(spec: &SystemSpec) -> Option<Self> {
        spec.potential_function().cloned().map(Self::new)
    }

    pub fn function(&self) -> &Expression {
        &self.n
    }
}

impl Potential for ErmakovPotential {
    fn value(&self, x: f64, y: f64) -> Result<f64> {
        potential_value(&self.n, x, y)
    }
}

/// Finite-difference gradient of a potential.
pub fn potential_gradient(v: &dyn Potential, x: f64, y: f64) -> Result<(f64, f64)> {
    numdiff::gradient(|a, b| v.value(a, b), x, y, numdiff::DEFAULT_STEP)
}

/// `d(ax)/dy - d(ay)/dx` of the autonomous force field, by finite
/// differences. Nonzero means the force is not a gradient, so the form has no
/// potential.
pub fn force_curl(spec: &SystemSpec, x: f64, y: f64) -> Result<f64> {
    let field = spec.autonomous();
    let h = numdiff::DEFAULT_STEP;
    let dax_dy = numdiff::richardson(
        |b| Ok(acceleration(&field, &CartesianState::new(0.0, x, b, 0.0, 0.0))?.0),
        y,
        h,
    )?;
    let day_dx = numdiff::richardson(
        |a| Ok(acceleration(&field, &CartesianState::new(0.0, a, y, 0.0, 0.0))?.1),
        x,
        h,
    )?;
    Ok(dax_dy - day_dx)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::parse_expression;

    fn u(src: &str) -> Expression {
        parse_expression(src, "u").unwrap()
    }

    fn at(x: f64, y: f64) -> CartesianState {
        CartesianState::new(0.0, x, y, 0.3, -0.2)
    }

    #[test]
    fn lewis_autonomous() {
        let spec = SystemSpec::conservative(u("u^(-2)/2"));
        assert_eq!(acceleration(&spec, &at(1.0, 1.0)).unwrap(), (0.0, 1.0));
    }

    #[test]
    fn lewis_unit_frequency() {
        let spec = SystemSpec::conservative(u("u^(-2)/2"))
            .with_omega(Some(parse_expression("1", "t").unwrap()));
        assert_eq!(acceleration(&spec, &at(1.0, 1.0)).unwrap(), (-1.0, 0.0));
        // x'' = -x, y'' = -y + 1/y^3 at another point
        let (ax, ay) = acceleration(&spec, &at(0.7, 1.9)).unwrap();
        assert!((ax + 0.7).abs() < 1e-15);
        assert!((ay - (-1.9 + 1.9f64.powi(-3))).abs() < 1e-14);
    }

    #[test]
    fn free_motion() {
        let spec = SystemSpec::normalized(u("0"), u("0"));
        assert_eq!(acceleration(&spec, &at(0.4, -3.0)).unwrap(), (0.0, 0.0));
    }

    #[test]
    fn negative_omega_enters_squared() {
        let w = |src| Some(parse_expression(src, "t").unwrap());
        let base = SystemSpec::normalized(u("u"), u("1"));
        let a = acceleration(&base.clone().with_omega(w("-2")), &at(1.2, 0.8)).unwrap();
        let b = acceleration(&base.with_omega(w("2")), &at(1.2, 0.8)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn singular_states() {
        let normalized = SystemSpec::normalized(u("1"), u("1"));
        assert!(matches!(
            acceleration(&normalized, &at(0.0, 1.0)),
            Err(Error::Singular {
                reason: "x = 0",
                ..
            })
        ));
        assert!(matches!(
            acceleration(&normalized, &at(1.0, 0.0)),
            Err(Error::Singular {
                reason: "y = 0",
                ..
            })
        ));
        // The conservative form only divides by x; N decides about y = 0.
        let smooth = SystemSpec::conservative(u("1/(1+u^2)"));
        assert!(acceleration(&smooth, &at(1.0, 0.0)).is_ok());
        let lewis = SystemSpec::conservative(u("u^(-2)/2"));
        assert!(matches!(
            acceleration(&lewis, &at(1.0, 0.0)),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn potential_examples() {
        let n = u("u^(-2)/2");
        assert_eq!(potential_value(&n, 1.0, 1.0).unwrap(), 0.5);
        for (x, y) in [(0.3, 1.7), (-2.0, 0.4), (1.1, -0.9)] {
            let v = potential_value(&n, x, y).unwrap();
            assert!((v - 0.5 / (y * y)).abs() < 1e-14 * v);
        }
        assert!(potential_value(&n, 0.0, 1.0).is_err());
    }

    #[test]
    fn potential_is_homogeneous_of_degree_minus_two() {
        let n = u("sin(u) + 2/(1+u^2)");
        let (x, y) = (0.9, -1.4);
        let v = potential_value(&n, x, y).unwrap();
        for lambda in [0.5, 3.0, -1.7] {
            let scaled = potential_value(&n, lambda * x, lambda * y).unwrap();
            assert!((scaled - v / (lambda * lambda)).abs() < 1e-14 * v.abs());
        }
    }

    #[test]
    fn curl_detects_nonconservative_form() {
        let spec = SystemSpec::normalized(u("u"), u("u^3"));
        let (x, y) = (1.2, 0.7);
        let curl = force_curl(&spec, x, y).unwrap();
        assert!((curl - 4.0 / x.powi(4)).abs() < 1e-8, "{curl}");
        let conservative = SystemSpec::conservative(u("u^(-2)/2 + 1/(1+u^2)"));
        assert!(force_curl(&conservative, x, y).unwrap().abs() < 1e-9);
    }
}
