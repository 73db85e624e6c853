//! System specifications, phase-space states, and the exact conversions
//! between equivalent formulations and coordinates.
//!
//! Three forms of the system are supported:
//!
//! * general: `x'' = -w^2 x + f(y/x) / (x^2 y)`, `y'' = -w^2 y + g(x/y) / (x y^2)`
//! * normalized: `x'' = -w^2 x + F(u) / x^3`, `y'' = -w^2 y + G(u) / y^3` with `u = y/x`
//! * conservative: potential `V = N(y/x) / x^2`
//!
//! The kinetic metric is flat, so Cartesian coordinates carry no connection
//! terms. Polar coordinates are only produced for output and analysis.

use crate::error::{Error, Result};
use crate::expr::Expression;

/// Which formulation of the system is being run.
#[derive(Debug, Clone, PartialEq)]
pub enum SystemForm {
    /// `f` in `u = y/x`, `g` in `v = x/y`.
    General { f: Expression, g: Expression },
    /// The normalized pair `F(u)`, `G(u)`, both in `u = y/x`.
    Normalized { f: Expression, g: Expression },
    /// `N(u)` with potential `N(y/x)/x^2`.
    Conservative { n: Expression },
}

/// A system form plus an optional frequency profile `w(t)`.
///
/// The normalized pair is derived once at construction; for the conservative
/// form `dN/du` is also cached.
#[derive(Debug, Clone, PartialEq)]
pub struct SystemSpec {
    form: SystemForm,
    omega: Option<Expression>,
    normalized: (Expression, Expression),
    dn_du: Option<Expression>,
}

impl SystemSpec {
    pub fn general(f: Expression, g: Expression) -> Self {
        let normalized = normalize_fg(&f, &g);
        SystemSpec {
            form: SystemForm::General { f, g },
            omega: None,
            normalized,
            dn_du: None,
        }
    }

    pub fn normalized(f: Expression, g: Expression) -> Self {
        let normalized = (f.rename("u"), g.rename("u"));
        SystemSpec {
            form: SystemForm::Normalized { f, g },
            omega: None,
            normalized,
            dn_du: None,
        }
    }

    pub fn conservative(n: Expression) -> Self {
        let dn = n.differentiate();
        let normalized = fg_from_potential(&n, &dn);
        SystemSpec {
            form: SystemForm::Conservative { n },
            omega: None,
            normalized,
            dn_du: Some(dn),
        }
    }

    /// Attaches (or removes) a frequency profile in `t`.
    pub fn with_omega(mut self, omega: Option<Expression>) -> Self {
        self.omega = omega;
        self
    }

    /// The same form without a frequency profile.
    pub fn autonomous(&self) -> Self {
        self.clone().with_omega(None)
    }

    pub fn form(&self) -> &SystemForm {
        &self.form
    }

    pub fn omega(&self) -> Option<&Expression> {
        self.omega.as_ref()
    }

    pub fn is_autonomous(&self) -> bool {
        self.omega.is_none()
    }

    /// `N(u)` for the conservative form.
    pub fn potential_function(&self) -> Option<&Expression> {
        match &self.form {
            SystemForm::Conservative { n } => Some(n),
            _ => None,
        }
    }

    pub(crate) fn potential_derivative(&self) -> Option<&Expression> {
        self.dn_du.as_ref()
    }

    /// `(F, G)` in `u` for any form.
    pub fn normalized_pair(&self) -> (&Expression, &Expression) {
        (&self.normalized.0, &self.normalized.1)
    }

    /// Whether the right-hand side divides by `x` and by `y` respectively.
    pub fn singular_axes(&self) -> (bool, bool) {
        match self.form {
            SystemForm::Conservative { .. } => (true, false),
            _ => (true, true),
        }
    }
}

/// `F(u) = f(u)/u`, `G(u) = u g(1/u)`.
pub fn normalize_fg(f: &Expression, g: &Expression) -> (Expression, Expression) {
    let u = Expression::variable("u");
    let big_f = f.rename("u").div(&u);
    let reciprocal = Expression::constant(1.0, "u").div(&u);
    let big_g = u.mul(&g.compose(&reciprocal));
    (big_f, big_g)
}

/// `F = 2N + u dN/du`, `G = -u^3 dN/du`.
pub fn conservative_to_fg(n: &Expression) -> (Expression, Expression) {
    fg_from_potential(n, &n.differentiate())
}

fn fg_from_potential(n: &Expression, dn: &Expression) -> (Expression, Expression) {
    let n = n.rename("u");
    let dn = dn.rename("u");
    let u = Expression::variable("u");
    let two = Expression::constant(2.0, "u");
    let three = Expression::constant(3.0, "u");
    let big_f = two.mul(&n).add(&u.mul(&dn));
    let big_g = u.pow(&three).mul(&dn).neg();
    (big_f, big_g)
}

/// Point in the Cartesian phase space. `time` is `t` in the time-dependent
/// frame and `T` in the autonomous one.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CartesianState {
    pub time: f64,
    pub x: f64,
    pub y: f64,
    pub vx: f64,
    pub vy: f64,
}

impl CartesianState {
    pub fn new(time: f64, x: f64, y: f64, vx: f64, vy: f64) -> Self {
        CartesianState { time, x, y, vx, vy }
    }

    pub(crate) fn to_array(self) -> [f64; 4] {
        [self.x, self.y, self.vx, self.vy]
    }

    pub(crate) fn from_array(time: f64, q: [f64; 4]) -> Self {
        CartesianState::new(time, q[0], q[1], q[2], q[3])
    }
}

/// Polar phase-space point with generalized momenta `p_r = r'` and
/// `p_theta = r^2 theta'`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PolarState {
    pub time: f64,
    pub r: f64,
    pub theta: f64,
    pub p_r: f64,
    pub p_theta: f64,
}

/// `theta` lies in `(-pi, pi]`.
pub fn cart_to_polar(s: &CartesianState) -> Result<PolarState> {
    let r = s.x.hypot(s.y);
    if r == 0.0 {
        return Err(Error::Singular {
            reason: "polar coordinates undefined at the origin",
            state: *s,
        });
    }
    Ok(PolarState {
        time: s.time,
        r,
        theta: s.y.atan2(s.x),
        p_r: (s.x * s.vx + s.y * s.vy) / r,
        p_theta: s.x * s.vy - s.y * s.vx,
    })
}

pub fn polar_to_cart(p: &PolarState) -> Result<CartesianState> {
    if !(p.r > 0.0) {
        return Err(Error::Precondition(format!(
            "polar radius must be positive, got {}",
            p.r
        )));
    }
    let (sin, cos) = p.theta.sin_cos();
    let tangential = p.p_theta / p.r;
    Ok(CartesianState {
        time: p.time,
        x: p.r * cos,
        y: p.r * sin,
        vx: p.p_r * cos - tangential * sin,
        vy: p.p_r * sin + tangential * cos,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::parse_expression;
    use std::f64::consts::{FRAC_PI_4, SQRT_2};

    fn u(src: &str) -> Expression {
        parse_expression(src, "u").unwrap()
    }

    fn assert_expr_eq(e: &Expression, expected: impl Fn(f64) -> f64) {
        for at in [0.5, 1.0, 2.0, -1.3] {
            let got = e.evaluate(at).unwrap();
            let want = expected(at);
            assert!(
                (got - want).abs() <= 1e-13 * want.abs().max(1.0),
                "{e} at {at}: {got} vs {want}"
            );
        }
    }

    #[test]
    fn normalize_linear_f_and_g() {
        let f = u("u");
        let g = parse_expression("v", "v").unwrap();
        let (big_f, big_g) = normalize_fg(&f, &g);
        assert_expr_eq(&big_f, |_| 1.0);
        assert_expr_eq(&big_g, |_| 1.0);
    }

    #[test]
    fn normalize_cubic_f() {
        let (big_f, _) = normalize_fg(&u("u^3"), &parse_expression("v", "v").unwrap());
        assert_expr_eq(&big_f, |u| u * u);
    }

    #[test]
    fn normalize_g_uses_reciprocal_argument() {
        let g = parse_expression("v^2 + 3*v", "v").unwrap();
        let (_, big_g) = normalize_fg(&u("u"), &g);
        assert_expr_eq(&big_g, |u| u * ((1.0 / u).powi(2) + 3.0 / u));
    }

    #[test]
    fn lewis_potential_gives_free_x_and_pinney_y() {
        let (big_f, big_g) = conservative_to_fg(&u("u^(-2)/2"));
        assert_expr_eq(&big_f, |_| 0.0);
        assert_expr_eq(&big_g, |_| 1.0);
    }

    #[test]
    fn constant_potential_function() {
        let (big_f, big_g) = conservative_to_fg(&u("1.5"));
        assert_expr_eq(&big_f, |_| 3.0);
        assert_expr_eq(&big_g, |_| 0.0);
    }

    #[test]
    fn quadratic_potential_function() {
        let (big_f, big_g) = conservative_to_fg(&u("u^2"));
        assert_expr_eq(&big_f, |u| 4.0 * u * u);
        assert_expr_eq(&big_g, |u| -2.0 * u.powi(4));
    }

    #[test]
    fn polar_examples() {
        let p = cart_to_polar(&CartesianState::new(0.0, 1.0, 0.0, 0.0, 0.0)).unwrap();
        assert_eq!((p.r, p.theta, p.p_r, p.p_theta), (1.0, 0.0, 0.0, 0.0));

        let p = cart_to_polar(&CartesianState::new(0.0, 1.0, 1.0, 0.0, 0.0)).unwrap();
        assert!((p.r - SQRT_2).abs() < 1e-15);
        assert!((p.theta - FRAC_PI_4).abs() < 1e-15);

        let p = cart_to_polar(&CartesianState::new(0.0, 1.0, 0.0, 0.0, 1.0)).unwrap();
        assert_eq!(p.p_theta, 1.0);

        let c = polar_to_cart(&PolarState {
            time: 0.0,
            r: SQRT_2,
            theta: FRAC_PI_4,
            p_r: 0.0,
            p_theta: 0.0,
        })
        .unwrap();
        assert!((c.x - 1.0).abs() < 1e-15 && (c.y - 1.0).abs() < 1e-15);
    }

    #[test]
    fn polar_round_trip() {
        let s = CartesianState::new(2.5, 1.3, 2.1, -0.4, 0.7);
        let back = polar_to_cart(&cart_to_polar(&s).unwrap()).unwrap();
        for (a, b) in [
            (s.x, back.x),
            (s.y, back.y),
            (s.vx, back.vx),
            (s.vy, back.vy),
        ] {
            assert!((a - b).abs() <= 1e-12 * a.abs());
        }
        assert_eq!(back.time, 2.5);
    }

    #[test]
    fn polar_errors() {
        assert!(cart_to_polar(&CartesianState::new(0.0, 0.0, 0.0, 1.0, 1.0)).is_err());
        let bad = PolarState {
            time: 0.0,
            r: 0.0,
            theta: 1.0,
            p_r: 0.0,
            p_theta: 0.0,
        };
        assert!(polar_to_cart(&bad).is_err());
    }

    #[test]
    fn spec_singular_axes() {
        assert_eq!(
            SystemSpec::conservative(u("u")).singular_axes(),
            (true, false)
        );
        assert_eq!(
            SystemSpec::normalized(u("u"), u("u")).singular_axes(),
            (true, true)
        );
    }
}
