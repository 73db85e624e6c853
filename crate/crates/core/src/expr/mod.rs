//! Single-variable real expressions: parsing, evaluation, symbolic
//! differentiation and adaptive quadrature.
//!
//! An [`Expression`] is an immutable AST over one free variable. Nodes are
//! shared behind [`Arc`], so expressions are cheap to clone and can be
//! evaluated from several threads at once.

mod diff;
mod eval;
mod parse;
mod print;

use std::fmt;
use std::sync::Arc;

use thiserror::Error;

pub use parse::parse_expression;

use crate::quad::{self, QuadError};

/// Elementary functions understood by the parser.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Func {
    Sin,
    Cos,
    Tan,
    Atan,
    Exp,
    Log,
    Sqrt,
    Tanh,
    Atanh,
}

impl Func {
    pub const ALL: [Func; 9] = [
        Func::Sin,
        Func::Cos,
        Func::Tan,
        Func::Atan,
        Func::Exp,
        Func::Log,
        Func::Sqrt,
        Func::Tanh,
        Func::Atanh,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Tan => "tan",
            Func::Atan => "atan",
            Func::Exp => "exp",
            Func::Log => "log",
            Func::Sqrt => "sqrt",
            Func::Tanh => "tanh",
            Func::Atanh => "atanh",
        }
    }

    pub fn from_name(name: &str) -> Option<Func> {
        Func::ALL.into_iter().find(|f| f.name() == name)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    Pow,
}

impl BinOp {
    pub fn symbol(self) -> char {
        match self {
            BinOp::Add => '+',
            BinOp::Sub => '-',
            BinOp::Mul => '*',
            BinOp::Div => '/',
            BinOp::Pow => '^',
        }
    }
}

/// AST node.
#[derive(Debug, Clone, PartialEq)]
pub enum Node {
    Const(f64),
    Var,
    Neg(Arc<Node>),
    Binary(BinOp, Arc<Node>, Arc<Node>),
    Call(Func, Arc<Node>),
}

impl Node {
    /// Value of the subtree if it does not depend on the variable.
    pub fn constant_value(&self) -> Option<f64> {
        match self {
            Node::Const(c) => Some(*c),
            Node::Var => None,
            Node::Neg(a) => a.constant_value().map(|v| -v),
            Node::Binary(op, a, b) => {
                let (a, b) = (a.constant_value()?, b.constant_value()?);
                eval::apply_binary(*op, a, b).ok().filter(|v| v.is_finite())
            }
            Node::Call(f, a) => {
                let a = a.constant_value()?;
                eval::apply_func(*f, a).ok().filter(|v| v.is_finite())
            }
        }
    }

    fn depends_on_var(&self) -> bool {
        match self {
            Node::Const(_) => false,
            Node::Var => true,
            Node::Neg(a) | Node::Call(_, a) => a.depends_on_var(),
            Node::Binary(_, a, b) => a.depends_on_var() || b.depends_on_var(),
        }
    }

    /// Replaces every occurrence of the variable by `replacement`.
    fn substitute(self: &Arc<Node>, replacement: &Arc<Node>) -> Arc<Node> {
        match self.as_ref() {
            Node::Const(_) => Arc::clone(self),
            Node::Var => Arc::clone(replacement),
            Node::Neg(a) => Arc::new(Node::Neg(a.substitute(replacement))),
            Node::Binary(op, a, b) => Arc::new(Node::Binary(
                *op,
                a.substitute(replacement),
                b.substitute(replacement),
            )),
            Node::Call(f, a) => Arc::new(Node::Call(*f, a.substitute(replacement))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
#[error("syntax error at position {position}: {message}")]
pub struct SyntaxError {
    pub position: usize,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ParseError {
    #[error(transparent)]
    Syntax(#[from] SyntaxError),
    #[error("unknown identifier `{name}` at position {position} (free variable is `{var}`)")]
    UnknownIdentifier {
        name: String,
        position: usize,
        var: String,
    },
}

/// Evaluation left the real domain of some node.
#[derive(Debug, Clone, PartialEq, Error)]
#[error("domain error in `{node}`: {reason}")]
pub struct DomainError {
    /// Printed form of the offending subexpression.
    pub node: String,
    pub reason: String,
}

/// A parsed single-variable real function.
#[derive(Clone, PartialEq)]
pub struct Expression {
    root: Arc<Node>,
    var: Arc<str>,
}

impl Expression {
    pub fn from_node(root: Node, var: &str) -> Self {
        Expression {
            root: Arc::new(root),
            var: Arc::from(var),
        }
    }

    pub fn constant(value: f64, var: &str) -> Self {
        Expression::from_node(Node::Const(value), var)
    }

    pub fn variable(var: &str) -> Self {
        Expression::from_node(Node::Var, var)
    }

    pub fn root(&self) -> &Node {
        &self.root
    }

    pub fn var(&self) -> &str {
        &self.var
    }

    pub fn is_constant(&self) -> bool {
        !self.root.depends_on_var()
    }

    pub fn evaluate(&self, value: f64) -> Result<f64, DomainError> {
        eval::evaluate(&self.root, value, &self.var)
    }

    /// Symbolic derivative with respect to the free variable. Only literal
    /// arithmetic is folded; no further simplification is attempted.
    pub fn differentiate(&self) -> Expression {
        Expression {
            root: diff::derivative(&self.root),
            var: Arc::clone(&self.var),
        }
    }

    /// Composition `self(inner(w))`, expressed in `inner`'s variable.
    pub fn compose(&self, inner: &Expression) -> Expression {
        Expression {
            root: self.root.substitute(&inner.root),
            var: Arc::clone(&inner.var),
        }
    }

    /// Same function under a different variable name.
    pub fn rename(&self, var: &str) -> Expression {
        Expression {
            root: Arc::clone(&self.root),
            var: Arc::from(var),
        }
    }

    pub fn add(&self, other: &Expression) -> Expression {
        self.binary(BinOp::Add, other)
    }

    pub fn sub(&self, other: &Expression) -> Expression {
        self.binary(BinOp::Sub, other)
    }

    pub fn mul(&self, other: &Expression) -> Expression {
        self.binary(BinOp::Mul, other)
    }

    pub fn div(&self, other: &Expression) -> Expression {
        self.binary(BinOp::Div, other)
    }

    pub fn pow(&self, other: &Expression) -> Expression {
        self.binary(BinOp::Pow, other)
    }

    pub fn neg(&self) -> Expression {
        Expression {
            root: diff::neg(Arc::clone(&self.root)),
            var: Arc::clone(&self.var),
        }
    }

    fn binary(&self, op: BinOp, other: &Expression) -> Expression {
        Expression {
            root: diff::binary(op, Arc::clone(&self.root), Arc::clone(&other.root)),
            var: Arc::clone(&self.var),
        }
    }

    /// Adaptive Gauss–Kronrod estimate of the integral over `[a, b]`.
    ///
    /// Swapping the limits flips the sign exactly and an empty interval
    /// gives exactly zero.
    pub fn quad_integral(&self, a: f64, b: f64, tol: f64) -> Result<f64, QuadError> {
        quad::integrate(|u| self.evaluate(u).map_err(|e| e.to_string()), a, b, tol)
    }
}

impl fmt::Display for Expression {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        print::write_node(f, &self.root, &self.var)
    }
}

impl fmt::Debug for Expression {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Expression({self} in {})", self.var)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn e(src: &str) -> Expression {
        parse_expression(src, "u").unwrap()
    }

    #[test]
    fn lewis_potential_evaluates_at_one() {
        assert_eq!(e("u^(-2)/2").evaluate(1.0).unwrap(), 0.5);
    }

    #[test]
    fn identity_and_constant() {
        assert_eq!(e("u").evaluate(7.0).unwrap(), 7.0);
        let three = e("3");
        assert!(three.is_constant());
        assert_eq!(three.evaluate(-12.5).unwrap(), 3.0);
        assert_eq!(three.evaluate(1e9).unwrap(), 3.0);
    }

    #[test]
    fn pole_is_domain_error() {
        let err = e("1/u").evaluate(0.0).unwrap_err();
        assert!(err.reason.contains("division by zero"), "{err}");
        assert_eq!(err.node, "(1/u)");
    }

    #[test]
    fn compose_builds_reciprocal_argument() {
        // g(v) = v + v^2 composed with v = 1/u
        let g = parse_expression("v + v^2", "v").unwrap();
        let inv = e("1/u");
        let h = g.compose(&inv);
        assert_eq!(h.var(), "u");
        let u: f64 = 0.8;
        let expected = 1.0 / u + 1.0 / (u * u);
        assert!((h.evaluate(u).unwrap() - expected).abs() < 1e-15);
    }

    #[test]
    fn derivative_of_constant_is_zero() {
        let d = e("3").differentiate();
        assert_eq!(d.root(), &Node::Const(0.0));
    }

    #[test]
    fn derivative_of_square() {
        let d = e("u^2").differentiate();
        for u in [-1.5, 0.0, 0.3, 2.0] {
            assert!((d.evaluate(u).unwrap() - 2.0 * u).abs() < 1e-15);
        }
    }

    #[test]
    fn derivative_of_lewis_potential() {
        let d = e("u^(-2)/2").differentiate();
        for u in [0.5_f64, 1.0, 2.0] {
            let expected = -u.powi(-3);
            assert!((d.evaluate(u).unwrap() - expected).abs() < 1e-14 * expected.abs());
        }
    }

    #[test]
    fn quadrature_examples() {
        assert!((e("u").quad_integral(0.0, 1.0, 1e-12).unwrap() - 0.5).abs() <= 1e-12);
        let v = e("u^2 - 1").quad_integral(1.0, 2.0, 1e-12).unwrap();
        assert!((v - 4.0 / 3.0).abs() <= 1e-12);
        assert_eq!(e("sin(u)/u").quad_integral(0.7, 0.7, 1e-12).unwrap(), 0.0);
    }

    #[test]
    fn quadrature_antisymmetry() {
        let f = e("exp(-u^2)");
        let ab = f.quad_integral(-0.3, 1.7, 1e-12).unwrap();
        let ba = f.quad_integral(1.7, -0.3, 1e-12).unwrap();
        assert_eq!(ab, -ba);
    }

    #[test]
    fn quadrature_reports_nan() {
        let err = e("sqrt(u)").quad_integral(-1.0, 1.0, 1e-10).unwrap_err();
        assert!(matches!(err, QuadError::Integrand { .. }), "{err:?}");
    }
}
