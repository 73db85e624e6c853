use super::{BinOp, DomainError, Func, Node};

/// Failure of a single primitive; the caller attaches the offending node.
pub(super) type OpResult = Result<f64, &'static str>;

pub(super) fn apply_binary(op: BinOp, a: f64, b: f64) -> OpResult {
    match op {
        BinOp::Add => Ok(a + b),
        BinOp::Sub => Ok(a - b),
        BinOp::Mul => Ok(a * b),
        BinOp::Div => {
            if b == 0.0 {
                Err("division by zero")
            } else {
                Ok(a / b)
            }
        }
        BinOp::Pow => power(a, b),
    }
}

fn power(base: f64, exponent: f64) -> OpResult {
    let integral = exponent.fract() == 0.0;
    if base < 0.0 && !integral {
        return Err("negative base with non-integer exponent");
    }
    if base == 0.0 && exponent < 0.0 {
        return Err("division by zero");
    }
    if integral && exponent.abs() <= i32::MAX as f64 {
        Ok(base.powi(exponent as i32))
    } else {
        Ok(base.powf(exponent))
    }
}

pub(super) fn apply_func(f: Func, a: f64) -> OpResult {
    match f {
        Func::Sin => Ok(a.sin()),
        Func::Cos => Ok(a.cos()),
        Func::Tan => Ok(a.tan()),
        Func::Atan => Ok(a.atan()),
        Func::Exp => Ok(a.exp()),
        Func::Tanh => Ok(a.tanh()),
        Func::Log => {
            if a <= 0.0 {
                Err("log of non-positive argument")
            } else {
                Ok(a.ln())
            }
        }
        Func::Sqrt => {
            if a < 0.0 {
                Err("sqrt of negative argument")
            } else {
                Ok(a.sqrt())
            }
        }
        Func::Atanh => {
            if a.abs() >= 1.0 {
                Err("atanh argument outside (-1, 1)")
            } else {
                Ok(a.atanh())
            }
        }
    }
}

pub(super) fn evaluate(node: &Node, x: f64, var: &str) -> Result<f64, DomainError> {
    let fail = |reason: &str| DomainError {
        node: super::print::node_to_string(node, var),
        reason: reason.to_owned(),
    };
    let value = match node {
        Node::Const(c) => return Ok(*c),
        Node::Var => return Ok(x),
        Node::Neg(a) => -evaluate(a, x, var)?,
        Node::Binary(op, a, b) => {
            let a = evaluate(a, x, var)?;
            let b = evaluate(b, x, var)?;
            apply_binary(*op, a, b).map_err(fail)?
        }
        Node::Call(f, a) => {
            let a = evaluate(a, x, var)?;
            apply_func(*f, a).map_err(fail)?
        }
    };
    if value.is_nan() {
        return Err(fail("result is not a number"));
    }
    if value.is_infinite() {
        return Err(fail("overflow"));
    }
    Ok(value)
}
