use std::sync::Arc;

use super::{eval, BinOp, Func, Node};

fn konst(c: f64) -> Arc<Node> {
    Arc::new(Node::Const(c))
}

fn literal(n: &Node) -> Option<f64> {
    match n {
        Node::Const(c) => Some(*c),
        _ => None,
    }
}

pub(super) fn neg(a: Arc<Node>) -> Arc<Node> {
    match a.as_ref() {
        Node::Const(c) => konst(-c),
        Node::Neg(inner) => Arc::clone(inner),
        _ => Arc::new(Node::Neg(a)),
    }
}

/// Builds `a op b`, folding literal arithmetic and the trivial 0/1 identities.
pub(super) fn binary(op: BinOp, a: Arc<Node>, b: Arc<Node>) -> Arc<Node> {
    let (la, lb) = (literal(&a), literal(&b));
    if let (Some(x), Some(y)) = (la, lb) {
        if let Ok(v) = eval::apply_binary(op, x, y) {
            if v.is_finite() {
                return konst(v);
            }
        }
    }
    match op {
        BinOp::Add if la == Some(0.0) => b,
        BinOp::Add | BinOp::Sub if lb == Some(0.0) => a,
        BinOp::Sub if la == Some(0.0) => neg(b),
        BinOp::Mul if la == Some(0.0) || lb == Some(0.0) => konst(0.0),
        BinOp::Mul if la == Some(1.0) => b,
        BinOp::Mul | BinOp::Div if lb == Some(1.0) => a,
        BinOp::Mul if la == Some(-1.0) => neg(b),
        BinOp::Mul if lb == Some(-1.0) => neg(a),
        BinOp::Pow if lb == Some(1.0) => a,
        BinOp::Pow if lb == Some(0.0) => konst(1.0),
        _ => Arc::new(Node::Binary(op, a, b)),
    }
}

fn add(a: Arc<Node>, b: Arc<Node>) -> Arc<Node> {
    binary(BinOp::Add, a, b)
}

fn sub(a: Arc<Node>, b: Arc<Node>) -> Arc<Node> {
    binary(BinOp::Sub, a, b)
}

fn mul(a: Arc<Node>, b: Arc<Node>) -> Arc<Node> {
    binary(BinOp::Mul, a, b)
}

fn div(a: Arc<Node>, b: Arc<Node>) -> Arc<Node> {
    binary(BinOp::Div, a, b)
}

fn pow(a: Arc<Node>, b: Arc<Node>) -> Arc<Node> {
    binary(BinOp::Pow, a, b)
}

fn call(f: Func, a: Arc<Node>) -> Arc<Node> {
    Arc::new(Node::Call(f, a))
}

pub(super) fn derivative(node: &Arc<Node>) -> Arc<Node> {
    if !node.depends_on_var() {
        return konst(0.0);
    }
    match node.as_ref() {
        Node::Const(_) => konst(0.0),
        Node::Var => konst(1.0),
        Node::Neg(a) => neg(derivative(a)),
        Node::Binary(op, a, b) => {
            let (a, b) = (Arc::clone(a), Arc::clone(b));
            match op {
                BinOp::Add => add(derivative(&a), derivative(&b)),
                BinOp::Sub => sub(derivative(&a), derivative(&b)),
                BinOp::Mul => add(mul(derivative(&a), Arc::clone(&b)), mul(a, derivative(&b))),
                BinOp::Div => {
                    // (a'b - ab') / b^2
                    let num = sub(
                        mul(derivative(&a), Arc::clone(&b)),
                        mul(Arc::clone(&a), derivative(&b)),
                    );
                    div(num, pow(b, konst(2.0)))
                }
                BinOp::Pow => power_derivative(a, b),
            }
        }
        Node::Call(f, a) => {
            let inner = derivative(a);
            let a = Arc::clone(a);
            let outer = match f {
                Func::Sin => call(Func::Cos, a),
                Func::Cos => neg(call(Func::Sin, a)),
                Func::Tan => add(konst(1.0), pow(call(Func::Tan, a), konst(2.0))),
                Func::Atan => div(konst(1.0), add(konst(1.0), pow(a, konst(2.0)))),
                Func::Exp => call(Func::Exp, a),
                Func::Log => div(konst(1.0), a),
                Func::Sqrt => div(konst(1.0), mul(konst(2.0), call(Func::Sqrt, a))),
                Func::Tanh => sub(konst(1.0), pow(call(Func::Tanh, a), konst(2.0))),
                Func::Atanh => div(konst(1.0), sub(konst(1.0), pow(a, konst(2.0)))),
            };
            mul(outer, inner)
        }
    }
}

fn power_derivative(base: Arc<Node>, exponent: Arc<Node>) -> Arc<Node> {
    if let Some(k) = exponent.constant_value() {
        // k * base^(k-1) * base'
        let lowered = pow(Arc::clone(&base), konst(k - 1.0));
        return mul(mul(konst(k), lowered), derivative(&base));
    }
    if base.constant_value().is_some() {
        // c^g * ln(c) * g'
        let ln = call(Func::Log, Arc::clone(&base));
        let whole = pow(base, Arc::clone(&exponent));
        return mul(mul(whole, ln), derivative(&exponent));
    }
    // f^g * (g' ln f + g f'/f)
    let ln = call(Func::Log, Arc::clone(&base));
    let term1 = mul(derivative(&exponent), ln);
    let term2 = div(
        mul(Arc::clone(&exponent), derivative(&base)),
        Arc::clone(&base),
    );
    mul(pow(base, exponent), add(term1, term2))
}

#[cfg(test)]
mod tests {
    use super::super::parse_expression;

    #[test]
    fn folding_keeps_trees_small() {
        let d = parse_expression("3*u", "u").unwrap().differentiate();
        assert_eq!(d.to_string(), "3");
        let d = parse_expression("u^2", "u").unwrap().differentiate();
        assert_eq!(d.to_string(), "(2*u)");
    }

    #[test]
    fn general_power_rule() {
        let d = parse_expression("u^u", "u").unwrap().differentiate();
        let u: f64 = 1.7;
        let expected = u.powf(u) * (u.ln() + 1.0);
        assert!((d.evaluate(u).unwrap() - expected).abs() < 1e-13);
    }

    #[test]
    fn exponential_base_rule() {
        let d = parse_expression("2^(3*u)", "u").unwrap().differentiate();
        let u: f64 = 0.4;
        let expected = 2f64.powf(3.0 * u) * 2f64.ln() * 3.0;
        assert!((d.evaluate(u).unwrap() - expected).abs() < 1e-13);
    }
}
