use std::fmt::{self, Write};

use super::Node;

/// Fully parenthesized infix form; re-parses to an identically evaluating
/// tree. Floats use the shortest round-trip representation.
pub(super) fn write_node<W: Write>(w: &mut W, node: &Node, var: &str) -> fmt::Result {
    match node {
        Node::Const(c) if c.is_sign_negative() => {
            w.write_str("(-")?;
            write_literal(w, -c)?;
            w.write_char(')')
        }
        Node::Const(c) => write_literal(w, *c),
        Node::Var => w.write_str(var),
        Node::Neg(a) => {
            w.write_str("(-")?;
            write_node(w, a, var)?;
            w.write_char(')')
        }
        Node::Binary(op, a, b) => {
            w.write_char('(')?;
            write_node(w, a, var)?;
            w.write_char(op.symbol())?;
            write_node(w, b, var)?;
            w.write_char(')')
        }
        Node::Call(f, a) => {
            w.write_str(f.name())?;
            w.write_char('(')?;
            write_node(w, a, var)?;
            w.write_char(')')
        }
    }
}

fn write_literal<W: Write>(w: &mut W, c: f64) -> fmt::Result {
    if c.fract() == 0.0 && c < 1e15 {
        write!(w, "{c}")
    } else {
        write!(w, "{c:?}")
    }
}

pub(super) fn node_to_string(node: &Node, var: &str) -> String {
    let mut s = String::new();
    write_node(&mut s, node, var).expect("writing to a String cannot fail");
    s
}
