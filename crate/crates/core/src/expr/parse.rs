//! Recursive-descent parser.
//!
//! ```text
//! expr    := term (('+' | '-') term)*
//! term    := unary (('*' | '/') unary)*
//! unary   := ('-' | '+') unary | power
//! power   := primary ('^' unary)?
//! primary := number | var | func '(' expr ')' | '(' expr ')'
//! ```
//!
//! `^` binds tighter than unary minus and associates to the right; the other
//! binary operators associate to the left. There is no implicit
//! multiplication, so `2u` is rejected.

use std::sync::Arc;

use super::{BinOp, Expression, Func, Node, ParseError, SyntaxError};

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(f64),
    Ident(String),
    Sym(char),
    End,
}

#[derive(Debug, Clone)]
struct Token {
    tok: Tok,
    pos: usize,
}

fn syntax(pos: usize, message: impl Into<String>) -> ParseError {
    ParseError::Syntax(SyntaxError {
        position: pos,
        message: message.into(),
    })
}

fn lex(src: &str) -> Result<Vec<Token>, ParseError> {
    let bytes = src.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i];
        if c.is_ascii_whitespace() {
            i += 1;
        } else if c.is_ascii_digit() || c == b'.' {
            let start = i;
            while i < bytes.len() && bytes[i].is_ascii_digit() {
                i += 1;
            }
            if i < bytes.len() && bytes[i] == b'.' {
                i += 1;
                while i < bytes.len() && bytes[i].is_ascii_digit() {
                    i += 1;
                }
            }
            if i < bytes.len() && (bytes[i] == b'e' || bytes[i] == b'E') {
                let mut j = i + 1;
                if j < bytes.len() && (bytes[j] == b'+' || bytes[j] == b'-') {
                    j += 1;
                }
                if j < bytes.len() && bytes[j].is_ascii_digit() {
                    while j < bytes.len() && bytes[j].is_ascii_digit() {
                        j += 1;
                    }
                    i = j;
                } else {
                    return Err(syntax(j, "malformed exponent in numeric literal"));
                }
            }
            let text = &src[start..i];
            let value: f64 = text
                .parse()
                .map_err(|_| syntax(start, format!("malformed numeric literal `{text}`")))?;
            out.push(Token {
                tok: Tok::Num(value),
                pos: start,
            });
        } else if c.is_ascii_alphabetic() || c == b'_' {
            let start = i;
            while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_') {
                i += 1;
            }
            out.push(Token {
                tok: Tok::Ident(src[start..i].to_owned()),
                pos: start,
            });
        } else if b"+-*/^()".contains(&c) {
            out.push(Token {
                tok: Tok::Sym(c as char),
                pos: i,
            });
            i += 1;
        } else {
            let ch = src[i..].chars().next().unwrap_or('?');
            return Err(syntax(i, format!("unexpected character `{ch}`")));
        }
    }
    out.push(Token {
        tok: Tok::End,
        pos: src.len(),
    });
    Ok(out)
}

struct Parser<'a> {
    tokens: Vec<Token>,
    at: usize,
    var: &'a str,
}

impl Parser<'_> {
    fn peek(&self) -> &Token {
        &self.tokens[self.at]
    }

    fn bump(&mut self) -> Token {
        let t = self.tokens[self.at].clone();
        if t.tok != Tok::End {
            self.at += 1;
        }
        t
    }

    fn eat(&mut self, sym: char) -> bool {
        if self.peek().tok == Tok::Sym(sym) {
            self.at += 1;
            true
        } else {
            false
        }
    }

    fn unexpected(&self) -> ParseError {
        let t = self.peek();
        match &t.tok {
            Tok::End => syntax(t.pos, "unexpected end of input"),
            Tok::Num(v) => syntax(t.pos, format!("unexpected number `{v}`")),
            Tok::Ident(s) => syntax(t.pos, format!("unexpected identifier `{s}`")),
            Tok::Sym(c) => syntax(t.pos, format!("unexpected `{c}`")),
        }
    }

    fn expr(&mut self) -> Result<Node, ParseError> {
        let mut lhs = self.term()?;
        loop {
            let op = if self.eat('+') {
                BinOp::Add
            } else if self.eat('-') {
                BinOp::Sub
            } else {
                return Ok(lhs);
            };
            let rhs = self.term()?;
            lhs = Node::Binary(op, Arc::new(lhs), Arc::new(rhs));
        }
    }

    fn term(&mut self) -> Result<Node, ParseError> {
        let mut lhs = self.unary()?;
        loop {
            let op = if self.eat('*') {
                BinOp::Mul
            } else if self.eat('/') {
                BinOp::Div
            } else {
                return Ok(lhs);
            };
            let rhs = self.unary()?;
            lhs = Node::Binary(op, Arc::new(lhs), Arc::new(rhs));
        }
    }

    fn unary(&mut self) -> Result<Node, ParseError> {
        if self.eat('-') {
            Ok(Node::Neg(Arc::new(self.unary()?)))
        } else if self.eat('+') {
            self.unary()
        } else {
            self.power()
        }
    }

    fn power(&mut self) -> Result<Node, ParseError> {
        let base = self.primary()?;
        if self.eat('^') {
            let exponent = self.unary()?;
            Ok(Node::Binary(BinOp::Pow, Arc::new(base), Arc::new(exponent)))
        } else {
            Ok(base)
        }
    }

    fn primary(&mut self) -> Result<Node, ParseError> {
        let t = self.peek().clone();
        match t.tok {
            Tok::Num(v) => {
                self.bump();
                Ok(Node::Const(v))
            }
            Tok::Sym('(') => {
                self.bump();
                let inner = self.expr()?;
                if !self.eat(')') {
                    return Err(self.unexpected());
                }
                Ok(inner)
            }
            Tok::Ident(name) => {
                self.bump();
                if name == self.var {
                    return Ok(Node::Var);
                }
                let Some(func) = Func::from_name(&name) else {
                    return Err(ParseError::UnknownIdentifier {
                        name,
                        position: t.pos,
                        var: self.var.to_owned(),
                    });
                };
                if !self.eat('(') {
                    return Err(syntax(
                        self.peek().pos,
                        format!("expected `(` after function `{name}`"),
                    ));
                }
                let arg = self.expr()?;
                if !self.eat(')') {
                    return Err(self.unexpected());
                }
                Ok(Node::Call(func, Arc::new(arg)))
            }
            _ => Err(self.unexpected()),
        }
    }
}

/// Parses `src` as a function of the single free symbol `var_name`.
pub fn parse_expression(src: &str, var_name: &str) -> Result<Expression, ParseError> {
    if Func::from_name(var_name).is_some() {
        return Err(syntax(
            0,
            format!("variable name `{var_name}` is a function name"),
        ));
    }
    let tokens = lex(src)?;
    let mut p = Parser {
        tokens,
        at: 0,
        var: var_name,
    };
    if p.peek().tok == Tok::End {
        return Err(syntax(0, "empty expression"));
    }
    let root = p.expr()?;
    if p.peek().tok != Tok::End {
        return Err(p.unexpected());
    }
    Ok(Expression::from_node(root, var_name))
}
