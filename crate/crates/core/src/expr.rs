//! A small expression language for real functions of one variable.
//!
//! Grammar, lowest precedence first:
//!
//! ```text
//! expr   := term (('+' | '-') term)*
//! term   := unary (('*' | '/') unary)*
//! unary  := ('-' | '+') unary | power
//! power  := atom ('^' unary)?          right-associative
//! atom   := number | var | func '(' expr ')' | '(' expr ')'
//! func   := sin | cos | exp | abs | sqrt
//! ```

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::function::RealFn;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    Pow,
}

impl BinOp {
    fn symbol(self) -> char {
        match self {
            BinOp::Add => '+',
            BinOp::Sub => '-',
            BinOp::Mul => '*',
            BinOp::Div => '/',
            BinOp::Pow => '^',
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Func {
    Sin,
    Cos,
    Exp,
    Abs,
    Sqrt,
}

impl Func {
    fn from_name(name: &str) -> Option<Self> {
        Some(match name {
            "sin" => Func::Sin,
            "cos" => Func::Cos,
            "exp" => Func::Exp,
            "abs" => Func::Abs,
            "sqrt" => Func::Sqrt,
            _ => return None,
        })
    }

    fn name(self) -> &'static str {
        match self {
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Exp => "exp",
            Func::Abs => "abs",
            Func::Sqrt => "sqrt",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Node {
    Num(f64),
    Var,
    Neg(Box<Node>),
    Binary(BinOp, Box<Node>, Box<Node>),
    Call(Func, Box<Node>),
}

/// A parsed expression in a single named variable (`x` unless stated).
#[derive(Debug, Clone, PartialEq)]
pub struct FunctionExpr {
    root: Node,
    var: String,
}

impl FunctionExpr {
    pub fn parse(text: &str) -> Result<Self> {
        Self::parse_in(text, "x")
    }

    /// Parses `text` with `var` as the only admissible free identifier.
    pub fn parse_in(text: &str, var: &str) -> Result<Self> {
        let mut parser = Parser { src: text, pos: 0, var };
        let root = parser.expr()?;
        parser.skip_ws();
        if parser.pos < text.len() {
            return Err(parser.syntax("expected operator or end of input"));
        }
        Ok(Self {
            root,
            var: var.to_string(),
        })
    }

    pub fn root(&self) -> &Node {
        &self.root
    }

    pub fn var(&self) -> &str {
        &self.var
    }

    pub fn eval(&self, x: f64) -> Result<f64> {
        eval_node(&self.root, x)
    }

    /// `self ∘ inner`: every occurrence of the variable is replaced by `inner`.
    ///
    /// `f.compose(&FunctionExpr::parse("x^2")?)` is `z ↦ f(z^2)`.
    pub fn compose(&self, inner: &FunctionExpr) -> FunctionExpr {
        FunctionExpr {
            root: substitute(&self.root, &inner.root),
            var: inner.var.clone(),
        }
    }
}

impl FromStr for FunctionExpr {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::parse(s)
    }
}

impl RealFn for FunctionExpr {
    fn call(&self, x: f64) -> Result<f64> {
        self.eval(x)
    }
}

impl fmt::Display for FunctionExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_node(f, &self.root, &self.var)
    }
}

fn write_node(f: &mut fmt::Formatter<'_>, node: &Node, var: &str) -> fmt::Result {
    match node {
        Node::Num(v) => write!(f, "{v}"),
        Node::Var => f.write_str(var),
        Node::Neg(a) => {
            f.write_str("(-")?;
            write_node(f, a, var)?;
            f.write_str(")")
        }
        Node::Binary(op, a, b) => {
            f.write_str("(")?;
            write_node(f, a, var)?;
            write!(f, " {} ", op.symbol())?;
            write_node(f, b, var)?;
            f.write_str(")")
        }
        Node::Call(func, a) => {
            write!(f, "{}(", func.name())?;
            write_node(f, a, var)?;
            f.write_str(")")
        }
    }
}

fn substitute(node: &Node, with: &Node) -> Node {
    match node {
        Node::Num(v) => Node::Num(*v),
        Node::Var => with.clone(),
        Node::Neg(a) => Node::Neg(Box::new(substitute(a, with))),
        Node::Binary(op, a, b) => Node::Binary(*op, Box::new(substitute(a, with)), Box::new(substitute(b, with))),
        Node::Call(func, a) => Node::Call(*func, Box::new(substitute(a, with))),
    }
}

fn eval_node(node: &Node, x: f64) -> Result<f64> {
    let fail = |reason: &str| Error::Evaluation {
        at: x,
        reason: reason.to_string(),
    };
    let v = match node {
        Node::Num(v) => *v,
        Node::Var => x,
        Node::Neg(a) => -eval_node(a, x)?,
        Node::Binary(op, a, b) => {
            let (a, b) = (eval_node(a, x)?, eval_node(b, x)?);
            match op {
                BinOp::Add => a + b,
                BinOp::Sub => a - b,
                BinOp::Mul => a * b,
                BinOp::Div => {
                    if b == 0.0 {
                        return Err(fail("division by zero"));
                    }
                    a / b
                }
                BinOp::Pow => power(a, b).ok_or_else(|| fail("power outside its domain"))?,
            }
        }
        Node::Call(func, a) => {
            let a = eval_node(a, x)?;
            match func {
                Func::Sin => a.sin(),
                Func::Cos => a.cos(),
                Func::Exp => a.exp(),
                Func::Abs => a.abs(),
                Func::Sqrt => {
                    if a < 0.0 {
                        return Err(fail("square root of a negative number"));
                    }
                    a.sqrt()
                }
            }
        }
    };
    if v.is_finite() {
        Ok(v)
    } else {
        Err(fail("non-finite intermediate result"))
    }
}

/// Integer exponents by repeated squaring, so `t^2` is exactly `t * t`.
fn power(base: f64, exponent: f64) -> Option<f64> {
    if exponent.fract() == 0.0 && exponent.abs() <= f64::from(u32::MAX) {
        let mut e = exponent.abs() as u64;
        let mut b = base;
        let mut acc = 1.0;
        while e > 0 {
            if e & 1 == 1 {
                acc *= b;
            }
            e >>= 1;
            if e > 0 {
                b *= b;
            }
        }
        return if exponent < 0.0 {
            (acc != 0.0).then(|| 1.0 / acc)
        } else {
            Some(acc)
        };
    }
    if base > 0.0 {
        Some((exponent * base.ln()).exp())
    } else if base == 0.0 && exponent > 0.0 {
        Some(0.0)
    } else {
        None
    }
}

struct Parser<'a> {
    src: &'a str,
    pos: usize,
    var: &'a str,
}

impl Parser<'_> {
    fn syntax(&self, message: &str) -> Error {
        Error::Syntax {
            offset: self.pos,
            message: message.to_string(),
        }
    }

    fn skip_ws(&mut self) {
        let rest = &self.src[self.pos..];
        self.pos += rest.len() - rest.trim_start().len();
    }

    fn peek(&mut self) -> Option<u8> {
        self.skip_ws();
        self.src.as_bytes().get(self.pos).copied()
    }

    fn eat(&mut self, c: u8) -> bool {
        if self.peek() == Some(c) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expr(&mut self) -> Result<Node> {
        let mut lhs = self.term()?;
        loop {
            let op = match self.peek() {
                Some(b'+') => BinOp::Add,
                Some(b'-') => BinOp::Sub,
                _ => return Ok(lhs),
            };
            self.pos += 1;
            let rhs = self.term()?;
            lhs = Node::Binary(op, Box::new(lhs), Box::new(rhs));
        }
    }

    fn term(&mut self) -> Result<Node> {
        let mut lhs = self.unary()?;
        loop {
            let op = match self.peek() {
                Some(b'*') => BinOp::Mul,
                Some(b'/') => BinOp::Div,
                _ => return Ok(lhs),
            };
            self.pos += 1;
            let rhs = self.unary()?;
            lhs = Node::Binary(op, Box::new(lhs), Box::new(rhs));
        }
    }

    fn unary(&mut self) -> Result<Node> {
        if self.eat(b'-') {
            return Ok(Node::Neg(Box::new(self.unary()?)));
        }
        if self.eat(b'+') {
            return self.unary();
        }
        self.power()
    }

    fn power(&mut self) -> Result<Node> {
        let base = self.atom()?;
        if self.eat(b'^') {
            let exponent = self.unary()?;
            return Ok(Node::Binary(BinOp::Pow, Box::new(base), Box::new(exponent)));
        }
        Ok(base)
    }

    fn atom(&mut self) -> Result<Node> {
        match self.peek() {
            Some(b'(') => {
                self.pos += 1;
                let inner = self.expr()?;
                if !self.eat(b')') {
                    return Err(self.syntax("expected `)`"));
                }
                Ok(inner)
            }
            Some(c) if c.is_ascii_digit() || c == b'.' => self.number(),
            Some(c) if c.is_ascii_alphabetic() || c == b'_' => self.identifier(),
            Some(_) => Err(self.syntax("expected number, variable, function or `(`")),
            None => Err(self.syntax("unexpected end of input, expected an operand")),
        }
    }

    fn number(&mut self) -> Result<Node> {
        let start = self.pos;
        let bytes = self.src.as_bytes();
        let mut end = start;
        while end < bytes.len() && (bytes[end].is_ascii_digit() || bytes[end] == b'.') {
            end += 1;
        }
        if end < bytes.len() && (bytes[end] == b'e' || bytes[end] == b'E') {
            let mut exp_end = end + 1;
            if exp_end < bytes.len() && (bytes[exp_end] == b'+' || bytes[exp_end] == b'-') {
                exp_end += 1;
            }
            if exp_end < bytes.len() && bytes[exp_end].is_ascii_digit() {
                while exp_end < bytes.len() && bytes[exp_end].is_ascii_digit() {
                    exp_end += 1;
                }
                end = exp_end;
            }
        }
        let text = &self.src[start..end];
        let value: f64 = text
            .parse()
            .map_err(|_| self.syntax(&format!("malformed number `{text}`")))?;
        self.pos = end;
        Ok(Node::Num(value))
    }

    fn identifier(&mut self) -> Result<Node> {
        let start = self.pos;
        let bytes = self.src.as_bytes();
        let mut end = start;
        while end < bytes.len() && (bytes[end].is_ascii_alphanumeric() || bytes[end] == b'_') {
            end += 1;
        }
        let name = &self.src[start..end];
        self.pos = end;
        if name == self.var {
            return Ok(Node::Var);
        }
        match Func::from_name(name) {
            Some(func) => {
                if !self.eat(b'(') {
                    return Err(self.syntax(&format!("expected `(` after `{name}`")));
                }
                let arg = self.expr()?;
                if !self.eat(b')') {
                    return Err(self.syntax("expected `)`"));
                }
                Ok(Node::Call(func, Box::new(arg)))
            }
            None => Err(Error::UnknownIdentifier {
                offset: start,
                name: name.to_string(),
            }),
        }
    }
}
