//! Arithmetic expressions over `x`, `y` with symbolic derivatives.
//!
//! Grammar, loosest first: `+ −`, `* /`, unary `−`, right-associative `^`.
//! Identifiers: `x`, `y`, `u0`, `v0`, `pi`. Functions: `sin`, `cos`, `tan`,
//! `exp`, `sqrt`, `ln`.

use std::fmt;

use thiserror::Error;

use crate::construct::{GraphDerivs, GraphSurface};
use crate::jet::Jet2;
use crate::surface::{Domain, JetSource};

/// Byte range in the source text.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Span {
    pub start: usize,
    pub end: usize,
}

impl Span {
    fn new(start: usize, end: usize) -> Self {
        Span { start, end }
    }

    fn join(self, other: Span) -> Span {
        Span::new(self.start.min(other.start), self.end.max(other.end))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Var {
    X,
    Y,
    U0,
    V0,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Func {
    Sin,
    Cos,
    Tan,
    Exp,
    Sqrt,
    Ln,
}

impl Func {
    fn from_name(s: &str) -> Option<Func> {
        Some(match s {
            "sin" => Func::Sin,
            "cos" => Func::Cos,
            "tan" => Func::Tan,
            "exp" => Func::Exp,
            "sqrt" => Func::Sqrt,
            "ln" => Func::Ln,
            _ => return None,
        })
    }

    fn name(self) -> &'static str {
        match self {
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Tan => "tan",
            Func::Exp => "exp",
            Func::Sqrt => "sqrt",
            Func::Ln => "ln",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Node {
    Num(f64),
    Var(Var),
    Neg(Box<Expr>),
    Add(Box<Expr>, Box<Expr>),
    Sub(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
    Div(Box<Expr>, Box<Expr>),
    Pow(Box<Expr>, Box<Expr>),
    Call(Func, Box<Expr>),
}

/// Expression node with the source span it came from. Derivative nodes
/// inherit the span of the node they were derived from.
#[derive(Debug, Clone, PartialEq)]
pub struct Expr {
    pub node: Node,
    pub span: Span,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ExprError {
    #[error("syntax error at offset {}: {message}", span.start)]
    Syntax { message: String, span: Span },
    #[error("unknown identifier {name:?} at offset {}", span.start)]
    UnknownIdentifier { name: String, span: Span },
    #[error("division by zero at offset {}", span.start)]
    DivisionByZero { span: Span },
    #[error("square root of negative value at offset {}", span.start)]
    NegativeSqrt { span: Span },
    #[error("logarithm of non-positive value at offset {}", span.start)]
    LogDomain { span: Span },
    #[error("non-finite value at offset {}", span.start)]
    NonFinite { span: Span },
}

impl ExprError {
    pub fn span(&self) -> Span {
        match self {
            ExprError::Syntax { span, .. }
            | ExprError::UnknownIdentifier { span, .. }
            | ExprError::DivisionByZero { span }
            | ExprError::NegativeSqrt { span }
            | ExprError::LogDomain { span }
            | ExprError::NonFinite { span } => *span,
        }
    }

    /// Message followed by the source line and a caret marker.
    pub fn render(&self, src: &str) -> String {
        let s = self.span();
        let start = s.start.min(src.len());
        let width = s.end.saturating_sub(s.start).max(1);
        let pad = src[..start].chars().count();
        format!(
            "{self}\n  {src}\n  {}{}",
            " ".repeat(pad),
            "^".repeat(width)
        )
    }
}

/// Values of the free identifiers.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Env {
    pub x: f64,
    pub y: f64,
    pub u0: f64,
    pub v0: f64,
}

impl Env {
    pub fn xy(x: f64, y: f64) -> Self {
        Env {
            x,
            y,
            ..Default::default()
        }
    }

    fn get(&self, v: Var) -> f64 {
        match v {
            Var::X => self.x,
            Var::Y => self.y,
            Var::U0 => self.u0,
            Var::V0 => self.v0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Tok {
    Num(f64),
    Ident,
    Plus,
    Minus,
    Star,
    Slash,
    Caret,
    LParen,
    RParen,
    End,
}

struct Lexer<'a> {
    src: &'a str,
    pos: usize,
}

impl<'a> Lexer<'a> {
    fn next(&mut self) -> Result<(Tok, Span), ExprError> {
        let bytes = self.src.as_bytes();
        while self.pos < bytes.len() && bytes[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
        let start = self.pos;
        if start >= bytes.len() {
            return Ok((Tok::End, Span::new(start, start)));
        }
        let b = bytes[start];
        let single = |t| Ok((t, Span::new(start, start + 1)));
        match b {
            b'+' => {
                self.pos += 1;
                single(Tok::Plus)
            }
            b'-' => {
                self.pos += 1;
                single(Tok::Minus)
            }
            b'*' => {
                self.pos += 1;
                single(Tok::Star)
            }
            b'/' => {
                self.pos += 1;
                single(Tok::Slash)
            }
            b'^' => {
                self.pos += 1;
                single(Tok::Caret)
            }
            b'(' => {
                self.pos += 1;
                single(Tok::LParen)
            }
            b')' => {
                self.pos += 1;
                single(Tok::RParen)
            }
            b'0'..=b'9' | b'.' => {
                let mut end = start;
                while end < bytes.len() && (bytes[end].is_ascii_digit() || bytes[end] == b'.') {
                    end += 1;
                }
                if end < bytes.len() && (bytes[end] == b'e' || bytes[end] == b'E') {
                    let mut e = end + 1;
                    if e < bytes.len() && (bytes[e] == b'+' || bytes[e] == b'-') {
                        e += 1;
                    }
                    if e < bytes.len() && bytes[e].is_ascii_digit() {
                        while e < bytes.len() && bytes[e].is_ascii_digit() {
                            e += 1;
                        }
                        end = e;
                    }
                }
                self.pos = end;
                let span = Span::new(start, end);
                let v: f64 = self.src[start..end]
                    .parse()
                    .map_err(|_| ExprError::Syntax {
                        message: format!("malformed number {:?}", &self.src[start..end]),
                        span,
                    })?;
                Ok((Tok::Num(v), span))
            }
            c if c.is_ascii_alphabetic() || c == b'_' => {
                let mut end = start;
                while end < bytes.len()
                    && (bytes[end].is_ascii_alphanumeric() || bytes[end] == b'_')
                {
                    end += 1;
                }
                self.pos = end;
                Ok((Tok::Ident, Span::new(start, end)))
            }
            _ => {
                let ch = self.src[start..].chars().next().unwrap_or('?');
                Err(ExprError::Syntax {
                    message: format!("unexpected character {ch:?}"),
                    span: Span::new(start, start + ch.len_utf8()),
                })
            }
        }
    }
}

struct Parser<'a> {
    lex: Lexer<'a>,
    tok: Tok,
    span: Span,
}

impl<'a> Parser<'a> {
    fn bump(&mut self) -> Result<(), ExprError> {
        let (t, s) = self.lex.next()?;
        self.tok = t;
        self.span = s;
        Ok(())
    }

    fn unexpected(&self, what: &str) -> ExprError {
        let found = match self.tok {
            Tok::End => "end of input".to_string(),
            _ => format!("{:?}", &self.lex.src[self.span.start..self.span.end]),
        };
        ExprError::Syntax {
            message: format!("expected {what}, found {found}"),
            span: self.span,
        }
    }

    fn sum(&mut self) -> Result<Expr, ExprError> {
        let mut lhs = self.product()?;
        while matches!(self.tok, Tok::Plus | Tok::Minus) {
            let op = self.tok;
            self.bump()?;
            let rhs = self.product()?;
            let span = lhs.span.join(rhs.span);
            let node = if op == Tok::Plus {
                Node::Add(Box::new(lhs), Box::new(rhs))
            } else {
                Node::Sub(Box::new(lhs), Box::new(rhs))
            };
            lhs = Expr { node, span };
        }
        Ok(lhs)
    }

    fn product(&mut self) -> Result<Expr, ExprError> {
        let mut lhs = self.unary()?;
        while matches!(self.tok, Tok::Star | Tok::Slash) {
            let op = self.tok;
            self.bump()?;
            let rhs = self.unary()?;
            let span = lhs.span.join(rhs.span);
            let node = if op == Tok::Star {
                Node::Mul(Box::new(lhs), Box::new(rhs))
            } else {
                Node::Div(Box::new(lhs), Box::new(rhs))
            };
            lhs = Expr { node, span };
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<Expr, ExprError> {
        if self.tok == Tok::Minus {
            let start = self.span.start;
            self.bump()?;
            let inner = self.unary()?;
            let span = Span::new(start, inner.span.end);
            return Ok(Expr {
                node: Node::Neg(Box::new(inner)),
                span,
            });
        }
        self.power()
    }

    fn power(&mut self) -> Result<Expr, ExprError> {
        let base = self.atom()?;
        if self.tok == Tok::Caret {
            self.bump()?;
            let exp = self.unary()?;
            let span = base.span.join(exp.span);
            return Ok(Expr {
                node: Node::Pow(Box::new(base), Box::new(exp)),
                span,
            });
        }
        Ok(base)
    }

    fn atom(&mut self) -> Result<Expr, ExprError> {
        let span = self.span;
        match self.tok {
            Tok::Num(v) => {
                self.bump()?;
                Ok(Expr {
                    node: Node::Num(v),
                    span,
                })
            }
            Tok::LParen => {
                self.bump()?;
                let inner = self.sum()?;
                if self.tok != Tok::RParen {
                    return Err(self.unexpected("')'"));
                }
                let end = self.span.end;
                self.bump()?;
                Ok(Expr {
                    span: Span::new(span.start, end),
                    ..inner
                })
            }
            Tok::Ident => {
                let name = &self.lex.src[span.start..span.end];
                let node = match name {
                    "x" => Some(Node::Var(Var::X)),
                    "y" => Some(Node::Var(Var::Y)),
                    "u0" => Some(Node::Var(Var::U0)),
                    "v0" => Some(Node::Var(Var::V0)),
                    "pi" => Some(Node::Num(std::f64::consts::PI)),
                    _ => None,
                };
                if let Some(node) = node {
                    self.bump()?;
                    return Ok(Expr { node, span });
                }
                let Some(func) = Func::from_name(name) else {
                    return Err(ExprError::UnknownIdentifier {
                        name: name.to_string(),
                        span,
                    });
                };
                self.bump()?;
                if self.tok != Tok::LParen {
                    return Err(self.unexpected(&format!("'(' after {}", func.name())));
                }
                self.bump()?;
                let arg = self.sum()?;
                if self.tok != Tok::RParen {
                    return Err(self.unexpected("')'"));
                }
                let end = self.span.end;
                self.bump()?;
                Ok(Expr {
                    node: Node::Call(func, Box::new(arg)),
                    span: Span::new(span.start, end),
                })
            }
            _ => Err(self.unexpected("a number, identifier or '('")),
        }
    }
}

/// Parses `src` into an expression tree.
pub fn parse_expr(src: &str) -> Result<Expr, ExprError> {
    let mut p = Parser {
        lex: Lexer { src, pos: 0 },
        tok: Tok::End,
        span: Span::default(),
    };
    p.bump()?;
    let e = p.sum()?;
    if p.tok != Tok::End {
        return Err(p.unexpected("an operator or end of input"));
    }
    Ok(e)
}

fn num(v: f64, span: Span) -> Expr {
    Expr {
        node: Node::Num(v),
        span,
    }
}

fn as_num(e: &Expr) -> Option<f64> {
    match e.node {
        Node::Num(v) => Some(v),
        _ => None,
    }
}

fn add(a: Expr, b: Expr, span: Span) -> Expr {
    match (as_num(&a), as_num(&b)) {
        (Some(x), Some(y)) => num(x + y, span),
        (Some(0.0), _) => b,
        (_, Some(0.0)) => a,
        _ => Expr {
            node: Node::Add(Box::new(a), Box::new(b)),
            span,
        },
    }
}

fn sub(a: Expr, b: Expr, span: Span) -> Expr {
    match (as_num(&a), as_num(&b)) {
        (Some(x), Some(y)) => num(x - y, span),
        (Some(0.0), _) => neg(b, span),
        (_, Some(0.0)) => a,
        _ => Expr {
            node: Node::Sub(Box::new(a), Box::new(b)),
            span,
        },
    }
}

fn mul(a: Expr, b: Expr, span: Span) -> Expr {
    if let (Some(x), Node::Mul(l, r)) = (as_num(&a), &b.node) {
        if let Some(y) = as_num(l) {
            return mul(num(x * y, span), (**r).clone(), span);
        }
    }
    if let (Node::Mul(l, r), Some(y)) = (&a.node, as_num(&b)) {
        if let Some(x) = as_num(l) {
            return mul(num(x * y, span), (**r).clone(), span);
        }
    }
    match (as_num(&a), as_num(&b)) {
        (Some(x), Some(y)) => num(x * y, span),
        (Some(0.0), _) | (_, Some(0.0)) => num(0.0, span),
        (Some(1.0), _) => b,
        (_, Some(1.0)) => a,
        _ => Expr {
            node: Node::Mul(Box::new(a), Box::new(b)),
            span,
        },
    }
}

fn div(a: Expr, b: Expr, span: Span) -> Expr {
    match (as_num(&a), as_num(&b)) {
        (Some(0.0), _) => num(0.0, span),
        (_, Some(1.0)) => a,
        _ => Expr {
            node: Node::Div(Box::new(a), Box::new(b)),
            span,
        },
    }
}

fn neg(a: Expr, span: Span) -> Expr {
    match a.node {
        Node::Num(v) => num(-v, span),
        Node::Neg(inner) => *inner,
        _ => Expr {
            node: Node::Neg(Box::new(a)),
            span,
        },
    }
}

fn pow(a: Expr, b: Expr, span: Span) -> Expr {
    match as_num(&b) {
        Some(0.0) => num(1.0, span),
        Some(1.0) => a,
        _ => Expr {
            node: Node::Pow(Box::new(a), Box::new(b)),
            span,
        },
    }
}

fn call(f: Func, a: Expr, span: Span) -> Expr {
    Expr {
        node: Node::Call(f, Box::new(a)),
        span,
    }
}

impl Expr {
    /// Whether the tree mentions `v`.
    pub fn depends_on(&self, v: Var) -> bool {
        match &self.node {
            Node::Num(_) => false,
            Node::Var(w) => *w == v,
            Node::Neg(a) | Node::Call(_, a) => a.depends_on(v),
            Node::Add(a, b)
            | Node::Sub(a, b)
            | Node::Mul(a, b)
            | Node::Div(a, b)
            | Node::Pow(a, b) => a.depends_on(v) || b.depends_on(v),
        }
    }

    /// Symbolic partial derivative with respect to `v`.
    pub fn diff(&self, v: Var) -> Expr {
        let s = self.span;
        match &self.node {
            Node::Num(_) => num(0.0, s),
            Node::Var(w) => num(if *w == v { 1.0 } else { 0.0 }, s),
            Node::Neg(a) => neg(a.diff(v), s),
            Node::Add(a, b) => add(a.diff(v), b.diff(v), s),
            Node::Sub(a, b) => sub(a.diff(v), b.diff(v), s),
            Node::Mul(a, b) => add(
                mul(a.diff(v), (**b).clone(), s),
                mul((**a).clone(), b.diff(v), s),
                s,
            ),
            Node::Div(a, b) if !b.depends_on(v) => div(a.diff(v), (**b).clone(), s),
            Node::Div(a, b) => {
                let top = sub(
                    mul(a.diff(v), (**b).clone(), s),
                    mul((**a).clone(), b.diff(v), s),
                    s,
                );
                div(top, pow((**b).clone(), num(2.0, s), s), s)
            }
            Node::Pow(a, b) => {
                if !b.depends_on(v) {
                    let e1 = sub((**b).clone(), num(1.0, s), s);
                    mul(
                        mul((**b).clone(), pow((**a).clone(), e1, s), s),
                        a.diff(v),
                        s,
                    )
                } else {
                    // a^b·(b′·ln a + b·a′/a)
                    let t1 = mul(b.diff(v), call(Func::Ln, (**a).clone(), s), s);
                    let t2 = div(mul((**b).clone(), a.diff(v), s), (**a).clone(), s);
                    mul(self.clone(), add(t1, t2, s), s)
                }
            }
            Node::Call(f, a) => {
                let da = a.diff(v);
                let a = (**a).clone();
                let outer = match f {
                    Func::Sin => call(Func::Cos, a, s),
                    Func::Cos => neg(call(Func::Sin, a, s), s),
                    Func::Tan => div(num(1.0, s), pow(call(Func::Cos, a, s), num(2.0, s), s), s),
                    Func::Exp => self.clone(),
                    Func::Sqrt => div(num(1.0, s), mul(num(2.0, s), self.clone(), s), s),
                    Func::Ln => div(num(1.0, s), a, s),
                };
                mul(outer, da, s)
            }
        }
    }

    /// Evaluates the tree, reporting domain errors with the offending span.
    pub fn eval(&self, env: &Env) -> Result<f64, ExprError> {
        let s = self.span;
        let out = match &self.node {
            Node::Num(v) => *v,
            Node::Var(v) => env.get(*v),
            Node::Neg(a) => -a.eval(env)?,
            Node::Add(a, b) => a.eval(env)? + b.eval(env)?,
            Node::Sub(a, b) => a.eval(env)? - b.eval(env)?,
            Node::Mul(a, b) => a.eval(env)? * b.eval(env)?,
            Node::Div(a, b) => {
                let d = b.eval(env)?;
                if d == 0.0 {
                    return Err(ExprError::DivisionByZero { span: s });
                }
                a.eval(env)? / d
            }
            Node::Pow(a, b) => {
                let (x, y) = (a.eval(env)?, b.eval(env)?);
                if x == 0.0 && y < 0.0 {
                    return Err(ExprError::DivisionByZero { span: s });
                }
                if y.fract() == 0.0 && y.abs() <= i32::MAX as f64 {
                    x.powi(y as i32)
                } else {
                    x.powf(y)
                }
            }
            Node::Call(f, a) => {
                let x = a.eval(env)?;
                match f {
                    Func::Sin => x.sin(),
                    Func::Cos => x.cos(),
                    Func::Tan => x.tan(),
                    Func::Exp => x.exp(),
                    Func::Sqrt => {
                        if x < 0.0 {
                            return Err(ExprError::NegativeSqrt { span: s });
                        }
                        x.sqrt()
                    }
                    Func::Ln => {
                        if !(x > 0.0) {
                            return Err(ExprError::LogDomain { span: s });
                        }
                        x.ln()
                    }
                }
            }
        };
        if out.is_finite() {
            Ok(out)
        } else {
            Err(ExprError::NonFinite { span: s })
        }
    }

    /// Derivative trees up to order two in `x` and `y`.
    pub fn derivatives(&self) -> ExprDerivs {
        let fx = self.diff(Var::X);
        let fy = self.diff(Var::Y);
        ExprDerivs {
            fxx: fx.diff(Var::X),
            fxy: fx.diff(Var::Y),
            fyy: fy.diff(Var::Y),
            f: self.clone(),
            fx,
            fy,
        }
    }
}

fn prec(n: &Node) -> u8 {
    match n {
        Node::Add(..) | Node::Sub(..) => 1,
        Node::Mul(..) | Node::Div(..) => 2,
        Node::Neg(..) => 3,
        Node::Pow(..) => 4,
        Node::Num(v) if *v < 0.0 => 3,
        _ => 5,
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let wrap = |f: &mut fmt::Formatter<'_>, e: &Expr, min: u8| {
            if prec(&e.node) < min {
                write!(f, "({e})")
            } else {
                write!(f, "{e}")
            }
        };
        match &self.node {
            Node::Num(v) => write!(f, "{v}"),
            Node::Var(v) => f.write_str(match v {
                Var::X => "x",
                Var::Y => "y",
                Var::U0 => "u0",
                Var::V0 => "v0",
            }),
            Node::Neg(a) => {
                f.write_str("-")?;
                wrap(f, a, 3)
            }
            Node::Add(a, b) => {
                wrap(f, a, 1)?;
                f.write_str(" + ")?;
                wrap(f, b, 2)
            }
            Node::Sub(a, b) => {
                wrap(f, a, 1)?;
                f.write_str(" - ")?;
                wrap(f, b, 2)
            }
            Node::Mul(a, b) => {
                wrap(f, a, 2)?;
                f.write_str("*")?;
                wrap(f, b, 3)
            }
            Node::Div(a, b) => {
                wrap(f, a, 2)?;
                f.write_str("/")?;
                wrap(f, b, 3)
            }
            Node::Pow(a, b) => {
                wrap(f, a, 5)?;
                f.write_str("^")?;
                wrap(f, b, 3)
            }
            Node::Call(func, a) => write!(f, "{}({a})", func.name()),
        }
    }
}

/// A function and its symbolic partial derivatives up to order two.
#[derive(Debug, Clone, PartialEq)]
pub struct ExprDerivs {
    pub f: Expr,
    pub fx: Expr,
    pub fy: Expr,
    pub fxx: Expr,
    pub fxy: Expr,
    pub fyy: Expr,
}

impl ExprDerivs {
    pub fn parse(src: &str) -> Result<Self, ExprError> {
        Ok(parse_expr(src)?.derivatives())
    }

    /// Jet in `(x, y)` at `env`.
    pub fn jet(&self, env: &Env) -> Result<Jet2, ExprError> {
        Ok(Jet2 {
            v: self.f.eval(env)?,
            du: self.fx.eval(env)?,
            dv: self.fy.eval(env)?,
            duu: self.fxx.eval(env)?,
            duv: self.fxy.eval(env)?,
            dvv: self.fyy.eval(env)?,
        })
    }

    /// `[f, f_x, f_xx]` at `env`, for profiles in `x`.
    pub fn profile(&self, env: &Env) -> Result<[f64; 3], ExprError> {
        Ok([self.f.eval(env)?, self.fx.eval(env)?, self.fxx.eval(env)?])
    }

    pub fn depends_on(&self, v: Var) -> bool {
        self.f.depends_on(v)
    }
}

/// Graph `(x, y, f, g)` of two parsed expressions with symbolic jets.
#[derive(Debug, Clone)]
pub struct ExprGraph {
    domain: Domain,
    f: ExprDerivs,
    g: ExprDerivs,
    env: Env,
}

impl ExprGraph {
    pub fn new(domain: Domain, f: ExprDerivs, g: ExprDerivs) -> Self {
        ExprGraph {
            domain,
            f,
            g,
            env: Env::default(),
        }
    }

    pub fn parse(domain: Domain, f: &str, g: &str) -> Result<Self, ExprError> {
        Ok(Self::new(
            domain,
            ExprDerivs::parse(f)?,
            ExprDerivs::parse(g)?,
        ))
    }

    /// Values of `u0`, `v0` used during evaluation.
    pub fn with_seed(mut self, u0: f64, v0: f64) -> Self {
        self.env.u0 = u0;
        self.env.v0 = v0;
        self
    }

    /// Jets at `(x, y)`, or the first evaluation error.
    pub fn try_derivs(&self, x: f64, y: f64) -> Result<GraphDerivs, ExprError> {
        let env = Env { x, y, ..self.env };
        Ok(GraphDerivs {
            f: self.f.jet(&env)?,
            g: self.g.jet(&env)?,
        })
    }
}

impl GraphSurface for ExprGraph {
    fn domain(&self) -> Domain {
        self.domain
    }

    fn derivs(&self, x: f64, y: f64) -> Option<GraphDerivs> {
        self.try_derivs(x, y).ok()
    }

    fn source(&self) -> JetSource {
        JetSource::Analytic
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ev(src: &str, x: f64, y: f64) -> f64 {
        parse_expr(src).unwrap().eval(&Env::xy(x, y)).unwrap()
    }

    #[test]
    fn precedence() {
        assert_eq!(ev("1 + 2*3", 0.0, 0.0), 7.0);
        assert_eq!(ev("-2^2", 0.0, 0.0), -4.0);
        assert_eq!(ev("2^3^2", 0.0, 0.0), 512.0);
        assert_eq!(ev("2^-1", 0.0, 0.0), 0.5);
        assert_eq!(ev("8/4/2", 0.0, 0.0), 1.0);
        assert_eq!(ev("x - y - 1", 5.0, 2.0), 2.0);
        assert!((ev("pi", 0.0, 0.0) - std::f64::consts::PI).abs() < 1e-16);
        assert_eq!(ev("1.5e2 + 2E-1", 0.0, 0.0), 150.2);
    }

    #[test]
    fn polynomial_derivative() {
        let d = ExprDerivs::parse("x^2 + x*0.5").unwrap();
        assert_eq!(d.fx.eval(&Env::xy(1.0, 0.0)).unwrap(), 2.5);
        assert_eq!(d.fxx.eval(&Env::xy(1.0, 0.0)).unwrap(), 2.0);
    }

    #[test]
    fn mixed_partial_of_sin_xy() {
        let d = ExprDerivs::parse("sin(x*y)").unwrap();
        assert_eq!(d.fxy.eval(&Env::xy(0.0, 0.0)).unwrap(), 1.0);
    }

    #[test]
    fn trailing_operator_error_offset() {
        match parse_expr("x +") {
            Err(ExprError::Syntax { span, .. }) => assert_eq!(span.start, 3),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn unknown_identifier() {
        match parse_expr("2*z") {
            Err(ExprError::UnknownIdentifier { name, span }) => {
                assert_eq!(name, "z");
                assert_eq!(span, Span::new(2, 3));
            }
            other => panic!("{other:?}"),
        }
        assert!(matches!(
            parse_expr("foo(x)"),
            Err(ExprError::UnknownIdentifier { .. })
        ));
        assert!(matches!(parse_expr("(x"), Err(ExprError::Syntax { .. })));
        assert!(matches!(
            parse_expr("x $ y"),
            Err(ExprError::Syntax {
                span: Span { start: 2, .. },
                ..
            })
        ));
    }

    #[test]
    fn expression_graph_jets() {
        let d = Domain::new(-1.0, 1.0, -1.0, 1.0).unwrap();
        let g = ExprGraph::parse(d, "x*y", "exp(x) + u0")
            .unwrap()
            .with_seed(2.0, 0.0);
        let j = g.derivs(0.5, 3.0).unwrap();
        assert_eq!((j.f.v, j.f.du, j.f.dv, j.f.duv), (1.5, 3.0, 0.5, 1.0));
        assert!((j.g.v - 0.5f64.exp() - 2.0).abs() < 1e-15);
        let bad = ExprGraph::parse(d, "ln(x)", "0").unwrap();
        assert!(bad.derivs(-0.5, 0.0).is_none());
    }

    #[test]
    fn domain_errors_carry_spans() {
        let e = parse_expr("1 + 1/(x - 1)").unwrap();
        assert_eq!(
            e.eval(&Env::xy(1.0, 0.0)),
            Err(ExprError::DivisionByZero {
                span: Span::new(4, 13)
            })
        );
        let e = parse_expr("x + sqrt(y)").unwrap();
        assert_eq!(
            e.eval(&Env::xy(0.0, -1.0)),
            Err(ExprError::NegativeSqrt {
                span: Span::new(4, 11)
            })
        );
        let r = ExprError::NegativeSqrt {
            span: Span::new(4, 11),
        }
        .render("x + sqrt(y)");
        assert!(r.ends_with("    ^^^^^^^"), "{r}");
    }

    #[test]
    fn variable_exponent() {
        let d = ExprDerivs::parse("x^y").unwrap();
        let env = Env::xy(2.0, 3.0);
        assert!((d.fx.eval(&env).unwrap() - 12.0).abs() < 1e-12);
        assert!((d.fy.eval(&env).unwrap() - 8.0 * 2f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn display_round_trips() {
        for src in [
            "x^2 + x*0.5",
            "-(x - y)^2",
            "sin(x*y)/(1 + x)",
            "2^3^2",
            "x - (y - 1)",
        ] {
            let e = parse_expr(src).unwrap();
            let again = parse_expr(&e.to_string()).unwrap();
            let env = Env::xy(0.3, 0.7);
            assert_eq!(
                e.eval(&env).unwrap(),
                again.eval(&env).unwrap(),
                "{src} -> {e}"
            );
        }
    }

    #[test]
    fn seed_identifiers() {
        let d = ExprDerivs::parse("x^2 + x*u0").unwrap();
        let env = Env {
            x: 0.1,
            u0: -1.5,
            ..Default::default()
        };
        let p = d.profile(&env).unwrap();
        for (a, b) in p.iter().zip([0.01 - 0.15, 0.2 - 1.5, 2.0]) {
            assert!((a - b).abs() < 1e-15, "{p:?}");
        }
    }
}
