//! Expression language for velocity laws and initial data.
//!
//! Grammar, lowest to highest precedence:
//!
//! ```text
//! expr    := term (('+' | '-') term)*
//! term    := unary (('*' | '/') unary)*
//! unary   := '-' unary | power
//! power   := atom ('^' unary)?          right-associative
//! atom    := number | 'pi' | var | func '(' expr ')' | '(' expr ')'
//! var     := 'x' | 't' | 'u'
//! func    := 'sin' | 'cos' | 'exp'
//! ```
//!
//! Unary minus binds looser than `^`, so `-x^2` reads as `-(x^2)`.
//! Binary operators evaluate their left operand first.

use std::fmt;

use thiserror::Error;

/// Independent variables an expression may reference.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Var {
    /// Position.
    X,
    /// Time.
    T,
    /// The transported quantity itself.
    U,
}

impl Var {
    pub fn name(self) -> &'static str {
        match self {
            Var::X => "x",
            Var::T => "t",
            Var::U => "u",
        }
    }
}

/// Built-in functions. The set is closed: adding one means extending this
/// enum, [`Func::apply`] and the identifier table in the parser.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Func {
    Sin,
    Cos,
    Exp,
}

impl Func {
    pub fn name(self) -> &'static str {
        match self {
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Exp => "exp",
        }
    }

    fn apply(self, arg: f64) -> f64 {
        match self {
            Func::Sin => arg.sin(),
            Func::Cos => arg.cos(),
            Func::Exp => arg.exp(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
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

    fn precedence(self) -> u8 {
        match self {
            BinOp::Add | BinOp::Sub => PREC_ADD,
            BinOp::Mul | BinOp::Div => PREC_MUL,
            BinOp::Pow => PREC_POW,
        }
    }
}

const PREC_ADD: u8 = 1;
const PREC_MUL: u8 = 2;
const PREC_NEG: u8 = 3;
const PREC_POW: u8 = 4;
const PREC_ATOM: u8 = 5;

/// Syntax tree node.
#[derive(Clone, Debug, PartialEq)]
pub enum Expr {
    Const(f64),
    Var(Var),
    Neg(Box<Expr>),
    Binary(BinOp, Box<Expr>, Box<Expr>),
    Call(Func, Box<Expr>),
}

impl Expr {
    pub fn binary(op: BinOp, lhs: Expr, rhs: Expr) -> Expr {
        Expr::Binary(op, Box::new(lhs), Box::new(rhs))
    }

    fn precedence(&self) -> u8 {
        match self {
            Expr::Const(_) | Expr::Var(_) | Expr::Call(..) => PREC_ATOM,
            Expr::Neg(_) => PREC_NEG,
            Expr::Binary(op, ..) => op.precedence(),
        }
    }

    fn visit_vars(&self, seen: &mut [bool; 3]) {
        match self {
            Expr::Const(_) => {}
            Expr::Var(v) => seen[*v as usize] = true,
            Expr::Neg(e) | Expr::Call(_, e) => e.visit_vars(seen),
            Expr::Binary(_, l, r) => {
                l.visit_vars(seen);
                r.visit_vars(seen);
            }
        }
    }

    fn eval(&self, env: &[f64; 3]) -> Result<f64, EvalError> {
        let value = match self {
            Expr::Const(c) => *c,
            Expr::Var(v) => env[*v as usize],
            Expr::Neg(e) => -e.eval(env)?,
            Expr::Call(f, e) => f.apply(e.eval(env)?),
            Expr::Binary(op, l, r) => {
                let a = l.eval(env)?;
                let b = r.eval(env)?;
                match op {
                    BinOp::Add => a + b,
                    BinOp::Sub => a - b,
                    BinOp::Mul => a * b,
                    BinOp::Div => {
                        if b == 0.0 {
                            return Err(EvalError::DivisionByZero);
                        }
                        a / b
                    }
                    BinOp::Pow => power(a, b)?,
                }
            }
        };
        if value.is_finite() {
            Ok(value)
        } else {
            Err(EvalError::NonFinite)
        }
    }
}

/// Small non-negative integer exponents go through repeated multiplication so
/// that `x^2` is bitwise `x*x`.
fn power(base: f64, exponent: f64) -> Result<f64, EvalError> {
    let integral = exponent.fract() == 0.0;
    if integral && (0.0..=16.0).contains(&exponent) {
        let mut acc = 1.0;
        for _ in 0..exponent as u32 {
            acc *= base;
        }
        return Ok(acc);
    }
    if base < 0.0 && !integral {
        return Err(EvalError::NegativeBase { base, exponent });
    }
    Ok(base.powf(exponent))
}

struct Child<'a> {
    expr: &'a Expr,
    min_prec: u8,
}

impl fmt::Display for Child<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.expr.precedence() < self.min_prec {
            write!(f, "({})", self.expr)
        } else {
            write!(f, "{}", self.expr)
        }
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            // Negative constants are not produced by the parser; parenthesize
            // so the printed form at least re-parses to the same value.
            Expr::Const(c) if c.is_sign_negative() => write!(f, "({c})"),
            Expr::Const(c) => write!(f, "{c}"),
            Expr::Var(v) => f.write_str(v.name()),
            Expr::Neg(e) => write!(
                f,
                "-{}",
                Child {
                    expr: e,
                    min_prec: PREC_NEG
                }
            ),
            Expr::Call(func, e) => write!(f, "{}({})", func.name(), e),
            Expr::Binary(BinOp::Pow, l, r) => write!(
                f,
                "{}^{}",
                Child {
                    expr: l,
                    min_prec: PREC_ATOM
                },
                Child {
                    expr: r,
                    min_prec: PREC_NEG
                }
            ),
            Expr::Binary(op, l, r) => {
                let p = op.precedence();
                write!(
                    f,
                    "{} {} {}",
                    Child { expr: l, min_prec: p },
                    op.symbol(),
                    Child {
                        expr: r,
                        min_prec: p + 1
                    }
                )
            }
        }
    }
}

/// Which variables a law depends on.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DependenceClass {
    Constant,
    SpaceOnly,
    TimeOnly,
    SpaceTime,
    StateDependent,
}

#[derive(Debug, Clone, PartialEq, Error)]
#[error("parse error at offset {offset}: expected {expected}, found {found}")]
pub struct ParseError {
    /// Byte offset into the source text.
    pub offset: usize,
    pub expected: String,
    pub found: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Error)]
pub enum EvalError {
    #[error("division by zero")]
    DivisionByZero,
    #[error("non-finite result")]
    NonFinite,
    #[error("negative base {base} raised to non-integer exponent {exponent}")]
    NegativeBase { base: f64, exponent: f64 },
}

/// A parsed expression in `x`, `t` and `u`.
#[derive(Clone, Debug, PartialEq)]
pub struct VelocityExpr {
    root: Expr,
}

impl VelocityExpr {
    pub fn parse(src: &str) -> Result<Self, ParseError> {
        parse_expr(src)
    }

    pub fn from_root(root: Expr) -> Self {
        Self { root }
    }

    pub fn constant(value: f64) -> Self {
        Self {
            root: Expr::Const(value),
        }
    }

    pub fn root(&self) -> &Expr {
        &self.root
    }

    pub fn eval(&self, x: f64, t: f64, u: f64) -> Result<f64, EvalError> {
        self.root.eval(&[x, t, u])
    }

    pub fn depends_on(&self, var: Var) -> bool {
        let mut seen = [false; 3];
        self.root.visit_vars(&mut seen);
        seen[var as usize]
    }

    pub fn classify(&self) -> DependenceClass {
        let mut seen = [false; 3];
        self.root.visit_vars(&mut seen);
        match seen {
            [_, _, true] => DependenceClass::StateDependent,
            [false, false, false] => DependenceClass::Constant,
            [true, false, false] => DependenceClass::SpaceOnly,
            [false, true, false] => DependenceClass::TimeOnly,
            [true, true, false] => DependenceClass::SpaceTime,
        }
    }

    /// Largest `|expr|` over a tensor lattice of `samples` points per axis.
    ///
    /// This is a lower bound on the true supremum; it is exact for laws that
    /// are monotone along each axis, since the lattice includes the corners.
    ///
    /// Panics if `samples < 2`.
    pub fn max_abs_on_box(
        &self,
        x_range: (f64, f64),
        t_range: (f64, f64),
        u_range: (f64, f64),
        samples: usize,
    ) -> Result<f64, EvalError> {
        self.argmax_abs_on_box(x_range, t_range, u_range, samples)
            .map(|m| m.value)
    }

    pub fn argmax_abs_on_box(
        &self,
        x_range: (f64, f64),
        t_range: (f64, f64),
        u_range: (f64, f64),
        samples: usize,
    ) -> Result<BoxMaximum, EvalError> {
        assert!(samples >= 2, "need at least two samples per axis");
        let xs = lattice(x_range, samples);
        let ts = lattice(t_range, samples);
        let us = lattice(u_range, samples);
        let mut best = BoxMaximum {
            value: -1.0,
            x: x_range.0,
            t: t_range.0,
            u: u_range.0,
        };
        for &x in &xs {
            for &t in &ts {
                for &u in &us {
                    let v = self.eval(x, t, u)?.abs();
                    if v > best.value {
                        best = BoxMaximum { value: v, x, t, u };
                    }
                }
            }
        }
        Ok(best)
    }
}

impl fmt::Display for VelocityExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.root.fmt(f)
    }
}

impl std::str::FromStr for VelocityExpr {
    type Err = ParseError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        parse_expr(s)
    }
}

/// Sampled maximum of `|expr|` and where it was attained.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BoxMaximum {
    pub value: f64,
    pub x: f64,
    pub t: f64,
    pub u: f64,
}

fn lattice((lo, hi): (f64, f64), samples: usize) -> Vec<f64> {
    if lo == hi {
        return vec![lo];
    }
    let last = samples - 1;
    (0..samples)
        .map(|k| {
            if k == last {
                hi
            } else {
                lo + (hi - lo) * k as f64 / last as f64
            }
        })
        .collect()
}

pub fn parse_expr(src: &str) -> Result<VelocityExpr, ParseError> {
    let mut parser = Parser {
        src: src.as_bytes(),
        pos: 0,
    };
    let root = parser.expr()?;
    parser.skip_ws();
    if parser.pos < parser.src.len() {
        return Err(parser.error("operator or end of input"));
    }
    Ok(VelocityExpr { root })
}

struct Parser<'a> {
    src: &'a [u8],
    pos: usize,
}

impl Parser<'_> {
    fn skip_ws(&mut self) {
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.skip_ws();
        self.src.get(self.pos).copied()
    }

    fn error(&self, expected: &str) -> ParseError {
        let found = match std::str::from_utf8(&self.src[self.pos..])
            .ok()
            .and_then(|s| s.chars().next())
        {
            Some(c) => format!("'{c}'"),
            None if self.pos >= self.src.len() => "end of input".to_string(),
            None => "invalid UTF-8".to_string(),
        };
        ParseError {
            offset: self.pos,
            expected: expected.to_string(),
            found,
        }
    }

    fn expr(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.term()?;
        loop {
            let op = match self.peek() {
                Some(b'+') => BinOp::Add,
                Some(b'-') => BinOp::Sub,
                _ => return Ok(lhs),
            };
            self.pos += 1;
            let rhs = self.term()?;
            lhs = Expr::binary(op, lhs, rhs);
        }
    }

    fn term(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.unary()?;
        loop {
            let op = match self.peek() {
                Some(b'*') => BinOp::Mul,
                Some(b'/') => BinOp::Div,
                _ => return Ok(lhs),
            };
            self.pos += 1;
            let rhs = self.unary()?;
            lhs = Expr::binary(op, lhs, rhs);
        }
    }

    fn unary(&mut self) -> Result<Expr, ParseError> {
        if self.peek() == Some(b'-') {
            self.pos += 1;
            return Ok(Expr::Neg(Box::new(self.unary()?)));
        }
        self.power()
    }

    fn power(&mut self) -> Result<Expr, ParseError> {
        let base = self.atom()?;
        if self.peek() == Some(b'^') {
            self.pos += 1;
            let exponent = self.unary()?;
            return Ok(Expr::binary(BinOp::Pow, base, exponent));
        }
        Ok(base)
    }

    fn atom(&mut self) -> Result<Expr, ParseError> {
        match self.peek() {
            Some(c) if c.is_ascii_digit() || c == b'.' => self.number(),
            Some(c) if c.is_ascii_alphabetic() => self.identifier(),
            Some(b'(') => {
                self.pos += 1;
                let inner = self.expr()?;
                self.expect(b')')?;
                Ok(inner)
            }
            _ => Err(self.error("number, variable, function call or '('")),
        }
    }

    fn expect(&mut self, byte: u8) -> Result<(), ParseError> {
        if self.peek() == Some(byte) {
            self.pos += 1;
            Ok(())
        } else {
            Err(self.error(&format!("'{}'", byte as char)))
        }
    }

    fn number(&mut self) -> Result<Expr, ParseError> {
        let start = self.pos;
        let digits = |p: &mut Self| {
            let from = p.pos;
            while p.pos < p.src.len() && p.src[p.pos].is_ascii_digit() {
                p.pos += 1;
            }
            p.pos - from
        };
        let mut count = digits(self);
        if self.src.get(self.pos) == Some(&b'.') {
            self.pos += 1;
            count += digits(self);
        }
        if count == 0 {
            self.pos = start;
            return Err(self.error("digits"));
        }
        if matches!(self.src.get(self.pos), Some(b'e' | b'E')) {
            let mark = self.pos;
            self.pos += 1;
            if matches!(self.src.get(self.pos), Some(b'+' | b'-')) {
                self.pos += 1;
            }
            if digits(self) == 0 {
                // Not an exponent; leave the 'e' for the caller to reject.
                self.pos = mark;
            }
        }
        let text = std::str::from_utf8(&self.src[start..self.pos]).expect("ascii digits");
        match text.parse::<f64>() {
            Ok(v) if v.is_finite() => Ok(Expr::Const(v)),
            _ => {
                self.pos = start;
                Err(self.error("finite number"))
            }
        }
    }

    fn identifier(&mut self) -> Result<Expr, ParseError> {
        let start = self.pos;
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_alphanumeric() {
            self.pos += 1;
        }
        let name = std::str::from_utf8(&self.src[start..self.pos]).expect("ascii identifier");
        let func = match name {
            "x" => return Ok(Expr::Var(Var::X)),
            "t" => return Ok(Expr::Var(Var::T)),
            "u" => return Ok(Expr::Var(Var::U)),
            "pi" => return Ok(Expr::Const(std::f64::consts::PI)),
            "sin" => Func::Sin,
            "cos" => Func::Cos,
            "exp" => Func::Exp,
            _ => {
                return Err(ParseError {
                    offset: start,
                    expected: "one of x, t, u, pi, sin, cos, exp".to_string(),
                    found: format!("identifier '{name}'"),
                })
            }
        };
        self.expect(b'(')?;
        let arg = self.expr()?;
        self.expect(b')')?;
        Ok(Expr::Call(func, Box::new(arg)))
    }
}
