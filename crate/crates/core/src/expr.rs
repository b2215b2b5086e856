//! Scalar coefficient functions of the independent variable `t`.
//!
//! An [`Expr`] is an immutable expression tree that can be parsed from text,
//! printed back, evaluated with strict domain checking and differentiated
//! symbolically. Printing is canonical: `Expr::parse(&e.to_string())`
//! reproduces `e` node for node.
//!
//! Grammar (whitespace is insignificant):
//!
//! ```text
//! expr    = term { ("+" | "-") term } ;
//! term    = unary { ("*" | "/") unary } ;
//! unary   = "-" unary | power ;
//! power   = atom [ "^" unary ] ;
//! atom    = number | "t" | "pi" | func "(" expr ")" | "(" expr ")" ;
//! func    = "exp" | "log" | "sin" | "cos" | "sqrt" | "abs" ;
//! number  = digits [ "." digits ] [ ("e" | "E") [ "+" | "-" ] digits ] ;
//! ```
//!
//! A minus sign directly in front of a number literal that is not itself the
//! base of a power folds into a negative constant, so `-2*t` is
//! `mul(-2, t)` while `-2^2` is `neg(pow(2, 2))`.

use std::fmt;
use std::sync::Arc;

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ExprError {
    #[error("syntax error at byte {offset}: {message}")]
    Syntax { offset: usize, message: String },
    #[error("unknown identifier `{name}` at byte {offset}")]
    UnknownIdentifier { name: String, offset: usize },
    #[error("domain error in `{node}` at t = {t}")]
    Domain { node: String, t: f64 },
    #[error("`{node}` is not differentiable")]
    NonDifferentiable { node: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum UnaryOp {
    Neg,
    Exp,
    Log,
    Sin,
    Cos,
    Sqrt,
    Abs,
}

impl UnaryOp {
    fn name(self) -> &'static str {
        match self {
            UnaryOp::Neg => "-",
            UnaryOp::Exp => "exp",
            UnaryOp::Log => "log",
            UnaryOp::Sin => "sin",
            UnaryOp::Cos => "cos",
            UnaryOp::Sqrt => "sqrt",
            UnaryOp::Abs => "abs",
        }
    }

    fn from_name(name: &str) -> Option<Self> {
        Some(match name {
            "exp" => UnaryOp::Exp,
            "log" => UnaryOp::Log,
            "sin" => UnaryOp::Sin,
            "cos" => UnaryOp::Cos,
            "sqrt" => UnaryOp::Sqrt,
            "abs" => UnaryOp::Abs,
            _ => return None,
        })
    }

    /// Applies the operation, `None` outside the domain.
    fn apply(self, x: f64) -> Option<f64> {
        match self {
            UnaryOp::Neg => Some(-x),
            UnaryOp::Exp => Some(x.exp()),
            UnaryOp::Log => (x > 0.0).then(|| x.ln()),
            UnaryOp::Sin => Some(x.sin()),
            UnaryOp::Cos => Some(x.cos()),
            UnaryOp::Sqrt => (x >= 0.0).then(|| x.sqrt()),
            UnaryOp::Abs => Some(x.abs()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BinaryOp {
    Add,
    Sub,
    Mul,
    Div,
    Pow,
}

impl BinaryOp {
    fn symbol(self) -> &'static str {
        match self {
            BinaryOp::Add => " + ",
            BinaryOp::Sub => " - ",
            BinaryOp::Mul => "*",
            BinaryOp::Div => "/",
            BinaryOp::Pow => "^",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Const(f64),
    Var,
    Unary(UnaryOp, Arc<Expr>),
    Binary(BinaryOp, Arc<Expr>, Arc<Expr>),
}

impl Default for Expr {
    fn default() -> Self {
        Expr::Const(0.0)
    }
}

// Printing precedence levels.
const PREC_ADD: u8 = 1;
const PREC_MUL: u8 = 2;
const PREC_UNARY: u8 = 3;
const PREC_POW: u8 = 4;
const PREC_ATOM: u8 = 5;

fn integer_literal(e: &Expr) -> Option<i32> {
    match e {
        Expr::Const(c) if c.fract() == 0.0 && c.abs() < i32::MAX as f64 => Some(*c as i32),
        _ => None,
    }
}

impl Expr {
    pub fn parse(text: &str) -> Result<Expr, ExprError> {
        Parser::new(text)?.parse_all()
    }

    pub fn constant(c: f64) -> Expr {
        Expr::Const(c)
    }

    pub fn var() -> Expr {
        Expr::Var
    }

    pub fn as_const(&self) -> Option<f64> {
        match self {
            Expr::Const(c) => Some(*c),
            _ => None,
        }
    }

    pub fn is_zero(&self) -> bool {
        self.as_const() == Some(0.0)
    }

    /// True when no node of the tree depends on `t`.
    pub fn is_constant(&self) -> bool {
        match self {
            Expr::Const(_) => true,
            Expr::Var => false,
            Expr::Unary(_, x) => x.is_constant(),
            Expr::Binary(_, l, r) => l.is_constant() && r.is_constant(),
        }
    }

    pub fn contains_abs(&self) -> bool {
        match self {
            Expr::Const(_) | Expr::Var => false,
            Expr::Unary(op, x) => *op == UnaryOp::Abs || x.contains_abs(),
            Expr::Binary(_, l, r) => l.contains_abs() || r.contains_abs(),
        }
    }

    pub fn node_count(&self) -> usize {
        match self {
            Expr::Const(_) | Expr::Var => 1,
            Expr::Unary(_, x) => 1 + x.node_count(),
            Expr::Binary(_, l, r) => 1 + l.node_count() + r.node_count(),
        }
    }

    fn precedence(&self) -> u8 {
        match self {
            Expr::Const(c) if c.is_sign_negative() => PREC_UNARY,
            Expr::Const(_) | Expr::Var => PREC_ATOM,
            Expr::Unary(UnaryOp::Neg, _) => PREC_UNARY,
            Expr::Unary(..) => PREC_ATOM,
            Expr::Binary(BinaryOp::Add | BinaryOp::Sub, ..) => PREC_ADD,
            Expr::Binary(BinaryOp::Mul | BinaryOp::Div, ..) => PREC_MUL,
            Expr::Binary(BinaryOp::Pow, ..) => PREC_POW,
        }
    }

    /// Evaluates the expression at `t`.
    pub fn eval(&self, t: f64) -> Result<f64, ExprError> {
        let domain = || ExprError::Domain {
            node: self.to_string(),
            t,
        };
        match self {
            Expr::Const(c) => Ok(*c),
            Expr::Var => Ok(t),
            Expr::Unary(op, x) => op.apply(x.eval(t)?).ok_or_else(domain),
            Expr::Binary(op, l, r) => {
                let lhs = l.eval(t)?;
                match op {
                    BinaryOp::Add => Ok(lhs + r.eval(t)?),
                    BinaryOp::Sub => Ok(lhs - r.eval(t)?),
                    BinaryOp::Mul => Ok(lhs * r.eval(t)?),
                    BinaryOp::Div => {
                        let rhs = r.eval(t)?;
                        if rhs == 0.0 {
                            Err(domain())
                        } else {
                            Ok(lhs / rhs)
                        }
                    }
                    BinaryOp::Pow => {
                        if let Some(n) = integer_literal(r) {
                            if lhs == 0.0 && n < 0 {
                                return Err(domain());
                            }
                            Ok(lhs.powi(n))
                        } else {
                            let rhs = r.eval(t)?;
                            if lhs > 0.0 {
                                Ok(lhs.powf(rhs))
                            } else {
                                Err(domain())
                            }
                        }
                    }
                }
            }
        }
    }

    /// Symbolic derivative with respect to `t`, constant folded.
    pub fn derivative(&self) -> Result<Expr, ExprError> {
        Ok(match self {
            Expr::Const(_) => Expr::Const(0.0),
            Expr::Var => Expr::Const(1.0),
            Expr::Unary(op, x) => {
                let dx = x.derivative()?;
                if dx.is_zero() && *op != UnaryOp::Abs {
                    return Ok(Expr::Const(0.0));
                }
                let x = (**x).clone();
                match op {
                    UnaryOp::Neg => -dx,
                    UnaryOp::Exp => self.clone() * dx,
                    UnaryOp::Log => dx / x,
                    UnaryOp::Sin => x.cos() * dx,
                    UnaryOp::Cos => -(x.sin() * dx),
                    UnaryOp::Sqrt => dx / (Expr::Const(2.0) * self.clone()),
                    UnaryOp::Abs => return Err(ExprError::NonDifferentiable { node: self.to_string() }),
                }
            }
            Expr::Binary(op, l, r) => {
                let dl = l.derivative()?;
                let dr = r.derivative()?;
                let (l, r) = ((**l).clone(), (**r).clone());
                match op {
                    BinaryOp::Add => dl + dr,
                    BinaryOp::Sub => dl - dr,
                    BinaryOp::Mul => dl * r.clone() + l * dr,
                    BinaryOp::Div => {
                        if dr.is_zero() {
                            dl / r
                        } else {
                            (dl * r.clone() - l * dr) / r.powi(2)
                        }
                    }
                    BinaryOp::Pow => match r.as_const() {
                        Some(c) => Expr::Const(c) * l.pow(Expr::Const(c - 1.0)) * dl,
                        None if dl.is_zero() => self.clone() * l.log() * dr,
                        None => self.clone() * (dr * l.clone().log() + r * dl / l),
                    },
                }
            }
        })
    }

    pub fn unary(op: UnaryOp, x: Expr) -> Expr {
        if let Expr::Const(c) = x {
            if let Some(v) = op.apply(c) {
                if v.is_finite() {
                    return Expr::Const(v);
                }
            }
        }
        if op == UnaryOp::Neg {
            if let Expr::Unary(UnaryOp::Neg, inner) = x {
                return (*inner).clone();
            }
        }
        Expr::Unary(op, Arc::new(x))
    }

    pub fn exp(self) -> Expr {
        Expr::unary(UnaryOp::Exp, self)
    }
    pub fn log(self) -> Expr {
        Expr::unary(UnaryOp::Log, self)
    }
    pub fn sin(self) -> Expr {
        Expr::unary(UnaryOp::Sin, self)
    }
    pub fn cos(self) -> Expr {
        Expr::unary(UnaryOp::Cos, self)
    }
    pub fn sqrt(self) -> Expr {
        Expr::unary(UnaryOp::Sqrt, self)
    }
    pub fn abs(self) -> Expr {
        Expr::unary(UnaryOp::Abs, self)
    }

    pub fn powi(self, n: i32) -> Expr {
        self.pow(Expr::Const(n as f64))
    }

    pub fn pow(self, exponent: Expr) -> Expr {
        match (&self, &exponent) {
            (_, Expr::Const(c)) if *c == 1.0 => self,
            (_, Expr::Const(c)) if *c == 0.0 => Expr::Const(1.0),
            (Expr::Const(_), Expr::Const(_)) => {
                match Expr::Binary(BinaryOp::Pow, Arc::new(self.clone()), Arc::new(exponent.clone())).eval(0.0) {
                    Ok(v) if v.is_finite() => Expr::Const(v),
                    _ => Expr::Binary(BinaryOp::Pow, Arc::new(self), Arc::new(exponent)),
                }
            }
            _ => Expr::Binary(BinaryOp::Pow, Arc::new(self), Arc::new(exponent)),
        }
    }

    fn raw(op: BinaryOp, l: Expr, r: Expr) -> Expr {
        Expr::Binary(op, Arc::new(l), Arc::new(r))
    }

    fn write_child(&self, f: &mut fmt::Formatter<'_>, parens: bool) -> fmt::Result {
        if parens {
            write!(f, "({self})")
        } else {
            write!(f, "{self}")
        }
    }
}

impl std::ops::Add for Expr {
    type Output = Expr;
    fn add(self, rhs: Expr) -> Expr {
        match (self.as_const(), rhs.as_const()) {
            (Some(a), Some(b)) => Expr::Const(a + b),
            (Some(0.0), _) => rhs,
            (_, Some(0.0)) => self,
            _ => Expr::raw(BinaryOp::Add, self, rhs),
        }
    }
}

impl std::ops::Sub for Expr {
    type Output = Expr;
    fn sub(self, rhs: Expr) -> Expr {
        match (self.as_const(), rhs.as_const()) {
            (Some(a), Some(b)) => Expr::Const(a - b),
            (Some(0.0), _) => -rhs,
            (_, Some(0.0)) => self,
            _ => Expr::raw(BinaryOp::Sub, self, rhs),
        }
    }
}

impl std::ops::Mul for Expr {
    type Output = Expr;
    fn mul(self, rhs: Expr) -> Expr {
        match (self.as_const(), rhs.as_const()) {
            (Some(a), Some(b)) => Expr::Const(a * b),
            (Some(0.0), _) | (_, Some(0.0)) => Expr::Const(0.0),
            (Some(1.0), _) => rhs,
            (_, Some(1.0)) => self,
            (Some(-1.0), _) => -rhs,
            (_, Some(-1.0)) => -self,
            _ => Expr::raw(BinaryOp::Mul, self, rhs),
        }
    }
}

impl std::ops::Div for Expr {
    type Output = Expr;
    fn div(self, rhs: Expr) -> Expr {
        match (self.as_const(), rhs.as_const()) {
            (Some(a), Some(b)) if b != 0.0 => Expr::Const(a / b),
            (Some(0.0), _) => Expr::Const(0.0),
            (_, Some(1.0)) => self,
            _ => Expr::raw(BinaryOp::Div, self, rhs),
        }
    }
}

impl std::ops::Neg for Expr {
    type Output = Expr;
    fn neg(self) -> Expr {
        Expr::unary(UnaryOp::Neg, self)
    }
}

impl From<f64> for Expr {
    fn from(c: f64) -> Self {
        Expr::Const(c)
    }
}

impl std::str::FromStr for Expr {
    type Err = ExprError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Expr::parse(s)
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Const(c) if c.is_infinite() => {
                write!(f, "{}", if *c > 0.0 { "1e999" } else { "-1e999" })
            }
            Expr::Const(c) => write!(f, "{c}"),
            Expr::Var => f.write_str("t"),
            Expr::Unary(UnaryOp::Neg, x) => {
                f.write_str("-")?;
                // Parenthesize literals so they do not fold into a constant.
                let parens = x.precedence() < PREC_UNARY || matches!(**x, Expr::Const(_));
                x.write_child(f, parens)
            }
            Expr::Unary(op, x) => write!(f, "{}({x})", op.name()),
            Expr::Binary(BinaryOp::Pow, base, exponent) => {
                base.write_child(f, base.precedence() <= PREC_POW)?;
                f.write_str("^")?;
                exponent.write_child(f, exponent.precedence() < PREC_UNARY)
            }
            Expr::Binary(op, l, r) => {
                let prec = self.precedence();
                l.write_child(f, l.precedence() < prec)?;
                f.write_str(op.symbol())?;
                r.write_child(f, r.precedence() <= prec)
            }
        }
    }
}

impl serde::Serialize for Expr {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> serde::Deserialize<'de> for Expr {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let text = String::deserialize(d)?;
        Expr::parse(&text).map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Token {
    Number(f64),
    Ident(String),
    Plus,
    Minus,
    Star,
    Slash,
    Caret,
    LParen,
    RParen,
    End,
}

struct Parser {
    tokens: Vec<(Token, usize)>,
    pos: usize,
}

fn tokenize(text: &str) -> Result<Vec<(Token, usize)>, ExprError> {
    let bytes = text.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let ch = bytes[i];
        if ch.is_ascii_whitespace() {
            i += 1;
            continue;
        }
        let start = i;
        let simple = match ch {
            b'+' => Some(Token::Plus),
            b'-' => Some(Token::Minus),
            b'*' => Some(Token::Star),
            b'/' => Some(Token::Slash),
            b'^' => Some(Token::Caret),
            b'(' => Some(Token::LParen),
            b')' => Some(Token::RParen),
            _ => None,
        };
        if let Some(tok) = simple {
            out.push((tok, start));
            i += 1;
        } else if ch.is_ascii_digit() || ch == b'.' {
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
                }
            }
            let lexeme = &text[start..i];
            let value = lexeme.parse::<f64>().map_err(|_| ExprError::Syntax {
                offset: start,
                message: format!("malformed number `{lexeme}`"),
            })?;
            out.push((Token::Number(value), start));
        } else if ch.is_ascii_alphabetic() || ch == b'_' {
            while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_') {
                i += 1;
            }
            out.push((Token::Ident(text[start..i].to_string()), start));
        } else {
            let c = text[start..].chars().next().unwrap_or('?');
            return Err(ExprError::Syntax {
                offset: start,
                message: format!("unexpected character `{c}`"),
            });
        }
    }
    out.push((Token::End, text.len()));
    Ok(out)
}

impl Parser {
    fn new(text: &str) -> Result<Self, ExprError> {
        Ok(Parser {
            tokens: tokenize(text)?,
            pos: 0,
        })
    }

    fn peek(&self) -> &Token {
        &self.tokens[self.pos].0
    }

    fn peek_at(&self, ahead: usize) -> &Token {
        let idx = (self.pos + ahead).min(self.tokens.len() - 1);
        &self.tokens[idx].0
    }

    fn offset(&self) -> usize {
        self.tokens[self.pos].1
    }

    fn advance(&mut self) -> Token {
        let tok = self.tokens[self.pos].0.clone();
        if self.pos + 1 < self.tokens.len() {
            self.pos += 1;
        }
        tok
    }

    fn unexpected(&self, wanted: &str) -> ExprError {
        let found = match self.peek() {
            Token::End => "end of input".to_string(),
            Token::Number(v) => format!("number {v}"),
            Token::Ident(s) => format!("`{s}`"),
            other => format!("{other:?}"),
        };
        ExprError::Syntax {
            offset: self.offset(),
            message: format!("expected {wanted}, found {found}"),
        }
    }

    fn expect(&mut self, tok: Token, wanted: &str) -> Result<(), ExprError> {
        if *self.peek() == tok {
            self.advance();
            Ok(())
        } else {
            Err(self.unexpected(wanted))
        }
    }

    fn parse_all(mut self) -> Result<Expr, ExprError> {
        let e = self.parse_expr()?;
        if *self.peek() != Token::End {
            return Err(self.unexpected("operator or end of input"));
        }
        Ok(e)
    }

    fn parse_expr(&mut self) -> Result<Expr, ExprError> {
        let mut lhs = self.parse_term()?;
        loop {
            let op = match self.peek() {
                Token::Plus => BinaryOp::Add,
                Token::Minus => BinaryOp::Sub,
                _ => return Ok(lhs),
            };
            self.advance();
            let rhs = self.parse_term()?;
            lhs = Expr::raw(op, lhs, rhs);
        }
    }

    fn parse_term(&mut self) -> Result<Expr, ExprError> {
        let mut lhs = self.parse_unary()?;
        loop {
            let op = match self.peek() {
                Token::Star => BinaryOp::Mul,
                Token::Slash => BinaryOp::Div,
                _ => return Ok(lhs),
            };
            self.advance();
            let rhs = self.parse_unary()?;
            lhs = Expr::raw(op, lhs, rhs);
        }
    }

    fn parse_unary(&mut self) -> Result<Expr, ExprError> {
        if *self.peek() != Token::Minus {
            return self.parse_power();
        }
        self.advance();
        if let Token::Number(v) = *self.peek() {
            if *self.peek_at(1) != Token::Caret {
                self.advance();
                return Ok(Expr::Const(-v));
            }
        }
        Ok(Expr::Unary(UnaryOp::Neg, Arc::new(self.parse_unary()?)))
    }

    fn parse_power(&mut self) -> Result<Expr, ExprError> {
        let base = self.parse_atom()?;
        if *self.peek() == Token::Caret {
            self.advance();
            let exponent = self.parse_unary()?;
            return Ok(Expr::raw(BinaryOp::Pow, base, exponent));
        }
        Ok(base)
    }

    fn parse_atom(&mut self) -> Result<Expr, ExprError> {
        let offset = self.offset();
        match self.peek().clone() {
            Token::Number(v) => {
                self.advance();
                Ok(Expr::Const(v))
            }
            Token::LParen => {
                self.advance();
                let inner = self.parse_expr()?;
                self.expect(Token::RParen, "`)`")?;
                Ok(inner)
            }
            Token::Ident(name) => {
                self.advance();
                match name.as_str() {
                    "t" => Ok(Expr::Var),
                    "pi" => Ok(Expr::Const(std::f64::consts::PI)),
                    _ => match UnaryOp::from_name(&name) {
                        Some(op) => {
                            self.expect(Token::LParen, "`(` after function name")?;
                            let arg = self.parse_expr()?;
                            self.expect(Token::RParen, "`)`")?;
                            Ok(Expr::Unary(op, Arc::new(arg)))
                        }
                        None => Err(ExprError::UnknownIdentifier { name, offset }),
                    },
                }
            }
            _ => Err(self.unexpected("number, `t`, function or `(`")),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(s: &str) -> Expr {
        Expr::parse(s).unwrap()
    }

    #[test]
    fn parses_linear_formula_into_expected_tree() {
        let e = p("2*t + 1");
        let expected = Expr::raw(
            BinaryOp::Add,
            Expr::raw(BinaryOp::Mul, Expr::Const(2.0), Expr::Var),
            Expr::Const(1.0),
        );
        assert_eq!(e, expected);
        assert_eq!(e.eval(2.0).unwrap(), 5.0);
    }

    #[test]
    fn pythagorean_identity() {
        let e = p("sin(t)^2 + cos(t)^2");
        for t in [0.0, 0.7, 3.2] {
            assert!((e.eval(t).unwrap() - 1.0).abs() < 1e-15);
        }
    }

    #[test]
    fn trailing_operator_reports_offset() {
        match Expr::parse("t +") {
            Err(ExprError::Syntax { offset, .. }) => assert_eq!(offset, 3),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn unknown_identifier_is_named() {
        match Expr::parse("2*x + 1") {
            Err(ExprError::UnknownIdentifier { name, offset }) => {
                assert_eq!(name, "x");
                assert_eq!(offset, 2);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn precedence_rules() {
        assert_eq!(p("-2^2").eval(0.0).unwrap(), -4.0);
        assert_eq!(p("-t^2").eval(3.0).unwrap(), -9.0);
        assert_eq!(p("2^3^2").eval(0.0).unwrap(), 512.0);
        assert_eq!(p("8/2/2").eval(0.0).unwrap(), 2.0);
        assert_eq!(p("1 - 2 - 3").eval(0.0).unwrap(), -4.0);
        assert_eq!(p("t^-1").eval(4.0).unwrap(), 0.25);
        assert_eq!(p("-2*t").eval(1.5).unwrap(), -3.0);
        assert_eq!(p("2*-t").eval(1.5).unwrap(), -3.0);
        assert!((p("pi").eval(0.0).unwrap() - std::f64::consts::PI).abs() < 1e-15);
        assert_eq!(p("1.5e-3*t").eval(2.0).unwrap(), 3e-3);
    }

    #[test]
    fn evaluation_examples() {
        assert_eq!(p("exp(0*t)").eval(5.0).unwrap(), 1.0);
        assert_eq!(p("t^3 - t").eval(2.0).unwrap(), 6.0);
        assert!(matches!(p("1/t").eval(0.0), Err(ExprError::Domain { .. })));
    }

    #[test]
    fn domain_errors() {
        for (s, t) in [
            ("log(t)", 0.0),
            ("log(t)", -1.0),
            ("sqrt(t)", -1e-9),
            ("t^-2", 0.0),
            ("t^0.5", -1.0),
            ("t^0.5", 0.0),
        ] {
            let err = p(s).eval(t).unwrap_err();
            match err {
                ExprError::Domain { t: at, .. } => assert_eq!(at, t),
                other => panic!("{s}: {other:?}"),
            }
        }
        // Integer literal exponents accept any base.
        assert_eq!(p("t^3").eval(-2.0).unwrap(), -8.0);
        assert_eq!(p("t^-1").eval(-2.0).unwrap(), -0.5);
        assert_eq!(p("sqrt(t)").eval(0.0).unwrap(), 0.0);
    }

    #[test]
    fn domain_error_names_offending_node() {
        let err = p("1 + 1/(t - 2)").eval(2.0).unwrap_err();
        match err {
            ExprError::Domain { node, .. } => assert_eq!(node, "1/(t - 2)"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn derivative_examples() {
        let d = p("sin(t)").derivative().unwrap();
        for t in [-1.0, 0.0, 0.3, 2.0] {
            assert!((d.eval(t).unwrap() - t.cos()).abs() < 1e-15);
        }
        assert_eq!(p("7").derivative().unwrap(), Expr::Const(0.0));
        let d = p("t*exp(t)").derivative().unwrap();
        // 2e, independently via a centered difference at t = 1
        let f = p("t*exp(t)");
        let h = 1e-6;
        let fd = (f.eval(1.0 + h).unwrap() - f.eval(1.0 - h).unwrap()) / (2.0 * h);
        assert!((fd - 5.436_563_656_918_09).abs() < 1e-6);
        assert!((d.eval(1.0).unwrap() - fd).abs() < 1e-6);
    }

    #[test]
    fn abs_is_parseable_but_not_differentiable() {
        let e = p("abs(t) + 1");
        assert_eq!(e.eval(-2.0).unwrap(), 3.0);
        match e.derivative() {
            Err(ExprError::NonDifferentiable { node }) => assert_eq!(node, "abs(t)"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn second_derivative_of_power() {
        let e = p("t^3");
        let dd = e.derivative().unwrap().derivative().unwrap();
        assert_eq!(dd.eval(2.0).unwrap(), 12.0);
        let g = p("(1 + t^2)^0.5");
        let dg = g.derivative().unwrap();
        assert!((dg.eval(1.0).unwrap() - 1.0 / 2f64.sqrt()).abs() < 1e-14);
        let h = p("2^t");
        assert!((h.derivative().unwrap().eval(1.0).unwrap() - 2.0 * 2f64.ln()).abs() < 1e-14);
        let k = p("t^t");
        assert!((k.derivative().unwrap().eval(1.0).unwrap() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn constant_folding_in_builders() {
        let e = Expr::Const(2.0) * Expr::Var + Expr::Const(0.0);
        assert_eq!(e.to_string(), "2*t");
        assert_eq!((Expr::Const(0.0) * Expr::Var), Expr::Const(0.0));
        assert_eq!(-(-Expr::Var), Expr::Var);
        assert_eq!(Expr::Const(3.0).powi(2), Expr::Const(9.0));
    }

    #[test]
    fn printing_round_trips_tricky_trees() {
        let cases = [
            "-(2)",
            "-(-2)",
            "(-2)^2",
            "-(-2)^t",
            "t^-2*t",
            "t - -2",
            "t - (t - 1)",
            "t/(t*t)",
            "(t^2)^3",
            "-2^2",
            "--t",
            "t^-(2)",
            "-(t + 1)*3",
            "exp(-t)^-1",
            "abs(t - 0.1)",
        ];
        for s in cases {
            let e = p(s);
            let printed = e.to_string();
            let back = p(&printed);
            assert_eq!(back, e, "{s} -> {printed}");
            assert_eq!(back.to_string(), printed);
        }
    }
}
