//! Arithmetic expressions over `x1..xN` and `t`.
//!
//! Grammar: `+ - * / ^` (power binds right and tighter than unary minus),
//! parentheses, decimal literals, the constants `pi` and `e`, and the
//! functions `min`, `max`, `abs`, `sqrt`, `exp`, `ln`, `sin`, `cos`.
//! Expressions built from `+ - *`, integer powers and literals are
//! converted to polynomials so the calculus layer can differentiate them
//! exactly.

use std::fmt;

use thiserror::Error;

use crate::calculus::ScalarField;
use crate::poly::Poly;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ExprError {
    #[error("column {column}: {message}")]
    Syntax { column: usize, message: String },
    #[error("unknown coordinate `{name}` (group has coordinates x1..x{dim} and t)")]
    UnknownCoordinate { name: String, dim: usize },
    #[error("unknown function or constant `{0}`")]
    UnknownName(String),
    #[error("`{name}` takes {expected} argument(s), got {got}")]
    Arity { name: String, expected: usize, got: usize },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Func {
    Min,
    Max,
    Abs,
    Sqrt,
    Exp,
    Ln,
    Sin,
    Cos,
}

impl Func {
    fn lookup(name: &str) -> Option<Self> {
        Some(match name {
            "min" => Self::Min,
            "max" => Self::Max,
            "abs" => Self::Abs,
            "sqrt" => Self::Sqrt,
            "exp" => Self::Exp,
            "ln" => Self::Ln,
            "sin" => Self::Sin,
            "cos" => Self::Cos,
            _ => return None,
        })
    }

    fn arity(self) -> usize {
        match self {
            Self::Min | Self::Max => 2,
            _ => 1,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
enum Node {
    Num(f64),
    /// Space coordinate, 0-based.
    Coord(usize),
    Time,
    Neg(Box<Node>),
    Add(Box<Node>, Box<Node>),
    Sub(Box<Node>, Box<Node>),
    Mul(Box<Node>, Box<Node>),
    Div(Box<Node>, Box<Node>),
    Pow(Box<Node>, Box<Node>),
    Call(Func, Vec<Node>),
}

impl Node {
    fn eval(&self, x: &[f64], t: f64) -> f64 {
        match self {
            Self::Num(c) => *c,
            Self::Coord(i) => x[*i],
            Self::Time => t,
            Self::Neg(a) => -a.eval(x, t),
            Self::Add(a, b) => a.eval(x, t) + b.eval(x, t),
            Self::Sub(a, b) => a.eval(x, t) - b.eval(x, t),
            Self::Mul(a, b) => a.eval(x, t) * b.eval(x, t),
            Self::Div(a, b) => a.eval(x, t) / b.eval(x, t),
            Self::Pow(a, b) => {
                let base = a.eval(x, t);
                match b.as_ref() {
                    Self::Num(k) if k.fract() == 0.0 && k.abs() <= i32::MAX as f64 => base.powi(*k as i32),
                    e => base.powf(e.eval(x, t)),
                }
            }
            Self::Call(f, args) => {
                let a = args[0].eval(x, t);
                match f {
                    Func::Min => a.min(args[1].eval(x, t)),
                    Func::Max => a.max(args[1].eval(x, t)),
                    Func::Abs => a.abs(),
                    Func::Sqrt => a.sqrt(),
                    Func::Exp => a.exp(),
                    Func::Ln => a.ln(),
                    Func::Sin => a.sin(),
                    Func::Cos => a.cos(),
                }
            }
        }
    }

    fn is_constant(&self) -> bool {
        match self {
            Self::Num(_) => true,
            Self::Coord(_) | Self::Time => false,
            Self::Neg(a) => a.is_constant(),
            Self::Add(a, b) | Self::Sub(a, b) | Self::Mul(a, b) | Self::Div(a, b) | Self::Pow(a, b) => {
                a.is_constant() && b.is_constant()
            }
            Self::Call(_, args) => args.iter().all(Node::is_constant),
        }
    }

    fn to_poly(&self, nvars: usize) -> Option<Poly> {
        if self.is_constant() {
            let c = self.eval(&[], 0.0);
            return c.is_finite().then(|| Poly::constant(nvars, c));
        }
        Some(match self {
            Self::Num(c) => Poly::constant(nvars, *c),
            Self::Coord(i) => Poly::var(nvars, *i),
            Self::Time => Poly::var(nvars, nvars - 1),
            Self::Neg(a) => -&a.to_poly(nvars)?,
            Self::Add(a, b) => &a.to_poly(nvars)? + &b.to_poly(nvars)?,
            Self::Sub(a, b) => &a.to_poly(nvars)? - &b.to_poly(nvars)?,
            Self::Mul(a, b) => &a.to_poly(nvars)? * &b.to_poly(nvars)?,
            Self::Div(a, b) => {
                let c = b.is_constant().then(|| b.eval(&[], 0.0)).filter(|c| *c != 0.0)?;
                a.to_poly(nvars)?.scale(1.0 / c)
            }
            Self::Pow(a, b) => {
                let k = b.is_constant().then(|| b.eval(&[], 0.0)).filter(|k| k.fract() == 0.0 && (0.0..=16.0).contains(k))?;
                a.to_poly(nvars)?.powi(k as u32)
            }
            Self::Call(..) => return None,
        })
    }
}

/// A parsed expression bound to a coordinate count.
#[derive(Clone, PartialEq)]
pub struct Expr {
    source: String,
    dim: usize,
    root: Node,
}

impl fmt::Debug for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Expr({:?})", self.source)
    }
}

impl Expr {
    /// Parses `text` for a group with `dim` coordinates.
    pub fn parse(text: &str, dim: usize) -> Result<Self, ExprError> {
        let tokens = tokenize(text)?;
        let mut parser = Parser { tokens, pos: 0, dim, end: text.chars().count() + 1 };
        let root = parser.sum()?;
        if let Some(tok) = parser.tokens.get(parser.pos) {
            return Err(ExprError::Syntax { column: tok.column, message: format!("unexpected {}", tok.kind) });
        }
        Ok(Self { source: text.to_string(), dim, root })
    }

    pub fn source(&self) -> &str {
        &self.source
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn eval(&self, x: &[f64], t: f64) -> f64 {
        self.root.eval(x, t)
    }

    /// Polynomial in `(x1, .., xN, t)` when the expression is one.
    pub fn to_poly(&self) -> Option<Poly> {
        self.root.to_poly(self.dim + 1)
    }

    /// Polynomial field when possible, otherwise a tree-walking evaluator.
    pub fn to_field(&self) -> ScalarField {
        match self.to_poly() {
            Some(p) => ScalarField::Polynomial(p),
            None => {
                let root = self.root.clone();
                ScalarField::numeric(move |x, t| root.eval(x, t))
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
enum Kind {
    Num(f64),
    Ident(String),
    Op(char),
}

impl fmt::Display for Kind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Num(v) => write!(f, "number {v}"),
            Self::Ident(s) => write!(f, "`{s}`"),
            Self::Op(c) => write!(f, "`{c}`"),
        }
    }
}

#[derive(Clone, Debug)]
struct Token {
    kind: Kind,
    column: usize,
}

fn tokenize(text: &str) -> Result<Vec<Token>, ExprError> {
    let chars: Vec<char> = text.chars().collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        let column = i + 1;
        if c.is_whitespace() {
            i += 1;
        } else if c.is_ascii_digit() || c == '.' {
            let start = i;
            while i < chars.len() && (chars[i].is_ascii_digit() || chars[i] == '.') {
                i += 1;
            }
            if i < chars.len() && (chars[i] == 'e' || chars[i] == 'E') {
                let mut j = i + 1;
                if j < chars.len() && (chars[j] == '+' || chars[j] == '-') {
                    j += 1;
                }
                if j < chars.len() && chars[j].is_ascii_digit() {
                    i = j;
                    while i < chars.len() && chars[i].is_ascii_digit() {
                        i += 1;
                    }
                }
            }
            let literal: String = chars[start..i].iter().collect();
            let v = literal
                .parse::<f64>()
                .map_err(|_| ExprError::Syntax { column, message: format!("bad number `{literal}`") })?;
            out.push(Token { kind: Kind::Num(v), column });
        } else if c.is_ascii_alphabetic() || c == '_' {
            let start = i;
            while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                i += 1;
            }
            out.push(Token { kind: Kind::Ident(chars[start..i].iter().collect()), column });
        } else if "+-*/^(),".contains(c) {
            out.push(Token { kind: Kind::Op(c), column });
            i += 1;
        } else {
            return Err(ExprError::Syntax { column, message: format!("unexpected character `{c}`") });
        }
    }
    Ok(out)
}

struct Parser {
    tokens: Vec<Token>,
    pos: usize,
    dim: usize,
    end: usize,
}

impl Parser {
    fn peek_op(&self) -> Option<char> {
        match self.tokens.get(self.pos) {
            Some(Token { kind: Kind::Op(c), .. }) => Some(*c),
            _ => None,
        }
    }

    fn column(&self) -> usize {
        self.tokens.get(self.pos).map_or(self.end, |t| t.column)
    }

    fn expect(&mut self, op: char) -> Result<(), ExprError> {
        if self.peek_op() == Some(op) {
            self.pos += 1;
            Ok(())
        } else {
            let found = self.tokens.get(self.pos).map_or("end of input".to_string(), |t| t.kind.to_string());
            Err(ExprError::Syntax { column: self.column(), message: format!("expected `{op}`, found {found}") })
        }
    }

    fn sum(&mut self) -> Result<Node, ExprError> {
        let mut left = self.product()?;
        while let Some(op @ ('+' | '-')) = self.peek_op() {
            self.pos += 1;
            let right = self.product()?;
            left = if op == '+' {
                Node::Add(Box::new(left), Box::new(right))
            } else {
                Node::Sub(Box::new(left), Box::new(right))
            };
        }
        Ok(left)
    }

    fn product(&mut self) -> Result<Node, ExprError> {
        let mut left = self.unary()?;
        while let Some(op @ ('*' | '/')) = self.peek_op() {
            self.pos += 1;
            let right = self.unary()?;
            left = if op == '*' {
                Node::Mul(Box::new(left), Box::new(right))
            } else {
                Node::Div(Box::new(left), Box::new(right))
            };
        }
        Ok(left)
    }

    fn unary(&mut self) -> Result<Node, ExprError> {
        match self.peek_op() {
            Some('-') => {
                self.pos += 1;
                Ok(Node::Neg(Box::new(self.unary()?)))
            }
            Some('+') => {
                self.pos += 1;
                self.unary()
            }
            _ => self.power(),
        }
    }

    fn power(&mut self) -> Result<Node, ExprError> {
        let base = self.atom()?;
        if self.peek_op() == Some('^') {
            self.pos += 1;
            let exponent = self.unary()?;
            return Ok(Node::Pow(Box::new(base), Box::new(exponent)));
        }
        Ok(base)
    }

    fn atom(&mut self) -> Result<Node, ExprError> {
        let column = self.column();
        let Some(tok) = self.tokens.get(self.pos).cloned() else {
            return Err(ExprError::Syntax { column, message: "unexpected end of input".into() });
        };
        self.pos += 1;
        match tok.kind {
            Kind::Num(v) => Ok(Node::Num(v)),
            Kind::Op('(') => {
                let inner = self.sum()?;
                self.expect(')')?;
                Ok(inner)
            }
            Kind::Op(c) => Err(ExprError::Syntax { column, message: format!("unexpected `{c}`") }),
            Kind::Ident(name) => {
                if self.peek_op() == Some('(') {
                    return self.call(name);
                }
                self.name(name)
            }
        }
    }

    fn call(&mut self, name: String) -> Result<Node, ExprError> {
        let func = Func::lookup(&name).ok_or_else(|| ExprError::UnknownName(name.clone()))?;
        self.expect('(')?;
        let mut args = vec![self.sum()?];
        while self.peek_op() == Some(',') {
            self.pos += 1;
            args.push(self.sum()?);
        }
        self.expect(')')?;
        if args.len() != func.arity() {
            return Err(ExprError::Arity { name, expected: func.arity(), got: args.len() });
        }
        Ok(Node::Call(func, args))
    }

    fn name(&self, name: String) -> Result<Node, ExprError> {
        match name.as_str() {
            "t" => return Ok(Node::Time),
            "pi" => return Ok(Node::Num(std::f64::consts::PI)),
            "e" => return Ok(Node::Num(std::f64::consts::E)),
            _ => {}
        }
        if let Some(digits) = name.strip_prefix('x') {
            if let Ok(i) = digits.parse::<usize>() {
                if (1..=self.dim).contains(&i) {
                    return Ok(Node::Coord(i - 1));
                }
                return Err(ExprError::UnknownCoordinate { name, dim: self.dim });
            }
        }
        Err(ExprError::UnknownName(name))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ev(text: &str, x: &[f64], t: f64) -> f64 {
        Expr::parse(text, x.len()).unwrap().eval(x, t)
    }

    #[test]
    fn precedence_and_associativity() {
        assert_eq!(ev("1 + 2 * 3", &[], 0.0), 7.0);
        assert_eq!(ev("2 ^ 3 ^ 2", &[], 0.0), 512.0);
        assert_eq!(ev("-2 ^ 2", &[], 0.0), -4.0);
        assert_eq!(ev("2 ^ -1", &[], 0.0), 0.5);
        assert_eq!(ev("8 / 4 / 2", &[], 0.0), 1.0);
        assert_eq!(ev("(1 - 2) - 3", &[], 0.0), -4.0);
        assert_eq!(ev("1.5e1 + .5", &[], 0.0), 15.5);
    }

    #[test]
    fn variables_functions_constants() {
        assert_eq!(ev("x1*x1 + x2 - t", &[3.0, 1.0], 2.0), 8.0);
        assert_eq!(ev("max(x1, 2) + min(-1, abs(x1))", &[-3.0], 0.0), 1.0);
        assert!((ev("sin(pi/2) + ln(e) + sqrt(4) + exp(0) + cos(0)", &[], 0.0) - 6.0).abs() < 1e-15);
    }

    #[test]
    fn unknown_coordinate_names_itself() {
        let err = Expr::parse("x7*2", 3).unwrap_err();
        assert_eq!(err, ExprError::UnknownCoordinate { name: "x7".into(), dim: 3 });
        assert!(err.to_string().contains("x7"));
        assert!(matches!(Expr::parse("x0", 3), Err(ExprError::UnknownCoordinate { .. })));
        assert!(matches!(Expr::parse("y + 1", 3), Err(ExprError::UnknownName(_))));
        assert!(matches!(Expr::parse("foo(1)", 3), Err(ExprError::UnknownName(_))));
    }

    #[test]
    fn syntax_errors_carry_columns() {
        assert_eq!(
            Expr::parse("1 + * 2", 1).unwrap_err(),
            ExprError::Syntax { column: 5, message: "unexpected `*`".into() }
        );
        assert!(matches!(Expr::parse("(1 + 2", 1), Err(ExprError::Syntax { column: 7, .. })));
        assert!(matches!(Expr::parse("1 2", 1), Err(ExprError::Syntax { column: 3, .. })));
        assert!(matches!(Expr::parse("1 $ 2", 1), Err(ExprError::Syntax { column: 3, .. })));
        assert!(matches!(Expr::parse("max(1)", 1), Err(ExprError::Arity { .. })));
        assert!(matches!(Expr::parse("", 1), Err(ExprError::Syntax { .. })));
    }

    #[test]
    fn polynomial_detection() {
        let p = Expr::parse("x1^2*x2 - 3*t + x2/2", 2).unwrap();
        let poly = p.to_poly().unwrap();
        let pt = [1.5, -0.5, 0.25];
        assert!((poly.eval(&pt) - p.eval(&pt[..2], pt[2])).abs() < 1e-15);
        assert!(p.to_field().is_analytic());
        assert!(Expr::parse("abs(x1)", 1).unwrap().to_poly().is_none());
        assert!(Expr::parse("x1^0.5", 1).unwrap().to_poly().is_none());
        assert!(Expr::parse("1/x1", 1).unwrap().to_poly().is_none());
        assert!(!Expr::parse("sin(x1)", 1).unwrap().to_field().is_analytic());
        let folded = Expr::parse("2^-1*t + sqrt(4)*x1 + x1^(1+1)/(2*2)", 1).unwrap().to_poly().unwrap();
        assert_eq!(folded.eval(&[3.0, 1.0]), 8.75);
    }

    #[test]
    fn field_agrees_with_tree() {
        for text in ["x1 + 0.2*sin(pi*x1)", "(x1 - x2)^3 + t*x1", "max(x1, x2)"] {
            let e = Expr::parse(text, 2).unwrap();
            let f = e.to_field();
            for pt in [[0.3, -0.7], [1.0, 2.0], [-1.5, 0.0]] {
                assert!((f.eval(&pt, 0.4) - e.eval(&pt, 0.4)).abs() < 1e-14);
            }
        }
    }
}
