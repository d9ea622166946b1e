//! A small expression language for diagonals, potentials and growth functions.
//!
//! Grammar (lowest precedence first):
//!
//! ```text
//! expr  := term (('+' | '-') term)*
//! term  := unary (('*' | '/') unary)*
//! unary := '-' unary | power
//! power := atom ('^' unary)?
//! atom  := number | name | name '(' expr ')' | '(' expr ')'
//! ```
//!
//! Functions: `sin cos exp abs sqrt delta` (`delta(x)` is 1 at 0 and 0
//! elsewhere). Constants: `pi`, `e`, and the imaginary unit `i`. Every other
//! name is a variable that must be bound before evaluation. Values are complex.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::C64;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParseError {
    pub line: usize,
    pub col: usize,
    pub kind: ParseErrorKind,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum ParseErrorKind {
    UnexpectedChar(char),
    UnexpectedToken,
    ExpectedOperand,
    ExpectedCloseParen,
    BadNumber,
    UnknownFunction,
    TrailingInput,
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let what = match self.kind {
            ParseErrorKind::UnexpectedChar(c) => return write!(f, "{}:{}: unexpected character {c:?}", self.line, self.col),
            ParseErrorKind::UnexpectedToken => "unexpected token",
            ParseErrorKind::ExpectedOperand => "expected an operand",
            ParseErrorKind::ExpectedCloseParen => "expected ')'",
            ParseErrorKind::BadNumber => "malformed or non-finite number",
            ParseErrorKind::UnknownFunction => "unknown function",
            ParseErrorKind::TrailingInput => "unexpected trailing input",
        };
        write!(f, "{}:{}: {what}", self.line, self.col)
    }
}

impl std::error::Error for ParseError {}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Func {
    Sin,
    Cos,
    Exp,
    Abs,
    Sqrt,
    Delta,
}

impl Func {
    fn from_name(s: &str) -> Option<Func> {
        Some(match s {
            "sin" => Func::Sin,
            "cos" => Func::Cos,
            "exp" => Func::Exp,
            "abs" => Func::Abs,
            "sqrt" => Func::Sqrt,
            "delta" => Func::Delta,
            _ => return None,
        })
    }

    pub fn name(self) -> &'static str {
        match self {
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Exp => "exp",
            Func::Abs => "abs",
            Func::Sqrt => "sqrt",
            Func::Delta => "delta",
        }
    }

    fn apply(self, z: C64) -> C64 {
        match self {
            Func::Sin => z.sin(),
            Func::Cos => z.cos(),
            Func::Exp => z.exp(),
            Func::Abs => C64::new(z.norm(), 0.0),
            Func::Sqrt => z.sqrt(),
            Func::Delta => C64::new(if z == C64::new(0.0, 0.0) { 1.0 } else { 0.0 }, 0.0),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Constant {
    Pi,
    E,
    I,
}

#[derive(Clone, Debug, PartialEq)]
pub enum Expr {
    Num(f64),
    Const(Constant),
    Var(String),
    Neg(Box<Expr>),
    Add(Box<Expr>, Box<Expr>),
    Sub(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
    Div(Box<Expr>, Box<Expr>),
    Pow(Box<Expr>, Box<Expr>),
    Call(Func, Box<Expr>),
}

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    Num(f64),
    Name(String),
    Op(char),
    End,
}

struct Lexer<'a> {
    chars: Vec<char>,
    pos: usize,
    line: usize,
    col: usize,
    _src: &'a str,
}

impl<'a> Lexer<'a> {
    fn new(src: &'a str) -> Self {
        Self { chars: src.chars().collect(), pos: 0, line: 1, col: 1, _src: src }
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.chars.get(self.pos).copied()?;
        self.pos += 1;
        if c == '\n' {
            self.line += 1;
            self.col = 1;
        } else {
            self.col += 1;
        }
        Some(c)
    }

    fn peek(&self) -> Option<char> {
        self.chars.get(self.pos).copied()
    }

    fn err(&self, line: usize, col: usize, kind: ParseErrorKind) -> ParseError {
        ParseError { line, col, kind }
    }

    fn tokens(mut self) -> std::result::Result<Vec<(Tok, usize, usize)>, ParseError> {
        let mut out = Vec::new();
        loop {
            while self.peek().is_some_and(char::is_whitespace) {
                self.bump();
            }
            let (line, col) = (self.line, self.col);
            let Some(c) = self.peek() else {
                out.push((Tok::End, line, col));
                return Ok(out);
            };
            if c.is_ascii_digit() || c == '.' {
                let mut s = String::new();
                while self.peek().is_some_and(|c| c.is_ascii_digit() || c == '.') {
                    s.push(self.bump().unwrap());
                }
                if self.peek().is_some_and(|c| c == 'e' || c == 'E') {
                    let save = (self.pos, self.line, self.col);
                    let mut exp = String::from("e");
                    self.bump();
                    if self.peek().is_some_and(|c| c == '+' || c == '-') {
                        exp.push(self.bump().unwrap());
                    }
                    if self.peek().is_some_and(|c| c.is_ascii_digit()) {
                        while self.peek().is_some_and(|c| c.is_ascii_digit()) {
                            exp.push(self.bump().unwrap());
                        }
                        s.push_str(&exp);
                    } else {
                        (self.pos, self.line, self.col) = save;
                    }
                }
                match s.parse::<f64>() {
                    Ok(v) if v.is_finite() => out.push((Tok::Num(v), line, col)),
                    _ => return Err(self.err(line, col, ParseErrorKind::BadNumber)),
                }
            } else if c.is_alphabetic() || c == '_' {
                let mut s = String::new();
                while self.peek().is_some_and(|c| c.is_alphanumeric() || c == '_') {
                    s.push(self.bump().unwrap());
                }
                out.push((Tok::Name(s), line, col));
            } else if "+-*/^()".contains(c) {
                self.bump();
                out.push((Tok::Op(c), line, col));
            } else {
                return Err(self.err(line, col, ParseErrorKind::UnexpectedChar(c)));
            }
        }
    }
}

struct Parser {
    toks: Vec<(Tok, usize, usize)>,
    pos: usize,
}

impl Parser {
    fn peek(&self) -> &Tok {
        &self.toks[self.pos].0
    }

    fn here(&self, kind: ParseErrorKind) -> ParseError {
        let (_, line, col) = self.toks[self.pos];
        ParseError { line, col, kind }
    }

    fn next(&mut self) -> Tok {
        let t = self.toks[self.pos].0.clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn expr(&mut self) -> std::result::Result<Expr, ParseError> {
        let mut lhs = self.term()?;
        loop {
            match self.peek() {
                Tok::Op('+') => {
                    self.next();
                    lhs = Expr::Add(Box::new(lhs), Box::new(self.term()?));
                }
                Tok::Op('-') => {
                    self.next();
                    lhs = Expr::Sub(Box::new(lhs), Box::new(self.term()?));
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn term(&mut self) -> std::result::Result<Expr, ParseError> {
        let mut lhs = self.unary()?;
        loop {
            match self.peek() {
                Tok::Op('*') => {
                    self.next();
                    lhs = Expr::Mul(Box::new(lhs), Box::new(self.unary()?));
                }
                Tok::Op('/') => {
                    self.next();
                    lhs = Expr::Div(Box::new(lhs), Box::new(self.unary()?));
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn unary(&mut self) -> std::result::Result<Expr, ParseError> {
        if let Tok::Op('-') = self.peek() {
            self.next();
            return Ok(Expr::Neg(Box::new(self.unary()?)));
        }
        self.power()
    }

    fn power(&mut self) -> std::result::Result<Expr, ParseError> {
        let base = self.atom()?;
        if let Tok::Op('^') = self.peek() {
            self.next();
            return Ok(Expr::Pow(Box::new(base), Box::new(self.unary()?)));
        }
        Ok(base)
    }

    fn atom(&mut self) -> std::result::Result<Expr, ParseError> {
        let err = self.here(ParseErrorKind::ExpectedOperand);
        match self.next() {
            Tok::Num(v) => Ok(Expr::Num(v)),
            Tok::Name(name) => {
                if let Tok::Op('(') = self.peek() {
                    let Some(f) = Func::from_name(&name) else {
                        return Err(ParseError { kind: ParseErrorKind::UnknownFunction, ..err });
                    };
                    self.next();
                    let arg = self.expr()?;
                    if self.peek() != &Tok::Op(')') {
                        return Err(self.here(ParseErrorKind::ExpectedCloseParen));
                    }
                    self.next();
                    return Ok(Expr::Call(f, Box::new(arg)));
                }
                Ok(match name.as_str() {
                    "pi" => Expr::Const(Constant::Pi),
                    "e" => Expr::Const(Constant::E),
                    "i" => Expr::Const(Constant::I),
                    _ => Expr::Var(name),
                })
            }
            Tok::Op('(') => {
                let inner = self.expr()?;
                if self.peek() != &Tok::Op(')') {
                    return Err(self.here(ParseErrorKind::ExpectedCloseParen));
                }
                self.next();
                Ok(inner)
            }
            Tok::Op(_) => Err(ParseError { kind: ParseErrorKind::UnexpectedToken, ..err }),
            Tok::End => Err(err),
        }
    }
}

/// Parses an expression. Error positions are 1-based `line:col`.
pub fn parse_expression(src: &str) -> std::result::Result<Expr, ParseError> {
    let toks = Lexer::new(src).tokens()?;
    let mut p = Parser { toks, pos: 0 };
    let e = p.expr()?;
    if p.peek() != &Tok::End {
        return Err(p.here(ParseErrorKind::TrailingInput));
    }
    Ok(e)
}

impl std::str::FromStr for Expr {
    type Err = ParseError;
    fn from_str(s: &str) -> std::result::Result<Self, ParseError> {
        parse_expression(s)
    }
}

// Binding strength used by the printer: 1 additive, 2 multiplicative,
// 3 unary minus, 4 power, 5 atoms.
fn prec(e: &Expr) -> u8 {
    match e {
        Expr::Add(..) | Expr::Sub(..) => 1,
        Expr::Mul(..) | Expr::Div(..) => 2,
        Expr::Neg(_) => 3,
        Expr::Pow(..) => 4,
        _ => 5,
    }
}

fn write_wrapped(f: &mut fmt::Formatter<'_>, e: &Expr, paren: bool) -> fmt::Result {
    if paren {
        write!(f, "({e})")
    } else {
        write!(f, "{e}")
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Num(v) => write!(f, "{v}"),
            Expr::Const(Constant::Pi) => f.write_str("pi"),
            Expr::Const(Constant::E) => f.write_str("e"),
            Expr::Const(Constant::I) => f.write_str("i"),
            Expr::Var(name) => f.write_str(name),
            Expr::Neg(x) => {
                f.write_str("-")?;
                write_wrapped(f, x, prec(x) < 3)
            }
            Expr::Add(a, b) | Expr::Sub(a, b) => {
                write_wrapped(f, a, prec(a) < 1)?;
                f.write_str(if matches!(self, Expr::Add(..)) { " + " } else { " - " })?;
                write_wrapped(f, b, prec(b) <= 1)
            }
            Expr::Mul(a, b) | Expr::Div(a, b) => {
                write_wrapped(f, a, prec(a) < 2)?;
                f.write_str(if matches!(self, Expr::Mul(..)) { "*" } else { "/" })?;
                write_wrapped(f, b, prec(b) <= 2)
            }
            Expr::Pow(a, b) => {
                write_wrapped(f, a, prec(a) < 5)?;
                f.write_str("^")?;
                write_wrapped(f, b, prec(b) < 3)
            }
            Expr::Call(func, x) => write!(f, "{}({x})", func.name()),
        }
    }
}

/// Expression with variables resolved to slots.
#[derive(Clone, Debug)]
enum Node {
    Val(C64),
    Slot(usize),
    Neg(Box<Node>),
    Bin(char, Box<Node>, Box<Node>),
    Call(Func, Box<Node>),
}

/// An expression bound to an ordered list of variable names.
#[derive(Clone, Debug)]
pub struct CompiledExpr {
    root: Node,
    source: Expr,
    arity: usize,
}

impl Expr {
    /// Resolves variables against `names`; unknown names are an error.
    pub fn compile(&self, names: &[&str]) -> Result<CompiledExpr> {
        fn go(e: &Expr, names: &[&str]) -> Result<Node> {
            Ok(match e {
                Expr::Num(v) => Node::Val(C64::new(*v, 0.0)),
                Expr::Const(Constant::Pi) => Node::Val(C64::new(std::f64::consts::PI, 0.0)),
                Expr::Const(Constant::E) => Node::Val(C64::new(std::f64::consts::E, 0.0)),
                Expr::Const(Constant::I) => Node::Val(C64::new(0.0, 1.0)),
                Expr::Var(v) => match names.iter().position(|n| n == v) {
                    Some(k) => Node::Slot(k),
                    None => {
                        return Err(Error::Eval(format!(
                            "unknown variable `{v}` (expected one of: {})",
                            names.join(", ")
                        )))
                    }
                },
                Expr::Neg(x) => Node::Neg(Box::new(go(x, names)?)),
                Expr::Add(a, b) => Node::Bin('+', Box::new(go(a, names)?), Box::new(go(b, names)?)),
                Expr::Sub(a, b) => Node::Bin('-', Box::new(go(a, names)?), Box::new(go(b, names)?)),
                Expr::Mul(a, b) => Node::Bin('*', Box::new(go(a, names)?), Box::new(go(b, names)?)),
                Expr::Div(a, b) => Node::Bin('/', Box::new(go(a, names)?), Box::new(go(b, names)?)),
                Expr::Pow(a, b) => Node::Bin('^', Box::new(go(a, names)?), Box::new(go(b, names)?)),
                Expr::Call(f, x) => Node::Call(*f, Box::new(go(x, names)?)),
            })
        }
        Ok(CompiledExpr { root: go(self, names)?, source: self.clone(), arity: names.len() })
    }

    /// Whether the expression mentions a variable.
    pub fn uses_var(&self, name: &str) -> bool {
        match self {
            Expr::Var(v) => v == name,
            Expr::Num(_) | Expr::Const(_) => false,
            Expr::Neg(x) | Expr::Call(_, x) => x.uses_var(name),
            Expr::Add(a, b) | Expr::Sub(a, b) | Expr::Mul(a, b) | Expr::Div(a, b) | Expr::Pow(a, b) => {
                a.uses_var(name) || b.uses_var(name)
            }
        }
    }
}

fn pow(a: C64, b: C64) -> C64 {
    if b.im == 0.0 && b.re.fract() == 0.0 && b.re.abs() <= 64.0 {
        let n = b.re as i32;
        if a.im == 0.0 {
            return C64::new(a.re.powi(n), 0.0);
        }
        return a.powi(n);
    }
    if a.im == 0.0 && b.im == 0.0 && a.re >= 0.0 {
        return C64::new(a.re.powf(b.re), 0.0);
    }
    a.powc(b)
}

fn eval_node(n: &Node, vars: &[C64]) -> C64 {
    match n {
        Node::Val(v) => *v,
        Node::Slot(k) => vars[*k],
        Node::Neg(x) => -eval_node(x, vars),
        Node::Bin(op, a, b) => {
            let (x, y) = (eval_node(a, vars), eval_node(b, vars));
            match op {
                '+' => x + y,
                '-' => x - y,
                '*' => {
                    if x.im == 0.0 && y.im == 0.0 {
                        C64::new(x.re * y.re, 0.0)
                    } else {
                        x * y
                    }
                }
                '/' => {
                    if x.im == 0.0 && y.im == 0.0 {
                        C64::new(x.re / y.re, 0.0)
                    } else {
                        x / y
                    }
                }
                _ => pow(x, y),
            }
        }
        Node::Call(f, x) => f.apply(eval_node(x, vars)),
    }
}

impl CompiledExpr {
    pub fn eval(&self, vars: &[C64]) -> Result<C64> {
        if vars.len() != self.arity {
            return Err(Error::Eval(format!("expected {} variables, got {}", self.arity, vars.len())));
        }
        let v = eval_node(&self.root, vars);
        if v.is_finite() {
            Ok(v)
        } else {
            Err(Error::Eval(format!("`{}` is not finite at {:?}", self.source, vars)))
        }
    }

    pub fn eval_real(&self, vars: &[f64]) -> Result<C64> {
        let v: Vec<C64> = vars.iter().map(|&x| C64::new(x, 0.0)).collect();
        self.eval(&v)
    }

    pub fn source(&self) -> &Expr {
        &self.source
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn num(v: f64) -> Box<Expr> {
        Box::new(Expr::Num(v))
    }

    #[test]
    fn parses_examples() {
        assert_eq!(
            parse_expression("1+1/j").unwrap(),
            Expr::Add(num(1.0), Box::new(Expr::Div(num(1.0), Box::new(Expr::Var("j".into())))))
        );
        assert_eq!(
            parse_expression("sin(x1)^2").unwrap(),
            Expr::Pow(Box::new(Expr::Call(Func::Sin, Box::new(Expr::Var("x1".into())))), num(2.0))
        );
        let e = parse_expression("1+").unwrap_err();
        assert_eq!((e.line, e.col), (1, 3));
        assert_eq!(e.to_string(), "1:3: expected an operand");
    }

    #[test]
    fn error_positions() {
        let e = parse_expression("x +\n  (y * ").unwrap_err();
        assert_eq!((e.line, e.col), (2, 8));
        let e = parse_expression("foo(1)").unwrap_err();
        assert_eq!((e.line, e.col, e.kind), (1, 1, ParseErrorKind::UnknownFunction));
        let e = parse_expression("2 $ 3").unwrap_err();
        assert_eq!((e.col, e.kind), (3, ParseErrorKind::UnexpectedChar('$')));
        let e = parse_expression("(1").unwrap_err();
        assert_eq!((e.col, e.kind), (3, ParseErrorKind::ExpectedCloseParen));
        assert!(parse_expression("1e999").is_err());
        assert!(parse_expression("2 3").is_err());
    }

    #[test]
    fn precedence() {
        let e = parse_expression("-x^2").unwrap();
        assert_eq!(e.to_string(), "-x^2");
        let f = e.compile(&["x"]).unwrap();
        assert_eq!(f.eval_real(&[3.0]).unwrap(), C64::new(-9.0, 0.0));
        let f = parse_expression("2^3^2").unwrap().compile(&[]).unwrap();
        assert_eq!(f.eval(&[]).unwrap().re, 512.0);
        let f = parse_expression("8/2/2 - 1 - 1").unwrap().compile(&[]).unwrap();
        assert_eq!(f.eval(&[]).unwrap().re, 0.0);
        let f = parse_expression("(1+i)*x^2").unwrap().compile(&["x"]).unwrap();
        assert_eq!(f.eval_real(&[2.0]).unwrap(), C64::new(4.0, 4.0));
        let f = parse_expression("1e-3 + 2E2").unwrap().compile(&[]).unwrap();
        assert_eq!(f.eval(&[]).unwrap().re, 200.001);
    }

    #[test]
    fn printer_keeps_structure() {
        for src in ["a - (b - c)", "a/(b*c)", "(-a)^2", "a^-2", "-(a*b)", "a - -b", "(a + b)^(c - d)", "exp(sqrt(abs(x)))"] {
            let e = parse_expression(src).unwrap();
            assert_eq!(e.to_string(), src);
            assert_eq!(parse_expression(&e.to_string()).unwrap(), e);
        }
    }

    #[test]
    fn unbound_variable_is_an_error() {
        assert!(parse_expression("j + k").unwrap().compile(&["j"]).is_err());
        let f = parse_expression("1/j").unwrap().compile(&["j"]).unwrap();
        assert!(f.eval_real(&[0.0]).is_err());
    }

    #[test]
    fn delta_function() {
        let f = parse_expression("delta(j - k - 1)").unwrap().compile(&["j", "k"]).unwrap();
        assert_eq!(f.eval_real(&[3.0, 2.0]).unwrap().re, 1.0);
        assert_eq!(f.eval_real(&[3.0, 3.0]).unwrap().re, 0.0);
    }
}
