//! A small expression language for closed-form metric entries and conformal
//! factors, evaluated in Taylor mode at the origin.
//!
//! Grammar, loosest binding first:
//!
//! ```text
//! expr    := term (("+" | "-") term)*
//! term    := unary (("*" | "/") unary)*
//! unary   := "-" unary | power
//! power   := primary ("^" "-"? integer)?
//! primary := number | "x" index | func "(" expr ")" | "(" expr ")"
//! func    := exp | log | sin | cos | sqrt
//! ```
//!
//! Variables are `x1 … xn`. Exponents are integer literals, so `x1^2^3` must be
//! written `(x1^2)^3`. Errors carry the byte offset where parsing stopped.

use std::fmt;

use crate::error::{Error, Result};
use crate::jet::{Analytic, ScalarJet};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Func {
    Exp,
    Log,
    Sin,
    Cos,
    Sqrt,
}

impl Func {
    fn from_name(name: &str) -> Option<Func> {
        Some(match name {
            "exp" => Func::Exp,
            "log" => Func::Log,
            "sin" => Func::Sin,
            "cos" => Func::Cos,
            "sqrt" => Func::Sqrt,
            _ => return None,
        })
    }

    pub fn name(self) -> &'static str {
        match self {
            Func::Exp => "exp",
            Func::Log => "log",
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Sqrt => "sqrt",
        }
    }

    fn analytic(self) -> Analytic {
        match self {
            Func::Exp => Analytic::Exp,
            Func::Log => Analytic::Log,
            Func::Sin => Analytic::Sin,
            Func::Cos => Analytic::Cos,
            Func::Sqrt => Analytic::Sqrt,
        }
    }

    fn apply(self, v: f64) -> f64 {
        match self {
            Func::Exp => v.exp(),
            Func::Log => v.ln(),
            Func::Sin => v.sin(),
            Func::Cos => v.cos(),
            Func::Sqrt => v.sqrt(),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Expr {
    Const(f64),
    /// Zero-based variable index; `x1` is `Var(0)`.
    Var(usize),
    Neg(Box<Expr>),
    Add(Box<Expr>, Box<Expr>),
    Sub(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
    Div(Box<Expr>, Box<Expr>),
    Pow(Box<Expr>, i32),
    Call(Func, Box<Expr>),
}

impl Expr {
    /// Number of variables the expression needs, i.e. the largest index used.
    pub fn dim_needed(&self) -> usize {
        match self {
            Expr::Const(_) => 0,
            Expr::Var(i) => i + 1,
            Expr::Neg(a) | Expr::Pow(a, _) | Expr::Call(_, a) => a.dim_needed(),
            Expr::Add(a, b) | Expr::Sub(a, b) | Expr::Mul(a, b) | Expr::Div(a, b) => a.dim_needed().max(b.dim_needed()),
        }
    }

    /// Pointwise value; variables beyond `x.len()` are an error.
    pub fn eval(&self, x: &[f64]) -> Result<f64> {
        Ok(match self {
            Expr::Const(c) => *c,
            Expr::Var(i) => *x
                .get(*i)
                .ok_or_else(|| Error::Input(format!("x{} used in dimension {}", i + 1, x.len())))?,
            Expr::Neg(a) => -a.eval(x)?,
            Expr::Add(a, b) => a.eval(x)? + b.eval(x)?,
            Expr::Sub(a, b) => a.eval(x)? - b.eval(x)?,
            Expr::Mul(a, b) => a.eval(x)? * b.eval(x)?,
            Expr::Div(a, b) => a.eval(x)? / b.eval(x)?,
            Expr::Pow(a, k) => a.eval(x)?.powi(*k),
            Expr::Call(f, a) => f.apply(a.eval(x)?),
        })
    }

    fn precedence(&self) -> u8 {
        match self {
            Expr::Add(..) | Expr::Sub(..) => 1,
            Expr::Mul(..) | Expr::Div(..) => 2,
            Expr::Neg(_) => 3,
            Expr::Pow(..) => 4,
            Expr::Const(c) if c.is_sign_negative() => 3,
            _ => 5,
        }
    }

    fn write_at(&self, f: &mut fmt::Formatter<'_>, min: u8) -> fmt::Result {
        let wrap = self.precedence() < min;
        if wrap {
            f.write_str("(")?;
        }
        match self {
            Expr::Const(c) => {
                if c.is_sign_negative() {
                    write!(f, "-{}", -c)?;
                } else {
                    write!(f, "{c}")?;
                }
            }
            Expr::Var(i) => write!(f, "x{}", i + 1)?,
            Expr::Neg(a) => {
                f.write_str("-")?;
                a.write_at(f, 3)?;
            }
            Expr::Add(a, b) | Expr::Sub(a, b) => {
                a.write_at(f, 1)?;
                f.write_str(if matches!(self, Expr::Add(..)) { " + " } else { " - " })?;
                b.write_at(f, 2)?;
            }
            Expr::Mul(a, b) | Expr::Div(a, b) => {
                a.write_at(f, 2)?;
                f.write_str(if matches!(self, Expr::Mul(..)) { "*" } else { "/" })?;
                b.write_at(f, 3)?;
            }
            Expr::Pow(a, k) => {
                a.write_at(f, 5)?;
                write!(f, "^{k}")?;
            }
            Expr::Call(func, a) => {
                write!(f, "{}(", func.name())?;
                a.write_at(f, 0)?;
                f.write_str(")")?;
            }
        }
        if wrap {
            f.write_str(")")?;
        }
        Ok(())
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.write_at(f, 0)
    }
}

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    Num(f64),
    Ident(String),
    Op(u8),
    End,
}

struct Parser<'a> {
    src: &'a str,
    pos: usize,
    tok: Tok,
    start: usize,
}

fn syntax(offset: usize, message: impl Into<String>) -> Error {
    Error::Syntax {
        offset,
        message: message.into(),
    }
}

impl<'a> Parser<'a> {
    fn new(src: &'a str) -> Result<Self> {
        let mut p = Parser {
            src,
            pos: 0,
            tok: Tok::End,
            start: 0,
        };
        p.advance()?;
        Ok(p)
    }

    fn advance(&mut self) -> Result<()> {
        let bytes = self.src.as_bytes();
        while self.pos < bytes.len() && bytes[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
        self.start = self.pos;
        let Some(&c) = bytes.get(self.pos) else {
            self.tok = Tok::End;
            return Ok(());
        };
        if c.is_ascii_digit() || c == b'.' {
            let mut end = self.pos;
            while end < bytes.len() && (bytes[end].is_ascii_digit() || bytes[end] == b'.') {
                end += 1;
            }
            // optional exponent, only when digits follow
            if end < bytes.len() && (bytes[end] == b'e' || bytes[end] == b'E') {
                let mut k = end + 1;
                if k < bytes.len() && (bytes[k] == b'+' || bytes[k] == b'-') {
                    k += 1;
                }
                if k < bytes.len() && bytes[k].is_ascii_digit() {
                    while k < bytes.len() && bytes[k].is_ascii_digit() {
                        k += 1;
                    }
                    end = k;
                }
            }
            let text = &self.src[self.pos..end];
            let v: f64 = text
                .parse()
                .map_err(|_| syntax(self.pos, format!("malformed number '{text}'")))?;
            self.tok = Tok::Num(v);
            self.pos = end;
        } else if c.is_ascii_alphabetic() || c == b'_' {
            let mut end = self.pos;
            while end < bytes.len() && (bytes[end].is_ascii_alphanumeric() || bytes[end] == b'_') {
                end += 1;
            }
            self.tok = Tok::Ident(self.src[self.pos..end].to_string());
            self.pos = end;
        } else if b"+-*/^(),".contains(&c) {
            self.tok = Tok::Op(c);
            self.pos += 1;
        } else {
            let ch = self.src[self.pos..].chars().next().unwrap_or('?');
            return Err(syntax(self.pos, format!("unexpected character '{ch}'")));
        }
        Ok(())
    }

    fn eat(&mut self, op: u8) -> Result<bool> {
        if self.tok == Tok::Op(op) {
            self.advance()?;
            Ok(true)
        } else {
            Ok(false)
        }
    }

    fn expect(&mut self, op: u8) -> Result<()> {
        if self.eat(op)? {
            Ok(())
        } else {
            Err(syntax(self.start, format!("expected '{}'", op as char)))
        }
    }

    fn expr(&mut self) -> Result<Expr> {
        let mut lhs = self.term()?;
        loop {
            if self.eat(b'+')? {
                lhs = Expr::Add(Box::new(lhs), Box::new(self.term()?));
            } else if self.eat(b'-')? {
                lhs = Expr::Sub(Box::new(lhs), Box::new(self.term()?));
            } else {
                return Ok(lhs);
            }
        }
    }

    fn term(&mut self) -> Result<Expr> {
        let mut lhs = self.unary()?;
        loop {
            if self.eat(b'*')? {
                lhs = Expr::Mul(Box::new(lhs), Box::new(self.unary()?));
            } else if self.eat(b'/')? {
                lhs = Expr::Div(Box::new(lhs), Box::new(self.unary()?));
            } else {
                return Ok(lhs);
            }
        }
    }

    fn unary(&mut self) -> Result<Expr> {
        if self.eat(b'-')? {
            return Ok(Expr::Neg(Box::new(self.unary()?)));
        }
        self.power()
    }

    fn power(&mut self) -> Result<Expr> {
        let base = self.primary()?;
        if !self.eat(b'^')? {
            return Ok(base);
        }
        let at = self.start;
        let negative = self.eat(b'-')?;
        let k = match self.tok {
            Tok::Num(v) if v.fract() == 0.0 && v.abs() <= i32::MAX as f64 => v as i32,
            _ => return Err(syntax(self.start, "exponent must be an integer literal")),
        };
        if self.src[self.start..self.pos].contains(['.', 'e', 'E']) {
            return Err(syntax(self.start, "exponent must be an integer literal"));
        }
        self.advance()?;
        if self.tok == Tok::Op(b'^') {
            return Err(syntax(at, "chained exponents need parentheses"));
        }
        Ok(Expr::Pow(Box::new(base), if negative { -k } else { k }))
    }

    fn primary(&mut self) -> Result<Expr> {
        let at = self.start;
        match self.tok.clone() {
            Tok::Num(v) => {
                self.advance()?;
                Ok(Expr::Const(v))
            }
            Tok::Op(b'(') => {
                self.advance()?;
                let e = self.expr()?;
                self.expect(b')')?;
                Ok(e)
            }
            Tok::Ident(name) => {
                self.advance()?;
                if let Some(func) = Func::from_name(&name) {
                    if self.tok != Tok::Op(b'(') {
                        return Err(syntax(self.start, format!("expected '(' after {name}")));
                    }
                    self.advance()?;
                    let mut args = vec![];
                    if self.tok != Tok::Op(b')') {
                        args.push(self.expr()?);
                        while self.eat(b',')? {
                            args.push(self.expr()?);
                        }
                    }
                    self.expect(b')')?;
                    if args.len() != 1 {
                        return Err(Error::Arity {
                            name,
                            expected: 1,
                            found: args.len(),
                        });
                    }
                    return Ok(Expr::Call(func, Box::new(args.pop().unwrap())));
                }
                match name.strip_prefix('x').map(str::parse::<usize>) {
                    Some(Ok(i)) if i >= 1 && !name[1..].starts_with('0') => Ok(Expr::Var(i - 1)),
                    _ => Err(Error::UnknownIdentifier { name, offset: at }),
                }
            }
            Tok::End => Err(syntax(at, "unexpected end of input")),
            Tok::Op(c) => Err(syntax(at, format!("unexpected '{}'", c as char))),
        }
    }
}

pub fn parse(src: &str) -> Result<Expr> {
    let mut p = Parser::new(src)?;
    let e = p.expr()?;
    if p.tok != Tok::End {
        return Err(syntax(p.start, "unexpected trailing input"));
    }
    Ok(e)
}

/// Taylor jet at the origin in `n` variables to the given order.
pub fn eval_jet(e: &Expr, n: usize, order: usize) -> Result<ScalarJet> {
    Ok(match e {
        Expr::Const(c) => ScalarJet::constant(n, order, *c),
        Expr::Var(i) => {
            if *i >= n {
                return Err(Error::Input(format!("x{} used in dimension {n}", i + 1)));
            }
            ScalarJet::variable(n, order, *i)
        }
        Expr::Neg(a) => -&eval_jet(a, n, order)?,
        Expr::Add(a, b) => &eval_jet(a, n, order)? + &eval_jet(b, n, order)?,
        Expr::Sub(a, b) => &eval_jet(a, n, order)? - &eval_jet(b, n, order)?,
        Expr::Mul(a, b) => &eval_jet(a, n, order)? * &eval_jet(b, n, order)?,
        Expr::Div(a, b) => {
            let den = eval_jet(b, n, order)?;
            if den.constant_term() == 0.0 {
                return Err(Error::Domain { op: "division", value: 0.0 });
            }
            &eval_jet(a, n, order)? * &den.inv()?
        }
        Expr::Pow(a, k) => {
            let base = eval_jet(a, n, order)?;
            if *k < 0 && base.constant_term() == 0.0 {
                return Err(Error::Domain { op: "negative power", value: 0.0 });
            }
            base.powi(*k)?
        }
        Expr::Call(f, a) => eval_jet(a, n, order)?.compose(f.analytic())?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fixpoint(src: &str) {
        let e = parse(src).unwrap_or_else(|err| panic!("{src}: {err}"));
        let printed = e.to_string();
        let again = parse(&printed).unwrap_or_else(|err| panic!("{printed}: {err}"));
        assert_eq!(e, again, "{src} -> {printed}");
        assert_eq!(printed, again.to_string());
    }

    #[test]
    fn examples_parse() {
        assert!(parse("4/(1+x1^2+x2^2)^2").is_ok());
        assert!(parse("exp(0.1*x1) * (1 + x2)").is_ok());
        match parse("x1 +").unwrap_err() {
            Error::Syntax { offset, .. } => assert_eq!(offset, 4),
            e => panic!("{e:?}"),
        }
    }

    #[test]
    fn precedence() {
        let x = |i| Box::new(Expr::Var(i));
        assert_eq!(parse("-x1^2").unwrap(), Expr::Neg(Box::new(Expr::Pow(x(0), 2))));
        assert_eq!(parse("x1 - x2 - x3").unwrap(), Expr::Sub(Box::new(Expr::Sub(x(0), x(1))), x(2)));
        assert_eq!(parse("x1/x2*x3").unwrap(), Expr::Mul(Box::new(Expr::Div(x(0), x(1))), x(2)));
        assert_eq!(parse("x1 + x2*x3").unwrap(), Expr::Add(x(0), Box::new(Expr::Mul(x(1), x(2)))));
        assert_eq!(parse("x2^-3").unwrap(), Expr::Pow(x(1), -3));
        assert_eq!(parse("2.5e-1").unwrap(), Expr::Const(0.25));
    }

    #[test]
    fn errors_carry_positions() {
        assert_eq!(
            parse("x1 + foo(x2)").unwrap_err(),
            Error::UnknownIdentifier { name: "foo".into(), offset: 5 }
        );
        assert_eq!(parse("exp(x1, x2)").unwrap_err(), Error::Arity { name: "exp".into(), expected: 1, found: 2 });
        assert!(matches!(parse("sin()").unwrap_err(), Error::Arity { found: 0, .. }));
        assert!(matches!(parse("x0").unwrap_err(), Error::UnknownIdentifier { offset: 0, .. }));
        assert!(matches!(parse("x1^1.5").unwrap_err(), Error::Syntax { offset: 3, .. }));
        assert!(matches!(parse("x1^2^2").unwrap_err(), Error::Syntax { .. }));
        assert!(matches!(parse("(x1").unwrap_err(), Error::Syntax { offset: 3, .. }));
        assert!(matches!(parse("x1 $ 2").unwrap_err(), Error::Syntax { offset: 3, .. }));
        assert!(matches!(parse("x1 x2").unwrap_err(), Error::Syntax { offset: 3, .. }));
    }

    #[test]
    fn print_parse_fixpoint_corpus() {
        let corpus = [
            "1",
            "x1",
            "-x1",
            "--x1",
            "x1 + x2",
            "x1 - x2 - x3",
            "x1 - (x2 - x3)",
            "x1 - (x2 + x3)",
            "x1*x2*x3",
            "x1*(x2*x3)",
            "x1/x2/x3",
            "x1/(x2/x3)",
            "x1/(x2*x3)",
            "(x1 + x2)*x3",
            "x1*-x2",
            "x1 - -x2",
            "-(x1 + x2)",
            "(-x1)^2",
            "-x1^2",
            "x1^-2",
            "(x1^2)^3",
            "(x1*x2)^2",
            "(x1 + 1)^-1",
            "4/(1+x1^2+x2^2)^2",
            "exp(0.1*x1) * (1 + x2)",
            "exp(x1)",
            "log(1 + x1)",
            "sin(x1)*cos(x2)",
            "sqrt(1 + x1^2)",
            "exp(-x1^2 - x2^2)",
            "exp(exp(x1))",
            "log(2 - cos(x1))",
            "1 + 0.5*x1*x2 - 0.25*x3^2",
            "0.000001*x1",
            "1e-7*x2",
            "123456789.125",
            "3.141592653589793*x1",
            "1/3",
            "-(1/3)",
            "2^10",
            "(2 + x1)^0",
            "x1 + x2 + x3 + x4 + x5 + x6 + x7 + x8",
            "((x1))",
            "-(-(x1))",
            "sqrt(sqrt(2 + x1))",
            "cos(x1 + x2*x3)/(2 + sin(x4))",
            "(x1 - x2)*(x1 + x2)",
            "x1*x2/(x3 - 2)^2",
            "exp(-(x1 - 0.3)^2)",
            "4/(1 + x1^2 + x2^2 + x3^2 + x4^2)^2",
        ];
        assert_eq!(corpus.len(), 50);
        for src in corpus {
            fixpoint(src);
        }
    }

    #[test]
    fn negative_constants_print_back() {
        let e = Expr::Mul(Box::new(Expr::Const(-2.0)), Box::new(Expr::Var(0)));
        let p = parse(&e.to_string()).unwrap();
        assert_eq!(p.eval(&[3.0]).unwrap(), -6.0);
        let e = Expr::Pow(Box::new(Expr::Const(-2.0)), 2);
        assert_eq!(parse(&e.to_string()).unwrap().eval(&[]).unwrap(), 4.0);
    }

    #[test]
    fn jet_examples() {
        let j = eval_jet(&parse("x1*x2").unwrap(), 3, 2).unwrap();
        assert_eq!(j.coeff(&[1, 1, 0]), 1.0);
        assert_eq!(j.terms().filter(|(_, c)| *c != 0.0).count(), 1);
        let j = eval_jet(&parse("exp(x1)").unwrap(), 1, 3).unwrap();
        assert_eq!(j.coeffs(), &[1.0, 1.0, 0.5, 1.0 / 6.0]);
    }

    #[test]
    fn jet_domain_errors() {
        assert_eq!(eval_jet(&parse("log(x1)").unwrap(), 1, 2).unwrap_err(), Error::Domain { op: "log", value: 0.0 });
        assert!(matches!(eval_jet(&parse("1/x1").unwrap(), 1, 2), Err(Error::Domain { .. })));
        assert!(matches!(eval_jet(&parse("sqrt(x1)").unwrap(), 1, 2), Err(Error::Domain { .. })));
        assert!(matches!(eval_jet(&parse("x1^-1").unwrap(), 1, 2), Err(Error::Domain { .. })));
        assert!(eval_jet(&parse("x3").unwrap(), 2, 2).is_err());
    }

    #[test]
    fn jets_multiply_like_expressions() {
        let a = parse("exp(x1 - x2)/(2 + x3)").unwrap();
        let b = parse("sqrt(1 + x1*x2) + sin(x3)").unwrap();
        let prod = Expr::Mul(Box::new(a.clone()), Box::new(b.clone()));
        let (n, order) = (3, 5);
        let lhs = eval_jet(&prod, n, order).unwrap();
        let rhs = &eval_jet(&a, n, order).unwrap() * &eval_jet(&b, n, order).unwrap();
        assert_eq!(lhs.coeffs(), rhs.coeffs());
    }

    #[test]
    fn jet_agrees_with_pointwise_values() {
        let e = parse("cos(x1 + x2*x3)/(2 + sin(x4)) + log(3 - x1)").unwrap();
        let j = eval_jet(&e, 4, 8).unwrap();
        let x = [0.02, -0.03, 0.01, 0.04];
        assert!((j.eval(&x) - e.eval(&x).unwrap()).abs() < 1e-13);
    }
}
