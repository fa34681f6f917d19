//! Arithmetic expression grammar for user-defined scalar functions.
//!
//! Supported syntax: `+ - * / ^`, parentheses, numeric literals, the
//! variables `x1 ... xd`, and the functions `abs`, `max`, `min`, `sin`,
//! `cos`, `exp`, `log`, `sqrt`. `^` binds tighter than unary minus on its
//! right operand and is right-associative, so `-x1^2` is `-(x1^2)`.

use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Const(f64),
    /// Zero-based variable index into the evaluation point.
    Var(usize),
    Neg(Box<Expr>),
    Add(Box<Expr>, Box<Expr>),
    Sub(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
    Div(Box<Expr>, Box<Expr>),
    Pow(Box<Expr>, Box<Expr>),
    Call(Func, Vec<Expr>),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Func {
    Abs,
    Max,
    Min,
    Sin,
    Cos,
    Exp,
    Log,
    Sqrt,
}

impl Func {
    fn from_name(name: &str) -> Option<Func> {
        Some(match name {
            "abs" => Func::Abs,
            "max" => Func::Max,
            "min" => Func::Min,
            "sin" => Func::Sin,
            "cos" => Func::Cos,
            "exp" => Func::Exp,
            "log" => Func::Log,
            "sqrt" => Func::Sqrt,
            _ => return None,
        })
    }

    fn arity_ok(&self, n: usize) -> bool {
        match self {
            Func::Max | Func::Min => n >= 2,
            _ => n == 1,
        }
    }
}

impl Expr {
    /// Parses `src` as an expression over `x1 ... x<dim>`.
    pub fn parse(src: &str, dim: usize) -> Result<Expr> {
        let tokens = tokenize(src)?;
        let mut p = Parser { tokens, pos: 0, dim };
        let e = p.expr()?;
        if p.pos != p.tokens.len() {
            return Err(Error::Parse(format!(
                "unexpected trailing input near `{}`",
                p.describe_current()
            )));
        }
        Ok(e)
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        match self {
            Expr::Const(c) => *c,
            Expr::Var(i) => x[*i],
            Expr::Neg(e) => -e.eval(x),
            Expr::Add(a, b) => a.eval(x) + b.eval(x),
            Expr::Sub(a, b) => a.eval(x) - b.eval(x),
            Expr::Mul(a, b) => a.eval(x) * b.eval(x),
            Expr::Div(a, b) => a.eval(x) / b.eval(x),
            Expr::Pow(a, b) => a.eval(x).powf(b.eval(x)),
            Expr::Call(f, args) => {
                let mut it = args.iter().map(|a| a.eval(x));
                match f {
                    Func::Abs => it.next().unwrap().abs(),
                    Func::Sin => it.next().unwrap().sin(),
                    Func::Cos => it.next().unwrap().cos(),
                    Func::Exp => it.next().unwrap().exp(),
                    Func::Log => it.next().unwrap().ln(),
                    Func::Sqrt => it.next().unwrap().sqrt(),
                    Func::Max => it.fold(f64::NEG_INFINITY, f64::max),
                    Func::Min => it.fold(f64::INFINITY, f64::min),
                }
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Token {
    Num(f64),
    Ident(String),
    Plus,
    Minus,
    Star,
    Slash,
    Caret,
    LParen,
    RParen,
    Comma,
}

fn tokenize(src: &str) -> Result<Vec<Token>> {
    let mut out = Vec::new();
    let bytes = src.as_bytes();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i] as char;
        match c {
            ' ' | '\t' | '\n' | '\r' => i += 1,
            '+' => {
                out.push(Token::Plus);
                i += 1;
            }
            '-' => {
                out.push(Token::Minus);
                i += 1;
            }
            '*' => {
                out.push(Token::Star);
                i += 1;
            }
            '/' => {
                out.push(Token::Slash);
                i += 1;
            }
            '^' => {
                out.push(Token::Caret);
                i += 1;
            }
            '(' => {
                out.push(Token::LParen);
                i += 1;
            }
            ')' => {
                out.push(Token::RParen);
                i += 1;
            }
            ',' => {
                out.push(Token::Comma);
                i += 1;
            }
            '0'..='9' | '.' => {
                let start = i;
                while i < bytes.len() && matches!(bytes[i] as char, '0'..='9' | '.') {
                    i += 1;
                }
                // exponent suffix like 1e-3
                if i < bytes.len() && matches!(bytes[i] as char, 'e' | 'E') {
                    let mut j = i + 1;
                    if j < bytes.len() && matches!(bytes[j] as char, '+' | '-') {
                        j += 1;
                    }
                    if j < bytes.len() && (bytes[j] as char).is_ascii_digit() {
                        i = j;
                        while i < bytes.len() && (bytes[i] as char).is_ascii_digit() {
                            i += 1;
                        }
                    }
                }
                let text = &src[start..i];
                let v: f64 = text
                    .parse()
                    .map_err(|_| Error::Parse(format!("bad number `{text}`")))?;
                out.push(Token::Num(v));
            }
            'a'..='z' | 'A'..='Z' | '_' => {
                let start = i;
                while i < bytes.len()
                    && matches!(bytes[i] as char, 'a'..='z' | 'A'..='Z' | '0'..='9' | '_')
                {
                    i += 1;
                }
                out.push(Token::Ident(src[start..i].to_string()));
            }
            _ => return Err(Error::Parse(format!("unexpected character `{c}`"))),
        }
    }
    Ok(out)
}

struct Parser {
    tokens: Vec<Token>,
    pos: usize,
    dim: usize,
}

impl Parser {
    fn peek(&self) -> Option<&Token> {
        self.tokens.get(self.pos)
    }

    fn bump(&mut self) -> Option<Token> {
        let t = self.tokens.get(self.pos).cloned();
        if t.is_some() {
            self.pos += 1;
        }
        t
    }

    fn describe_current(&self) -> String {
        match self.peek() {
            Some(t) => format!("{t:?}"),
            None => "end of input".to_string(),
        }
    }

    fn expr(&mut self) -> Result<Expr> {
        let mut lhs = self.term()?;
        loop {
            match self.peek() {
                Some(Token::Plus) => {
                    self.bump();
                    lhs = Expr::Add(Box::new(lhs), Box::new(self.term()?));
                }
                Some(Token::Minus) => {
                    self.bump();
                    lhs = Expr::Sub(Box::new(lhs), Box::new(self.term()?));
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn term(&mut self) -> Result<Expr> {
        let mut lhs = self.unary()?;
        loop {
            match self.peek() {
                Some(Token::Star) => {
                    self.bump();
                    lhs = Expr::Mul(Box::new(lhs), Box::new(self.unary()?));
                }
                Some(Token::Slash) => {
                    self.bump();
                    lhs = Expr::Div(Box::new(lhs), Box::new(self.unary()?));
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn unary(&mut self) -> Result<Expr> {
        if matches!(self.peek(), Some(Token::Minus)) {
            self.bump();
            return Ok(Expr::Neg(Box::new(self.unary()?)));
        }
        self.power()
    }

    fn power(&mut self) -> Result<Expr> {
        let base = self.atom()?;
        if matches!(self.peek(), Some(Token::Caret)) {
            self.bump();
            // right-associative; allow a unary minus in the exponent
            let exp = self.unary()?;
            return Ok(Expr::Pow(Box::new(base), Box::new(exp)));
        }
        Ok(base)
    }

    fn atom(&mut self) -> Result<Expr> {
        match self.bump() {
            Some(Token::Num(v)) => Ok(Expr::Const(v)),
            Some(Token::LParen) => {
                let e = self.expr()?;
                match self.bump() {
                    Some(Token::RParen) => Ok(e),
                    _ => Err(Error::Parse("missing closing parenthesis".into())),
                }
            }
            Some(Token::Ident(name)) => {
                if matches!(self.peek(), Some(Token::LParen)) {
                    let f = Func::from_name(&name).ok_or_else(|| {
                        Error::Parse(format!("unknown function `{name}`"))
                    })?;
                    self.bump();
                    let mut args = vec![self.expr()?];
                    while matches!(self.peek(), Some(Token::Comma)) {
                        self.bump();
                        args.push(self.expr()?);
                    }
                    match self.bump() {
                        Some(Token::RParen) => {}
                        _ => return Err(Error::Parse("missing closing parenthesis".into())),
                    }
                    if !f.arity_ok(args.len()) {
                        return Err(Error::Parse(format!(
                            "function `{name}` does not take {} arguments",
                            args.len()
                        )));
                    }
                    Ok(Expr::Call(f, args))
                } else {
                    self.variable(&name)
                }
            }
            other => Err(Error::Parse(format!(
                "expected a value, found {other:?}"
            ))),
        }
    }

    fn variable(&self, name: &str) -> Result<Expr> {
        let idx: Option<usize> = name
            .strip_prefix('x')
            .and_then(|rest| rest.parse::<usize>().ok());
        match idx {
            Some(k) if k >= 1 && k <= self.dim => Ok(Expr::Var(k - 1)),
            Some(k) => Err(Error::Parse(format!(
                "variable x{k} out of range for dimension {}",
                self.dim
            ))),
            None => Err(Error::Parse(format!("unknown identifier `{name}`"))),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ev(src: &str, x: &[f64]) -> f64 {
        Expr::parse(src, x.len()).unwrap().eval(x)
    }

    #[test]
    fn arithmetic_and_precedence() {
        assert_eq!(ev("1 + 2 * 3", &[0.0]), 7.0);
        assert_eq!(ev("(1 + 2) * 3", &[0.0]), 9.0);
        assert_eq!(ev("2 ^ 3 ^ 2", &[0.0]), 512.0); // right-associative
        assert_eq!(ev("-x1^2", &[3.0]), -9.0);
        assert_eq!(ev("4 / 2 / 2", &[0.0]), 1.0);
        assert_eq!(ev("1e-3 + 2E2", &[0.0]), 200.001);
    }

    #[test]
    fn variables_and_functions() {
        assert_eq!(ev("x1 + x2 - 1", &[0.25, 0.5]), -0.25);
        assert_eq!(ev("abs(x1 - 2)", &[0.5]), 1.5);
        assert_eq!(ev("max(x1, x2, 3)", &[1.0, 2.0]), 3.0);
        assert_eq!(ev("min(x1, 0)", &[2.0]), 0.0);
        assert!((ev("sin(x1)^2 + cos(x1)^2", &[0.7]) - 1.0).abs() < 1e-15);
        assert!((ev("log(exp(x1))", &[1.5]) - 1.5).abs() < 1e-15);
        assert_eq!(ev("sqrt(x1)", &[16.0]), 4.0);
    }

    #[test]
    fn rejects_bad_input() {
        assert!(Expr::parse("x3", 2).is_err());
        assert!(Expr::parse("foo(x1)", 1).is_err());
        assert!(Expr::parse("1 +", 1).is_err());
        assert!(Expr::parse("(1 + 2", 1).is_err());
        assert!(Expr::parse("abs(1, 2)", 1).is_err());
        assert!(Expr::parse("1 2", 1).is_err());
    }
}
