//! Predicate language of the emitted contracts. The EBNF lives in
//! `docs/annotation-grammar.md`.

use std::collections::BTreeMap;
use std::fmt;

use crate::error::{CertError, CertResult};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RelOp {
    Le,
    Lt,
    Ge,
    Gt,
    Eq,
}

impl RelOp {
    pub fn as_str(self) -> &'static str {
        match self {
            RelOp::Le => "<=",
            RelOp::Lt => "<",
            RelOp::Ge => ">=",
            RelOp::Gt => ">",
            RelOp::Eq => "==",
        }
    }

    fn holds(self, l: f64, r: f64) -> bool {
        match self {
            RelOp::Le => l <= r,
            RelOp::Lt => l < r,
            RelOp::Ge => l >= r,
            RelOp::Gt => l > r,
            RelOp::Eq => l == r,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Num(f64),
    Var(String),
    Neg(Box<Expr>),
    Add(Box<Expr>, Box<Expr>),
    Sub(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
}

impl Expr {
    /// Polynomial degree, counting every variable as degree one.
    pub fn degree(&self) -> usize {
        match self {
            Expr::Num(_) => 0,
            Expr::Var(_) => 1,
            Expr::Neg(e) => e.degree(),
            Expr::Add(a, b) | Expr::Sub(a, b) => a.degree().max(b.degree()),
            Expr::Mul(a, b) => a.degree() + b.degree(),
        }
    }

    pub fn eval(&self, env: &BTreeMap<String, f64>) -> CertResult<f64> {
        Ok(match self {
            Expr::Num(v) => *v,
            Expr::Var(name) => *env
                .get(name)
                .ok_or_else(|| CertError::Annotation(format!("unbound variable `{name}`")))?,
            Expr::Neg(e) => -e.eval(env)?,
            Expr::Add(a, b) => a.eval(env)? + b.eval(env)?,
            Expr::Sub(a, b) => a.eval(env)? - b.eval(env)?,
            Expr::Mul(a, b) => a.eval(env)? * b.eval(env)?,
        })
    }

    fn collect_vars(&self, out: &mut Vec<String>) {
        match self {
            Expr::Num(_) => {}
            Expr::Var(v) => {
                if !out.contains(v) {
                    out.push(v.clone());
                }
            }
            Expr::Neg(e) => e.collect_vars(out),
            Expr::Add(a, b) | Expr::Sub(a, b) | Expr::Mul(a, b) => {
                a.collect_vars(out);
                b.collect_vars(out);
            }
        }
    }
}

/// `lhs op rhs` with both sides at most quadratic.
#[derive(Debug, Clone, PartialEq)]
pub struct Predicate {
    pub lhs: Expr,
    pub op: RelOp,
    pub rhs: Expr,
}

impl Predicate {
    pub fn eval(&self, env: &BTreeMap<String, f64>) -> CertResult<bool> {
        Ok(self.op.holds(self.lhs.eval(env)?, self.rhs.eval(env)?))
    }

    /// Variables in order of first appearance.
    pub fn variables(&self) -> Vec<String> {
        let mut v = Vec::new();
        self.lhs.collect_vars(&mut v);
        self.rhs.collect_vars(&mut v);
        v
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Num(v) => write!(f, "{v}"),
            Expr::Var(n) => f.write_str(n),
            Expr::Neg(e) => write!(f, "-({e})"),
            Expr::Add(a, b) => write!(f, "({a} + {b})"),
            Expr::Sub(a, b) => write!(f, "({a} - {b})"),
            Expr::Mul(a, b) => write!(f, "{a}*{b}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(f64),
    Ident(String),
    Plus,
    Minus,
    Star,
    LParen,
    RParen,
    Rel(RelOp),
}

fn lex(src: &str) -> CertResult<Vec<Tok>> {
    let err = |pos: usize, msg: &str| CertError::Annotation(format!("column {}: {msg}", pos + 1));
    let bytes = src.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i] as char;
        match c {
            ' ' | '\t' => i += 1,
            '+' => {
                out.push(Tok::Plus);
                i += 1
            }
            '-' => {
                out.push(Tok::Minus);
                i += 1
            }
            '*' => {
                out.push(Tok::Star);
                i += 1
            }
            '(' => {
                out.push(Tok::LParen);
                i += 1
            }
            ')' => {
                out.push(Tok::RParen);
                i += 1
            }
            '<' | '>' | '=' => {
                let two = bytes.get(i + 1) == Some(&b'=');
                let op = match (c, two) {
                    ('<', true) => RelOp::Le,
                    ('<', false) => RelOp::Lt,
                    ('>', true) => RelOp::Ge,
                    ('>', false) => RelOp::Gt,
                    ('=', true) => RelOp::Eq,
                    _ => return Err(err(i, "`=` must be written `==`")),
                };
                out.push(Tok::Rel(op));
                i += if two { 2 } else { 1 };
            }
            '0'..='9' | '.' => {
                let start = i;
                while i < bytes.len() && (bytes[i].is_ascii_digit() || bytes[i] == b'.') {
                    i += 1;
                }
                if i < bytes.len() && (bytes[i] == b'e' || bytes[i] == b'E') {
                    i += 1;
                    if i < bytes.len() && (bytes[i] == b'+' || bytes[i] == b'-') {
                        i += 1;
                    }
                    let exp_start = i;
                    while i < bytes.len() && bytes[i].is_ascii_digit() {
                        i += 1;
                    }
                    if exp_start == i {
                        return Err(err(start, "exponent without digits"));
                    }
                }
                let text = &src[start..i];
                let v: f64 = text
                    .parse()
                    .map_err(|_| err(start, &format!("bad number `{text}`")))?;
                out.push(Tok::Num(v));
            }
            c if c.is_ascii_alphabetic() || c == '_' => {
                let start = i;
                while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_') {
                    i += 1;
                }
                out.push(Tok::Ident(src[start..i].to_string()));
            }
            _ => return Err(err(i, &format!("unexpected character `{c}`"))),
        }
    }
    Ok(out)
}

struct Parser {
    toks: Vec<Tok>,
    pos: usize,
}

impl Parser {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos)
    }

    fn bump(&mut self) -> Option<Tok> {
        let t = self.toks.get(self.pos).cloned();
        self.pos += 1;
        t
    }

    fn expr(&mut self) -> CertResult<Expr> {
        let mut lhs = self.term()?;
        loop {
            match self.peek() {
                Some(Tok::Plus) => {
                    self.bump();
                    lhs = Expr::Add(Box::new(lhs), Box::new(self.term()?));
                }
                Some(Tok::Minus) => {
                    self.bump();
                    lhs = Expr::Sub(Box::new(lhs), Box::new(self.term()?));
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn term(&mut self) -> CertResult<Expr> {
        let mut lhs = self.factor()?;
        while self.peek() == Some(&Tok::Star) {
            self.bump();
            lhs = Expr::Mul(Box::new(lhs), Box::new(self.factor()?));
        }
        Ok(lhs)
    }

    fn factor(&mut self) -> CertResult<Expr> {
        if self.peek() == Some(&Tok::Minus) {
            self.bump();
            return Ok(Expr::Neg(Box::new(self.primary()?)));
        }
        self.primary()
    }

    fn primary(&mut self) -> CertResult<Expr> {
        match self.bump() {
            Some(Tok::Num(v)) => Ok(Expr::Num(v)),
            Some(Tok::Ident(n)) => Ok(Expr::Var(n)),
            Some(Tok::LParen) => {
                let e = self.expr()?;
                match self.bump() {
                    Some(Tok::RParen) => Ok(e),
                    _ => Err(CertError::Annotation("missing `)`".into())),
                }
            }
            other => Err(CertError::Annotation(format!(
                "expected a number, name or `(`, found {other:?}"
            ))),
        }
    }
}

/// Parses and degree-checks one predicate.
pub fn parse_predicate(src: &str) -> CertResult<Predicate> {
    let mut p = Parser {
        toks: lex(src)?,
        pos: 0,
    };
    let lhs = p.expr()?;
    let op = match p.bump() {
        Some(Tok::Rel(op)) => op,
        other => {
            return Err(CertError::Annotation(format!(
                "expected a comparison in `{src}`, found {other:?}"
            )))
        }
    };
    let rhs = p.expr()?;
    if p.pos < p.toks.len() {
        return Err(CertError::Annotation(format!("trailing input in `{src}`")));
    }
    if lhs.degree() > 2 || rhs.degree() > 2 {
        return Err(CertError::Annotation(format!(
            "`{src}` is not linear or quadratic"
        )));
    }
    Ok(Predicate { lhs, op, rhs })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn env(pairs: &[(&str, f64)]) -> BTreeMap<String, f64> {
        pairs.iter().map(|(k, v)| (k.to_string(), *v)).collect()
    }

    #[test]
    fn precedence_and_evaluation() {
        let p = parse_predicate("2*e1*e1 + 3*e2*e2 <= 6").unwrap();
        assert!(p.eval(&env(&[("e1", 1.0), ("e2", 1.0)])).unwrap());
        assert!(!p.eval(&env(&[("e1", 1.0), ("e2", 1.2)])).unwrap());
        assert_eq!(p.variables(), vec!["e1", "e2"]);
        let q = parse_predicate("x - -1 * (2 - x) == 1").unwrap();
        // x + 2 − x = 2
        assert!(!q.eval(&env(&[("x", 5.0)])).unwrap());
        assert!(parse_predicate("1.5e-3*u*u < 0.25").is_ok());
    }

    #[test]
    fn rejects_bad_input() {
        for bad in [
            "x*x*x <= 1",
            "x <= ",
            "x = 1",
            "x <= 1 1",
            "x[0] <= 1",
            "(x <= 1",
            "1e <= x",
        ] {
            assert!(parse_predicate(bad).is_err(), "{bad}");
        }
        assert!(parse_predicate("y <= 1").unwrap().eval(&env(&[])).is_err());
    }
}
