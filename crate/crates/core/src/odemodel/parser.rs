//! Text format for polynomial ODE systems.
//!
//! ```text
//! system   := "vars" id ("," id)* ";" (equation ";")+
//! equation := polyexpr "=" polyexpr        (either side may be "0")
//! jetvar   := id "'"*
//! polyexpr := signed sums of products of jetvars, rational literals and
//!             sqrt(r) literals; "^" takes nonnegative integer exponents;
//!             "/" is allowed only into a nonzero constant
//! ```

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use num_rational::BigRational;

use crate::exactnum::QuadExt;

use super::{JetMono, JetPolynomial, JetVar, ModelError, PolyODESystem};

/// Syntax or structure error with source position.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParseError {
    pub line: usize,
    pub col: usize,
    pub message: String,
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}: {}", self.line, self.col, self.message)
    }
}

impl std::error::Error for ParseError {}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Ident(String),
    Int(String),
    Primes(usize),
    Plus,
    Minus,
    Star,
    Slash,
    Caret,
    LParen,
    RParen,
    Comma,
    Semi,
    Equals,
}

struct Lexer {
    toks: Vec<(Tok, usize, usize)>,
    pos: usize,
}

fn lex(text: &str) -> Result<Lexer, ParseError> {
    let mut toks = Vec::new();
    let mut line = 1usize;
    let mut col = 1usize;
    let mut chars = text.chars().peekable();
    while let Some(&ch) = chars.peek() {
        let (l, c) = (line, col);
        let mut bump = |chars: &mut std::iter::Peekable<std::str::Chars>| {
            let ch = chars.next().unwrap();
            if ch == '\n' {
                line += 1;
                col = 1;
            } else {
                col += 1;
            }
            ch
        };
        match ch {
            ' ' | '\t' | '\r' | '\n' => {
                bump(&mut chars);
            }
            '#' => {
                while chars.peek().is_some_and(|&c| c != '\n') {
                    bump(&mut chars);
                }
            }
            'a'..='z' | 'A'..='Z' | '_' => {
                let mut s = String::new();
                while chars
                    .peek()
                    .is_some_and(|c| c.is_ascii_alphanumeric() || *c == '_')
                {
                    s.push(bump(&mut chars));
                }
                toks.push((Tok::Ident(s), l, c));
            }
            '0'..='9' => {
                let mut s = String::new();
                while chars.peek().is_some_and(|c| c.is_ascii_digit()) {
                    s.push(bump(&mut chars));
                }
                if chars.peek() == Some(&'.') {
                    return Err(ParseError {
                        line: l,
                        col: c,
                        message: "floating literals are not allowed in exact mode; use rationals like 16/5".into(),
                    });
                }
                toks.push((Tok::Int(s), l, c));
            }
            '\'' => {
                let mut n = 0;
                while chars.peek() == Some(&'\'') {
                    bump(&mut chars);
                    n += 1;
                }
                toks.push((Tok::Primes(n), l, c));
            }
            _ => {
                let t = match ch {
                    '+' => Tok::Plus,
                    '-' => Tok::Minus,
                    '*' => Tok::Star,
                    '/' => Tok::Slash,
                    '^' => Tok::Caret,
                    '(' => Tok::LParen,
                    ')' => Tok::RParen,
                    ',' => Tok::Comma,
                    ';' => Tok::Semi,
                    '=' => Tok::Equals,
                    other => {
                        return Err(ParseError {
                            line: l,
                            col: c,
                            message: format!("unexpected character {other:?}"),
                        })
                    }
                };
                bump(&mut chars);
                toks.push((t, l, c));
            }
        }
    }
    Ok(Lexer { toks, pos: 0 })
}

impl Lexer {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|(t, _, _)| t)
    }

    fn here(&self) -> (usize, usize) {
        self.toks
            .get(self.pos)
            .or_else(|| self.toks.last())
            .map(|&(_, l, c)| (l, c))
            .unwrap_or((1, 1))
    }

    fn next(&mut self) -> Option<Tok> {
        let t = self.toks.get(self.pos).map(|(t, _, _)| t.clone());
        if t.is_some() {
            self.pos += 1;
        }
        t
    }

    fn err(&self, message: impl Into<String>) -> ParseError {
        let (line, col) = self.here();
        ParseError { line, col, message: message.into() }
    }

    fn expect(&mut self, tok: Tok, what: &str) -> Result<(), ParseError> {
        if self.peek() == Some(&tok) {
            self.pos += 1;
            Ok(())
        } else {
            Err(self.err(format!("expected {what}")))
        }
    }
}

struct Parser<'a> {
    lex: Lexer,
    vars: &'a [String],
}

impl Parser<'_> {
    fn var_index(&self, name: &str) -> Option<usize> {
        self.vars.iter().position(|v| v == name)
    }

    fn parse_expr(&mut self) -> Result<JetPolynomial, ParseError> {
        let mut negate = false;
        loop {
            match self.lex.peek() {
                Some(Tok::Minus) => {
                    self.lex.next();
                    negate = !negate;
                }
                Some(Tok::Plus) => {
                    self.lex.next();
                }
                _ => break,
            }
        }
        let mut acc = self.parse_term()?;
        if negate {
            acc = acc.neg();
        }
        loop {
            match self.lex.peek() {
                Some(Tok::Plus) => {
                    self.lex.next();
                    acc = acc.add(&self.parse_term()?);
                }
                Some(Tok::Minus) => {
                    self.lex.next();
                    acc = acc.sub(&self.parse_term()?);
                }
                _ => return Ok(acc),
            }
        }
    }

    fn parse_term(&mut self) -> Result<JetPolynomial, ParseError> {
        let mut acc = self.parse_factor()?;
        loop {
            match self.lex.peek() {
                Some(Tok::Star) => {
                    self.lex.next();
                    acc = acc.mul(&self.parse_factor()?);
                }
                Some(Tok::Slash) => {
                    self.lex.next();
                    let rhs = self.parse_factor()?;
                    let Some(c) = constant_of(&rhs) else {
                        return Err(self
                            .lex
                            .err("non-polynomial construct: division by a variable"));
                    };
                    if c.is_zero() {
                        return Err(self.lex.err("division by zero"));
                    }
                    acc = acc.scale(&(QuadExt::one() / &c));
                }
                _ => return Ok(acc),
            }
        }
    }

    fn parse_factor(&mut self) -> Result<JetPolynomial, ParseError> {
        let mut negate = false;
        while self.lex.peek() == Some(&Tok::Minus) {
            self.lex.next();
            negate = !negate;
        }
        let base = self.parse_atom()?;
        let base = if self.lex.peek() == Some(&Tok::Caret) {
            self.lex.next();
            let e = match self.lex.next() {
                Some(Tok::Int(s)) => s.parse::<u32>().map_err(|_| {
                    self.lex.err("exponent out of range")
                })?,
                Some(Tok::Minus) => {
                    return Err(self
                        .lex
                        .err("non-polynomial construct: negative exponent"))
                }
                Some(Tok::LParen) => {
                    return Err(self
                        .lex
                        .err("non-polynomial construct: non-integer exponent"))
                }
                _ => return Err(self.lex.err("expected integer exponent after ^")),
            };
            base.pow(e)
        } else {
            base
        };
        Ok(if negate { base.neg() } else { base })
    }

    fn parse_atom(&mut self) -> Result<JetPolynomial, ParseError> {
        match self.lex.next() {
            Some(Tok::Int(s)) => {
                let n = s.clone();
                // rational literal n/d binds tighter than term-level division
                if self.lex.peek() == Some(&Tok::Slash) {
                    let save = self.lex.pos;
                    self.lex.next();
                    if let Some(Tok::Int(d)) = self.lex.peek().cloned() {
                        self.lex.next();
                        let r = BigRational::from_str(&format!("{n}/{d}"))
                            .map_err(|e| self.lex.err(format!("bad rational: {e}")))?;
                        return Ok(JetPolynomial::constant(QuadExt::from_rational(r)));
                    }
                    self.lex.pos = save;
                }
                let r = BigRational::from_str(&n)
                    .map_err(|e| self.lex.err(format!("bad integer: {e}")))?;
                Ok(JetPolynomial::constant(QuadExt::from_rational(r)))
            }
            Some(Tok::Ident(name)) if name == "sqrt" => {
                self.lex.expect(Tok::LParen, "( after sqrt")?;
                let val = self.parse_expr()?;
                self.lex.expect(Tok::RParen, ") after sqrt argument")?;
                let Some(c) = constant_of(&val) else {
                    return Err(self.lex.err("sqrt takes a rational literal"));
                };
                let Some(r) = c.as_rational().cloned() else {
                    return Err(self.lex.err("sqrt takes a rational literal"));
                };
                Ok(JetPolynomial::constant(QuadExt::rational_sqrt(&r)))
            }
            Some(Tok::Ident(name)) => {
                let Some(v) = self.var_index(&name) else {
                    return Err(self.lex.err(format!("undeclared variable '{name}'")));
                };
                let order = if let Some(Tok::Primes(n)) = self.lex.peek() {
                    let n = *n;
                    self.lex.next();
                    n as u32
                } else {
                    0
                };
                Ok(JetPolynomial::jet(JetVar::new(v, order)))
            }
            Some(Tok::LParen) => {
                let e = self.parse_expr()?;
                self.lex.expect(Tok::RParen, "closing )")?;
                Ok(e)
            }
            _ => Err(self.lex.err("expected a variable, number or ( ... )")),
        }
    }
}

fn constant_of(p: &JetPolynomial) -> Option<QuadExt> {
    if p.is_zero() {
        return Some(QuadExt::zero());
    }
    if p.num_terms() != 1 {
        return None;
    }
    let (m, c) = p.terms().next().unwrap();
    m.is_unit().then(|| c.clone())
}

pub(super) fn parse_system(text: &str) -> Result<PolyODESystem, ParseError> {
    let mut lex = lex(text)?;
    match lex.next() {
        Some(Tok::Ident(kw)) if kw == "vars" => {}
        _ => {
            return Err(lex.err("system must start with a 'vars' declaration"));
        }
    }
    let mut vars: Vec<String> = Vec::new();
    loop {
        match lex.next() {
            Some(Tok::Ident(name)) => {
                if name == "sqrt" || name == "vars" {
                    return Err(lex.err(format!("'{name}' is a reserved word")));
                }
                if vars.contains(&name) {
                    return Err(lex.err(format!("duplicate variable '{name}'")));
                }
                vars.push(name);
            }
            _ => return Err(lex.err("expected variable name")),
        }
        match lex.next() {
            Some(Tok::Comma) => continue,
            Some(Tok::Semi) => break,
            _ => return Err(lex.err("expected ',' or ';' in vars list")),
        }
    }

    let mut eqs = Vec::new();
    let mut parser = Parser { lex, vars: &vars };
    loop {
        if parser.lex.peek().is_none() {
            break;
        }
        let lhs = parser.parse_expr()?;
        parser.lex.expect(Tok::Equals, "'=' in equation")?;
        let rhs = parser.parse_expr()?;
        parser.lex.expect(Tok::Semi, "';' after equation")?;
        eqs.push(lhs.sub(&rhs));
    }
    if eqs.is_empty() {
        return Err(parser.lex.err("system has no equations"));
    }

    PolyODESystem::new(vars, eqs, BTreeMap::new()).map_err(|e| match e {
        ModelError::CountMismatch { eqs, vars } => ParseError {
            line: 1,
            col: 1,
            message: format!("{eqs} equations for {vars} variables"),
        },
        other => ParseError { line: 1, col: 1, message: other.to_string() },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exactnum::QuadExt;

    #[test]
    fn parses_henon_heiles_text() {
        let sys =
            PolyODESystem::parse("vars x,y; x'' = -x - 2*x*y; y'' = -y - x^2 + y^2;").unwrap();
        let builtin = PolyODESystem::henon_heiles(QuadExt::from_int(1), QuadExt::from_int(1));
        assert_eq!(sys.equations(), builtin.equations());
    }

    #[test]
    fn trivial_system() {
        let sys = PolyODESystem::parse("vars u; u'' = 0;").unwrap();
        assert_eq!(sys.num_vars(), 1);
        assert_eq!(sys.equations()[0].num_terms(), 1);
    }

    #[test]
    fn rejects_nonpolynomial() {
        let e = PolyODESystem::parse("vars x; x'' = 1/x;").unwrap_err();
        assert!(e.message.contains("non-polynomial"), "{e}");
        let e2 = PolyODESystem::parse("vars x; x'' = x^-2;").unwrap_err();
        assert!(e2.message.contains("non-polynomial"), "{e2}");
    }

    #[test]
    fn rejects_undeclared_and_floats() {
        let e = PolyODESystem::parse("vars x; x'' = y;").unwrap_err();
        assert!(e.message.contains("undeclared"), "{e}");
        let e = PolyODESystem::parse("vars x; x'' = 0.5*x;").unwrap_err();
        assert!(e.message.contains("floating"), "{e}");
    }

    #[test]
    fn reports_positions() {
        let e = PolyODESystem::parse("vars x;\n x'' = $;").unwrap_err();
        assert_eq!(e.line, 2);
        assert!(e.col > 1);
    }

    #[test]
    fn sqrt_literal_and_division_by_constant() {
        let sys = PolyODESystem::parse("vars u; u'' = sqrt(8)*u/2;").unwrap();
        let eq = &sys.equations()[0];
        // u'' - sqrt(2) u  (sqrt(8)/2 = sqrt(2))
        let expected = JetPolynomial::jet(JetVar::new(0, 2)).add(
            &JetPolynomial::term(QuadExt::radical(-1, 1, 2), JetMono::of(JetVar::new(0, 0))),
        );
        assert_eq!(eq, &expected);
    }

    #[test]
    fn implicit_equation_form() {
        let text = "vars z, y; z''*z - 1/2*z'^2 - 2*z^2 = 0; y'' - z = 0;";
        let sys = PolyODESystem::parse(text).unwrap();
        assert_eq!(sys.to_text(), format!("vars z, y; {}", &text[11..]));
    }

    #[test]
    fn round_trip_of_builtins() {
        for (lam, c) in [(1, 1), (1, -1), (1, -6)] {
            let sys =
                PolyODESystem::henon_heiles(QuadExt::from_int(lam), QuadExt::from_int(c));
            let reparsed = PolyODESystem::parse(&sys.to_text()).unwrap();
            assert_eq!(reparsed.equations(), sys.equations());
        }
    }
}
