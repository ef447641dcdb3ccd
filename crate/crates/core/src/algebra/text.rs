//! Text grammar for scalars, bi-polynomials and forms. The CLI reuses the lexer.
//!
//! ```text
//! sum     := product (("+" | "-") product)*
//! product := unary (("*" | "/") unary)*
//! unary   := "-" unary | postfix
//! postfix := atom ("^" ("-"? INT | atom))*     INT exponent is a power, anything else is a wedge
//! atom    := INT | "i" | "tau" | IDENT | "d"IDENT | "dbar"IDENT | "conj" "(" sum ")" | "(" sum ")"
//! ```
//!
//! `tau` stands for `2 pi i`. Variable names may not start with `d`; `i`, `tau`, `conj` are reserved.

use super::form::{Form, FormBasis};
use super::gauss::GaussRat;
use super::poly::{BiPoly, Mono};
use super::scalar::{Scalar, ScalarSum};
use crate::error::{Error, Result};
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{Signed, ToPrimitive, Zero};
use std::fmt;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub struct Span {
    pub line: usize,
    pub col: usize,
    pub offset: usize,
    pub len: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub enum Tok {
    Int(BigInt),
    Float(f64),
    Ident(String),
    Str(String),
    Sym(char),
    Eof,
}

impl fmt::Display for Tok {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Tok::Int(n) => write!(f, "{n}"),
            Tok::Float(x) => write!(f, "{x}"),
            Tok::Ident(s) => write!(f, "{s}"),
            Tok::Str(s) => write!(f, "\"{s}\""),
            Tok::Sym(c) => write!(f, "{c}"),
            Tok::Eof => write!(f, "end of input"),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Token {
    pub tok: Tok,
    pub span: Span,
}

const SYMBOLS: &str = "+-*/^()[]{},=|:;";

/// Tokenize; `#` starts a line comment.
pub fn lex(src: &str) -> Result<Vec<Token>> {
    let chars: Vec<(usize, char)> = src.char_indices().collect();
    let mut out = Vec::new();
    let (mut line, mut col) = (1usize, 1usize);
    let mut i = 0;
    while i < chars.len() {
        let (off, c) = chars[i];
        let start = Span { line, col, offset: off, len: 1 };
        if c == '\n' {
            line += 1;
            col = 1;
            i += 1;
            continue;
        }
        if c.is_whitespace() {
            col += 1;
            i += 1;
            continue;
        }
        if c == '#' {
            while i < chars.len() && chars[i].1 != '\n' {
                i += 1;
            }
            continue;
        }
        if c.is_ascii_digit() || (c == '.' && chars.get(i + 1).is_some_and(|x| x.1.is_ascii_digit())) {
            let mut j = i;
            let mut is_float = false;
            while j < chars.len() && chars[j].1.is_ascii_digit() {
                j += 1;
            }
            if j < chars.len() && chars[j].1 == '.' {
                is_float = true;
                j += 1;
                while j < chars.len() && chars[j].1.is_ascii_digit() {
                    j += 1;
                }
            }
            if j < chars.len() && (chars[j].1 == 'e' || chars[j].1 == 'E') {
                let mut m = j + 1;
                if m < chars.len() && (chars[m].1 == '-' || chars[m].1 == '+') {
                    m += 1;
                }
                if m < chars.len() && chars[m].1.is_ascii_digit() {
                    is_float = true;
                    j = m;
                    while j < chars.len() && chars[j].1.is_ascii_digit() {
                        j += 1;
                    }
                }
            }
            let text: String = chars[i..j].iter().map(|x| x.1).collect();
            let tok = if is_float {
                Tok::Float(text.parse().map_err(|_| perr(start, format!("bad number `{text}`")))?)
            } else {
                Tok::Int(text.parse().expect("digits"))
            };
            out.push(Token { tok, span: Span { len: j - i, ..start } });
            col += j - i;
            i = j;
            continue;
        }
        if c.is_alphabetic() || c == '_' {
            let mut j = i;
            while j < chars.len() && (chars[j].1.is_alphanumeric() || chars[j].1 == '_') {
                j += 1;
            }
            let text: String = chars[i..j].iter().map(|x| x.1).collect();
            out.push(Token { tok: Tok::Ident(text), span: Span { len: j - i, ..start } });
            col += j - i;
            i = j;
            continue;
        }
        if c == '"' {
            let mut j = i + 1;
            while j < chars.len() && chars[j].1 != '"' && chars[j].1 != '\n' {
                j += 1;
            }
            if j >= chars.len() || chars[j].1 != '"' {
                return Err(perr(start, "unterminated string".into()));
            }
            let text: String = chars[i + 1..j].iter().map(|x| x.1).collect();
            out.push(Token { tok: Tok::Str(text), span: Span { len: j + 1 - i, ..start } });
            col += j + 1 - i;
            i = j + 1;
            continue;
        }
        if SYMBOLS.contains(c) {
            out.push(Token { tok: Tok::Sym(c), span: start });
            col += 1;
            i += 1;
            continue;
        }
        return Err(perr(start, format!("unexpected character `{c}`")));
    }
    out.push(Token { tok: Tok::Eof, span: Span { line, col, offset: src.len(), len: 0 } });
    Ok(out)
}

pub fn perr(span: Span, msg: String) -> Error {
    Error::Parse { line: span.line, col: span.col, msg }
}

#[derive(Clone, Debug)]
pub struct Expr {
    pub kind: ExprKind,
    pub span: Span,
}

/// Spans are ignored by equality.
impl PartialEq for Expr {
    fn eq(&self, o: &Self) -> bool {
        self.kind == o.kind
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum ExprKind {
    /// Nonnegative integer literal.
    Num(BigInt),
    I,
    Var(String),
    Diff { name: String, conj: bool },
    Conj(Box<Expr>),
    Neg(Box<Expr>),
    Add(Box<Expr>, Box<Expr>),
    Sub(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
    Div(Box<Expr>, Box<Expr>),
    Pow(Box<Expr>, i64),
    Wedge(Box<Expr>, Box<Expr>),
}

impl Expr {
    pub fn new(kind: ExprKind) -> Self {
        Expr { kind, span: Span::default() }
    }

    fn at(kind: ExprKind, span: Span) -> Self {
        Expr { kind, span }
    }

    pub fn num(n: i64) -> Self {
        assert!(n >= 0);
        Expr::new(ExprKind::Num(n.into()))
    }

    pub fn var(s: &str) -> Self {
        Expr::new(ExprKind::Var(s.into()))
    }

    pub fn bin(self, op: char, o: Expr) -> Expr {
        let (a, b) = (Box::new(self), Box::new(o));
        Expr::new(match op {
            '+' => ExprKind::Add(a, b),
            '-' => ExprKind::Sub(a, b),
            '*' => ExprKind::Mul(a, b),
            '/' => ExprKind::Div(a, b),
            '^' => ExprKind::Wedge(a, b),
            _ => panic!("unknown operator {op}"),
        })
    }

    /// Variable and differential names occurring in the expression.
    pub fn names(&self, out: &mut Vec<String>) {
        match &self.kind {
            ExprKind::Var(s) | ExprKind::Diff { name: s, .. } => {
                if !out.contains(s) {
                    out.push(s.clone());
                }
            }
            ExprKind::Num(_) | ExprKind::I => {}
            ExprKind::Conj(a) | ExprKind::Neg(a) | ExprKind::Pow(a, _) => a.names(out),
            ExprKind::Add(a, b)
            | ExprKind::Sub(a, b)
            | ExprKind::Mul(a, b)
            | ExprKind::Div(a, b)
            | ExprKind::Wedge(a, b) => {
                a.names(out);
                b.names(out);
            }
        }
    }
}

/// Token cursor shared with the DSL parser.
pub struct Cursor {
    toks: Vec<Token>,
    pos: usize,
}

impl Cursor {
    pub fn new(toks: Vec<Token>) -> Self {
        Cursor { toks, pos: 0 }
    }

    pub fn peek(&self) -> &Token {
        &self.toks[self.pos.min(self.toks.len() - 1)]
    }

    pub fn peek_at(&self, n: usize) -> &Token {
        &self.toks[(self.pos + n).min(self.toks.len() - 1)]
    }

    pub fn next(&mut self) -> Token {
        let t = self.peek().clone();
        if self.pos < self.toks.len() - 1 {
            self.pos += 1;
        }
        t
    }

    pub fn at_eof(&self) -> bool {
        self.peek().tok == Tok::Eof
    }

    pub fn is_sym(&self, c: char) -> bool {
        self.peek().tok == Tok::Sym(c)
    }

    pub fn is_ident(&self, s: &str) -> bool {
        matches!(&self.peek().tok, Tok::Ident(x) if x == s)
    }

    pub fn eat_sym(&mut self, c: char) -> bool {
        if self.is_sym(c) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    pub fn expect_sym(&mut self, c: char) -> Result<Span> {
        let t = self.peek().clone();
        if t.tok == Tok::Sym(c) {
            self.next();
            Ok(t.span)
        } else {
            Err(perr(t.span, format!("expected `{c}`, found {}", t.tok)))
        }
    }

    pub fn expect_ident(&mut self) -> Result<(String, Span)> {
        let t = self.next();
        match t.tok {
            Tok::Ident(s) => Ok((s, t.span)),
            other => Err(perr(t.span, format!("expected identifier, found {other}"))),
        }
    }

    pub fn expect_keyword(&mut self, kw: &str) -> Result<Span> {
        let t = self.peek().clone();
        if self.is_ident(kw) {
            self.next();
            Ok(t.span)
        } else {
            Err(perr(t.span, format!("expected `{kw}`, found {}", t.tok)))
        }
    }

    pub fn expect_int(&mut self) -> Result<(i64, Span)> {
        let t = self.next();
        match &t.tok {
            Tok::Int(n) => n
                .to_i64()
                .map(|v| (v, t.span))
                .ok_or_else(|| perr(t.span, "integer too large".into())),
            other => Err(perr(t.span, format!("expected integer, found {other}"))),
        }
    }

    pub fn expect_number(&mut self) -> Result<(f64, Span)> {
        let t = self.next();
        match &t.tok {
            Tok::Int(n) => Ok((n.to_f64().unwrap_or(f64::INFINITY), t.span)),
            Tok::Float(x) => Ok((*x, t.span)),
            other => Err(perr(t.span, format!("expected number, found {other}"))),
        }
    }

    pub fn parse_sum(&mut self) -> Result<Expr> {
        let mut lhs = self.parse_product()?;
        loop {
            let span = self.peek().span;
            if self.eat_sym('+') {
                let rhs = self.parse_product()?;
                lhs = Expr::at(ExprKind::Add(Box::new(lhs), Box::new(rhs)), span);
            } else if self.eat_sym('-') {
                let rhs = self.parse_product()?;
                lhs = Expr::at(ExprKind::Sub(Box::new(lhs), Box::new(rhs)), span);
            } else {
                return Ok(lhs);
            }
        }
    }

    fn parse_product(&mut self) -> Result<Expr> {
        let mut lhs = self.parse_unary()?;
        loop {
            let span = self.peek().span;
            if self.eat_sym('*') {
                let rhs = self.parse_unary()?;
                lhs = Expr::at(ExprKind::Mul(Box::new(lhs), Box::new(rhs)), span);
            } else if self.eat_sym('/') {
                let rhs = self.parse_unary()?;
                lhs = Expr::at(ExprKind::Div(Box::new(lhs), Box::new(rhs)), span);
            } else {
                return Ok(lhs);
            }
        }
    }

    fn parse_unary(&mut self) -> Result<Expr> {
        let span = self.peek().span;
        if self.eat_sym('-') {
            let e = self.parse_unary()?;
            return Ok(Expr::at(ExprKind::Neg(Box::new(e)), span));
        }
        self.parse_postfix()
    }

    fn parse_postfix(&mut self) -> Result<Expr> {
        let mut e = self.parse_atom()?;
        loop {
            let span = self.peek().span;
            if !self.eat_sym('^') {
                return Ok(e);
            }
            let neg = matches!(self.peek().tok, Tok::Sym('-'))
                && matches!(self.peek_at(1).tok, Tok::Int(_));
            if neg || matches!(self.peek().tok, Tok::Int(_)) {
                if neg {
                    self.next();
                }
                let (n, _) = self.expect_int()?;
                e = Expr::at(ExprKind::Pow(Box::new(e), if neg { -n } else { n }), span);
            } else {
                let rhs = self.parse_atom()?;
                e = Expr::at(ExprKind::Wedge(Box::new(e), Box::new(rhs)), span);
            }
        }
    }

    fn parse_atom(&mut self) -> Result<Expr> {
        let t = self.next();
        let span = t.span;
        match t.tok {
            Tok::Int(n) => Ok(Expr::at(ExprKind::Num(n), span)),
            Tok::Sym('(') => {
                let e = self.parse_sum()?;
                self.close_paren(span)?;
                Ok(e)
            }
            Tok::Ident(s) => {
                if s == "i" {
                    Ok(Expr::at(ExprKind::I, span))
                } else if s == "conj" {
                    let open = self.expect_sym('(')?;
                    let e = self.parse_sum()?;
                    self.close_paren(open)?;
                    Ok(Expr::at(ExprKind::Conj(Box::new(e)), span))
                } else if let Some(rest) = s.strip_prefix("dbar").filter(|r| !r.is_empty()) {
                    Ok(Expr::at(ExprKind::Diff { name: rest.into(), conj: true }, span))
                } else if let Some(rest) = s.strip_prefix('d').filter(|r| !r.is_empty()) {
                    Ok(Expr::at(ExprKind::Diff { name: rest.into(), conj: false }, span))
                } else if s.starts_with('d') {
                    Err(perr(span, format!("`{s}` is not a valid variable (names may not start with `d`)")))
                } else {
                    Ok(Expr::at(ExprKind::Var(s), span))
                }
            }
            Tok::Float(_) => Err(perr(span, "decimal literals are not allowed in exact expressions".into())),
            other => Err(perr(span, format!("expected expression, found {other}"))),
        }
    }

    fn close_paren(&mut self, open: Span) -> Result<()> {
        if self.eat_sym(')') {
            Ok(())
        } else {
            let t = self.peek();
            Err(perr(
                t.span,
                format!("expected `)` to close `(` at {}:{}, found {}", open.line, open.col, t.tok),
            ))
        }
    }
}

pub fn parse_expr(src: &str) -> Result<Expr> {
    let mut c = Cursor::new(lex(src)?);
    let e = c.parse_sum()?;
    if !c.at_eof() {
        let t = c.peek();
        return Err(perr(t.span, format!("unexpected {}", t.tok)));
    }
    Ok(e)
}

// Precedence levels: 1 sum, 2 product, 3 unary, 4 postfix, 5 atom.
fn level(e: &Expr) -> u8 {
    match e.kind {
        ExprKind::Add(..) | ExprKind::Sub(..) => 1,
        ExprKind::Mul(..) | ExprKind::Div(..) => 2,
        ExprKind::Neg(..) => 3,
        ExprKind::Pow(..) | ExprKind::Wedge(..) => 4,
        _ => 5,
    }
}

fn wrap(e: &Expr, min: u8, out: &mut String) {
    if level(e) < min {
        out.push('(');
        print_into(e, out);
        out.push(')');
    } else {
        print_into(e, out);
    }
}

fn print_into(e: &Expr, out: &mut String) {
    use ExprKind::*;
    match &e.kind {
        Num(n) => out.push_str(&n.to_string()),
        I => out.push('i'),
        Var(s) => out.push_str(s),
        Diff { name, conj } => {
            out.push_str(if *conj { "dbar" } else { "d" });
            out.push_str(name);
        }
        Conj(a) => {
            out.push_str("conj(");
            print_into(a, out);
            out.push(')');
        }
        Neg(a) => {
            out.push('-');
            wrap(a, 3, out);
        }
        Add(a, b) | Sub(a, b) => {
            wrap(a, 1, out);
            out.push_str(if matches!(e.kind, Add(..)) { " + " } else { " - " });
            wrap(b, 2, out);
        }
        Mul(a, b) | Div(a, b) => {
            wrap(a, 2, out);
            out.push_str(if matches!(e.kind, Mul(..)) { "*" } else { "/" });
            wrap(b, 3, out);
        }
        Pow(a, n) => {
            wrap(a, 5, out);
            out.push('^');
            out.push_str(&n.to_string());
        }
        Wedge(a, b) => {
            wrap(a, 4, out);
            out.push('^');
            wrap(b, 5, out);
        }
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut s = String::new();
        print_into(self, &mut s);
        f.write_str(&s)
    }
}

fn err_at(e: &Expr, msg: String) -> Error {
    perr(e.span, msg)
}

pub fn to_scalar_sum(e: &Expr) -> Result<ScalarSum> {
    use ExprKind::*;
    Ok(match &e.kind {
        Num(n) => ScalarSum::from_gauss(GaussRat::from_rational(BigRational::from_integer(n.clone()))),
        I => ScalarSum::from_gauss(GaussRat::i()),
        Var(s) if s == "tau" => ScalarSum::from_scalar(&Scalar::tau_pow(1)),
        Neg(a) => to_scalar_sum(a)?.neg(),
        Add(a, b) => to_scalar_sum(a)?.add(&to_scalar_sum(b)?),
        Sub(a, b) => to_scalar_sum(a)?.sub(&to_scalar_sum(b)?),
        Mul(a, b) => to_scalar_sum(a)?.mul(&to_scalar_sum(b)?),
        Div(a, b) => {
            let d = to_scalar_sum(b)?
                .inv()
                .ok_or_else(|| err_at(b, "divisor must be a nonzero single tau power".into()))?;
            to_scalar_sum(a)?.mul(&d)
        }
        Pow(a, n) => {
            let base = to_scalar_sum(a)?;
            let base = if *n < 0 {
                base.inv().ok_or_else(|| err_at(a, "negative power of a non-invertible value".into()))?
            } else {
                base
            };
            let mut acc = ScalarSum::from_int(1);
            for _ in 0..n.unsigned_abs() {
                acc = acc.mul(&base);
            }
            acc
        }
        _ => return Err(err_at(e, format!("`{e}` is not a scalar"))),
    })
}

fn var_index(e: &Expr, name: &str, vars: &[String]) -> Result<usize> {
    vars.iter()
        .position(|v| v == name)
        .ok_or_else(|| err_at(e, format!("unknown variable `{name}`")))
}

fn gauss_of(e: &Expr) -> Result<GaussRat> {
    let s = to_scalar_sum(e)?;
    match s.as_scalar() {
        Some(sc) if sc.tau_power == 0 || sc.is_zero() => Ok(sc.value),
        _ => Err(err_at(e, "tau is not allowed in a polynomial coefficient".into())),
    }
}

/// Convert to an exact bi-polynomial in the named variables.
pub fn to_bipoly(e: &Expr, vars: &[String]) -> Result<BiPoly> {
    use ExprKind::*;
    let k = vars.len();
    Ok(match &e.kind {
        Num(_) | I => BiPoly::constant(k, gauss_of(e)?),
        Var(s) => BiPoly::var(k, var_index(e, s, vars)?),
        Conj(a) => to_bipoly(a, vars)?.conj(),
        Neg(a) => to_bipoly(a, vars)?.neg(),
        Add(a, b) => to_bipoly(a, vars)?.add(&to_bipoly(b, vars)?),
        Sub(a, b) => to_bipoly(a, vars)?.sub(&to_bipoly(b, vars)?),
        Mul(a, b) => to_bipoly(a, vars)?.mul(&to_bipoly(b, vars)?),
        Div(a, b) => {
            let d = to_bipoly(b, vars)?;
            if !d.is_constant() || d.is_zero() {
                return Err(err_at(b, "division by a non-constant in a polynomial".into()));
            }
            let inv = d.constant_term().inv().expect("nonzero");
            to_bipoly(a, vars)?.scale(&inv)
        }
        Pow(a, n) => {
            if *n < 0 {
                return Err(err_at(e, "negative power in a polynomial".into()));
            }
            to_bipoly(a, vars)?.pow(*n as u32)
        }
        Diff { .. } | Wedge(..) => return Err(err_at(e, "differential where a function was expected".into())),
    })
}

/// Convert to an exterior form in the named variables; `*` between forms acts as a wedge.
pub fn to_form(e: &Expr, vars: &[String]) -> Result<Form> {
    use ExprKind::*;
    let k = vars.len();
    Ok(match &e.kind {
        Diff { name, conj } => Form::differential(k, var_index(e, name, vars)?, *conj),
        Neg(a) => to_form(a, vars)?.neg(),
        Add(a, b) => to_form(a, vars)?.add(&to_form(b, vars)?),
        Sub(a, b) => to_form(a, vars)?.sub(&to_form(b, vars)?),
        Mul(a, b) | Wedge(a, b) => to_form(a, vars)?.wedge(&to_form(b, vars)?)?,
        Div(a, b) => {
            let d = to_bipoly(b, vars)?;
            if !d.is_constant() || d.is_zero() {
                return Err(err_at(b, "division by a non-constant".into()));
            }
            let inv = d.constant_term().inv().expect("nonzero");
            to_form(a, vars)?.mul_poly(&BiPoly::constant(k, inv))
        }
        _ => Form::function(to_bipoly(e, vars)?),
    })
}

/// A quotient `num / prod(den)` with the denominator kept as a list of factors.
#[derive(Clone, Debug, PartialEq)]
pub struct Ratio {
    pub num: BiPoly,
    pub den: Vec<BiPoly>,
}

impl Ratio {
    pub fn poly(p: BiPoly) -> Self {
        Ratio { num: p, den: vec![] }
    }

    pub fn den_product(&self) -> BiPoly {
        self.den.iter().fold(BiPoly::one(self.num.arity()), |a, d| a.mul(d))
    }

    fn mul(&self, o: &Ratio) -> Ratio {
        let mut den = self.den.clone();
        den.extend(o.den.iter().cloned());
        Ratio { num: self.num.mul(&o.num), den }
    }

    fn add(&self, o: &Ratio, sign: i64) -> Ratio {
        let o_num = if sign < 0 { o.num.neg() } else { o.num.clone() };
        if self.den == o.den {
            return Ratio { num: self.num.add(&o_num), den: self.den.clone() };
        }
        let mut den = self.den.clone();
        den.extend(o.den.iter().cloned());
        Ratio {
            num: self.num.mul(&o.den_product()).add(&o_num.mul(&self.den_product())),
            den,
        }
    }
}

fn flatten_factors(e: &Expr) -> Vec<&Expr> {
    match &e.kind {
        ExprKind::Mul(a, b) => {
            let mut v = flatten_factors(a);
            v.extend(flatten_factors(b));
            v
        }
        ExprKind::Pow(a, n) if *n > 0 => {
            let f = flatten_factors(a);
            (0..*n).flat_map(|_| f.iter().copied()).collect()
        }
        _ => vec![e],
    }
}

/// Convert allowing division; the denominator keeps the factor structure of the input.
pub fn to_ratio(e: &Expr, vars: &[String]) -> Result<Ratio> {
    use ExprKind::*;
    Ok(match &e.kind {
        Neg(a) => {
            let r = to_ratio(a, vars)?;
            Ratio { num: r.num.neg(), den: r.den }
        }
        Add(a, b) => to_ratio(a, vars)?.add(&to_ratio(b, vars)?, 1),
        Sub(a, b) => to_ratio(a, vars)?.add(&to_ratio(b, vars)?, -1),
        Mul(a, b) => to_ratio(a, vars)?.mul(&to_ratio(b, vars)?),
        Div(a, b) => {
            let mut acc = to_ratio(a, vars)?;
            for f in flatten_factors(b) {
                let d = to_ratio(f, vars)?;
                if d.num.is_zero() {
                    return Err(err_at(b, "division by zero".into()));
                }
                acc.den.push(d.num.clone());
                acc.num = acc.num.mul(&d.den_product());
            }
            acc
        }
        Pow(a, n) => {
            let r = to_ratio(a, vars)?;
            let mut acc = Ratio::poly(BiPoly::one(vars.len()));
            for _ in 0..n.unsigned_abs() {
                acc = acc.mul(&r);
            }
            if *n < 0 {
                if acc.num.is_zero() {
                    return Err(err_at(e, "negative power of zero".into()));
                }
                let den = vec![acc.num.clone()];
                Ratio { num: acc.den_product(), den }
            } else {
                acc
            }
        }
        _ => Ratio::poly(to_bipoly(e, vars)?),
    })
}

fn mono_text(m: &Mono, vars: &[String]) -> Vec<String> {
    let k = vars.len();
    let mut parts = Vec::new();
    for (i, v) in vars.iter().enumerate() {
        match m.0[i] {
            0 => {}
            1 => parts.push(v.clone()),
            e => parts.push(format!("{v}^{e}")),
        }
    }
    for (i, v) in vars.iter().enumerate() {
        match m.0[k + i] {
            0 => {}
            1 => parts.push(format!("conj({v})")),
            e => parts.push(format!("conj({v})^{e}")),
        }
    }
    parts
}

fn neg_leading(c: &GaussRat) -> bool {
    if c.re.is_zero() {
        c.im.is_negative()
    } else {
        c.im.is_zero() && c.re.is_negative()
    }
}

/// Print in the grammar above, highest term first.
pub fn print_poly(p: &BiPoly, vars: &[String]) -> String {
    if p.is_zero() {
        return "0".into();
    }
    let mut out = String::new();
    for (n, (m, c)) in p.terms().rev().enumerate() {
        let neg = neg_leading(c);
        let c = if neg { -c } else { c.clone() };
        if n == 0 {
            if neg {
                out.push('-');
            }
        } else {
            out.push_str(if neg { " - " } else { " + " });
        }
        let mut parts = mono_text(m, vars);
        if !c.is_one() || parts.is_empty() {
            parts.insert(0, c.to_string());
        }
        out.push_str(&parts.join("*"));
    }
    out
}

pub fn print_form(f: &Form, vars: &[String]) -> String {
    if f.is_zero() {
        return "0".into();
    }
    let mut out = Vec::new();
    for (b, c) in f.terms() {
        out.push(basis_term(b, c, vars));
    }
    out.join(" + ")
}

fn basis_term(b: &FormBasis, c: &BiPoly, vars: &[String]) -> String {
    let mut diffs: Vec<String> = b.holo.iter().map(|&i| format!("d{}", vars[i])).collect();
    diffs.extend(b.anti.iter().map(|&j| format!("dbar{}", vars[j])));
    let coeff = format!("({})", print_poly(c, vars));
    if diffs.is_empty() {
        coeff
    } else {
        format!("{coeff}*{}", diffs.join("^"))
    }
}

pub fn parse_poly(src: &str, vars: &[String]) -> Result<BiPoly> {
    to_bipoly(&parse_expr(src)?, vars)
}

pub fn parse_form(src: &str, vars: &[String]) -> Result<Form> {
    to_form(&parse_expr(src)?, vars)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn names(v: &[&str]) -> Vec<String> {
        v.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn wedge_binds_tighter_than_product() {
        let e = parse_expr("z1^1 * dz1^dz3").unwrap();
        assert_eq!(e.to_string(), "z1^1*dz1^dz3");
        assert!(matches!(e.kind, ExprKind::Mul(..)));
    }

    #[test]
    fn scalar_text() {
        let s: ScalarSum = "(1/2+3*i)*tau^2 - tau^-1".parse().unwrap();
        assert_eq!(s.to_string(), "-tau^-1 + (1/2+3*i)*tau^2");
        let again: ScalarSum = s.to_string().parse().unwrap();
        assert_eq!(again, s);
    }

    #[test]
    fn poly_round_trip() {
        let v = names(&["s", "t"]);
        let p = parse_poly("2*s*conj(t)^3 - (1/3)*i*t^2 + 5", &v).unwrap();
        let q = parse_poly(&print_poly(&p, &v), &v).unwrap();
        assert_eq!(p, q);
    }

    #[test]
    fn form_round_trip() {
        let v = names(&["s", "t"]);
        let f = parse_form("2*s*ds^dt + conj(t)*dbart", &v).unwrap();
        let g = parse_form(&print_form(&f, &v), &v).unwrap();
        assert_eq!(f, g);
    }

    #[test]
    fn unclosed_paren_position() {
        match parse_expr("(s^2") {
            Err(Error::Parse { col, .. }) => assert_eq!(col, 5),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn ratio_keeps_factors() {
        let v = names(&["s", "t"]);
        let r = to_ratio(&parse_expr("1/(t*(1+s))").unwrap(), &v).unwrap();
        assert_eq!(r.num, BiPoly::one(2));
        assert_eq!(r.den.len(), 2);
        let r = to_ratio(&parse_expr("1/(1+s+t)").unwrap(), &v).unwrap();
        assert_eq!(r.den.len(), 1);
        let r = to_ratio(&parse_expr("(1/t)*(1/(1+s))").unwrap(), &v).unwrap();
        assert_eq!(r.den.len(), 2);
    }
}
