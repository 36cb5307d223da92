//! Recursive-descent parser for the expression grammar.
//!
//! ```text
//! expr   := term (('+' | '-') term)*
//! term   := unary (('*' | '/') unary)*
//! unary  := ('-' | '+') unary | power
//! power  := atom ('^' unary)?
//! atom   := integer | ident | ident '_' ident | func '(' expr ')' | '(' expr ')'
//! ```
//!
//! Exponents must reduce to integer constants. Each production builds its
//! normal form directly.

use num_bigint::BigInt;
use num_traits::ToPrimitive;
use thiserror::Error;

use super::expr::{is_integer, Expr, Func, Rational};
use super::signature::{BundleSignature, JetVar, MultiIndex, Var};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ParseErrorKind {
    Syntax(String),
    UnknownIdentifier(String),
    BadSubscript(String),
    BadExponent,
    DivisionByZero,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("{line}:{column}: {}", describe(.kind))]
pub struct ParseError {
    pub kind: ParseErrorKind,
    /// Byte offset into the input.
    pub offset: usize,
    pub line: usize,
    pub column: usize,
}

fn describe(kind: &ParseErrorKind) -> String {
    match kind {
        ParseErrorKind::Syntax(m) => format!("syntax error: {m}"),
        ParseErrorKind::UnknownIdentifier(n) => format!("unknown identifier `{n}`"),
        ParseErrorKind::BadSubscript(s) => format!("derivative subscript `{s}` is not a string of base names"),
        ParseErrorKind::BadExponent => "exponent must be an integer constant".into(),
        ParseErrorKind::DivisionByZero => "division by zero".into(),
    }
}

impl ParseError {
    /// Shift the reported line by `lines`, for expressions embedded in files.
    pub fn offset_lines(mut self, lines: usize, column_offset: usize) -> Self {
        if self.line == 1 {
            self.column += column_offset;
        }
        self.line += lines;
        self
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Int(BigInt),
    Ident(String),
    Underscore,
    Op(char),
    LParen,
    RParen,
    End,
}

struct Lexer<'a> {
    src: &'a str,
    toks: Vec<(Tok, usize)>,
}

impl<'a> Lexer<'a> {
    fn run(src: &'a str) -> Result<Vec<(Tok, usize)>, ParseError> {
        let mut lx = Lexer { src, toks: Vec::new() };
        let bytes = src.as_bytes();
        let mut i = 0;
        while i < bytes.len() {
            let c = src[i..].chars().next().expect("in bounds");
            if c.is_whitespace() {
                i += c.len_utf8();
                continue;
            }
            let start = i;
            if c.is_ascii_digit() {
                while i < bytes.len() && bytes[i].is_ascii_digit() {
                    i += 1;
                }
                let n: BigInt = src[start..i].parse().expect("digits");
                lx.toks.push((Tok::Int(n), start));
            } else if c.is_ascii_alphabetic() {
                while i < bytes.len() && bytes[i].is_ascii_alphanumeric() {
                    i += 1;
                }
                lx.toks.push((Tok::Ident(src[start..i].to_string()), start));
            } else {
                let tok = match c {
                    '+' | '-' | '*' | '/' | '^' => Tok::Op(c),
                    '(' => Tok::LParen,
                    ')' => Tok::RParen,
                    '_' => Tok::Underscore,
                    _ => return Err(error_at(src, start, ParseErrorKind::Syntax(format!("unexpected character `{c}`")))),
                };
                lx.toks.push((tok, start));
                i += c.len_utf8();
            }
        }
        lx.toks.push((Tok::End, lx.src.len()));
        Ok(lx.toks)
    }
}

fn error_at(src: &str, offset: usize, kind: ParseErrorKind) -> ParseError {
    let before = &src[..offset.min(src.len())];
    let line = before.matches('\n').count() + 1;
    let column = before.rsplit('\n').next().map_or(0, |l| l.chars().count()) + 1;
    ParseError { kind, offset, line, column }
}

struct Parser<'a> {
    src: &'a str,
    sig: &'a BundleSignature,
    toks: Vec<(Tok, usize)>,
    pos: usize,
}

impl Parser<'_> {
    fn peek(&self) -> &Tok {
        &self.toks[self.pos].0
    }

    fn offset(&self) -> usize {
        self.toks[self.pos].1
    }

    fn bump(&mut self) -> (Tok, usize) {
        let t = self.toks[self.pos].clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn err(&self, offset: usize, kind: ParseErrorKind) -> ParseError {
        error_at(self.src, offset, kind)
    }

    fn expect(&mut self, want: Tok, what: &str) -> Result<(), ParseError> {
        if *self.peek() == want {
            self.bump();
            Ok(())
        } else {
            Err(self.err(self.offset(), ParseErrorKind::Syntax(format!("expected {what}"))))
        }
    }

    fn expr(&mut self) -> Result<Expr, ParseError> {
        let mut acc = self.term()?;
        while let Tok::Op(op @ ('+' | '-')) = *self.peek() {
            self.bump();
            let rhs = self.term()?;
            acc = if op == '+' { &acc + &rhs } else { &acc - &rhs };
        }
        Ok(acc)
    }

    fn term(&mut self) -> Result<Expr, ParseError> {
        let mut acc = self.unary()?;
        while let Tok::Op(op @ ('*' | '/')) = *self.peek() {
            let at = self.offset();
            self.bump();
            let rhs = self.unary()?;
            acc = if op == '*' {
                &acc * &rhs
            } else {
                acc.checked_div(&rhs).map_err(|_| self.err(at, ParseErrorKind::DivisionByZero))?
            };
        }
        Ok(acc)
    }

    fn unary(&mut self) -> Result<Expr, ParseError> {
        match self.peek() {
            Tok::Op('-') => {
                self.bump();
                Ok(-self.unary()?)
            }
            Tok::Op('+') => {
                self.bump();
                self.unary()
            }
            _ => self.power(),
        }
    }

    fn power(&mut self) -> Result<Expr, ParseError> {
        let base = self.atom()?;
        if *self.peek() != Tok::Op('^') {
            return Ok(base);
        }
        let at = self.offset();
        self.bump();
        let exp_at = self.offset();
        let exponent = self.unary()?;
        let k = exponent
            .as_constant()
            .filter(is_integer)
            .and_then(|r: Rational| r.numer().to_i32())
            .ok_or_else(|| self.err(exp_at, ParseErrorKind::BadExponent))?;
        base.powi(k).map_err(|_| self.err(at, ParseErrorKind::DivisionByZero))
    }

    fn atom(&mut self) -> Result<Expr, ParseError> {
        let (tok, at) = self.bump();
        match tok {
            Tok::Int(n) => Ok(Expr::constant(Rational::from_integer(n))),
            Tok::LParen => {
                let e = self.expr()?;
                self.expect(Tok::RParen, "`)`")?;
                Ok(e)
            }
            Tok::Ident(name) => self.identifier(name, at),
            Tok::End => Err(self.err(at, ParseErrorKind::Syntax("unexpected end of input".into()))),
            other => Err(self.err(at, ParseErrorKind::Syntax(format!("unexpected token {}", token_text(&other))))),
        }
    }

    fn identifier(&mut self, name: String, at: usize) -> Result<Expr, ParseError> {
        if let Some(f) = Func::from_name(&name) {
            if *self.peek() == Tok::LParen {
                self.bump();
                let arg = self.expr()?;
                self.expect(Tok::RParen, "`)` closing function call")?;
                return Ok(Expr::apply(f, arg));
            }
            return Err(self.err(self.offset(), ParseErrorKind::Syntax(format!("expected `(` after `{name}`"))));
        }
        if *self.peek() == Tok::Underscore {
            self.bump();
            let (sub_tok, sub_at) = self.bump();
            let Tok::Ident(sub) = sub_tok else {
                return Err(self.err(sub_at, ParseErrorKind::Syntax("expected derivative subscript after `_`".into())));
            };
            let Some(field) = self.sig.field_index(&name) else {
                return Err(self.err(at, ParseErrorKind::UnknownIdentifier(name)));
            };
            let index = self
                .sig
                .split_subscript(&sub)
                .ok_or_else(|| self.err(sub_at, ParseErrorKind::BadSubscript(sub)))?;
            return Ok(Expr::var(Var::Jet(JetVar::new(field, index))));
        }
        if let Some(mu) = self.sig.base_index(&name) {
            return Ok(Expr::base(mu));
        }
        if let Some(field) = self.sig.field_index(&name) {
            return Ok(Expr::jet(field, MultiIndex::zero(self.sig.base_dim())));
        }
        if self.sig.has_param(&name) {
            return Ok(Expr::param(&name));
        }
        Err(self.err(at, ParseErrorKind::UnknownIdentifier(name)))
    }
}

fn token_text(t: &Tok) -> String {
    match t {
        Tok::Int(n) => n.to_string(),
        Tok::Ident(s) => format!("`{s}`"),
        Tok::Underscore => "`_`".into(),
        Tok::Op(c) => format!("`{c}`"),
        Tok::LParen => "`(`".into(),
        Tok::RParen => "`)`".into(),
        Tok::End => "end of input".into(),
    }
}

/// Parse text into a normalized expression over the given signature.
pub fn parse_expression(text: &str, sig: &BundleSignature) -> Result<Expr, ParseError> {
    let toks = Lexer::run(text)?;
    let mut p = Parser { src: text, sig, toks, pos: 0 };
    let e = p.expr()?;
    if *p.peek() != Tok::End {
        let (tok, at) = p.bump();
        return Err(p.err(at, ParseErrorKind::Syntax(format!("unexpected token {}", token_text(&tok)))));
    }
    Ok(e)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sig() -> BundleSignature {
        BundleSignature::new(&["t", "x"], &["u"], &["m"]).unwrap()
    }

    fn p(s: &str) -> Expr {
        parse_expression(s, &sig()).unwrap()
    }

    #[test]
    fn mixed_partials_collapse() {
        assert!(p("u_xt - u_tx").is_zero());
    }

    #[test]
    fn jet_coordinates_read_directly() {
        let e = p("u_x^2 + u_t");
        let jets: Vec<_> = e.jet_vars().into_iter().map(|j| j.index.counts().to_vec()).collect();
        assert_eq!(jets, vec![vec![1, 0], vec![0, 1]]);
    }

    #[test]
    fn errors_carry_positions() {
        let e = parse_expression("u_x + \n  w", &sig()).unwrap_err();
        assert_eq!(e.kind, ParseErrorKind::UnknownIdentifier("w".into()));
        assert_eq!((e.line, e.column), (2, 3));

        let e = parse_expression("u_y", &sig()).unwrap_err();
        assert_eq!(e.kind, ParseErrorKind::BadSubscript("y".into()));

        let e = parse_expression("u + * 2", &sig()).unwrap_err();
        assert!(matches!(e.kind, ParseErrorKind::Syntax(_)));
        assert_eq!(e.column, 5);

        let e = parse_expression("u^(1/2)", &sig()).unwrap_err();
        assert_eq!(e.kind, ParseErrorKind::BadExponent);

        let e = parse_expression("u/(x - x)", &sig()).unwrap_err();
        assert_eq!(e.kind, ParseErrorKind::DivisionByZero);

        assert!(parse_expression("sin u", &sig()).is_err());
        assert!(parse_expression("(u", &sig()).is_err());
        assert!(parse_expression("x_t", &sig()).is_err());
    }

    #[test]
    fn rationals_and_params() {
        let e = p("(1/2)*(u_t^2 - u_x^2 - m^2*u^2)");
        assert_eq!(e.to_text(&sig()), "-1/2*m^2*u^2 + 1/2*u_t^2 - 1/2*u_x^2");
        assert_eq!(p(&e.to_text(&sig())), e);
    }

    #[test]
    fn printing_round_trips_exotic_forms() {
        for s in ["(u + 1)^7", "u^-2*sin(u_x)", "-3/4*x*(t + u)^-1", "log(exp(u) + 2)", "0", "-u_tt + u_xx"] {
            let e = p(s);
            let printed = e.to_text(&sig());
            assert_eq!(p(&printed), e, "{s} -> {printed}");
        }
        assert_eq!(p("-u_tt + u_xx").to_text(&sig()), "-u_tt + u_xx");
        assert_eq!(p("(u + 1)^2").to_text(&sig()), "u^2 + 2*u + 1");
    }

    #[test]
    fn latex_rendering() {
        assert_eq!(p("1/2*u_x^2").to_latex(&sig()), "\\frac{1}{2} {u_{x}}^{2}");
        assert_eq!(p("sin(u)").to_latex(&sig()), "\\sin\\left(u\\right)");
    }
}
