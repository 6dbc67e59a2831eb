use std::fmt;

use thiserror::Error;

use crate::fhrr::{self, FhrrError, PhasorVector, Vocabulary};

/// Symbolic VSA expression.
#[derive(Debug, Clone, PartialEq)]
pub enum VsaExpr {
    Symbol(String),
    Bind(Box<VsaExpr>, Box<VsaExpr>),
    /// `Unbind(w, v)` is `w ⊘ v`, phases `φ_w − φ_v`.
    Unbind(Box<VsaExpr>, Box<VsaExpr>),
    Bundle(Box<VsaExpr>, Box<VsaExpr>),
    Permute(Box<VsaExpr>, i64),
    Power(Box<VsaExpr>, f64),
    Cleanup(Box<VsaExpr>),
}

#[derive(Debug, Clone, PartialEq, Error)]
#[error("parse error at {position}: {message}")]
pub struct ParseError {
    /// Byte offset into the source text.
    pub position: usize,
    pub message: String,
}

impl VsaExpr {
    pub fn symbol(name: &str) -> Self {
        Self::Symbol(name.to_string())
    }

    pub fn bind(l: Self, r: Self) -> Self {
        Self::Bind(Box::new(l), Box::new(r))
    }

    pub fn unbind(l: Self, r: Self) -> Self {
        Self::Unbind(Box::new(l), Box::new(r))
    }

    pub fn bundle(l: Self, r: Self) -> Self {
        Self::Bundle(Box::new(l), Box::new(r))
    }

    pub fn permute(e: Self, shift: i64) -> Self {
        Self::Permute(Box::new(e), shift)
    }

    pub fn power(e: Self, alpha: f64) -> Self {
        Self::Power(Box::new(e), alpha)
    }

    pub fn cleanup(e: Self) -> Self {
        Self::Cleanup(Box::new(e))
    }

    pub fn parse(text: &str) -> Result<Self, ParseError> {
        let mut p = Parser { src: text, pos: 0 };
        let e = p.bundle()?;
        p.skip_ws();
        if p.pos < text.len() {
            return Err(p.error("unexpected trailing input"));
        }
        Ok(e)
    }

    /// Replace every occurrence of the symbol `name` with `with`.
    pub fn substitute(&self, name: &str, with: &VsaExpr) -> VsaExpr {
        let sub = |e: &VsaExpr| Box::new(e.substitute(name, with));
        match self {
            Self::Symbol(s) if s == name => with.clone(),
            Self::Symbol(_) => self.clone(),
            Self::Bind(l, r) => Self::Bind(sub(l), sub(r)),
            Self::Unbind(l, r) => Self::Unbind(sub(l), sub(r)),
            Self::Bundle(l, r) => Self::Bundle(sub(l), sub(r)),
            Self::Permute(e, k) => Self::Permute(sub(e), *k),
            Self::Power(e, a) => Self::Power(sub(e), *a),
            Self::Cleanup(e) => Self::Cleanup(sub(e)),
        }
    }

    /// Symbol names in first-occurrence order.
    pub fn symbols(&self) -> Vec<&str> {
        let mut out = Vec::new();
        self.visit_symbols(&mut out);
        out
    }

    fn visit_symbols<'a>(&'a self, out: &mut Vec<&'a str>) {
        match self {
            Self::Symbol(s) => {
                if !out.contains(&s.as_str()) {
                    out.push(s);
                }
            }
            Self::Bind(l, r) | Self::Unbind(l, r) | Self::Bundle(l, r) => {
                l.visit_symbols(out);
                r.visit_symbols(out);
            }
            Self::Permute(e, _) | Self::Power(e, _) | Self::Cleanup(e) => e.visit_symbols(out),
        }
    }

    /// Longest chain of neuron stages from a source to the output.
    /// Permutation is free; a clean-up counts as one stage.
    pub fn depth(&self) -> usize {
        match self {
            Self::Symbol(_) => 0,
            Self::Bind(l, r) | Self::Unbind(l, r) | Self::Bundle(l, r) => 1 + l.depth().max(r.depth()),
            Self::Permute(e, _) => e.depth(),
            Self::Power(e, _) | Self::Cleanup(e) => 1 + e.depth(),
        }
    }

    pub fn contains_cleanup(&self) -> bool {
        match self {
            Self::Symbol(_) => false,
            Self::Bind(l, r) | Self::Unbind(l, r) | Self::Bundle(l, r) => l.contains_cleanup() || r.contains_cleanup(),
            Self::Permute(e, _) | Self::Power(e, _) => e.contains_cleanup(),
            Self::Cleanup(_) => true,
        }
    }

    /// Cycles a compiled network needs before its output is steady:
    /// at least two, plus one per stage, plus five per clean-up.
    pub fn settle_cycles(&self, cleanup_cycles: u64) -> u64 {
        fn walk(e: &VsaExpr, cleanup_cycles: u64) -> u64 {
            match e {
                VsaExpr::Symbol(_) => 0,
                VsaExpr::Bind(l, r) | VsaExpr::Unbind(l, r) | VsaExpr::Bundle(l, r) => {
                    1 + walk(l, cleanup_cycles).max(walk(r, cleanup_cycles))
                }
                VsaExpr::Permute(e, _) => walk(e, cleanup_cycles),
                VsaExpr::Power(e, _) => 1 + walk(e, cleanup_cycles),
                VsaExpr::Cleanup(e) => walk(e, cleanup_cycles).max(2) + cleanup_cycles,
            }
        }
        walk(self, cleanup_cycles).max(2)
    }

    /// Exact evaluation with the oracle algebra. Symbols resolve in
    /// `symbols`; clean-up selects the best entry of `cleanup`.
    pub fn eval(&self, symbols: &Vocabulary, cleanup: &Vocabulary) -> Result<PhasorVector, FhrrError> {
        Ok(match self {
            Self::Symbol(s) => symbols.require(s)?.clone(),
            Self::Bind(l, r) => fhrr::bind(&l.eval(symbols, cleanup)?, &r.eval(symbols, cleanup)?)?,
            Self::Unbind(l, r) => fhrr::unbind(&l.eval(symbols, cleanup)?, &r.eval(symbols, cleanup)?)?,
            Self::Bundle(l, r) => fhrr::bundle(&[l.eval(symbols, cleanup)?, r.eval(symbols, cleanup)?])?,
            Self::Permute(e, k) => fhrr::permute(&e.eval(symbols, cleanup)?, *k),
            Self::Power(e, a) => fhrr::fractional_power(&e.eval(symbols, cleanup)?, *a),
            Self::Cleanup(e) => {
                let v = e.eval(symbols, cleanup)?;
                let (name, _) = fhrr::cleanup_oracle(&v, cleanup)?;
                cleanup.require(name)?.clone()
            }
        })
    }
}

impl fmt::Display for VsaExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Symbol(s) => f.write_str(s),
            Self::Bind(l, r) => write!(f, "({l} * {r})"),
            Self::Unbind(l, r) => write!(f, "({l} / {r})"),
            Self::Bundle(l, r) => write!(f, "({l} + {r})"),
            Self::Permute(e, k) => write!(f, "rho({e}, {k})"),
            Self::Power(e, a) => write!(f, "{e}^{a:?}"),
            Self::Cleanup(e) => write!(f, "cleanup({e})"),
        }
    }
}

// expr    := term ('+' term)*
// term    := power (('*' | '/') power)*
// power   := primary ('^' number)*
// primary := ident | '(' expr ')' | 'rho' '(' expr ',' int ')' | 'cleanup' '(' expr ')'
struct Parser<'a> {
    src: &'a str,
    pos: usize,
}

impl Parser<'_> {
    fn error(&self, message: impl Into<String>) -> ParseError {
        ParseError {
            position: self.pos,
            message: message.into(),
        }
    }

    fn rest(&self) -> &str {
        &self.src[self.pos..]
    }

    fn skip_ws(&mut self) {
        let trimmed = self.rest().trim_start();
        self.pos = self.src.len() - trimmed.len();
    }

    fn peek(&mut self) -> Option<char> {
        self.skip_ws();
        self.rest().chars().next()
    }

    fn eat(&mut self, c: char) -> bool {
        if self.peek() == Some(c) {
            self.pos += c.len_utf8();
            true
        } else {
            false
        }
    }

    fn expect(&mut self, c: char) -> Result<(), ParseError> {
        if self.eat(c) {
            Ok(())
        } else {
            Err(self.error(format!("expected `{c}`")))
        }
    }

    fn bundle(&mut self) -> Result<VsaExpr, ParseError> {
        let mut e = self.term()?;
        while self.eat('+') {
            e = VsaExpr::bundle(e, self.term()?);
        }
        Ok(e)
    }

    fn term(&mut self) -> Result<VsaExpr, ParseError> {
        let mut e = self.power()?;
        loop {
            if self.eat('*') {
                e = VsaExpr::bind(e, self.power()?);
            } else if self.eat('/') {
                e = VsaExpr::unbind(e, self.power()?);
            } else {
                return Ok(e);
            }
        }
    }

    fn power(&mut self) -> Result<VsaExpr, ParseError> {
        let mut e = self.primary()?;
        while self.eat('^') {
            let alpha = self.number()?;
            e = VsaExpr::power(e, alpha);
        }
        Ok(e)
    }

    fn number(&mut self) -> Result<f64, ParseError> {
        self.skip_ws();
        let start = self.pos;
        let text = self.rest();
        let mut len = 0;
        for (i, c) in text.char_indices() {
            let sign_ok = i == 0 || matches!(text.as_bytes()[i - 1], b'e' | b'E');
            if c.is_ascii_digit() || c == '.' || c == 'e' || c == 'E' || ((c == '-' || c == '+') && sign_ok) {
                len = i + 1;
            } else {
                break;
            }
        }
        let lit = &text[..len];
        match lit.parse::<f64>() {
            Ok(v) if v.is_finite() => {
                self.pos += len;
                Ok(v)
            }
            _ => Err(ParseError {
                position: start,
                message: "expected a real number".into(),
            }),
        }
    }

    fn integer(&mut self) -> Result<i64, ParseError> {
        self.skip_ws();
        let start = self.pos;
        let text = self.rest();
        let len = text
            .char_indices()
            .take_while(|&(i, c)| c.is_ascii_digit() || (i == 0 && (c == '-' || c == '+')))
            .count();
        text[..len].parse::<i64>().map(|v| {
            self.pos += len;
            v
        }).map_err(|_| ParseError {
            position: start,
            message: "expected an integer".into(),
        })
    }

    fn ident(&mut self) -> Option<&str> {
        self.skip_ws();
        let text = self.rest();
        let mut chars = text.char_indices();
        match chars.next() {
            Some((_, c)) if c.is_ascii_alphabetic() || c == '_' => {}
            _ => return None,
        }
        let len = chars
            .find(|&(_, c)| !(c.is_ascii_alphanumeric() || c == '_'))
            .map_or(text.len(), |(i, _)| i);
        let start = self.pos;
        self.pos += len;
        Some(&self.src[start..start + len])
    }

    fn primary(&mut self) -> Result<VsaExpr, ParseError> {
        if self.eat('(') {
            let e = self.bundle()?;
            self.expect(')')?;
            return Ok(e);
        }
        let Some(name) = self.ident().map(str::to_string) else {
            let message = if self.peek().is_none() {
                "unexpected end of input"
            } else {
                "expected a symbol, `(`, `rho(` or `cleanup(`"
            };
            return Err(self.error(message));
        };
        match name.as_str() {
            "rho" if self.peek() == Some('(') => {
                self.expect('(')?;
                let e = self.bundle()?;
                self.expect(',')?;
                let k = self.integer()?;
                self.expect(')')?;
                Ok(VsaExpr::permute(e, k))
            }
            "cleanup" if self.peek() == Some('(') => {
                self.expect('(')?;
                let e = self.bundle()?;
                self.expect(')')?;
                Ok(VsaExpr::cleanup(e))
            }
            _ => Ok(VsaExpr::Symbol(name)),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn s(n: &str) -> VsaExpr {
        VsaExpr::symbol(n)
    }

    #[test]
    fn precedence_and_associativity() {
        assert_eq!(
            VsaExpr::parse("A + B * C").unwrap(),
            VsaExpr::bundle(s("A"), VsaExpr::bind(s("B"), s("C")))
        );
        assert_eq!(
            VsaExpr::parse("A / B * C").unwrap(),
            VsaExpr::bind(VsaExpr::unbind(s("A"), s("B")), s("C"))
        );
        assert_eq!(
            VsaExpr::parse("A * X^-0.65").unwrap(),
            VsaExpr::bind(s("A"), VsaExpr::power(s("X"), -0.65))
        );
        assert_eq!(
            VsaExpr::parse("A + B + C").unwrap(),
            VsaExpr::bundle(VsaExpr::bundle(s("A"), s("B")), s("C"))
        );
        assert_eq!(
            VsaExpr::parse("(A+B)^2^0.5").unwrap(),
            VsaExpr::power(VsaExpr::power(VsaExpr::bundle(s("A"), s("B")), 2.0), 0.5)
        );
    }

    #[test]
    fn functions() {
        assert_eq!(
            VsaExpr::parse("cleanup(rho((f / s) / a, -1))").unwrap(),
            VsaExpr::cleanup(VsaExpr::permute(
                VsaExpr::unbind(VsaExpr::unbind(s("f"), s("s")), s("a")),
                -1
            ))
        );
        // a bare `rho` is an ordinary symbol
        assert_eq!(VsaExpr::parse("rho * x").unwrap(), VsaExpr::bind(s("rho"), s("x")));
        assert_eq!(VsaExpr::parse("X^1e-1").unwrap(), VsaExpr::power(s("X"), 0.1));
    }

    #[test]
    fn errors_carry_position() {
        let e = VsaExpr::parse("A * ").unwrap_err();
        assert_eq!(e.position, 4);
        let e = VsaExpr::parse("A ^ x").unwrap_err();
        assert_eq!(e.position, 4);
        let e = VsaExpr::parse("rho(A, 1.5)").unwrap_err();
        assert_eq!(e.position, 8);
        let e = VsaExpr::parse("(A + B").unwrap_err();
        assert_eq!(e.position, 6);
        assert!(VsaExpr::parse("A B").is_err());
        assert!(VsaExpr::parse("").is_err());
    }

    #[test]
    fn display_round_trips() {
        for text in ["cleanup(rho((f / s) / a, -1))", "A * B^2.5 + C / D", "rho(A, 3)^-1"] {
            let e = VsaExpr::parse(text).unwrap();
            assert_eq!(VsaExpr::parse(&e.to_string()).unwrap(), e);
        }
    }

    #[test]
    fn depth_and_settle() {
        let e = VsaExpr::parse("cleanup(rho((f / s) / a, -1))").unwrap();
        assert_eq!(e.depth(), 3);
        assert_eq!(e.settle_cycles(5), 7);
        let e = VsaExpr::parse("(A*B)*X^1.85 + C").unwrap();
        assert_eq!(e.depth(), 3);
        assert_eq!(e.settle_cycles(5), 3);
        assert_eq!(e.symbols(), vec!["A", "B", "X", "C"]);
    }
}
