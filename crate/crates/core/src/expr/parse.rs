//! Recursive-descent parser for the expression grammar:
//!
//! ```text
//! expr   := term (("+" | "-") term)*
//! term   := factor (("*" | "/") factor)*
//! factor := unary ("^" factor)?        -- "^" is right-associative
//! unary  := "-" unary | atom
//! atom   := number | ident | ident "(" expr ")" | "(" expr ")"
//! ```
//!
//! Identifiers are `[A-Za-z_][A-Za-z0-9_]*`. The names `pi` and `e` are
//! reserved constants. Errors carry the byte offset of the offending token.

use thiserror::Error;

use super::{BinaryOp, Expr, UnaryOp};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("{message} at byte offset {offset}")]
pub struct ParseError {
    pub offset: usize,
    pub message: String,
}

const FUNCTIONS: &[(&str, UnaryOp)] = &[
    ("sin", UnaryOp::Sin),
    ("cos", UnaryOp::Cos),
    ("tan", UnaryOp::Tan),
    ("exp", UnaryOp::Exp),
    ("log", UnaryOp::Log),
    ("sqrt", UnaryOp::Sqrt),
];

/// Parses `source` into an expression tree.
pub fn parse(source: &str) -> Result<Expr, ParseError> {
    let mut p = Parser {
        bytes: source.as_bytes(),
        pos: 0,
    };
    p.skip_ws();
    let expr = p.parse_expr()?;
    p.skip_ws();
    if p.pos != p.bytes.len() {
        return Err(p.error("unexpected trailing input"));
    }
    Ok(expr)
}

struct Parser<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Parser<'a> {
    fn error(&self, message: impl Into<String>) -> ParseError {
        ParseError {
            offset: self.pos,
            message: message.into(),
        }
    }

    fn skip_ws(&mut self) {
        while self.pos < self.bytes.len() && self.bytes[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&self) -> Option<u8> {
        self.bytes.get(self.pos).copied()
    }

    fn eat(&mut self, byte: u8) -> bool {
        if self.peek() == Some(byte) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn parse_expr(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.parse_term()?;
        loop {
            self.skip_ws();
            match self.peek() {
                Some(b'+') => {
                    self.pos += 1;
                    self.skip_ws();
                    let rhs = self.parse_term()?;
                    lhs = Expr::binary(BinaryOp::Add, lhs, rhs);
                }
                Some(b'-') => {
                    self.pos += 1;
                    self.skip_ws();
                    let rhs = self.parse_term()?;
                    lhs = Expr::binary(BinaryOp::Sub, lhs, rhs);
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn parse_term(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.parse_factor()?;
        loop {
            self.skip_ws();
            match self.peek() {
                Some(b'*') => {
                    self.pos += 1;
                    self.skip_ws();
                    let rhs = self.parse_factor()?;
                    lhs = Expr::binary(BinaryOp::Mul, lhs, rhs);
                }
                Some(b'/') => {
                    self.pos += 1;
                    self.skip_ws();
                    let rhs = self.parse_factor()?;
                    lhs = Expr::binary(BinaryOp::Div, lhs, rhs);
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn parse_factor(&mut self) -> Result<Expr, ParseError> {
        let base = self.parse_unary()?;
        self.skip_ws();
        if self.eat(b'^') {
            self.skip_ws();
            let exponent = self.parse_factor()?;
            return Ok(Expr::binary(BinaryOp::Pow, base, exponent));
        }
        Ok(base)
    }

    fn parse_unary(&mut self) -> Result<Expr, ParseError> {
        self.skip_ws();
        if self.eat(b'-') {
            let inner = self.parse_unary()?;
            return Ok(Expr::unary(UnaryOp::Neg, inner));
        }
        self.parse_atom()
    }

    fn parse_atom(&mut self) -> Result<Expr, ParseError> {
        self.skip_ws();
        match self.peek() {
            None => Err(self.error("expected expression, found end of input")),
            Some(b'(') => {
                self.pos += 1;
                let inner = self.parse_expr()?;
                self.skip_ws();
                if !self.eat(b')') {
                    return Err(self.error("expected `)`"));
                }
                Ok(inner)
            }
            Some(c) if c.is_ascii_digit() || c == b'.' => self.parse_number(),
            Some(c) if c.is_ascii_alphabetic() || c == b'_' => self.parse_ident(),
            Some(c) => Err(self.error(format!("unexpected character `{}`", c as char))),
        }
    }

    fn parse_number(&mut self) -> Result<Expr, ParseError> {
        let start = self.pos;
        while self
            .peek()
            .map(|c| c.is_ascii_digit() || c == b'.')
            .unwrap_or(false)
        {
            self.pos += 1;
        }
        // Optional exponent part: e.g. 1e-3, 2.5E+4.
        if matches!(self.peek(), Some(b'e') | Some(b'E')) {
            let mark = self.pos;
            self.pos += 1;
            if matches!(self.peek(), Some(b'+') | Some(b'-')) {
                self.pos += 1;
            }
            if self.peek().map(|c| c.is_ascii_digit()).unwrap_or(false) {
                while self.peek().map(|c| c.is_ascii_digit()).unwrap_or(false) {
                    self.pos += 1;
                }
            } else {
                // Not an exponent after all ("2*e" style); back off.
                self.pos = mark;
            }
        }
        let text = std::str::from_utf8(&self.bytes[start..self.pos]).expect("ascii");
        match text.parse::<f64>() {
            Ok(v) => Ok(Expr::constant(v)),
            Err(_) => Err(ParseError {
                offset: start,
                message: format!("invalid number literal `{text}`"),
            }),
        }
    }

    fn parse_ident(&mut self) -> Result<Expr, ParseError> {
        let start = self.pos;
        while self
            .peek()
            .map(|c| c.is_ascii_alphanumeric() || c == b'_')
            .unwrap_or(false)
        {
            self.pos += 1;
        }
        let name = std::str::from_utf8(&self.bytes[start..self.pos])
            .expect("ascii")
            .to_string();
        self.skip_ws();
        if self.peek() == Some(b'(') {
            let op = FUNCTIONS
                .iter()
                .find(|(n, _)| *n == name)
                .map(|(_, op)| *op)
                .ok_or(ParseError {
                    offset: start,
                    message: format!("unknown function name `{name}`"),
                })?;
            self.pos += 1;
            let arg = self.parse_expr()?;
            self.skip_ws();
            if !self.eat(b')') {
                return Err(self.error("expected `)`"));
            }
            return Ok(Expr::unary(op, arg));
        }
        match name.as_str() {
            "pi" => Ok(Expr::constant(std::f64::consts::PI)),
            "e" => Ok(Expr::constant(std::f64::consts::E)),
            _ => Ok(Expr::var(name)),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::super::{BinaryOp, Node};
    use super::*;
    use crate::points::PointTuple;

    #[test]
    fn parses_harmonic_lagrangian_shape() {
        // 0.5*(v^2 - x^2) => Mul(0.5, Sub(Pow(v,2), Pow(x,2)))
        let e = parse("0.5*(v^2 - x^2)").unwrap();
        match e.node() {
            Node::Binary(BinaryOp::Mul, lhs, rhs) => {
                assert_eq!(lhs.as_const(), Some(0.5));
                match rhs.node() {
                    Node::Binary(BinaryOp::Sub, a, b) => {
                        assert_eq!(a.to_string(), "v^2");
                        assert_eq!(b.to_string(), "x^2");
                    }
                    _ => panic!("expected Sub"),
                }
            }
            _ => panic!("expected Mul"),
        }
    }

    #[test]
    fn sin_exp_product_evaluates_at_zero() {
        let e = parse("sin(x)*exp(-x)").unwrap();
        let p = PointTuple::from_pairs([("x".to_string(), 0.0)]);
        assert_eq!(e.evaluate(&p).unwrap(), 0.0);
    }

    #[test]
    fn incomplete_input_reports_offset() {
        let err = parse("x +").unwrap_err();
        assert_eq!(err.offset, 3);
    }

    #[test]
    fn unknown_function_is_rejected() {
        let err = parse("foo(x)").unwrap_err();
        assert!(err.message.contains("unknown function name `foo`"));
        assert_eq!(err.offset, 0);
    }

    #[test]
    fn power_is_right_associative() {
        let e = parse("2^3^2").unwrap();
        let p = PointTuple::new();
        assert_eq!(e.evaluate(&p).unwrap(), 512.0);
    }

    #[test]
    fn reserved_constants() {
        let e = parse("pi + e").unwrap();
        let p = PointTuple::new();
        let v = e.evaluate(&p).unwrap();
        assert_eq!(v, std::f64::consts::PI + std::f64::consts::E);
    }

    #[test]
    fn negative_exponent_literal() {
        let e = parse("x^-2").unwrap();
        let p = PointTuple::from_pairs([("x".to_string(), 2.0)]);
        assert_eq!(e.evaluate(&p).unwrap(), 0.25);
    }

    #[test]
    fn scientific_notation() {
        let e = parse("1e-3 + 2.5E+1").unwrap();
        assert_eq!(e.evaluate(&PointTuple::new()).unwrap(), 0.001 + 25.0);
    }

    #[test]
    fn print_parse_print_is_fixed_point() {
        for src in [
            "0.5*(v^2 - x^2)",
            "sin(x)*exp(-x)",
            "x^2^3",
            "(x + y)*(x - y)/z",
            "-x^2 + 3*x - 1",
            "sqrt(x)/(1 + tan(y))",
        ] {
            let once = parse(src).unwrap().to_string();
            let twice = parse(&once).unwrap().to_string();
            assert_eq!(once, twice, "not a fixed point for `{src}`");
        }
    }
}
