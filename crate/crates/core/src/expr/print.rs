//! Stable text and LaTeX rendering.
//!
//! Printing respects the parse grammar exactly: for any expression `e`,
//! `parse(e.to_string())` succeeds, and `print ∘ parse ∘ print` is a fixed
//! point on strings. Numbers print in the shortest form that round-trips.

use std::fmt;

use super::{BinaryOp, Expr, Node, UnaryOp};

// Grammar levels: sum = 1, term = 2, power = 3, unary = 4, atom = 5.
fn level(e: &Expr) -> u8 {
    match e.node() {
        Node::Binary(BinaryOp::Add | BinaryOp::Sub, _, _) => 1,
        Node::Binary(BinaryOp::Mul | BinaryOp::Div, _, _) => 2,
        Node::Binary(BinaryOp::Pow, _, _) => 3,
        Node::Unary(UnaryOp::Neg, _) => 4,
        Node::Const(c) if *c < 0.0 => 4,
        _ => 5,
    }
}

pub(crate) fn format_number(c: f64) -> String {
    if c == 0.0 {
        // Collapse -0.0 so prints stay sign-stable.
        return "0".to_string();
    }
    if c.fract() == 0.0 && c.abs() < 1e15 {
        format!("{}", c as i64)
    } else {
        format!("{}", c)
    }
}

fn write_at(e: &Expr, required: u8, f: &mut fmt::Formatter<'_>) -> fmt::Result {
    if level(e) < required {
        write!(f, "(")?;
        write_expr(e, f)?;
        write!(f, ")")
    } else {
        write_expr(e, f)
    }
}

fn write_expr(e: &Expr, f: &mut fmt::Formatter<'_>) -> fmt::Result {
    match e.node() {
        Node::Const(c) => write!(f, "{}", format_number(*c)),
        Node::Var(n) => write!(f, "{n}"),
        Node::Unary(UnaryOp::Neg, inner) => {
            write!(f, "-")?;
            // `-a*b` reparses as (-a)*b, which is value-equal and
            // string-stable, so products may stay bare; powers must not
            // ("-x^2" would reparse as (-x)^2).
            match inner.node() {
                Node::Binary(BinaryOp::Mul | BinaryOp::Div, _, _) => write_expr(inner, f),
                _ => write_at(inner, 4, f),
            }
        }
        Node::Unary(op, inner) => {
            write!(f, "{}(", op.name())?;
            write_expr(inner, f)?;
            write!(f, ")")
        }
        Node::Binary(op, a, b) => match op {
            BinaryOp::Add => {
                write_at(a, 1, f)?;
                write!(f, " + ")?;
                write_at(b, 2, f)
            }
            BinaryOp::Sub => {
                write_at(a, 1, f)?;
                write!(f, " - ")?;
                write_at(b, 2, f)
            }
            BinaryOp::Mul => {
                write_at(a, 2, f)?;
                write!(f, "*")?;
                // `a*b*c` reparses left-nested but value-equal and
                // string-stable, so a product on the right stays bare;
                // quotients keep their parentheses.
                match b.node() {
                    Node::Binary(BinaryOp::Mul, _, _) => write_expr(b, f),
                    _ => write_at(b, 3, f),
                }
            }
            BinaryOp::Div => {
                write_at(a, 2, f)?;
                write!(f, "/")?;
                write_at(b, 3, f)
            }
            BinaryOp::Pow => {
                write_at(a, 4, f)?;
                write!(f, "^")?;
                write_at(b, 3, f)
            }
        },
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_expr(self, f)
    }
}

impl Expr {
    /// Renders the expression as LaTeX.
    pub fn to_latex(&self) -> String {
        let mut out = String::new();
        latex(self, &mut out, 0);
        out
    }

    fn sign_normalized(&self) -> Expr {
        let s = self.simplify();
        if s.to_string().starts_with('-') {
            super::neg(s).simplify()
        } else {
            s
        }
    }

    /// Prints `self = 0` with the sign normalized so the leading term is
    /// positive; used for derived-equation output and golden files.
    pub fn equation_text(&self) -> String {
        format!("{} = 0", self.sign_normalized())
    }

    /// LaTeX form of [`Expr::equation_text`].
    pub fn equation_latex(&self) -> String {
        format!("{} = 0", self.sign_normalized().to_latex())
    }
}

fn latex_name(name: &str) -> String {
    match name.split_once('_') {
        Some((head, tail)) => format!("{head}_{{{tail}}}"),
        None => name.to_string(),
    }
}

fn latex(e: &Expr, out: &mut String, parent: u8) {
    // parent levels mirror the text printer; LaTeX fractions and explicit
    // braces remove most parenthesization needs.
    match e.node() {
        Node::Const(c) => out.push_str(&format_number(*c)),
        Node::Var(n) => out.push_str(&latex_name(n)),
        Node::Unary(UnaryOp::Neg, inner) => {
            let wrap = parent >= 2;
            if wrap {
                out.push_str("\\left(");
            }
            out.push('-');
            latex(inner, out, 4);
            if wrap {
                out.push_str("\\right)");
            }
        }
        Node::Unary(op, inner) => {
            let cmd = match op {
                UnaryOp::Sin => "\\sin",
                UnaryOp::Cos => "\\cos",
                UnaryOp::Tan => "\\tan",
                UnaryOp::Exp => "\\exp",
                UnaryOp::Log => "\\log",
                UnaryOp::Sqrt => "\\sqrt",
                UnaryOp::Neg => unreachable!(),
            };
            out.push_str(cmd);
            if *op == UnaryOp::Sqrt {
                out.push('{');
                latex(inner, out, 0);
                out.push('}');
            } else {
                out.push_str("\\left(");
                latex(inner, out, 0);
                out.push_str("\\right)");
            }
        }
        Node::Binary(op, a, b) => match op {
            BinaryOp::Add | BinaryOp::Sub => {
                let wrap = parent >= 2;
                if wrap {
                    out.push_str("\\left(");
                }
                latex(a, out, 1);
                out.push_str(if *op == BinaryOp::Add { " + " } else { " - " });
                latex(b, out, 2);
                if wrap {
                    out.push_str("\\right)");
                }
            }
            BinaryOp::Mul => {
                latex(a, out, 2);
                out.push_str(" \\cdot ");
                latex(b, out, 3);
            }
            BinaryOp::Div => {
                out.push_str("\\frac{");
                latex(a, out, 0);
                out.push_str("}{");
                latex(b, out, 0);
                out.push('}');
            }
            BinaryOp::Pow => {
                let base_atomic = matches!(a.node(), Node::Const(c) if *c >= 0.0)
                    || matches!(a.node(), Node::Var(_));
                if base_atomic {
                    latex(a, out, 4);
                } else {
                    out.push_str("\\left(");
                    latex(a, out, 0);
                    out.push_str("\\right)");
                }
                out.push_str("^{");
                latex(b, out, 0);
                out.push('}');
            }
        },
    }
}

#[cfg(test)]
mod tests {
    use super::super::parse;
    use crate::expr::Expr;

    #[test]
    fn display_parenthesizes_by_grammar() {
        let e = parse("(x + y)*z").unwrap();
        assert_eq!(e.to_string(), "(x + y)*z");
        let e = parse("x^2^3").unwrap();
        assert_eq!(e.to_string(), "x^2^3");
        let e = parse("(x^2)^3").unwrap();
        assert_eq!(e.to_string(), "(x^2)^3");
        let e = parse("-(x^2)").unwrap();
        assert_eq!(e.to_string(), "-(x^2)");
    }

    #[test]
    fn equation_text_normalizes_leading_sign() {
        // Rate-like symbols sort first; the leading term comes out positive.
        let e = parse("-x - xddot").unwrap();
        assert_eq!(e.equation_text(), "xddot + x = 0");
        let e = parse("p - v").unwrap();
        assert_eq!(e.equation_text(), "p - v = 0");
        let e = parse("q - pdot_q").unwrap();
        assert_eq!(e.equation_text(), "pdot_q - q = 0");
    }

    #[test]
    fn latex_output() {
        let e = parse("0.5*(v_q^2 - q^2)").unwrap();
        let tex = e.to_latex();
        assert!(tex.contains("v_{q}"));
        assert!(tex.contains("^{2}"));
        let frac = parse("x/y").unwrap();
        assert_eq!(frac.to_latex(), "\\frac{x}{y}");
    }

    #[test]
    fn number_formatting() {
        assert_eq!(Expr::constant(5.0).to_string(), "5");
        assert_eq!(Expr::constant(0.5).to_string(), "0.5");
        assert_eq!(Expr::constant(-3.0).to_string(), "-3");
        assert_eq!(Expr::constant(-0.0).to_string(), "0");
    }
}
