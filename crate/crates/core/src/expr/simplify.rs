//! Conservative, value-preserving simplification.
//!
//! Applies constant folding, 0/1 identities and like-term collection for
//! sums of monomials, with deterministic term ordering so printed output is
//! stable across rebuilds. It never cancels `x/x`, never folds constants
//! whose evaluation would raise a domain error (`1/0` stays `1/0`), and only
//! merges powers with positive constant exponents, so no rewrite reaches
//! across a potential singularity.

use super::{BinaryOp, Expr, Node, UnaryOp};

impl Expr {
    /// Returns the simplified expression. Idempotent: simplifying twice
    /// yields the same tree.
    pub fn simplify(&self) -> Expr {
        simp(self)
    }
}

fn simp(e: &Expr) -> Expr {
    match e.node() {
        Node::Const(_) | Node::Var(_) => e.clone(),
        Node::Unary(op, a) => {
            let a = simp(a);
            simp_unary(*op, a)
        }
        Node::Binary(op, a, b) => {
            let a = simp(a);
            let b = simp(b);
            match op {
                BinaryOp::Add => simp_sum(&[(1.0, a), (1.0, b)]),
                BinaryOp::Sub => simp_sum(&[(1.0, a), (-1.0, b)]),
                BinaryOp::Mul => simp_product(&[a, b]),
                BinaryOp::Div => simp_div(a, b),
                BinaryOp::Pow => simp_pow(a, b),
            }
        }
    }
}

fn simp_unary(op: UnaryOp, a: Expr) -> Expr {
    if op == UnaryOp::Neg {
        return simp_sum(&[(-1.0, a)]);
    }
    if let Some(c) = a.as_const() {
        if let Ok(v) = super::apply_unary(op, c) {
            if v.is_finite() {
                return Expr::constant(v);
            }
        }
    }
    Expr::unary(op, a)
}

/// A term is a coefficient together with an optional non-constant core;
/// `None` is the constant slot.
type Term = (f64, Option<Expr>);

fn simp_sum(parts: &[(f64, Expr)]) -> Expr {
    let mut terms: Vec<Term> = Vec::new();
    for (mult, part) in parts {
        flatten_sum(part, *mult, &mut terms);
    }
    // Collect like terms by structural equality of the core.
    let mut collected: Vec<Term> = Vec::new();
    for (coeff, core) in terms {
        if let Some(slot) = collected.iter_mut().find(|(_, c)| *c == core) {
            slot.0 += coeff;
        } else {
            collected.push((coeff, core));
        }
    }
    collected.retain(|(c, _)| *c != 0.0);
    // Deterministic order: derivative-like symbols first so equations read
    // rate-first, then by rendered term, constants last.
    collected.sort_by_cached_key(|(_, core)| match core {
        Some(t) => (0, std::cmp::Reverse(term_rank(t)), t.to_string()),
        None => (1, std::cmp::Reverse(0), String::new()),
    });
    rebuild_sum(&collected)
}

fn term_rank(t: &Expr) -> u8 {
    let mut rank = 0u8;
    for name in t.free_vars() {
        let r = if name.ends_with("ddot") {
            2
        } else if name.starts_with("pdot") {
            1
        } else {
            0
        };
        rank = rank.max(r);
    }
    rank
}

fn flatten_sum(e: &Expr, mult: f64, out: &mut Vec<Term>) {
    match e.node() {
        Node::Binary(BinaryOp::Add, a, b) => {
            flatten_sum(a, mult, out);
            flatten_sum(b, mult, out);
        }
        Node::Binary(BinaryOp::Sub, a, b) => {
            flatten_sum(a, mult, out);
            flatten_sum(b, -mult, out);
        }
        Node::Unary(UnaryOp::Neg, a) => flatten_sum(a, -mult, out),
        Node::Const(c) => out.push((mult * c, None)),
        _ => {
            let (coeff, core) = split_coeff(e);
            // Distribute a constant over a parenthesized sum so monomials
            // from different groupings collect.
            if let Some(inner) = &core {
                if matches!(
                    inner.node(),
                    Node::Binary(BinaryOp::Add | BinaryOp::Sub, _, _)
                ) {
                    flatten_sum(inner, mult * coeff, out);
                    return;
                }
            }
            out.push((mult * coeff, core));
        }
    }
}

/// Splits a (canonical) product into its constant coefficient and core.
fn split_coeff(e: &Expr) -> (f64, Option<Expr>) {
    match e.node() {
        Node::Const(c) => (*c, None),
        Node::Binary(BinaryOp::Mul, a, b) => {
            if let Some(c) = a.as_const() {
                (c, Some(b.clone()))
            } else {
                (1.0, Some(e.clone()))
            }
        }
        _ => (1.0, Some(e.clone())),
    }
}

fn make_term(coeff: f64, core: &Option<Expr>) -> Expr {
    match core {
        None => Expr::constant(coeff),
        Some(t) => {
            if coeff == 1.0 {
                t.clone()
            } else if coeff == -1.0 {
                Expr::unary(UnaryOp::Neg, t.clone())
            } else {
                Expr::binary(BinaryOp::Mul, Expr::constant(coeff), t.clone())
            }
        }
    }
}

fn rebuild_sum(terms: &[Term]) -> Expr {
    if terms.is_empty() {
        return Expr::zero();
    }
    let mut acc = make_term(terms[0].0, &terms[0].1);
    for (coeff, core) in &terms[1..] {
        if *coeff < 0.0 {
            acc = Expr::binary(BinaryOp::Sub, acc, make_term(-coeff, core));
        } else {
            acc = Expr::binary(BinaryOp::Add, acc, make_term(*coeff, core));
        }
    }
    acc
}

fn simp_product(parts: &[Expr]) -> Expr {
    let mut coeff = 1.0f64;
    let mut factors: Vec<Expr> = Vec::new();
    for part in parts {
        flatten_product(part, &mut coeff, &mut factors);
    }
    if coeff == 0.0 {
        return Expr::zero();
    }
    // Merge powers of equal bases, but only for positive constant exponents:
    // mixed signs would cancel across a potential singularity.
    let mut merged: Vec<(Expr, f64)> = Vec::new();
    'outer: for factor in factors {
        let (base, exp) = match factor.node() {
            Node::Binary(BinaryOp::Pow, b, e) => match e.as_const() {
                Some(c) if c > 0.0 => (b.clone(), c),
                _ => (factor.clone(), 1.0),
            },
            _ => (factor.clone(), 1.0),
        };
        for (b, e) in merged.iter_mut() {
            if *b == base {
                *e += exp;
                continue 'outer;
            }
        }
        merged.push((base, exp));
    }
    let mut rebuilt: Vec<Expr> = merged
        .into_iter()
        .map(|(base, exp)| {
            if exp == 1.0 {
                base
            } else {
                Expr::binary(BinaryOp::Pow, base, Expr::constant(exp))
            }
        })
        .collect();
    rebuilt.sort_by_cached_key(|f| f.to_string());

    if rebuilt.is_empty() {
        return Expr::constant(coeff);
    }
    // A constant times a lone sum distributes, matching what the sum
    // flattener does when the product occurs inside a sum.
    if rebuilt.len() == 1 {
        if matches!(
            rebuilt[0].node(),
            Node::Binary(BinaryOp::Add | BinaryOp::Sub, _, _)
        ) {
            return simp_sum(&[(coeff, rebuilt[0].clone())]);
        }
    }
    let mut acc = rebuilt[0].clone();
    for f in &rebuilt[1..] {
        acc = Expr::binary(BinaryOp::Mul, acc, f.clone());
    }
    if coeff == 1.0 {
        acc
    } else if coeff == -1.0 {
        Expr::unary(UnaryOp::Neg, acc)
    } else {
        Expr::binary(BinaryOp::Mul, Expr::constant(coeff), acc)
    }
}

fn flatten_product(e: &Expr, coeff: &mut f64, out: &mut Vec<Expr>) {
    match e.node() {
        Node::Binary(BinaryOp::Mul, a, b) => {
            flatten_product(a, coeff, out);
            flatten_product(b, coeff, out);
        }
        Node::Unary(UnaryOp::Neg, a) => {
            *coeff = -*coeff;
            flatten_product(a, coeff, out);
        }
        Node::Const(c) => *coeff *= c,
        _ => out.push(e.clone()),
    }
}

fn simp_div(a: Expr, b: Expr) -> Expr {
    if a.is_zero() {
        return Expr::zero();
    }
    if let Some(bc) = b.as_const() {
        if bc != 0.0 {
            if let Some(ac) = a.as_const() {
                return Expr::constant(ac / bc);
            }
            // Fold only exactly representable reciprocals (powers of two).
            if bc.abs().log2().fract() == 0.0 {
                return simp_product(&[a, Expr::constant(1.0 / bc)]);
            }
            if bc == 1.0 {
                return a;
            }
        }
    }
    Expr::binary(BinaryOp::Div, a, b)
}

fn simp_pow(a: Expr, b: Expr) -> Expr {
    if let Some(bc) = b.as_const() {
        if bc == 0.0 {
            return Expr::one();
        }
        if bc == 1.0 {
            return a;
        }
        if let Some(ac) = a.as_const() {
            if let Ok(v) = super::apply_binary(BinaryOp::Pow, ac, bc) {
                if v.is_finite() {
                    return Expr::constant(v);
                }
            }
        }
        // (x^m)^n -> x^(m n) for integer m, n only.
        if let Node::Binary(BinaryOp::Pow, base, inner) = a.node() {
            if let Some(ic) = inner.as_const() {
                if ic.fract() == 0.0 && bc.fract() == 0.0 {
                    return Expr::binary(
                        BinaryOp::Pow,
                        base.clone(),
                        Expr::constant(ic * bc),
                    );
                }
            }
        }
    }
    if a.is_one() {
        return Expr::one();
    }
    Expr::binary(BinaryOp::Pow, a, b)
}

#[cfg(test)]
mod tests {
    use super::super::parse;
    use crate::expr::Expr;
    use crate::points::PointTuple;

    fn s(src: &str) -> String {
        parse(src).unwrap().simplify().to_string()
    }

    #[test]
    fn zero_and_one_identities() {
        assert_eq!(s("x + 0"), "x");
        assert_eq!(s("0 + x"), "x");
        assert_eq!(s("x*1"), "x");
        assert_eq!(s("x*0"), "0");
        assert_eq!(s("x^1"), "x");
        assert_eq!(s("x^0"), "1");
        assert_eq!(s("x - x"), "0");
    }

    #[test]
    fn like_terms_collect() {
        assert_eq!(s("2*x + 3*x"), "5*x");
        assert_eq!(s("x + x"), "2*x");
        assert_eq!(s("2*x*y + y*x"), "3*x*y");
    }

    #[test]
    fn conservative_about_singularities() {
        // x*(1/x) is never cancelled (factors are reordered canonically,
        // the quotient survives), so the domain gap at x = 0 remains.
        assert_eq!(s("x*(1/x)"), "1/x*x");
        let e = parse("x*(1/x)").unwrap().simplify();
        assert!(e
            .evaluate(&PointTuple::from_pairs([("x".to_string(), 0.0)]))
            .is_err());
        // 1/0 folds to nothing; the domain error must survive to evaluation.
        let e = parse("1/0").unwrap().simplify();
        assert!(e.evaluate(&PointTuple::new()).is_err());
    }

    #[test]
    fn constant_folding() {
        assert_eq!(s("2 + 3*4"), "14");
        assert_eq!(s("2^3"), "8");
        assert_eq!(s("6/3"), "2");
        assert_eq!(s("x/4"), "0.25*x");
        // Non power-of-two divisors stay as quotients.
        assert_eq!(s("x/3"), "x/3");
    }

    #[test]
    fn powers_merge_only_when_safe() {
        assert_eq!(s("x*x"), "x^2");
        assert_eq!(s("x^2*x^3"), "x^5");
        // A negative exponent never merges against a positive one.
        assert_eq!(s("x^2*x^-2"), "x^-2*x^2");
    }

    #[test]
    fn simplify_is_idempotent_on_samples() {
        for src in [
            "2*x + 3*x - y*(x + 0) + sin(x)*1",
            "0.5*(v^2 - x^2)",
            "x*(1/x) + x/4 - 2^3",
            "-(x + y) + x",
            "(x^2)^3*x",
        ] {
            let once = parse(src).unwrap().simplify();
            let twice = once.simplify();
            assert_eq!(once, twice, "not idempotent on `{src}`");
        }
    }

    #[test]
    fn value_preservation_spot_checks() {
        let p = PointTuple::from_pairs([("x".to_string(), 1.37), ("y".to_string(), -0.42)]);
        for src in [
            "2*x + 3*x - y*(x + 0)",
            "x*(1/x)",
            "x^2*x^3 - y^0 + x/4",
            "-(x - y)*(x + y)",
        ] {
            let e = parse(src).unwrap();
            let v0 = e.evaluate(&p).unwrap();
            let v1 = e.simplify().evaluate(&p).unwrap();
            assert!((v0 - v1).abs() <= 1e-12 * (1.0 + v0.abs()));
        }
    }
}
