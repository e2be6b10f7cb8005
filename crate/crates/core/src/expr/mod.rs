//! Immutable symbolic expressions over named real variables.
//!
//! An [`Expr`] is a shared, immutable tree of constants, variables, unary
//! functions (neg, sin, cos, tan, exp, log, sqrt) and binary operations
//! (add, sub, mul, div, pow). All operations are pure: differentiation,
//! substitution and simplification return new trees, evaluation returns an
//! IEEE double. Trees are reference-counted and safe to share across threads.
//!
//! The expression domain is smooth real functions in the primitive set above;
//! there is no `abs` or piecewise construct, which keeps differentiation total.

mod parse;
mod print;
mod simplify;

pub use parse::{parse, ParseError};

use std::collections::BTreeSet;
use std::hash::{Hash, Hasher};
use std::sync::Arc;

use thiserror::Error;

use crate::points::PointTuple;

/// Unary operations. `Neg` is arithmetic; the rest are the supported
/// elementary functions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum UnaryOp {
    Neg,
    Sin,
    Cos,
    Tan,
    Exp,
    Log,
    Sqrt,
}

impl UnaryOp {
    pub fn name(self) -> &'static str {
        match self {
            UnaryOp::Neg => "-",
            UnaryOp::Sin => "sin",
            UnaryOp::Cos => "cos",
            UnaryOp::Tan => "tan",
            UnaryOp::Exp => "exp",
            UnaryOp::Log => "log",
            UnaryOp::Sqrt => "sqrt",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BinaryOp {
    Add,
    Sub,
    Mul,
    Div,
    Pow,
}

#[derive(Debug)]
pub(crate) enum Node {
    Const(f64),
    Var(String),
    Unary(UnaryOp, Expr),
    Binary(BinaryOp, Expr, Expr),
}

/// An immutable symbolic expression.
///
/// Cloning is cheap (shared subtrees). Equality and hashing are structural,
/// with constants compared bit-for-bit.
#[derive(Clone)]
pub struct Expr(Arc<Node>);

impl PartialEq for Expr {
    fn eq(&self, other: &Self) -> bool {
        if Arc::ptr_eq(&self.0, &other.0) {
            return true;
        }
        match (self.node(), other.node()) {
            (Node::Const(a), Node::Const(b)) => a.to_bits() == b.to_bits(),
            (Node::Var(a), Node::Var(b)) => a == b,
            (Node::Unary(op_a, a), Node::Unary(op_b, b)) => op_a == op_b && a == b,
            (Node::Binary(op_a, a1, a2), Node::Binary(op_b, b1, b2)) => {
                op_a == op_b && a1 == b1 && a2 == b2
            }
            _ => false,
        }
    }
}

impl Eq for Expr {}

impl Hash for Expr {
    fn hash<H: Hasher>(&self, state: &mut H) {
        match self.node() {
            Node::Const(c) => {
                0u8.hash(state);
                c.to_bits().hash(state);
            }
            Node::Var(n) => {
                1u8.hash(state);
                n.hash(state);
            }
            Node::Unary(op, e) => {
                2u8.hash(state);
                op.hash(state);
                e.hash(state);
            }
            Node::Binary(op, a, b) => {
                3u8.hash(state);
                op.hash(state);
                a.hash(state);
                b.hash(state);
            }
        }
    }
}

impl std::fmt::Debug for Expr {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "Expr({})", self)
    }
}

/// Errors raised by numeric evaluation.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EvalError {
    #[error("variable `{name}` has no assigned value")]
    Unassigned { name: String },
    #[error("{reason} in `{subexpr}`")]
    Domain { reason: String, subexpr: String },
}

impl Expr {
    fn new(node: Node) -> Self {
        Expr(Arc::new(node))
    }

    pub(crate) fn node(&self) -> &Node {
        &self.0
    }

    pub fn constant(value: f64) -> Self {
        Expr::new(Node::Const(value))
    }

    pub fn zero() -> Self {
        Expr::constant(0.0)
    }

    pub fn one() -> Self {
        Expr::constant(1.0)
    }

    pub fn var(name: impl Into<String>) -> Self {
        Expr::new(Node::Var(name.into()))
    }

    pub fn unary(op: UnaryOp, operand: Expr) -> Self {
        Expr::new(Node::Unary(op, operand))
    }

    pub fn binary(op: BinaryOp, lhs: Expr, rhs: Expr) -> Self {
        Expr::new(Node::Binary(op, lhs, rhs))
    }

    pub fn sin(&self) -> Expr {
        Expr::unary(UnaryOp::Sin, self.clone())
    }

    pub fn cos(&self) -> Expr {
        Expr::unary(UnaryOp::Cos, self.clone())
    }

    pub fn tan(&self) -> Expr {
        Expr::unary(UnaryOp::Tan, self.clone())
    }

    pub fn exp(&self) -> Expr {
        Expr::unary(UnaryOp::Exp, self.clone())
    }

    pub fn log(&self) -> Expr {
        Expr::unary(UnaryOp::Log, self.clone())
    }

    pub fn sqrt(&self) -> Expr {
        Expr::unary(UnaryOp::Sqrt, self.clone())
    }

    pub fn pow(&self, exponent: Expr) -> Expr {
        Expr::binary(BinaryOp::Pow, self.clone(), exponent)
    }

    pub fn powi(&self, exponent: i32) -> Expr {
        self.pow(Expr::constant(f64::from(exponent)))
    }

    /// The constant value, if this node is a constant.
    pub fn as_const(&self) -> Option<f64> {
        match self.node() {
            Node::Const(c) => Some(*c),
            _ => None,
        }
    }

    pub fn is_zero(&self) -> bool {
        matches!(self.node(), Node::Const(c) if *c == 0.0)
    }

    pub fn is_one(&self) -> bool {
        matches!(self.node(), Node::Const(c) if *c == 1.0)
    }

    /// The set of variable names occurring in the expression.
    pub fn free_vars(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.collect_vars(&mut out);
        out
    }

    fn collect_vars(&self, out: &mut BTreeSet<String>) {
        match self.node() {
            Node::Const(_) => {}
            Node::Var(n) => {
                if !out.contains(n) {
                    out.insert(n.clone());
                }
            }
            Node::Unary(_, e) => e.collect_vars(out),
            Node::Binary(_, a, b) => {
                a.collect_vars(out);
                b.collect_vars(out);
            }
        }
    }

    pub fn contains_var(&self, name: &str) -> bool {
        match self.node() {
            Node::Const(_) => false,
            Node::Var(n) => n == name,
            Node::Unary(_, e) => e.contains_var(name),
            Node::Binary(_, a, b) => a.contains_var(name) || b.contains_var(name),
        }
    }

    /// Replaces every occurrence of `name` with `replacement`.
    pub fn subst(&self, name: &str, replacement: &Expr) -> Expr {
        if !self.contains_var(name) {
            return self.clone();
        }
        match self.node() {
            Node::Const(_) => self.clone(),
            Node::Var(n) => {
                if n == name {
                    replacement.clone()
                } else {
                    self.clone()
                }
            }
            Node::Unary(op, e) => Expr::unary(*op, e.subst(name, replacement)),
            Node::Binary(op, a, b) => {
                Expr::binary(*op, a.subst(name, replacement), b.subst(name, replacement))
            }
        }
    }

    /// Applies several substitutions simultaneously (no chaining between them).
    pub fn subst_all(&self, table: &[(String, Expr)]) -> Expr {
        match self.node() {
            Node::Const(_) => self.clone(),
            Node::Var(n) => table
                .iter()
                .find(|(name, _)| name == n)
                .map(|(_, e)| e.clone())
                .unwrap_or_else(|| self.clone()),
            Node::Unary(op, e) => Expr::unary(*op, e.subst_all(table)),
            Node::Binary(op, a, b) => {
                Expr::binary(*op, a.subst_all(table), b.subst_all(table))
            }
        }
    }

    /// Renames variables according to `(old, new)` pairs.
    pub fn rename_vars(&self, table: &[(String, String)]) -> Expr {
        let exprs: Vec<(String, Expr)> = table
            .iter()
            .map(|(old, new)| (old.clone(), Expr::var(new.clone())))
            .collect();
        self.subst_all(&exprs)
    }

    /// Evaluates at a named assignment. Every free variable must be assigned.
    pub fn evaluate(&self, point: &PointTuple) -> Result<f64, EvalError> {
        self.eval_with(&mut |name| point.get(name))
    }

    /// Evaluates with an arbitrary variable resolver.
    pub fn eval_with(&self, lookup: &mut dyn FnMut(&str) -> Option<f64>) -> Result<f64, EvalError> {
        match self.node() {
            Node::Const(c) => Ok(*c),
            Node::Var(n) => lookup(n).ok_or_else(|| EvalError::Unassigned { name: n.clone() }),
            Node::Unary(op, e) => {
                let v = e.eval_with(lookup)?;
                apply_unary(*op, v).map_err(|reason| EvalError::Domain {
                    reason,
                    subexpr: self.to_string(),
                })
            }
            Node::Binary(op, a, b) => {
                let va = a.eval_with(lookup)?;
                let vb = b.eval_with(lookup)?;
                apply_binary(*op, va, vb).map_err(|reason| EvalError::Domain {
                    reason,
                    subexpr: self.to_string(),
                })
            }
        }
    }

    /// Symbolic partial derivative with respect to `var`.
    ///
    /// The derivative of an expression not containing `var` is the zero
    /// constant. The result is lightly folded but not fully simplified.
    pub fn diff(&self, var: &str) -> Expr {
        if !self.contains_var(var) {
            return Expr::zero();
        }
        match self.node() {
            Node::Const(_) => Expr::zero(),
            Node::Var(n) => {
                if n == var {
                    Expr::one()
                } else {
                    Expr::zero()
                }
            }
            Node::Unary(op, e) => {
                let de = e.diff(var);
                let outer = match op {
                    UnaryOp::Neg => return neg(de),
                    UnaryOp::Sin => e.cos(),
                    UnaryOp::Cos => neg(e.sin()),
                    UnaryOp::Tan => {
                        // d tan = 1 / cos^2
                        div(Expr::one(), e.cos().powi(2))
                    }
                    UnaryOp::Exp => self.clone(),
                    UnaryOp::Log => div(Expr::one(), e.clone()),
                    UnaryOp::Sqrt => div(Expr::one(), mul(Expr::constant(2.0), self.clone())),
                };
                mul(outer, de)
            }
            Node::Binary(op, a, b) => match op {
                BinaryOp::Add => add(a.diff(var), b.diff(var)),
                BinaryOp::Sub => sub(a.diff(var), b.diff(var)),
                BinaryOp::Mul => add(
                    mul(a.diff(var), b.clone()),
                    mul(a.clone(), b.diff(var)),
                ),
                BinaryOp::Div => {
                    // (a/b)' = a'/b - a b'/b^2
                    sub(
                        div(a.diff(var), b.clone()),
                        div(mul(a.clone(), b.diff(var)), b.powi(2)),
                    )
                }
                BinaryOp::Pow => {
                    if let Some(c) = b.as_const() {
                        // (a^c)' = c a^(c-1) a'
                        mul(
                            mul(Expr::constant(c), a.pow(Expr::constant(c - 1.0))),
                            a.diff(var),
                        )
                    } else {
                        // a^b = exp(b log a):
                        // (a^b)' = a^b (b' log a + b a'/a)
                        mul(
                            self.clone(),
                            add(
                                mul(b.diff(var), a.log()),
                                div(mul(b.clone(), a.diff(var)), a.clone()),
                            ),
                        )
                    }
                }
            },
        }
    }

    /// Binds the expression's variables to slots of `vars`, for fast repeated
    /// evaluation on flat `&[f64]` buffers. Fails if a free variable is not
    /// listed.
    pub fn bind(&self, vars: &[String]) -> Result<BoundExpr, EvalError> {
        let node = self.bind_node(vars)?;
        Ok(BoundExpr {
            node,
            source: self.clone(),
        })
    }

    fn bind_node(&self, vars: &[String]) -> Result<BoundNode, EvalError> {
        Ok(match self.node() {
            Node::Const(c) => BoundNode::Const(*c),
            Node::Var(n) => {
                let slot = vars
                    .iter()
                    .position(|v| v == n)
                    .ok_or_else(|| EvalError::Unassigned { name: n.clone() })?;
                BoundNode::Slot(slot)
            }
            Node::Unary(op, e) => BoundNode::Unary(*op, Box::new(e.bind_node(vars)?)),
            Node::Binary(op, a, b) => BoundNode::Binary(
                *op,
                Box::new(a.bind_node(vars)?),
                Box::new(b.bind_node(vars)?),
            ),
        })
    }
}

fn apply_unary(op: UnaryOp, v: f64) -> Result<f64, String> {
    match op {
        UnaryOp::Neg => Ok(-v),
        UnaryOp::Sin => Ok(v.sin()),
        UnaryOp::Cos => Ok(v.cos()),
        UnaryOp::Tan => Ok(v.tan()),
        UnaryOp::Exp => Ok(v.exp()),
        UnaryOp::Log => {
            if v <= 0.0 {
                Err(format!("logarithm of non-positive value {v}"))
            } else {
                Ok(v.ln())
            }
        }
        UnaryOp::Sqrt => {
            if v < 0.0 {
                Err(format!("square root of negative value {v}"))
            } else {
                Ok(v.sqrt())
            }
        }
    }
}

fn apply_binary(op: BinaryOp, a: f64, b: f64) -> Result<f64, String> {
    match op {
        BinaryOp::Add => Ok(a + b),
        BinaryOp::Sub => Ok(a - b),
        BinaryOp::Mul => Ok(a * b),
        BinaryOp::Div => {
            if b == 0.0 {
                Err("division by zero".to_string())
            } else {
                Ok(a / b)
            }
        }
        BinaryOp::Pow => {
            if a < 0.0 && b.fract() != 0.0 {
                Err(format!("negative base {a} raised to non-integer exponent {b}"))
            } else if a == 0.0 && b < 0.0 {
                Err("zero raised to negative exponent".to_string())
            } else {
                Ok(a.powf(b))
            }
        }
    }
}

// Light folding constructors used by `diff` to keep intermediate trees small.
// Full normalization is `simplify`'s job.

pub(crate) fn add(a: Expr, b: Expr) -> Expr {
    if a.is_zero() {
        return b;
    }
    if b.is_zero() {
        return a;
    }
    Expr::binary(BinaryOp::Add, a, b)
}

pub(crate) fn sub(a: Expr, b: Expr) -> Expr {
    if b.is_zero() {
        return a;
    }
    if a.is_zero() {
        return neg(b);
    }
    Expr::binary(BinaryOp::Sub, a, b)
}

pub(crate) fn mul(a: Expr, b: Expr) -> Expr {
    if a.is_zero() || b.is_zero() {
        return Expr::zero();
    }
    if a.is_one() {
        return b;
    }
    if b.is_one() {
        return a;
    }
    Expr::binary(BinaryOp::Mul, a, b)
}

pub(crate) fn div(a: Expr, b: Expr) -> Expr {
    if a.is_zero() {
        return Expr::zero();
    }
    if b.is_one() {
        return a;
    }
    Expr::binary(BinaryOp::Div, a, b)
}

pub(crate) fn neg(e: Expr) -> Expr {
    if let Some(c) = e.as_const() {
        return Expr::constant(-c);
    }
    if let Node::Unary(UnaryOp::Neg, inner) = e.node() {
        return inner.clone();
    }
    Expr::unary(UnaryOp::Neg, e)
}

impl std::ops::Add for Expr {
    type Output = Expr;
    fn add(self, rhs: Expr) -> Expr {
        Expr::binary(BinaryOp::Add, self, rhs)
    }
}

impl std::ops::Sub for Expr {
    type Output = Expr;
    fn sub(self, rhs: Expr) -> Expr {
        Expr::binary(BinaryOp::Sub, self, rhs)
    }
}

impl std::ops::Mul for Expr {
    type Output = Expr;
    fn mul(self, rhs: Expr) -> Expr {
        Expr::binary(BinaryOp::Mul, self, rhs)
    }
}

impl std::ops::Div for Expr {
    type Output = Expr;
    fn div(self, rhs: Expr) -> Expr {
        Expr::binary(BinaryOp::Div, self, rhs)
    }
}

impl std::ops::Neg for Expr {
    type Output = Expr;
    fn neg(self) -> Expr {
        Expr::unary(UnaryOp::Neg, self)
    }
}

enum BoundNode {
    Const(f64),
    Slot(usize),
    Unary(UnaryOp, Box<BoundNode>),
    Binary(BinaryOp, Box<BoundNode>, Box<BoundNode>),
}

/// An expression with variables resolved to slot indices, for fast repeated
/// evaluation inside solvers and grid scans.
pub struct BoundExpr {
    node: BoundNode,
    source: Expr,
}

impl BoundExpr {
    pub fn eval(&self, values: &[f64]) -> Result<f64, EvalError> {
        eval_bound(&self.node, values).map_err(|reason| EvalError::Domain {
            reason,
            subexpr: self.source.to_string(),
        })
    }

    pub fn source(&self) -> &Expr {
        &self.source
    }
}

fn eval_bound(node: &BoundNode, values: &[f64]) -> Result<f64, String> {
    match node {
        BoundNode::Const(c) => Ok(*c),
        BoundNode::Slot(i) => Ok(values[*i]),
        BoundNode::Unary(op, e) => apply_unary(*op, eval_bound(e, values)?),
        BoundNode::Binary(op, a, b) => {
            apply_binary(*op, eval_bound(a, values)?, eval_bound(b, values)?)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::points::PointTuple;

    fn pt(pairs: &[(&str, f64)]) -> PointTuple {
        PointTuple::from_pairs(pairs.iter().map(|(n, v)| (n.to_string(), *v)))
    }

    #[test]
    fn expressions_are_shareable_across_threads() {
        fn assert_send_sync<T: Send + Sync>() {}
        assert_send_sync::<Expr>();
        assert_send_sync::<crate::mechanics::StaticsModel>();
    }

    #[test]
    fn evaluate_polynomial() {
        let e = parse("x^2 + 1").unwrap();
        assert_eq!(e.evaluate(&pt(&[("x", 2.0)])).unwrap(), 5.0);
    }

    #[test]
    fn evaluate_division_by_zero_is_reported() {
        let e = parse("1/x").unwrap();
        let err = e.evaluate(&pt(&[("x", 0.0)])).unwrap_err();
        match err {
            EvalError::Domain { reason, subexpr } => {
                assert!(reason.contains("division by zero"));
                assert_eq!(subexpr, "1/x");
            }
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn evaluate_log_domain_error() {
        let e = parse("log(x)").unwrap();
        let err = e.evaluate(&pt(&[("x", -1.0)])).unwrap_err();
        assert!(matches!(err, EvalError::Domain { .. }));
    }

    #[test]
    fn evaluate_unassigned_variable() {
        let e = parse("x + y").unwrap();
        let err = e.evaluate(&pt(&[("x", 1.0)])).unwrap_err();
        assert_eq!(
            err,
            EvalError::Unassigned {
                name: "y".to_string()
            }
        );
    }

    #[test]
    fn negative_base_non_integer_exponent_rejected() {
        let e = parse("x^0.5").unwrap();
        assert!(matches!(
            e.evaluate(&pt(&[("x", -2.0)])),
            Err(EvalError::Domain { .. })
        ));
        // Integer exponents on negative bases are fine.
        let sq = parse("x^2").unwrap();
        assert_eq!(sq.evaluate(&pt(&[("x", -3.0)])).unwrap(), 9.0);
    }

    #[test]
    fn diff_power_rule() {
        let e = parse("0.5*v^2").unwrap();
        let d = e.diff("v").simplify();
        assert_eq!(d, Expr::var("v"));
    }

    #[test]
    fn diff_of_harmonic_lagrangian() {
        let e = parse("0.5*(v^2 - x^2)").unwrap();
        let dx = e.diff("x").simplify();
        assert_eq!(dx.to_string(), "-x");
    }

    #[test]
    fn diff_of_absent_variable_is_zero() {
        let e = parse("sin(x)*exp(x)").unwrap();
        assert!(e.diff("z").is_zero());
        let c = parse("3.5").unwrap();
        assert!(c.diff("x").is_zero());
    }

    #[test]
    fn diff_matches_reference_value() {
        // d/dx sin(x)*y at (0.3, 2) = 2 cos(0.3)
        let e = parse("sin(x)*y").unwrap();
        let d = e.diff("x");
        let v = d.evaluate(&pt(&[("x", 0.3), ("y", 2.0)])).unwrap();
        assert!((v - 2.0 * 0.3f64.cos()).abs() < 1e-14);
    }

    #[test]
    fn evaluation_is_deterministic() {
        let e = parse("sin(x)*exp(-x) + x^3/7").unwrap();
        let p = pt(&[("x", 0.7312)]);
        let a = e.evaluate(&p).unwrap();
        let b = e.evaluate(&p).unwrap();
        assert_eq!(a.to_bits(), b.to_bits());
    }

    #[test]
    fn bound_eval_matches_tree_eval() {
        let e = parse("x*y + sin(x) - y/3").unwrap();
        let bound = e.bind(&["x".to_string(), "y".to_string()]).unwrap();
        let v1 = bound.eval(&[1.25, -0.5]).unwrap();
        let v2 = e.evaluate(&pt(&[("x", 1.25), ("y", -0.5)])).unwrap();
        assert_eq!(v1.to_bits(), v2.to_bits());
    }

    #[test]
    fn subst_replaces_all_occurrences() {
        let e = parse("x^2 + x*y").unwrap();
        let s = e.subst("x", &parse("u + 1").unwrap());
        let v = s.evaluate(&pt(&[("u", 1.0), ("y", 3.0)])).unwrap();
        assert_eq!(v, 4.0 + 6.0);
    }
}
