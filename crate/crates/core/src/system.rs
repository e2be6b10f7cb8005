//! Implicit equation systems produced by the derivation engines.

use crate::expr::{EvalError, Expr};
use crate::points::PointTuple;

/// Whether an equation constrains rates of the evolved variables or only
/// state and auxiliary unknowns.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EqClass {
    /// No rate symbol occurs; the equation must hold pointwise and is used
    /// for initial-data consistency.
    Algebraic,
    /// Contains at least one rate symbol (`pdot_*`, momentum jets).
    Differential,
}

/// Variable lists for a mechanics-shaped system over `(x, p, xdot, pdot)`,
/// with velocities standing in for `xdot`.
#[derive(Debug, Clone)]
pub struct MechStructure {
    pub positions: Vec<String>,
    pub momenta: Vec<String>,
    pub velocities: Vec<String>,
    pub momentum_rates: Vec<String>,
}

/// The phase dynamics as a list of residual equations `e = 0` over named
/// variables, with per-equation classification. Immutable after
/// construction.
#[derive(Debug, Clone)]
pub struct ImplicitSystem {
    pub equations: Vec<Expr>,
    pub eq_class: Vec<EqClass>,
    /// Present when the system has the 2n mechanics shape accepted by the
    /// phase integrator.
    pub mech: Option<MechStructure>,
}

impl ImplicitSystem {
    pub fn new(equations: Vec<Expr>, rate_symbols: &[String], mech: Option<MechStructure>) -> Self {
        let eq_class = equations
            .iter()
            .map(|e| {
                if rate_symbols.iter().any(|r| e.contains_var(r)) {
                    EqClass::Differential
                } else {
                    EqClass::Algebraic
                }
            })
            .collect();
        ImplicitSystem {
            equations,
            eq_class,
            mech,
        }
    }

    pub fn len(&self) -> usize {
        self.equations.len()
    }

    pub fn is_empty(&self) -> bool {
        self.equations.is_empty()
    }

    /// Stable text form, one `lhs = 0` line per equation.
    pub fn text_lines(&self) -> Vec<String> {
        self.equations.iter().map(|e| e.equation_text()).collect()
    }

    pub fn latex_lines(&self) -> Vec<String> {
        self.equations.iter().map(|e| e.equation_latex()).collect()
    }

    /// Evaluates every residual at the assignment.
    pub fn residual_at(&self, point: &PointTuple) -> Result<Vec<f64>, EvalError> {
        self.equations.iter().map(|e| e.evaluate(point)).collect()
    }

    pub fn max_residual_at(&self, point: &PointTuple) -> Result<f64, EvalError> {
        Ok(self
            .residual_at(point)?
            .into_iter()
            .fold(0.0f64, |m, r| m.max(r.abs())))
    }
}
