//! Variable registry with role tags.

use thiserror::Error;

use crate::expr::Expr;

/// The role a chart variable plays in a model.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VarRole {
    /// Independent/base coordinate (x^i in field theory, time-like).
    Base,
    /// Configuration/fiber coordinate.
    Fiber,
    /// Velocity or first-jet coordinate.
    Velocity,
    /// Momentum coordinate.
    Momentum,
    /// Anything else: rates, accelerations, second jets.
    Auxiliary,
}

#[derive(Debug, Clone, Error, PartialEq)]
pub enum VarTableError {
    #[error("variable `{0}` registered twice")]
    Duplicate(String),
    #[error("expression uses unregistered variable `{0}`")]
    Unregistered(String),
}

/// Ordered list of variable names with role tags. Names are unique; every
/// variable appearing in a model expression must be registered here.
#[derive(Debug, Clone, Default)]
pub struct VarTable {
    entries: Vec<(String, VarRole)>,
}

impl VarTable {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn register(&mut self, name: impl Into<String>, role: VarRole) -> Result<(), VarTableError> {
        let name = name.into();
        if self.contains(&name) {
            return Err(VarTableError::Duplicate(name));
        }
        self.entries.push((name, role));
        Ok(())
    }

    pub fn register_all<I, S>(&mut self, names: I, role: VarRole) -> Result<(), VarTableError>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        for n in names {
            self.register(n, role)?;
        }
        Ok(())
    }

    pub fn contains(&self, name: &str) -> bool {
        self.entries.iter().any(|(n, _)| n == name)
    }

    pub fn role(&self, name: &str) -> Option<VarRole> {
        self.entries
            .iter()
            .find(|(n, _)| n == name)
            .map(|(_, r)| *r)
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.entries.iter().map(|(n, _)| n.as_str())
    }

    pub fn names_with_role(&self, role: VarRole) -> Vec<String> {
        self.entries
            .iter()
            .filter(|(_, r)| *r == role)
            .map(|(n, _)| n.clone())
            .collect()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Checks that every free variable of `e` is registered.
    pub fn validate(&self, e: &Expr) -> Result<(), VarTableError> {
        for v in e.free_vars() {
            if !self.contains(&v) {
                return Err(VarTableError::Unregistered(v));
            }
        }
        Ok(())
    }
}
