//! Symbolic-numeric engine for variational mechanics and first-order field
//! theory.
//!
//! Given a Lagrangian or Hamiltonian in coordinates, the crate derives the
//! phase dynamics, Legendre maps, Euler-Lagrange equations (ODE and
//! first-order field PDE) and the Hamiltonian side, and verifies the
//! coordinate identities and canonical isomorphisms of the underlying
//! geometry with executable property checks and numeric oracles.
//!
//! Module map:
//!
//! * [`expr`] — immutable symbolic expressions: parsing, differentiation,
//!   simplification, substitution, numeric evaluation.
//! * [`bundlemaps`] — the canonical coordinate maps of the triple (kappa,
//!   alpha, beta, the momentum-flip `R`, tangent pairings) for mechanics and
//!   field theory.
//! * [`affinegeom`] — finite-dimensional affine phase spaces and the
//!   canonical symplectomorphism `P V†_W ≅ T*V`, verified numerically.
//! * [`mechanics`] — statics, Lagrangian/Hamiltonian mechanics, the Legendre
//!   transform and the action-variation identity.
//! * [`fieldtheory`] — first-order field theory on a trivialized fibration:
//!   field dynamics, Euler-Lagrange PDE, Hamilton field equations, Hodge
//!   star, grid residuals.
//! * [`numerics`] — Newton solver, implicit-midpoint integrator for
//!   (possibly singular) phase dynamics, finite-difference oracles.
//! * [`models`] — built-in example models with golden derived equations.
//! * [`suites`] — seeded property-check suites behind the `check` command.

pub mod affinegeom;
pub mod bundlemaps;
pub mod expr;
pub mod fieldtheory;
pub mod mechanics;
pub mod models;
pub mod numerics;
pub mod points;
pub mod suites;
pub mod system;
pub mod vartable;

pub use expr::{parse, Expr};
pub use points::PointTuple;
