//! Symbolic verification of the source-term group classification of the
//! Boltzmann equation.
//!
//! The crate mechanically audits tabulated source functions and invariant
//! solution representations for the kinetic equation
//! `f_t + v . grad_x f - J(f,f) = q`: it builds the determining equations for
//! each subalgebra of the symmetry algebra admitted by the source-free
//! equation, checks every table row against them, verifies the coordinate
//! transformations behind the tables, and backs the symbolic work with
//! Monte-Carlo evaluation of the collision integral for the identities a
//! rewrite system cannot certify.
//!
//! See the `book/` guide for a narrative walkthrough; the `lieboltz` binary
//! exposes the audits on the command line.

pub mod catalog;
pub mod cli;
pub mod expr;
pub mod classify;
pub mod collision;
pub mod geometry;
pub mod liealg;
pub mod report;

pub use expr::Expr;
