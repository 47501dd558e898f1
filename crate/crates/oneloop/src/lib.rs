//! Symbolic-numeric toolkit for one-loop Feynman parametric integrals.
//!
//! The crate builds graph polynomials from one-loop diagrams, attaches the
//! quadric geometry of the second Symanzik polynomial, produces coaction-style
//! decompositions of the parametric integrand, reduces higher-point forms to
//! box and lower forms by exact Griffiths-style integration by parts, and
//! verifies everything three ways: exact algebra, high-precision quadrature,
//! and integer-relation detection on numerically evaluated constants.

pub mod rat;
pub mod poly;
pub mod graph;
pub mod symanzik;
pub mod coaction;
pub mod lll;
pub mod relations;
pub mod expr;
pub mod numeric;
pub mod griffiths;
