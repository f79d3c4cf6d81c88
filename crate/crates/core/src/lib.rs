//! Submanifold Dirac operators for surfaces immersed in four-dimensional
//! Euclidean space.
//!
//! The pipeline runs from a parsed [`ImmersionSpec`](expr::ImmersionSpec)
//! through moving frames and connection coefficients ([`geometry`]), spin
//! lifts of the frame ([`clifford`]), the pointwise and discretised Dirac
//! operator ([`dirac`]) to the spinor reconstruction of tangent vectors
//! ([`weierstrass`]).

pub mod clifford;
pub mod corpus;
pub mod dirac;
pub mod expr;
pub mod geometry;
pub mod weierstrass;
