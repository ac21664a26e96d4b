//! Computing in Lipschitz-free spaces over finite pointed metric spaces.
//!
//! - [`metric`]: validated spaces, transformations, metric-condition checkers.
//! - [`free`]: molecules and the transport norm by dual LP, network simplex,
//!   and the exact line formula, with duality certificates.
//! - [`lip`]: Lipschitz functions, McShane extension, plateaus, moduli.
//! - [`operators`]: linearized maps `f̂`, rank and kernel, support diagnostics.
//! - [`constructions`]: the Cantor-type kernel witnesses and related families.
//! - [`io`]: JSON schemas.

pub mod constructions;
pub mod error;
pub mod free;
pub mod io;
pub mod lip;
pub mod metric;
pub mod operators;
pub mod scalar;

pub use error::{Error, Result};
pub use free::Molecule;
pub use lip::LipFunction;
pub use metric::FiniteMetricSpace;
pub use operators::PointMap;
pub use scalar::{ArithmeticMode, Rational, Scalar};
