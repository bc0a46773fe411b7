//! Exact symbolic computation over `Z_2^n`-graded superdomains.

pub mod atlas;
pub mod coeff;
pub mod degree;
pub mod error;
pub mod findim;
pub mod format;
pub mod matrix;
pub mod morphism;
pub mod par;
pub mod parse;
pub mod report;
pub mod series;
pub mod splitting;

pub use coeff::{CoeffExpr, Rational, Realizations};
pub use degree::{Degree, DegreeOrder, Parity, Sign, Signature, VarRef, Variable};
pub use error::{Error, Result};
pub use matrix::CoeffMatrix;
pub use morphism::{compose, invert, jacobian, pullback, transformation_template, Morphism};
pub use par::Execution;
pub use series::{GSeries, JOrder, Monomial};
