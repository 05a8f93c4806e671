//! Chart-based exterior calculus for b-symplectic geometry.

pub mod bgeometry;
pub mod calculus;
pub mod chart;
pub mod construct;
pub mod cosymplectic;
pub mod dehn;
pub mod error;
pub mod expr;
pub mod field;
pub mod report;
pub mod runner;
pub mod scenario;
pub mod tol;

pub use chart::{ChartDomain, ChartMap, Coordinate, ExprMap, NumericMap, SampleGrid};
pub use error::{Error, Result};
pub use expr::Expr;
pub use field::{FormField, MultivectorField};
pub use report::{Residual, VerificationReport};
