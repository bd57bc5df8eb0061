//! Numerical toolkit for the (p,q)-Baskakov operator and its King-type
//! modification that reproduces `x^2`.

pub mod analysis;
pub mod baskakov;
pub mod cli;
mod error;
pub mod expr;
mod function;
pub mod king;
pub mod pq;
pub mod sum;

pub use baskakov::{eval_series, BasisTerm, BasisTerms, SeriesEval, TruncationPolicy};
pub use error::{Error, Result};
pub use expr::FunctionExpr;
pub use function::RealFn;
pub use king::{eval_king, r_n, CentralMoments};
pub use pq::PQParams;
