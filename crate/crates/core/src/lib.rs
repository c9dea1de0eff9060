//! Exact generalized power series of finite rank with Hardy-type
//! derivations, differential polynomials over them, and a term-by-term
//! solver that either extends a solution prefix or detects stabilization.

pub mod error;
pub mod exponent;
mod parse;
pub mod conjugation;
pub mod derivation;
pub mod diffpoly;
pub mod grid;
pub mod poly;
pub mod series;
pub mod solver;

pub use error::{Error, Result};
pub use exponent::{Exponent, MultiIndex, Q};
pub use series::Series;
