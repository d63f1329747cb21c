//! Log-concave maximum likelihood estimation with certified heights.
//!
//! The optimal log-density is a tent function over the sample points. This
//! crate computes it, turns its critical equations into polynomial-exponential
//! systems and certifies approximate solutions with Smale's alpha theory.

pub mod alphacert;
pub mod error;
pub mod geometry;
pub mod lambert;
pub mod linalg;
pub mod numeric;
pub mod objective;
pub mod polysys;
pub mod refine;
pub mod scorematrix;
pub mod solver;

pub use error::{Error, Result};
