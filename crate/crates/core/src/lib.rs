//! Exact evaluation of the multinomial-covariance Gaussian product inequality.
//!
//! Everything in this crate works over arbitrary-precision rationals. The
//! modules build on each other bottom-up:
//!
//! - [`combinatorics`]: binomials, Stirling numbers of the second kind,
//!   falling factorials and their product expansion, perfect pairings.
//! - [`multinomial`]: pmf, factorial moments, central mixed moments through
//!   the Stirling expansion, and a brute-force expectation oracle.
//! - [`gaussian`]: Wick/Isserlis moments of `N(0, diag(p) - p p^T)` and the
//!   limiting product-inequality gap.
//! - [`condition`]: the finite combinatorial condition (constrained Stirling
//!   sum minus the diagonal product) with pruned enumeration.

pub mod budget;
pub mod combinatorics;
pub mod condition;
pub mod error;
pub mod exact;
pub mod gaussian;
pub mod multinomial;

pub use budget::Budget;
pub use error::{Error, Result};
pub use exact::ExactRational;
