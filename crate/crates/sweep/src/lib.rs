//! Sweeps, convergence tables and the invariant battery for the multinomial
//! GPI condition, built on `gpi-core`.

pub mod convergence;
pub mod output;
pub mod sampler;
pub mod sweep;
pub mod verify;
