//! Cascade channel estimation for RIS-assisted mmWave links.
//!
//! The crate builds the physical BS–RIS–MS channel, maps it to a sparse
//! angular-domain vector observed through a Kronecker pilot matrix, and
//! recovers it with an exhaustive joint-typicality search. The Cramér–Rao
//! lower bound and an analytic MSE upper bound are provided alongside, and
//! [`harness`] runs seeded Monte Carlo sweeps over the slot count `K` and SNR.

pub mod channel;
pub mod error;
pub mod estimator;
pub mod harness;
pub mod numerics;
pub mod random;
pub mod sensing;

pub use error::{Error, Result};
