//! Operator-level information measures for discretised imaging chains.
//!
//! An imaging system is modelled as an ordered composition of linear (or
//! locally linearised) stages acting on an N-dimensional object space. The
//! singular spectrum of the composed operator determines three measures:
//! spectral entropy of the normalised mode weights, information capacity
//! (log of the count of modes above a recoverability threshold), and an
//! irreversibility index (the fraction of modes lost at the operating
//! point). This crate holds the numerics; IO, file formats, and the CLI
//! live in the companion `opgauge` crate.
//!
//! The crate is `no_std` (with `alloc`) so the numerical core stays free
//! of platform dependencies; transcendentals come from `libm`.

#![no_std]
#![warn(missing_docs)]

extern crate alloc;

#[cfg(test)]
extern crate std;

pub mod chain;
pub mod error;
pub mod matrix;
pub mod measures;
pub mod noise;
pub mod operator;
pub mod spectral;

mod dft;
mod rng;

pub use error::{Error, Result};
pub use matrix::Matrix;
