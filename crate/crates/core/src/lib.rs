//! Exact computations with mod-p Chow motives of generalized Severi-Brauer
//! varieties and flag varieties of central simple algebras.

pub mod arith;
pub mod candim;
pub mod cli;
pub mod csa;
pub mod error;
pub mod motive;
mod serde_dec;
pub mod split;
pub mod tower;

pub use error::{Error, Result};
