//! Quasipoints and observable functions of the block algebras `⊕_{k=1}^m M_n(ℂ)`.

pub mod algebra;
pub mod error;
pub mod io;
pub mod lattice;
pub mod masa;
pub mod matrix;
pub mod observable;
pub mod rng;
pub mod spectrum;
pub mod verify;

pub use error::{Error, Result};
