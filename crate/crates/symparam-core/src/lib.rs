//! Core library for simplex-conditioned multi-loss training.
//!
//! A model `f(x, S)` takes a simplex vector `S = (s_1..s_k)` both as an
//! input condition and as the weights of a linear combination of `k` loss
//! functions. Everything here is pure compute over 64-bit floats: a small
//! reverse-mode autodiff tape, Dirichlet sampling over the simplex, the
//! weighted-objective combinator, an Adam trainer, the 1-D toy experiment
//! (regression + classification with a single network), and the channel
//! attention conditioning layer.
//!
//! The crate is `no_std` + `alloc`; file formats, CLI, and persistence live
//! in the companion `symparam-cli` crate.

#![no_std]

extern crate alloc;

#[cfg(any(test, feature = "std"))]
extern crate std;

#[cfg(test)]
pub mod testutil;

pub mod adam;
pub mod ccam;
pub mod error;
pub mod objective;
pub mod rng;
pub mod sym;
pub mod tensor;
pub mod toy;
pub mod train;

pub use error::{Error, Result};
pub use sym::{Concentration, SymParameter};
pub use tensor::{Tape, Tensor, TensorId};
