//! Koopman-accelerated variational quantum optimization.
//!
//! A statevector simulator drives VQE-style gradient descent; linear and
//! neural Koopman operators fitted to the parameter trajectory forecast
//! future iterates, and a controlled restart keeps the best forecast point.

#![allow(clippy::neg_cmp_op_on_partial_ord)] // `!(x > y)` also rejects NaN

pub mod bench;
pub mod error;
pub mod gradients;
pub mod koopman;
pub mod neural;
pub mod noise;
pub mod optimizers;
pub mod pauli;
pub mod quack_loop;

pub use error::{QuackError, Result};
