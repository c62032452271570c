#![allow(clippy::neg_cmp_op_on_partial_ord)]

//! Objective priors for Matérn kriging and finite-state compromise theory.

pub mod compromise;
pub mod error;
pub mod experiments;
pub mod inference;
pub mod kernels;
pub mod objective;
pub mod optim;
pub mod pigs;
pub mod quadrature;
pub mod rng;
pub mod special;

pub use error::{Error, Result};
