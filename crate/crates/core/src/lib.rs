//! Exact finite-dimensional moment relations for Gaussian random matrix
//! models.
//!
//! The crate turns the Wick-calculus expansions of products of normalized
//! traces into transfer maps between moment vectors. Maps are exact: every
//! entry is a Laurent polynomial in the matrix dimensions with rational
//! coefficients. Composing them gives the moments of chained models;
//! inverting them yields unbiased estimators of the moments of the
//! deterministic parts from observed data.

pub mod cli;
pub mod coeffring;
pub mod deconv;
pub mod combinat;
pub mod error;
pub mod estimators;
pub mod matfile;
pub mod mcoracle;
pub mod model;
pub mod momentspace;
pub mod transfer;

pub use error::{Error, Result};
