//! Lyapunov spectra of Markov interval maps with parabolic fixed points.
//!
//! The crate computes the pressure `P(d) = P(-d log|f'|)` of a Markov interval
//! map, its Legendre transform `F(α)`, Gibbs and conformal measures, samples
//! points with prescribed oscillating Lyapunov exponents, and estimates the
//! entropy of the zero-exponent set.

pub mod config;
pub mod entropy;
pub mod error;
pub mod maps;
pub mod measures;
pub mod numeric;
pub mod pressure;
pub mod selftest;
pub mod spectrum;
pub mod symbolic;
pub mod wmeasure;

pub use error::{Error, Result};
pub use maps::MapModel;
pub use symbolic::{TransitionMatrix, Word};
