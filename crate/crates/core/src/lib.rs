//! Spherical-harmonic analysis of gradient descent for one-hidden-layer
//! networks on the unit sphere, and a statistical-query laboratory built on
//! hard Legendre concept families.

pub mod activation;
pub mod error;
pub mod gd;
pub mod operator;
pub mod quadrature;
pub mod rng;
pub mod spectrum;
pub mod sq;
pub mod sphere;

pub use error::{Error, Result};
