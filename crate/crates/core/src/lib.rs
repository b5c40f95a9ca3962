//! Exact computation with finitely-presented persistence modules.
//!
//! A persistence module is presented here by finite data on a rational grid:
//! a dimension for each grid cell and a structure matrix over a prime field
//! for each consecutive pair of cells. On top of that presentation the crate
//! provides
//!
//! - interval decomposition and persistence diagrams ([`decomposition`]),
//! - interleaving and bottleneck distances with exact rational values,
//!   plus a brute-force interleaving oracle ([`metrics`]),
//! - finite metric spaces, their spacetime posets and world lines
//!   ([`spacetime`]),
//! - coherent systems of modules, pointwise left/right/image Kan extensions
//!   over the spacetime poset, and 1-Lipschitz extension and interpolation
//!   ([`kan`]),
//! - Vietoris-Rips and Cech complexes built in the space of persistence
//!   modules ([`complexes`]).
//!
//! All arithmetic is exact: grid coordinates are arbitrary-precision
//! rationals and matrix entries live in a prime field F_p. There are no
//! tolerances anywhere.

pub mod complexes;
pub mod decomposition;
pub mod error;
pub mod kan;
pub mod linalg;
pub mod metrics;
pub mod module;
pub mod rational;
pub mod spacetime;

pub use error::Error;
pub use rational::{ExtRational, Rational};
