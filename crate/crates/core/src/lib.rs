//! Spectral asymptotics toolkit for Schrödinger operators −Δ + b with
//! periodic and quasi-periodic potentials.
//!
//! The crate covers frequency-lattice geometry, resonance zones, a
//! quasi-periodic symbol calculus with the gauge transform built on top of
//! it, local heat invariants, and a plane-wave Bloch oracle with the
//! numerical harnesses that compare the two.

pub mod bloch_oracle;
pub mod error;
pub mod exact;
pub mod frequency_lattice;
pub mod gauge_transform;
pub mod heat_invariants;
pub mod potential;
pub mod resonance_geometry;
pub mod spectral_validation;
pub mod symbol_calculus;

pub use error::{Error, Result};
