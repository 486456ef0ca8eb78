//! Numerically exact non-Markovian dynamics of a small quantum system
//! linearly coupled to a harmonic bath.
//!
//! The reduced system history over a finite memory window is stored as an
//! augmented density tensor, held as a matrix product state and advanced one
//! timestep at a time by a matrix product operator built from the discretised
//! influence functional. Singular-value truncation after every step keeps the
//! representation compact.

pub mod analysis;
pub mod bath;
pub mod engine;
pub mod error;
pub mod influence;
pub mod models;
pub mod network;
pub mod tensor;

pub use error::{Result, TempoError};
pub use num_complex::Complex64;
