//! Spectral Galerkin solver for the nondimensional three-dimensional
//! micropolar Rayleigh-Benard system on a horizontally periodic channel,
//! together with an auditing harness for the explicit a priori estimates
//! (maximum principle, energy bounds, enstrophy absorbing ball, temperature
//! gradient bounds) and an attractor laboratory that samples omega-limit
//! sets and measures the K -> 0 convergence of attractors to the Newtonian
//! case.
//!
//! The unknowns are the velocity `u` (Stokes eigenbasis), the microrotation
//! `gamma` (vector Laplacian eigenbasis) and the shifted temperature `theta`
//! (scalar Laplacian eigenbasis), all expanded in eigenfunctions of their
//! operator on `(0,ax) x (0,ay) x (0,1)` with periodic lateral and
//! homogeneous Dirichlet vertical boundary conditions.

pub mod attractor;
pub mod audit;
pub mod basis;
pub mod error;
pub mod field;
pub mod integrate;
pub mod io;
pub mod params;
pub mod util;

pub use error::Error;
pub use params::{DimensionlessParams, HReport, PhysicalParams};

/// Smallest eigenvalue of all three operators on the channel.
pub const LAMBDA_1: f64 = std::f64::consts::PI * std::f64::consts::PI;

/// Result alias used throughout the crate.
pub type Result<T> = std::result::Result<T, Error>;
