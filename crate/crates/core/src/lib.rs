//! Scalar waves on the Schwarzschild exterior: characteristic evolution of
//! spherical-harmonic modes, the horizon and null-infinity radiation fields,
//! and the energy, support, tail and regularity diagnostics built on them.

pub mod analysis;
pub mod cli;
pub mod evolve;
pub mod geometry;
pub mod modes;
pub mod quadrature;
pub mod radiation;
