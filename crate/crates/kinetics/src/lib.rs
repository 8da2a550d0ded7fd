//! Kinetics of a homogeneous weakly interacting Bose gas.
//!
//! The crate covers three layers of the same physical system:
//!
//! * the isotropic quantum Boltzmann (Uehling-Uhlenbeck) equation on a
//!   radial energy grid, integrated adaptively up to finite-time blow-up,
//!   with self-similar exponent extraction ([`collision`], [`dynamics`],
//!   [`selfsim`]);
//! * the discrete-momentum-lattice pair-correlation system that the kinetic
//!   equation approximates, in coupled, closed-memory and Markovian-limit
//!   forms ([`lattice`], [`kernel`]);
//! * the boundary-layer rescalings that govern where the kinetic
//!   description fails near blow-up, with a truncated cumulant hierarchy
//!   ([`boundary`]).

pub mod bose;
pub mod boundary;
pub mod collision;
pub mod dynamics;
pub mod error;
pub mod grid;
pub mod kernel;
pub mod lattice;
pub mod mc;
pub mod params;
pub mod selfsim;

pub use error::KineticsError;
