//! Frequency-domain simulation of three-phase stator windings with emulated
//! winding faults.
//!
//! The crate builds a distributed ladder model of a star-connected stator,
//! attaches turn-to-turn, phase-to-phase and phase-to-ground shorts at tap
//! points, and evaluates
//!
//! * the common-mode (CM) impedance seen between the tied phase terminals and
//!   ground ([`cm`]),
//! * the CM current driven by an inverter CM source through the inverter,
//!   cable and motor CM impedances, and the faulted/healthy current ratio in
//!   dB ([`cm`]),
//! * the CM current produced by a purely differential-mode trapezoidal
//!   excitation, i.e. DM-to-CM conversion ([`dm`]).
//!
//! Everything rests on the small AC circuit solver in [`circuit`].

pub mod circuit;
pub mod cli;
pub mod cm;
pub mod config;
pub mod dm;
pub mod fault;
pub mod io;
pub mod motor;

pub use num_complex::Complex64;
