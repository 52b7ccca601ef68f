//! Numerical toolkit for wave-packet-transform characterization of wave
//! front sets under the linearized KdV flow
//! `u_t + u_xxx + (a u)_x = 0`.
//!
//! The pieces: periodic spectral fields and FFT conventions ([`field`]),
//! soliton-derived variable coefficients ([`coefficient`]), exact free-flow
//! and window propagators ([`propagator`]), the forward/inverse wave packet
//! transform ([`wpt`]), a Strang split-step solver ([`solver`]), bicharacteristic
//! tracing ([`characteristics`]), and the two-sided singularity detector with
//! its calibration and reporting ([`detector`]).

pub mod characteristics;
pub mod coefficient;
pub mod config;
pub mod detector;
pub mod error;
pub mod field;
pub mod propagator;
pub mod solver;
pub mod special;
pub mod verify;
pub mod wpt;

pub use error::{Error, Result};
