//! Synthesis and simulation core for cloud-coordinated, differentially
//! private LQG control.
//!
//! Agents privatize their outputs with the Gaussian mechanism, a cloud runs a
//! steady-state Kalman filter on the privatized data and applies the
//! certainty-equivalent LQ gain, and a passive eavesdropper sees every message
//! on the wire. This crate holds the numerics for all of that:
//!
//! * [`privacy`]: Q-function, calibration of the noise scale, privatization and
//!   an analytic check of the (ε, δ) inequality.
//! * [`riccati`]: control and filtering Riccati equations.
//! * [`lqg`]: the cloud's estimator and controller.
//! * [`network`]: agent models and the block-diagonal network model.
//! * [`sim`]: the round-synchronous agent/cloud protocol and its traces.
//! * [`entropy`]: log-det bounds on the a priori error covariance.
//!
//! The crate is `no_std` and only needs `alloc`; file formats and the command
//! line live in the companion `dplqg` crate.

#![no_std]

extern crate alloc;

pub mod entropy;
pub mod error;
pub mod linalg;
pub mod lqg;
pub mod network;
pub mod privacy;
pub mod riccati;
pub mod rng;
pub mod sim;

pub use error::{Error, Result};
pub use linalg::{Matrix, Vector};
