//! Analytical and simulation models for opportunistic spectrum access
//! networks that combine cooperative spectrum sensing with a multichannel
//! MAC.
//!
//! The crate is `no_std` with `alloc`. It covers:
//!
//! * [`phy`]: energy-detector operating characteristics,
//! * [`sensing`]: grouping, reporting overhead and decision fusion,
//! * [`chain`]: the `(x, y, z)` Markov chain for the four MAC variants and
//!   its throughput,
//! * [`sim`]: a slot-level Monte Carlo simulator with batch-means output,
//! * [`optimize`]: exhaustive search over sensing parameters.
#![no_std]

extern crate alloc;

pub mod chain;
pub mod error;
pub mod math;
pub mod optimize;
pub mod phy;
pub mod scene;
pub mod sensing;
pub mod sim;

pub use error::{Error, Result};
