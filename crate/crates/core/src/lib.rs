//! Spiking neural network transcoding, event-driven simulation and
//! neuromorphic hardware design-space exploration.

pub mod cli;
pub mod codec;
pub mod dse;
pub mod engine;
pub mod error;
pub mod hwmodel;
pub mod mnist;
pub mod netmodel;
pub mod trainer;

pub use error::{Error, Result};
