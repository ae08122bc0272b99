//! Optical fiber monitoring toolkit: OTDR trace synthesis, a GRU autoencoder
//! for anomaly detection, and an attention-based bidirectional GRU model for
//! fault diagnosis and localization, with the evaluation machinery to match.

pub mod error;
pub mod model;
pub mod nn;
pub mod otdr;
pub mod train;

pub use error::{Error, Result};
