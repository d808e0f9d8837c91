//! Frequency-band model-based optoacoustic reconstruction.

pub mod config;
pub mod error;
pub mod filters;
pub mod geometry;
pub mod io;
pub mod metrics;
pub mod model;
pub mod pipeline;
mod par;
pub mod render;
pub mod solver;
pub mod sources;
pub mod spectrum;
pub mod unmixing;

pub use error::{Error, Result};
