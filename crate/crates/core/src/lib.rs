//! Localization, classification and field reading for photos of identity
//! documents, plus the synthetic data generator and evaluation harness used
//! to train and score the pipeline.

pub mod error;
pub mod exec;
pub mod raster;

pub use error::{Error, Result};
pub use exec::Exec;
pub mod locator;
pub mod sat;
pub mod tensornet;
pub mod font;
pub mod classifier;
pub mod synthgen;
pub mod extractor;
pub mod evalharness;
