//! Corpus-level image statistics.
//!
//! The pipeline treats a set of equally sized RGB crops as a dataset:
//!
//! - [`ingest`] decodes and center-crops source images into a [`CorpusTensor`],
//! - [`pixstats`] computes per-pixel mean, variance and bound images,
//! - [`eigen`] runs a per-channel principal-component decomposition where
//!   images are variables and pixels are observations ("eigenimages"),
//! - [`corrnet`] multiplies per-channel Pearson correlations into a total
//!   correlation matrix, thresholds it into a graph and scores centrality,
//! - [`render`] turns planes and graphs into rasters and CSV tables.

pub mod corrnet;
pub mod eigen;
mod error;
pub mod ingest;
pub mod pixstats;
mod plane;
pub mod render;

pub use error::{Dimension, Error, Result};
pub use ingest::CorpusTensor;
pub use plane::{gray_value, Channel, Plane};
