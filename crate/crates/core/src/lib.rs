//! Topology-driven color-network descriptors for colored point clouds,
//! plus an occlusion-robust recognition stage built on top of them.
//!
//! The pipeline has four layers:
//!
//! 1. [`colorspace`]: sRGB <-> CIELAB conversion, the HyAB color
//!    difference, and the chroma/hue lens projection.
//! 2. [`mapper`]: soft clustering of the sRGB cube into a network of
//!    overlapping color regions via a cover-and-cluster construction.
//! 3. [`similarity`]: a region-by-region similarity matrix derived from
//!    shortest paths through the color network.
//! 4. [`descriptor`] over [`geometry`]: slicing-based shape descriptors
//!    with color histograms embedded through the similarity matrix.
//!
//! [`recognition`] trains a pair of classifiers (shape-only and
//! shape-plus-color) and fuses their predictions, switching descriptor
//! variants when a view is flagged as occluded. [`synth`] generates a
//! small labeled benchmark of colored shapes for end-to-end evaluation.

pub mod artifacts;
pub mod colorspace;
pub mod config;
pub mod descriptor;
pub mod error;
pub mod geometry;
pub mod mapper;
pub mod recognition;
pub mod similarity;
pub mod synth;

pub use error::{Error, Result};
