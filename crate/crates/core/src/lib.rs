//! simforge-core: turn a raw triangle mesh plus multi-view color images
//! into a simulation-ready asset.
//!
//! The pipeline pieces are deliberately independent:
//!
//! - [`mesh`]: triangle meshes, OBJ I/O, validation, scaling and exact
//!   uniform-density inertia.
//! - [`camera`] / [`raster`]: perspective view-sphere cameras and a
//!   deterministic software rasterizer for geometry buffers and color.
//! - [`bake`]: multi-view texture back-projection with confidence
//!   weighting, depth-edge exclusion, fusion and push-pull inpainting.
//! - [`loss`]: cross-view consistency losses with verified gradients.
//! - [`physics`]: real-world scale restoration and property estimation.
//! - [`inspect`]: quality checkers, retry orchestration and the
//!   precision/recall evaluation harness.
//! - [`bundle`]: URDF packaging with reproducible metadata.
//! - [`services`]: HTTP clients for the pluggable external hooks.

pub mod bake;
pub mod bundle;
pub mod camera;
pub mod error;
pub mod img;
pub mod inspect;
pub mod loss;
pub mod mesh;
pub mod physics;
pub mod raster;
pub mod services;

pub use error::{Error, ErrorCategory, Result};
