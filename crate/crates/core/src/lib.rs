//! Patient-specific non-rigid point cloud registration.
//!
//! The crate covers the whole computational pipeline: synthetic training pairs
//! generated from one preoperative organ mesh ([`arap`], [`crop`],
//! [`dataset`]), dense correspondence prediction ([`matching`], [`nn`]),
//! physics-based registration on a tetrahedral model ([`fem`]) and the
//! evaluation metrics ([`metrics`]). [`workflow`] strings these together per
//! sample.

// `!(x > 0.0)` style checks are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod arap;
pub mod crop;
pub mod dataset;
pub mod matching;
pub mod metrics;
pub mod nn;
pub mod error;
pub mod fem;
pub mod geometry;
pub mod phantom;
pub mod sparse;
pub mod tensor;
pub mod workflow;

pub use error::{Error, Result};
pub use geometry::{KeypointSet, PointCloud, RigidTransform, TetMesh, TriMesh, Vec3};
