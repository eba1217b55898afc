//! Unsupervised discovery of cuboid primitives in 3D shapes.
//!
//! The pipeline renders a mesh from six virtual viewpoints, segments the
//! resulting depth point clouds into smooth regions, fits candidate boxes to
//! pairs of nearly perpendicular regions, scores every candidate with a set of
//! geometric costs and finally selects a compact subset by minimizing a
//! higher-order CRF energy written as a mixed integer linear program.
//!
//! This crate is `no_std` (it needs `alloc`) and performs no IO. File formats,
//! dataset orchestration and the command line tool live in the `primdisc`
//! crate.
//!
//! # Module map
//!
//! - [`geometry`], [`spatial`], [`hull`]: small linear algebra, kd-tree and 3D
//!   convex hull used throughout.
//! - [`mesh`], [`voxel`], [`cloud`]: shape representations, voxelization,
//!   surface sampling and canonical alignment.
//! - [`render`]: camera rig, ray-cast depth views and depth normals.
//! - [`cuboid`], [`proposals`]: oriented boxes, lattice IoU and the bottom-up
//!   proposal generator.
//! - [`potentials`], [`context`]: unary, pairwise and higher-order costs and
//!   the per-shape cost bundle.
//! - [`matching`]: shape descriptors, kNN and primal-dual bipartite matching.
//! - [`solver`]: MILP assembly, bounded simplex, branch and bound and an
//!   exhaustive oracle.
//! - [`codec`]: the 16-scalar primitive parameterization.
//! - [`eval`]: voxel metrics and selection baselines.
#![no_std]
// `!(x > 0.0)` rejects NaN along with non-positive values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;

mod math;

pub mod cloud;
pub mod codec;
pub mod config;
pub mod context;
pub mod cuboid;
pub mod error;
pub mod eval;
pub mod geometry;
pub mod hull;
pub mod matching;
pub mod mesh;
pub mod potentials;
pub mod proposals;
pub mod render;
pub mod solver;
pub mod spatial;
pub mod voxel;

pub use cloud::PointCloud;
pub use config::PipelineConfig;
pub use context::ShapeContext;
pub use cuboid::OrientedBox;
pub use error::{Error, Result};
pub use geometry::{Mat3, Similarity, Vec3};
pub use mesh::TriangleMesh;
pub use potentials::{CostVector, CrfWeights};
pub use voxel::{Lattice, VoxelGrid};

/// Crate version, recorded in run manifests.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
