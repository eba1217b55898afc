//! File formats, dataset orchestration and the `primdisc` command line tool
//! on top of `primdisc-core`.
//!
//! - [`formats`]: meshes, voxel grids, proposals, primitive sets, context
//!   bundles, LP text, depth images, feature files and CSV tables.
//! - [`synthetic`]: box-assembly test shapes.
//! - [`pipeline`]: contexts, calibration, co-occurrence rounds, solving and
//!   evaluation over a dataset.
//! - [`ablation`]: cost-drop and unary-only comparisons.
//! - [`dataset`]: dataset directories and run manifests.
//! - [`cli`]: argument parsing and subcommands.

pub mod ablation;
pub mod cli;
pub mod dataset;
pub mod error;
pub mod formats;
pub mod pipeline;
pub mod synthetic;

pub use error::{FormatError, Result};
