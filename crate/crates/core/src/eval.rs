//! Voxel-overlap metrics and selection baselines.

use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::codec::{decode, DecodeMode, PrimitiveParams, PrimitiveSet};
use crate::cuboid::OrientedBox;
use crate::error::{Error, Result};
use crate::geometry::Similarity;
use crate::mesh::TriangleMesh;
use crate::voxel::{rasterize_solid, Lattice, VoxelGrid, BOUNDS_PADDING};

/// How the ground-truth voxelization treats the shape interior.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TruthFill {
    Solid,
    /// Only cells of the solid on its 6-connected boundary.
    Hollow,
}

/// Primitives kept by the unary-only baseline.
pub const UNARY_ONLY_COUNT: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VoxelMetrics {
    pub recall: f64,
    pub precision: f64,
    pub accuracy: f64,
    pub f_measure: f64,
    pub tp: u64,
    pub fp: u64,
    #[serde(rename = "fn")]
    pub fn_: u64,
    pub tn: u64,
    /// False when `tp + fn = 0` (recall reported as 0).
    pub recall_defined: bool,
    /// False when `tp + fp = 0` (precision reported as 0).
    pub precision_defined: bool,
}

impl VoxelMetrics {
    pub fn from_counts(tp: u64, fp: u64, fn_: u64, tn: u64) -> VoxelMetrics {
        let ratio = |a: u64, b: u64| if b > 0 { (a as f64 / b as f64, true) } else { (0.0, false) };
        let (recall, recall_defined) = ratio(tp, tp + fn_);
        let (precision, precision_defined) = ratio(tp, tp + fp);
        let total = tp + fp + fn_ + tn;
        VoxelMetrics {
            recall,
            precision,
            accuracy: if total > 0 { (tp + tn) as f64 / total as f64 } else { 0.0 },
            f_measure: f_measure(precision, recall),
            tp,
            fp,
            fn_,
            tn,
            recall_defined,
            precision_defined,
        }
    }
}

/// Harmonic mean of precision and recall; 0 when both are 0.
pub fn f_measure(precision: f64, recall: f64) -> f64 {
    let d = precision + recall;
    if d > 0.0 {
        2.0 * precision * recall / d
    } else {
        0.0
    }
}

/// Confusion counts with occupied as positive. Both grids must share a
/// lattice.
pub fn voxel_metrics(predicted: &VoxelGrid, truth: &VoxelGrid) -> Result<VoxelMetrics> {
    if predicted.lattice() != truth.lattice() {
        return Err(Error::ResolutionMismatch);
    }
    let (mut tp, mut fp, mut fn_, mut tn) = (0u64, 0u64, 0u64, 0u64);
    for (&p, &t) in predicted.occupancy().iter().zip(truth.occupancy()) {
        match (p, t) {
            (true, true) => tp += 1,
            (true, false) => fp += 1,
            (false, true) => fn_ += 1,
            (false, false) => tn += 1,
        }
    }
    Ok(VoxelMetrics::from_counts(tp, fp, fn_, tn))
}

/// Ground-truth occupancy of a mesh on a lattice.
pub fn truth_grid(mesh: &TriangleMesh, lattice: &Lattice, fill: TruthFill) -> VoxelGrid {
    let solid = rasterize_solid(mesh, lattice);
    match fill {
        TruthFill::Solid => solid,
        TruthFill::Hollow => solid.boundary_shell(),
    }
}

/// Evaluation lattice of a mesh already in its evaluation frame.
pub fn evaluation_lattice(mesh: &TriangleMesh, resolution: usize) -> Result<Lattice> {
    Lattice::enclosing(&mesh.bounds(), resolution, BOUNDS_PADDING)
}

/// Metrics of primitives against a mesh on the mesh's lattice; both are
/// given in the same frame.
pub fn evaluate_on_lattice(
    mesh: &TriangleMesh,
    primitives: &[OrientedBox],
    lattice: &Lattice,
    fill: TruthFill,
) -> Result<VoxelMetrics> {
    let truth = truth_grid(mesh, lattice, fill);
    let predicted = if primitives.is_empty() {
        VoxelGrid::empty(*lattice)
    } else {
        let set = PrimitiveSet { primitives: primitives.iter().map(|b| PrimitiveParams::from_box(b, 1.0)).collect() };
        decode(&set, lattice, DecodeMode::Expected)?
    };
    voxel_metrics(&predicted, &truth)
}

/// Maps mesh and primitives (world frame) into the canonical frame and
/// compares them at `resolution³`.
pub fn evaluate_shape(
    mesh: &TriangleMesh,
    canonical: &Similarity,
    primitives: &[OrientedBox],
    resolution: usize,
    fill: TruthFill,
) -> Result<VoxelMetrics> {
    let m = mesh.transformed(canonical);
    let boxes: Vec<OrientedBox> = primitives.iter().map(|b| b.transformed(canonical)).collect();
    let lattice = evaluation_lattice(&m, resolution)?;
    evaluate_on_lattice(&m, &boxes, &lattice, fill)
}

/// Indices of the `count` lowest energies (ties by index), ascending.
pub fn unary_only_selection(energies: &[f64], count: usize) -> Vec<usize> {
    let mut order: Vec<usize> = (0..energies.len()).collect();
    order.sort_by(|&a, &b| energies[a].total_cmp(&energies[b]).then(a.cmp(&b)));
    order.truncate(count);
    order.sort_unstable();
    order
}

/// Mean of a metric over shapes; 0 for none.
pub fn mean(values: impl IntoIterator<Item = f64>) -> f64 {
    let (sum, n) = values.into_iter().fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
    if n == 0 {
        0.0
    } else {
        sum / n as f64
    }
}
