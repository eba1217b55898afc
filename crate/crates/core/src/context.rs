//! Per-shape bundle of proposals, regions and precomputed costs.

use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::cloud::{canonical_frame, sample_surface_points, PointCloud};
use crate::config::{CostConfig, PipelineConfig};
use crate::cuboid::{cost_pairwise_overlap, OrientedBox};
use crate::error::{Error, Result};
use crate::geometry::Similarity;
use crate::mesh::TriangleMesh;
use crate::potentials::{
    cost_compactness, cost_convexity, cost_occupancy, cost_support, cost_symmetry, cost_uniformity,
    coverage_costs, fuse_unary, stride_sample, CompactnessParams, CostVector, CrfWeights,
};
use crate::proposals::{generate_proposals, SegmentedRegion};
use crate::render::ViewCloud;
use crate::voxel::{voxelize, VoxelGrid};

/// Surface samples used to estimate the canonical frame.
pub const CANONICAL_SAMPLES: usize = 4096;

/// One pairwise overlap term `c^{pw}_{ij} > 0`, `i < j`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OverlapEntry {
    pub i: usize,
    pub j: usize,
    pub cost: f64,
}

/// One matched neighbour primitive of a proposal.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoocEntry {
    /// Index of the neighbour shape in the dataset.
    pub neighbor: usize,
    /// Matched primitive, in the neighbour's canonical frame.
    pub primitive: OrientedBox,
    /// IoU of the pair in the canonical frame.
    pub iou: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShapeContext {
    pub grid: VoxelGrid,
    pub clouds: Vec<ViewCloud>,
    pub proposals: Vec<OrientedBox>,
    pub regions: Vec<SegmentedRegion>,
    pub unary: Vec<CostVector>,
    pub coverage_costs: Vec<f64>,
    pub overlap: Vec<OverlapEntry>,
    /// `incidence[k]`: proposals `i` with `r_k ∈ b_i`, ascending.
    pub incidence: Vec<Vec<usize>>,
    /// `cooc[i]`: the set `t_i`.
    pub cooc: Vec<Vec<CoocEntry>>,
    /// Maps world coordinates into the shape's canonical frame.
    pub canonical: Similarity,
    /// Bounding-box diagonal of the source mesh.
    pub diagonal: f64,
}

impl ShapeContext {
    pub fn validate(&self) -> Result<()> {
        if self.unary.len() != self.proposals.len() || self.cooc.len() != self.proposals.len() {
            return Err(Error::InvalidArgument("per-proposal tables disagree in length".into()));
        }
        if self.coverage_costs.len() != self.regions.len() || self.incidence.len() != self.regions.len() {
            return Err(Error::InvalidArgument("per-region tables disagree in length".into()));
        }
        let n = self.proposals.len();
        if self.overlap.iter().any(|e| e.i >= e.j || e.j >= n) || self.incidence.iter().flatten().any(|&i| i >= n) {
            return Err(Error::InvalidArgument("proposal index out of range".into()));
        }
        Ok(())
    }

    /// Fused unary energy of every proposal.
    pub fn fused_unary(&self, weights: &CrfWeights) -> Vec<f64> {
        self.unary.iter().map(|c| fuse_unary(c, weights)).collect()
    }

    /// Proposals mapped into the canonical frame.
    pub fn canonical_proposals(&self) -> Vec<OrientedBox> {
        self.proposals.iter().map(|b| b.transformed(&self.canonical)).collect()
    }

    pub fn clear_cooccurrence(&mut self) {
        self.cooc = vec![Vec::new(); self.proposals.len()];
    }
}

/// Every view point inside `bx`, with its normal.
pub fn points_in_box(bx: &OrientedBox, clouds: &[ViewCloud]) -> PointCloud {
    let mut out = PointCloud::empty();
    let aabb = bx.aabb();
    for c in clouds {
        for (&p, &n) in c.cloud.points().iter().zip(c.cloud.normals()) {
            if aabb.contains(p) && bx.contains(p) {
                out.push(p, n);
            }
        }
    }
    out
}

/// All six unary costs of one box. Costs whose preconditions fail fall
/// back to neutral values: compactness 1, the others 0.
pub fn unary_costs(
    bx: &OrientedBox,
    grid: &VoxelGrid,
    regions: &[SegmentedRegion],
    clouds: &[ViewCloud],
    diagonal: f64,
    config: &CostConfig,
) -> CostVector {
    let params = CompactnessParams { cells: config.compactness_cells, band: config.face_band_fraction * diagonal };
    let inside = points_in_box(&bx.scaled_extents(1.01), clouds);
    let sym_idx: Vec<usize> = stride_sample(&(0..inside.len()).collect::<Vec<_>>(), config.symmetry_max_points);
    let sym_cloud = inside.select(&sym_idx);
    CostVector {
        oc: cost_occupancy(bx, grid),
        su: cost_uniformity(bx, regions, clouds).unwrap_or(0.0),
        pc: cost_compactness(bx, clouds, &params).unwrap_or(1.0),
        sc: cost_support(bx, grid, config.support_cap).unwrap_or(0.0),
        co: cost_convexity(bx, clouds, config.convexity_max_points).unwrap_or(0.0),
        ss: cost_symmetry(bx, &sym_cloud).unwrap_or(0.0),
    }
}

/// `r_k ∈ b_i` test: at least `threshold` of the region's points lie in the
/// box grown by `margin` along every axis.
pub fn region_in_box(region: &SegmentedRegion, cloud: &ViewCloud, bx: &OrientedBox, margin: f64, threshold: f64) -> bool {
    if region.point_indices.is_empty() {
        return false;
    }
    let mut grown = bx.clone();
    for e in grown.extents.iter_mut() {
        *e += margin;
    }
    let aabb = grown.aabb();
    let inside = region.points(cloud).filter(|&p| aabb.contains(p) && grown.contains(p)).count();
    inside as f64 >= threshold * region.point_indices.len() as f64
}

/// Incidence lists for all regions.
pub fn region_incidence(
    regions: &[SegmentedRegion],
    clouds: &[ViewCloud],
    proposals: &[OrientedBox],
    margin: f64,
    threshold: f64,
) -> Vec<Vec<usize>> {
    regions
        .iter()
        .map(|r| {
            let Some(cloud) = clouds.iter().find(|c| c.view_id == r.view_id) else {
                return Vec::new();
            };
            (0..proposals.len()).filter(|&i| region_in_box(r, cloud, &proposals[i], margin, threshold)).collect()
        })
        .collect()
}

/// Positive pairwise overlap terms.
pub fn overlap_table(proposals: &[OrientedBox], resolution: usize) -> Vec<OverlapEntry> {
    let aabbs: Vec<_> = proposals.iter().map(|b| b.aabb()).collect();
    let mut out = Vec::new();
    for i in 0..proposals.len() {
        for j in i + 1..proposals.len() {
            if !aabbs[i].intersects(&aabbs[j]) {
                continue;
            }
            let cost = cost_pairwise_overlap(&proposals[i], &proposals[j], resolution);
            if cost > 0.0 {
                out.push(OverlapEntry { i, j, cost });
            }
        }
    }
    out
}

/// Canonical frame of a mesh estimated from area-uniform surface samples.
pub fn mesh_canonical_frame(mesh: &TriangleMesh, seed: u64) -> Result<Similarity> {
    let samples = sample_surface_points(mesh, CANONICAL_SAMPLES, seed)?;
    canonical_frame(samples.points())
}

/// Runs proposals and every cost for one mesh. Co-occurrence starts empty.
pub fn build_context(mesh: &TriangleMesh, config: &PipelineConfig) -> Result<ShapeContext> {
    let set = generate_proposals(mesh, &config.proposals)?;
    let grid = voxelize(mesh, config.costs.grid_resolution)?;
    let diagonal = mesh.bounds().diagonal();
    let canonical = mesh_canonical_frame(mesh, config.seed)?;
    let unary = set
        .boxes
        .iter()
        .map(|b| unary_costs(b, &grid, &set.regions, &set.clouds, diagonal, &config.costs))
        .collect();
    let incidence = region_incidence(
        &set.regions,
        &set.clouds,
        &set.boxes,
        config.costs.incidence_margin_fraction * diagonal,
        config.costs.incidence_threshold,
    );
    let overlap = overlap_table(&set.boxes, config.costs.iou_resolution);
    let n = set.boxes.len();
    Ok(ShapeContext {
        grid,
        coverage_costs: coverage_costs(&set.regions),
        clouds: set.clouds,
        proposals: set.boxes,
        regions: set.regions,
        unary,
        overlap,
        incidence,
        cooc: vec![Vec::new(); n],
        canonical,
        diagonal,
    })
}

/// Replaces `w` by normalizers calibrated on the given contexts.
pub fn calibrate_weights<'a>(weights: &CrfWeights, contexts: impl IntoIterator<Item = &'a ShapeContext>) -> CrfWeights {
    let mut out = *weights;
    out.w = crate::potentials::calibrate_normalizers(contexts.into_iter().flat_map(|c| c.unary.iter()));
    out
}

