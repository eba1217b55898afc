//! Pipeline configuration. Every field has a default; partial config files
//! only override what they name.

use serde::{Deserialize, Serialize};

use crate::eval::TruthFill;
use crate::potentials::CrfWeights;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ProposalConfig {
    /// Square depth image size in pixels.
    pub image_size: usize,
    /// Vertical field of view in degrees.
    pub fov_deg: f64,
    /// Relative depth jump that separates surfaces when estimating normals.
    pub max_depth_jump: f64,
    pub angle_threshold_deg: f64,
    /// Region-growing radius as a multiple of the median point spacing.
    pub spacing_factor: f64,
    pub min_region_size: usize,
    /// Region-pair proximity as a multiple of the median point spacing.
    pub proximity_factor: f64,
    pub dedup_threshold: f64,
    /// Minimum box half-length as a fraction of the shape diagonal.
    pub min_extent_fraction: f64,
    /// Added to every fitted half-length, as a multiple of the median point
    /// spacing: depth samples stop short of a face's true edge.
    pub extent_padding_factor: f64,
    /// Lattice resolution for box IoU.
    pub iou_resolution: usize,
}

impl Default for ProposalConfig {
    fn default() -> Self {
        ProposalConfig {
            image_size: 128,
            fov_deg: 40.0,
            max_depth_jump: crate::render::DEFAULT_MAX_DEPTH_JUMP,
            angle_threshold_deg: 20.0,
            spacing_factor: 3.0,
            min_region_size: 30,
            proximity_factor: 5.0,
            dedup_threshold: 0.9,
            min_extent_fraction: 0.01,
            extent_padding_factor: 0.5,
            iou_resolution: 64,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CostConfig {
    /// Voxel grid resolution used by the occupancy and support costs.
    pub grid_resolution: usize,
    /// Raster size per box face for the compactness cost.
    pub compactness_cells: usize,
    /// Point-to-face distance band for compactness, fraction of shape diagonal.
    pub face_band_fraction: f64,
    /// Support cost returned when the enlarged shell holds no occupied voxel.
    pub support_cap: f64,
    /// Lattice resolution for pairwise overlap and co-occurrence IoU.
    pub iou_resolution: usize,
    /// Fraction of a region's points that must lie in a box for `r_k ∈ b_i`.
    pub incidence_threshold: f64,
    /// Tolerance added to box half-lengths for incidence, fraction of shape
    /// diagonal.
    pub incidence_margin_fraction: f64,
    /// Cap on the points per box used by the symmetry cost.
    pub symmetry_max_points: usize,
    /// Cap on the points per box and view used by the convexity cost.
    pub convexity_max_points: usize,
}

impl Default for CostConfig {
    fn default() -> Self {
        CostConfig {
            grid_resolution: 50,
            compactness_cells: 8,
            face_band_fraction: 0.025,
            support_cap: 10.0,
            iou_resolution: 64,
            incidence_threshold: 0.5,
            incidence_margin_fraction: 0.01,
            symmetry_max_points: 1500,
            convexity_max_points: 1500,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverConfig {
    /// Wall-clock limit per shape solve, seconds (enforced by the caller's
    /// stop predicate).
    pub time_limit_secs: f64,
    pub max_nodes: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig { time_limit_secs: 30.0, max_nodes: 200_000 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MatchingConfig {
    /// Use co-occurrence across similar shapes.
    pub enabled: bool,
    /// Neighbours per shape.
    pub k: usize,
    /// Total alternating rounds, including the initial round without
    /// co-occurrence.
    pub rounds: usize,
    /// Descriptor lattice size per axis.
    pub descriptor_cells: usize,
}

impl Default for MatchingConfig {
    fn default() -> Self {
        MatchingConfig { enabled: true, k: 5, rounds: 2, descriptor_cells: 8 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvalConfig {
    pub resolution: usize,
    pub truth_fill: TruthFill,
}

impl Default for EvalConfig {
    fn default() -> Self {
        EvalConfig { resolution: 50, truth_fill: TruthFill::Hollow }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub proposals: ProposalConfig,
    pub costs: CostConfig,
    pub weights: CrfWeights,
    /// Calibrate the cost normalizers on the processed shapes instead of
    /// using `weights.w` as given.
    pub calibrate_normalizers: bool,
    pub solver: SolverConfig,
    pub matching: MatchingConfig,
    pub eval: EvalConfig,
    /// Seed for every stochastic step.
    pub seed: u64,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            proposals: ProposalConfig::default(),
            costs: CostConfig::default(),
            weights: CrfWeights::default(),
            calibrate_normalizers: true,
            solver: SolverConfig::default(),
            matching: MatchingConfig::default(),
            eval: EvalConfig::default(),
            seed: 0,
        }
    }
}
