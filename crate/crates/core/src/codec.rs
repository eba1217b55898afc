//! The 16-scalar primitive parameterization (`θ_s` ∈ R^15 plus `θ_l`) and
//! its conversion to and from boxes and voxel grids.

use alloc::format;
use alloc::vec::Vec;

use rand_chacha::ChaCha8Rng;
use rand_core::SeedableRng;
use serde::{Deserialize, Serialize};

use crate::cloud::unit_f64;
use crate::cuboid::{rasterize_boxes, OrientedBox};
use crate::error::{Error, Result};
use crate::geometry::{Mat3, Vec3};
use crate::math;
use crate::voxel::{Lattice, VoxelGrid};

/// Default maximum primitive count per shape.
pub const MAX_PRIMITIVES: usize = 6;
/// Tolerance of the rotation audit.
pub const ROTATION_TOL: f64 = 1e-6;

/// One primitive. Field order of the flat form: dims, translation,
/// rotation (row-major), likelihood.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PrimitiveParams {
    /// Full side lengths along the three box axes.
    pub dims: [f64; 3],
    pub translation: [f64; 3],
    /// Row-major matrix whose columns are the box axes.
    pub rotation: [f64; 9],
    pub likelihood: f64,
}

impl PrimitiveParams {
    /// Parameters of a box. A left-handed axis triple has its third axis
    /// negated, which describes the same solid.
    pub fn from_box(bx: &OrientedBox, likelihood: f64) -> PrimitiveParams {
        let mut axes = bx.axes;
        if axes[0].cross(axes[1]).dot(axes[2]) < 0.0 {
            axes[2] = -axes[2];
        }
        PrimitiveParams {
            dims: [2.0 * bx.extents[0], 2.0 * bx.extents[1], 2.0 * bx.extents[2]],
            translation: bx.center.to_array(),
            rotation: Mat3::from_cols(axes[0], axes[1], axes[2]).to_row_major(),
            likelihood,
        }
    }

    pub fn rotation_matrix(&self) -> Mat3 {
        Mat3::from_row_major(&self.rotation)
    }

    pub fn validate(&self) -> Result<()> {
        let finite = self.dims.iter().chain(&self.translation).chain(&self.rotation).all(|v| v.is_finite());
        if !finite {
            return Err(Error::InvalidArgument("primitive parameters must be finite".into()));
        }
        if self.dims.iter().any(|&d| !(d > 0.0)) {
            return Err(Error::InvalidArgument("primitive dims must be positive".into()));
        }
        if !(0.0..=1.0).contains(&self.likelihood) {
            return Err(Error::InvalidArgument(format!("likelihood {} outside [0, 1]", self.likelihood)));
        }
        if !self.rotation_matrix().is_rotation(ROTATION_TOL) {
            return Err(Error::InvalidArgument("rotation is not a proper rotation".into()));
        }
        Ok(())
    }

    pub fn to_box(&self) -> Result<OrientedBox> {
        self.validate()?;
        let r = self.rotation_matrix();
        OrientedBox::new(
            Vec3::from(self.translation),
            [r.col(0), r.col(1), r.col(2)],
            [0.5 * self.dims[0], 0.5 * self.dims[1], 0.5 * self.dims[2]],
        )
    }

    pub fn to_array(&self) -> [f64; 16] {
        let mut out = [0.0; 16];
        out[..3].copy_from_slice(&self.dims);
        out[3..6].copy_from_slice(&self.translation);
        out[6..15].copy_from_slice(&self.rotation);
        out[15] = self.likelihood;
        out
    }

    pub fn from_array(a: &[f64; 16]) -> PrimitiveParams {
        let mut p = PrimitiveParams { dims: [0.0; 3], translation: [0.0; 3], rotation: [0.0; 9], likelihood: a[15] };
        p.dims.copy_from_slice(&a[..3]);
        p.translation.copy_from_slice(&a[3..6]);
        p.rotation.copy_from_slice(&a[6..15]);
        p
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PrimitiveSet {
    pub primitives: Vec<PrimitiveParams>,
}

impl PrimitiveSet {
    pub fn validate(&self, max: usize) -> Result<()> {
        if self.primitives.is_empty() || self.primitives.len() > max {
            return Err(Error::InvalidArgument(format!(
                "primitive count {} outside [1, {max}]",
                self.primitives.len()
            )));
        }
        self.primitives.iter().try_for_each(|p| p.validate())
    }

    pub fn to_boxes(&self) -> Result<Vec<OrientedBox>> {
        self.primitives.iter().map(|p| p.to_box()).collect()
    }
}

/// `1 / (1 + e^energy)`: lower energy, higher likelihood.
pub fn energy_likelihood(energy: f64) -> f64 {
    if energy > 0.0 {
        let e = math::exp(-energy);
        e / (1.0 + e)
    } else {
        1.0 / (1.0 + math::exp(energy))
    }
}

/// Encodes boxes with their fused unary energies. When there are more than
/// `max` boxes the `max` lowest-energy ones are kept (ties by index), in
/// their original order.
pub fn encode(boxes: &[OrientedBox], energies: &[f64], max: usize) -> Result<PrimitiveSet> {
    if boxes.is_empty() {
        return Err(Error::EmptyInput);
    }
    if energies.len() != boxes.len() {
        return Err(Error::InvalidArgument("one energy per box required".into()));
    }
    let mut order: Vec<usize> = (0..boxes.len()).collect();
    order.sort_by(|&a, &b| energies[a].total_cmp(&energies[b]).then(a.cmp(&b)));
    order.truncate(max.max(1));
    order.sort_unstable();
    let primitives = order.iter().map(|&i| PrimitiveParams::from_box(&boxes[i], energy_likelihood(energies[i]))).collect();
    Ok(PrimitiveSet { primitives })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DecodeMode {
    /// Primitives with `θ_l >= 0.5`.
    Expected,
    /// Each primitive independently with probability `θ_l`.
    Sampled { seed: u64 },
}

/// Primitives kept by a decode mode.
pub fn included(set: &PrimitiveSet, mode: DecodeMode) -> Vec<usize> {
    match mode {
        DecodeMode::Expected => (0..set.primitives.len()).filter(|&i| set.primitives[i].likelihood >= 0.5).collect(),
        DecodeMode::Sampled { seed } => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            (0..set.primitives.len()).filter(|&i| unit_f64(&mut rng) < set.primitives[i].likelihood).collect()
        }
    }
}

/// A cell is occupied iff its centre lies in an included primitive.
pub fn decode(set: &PrimitiveSet, lattice: &Lattice, mode: DecodeMode) -> Result<VoxelGrid> {
    if lattice.resolution < 8 {
        return Err(Error::InvalidArgument("decode resolution must be at least 8".into()));
    }
    let boxes: Vec<OrientedBox> = included(set, mode)
        .into_iter()
        .map(|i| set.primitives[i].to_box())
        .collect::<Result<_>>()?;
    Ok(rasterize_boxes(&boxes, lattice))
}

/// Boxes after encoding (with likelihood forced to 1) and decoding the
/// parameters, without voxelization.
pub fn roundtrip(boxes: &[OrientedBox]) -> Result<Vec<OrientedBox>> {
    boxes.iter().map(|b| PrimitiveParams::from_box(b, 1.0).to_box()).collect()
}
