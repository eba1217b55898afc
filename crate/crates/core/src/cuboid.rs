//! Oriented boxes and lattice-based volume measures between them.

use alloc::format;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{Aabb, Mat3, Similarity, Vec3};
use crate::math;
use crate::voxel::{Lattice, VoxelGrid};

/// A cuboid with orthonormal right-handed `axes` and positive half-lengths
/// `extents` along them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OrientedBox {
    pub center: Vec3,
    pub axes: [Vec3; 3],
    pub extents: [f64; 3],
    /// Ids of the segmented regions the box was fitted to.
    #[serde(default)]
    pub source_regions: Vec<usize>,
}

impl OrientedBox {
    pub fn new(center: Vec3, axes: [Vec3; 3], extents: [f64; 3]) -> Result<OrientedBox> {
        let b = OrientedBox { center, axes, extents, source_regions: Vec::new() };
        b.validate()?;
        Ok(b)
    }

    pub fn axis_aligned(min: Vec3, max: Vec3) -> Result<OrientedBox> {
        let half = (max - min) * 0.5;
        OrientedBox::new((min + max) * 0.5, [Vec3::X, Vec3::Y, Vec3::Z], [half.x, half.y, half.z])
    }

    pub fn with_sources(mut self, sources: Vec<usize>) -> OrientedBox {
        self.source_regions = sources;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !self.extents.iter().all(|&e| e > 0.0 && e.is_finite()) {
            return Err(Error::InvalidArgument(format!("box extents must be positive: {:?}", self.extents)));
        }
        if !self.rotation().is_rotation(1e-9) {
            return Err(Error::InvalidArgument("box axes must be orthonormal and right-handed".into()));
        }
        if !self.center.is_finite() {
            return Err(Error::InvalidArgument("box centre must be finite".into()));
        }
        Ok(())
    }

    /// Matrix whose columns are the box axes (local to world).
    pub fn rotation(&self) -> Mat3 {
        Mat3::from_cols(self.axes[0], self.axes[1], self.axes[2])
    }

    pub fn volume(&self) -> f64 {
        8.0 * self.extents[0] * self.extents[1] * self.extents[2]
    }

    /// Coordinates of `p` in the box frame.
    #[inline]
    pub fn to_local(&self, p: Vec3) -> Vec3 {
        let d = p - self.center;
        Vec3::new(d.dot(self.axes[0]), d.dot(self.axes[1]), d.dot(self.axes[2]))
    }

    #[inline]
    pub fn contains(&self, p: Vec3) -> bool {
        let l = self.to_local(p);
        l.x.abs() <= self.extents[0] && l.y.abs() <= self.extents[1] && l.z.abs() <= self.extents[2]
    }

    /// Same box with every half-length multiplied by `factor`.
    pub fn scaled_extents(&self, factor: f64) -> OrientedBox {
        let mut b = self.clone();
        for e in b.extents.iter_mut() {
            *e *= factor;
        }
        b
    }

    pub fn corners(&self) -> [Vec3; 8] {
        let mut out = [Vec3::ZERO; 8];
        for (i, c) in out.iter_mut().enumerate() {
            let sx = if i & 1 == 0 { -1.0 } else { 1.0 };
            let sy = if i & 2 == 0 { -1.0 } else { 1.0 };
            let sz = if i & 4 == 0 { -1.0 } else { 1.0 };
            *c = self.center
                + self.axes[0] * (sx * self.extents[0])
                + self.axes[1] * (sy * self.extents[1])
                + self.axes[2] * (sz * self.extents[2]);
        }
        out
    }

    pub fn aabb(&self) -> Aabb {
        let mut half = Vec3::ZERO;
        for k in 0..3 {
            let a = self.axes[k] * self.extents[k];
            half += Vec3::new(a.x.abs(), a.y.abs(), a.z.abs());
        }
        Aabb::new(self.center - half, self.center + half)
    }

    /// Full width of the box measured along a unit direction.
    pub fn width_along(&self, dir: Vec3) -> f64 {
        2.0 * (0..3).map(|k| self.extents[k] * self.axes[k].dot(dir).abs()).sum::<f64>()
    }

    pub fn transformed(&self, t: &Similarity) -> OrientedBox {
        OrientedBox {
            center: t.apply(self.center),
            axes: [
                t.apply_direction(self.axes[0]).normalize(),
                t.apply_direction(self.axes[1]).normalize(),
                t.apply_direction(self.axes[2]).normalize(),
            ],
            extents: [self.extents[0] * t.scale, self.extents[1] * t.scale, self.extents[2] * t.scale],
            source_regions: self.source_regions.clone(),
        }
    }

    /// Parameter interval `[t0, t1]` of the line `origin + t * e_axis` inside
    /// the box.
    pub(crate) fn line_span(&self, origin: Vec3, axis: usize) -> Option<(f64, f64)> {
        let d = origin - self.center;
        let (mut lo, mut hi) = (f64::NEG_INFINITY, f64::INFINITY);
        for k in 0..3 {
            let a = self.axes[k][axis];
            let b = d.dot(self.axes[k]);
            let e = self.extents[k];
            if a.abs() < 1e-15 {
                if b.abs() > e {
                    return None;
                }
                continue;
            }
            let (t0, t1) = ((-e - b) / a, (e - b) / a);
            let (t0, t1) = if t0 <= t1 { (t0, t1) } else { (t1, t0) };
            lo = lo.max(t0);
            hi = hi.min(t1);
            if lo > hi {
                return None;
            }
        }
        Some((lo, hi))
    }

    /// Range of x cell indices in lattice row `(y, z)` whose centres lie in
    /// the box.
    pub fn row_span(&self, lattice: &Lattice, y: usize, z: usize) -> Option<(usize, usize)> {
        let origin = Vec3::new(0.0, lattice.center_coord(1, y), lattice.center_coord(2, z));
        let (t0, t1) = self.line_span(origin, 0)?;
        lattice.center_range(0, t0, t1)
    }

    /// Lattice rows `(y, z)` that may intersect the box.
    fn row_bounds(&self, lattice: &Lattice) -> Option<((usize, usize), (usize, usize))> {
        let b = self.aabb();
        Some((lattice.center_range(1, b.min.y, b.max.y)?, lattice.center_range(2, b.min.z, b.max.z)?))
    }

    /// Calls `f(x0, x1, y, z)` for every lattice row span covered by the box.
    pub fn for_each_span(&self, lattice: &Lattice, mut f: impl FnMut(usize, usize, usize, usize)) {
        let Some((ry, rz)) = self.row_bounds(lattice) else { return };
        for z in rz.0..=rz.1 {
            for y in ry.0..=ry.1 {
                if let Some((x0, x1)) = self.row_span(lattice, y, z) {
                    f(x0, x1, y, z);
                }
            }
        }
    }

    /// Marks all cells whose centre lies in the box.
    pub fn rasterize_into(&self, grid: &mut VoxelGrid) {
        let lattice = *grid.lattice();
        self.for_each_span(&lattice, |x0, x1, y, z| {
            for x in x0..=x1 {
                grid.set(x, y, z, true);
            }
        });
    }

    /// `(cells with centre in box, occupied cells among them)`.
    pub fn count_cells(&self, grid: &VoxelGrid) -> (usize, usize) {
        let lattice = *grid.lattice();
        let (mut total, mut occupied) = (0, 0);
        self.for_each_span(&lattice, |x0, x1, y, z| {
            total += x1 - x0 + 1;
            let base = lattice.index(0, y, z);
            occupied += grid.occupancy()[base + x0..=base + x1].iter().filter(|&&b| b).count();
        });
        (total, occupied)
    }
}

/// Occupancy of several boxes on one lattice.
pub fn rasterize_boxes<'a>(boxes: impl IntoIterator<Item = &'a OrientedBox>, lattice: &Lattice) -> VoxelGrid {
    let mut grid = VoxelGrid::empty(*lattice);
    for b in boxes {
        b.rasterize_into(&mut grid);
    }
    grid
}

/// Lattice counts `(|a|, |b|, |a ∩ b|)` over `resolution³` cell centres
/// spanning the joint bounding box.
pub fn lattice_counts(a: &OrientedBox, b: &OrientedBox, resolution: usize) -> (u64, u64, u64) {
    let joint = a.aabb().union(&b.aabb());
    let ext = joint.extent();
    let n = resolution as f64;
    let h = Vec3::new(ext.x / n, ext.y / n, ext.z / n);
    let index_range = |t0: f64, t1: f64| -> Option<(i64, i64)> {
        if !(h.x > 0.0) {
            return None;
        }
        let i0 = math::ceil((t0 - joint.min.x) / h.x - 0.5).max(0.0) as i64;
        let i1 = math::floor((t1 - joint.min.x) / h.x - 0.5).min(n - 1.0) as i64;
        (i0 <= i1).then_some((i0, i1))
    };
    let (mut ca, mut cb, mut cab) = (0u64, 0u64, 0u64);
    for k in 0..resolution {
        let z = joint.min.z + (k as f64 + 0.5) * h.z;
        for j in 0..resolution {
            let y = joint.min.y + (j as f64 + 0.5) * h.y;
            let origin = Vec3::new(0.0, y, z);
            let sa = a.line_span(origin, 0).and_then(|(t0, t1)| index_range(t0, t1));
            let sb = b.line_span(origin, 0).and_then(|(t0, t1)| index_range(t0, t1));
            if let Some((a0, a1)) = sa {
                ca += (a1 - a0 + 1) as u64;
            }
            if let Some((b0, b1)) = sb {
                cb += (b1 - b0 + 1) as u64;
            }
            if let (Some((a0, a1)), Some((b0, b1))) = (sa, sb) {
                let (lo, hi) = (a0.max(b0), a1.min(b1));
                if lo <= hi {
                    cab += (hi - lo + 1) as u64;
                }
            }
        }
    }
    (ca, cb, cab)
}

/// Volumetric IoU estimated on a `resolution³` lattice over the joint
/// bounding box.
pub fn cuboid_iou(a: &OrientedBox, b: &OrientedBox, resolution: usize) -> f64 {
    if !a.aabb().intersects(&b.aabb()) {
        return 0.0;
    }
    let (ca, cb, cab) = lattice_counts(a, b, resolution);
    let union = ca + cb - cab;
    if union == 0 {
        0.0
    } else {
        cab as f64 / union as f64
    }
}

/// Intersection volume normalized by the smaller box, both measured on the
/// same lattice as [`cuboid_iou`].
pub fn cost_pairwise_overlap(a: &OrientedBox, b: &OrientedBox, resolution: usize) -> f64 {
    if !a.aabb().intersects(&b.aabb()) {
        return 0.0;
    }
    let (ca, cb, cab) = lattice_counts(a, b, resolution);
    let smaller = ca.min(cb);
    if smaller == 0 {
        0.0
    } else {
        (cab as f64 / smaller as f64).min(1.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cube(min: Vec3, side: f64) -> OrientedBox {
        OrientedBox::axis_aligned(min, min + Vec3::splat(side)).unwrap()
    }

    #[test]
    fn iou_identity_and_disjoint() {
        let a = cube(Vec3::ZERO, 1.0);
        assert_eq!(cuboid_iou(&a, &a, 32), 1.0);
        assert_eq!(cuboid_iou(&a, &cube(Vec3::splat(3.0), 1.0), 32), 0.0);
    }

    #[test]
    fn iou_offset_half() {
        let a = cube(Vec3::ZERO, 1.0);
        let b = cube(Vec3::new(0.5, 0.0, 0.0), 1.0);
        assert!((cuboid_iou(&a, &b, 64) - 1.0 / 3.0).abs() < 0.02);
    }

    #[test]
    fn overlap_cases() {
        let big = cube(Vec3::ZERO, 2.0);
        let small = cube(Vec3::splat(0.5), 0.5);
        assert_eq!(cost_pairwise_overlap(&big, &small, 32), 1.0);
        assert_eq!(cost_pairwise_overlap(&big, &big, 32), 1.0);
        assert_eq!(cost_pairwise_overlap(&big, &cube(Vec3::splat(5.0), 1.0), 32), 0.0);
    }

    #[test]
    fn rejects_bad_boxes() {
        assert!(OrientedBox::new(Vec3::ZERO, [Vec3::X, Vec3::Y, Vec3::Z], [1.0, 0.0, 1.0]).is_err());
        assert!(OrientedBox::new(Vec3::ZERO, [Vec3::X, Vec3::Y, -Vec3::Z], [1.0, 1.0, 1.0]).is_err());
    }

    #[test]
    fn row_spans_match_point_tests() {
        let b = OrientedBox::new(
            Vec3::new(0.1, -0.2, 0.3),
            {
                let r = Mat3::rotation(Vec3::new(1.0, 1.0, 0.3), 0.6);
                [r.col(0), r.col(1), r.col(2)]
            },
            [0.4, 0.25, 0.6],
        )
        .unwrap();
        let lat = Lattice::new(24, Vec3::splat(-1.0), 2.0 / 24.0).unwrap();
        let g = rasterize_boxes([&b], &lat);
        let mut mismatches = 0;
        for z in 0..24 {
            for y in 0..24 {
                for x in 0..24 {
                    if g.get(x, y, z) != b.contains(lat.center(x, y, z)) {
                        mismatches += 1;
                    }
                }
            }
        }
        assert_eq!(mismatches, 0);
    }
}
