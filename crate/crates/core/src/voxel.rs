//! Cubic voxel lattices, occupancy grids and mesh voxelization.

use alloc::collections::VecDeque;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{Aabb, Vec3};
use crate::math;
use crate::mesh::TriangleMesh;

/// Padding applied to a mesh's bounding box before it is cubified.
pub const BOUNDS_PADDING: f64 = 0.02;

/// A cubic lattice of `resolution³` cells starting at `origin`.
/// Linear index is `x + n * (y + n * z)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Lattice {
    pub resolution: usize,
    pub origin: Vec3,
    pub voxel_size: f64,
}

impl Lattice {
    pub fn new(resolution: usize, origin: Vec3, voxel_size: f64) -> Result<Lattice> {
        if resolution == 0 {
            return Err(Error::InvalidArgument("lattice resolution must be positive".into()));
        }
        if !(voxel_size > 0.0 && voxel_size.is_finite()) || !origin.is_finite() {
            return Err(Error::InvalidArgument("voxel size must be positive and finite".into()));
        }
        Ok(Lattice { resolution, origin, voxel_size })
    }

    /// Cube centred on `bounds`, with side `max extent * (1 + padding)`.
    pub fn enclosing(bounds: &Aabb, resolution: usize, padding: f64) -> Result<Lattice> {
        let side = bounds.extent().max_element() * (1.0 + padding);
        if !(side > 0.0) {
            return Err(Error::DegenerateBounds);
        }
        let origin = bounds.center() - Vec3::splat(side * 0.5);
        Lattice::new(resolution, origin, side / resolution as f64)
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.resolution * self.resolution * self.resolution
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    #[inline]
    pub fn index(&self, x: usize, y: usize, z: usize) -> usize {
        x + self.resolution * (y + self.resolution * z)
    }

    #[inline]
    pub fn coords(&self, idx: usize) -> (usize, usize, usize) {
        let n = self.resolution;
        (idx % n, (idx / n) % n, idx / (n * n))
    }

    /// Coordinate of cell centre `i` along one axis.
    #[inline]
    pub fn center_coord(&self, axis: usize, i: usize) -> f64 {
        self.origin[axis] + (i as f64 + 0.5) * self.voxel_size
    }

    #[inline]
    pub fn center(&self, x: usize, y: usize, z: usize) -> Vec3 {
        Vec3::new(self.center_coord(0, x), self.center_coord(1, y), self.center_coord(2, z))
    }

    pub fn bounds(&self) -> Aabb {
        Aabb::new(self.origin, self.origin + Vec3::splat(self.voxel_size * self.resolution as f64))
    }

    /// Inclusive cell-index range along `axis` whose cells overlap `[lo, hi]`,
    /// or `None` when disjoint.
    pub(crate) fn cell_range(&self, axis: usize, lo: f64, hi: f64) -> Option<(usize, usize)> {
        let n = self.resolution as f64;
        let a = math::floor((lo - self.origin[axis]) / self.voxel_size);
        let b = math::floor((hi - self.origin[axis]) / self.voxel_size);
        if b < 0.0 || a >= n {
            return None;
        }
        Some((a.max(0.0) as usize, b.min(n - 1.0) as usize))
    }

    /// Inclusive range of cell indices whose centres lie in `[lo, hi]`.
    pub(crate) fn center_range(&self, axis: usize, lo: f64, hi: f64) -> Option<(usize, usize)> {
        let n = self.resolution as f64;
        let a = math::ceil((lo - self.origin[axis]) / self.voxel_size - 0.5);
        let b = math::floor((hi - self.origin[axis]) / self.voxel_size - 0.5);
        let a = a.max(0.0);
        let b = b.min(n - 1.0);
        if !(a <= b) {
            return None;
        }
        let (mut a, mut b) = (a as usize, b as usize);
        // Guard against rounding in the divisions above.
        while a <= b && self.center_coord(axis, a) < lo {
            a += 1;
        }
        while b > a && self.center_coord(axis, b) > hi {
            b -= 1;
        }
        if a > b || self.center_coord(axis, b) > hi || self.center_coord(axis, a) < lo {
            return None;
        }
        Some((a, b))
    }
}

/// Dense boolean occupancy over a [`Lattice`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RleGrid", into = "RleGrid")]
pub struct VoxelGrid {
    lattice: Lattice,
    occupancy: Vec<bool>,
}

impl VoxelGrid {
    pub fn empty(lattice: Lattice) -> VoxelGrid {
        VoxelGrid { occupancy: vec![false; lattice.len()], lattice }
    }

    pub fn filled(lattice: Lattice) -> VoxelGrid {
        VoxelGrid { occupancy: vec![true; lattice.len()], lattice }
    }

    pub fn from_occupancy(lattice: Lattice, occupancy: Vec<bool>) -> Result<VoxelGrid> {
        if occupancy.len() != lattice.len() {
            return Err(Error::InvalidArgument(alloc::format!(
                "occupancy has {} entries, lattice needs {}",
                occupancy.len(),
                lattice.len()
            )));
        }
        Ok(VoxelGrid { lattice, occupancy })
    }

    #[inline]
    pub fn lattice(&self) -> &Lattice {
        &self.lattice
    }

    #[inline]
    pub fn resolution(&self) -> usize {
        self.lattice.resolution
    }

    #[inline]
    pub fn occupancy(&self) -> &[bool] {
        &self.occupancy
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize, z: usize) -> bool {
        self.occupancy[self.lattice.index(x, y, z)]
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, z: usize, v: bool) {
        let i = self.lattice.index(x, y, z);
        self.occupancy[i] = v;
    }

    pub fn count_occupied(&self) -> usize {
        self.occupancy.iter().filter(|&&b| b).count()
    }

    pub fn complement(&self) -> VoxelGrid {
        VoxelGrid { lattice: self.lattice, occupancy: self.occupancy.iter().map(|b| !b).collect() }
    }

    /// Occupied cells with at least one empty 6-neighbour or on the lattice
    /// border.
    pub fn boundary_shell(&self) -> VoxelGrid {
        let n = self.resolution();
        let mut out = VoxelGrid::empty(self.lattice);
        for z in 0..n {
            for y in 0..n {
                for x in 0..n {
                    if !self.get(x, y, z) {
                        continue;
                    }
                    let border = x == 0 || y == 0 || z == 0 || x + 1 == n || y + 1 == n || z + 1 == n;
                    let exposed = border
                        || !self.get(x - 1, y, z)
                        || !self.get(x + 1, y, z)
                        || !self.get(x, y - 1, z)
                        || !self.get(x, y + 1, z)
                        || !self.get(x, y, z - 1)
                        || !self.get(x, y, z + 1);
                    if exposed {
                        out.set(x, y, z, true);
                    }
                }
            }
        }
        out
    }

    /// Marks every cell unreachable from the lattice border through empty
    /// cells (6-connectivity) as occupied.
    pub fn fill_interior(&mut self) {
        let n = self.resolution();
        let mut exterior = vec![false; self.lattice.len()];
        let mut queue = VecDeque::new();
        for z in 0..n {
            for y in 0..n {
                for x in 0..n {
                    let border = x == 0 || y == 0 || z == 0 || x + 1 == n || y + 1 == n || z + 1 == n;
                    let i = self.lattice.index(x, y, z);
                    if border && !self.occupancy[i] {
                        exterior[i] = true;
                        queue.push_back((x, y, z));
                    }
                }
            }
        }
        while let Some((x, y, z)) = queue.pop_front() {
            let mut visit = |xx: usize, yy: usize, zz: usize| {
                let j = self.lattice.index(xx, yy, zz);
                if !self.occupancy[j] && !exterior[j] {
                    exterior[j] = true;
                    queue.push_back((xx, yy, zz));
                }
            };
            if x > 0 {
                visit(x - 1, y, z);
            }
            if x + 1 < n {
                visit(x + 1, y, z);
            }
            if y > 0 {
                visit(x, y - 1, z);
            }
            if y + 1 < n {
                visit(x, y + 1, z);
            }
            if z > 0 {
                visit(x, y, z - 1);
            }
            if z + 1 < n {
                visit(x, y, z + 1);
            }
        }
        for (o, e) in self.occupancy.iter_mut().zip(exterior) {
            *o = !e;
        }
    }

    /// Run lengths alternating empty/occupied, starting with an (possibly
    /// zero-length) empty run.
    pub fn to_runs(&self) -> Vec<u64> {
        let mut runs = Vec::new();
        let mut current = false;
        let mut len = 0u64;
        for &b in &self.occupancy {
            if b == current {
                len += 1;
            } else {
                runs.push(len);
                current = b;
                len = 1;
            }
        }
        runs.push(len);
        runs
    }

    pub fn from_runs(lattice: Lattice, runs: &[u64]) -> Result<VoxelGrid> {
        let mut occupancy = Vec::with_capacity(lattice.len());
        let mut value = false;
        for &r in runs {
            if occupancy.len() as u64 + r > lattice.len() as u64 {
                return Err(Error::InvalidArgument("run lengths exceed lattice size".into()));
            }
            occupancy.extend(core::iter::repeat_n(value, r as usize));
            value = !value;
        }
        VoxelGrid::from_occupancy(lattice, occupancy)
    }
}

#[derive(Serialize, Deserialize)]
struct RleGrid {
    lattice: Lattice,
    runs: Vec<u64>,
}

impl From<VoxelGrid> for RleGrid {
    fn from(g: VoxelGrid) -> Self {
        RleGrid { runs: g.to_runs(), lattice: g.lattice }
    }
}

impl TryFrom<RleGrid> for VoxelGrid {
    type Error = String;
    fn try_from(r: RleGrid) -> core::result::Result<Self, String> {
        VoxelGrid::from_runs(r.lattice, &r.runs).map_err(|e| alloc::format!("{e}"))
    }
}

/// Surface voxelization with interior flood fill on the mesh's padded,
/// cubified bounding box.
pub fn voxelize(mesh: &TriangleMesh, resolution: usize) -> Result<VoxelGrid> {
    if resolution < 2 {
        return Err(Error::InvalidArgument("voxelize needs resolution >= 2".into()));
    }
    let lattice = Lattice::enclosing(&mesh.bounds(), resolution, BOUNDS_PADDING)?;
    Ok(voxelize_on(mesh, &lattice))
}

/// Same as [`voxelize`] on a caller-supplied lattice.
pub fn voxelize_on(mesh: &TriangleMesh, lattice: &Lattice) -> VoxelGrid {
    let mut grid = surface_voxels(mesh, lattice);
    grid.fill_interior();
    grid
}

/// Relative growth of cells in the surface test, so faces lying on a cell
/// boundary mark both neighbours regardless of rounding.
const SURFACE_SLACK: f64 = 1e-6;

/// Cells whose closed cube (grown by [`SURFACE_SLACK`] of a cell) intersects
/// at least one triangle.
pub fn surface_voxels(mesh: &TriangleMesh, lattice: &Lattice) -> VoxelGrid {
    let mut grid = VoxelGrid::empty(*lattice);
    let slack = lattice.voxel_size * SURFACE_SLACK;
    let h = lattice.voxel_size * 0.5 + slack;
    for tri in mesh.triangles() {
        let Some(b) = Aabb::from_points(tri).map(|b| b.expanded(slack)) else { continue };
        let (Some(rx), Some(ry), Some(rz)) = (
            lattice.cell_range(0, b.min.x, b.max.x),
            lattice.cell_range(1, b.min.y, b.max.y),
            lattice.cell_range(2, b.min.z, b.max.z),
        ) else {
            continue;
        };
        for z in rz.0..=rz.1 {
            for y in ry.0..=ry.1 {
                for x in rx.0..=rx.1 {
                    let c = lattice.center(x, y, z);
                    if triangle_intersects_cube(&tri, c, h) {
                        grid.set(x, y, z, true);
                    }
                }
            }
        }
    }
    grid
}

/// Separating-axis test between a triangle and the cube `center ± half`
/// (touching counts as intersecting).
pub fn triangle_intersects_cube(tri: &[Vec3; 3], center: Vec3, half: f64) -> bool {
    let v = [tri[0] - center, tri[1] - center, tri[2] - center];
    let e = [v[1] - v[0], v[2] - v[1], v[0] - v[2]];
    let h = [half, half, half];

    // Cube face normals.
    for axis in 0..3 {
        let lo = v[0][axis].min(v[1][axis]).min(v[2][axis]);
        let hi = v[0][axis].max(v[1][axis]).max(v[2][axis]);
        if lo > h[axis] || hi < -h[axis] {
            return false;
        }
    }

    // Edge cross products.
    let units = [Vec3::X, Vec3::Y, Vec3::Z];
    for edge in &e {
        for u in &units {
            let a = u.cross(*edge);
            if a.norm_squared() == 0.0 {
                continue;
            }
            let p0 = v[0].dot(a);
            let p1 = v[1].dot(a);
            let p2 = v[2].dot(a);
            let r = h[0] * a.x.abs() + h[1] * a.y.abs() + h[2] * a.z.abs();
            let lo = p0.min(p1).min(p2);
            let hi = p0.max(p1).max(p2);
            if lo > r || hi < -r {
                return false;
            }
        }
    }

    // Triangle plane.
    let n = e[0].cross(e[1]);
    let d = n.dot(v[0]);
    let r = h[0] * n.x.abs() + h[1] * n.y.abs() + h[2] * n.z.abs();
    d.abs() <= r
}

/// Cells whose centre lies inside the closed mesh, by crossing parity of a
/// ray along +x through each row of centres.
///
/// Rows are offset by a tiny irrational-ish amount in y and z so rays do not
/// graze shared edges of axis-aligned geometry.
pub fn rasterize_solid(mesh: &TriangleMesh, lattice: &Lattice) -> VoxelGrid {
    let n = lattice.resolution;
    let mut grid = VoxelGrid::empty(*lattice);
    let jitter_y = lattice.voxel_size * 1.234_567e-7;
    let jitter_z = lattice.voxel_size * 2.345_671e-7;
    // Bucket triangles per (y, z) row range to avoid testing all of them.
    let mut rows: Vec<Vec<u32>> = vec![Vec::new(); n * n];
    for f in 0..mesh.faces().len() {
        let tri = mesh.triangle(f);
        let b = Aabb::from_points(tri).expect("three points");
        let (Some(ry), Some(rz)) = (
            lattice.center_range(1, b.min.y - jitter_y, b.max.y - jitter_y),
            lattice.center_range(2, b.min.z - jitter_z, b.max.z - jitter_z),
        ) else {
            continue;
        };
        for z in rz.0..=rz.1 {
            for y in ry.0..=ry.1 {
                rows[y + n * z].push(f as u32);
            }
        }
    }
    let mut hits: Vec<f64> = Vec::new();
    for z in 0..n {
        for y in 0..n {
            let bucket = &rows[y + n * z];
            if bucket.is_empty() {
                continue;
            }
            let py = lattice.center_coord(1, y) + jitter_y;
            let pz = lattice.center_coord(2, z) + jitter_z;
            hits.clear();
            for &f in bucket {
                if let Some(x) = row_crossing(&mesh.triangle(f as usize), py, pz) {
                    hits.push(x);
                }
            }
            if hits.len() < 2 {
                continue;
            }
            hits.sort_by(f64::total_cmp);
            for pair in hits.chunks_exact(2) {
                if let Some((a, b)) = lattice.center_range(0, pair[0], pair[1]) {
                    for x in a..=b {
                        grid.set(x, y, z, true);
                    }
                }
            }
        }
    }
    grid
}

/// x coordinate where the line `(t, y, z)` crosses the triangle, if it does.
fn row_crossing(tri: &[Vec3; 3], y: f64, z: f64) -> Option<f64> {
    // 2D barycentric test in the yz-plane.
    let (a, b, c) = (tri[0], tri[1], tri[2]);
    let d = (b.y - a.y) * (c.z - a.z) - (c.y - a.y) * (b.z - a.z);
    if d == 0.0 {
        return None;
    }
    let w1 = ((y - a.y) * (c.z - a.z) - (c.y - a.y) * (z - a.z)) / d;
    let w2 = ((b.y - a.y) * (z - a.z) - (y - a.y) * (b.z - a.z)) / d;
    let w0 = 1.0 - w1 - w2;
    if w0 < 0.0 || w1 < 0.0 || w2 < 0.0 {
        return None;
    }
    Some(w0 * a.x + w1 * b.x + w2 * c.x)
}
