//! CRF potentials: the six unary costs and their fusion, coverage costs and
//! the weight set. Pairwise overlap and box IoU live in [`crate::cuboid`].

use alloc::format;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::cloud::PointCloud;
use crate::cuboid::OrientedBox;
use crate::error::{Error, Result};
use crate::geometry::{mean_and_covariance, symmetric_eigen, Vec3};
use crate::hull::ConvexHull;
use crate::math;
use crate::proposals::SegmentedRegion;
use crate::render::ViewCloud;
use crate::spatial::KdTree;
use crate::voxel::VoxelGrid;

pub use crate::cuboid::{cost_pairwise_overlap, cuboid_iou};

/// Short names of the unary costs, in vector order.
pub const COST_NAMES: [&str; 6] = ["oc", "su", "pc", "sc", "co", "ss"];

/// The six unary costs of one proposal.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct CostVector {
    /// Volumetric occupancy: empty fraction of the box.
    pub oc: f64,
    /// Shape uniformity: mean normal-direction entropy of source regions.
    pub su: f64,
    /// Primitive compactness: mean uncovered fraction of visible faces.
    pub pc: f64,
    /// Support: inner over shell occupancy ratio.
    pub sc: f64,
    /// Shape convexity: mean distance to the frontal hull.
    pub co: f64,
    /// Shape symmetry.
    pub ss: f64,
}

impl CostVector {
    pub fn from_array(a: [f64; 6]) -> CostVector {
        CostVector { oc: a[0], su: a[1], pc: a[2], sc: a[3], co: a[4], ss: a[5] }
    }

    pub fn to_array(&self) -> [f64; 6] {
        [self.oc, self.su, self.pc, self.sc, self.co, self.ss]
    }

    pub fn is_valid(&self) -> bool {
        self.to_array().iter().all(|c| c.is_finite() && *c >= 0.0)
    }
}

impl core::ops::Add for CostVector {
    type Output = CostVector;
    fn add(self, o: CostVector) -> CostVector {
        let (a, b) = (self.to_array(), o.to_array());
        CostVector::from_array(core::array::from_fn(|i| a[i] + b[i]))
    }
}

/// Index of a cost by short (`oc`) or long (`occupancy`) name.
pub fn cost_index(name: &str) -> Option<usize> {
    const LONG: [&str; 6] = ["occupancy", "uniformity", "compactness", "support", "convexity", "symmetry"];
    COST_NAMES.iter().position(|n| *n == name).or_else(|| LONG.iter().position(|n| *n == name))
}

/// Weights of every energy term.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CrfWeights {
    /// Per-cost weights (may be negative, e.g. support).
    pub mu_u: [f64; 6],
    /// Per-cost normalizers, strictly positive.
    pub w: [f64; 6],
    pub mu_pw: f64,
    pub mu_par: f64,
    pub mu_cov: f64,
    pub mu_coc: f64,
}

impl Default for CrfWeights {
    fn default() -> Self {
        CrfWeights {
            mu_u: [1.0, 0.5, 1.0, -0.5, 0.5, 0.5],
            w: [1.0; 6],
            mu_pw: 2.0,
            mu_par: 0.05,
            mu_cov: -3.0,
            mu_coc: -0.5,
        }
    }
}

impl CrfWeights {
    /// Strict sign constraints: `w > 0`, `mu_pw > 0`, `mu_par > 0`,
    /// `mu_cov < 0`, `mu_coc < 0`.
    pub fn validate(&self) -> Result<()> {
        self.validate_finite()?;
        if !(self.mu_pw > 0.0 && self.mu_par > 0.0 && self.mu_cov < 0.0 && self.mu_coc < 0.0) {
            return Err(Error::InvalidArgument(format!(
                "weight signs violated: mu_pw={} mu_par={} mu_cov={} mu_coc={}",
                self.mu_pw, self.mu_par, self.mu_cov, self.mu_coc
            )));
        }
        Ok(())
    }

    /// Like [`validate`](Self::validate) but admits switched-off terms
    /// (`0`), as used by ablations and the first co-occurrence round.
    pub fn validate_relaxed(&self) -> Result<()> {
        self.validate_finite()?;
        if !(self.mu_pw >= 0.0 && self.mu_par >= 0.0 && self.mu_cov <= 0.0 && self.mu_coc <= 0.0) {
            return Err(Error::InvalidArgument(format!(
                "weight signs violated: mu_pw={} mu_par={} mu_cov={} mu_coc={}",
                self.mu_pw, self.mu_par, self.mu_cov, self.mu_coc
            )));
        }
        Ok(())
    }

    fn validate_finite(&self) -> Result<()> {
        let all = self.mu_u.iter().chain(&self.w).chain([&self.mu_pw, &self.mu_par, &self.mu_cov, &self.mu_coc]);
        if all.clone().any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument("weights must be finite".into()));
        }
        if self.w.iter().any(|&w| !(w > 0.0)) {
            return Err(Error::InvalidArgument("normalizers must be positive".into()));
        }
        Ok(())
    }

    /// Copy with the named costs switched off.
    pub fn without_costs(&self, drop: &[usize]) -> CrfWeights {
        let mut w = *self;
        for &i in drop {
            w.mu_u[i] = 0.0;
        }
        w
    }
}

/// `Σ_t mu_u[t] * w[t] * c[t]`.
pub fn fuse_unary(costs: &CostVector, weights: &CrfWeights) -> f64 {
    let c = costs.to_array();
    (0..6).map(|t| weights.mu_u[t] * weights.w[t] * c[t]).sum()
}

/// Normalizers `1 / p95(cost)` over a calibration set, clamped to
/// `[1e-3, 1e3]`.
pub fn calibrate_normalizers<'a>(costs: impl IntoIterator<Item = &'a CostVector>) -> [f64; 6] {
    let mut columns: [Vec<f64>; 6] = Default::default();
    for c in costs {
        for (col, v) in columns.iter_mut().zip(c.to_array()) {
            col.push(v);
        }
    }
    core::array::from_fn(|t| match math::percentile(&columns[t], 0.95) {
        Some(p) if p > 0.0 => (1.0 / p).clamp(1e-3, 1e3),
        _ => 1e3,
    })
}

/// Fraction of grid cells with centre inside the box that are empty; 1 when
/// the box contains no cell centre.
pub fn cost_occupancy(bx: &OrientedBox, grid: &VoxelGrid) -> f64 {
    let (total, occupied) = bx.count_cells(grid);
    if total == 0 {
        1.0
    } else {
        (total - occupied) as f64 / total as f64
    }
}

/// The 26 neighbourhood directions, normalized.
fn direction_bins() -> [Vec3; 26] {
    let mut out = [Vec3::ZERO; 26];
    let mut k = 0;
    for dz in -1i32..=1 {
        for dy in -1i32..=1 {
            for dx in -1i32..=1 {
                if dx == 0 && dy == 0 && dz == 0 {
                    continue;
                }
                out[k] = Vec3::new(dx as f64, dy as f64, dz as f64).normalize();
                k += 1;
            }
        }
    }
    out
}

/// Bin of a normal expressed in the box frame (ties go to the lower bin).
pub fn direction_bin(bx: &OrientedBox, normal: Vec3) -> usize {
    let local = Vec3::new(normal.dot(bx.axes[0]), normal.dot(bx.axes[1]), normal.dot(bx.axes[2]));
    let bins = direction_bins();
    let mut best = 0;
    let mut best_dot = f64::NEG_INFINITY;
    for (b, d) in bins.iter().enumerate() {
        let v = local.dot(*d);
        if v > best_dot + 1e-12 {
            best = b;
            best_dot = v;
        }
    }
    best
}

/// Shannon entropy (natural log) of a normal set over the 26 box-frame
/// direction bins.
pub fn normal_entropy(bx: &OrientedBox, normals: impl IntoIterator<Item = Vec3>) -> f64 {
    let mut hist = [0usize; 26];
    let mut n = 0usize;
    for q in normals {
        hist[direction_bin(bx, q)] += 1;
        n += 1;
    }
    if n == 0 {
        return 0.0;
    }
    hist.iter()
        .filter(|&&c| c > 0)
        .map(|&c| {
            let p = c as f64 / n as f64;
            -p * math::ln(p)
        })
        .sum()
}

fn find_region(regions: &[SegmentedRegion], id: usize) -> Option<&SegmentedRegion> {
    match regions.get(id) {
        Some(r) if r.id == id => Some(r),
        _ => regions.iter().find(|r| r.id == id),
    }
}

fn find_cloud(clouds: &[ViewCloud], view: usize) -> Option<&ViewCloud> {
    match clouds.get(view) {
        Some(c) if c.view_id == view => Some(c),
        _ => clouds.iter().find(|c| c.view_id == view),
    }
}

/// Mean normal-direction entropy over the box's source regions.
pub fn cost_uniformity(bx: &OrientedBox, regions: &[SegmentedRegion], clouds: &[ViewCloud]) -> Result<f64> {
    let sources: Vec<&SegmentedRegion> =
        bx.source_regions.iter().filter_map(|&id| find_region(regions, id)).collect();
    if sources.is_empty() {
        return Err(Error::NoSourceRegions);
    }
    let mut total = 0.0;
    for r in &sources {
        let cloud = find_cloud(clouds, r.view_id).ok_or(Error::NoSourceRegions)?;
        total += normal_entropy(bx, r.point_indices.iter().map(|&i| cloud.cloud.normals()[i]));
    }
    Ok(total / sources.len() as f64)
}

/// One face of a box: outward normal `sign * axes[axis]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoxFace {
    pub axis: usize,
    pub sign: f64,
}

impl BoxFace {
    pub fn all() -> [BoxFace; 6] {
        core::array::from_fn(|i| BoxFace { axis: i / 2, sign: if i % 2 == 0 { -1.0 } else { 1.0 } })
    }

    pub fn normal(&self, bx: &OrientedBox) -> Vec3 {
        bx.axes[self.axis] * self.sign
    }

    pub fn center(&self, bx: &OrientedBox) -> Vec3 {
        bx.center + bx.axes[self.axis] * (self.sign * bx.extents[self.axis])
    }

    /// A face is visible when its outward normal points against at least
    /// one view direction. Faces parallel to a view direction (within
    /// `1e-9`) are not seen by that view.
    pub fn is_visible(&self, bx: &OrientedBox, view_dirs: &[Vec3]) -> bool {
        let n = self.normal(bx);
        view_dirs.iter().any(|&d| n.dot(d) < -1e-9)
    }
}

/// Parameters of [`cost_compactness`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CompactnessParams {
    /// Raster size per face side.
    pub cells: usize,
    /// Maximum distance of a point from the face plane.
    pub band: f64,
}

/// Uncovered fraction of one face: `(a_f - v_f) / a_f` with `v_f` the area
/// of raster cells hit by points within `band` of the face.
pub fn face_uncovered_fraction(
    bx: &OrientedBox,
    face: BoxFace,
    points: impl IntoIterator<Item = Vec3>,
    params: &CompactnessParams,
) -> f64 {
    let s = params.cells.max(1);
    let (u, v) = ((face.axis + 1) % 3, (face.axis + 2) % 3);
    let (eu, ev) = (bx.extents[u], bx.extents[v]);
    let plane = face.sign * bx.extents[face.axis];
    let mut covered = alloc::vec![false; s * s];
    for p in points {
        let l = bx.to_local(p).to_array();
        if (l[face.axis] - plane).abs() > params.band || l[u].abs() > eu || l[v].abs() > ev {
            continue;
        }
        let cu = (((l[u] + eu) / (2.0 * eu)) * s as f64) as usize;
        let cv = (((l[v] + ev) / (2.0 * ev)) * s as f64) as usize;
        covered[cu.min(s - 1) + s * cv.min(s - 1)] = true;
    }
    let hit = covered.iter().filter(|&&c| c).count();
    (s * s - hit) as f64 / (s * s) as f64
}

/// Mean uncovered fraction over the box faces visible from the cameras.
pub fn cost_compactness(bx: &OrientedBox, clouds: &[ViewCloud], params: &CompactnessParams) -> Result<f64> {
    let dirs: Vec<Vec3> = clouds.iter().map(|c| c.forward).collect();
    let visible: Vec<BoxFace> = BoxFace::all().into_iter().filter(|f| f.is_visible(bx, &dirs)).collect();
    if visible.is_empty() {
        return Err(Error::NoVisibleFaces);
    }
    let total: f64 = visible
        .iter()
        .map(|&f| {
            face_uncovered_fraction(bx, f, clouds.iter().flat_map(|c| c.cloud.points().iter().copied()), params)
        })
        .sum();
    Ok(total / visible.len() as f64)
}

/// `n_sc / (n_ex - n_sc)` with `n_ex`, `n_sc` the occupied cells in the 5%
/// enlarged and the original box, bounded by `cap`; `cap` when the shell
/// holds nothing.
pub fn cost_support(bx: &OrientedBox, grid: &VoxelGrid, cap: f64) -> Result<f64> {
    let enlarged = bx.scaled_extents(1.05);
    let (total_ex, n_ex) = enlarged.count_cells(grid);
    if total_ex == 0 {
        return Err(Error::EmptyIntersection);
    }
    let (_, n_sc) = bx.count_cells(grid);
    if n_ex <= n_sc {
        Ok(cap)
    } else {
        Ok((n_sc as f64 / (n_ex - n_sc) as f64).min(cap))
    }
}

/// Mean distance of a view's points to the camera-facing faces of their
/// convex hull; `None` when the set has no 3D hull or no such face.
pub fn frontal_hull_distance(points: &[Vec3], eye: Vec3) -> Option<f64> {
    let hull = ConvexHull::new(points)?;
    let front: Vec<usize> = (0..hull.faces.len())
        .filter(|&f| hull.normals[f].dot(eye - hull.face_centroid(f)) > 0.0)
        .collect();
    if front.is_empty() {
        return None;
    }
    let total: f64 = points.iter().map(|&p| hull.distance_to_faces(p, &front)).sum();
    Some(total / points.len() as f64)
}

/// Convexity cost averaged over views with a valid frontal hull. At most
/// `max_points` points per view are used (evenly strided).
pub fn cost_convexity(bx: &OrientedBox, clouds: &[ViewCloud], max_points: usize) -> Result<f64> {
    let test = bx.scaled_extents(1.01);
    let mut sum = 0.0;
    let mut views = 0usize;
    for c in clouds {
        let inside: Vec<Vec3> = c.cloud.points().iter().copied().filter(|&p| test.contains(p)).collect();
        let pts = stride_sample(&inside, max_points);
        if pts.len() < 4 {
            continue;
        }
        if let Some(d) = frontal_hull_distance(&pts, c.eye) {
            sum += d;
            views += 1;
        }
    }
    if views == 0 {
        return Err(Error::NoValidViews);
    }
    Ok(sum / views as f64)
}

/// Every `ceil(n / max)`-th element, so at most `max` remain.
pub fn stride_sample<T: Copy>(items: &[T], max: usize) -> Vec<T> {
    if max == 0 || items.len() <= max {
        return items.to_vec();
    }
    let step = items.len().div_ceil(max);
    items.iter().step_by(step).copied().collect()
}

/// Reflective symmetry cost of the cloud enclosed by a box.
///
/// For each principal axis `x` (eigenvalue `π_x` of the point covariance)
/// the cloud is mirrored about the plane through the centroid normal to `x`.
/// Each original point `j` is paired with its nearest mirrored point `n_j`:
///
/// `term_x = mean_j ( |p_j - p'_{n_j}| / l_x + (1 - q_j · q'_{n_j}) )`
///
/// with `l_x` the box width along `x`. The cost is `Σ π_x term_x / Σ π_x`.
pub fn cost_symmetry(bx: &OrientedBox, cloud: &PointCloud) -> Result<f64> {
    let pts = cloud.points();
    let normals = cloud.normals();
    if pts.len() < 10 {
        return Err(Error::TooFewPoints { needed: 10, got: pts.len() });
    }
    let (mean, cov) = mean_and_covariance(pts).ok_or(Error::DegenerateCovariance)?;
    let (values, axes) = symmetric_eigen(&cov);
    let weight_sum: f64 = values.iter().map(|v| v.max(0.0)).sum();
    if !(weight_sum > 0.0) {
        return Err(Error::DegenerateCovariance);
    }
    let n = pts.len() as f64;
    let mut cost = 0.0;
    for k in 0..3 {
        let pi = values[k].max(0.0);
        let axis = axes[k];
        let length = bx.width_along(axis);
        if !(length > 0.0) {
            return Err(Error::DegenerateCovariance);
        }
        let mirrored: Vec<Vec3> = pts.iter().map(|&p| p - axis * (2.0 * (p - mean).dot(axis))).collect();
        let mirrored_normals: Vec<Vec3> = normals.iter().map(|&q| q - axis * (2.0 * q.dot(axis))).collect();
        let tree = KdTree::new(&mirrored);
        let mut position = 0.0;
        let mut orientation = 0.0;
        for (j, &p) in pts.iter().enumerate() {
            let (nj, d2) = tree.nearest(p).expect("non-empty");
            position += math::sqrt(d2);
            orientation += 1.0 - normals[j].dot(mirrored_normals[nj]);
        }
        let term = position / length / n + orientation / n;
        cost += pi * term;
    }
    Ok(cost / weight_sum)
}

/// Region areas normalized to sum to one.
pub fn coverage_costs(regions: &[SegmentedRegion]) -> Vec<f64> {
    let total: f64 = regions.iter().map(|r| r.area).sum();
    if !(total > 0.0) {
        return alloc::vec![0.0; regions.len()];
    }
    regions.iter().map(|r| r.area / total).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    #[test]
    fn fuse_examples() {
        let c = CostVector::from_array([0.1, 0.2, 0.3, 0.4, 0.5, 0.6]);
        let mut w = CrfWeights { mu_u: [1.0; 6], ..CrfWeights::default() };
        assert!((fuse_unary(&c, &w) - 2.1).abs() < 1e-12);
        w.mu_u = [0.0; 6];
        assert_eq!(fuse_unary(&c, &w), 0.0);
        w.mu_u = [1.0, 0.0, 0.0, 0.0, 0.0, 0.0];
        w.w = [2.0, 1.0, 1.0, 1.0, 1.0, 1.0];
        let c = CostVector::from_array([0.5; 6]);
        assert_eq!(fuse_unary(&c, &w), 1.0);
    }

    #[test]
    fn coverage_examples() {
        let r = |area| SegmentedRegion { id: 0, view_id: 0, point_indices: vec![], mean_normal: Vec3::Z, area };
        assert_eq!(coverage_costs(&[r(2.0)]), vec![1.0]);
        assert_eq!(coverage_costs(&[r(2.0), r(2.0)]), vec![0.5, 0.5]);
        assert_eq!(coverage_costs(&[r(1.0), r(3.0)]), vec![0.25, 0.75]);
    }

    #[test]
    fn weight_signs() {
        assert!(CrfWeights::default().validate().is_ok());
        let w = CrfWeights { mu_cov: 0.0, ..CrfWeights::default() };
        assert!(w.validate().is_err());
        assert!(w.validate_relaxed().is_ok());
        assert!(CrfWeights { mu_pw: -1.0, ..CrfWeights::default() }.validate_relaxed().is_err());
    }

    #[test]
    fn entropy_of_two_bins() {
        let b = OrientedBox::axis_aligned(Vec3::ZERO, Vec3::splat(1.0)).unwrap();
        assert_eq!(normal_entropy(&b, vec![Vec3::Z; 10]), 0.0);
        let two: Vec<Vec3> = (0..10).map(|i| if i % 2 == 0 { Vec3::Z } else { Vec3::X }).collect();
        assert!((normal_entropy(&b, two) - core::f64::consts::LN_2).abs() < 1e-12);
    }

    #[test]
    fn cost_names_resolve() {
        assert_eq!(cost_index("sc"), Some(3));
        assert_eq!(cost_index("symmetry"), Some(5));
        assert_eq!(cost_index("bogus"), None);
    }
}
