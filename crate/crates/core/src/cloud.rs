//! Oriented point clouds, surface sampling and canonical alignment.

use alloc::format;
use alloc::vec::Vec;

use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{mean_and_covariance, symmetric_eigen, Mat3, Similarity, Vec3};
use crate::math;
use crate::mesh::TriangleMesh;

/// Points with index-aligned unit normals.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct PointCloud {
    points: Vec<Vec3>,
    normals: Vec<Vec3>,
}

impl PointCloud {
    pub fn new(points: Vec<Vec3>, normals: Vec<Vec3>) -> Result<PointCloud> {
        if points.len() != normals.len() {
            return Err(Error::InvalidArgument(format!(
                "{} points but {} normals",
                points.len(),
                normals.len()
            )));
        }
        if let Some(j) = normals.iter().position(|n| (n.norm() - 1.0).abs() > 1e-6) {
            return Err(Error::InvalidArgument(format!("normal {j} is not unit length")));
        }
        Ok(PointCloud { points, normals })
    }

    pub fn empty() -> PointCloud {
        PointCloud::default()
    }

    pub fn points(&self) -> &[Vec3] {
        &self.points
    }

    pub fn normals(&self) -> &[Vec3] {
        &self.normals
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Subset by index, preserving order.
    pub fn select(&self, indices: &[usize]) -> PointCloud {
        PointCloud {
            points: indices.iter().map(|&i| self.points[i]).collect(),
            normals: indices.iter().map(|&i| self.normals[i]).collect(),
        }
    }

    pub fn extend(&mut self, other: &PointCloud) {
        self.points.extend_from_slice(&other.points);
        self.normals.extend_from_slice(&other.normals);
    }

    pub fn transformed(&self, t: &Similarity) -> PointCloud {
        PointCloud {
            points: self.points.iter().map(|&p| t.apply(p)).collect(),
            normals: self.normals.iter().map(|&n| t.apply_direction(n).normalize()).collect(),
        }
    }

    pub(crate) fn push(&mut self, p: Vec3, n: Vec3) {
        self.points.push(p);
        self.normals.push(n);
    }
}

/// Uniform `[0, 1)` double from a ChaCha stream.
#[inline]
pub(crate) fn unit_f64(rng: &mut ChaCha8Rng) -> f64 {
    (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

/// Area-uniform surface samples with face normals, deterministic per seed.
pub fn sample_surface_points(mesh: &TriangleMesh, count: usize, seed: u64) -> Result<PointCloud> {
    if count == 0 {
        return Err(Error::InvalidArgument("sample count must be positive".into()));
    }
    let mut cumulative = Vec::with_capacity(mesh.faces().len());
    let mut total = 0.0;
    for f in 0..mesh.faces().len() {
        total += mesh.face_area(f);
        cumulative.push(total);
    }
    if !(total > 0.0) {
        return Err(Error::EmptyMesh);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut cloud = PointCloud::default();
    for _ in 0..count {
        let target = unit_f64(&mut rng) * total;
        let f = cumulative.partition_point(|&c| c <= target).min(cumulative.len() - 1);
        let [a, b, c] = mesh.triangle(f);
        let r1 = math::sqrt(unit_f64(&mut rng));
        let r2 = unit_f64(&mut rng);
        let p = a * (1.0 - r1) + b * (r1 * (1.0 - r2)) + c * (r1 * r2);
        let n = mesh.face_normal(f).ok_or(Error::EmptyMesh)?;
        cloud.push(p, n);
    }
    Ok(cloud)
}

/// Similarity that centres `points` on their centroid, rotates principal
/// axes (descending variance) onto +x, +y, +z and scales the longest
/// principal extent to 1.
///
/// Axis signs make each axis' third moment non-negative. Axes whose third
/// moment vanishes take whichever sign gives a proper rotation; if all three
/// are decided and the result is a reflection, the axis with the smallest
/// absolute third moment is flipped.
pub fn canonical_frame(points: &[Vec3]) -> Result<Similarity> {
    if points.len() < 4 {
        return Err(Error::DegenerateCloud);
    }
    let (mean, cov) = mean_and_covariance(points).ok_or(Error::DegenerateCloud)?;
    let (values, vectors) = symmetric_eigen(&cov);
    if !(values[2] > 1e-12 * values[0]) || !(values[0] > 0.0) {
        return Err(Error::DegenerateCloud);
    }

    let mut axes = vectors;
    let mut moments = [0.0f64; 3];
    let mut spread = [0.0f64; 3];
    for k in 0..3 {
        let (mut m3, mut lo, mut hi) = (0.0, f64::INFINITY, f64::NEG_INFINITY);
        for &p in points {
            let t = (p - mean).dot(axes[k]);
            m3 += t * t * t;
            lo = lo.min(t);
            hi = hi.max(t);
        }
        moments[k] = m3 / points.len() as f64;
        spread[k] = hi - lo;
    }
    let sigma3 = |k: usize| {
        let s = math::sqrt(values[k].max(0.0));
        s * s * s
    };
    let mut decided = [false; 3];
    for k in 0..3 {
        let flip = if moments[k].abs() > 1e-9 * sigma3(k) {
            decided[k] = true;
            moments[k] < 0.0
        } else {
            // Undecided: make the dominant component positive so an already
            // canonical cloud maps to itself.
            let a = axes[k];
            let dominant = if a.x.abs() >= a.y.abs() && a.x.abs() >= a.z.abs() {
                a.x
            } else if a.y.abs() >= a.z.abs() {
                a.y
            } else {
                a.z
            };
            dominant < 0.0
        };
        if flip {
            axes[k] = -axes[k];
            moments[k] = -moments[k];
        }
    }
    let det = axes[0].dot(axes[1].cross(axes[2]));
    if det < 0.0 {
        let flip = match (0..3).rev().find(|&k| !decided[k]) {
            Some(k) => k,
            None => (0..3)
                .min_by(|&a, &b| (moments[a] / sigma3(a)).total_cmp(&(moments[b] / sigma3(b))))
                .unwrap_or(2),
        };
        axes[flip] = -axes[flip];
    }

    let longest = spread[0].max(spread[1]).max(spread[2]);
    if !(longest > 0.0) {
        return Err(Error::DegenerateCloud);
    }
    let rotation = Mat3::from_rows(axes[0], axes[1], axes[2]);
    let scale = 1.0 / longest;
    let translation = -(rotation.mul_vec(mean) * scale);
    Ok(Similarity { rotation, scale, translation })
}

/// Canonically aligned copy of `cloud` and the transform that produced it.
pub fn canonical_align(cloud: &PointCloud) -> Result<(PointCloud, Similarity)> {
    let t = canonical_frame(cloud.points())?;
    Ok((cloud.transformed(&t), t))
}
