//! Six-view camera rig, ray-cast depth rendering and depth-image normals.

use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::cloud::PointCloud;
use crate::error::{Error, Result};
use crate::geometry::{ray_triangle, Aabb, Mat3, RigidTransform, Vec3};
use crate::math;
use crate::mesh::TriangleMesh;

/// Number of rig viewpoints.
pub const VIEW_COUNT: usize = 6;
/// Elevation of the raised viewpoints, in degrees.
pub const RAISED_ELEVATION_DEG: f64 = 15.0;
/// Camera distance as a multiple of the bounds diagonal.
pub const DISTANCE_FACTOR: f64 = 2.5;

/// Pinhole intrinsics in pixels. Pixel `(u, v)` covers `[u, u+1) x [v, v+1)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Intrinsics {
    pub fx: f64,
    pub fy: f64,
    pub cx: f64,
    pub cy: f64,
}

impl Intrinsics {
    /// Square pixels, principal point at the image centre.
    pub fn from_vertical_fov(width: usize, height: usize, fov_deg: f64) -> Intrinsics {
        let f = (height as f64 * 0.5) / math::tan(math::to_radians(fov_deg) * 0.5);
        Intrinsics { fx: f, fy: f, cx: width as f64 * 0.5, cy: height as f64 * 0.5 }
    }
}

/// One camera of the rig. `pose` maps world to camera coordinates
/// (x right, y down, z forward).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RigCamera {
    pub azimuth_deg: f64,
    pub elevation_deg: f64,
    pub eye: Vec3,
    pub pose: RigidTransform,
}

/// World-to-camera pose at `eye` looking at `target` with +z as world up.
pub fn look_at(eye: Vec3, target: Vec3) -> Result<RigidTransform> {
    let forward = (target - eye).try_normalize().ok_or(Error::DegenerateBounds)?;
    let up = if forward.cross(Vec3::Z).norm() > 1e-9 { Vec3::Z } else { Vec3::Y };
    let right = forward.cross(up).normalize();
    let down = forward.cross(right);
    let rotation = Mat3::from_rows(right, down, forward);
    Ok(RigidTransform { rotation, translation: -rotation.mul_vec(eye) })
}

/// Six cameras at azimuths 0, 60, ..., 300 degrees around the vertical (z)
/// axis through the bounds centre, alternating between elevation 0 and 15
/// degrees, at 2.5 bounds diagonals from the centre.
pub fn camera_rig(bounds: &Aabb) -> Result<Vec<RigCamera>> {
    let diag = bounds.diagonal();
    if !(diag > 0.0) || !diag.is_finite() {
        return Err(Error::DegenerateBounds);
    }
    let center = bounds.center();
    let distance = DISTANCE_FACTOR * diag;
    (0..VIEW_COUNT)
        .map(|k| {
            let azimuth_deg = 60.0 * k as f64;
            let elevation_deg = if k % 2 == 0 { 0.0 } else { RAISED_ELEVATION_DEG };
            let (az, el) = (math::to_radians(azimuth_deg), math::to_radians(elevation_deg));
            let dir = Vec3::new(math::cos(el) * math::cos(az), math::cos(el) * math::sin(az), math::sin(el));
            let eye = center + dir * distance;
            Ok(RigCamera { azimuth_deg, elevation_deg, eye, pose: look_at(eye, center)? })
        })
        .collect()
}

/// Ray-cast depth image. `depth[u + width * v]` is the distance along the
/// pixel ray to the nearest hit, 0 where the ray misses.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DepthView {
    pub width: usize,
    pub height: usize,
    pub depth: Vec<f64>,
    pub pose: RigidTransform,
    pub intrinsics: Intrinsics,
}

impl DepthView {
    pub fn eye(&self) -> Vec3 {
        self.pose.inverse().translation
    }

    /// Unit world-space direction of the ray through the centre of `(u, v)`.
    pub fn ray_direction(&self, u: usize, v: usize) -> Vec3 {
        pixel_ray(&self.pose, &self.intrinsics, u, v)
    }

    /// World point of a hit pixel.
    pub fn back_project(&self, u: usize, v: usize) -> Option<Vec3> {
        let d = self.depth[u + self.width * v];
        (d > 0.0).then(|| self.eye() + self.ray_direction(u, v) * d)
    }

    /// Continuous pixel coordinates of a world point (camera in front).
    pub fn project(&self, p: Vec3) -> Option<(f64, f64)> {
        let c = self.pose.apply(p);
        (c.z > 0.0).then(|| {
            (self.intrinsics.fx * c.x / c.z + self.intrinsics.cx, self.intrinsics.fy * c.y / c.z + self.intrinsics.cy)
        })
    }

    pub fn hit_count(&self) -> usize {
        self.depth.iter().filter(|&&d| d > 0.0).count()
    }
}

fn pixel_ray(pose: &RigidTransform, k: &Intrinsics, u: usize, v: usize) -> Vec3 {
    let dc = Vec3::new((u as f64 + 0.5 - k.cx) / k.fx, (v as f64 + 0.5 - k.cy) / k.fy, 1.0);
    pose.rotation.transpose().mul_vec(dc).normalize()
}

pub fn render_depth(
    mesh: &TriangleMesh,
    pose: &RigidTransform,
    intrinsics: &Intrinsics,
    width: usize,
    height: usize,
) -> Result<DepthView> {
    if width < 16 || height < 16 {
        return Err(Error::InvalidArgument("depth views need at least 16x16 pixels".into()));
    }
    if mesh.faces().is_empty() {
        return Err(Error::EmptyMesh);
    }
    let eye = pose.inverse().translation;
    let rays: Vec<Vec3> = (0..height)
        .flat_map(|v| (0..width).map(move |u| (u, v)))
        .map(|(u, v)| pixel_ray(pose, intrinsics, u, v))
        .collect();
    let mut depth = vec![f64::INFINITY; width * height];

    for tri in mesh.triangles() {
        let cam = [pose.apply(tri[0]), pose.apply(tri[1]), pose.apply(tri[2])];
        let near = 1e-9;
        let (u0, u1, v0, v1) = if cam.iter().all(|c| c.z > near) {
            let mut lo = (f64::INFINITY, f64::INFINITY);
            let mut hi = (f64::NEG_INFINITY, f64::NEG_INFINITY);
            for c in &cam {
                let px = intrinsics.fx * c.x / c.z + intrinsics.cx;
                let py = intrinsics.fy * c.y / c.z + intrinsics.cy;
                lo = (lo.0.min(px), lo.1.min(py));
                hi = (hi.0.max(px), hi.1.max(py));
            }
            // One pixel of slack for rounding at triangle borders.
            let clamp = |x: f64, n: usize| x.clamp(0.0, n as f64 - 1.0) as usize;
            if hi.0 < -1.0 || hi.1 < -1.0 || lo.0 > width as f64 + 1.0 || lo.1 > height as f64 + 1.0 {
                continue;
            }
            (
                clamp(math::floor(lo.0) - 1.0, width),
                clamp(math::ceil(hi.0) + 1.0, width),
                clamp(math::floor(lo.1) - 1.0, height),
                clamp(math::ceil(hi.1) + 1.0, height),
            )
        } else if cam.iter().all(|c| c.z <= near) {
            continue;
        } else {
            (0, width - 1, 0, height - 1)
        };
        for v in v0..=v1 {
            for u in u0..=u1 {
                let i = u + width * v;
                if let Some(t) = ray_triangle(eye, rays[i], tri[0], tri[1], tri[2]) {
                    if t < depth[i] {
                        depth[i] = t;
                    }
                }
            }
        }
    }
    for d in depth.iter_mut() {
        if !d.is_finite() {
            *d = 0.0;
        }
    }
    Ok(DepthView { width, height, depth, pose: *pose, intrinsics: *intrinsics })
}

/// Registered world-frame point cloud of one view.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ViewCloud {
    pub cloud: PointCloud,
    pub view_id: usize,
    /// Camera centre of the source view.
    pub eye: Vec3,
    /// Unit optical axis of the source view.
    pub forward: Vec3,
    /// Source pixel `(u, v)` of every point.
    pub pixels: Vec<(u32, u32)>,
}

/// Relative depth jump beyond which a neighbour is treated as lying on a
/// different surface.
pub const DEFAULT_MAX_DEPTH_JUMP: f64 = 0.05;

/// Back-projects hit pixels and estimates normals from one-sided
/// differences of neighbouring back-projected pixels.
///
/// Along each image axis the neighbour with the smaller depth change is
/// used; a neighbour is unusable when it is a miss or its depth differs by
/// more than `max_depth_jump * depth`. Pixels without a usable neighbour
/// along either axis are dropped.
pub fn normals_from_depth(view: &DepthView, view_id: usize, max_depth_jump: f64) -> ViewCloud {
    let (w, h) = (view.width, view.height);
    let eye = view.eye();
    let mut cloud = PointCloud::empty();
    let mut pixels = Vec::new();
    for v in 0..h {
        for u in 0..w {
            let d = view.depth[u + w * v];
            if d <= 0.0 {
                continue;
            }
            let Some(p) = view.back_project(u, v) else { continue };
            // Tangent along one axis, oriented towards increasing pixel index.
            let tangent = |prev: Option<(usize, usize)>, next: Option<(usize, usize)>| -> Option<Vec3> {
                let usable = |q: Option<(usize, usize)>| {
                    let (a, b) = q?;
                    let dn = view.depth[a + w * b];
                    (dn > 0.0 && (dn - d).abs() <= max_depth_jump * d).then_some(((dn - d).abs(), a, b))
                };
                match (usable(prev), usable(next)) {
                    (Some(pr), Some(nx)) if nx.0 < pr.0 => Some(view.back_project(nx.1, nx.2)? - p),
                    (Some(pr), _) => Some(p - view.back_project(pr.1, pr.2)?),
                    (None, Some(nx)) => Some(view.back_project(nx.1, nx.2)? - p),
                    (None, None) => None,
                }
            };
            let horizontal = tangent(u.checked_sub(1).map(|a| (a, v)), (u + 1 < w).then_some((u + 1, v)));
            let vertical = tangent(v.checked_sub(1).map(|b| (u, b)), (v + 1 < h).then_some((u, v + 1)));
            let (Some(tx), Some(ty)) = (horizontal, vertical) else { continue };
            let Some(mut n) = tx.cross(ty).try_normalize() else { continue };
            if n.dot(p - eye) > 0.0 {
                n = -n;
            }
            cloud.push(p, n);
            pixels.push((u as u32, v as u32));
        }
    }
    let forward = view.pose.rotation.transpose().mul_vec(Vec3::Z);
    ViewCloud { cloud, view_id, eye, forward, pixels }
}

/// Renders all rig views of `mesh` and converts them to registered clouds.
pub fn render_views(
    mesh: &TriangleMesh,
    width: usize,
    height: usize,
    fov_deg: f64,
    max_depth_jump: f64,
) -> Result<Vec<ViewCloud>> {
    let rig = camera_rig(&mesh.bounds())?;
    let k = Intrinsics::from_vertical_fov(width, height, fov_deg);
    rig.iter()
        .enumerate()
        .map(|(id, cam)| {
            let view = render_depth(mesh, &cam.pose, &k, width, height)?;
            Ok(normals_from_depth(&view, id, max_depth_jump))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rig_angles() {
        let rig = camera_rig(&Aabb::new(Vec3::splat(-0.5), Vec3::splat(0.5))).unwrap();
        let az: Vec<f64> = rig.iter().map(|c| c.azimuth_deg).collect();
        let el: Vec<f64> = rig.iter().map(|c| c.elevation_deg).collect();
        assert_eq!(az, vec![0.0, 60.0, 120.0, 180.0, 240.0, 300.0]);
        assert_eq!(el, vec![0.0, 15.0, 0.0, 15.0, 0.0, 15.0]);
    }

    #[test]
    fn optical_axes_hit_center() {
        let b = Aabb::new(Vec3::new(1.0, 2.0, 3.0), Vec3::new(2.0, 4.0, 3.5));
        for cam in camera_rig(&b).unwrap() {
            let c = cam.pose.apply(b.center());
            assert!(c.x.abs() < 1e-9 && c.y.abs() < 1e-9 && c.z > 0.0);
            assert!(cam.pose.rotation.is_rotation(1e-9));
        }
    }

    #[test]
    fn zero_extent_bounds_rejected() {
        let b = Aabb::new(Vec3::ZERO, Vec3::ZERO);
        assert_eq!(camera_rig(&b), Err(Error::DegenerateBounds));
    }

    #[test]
    fn miss_everything_gives_empty_cloud() {
        let mesh = TriangleMesh::axis_aligned_box(Vec3::ZERO, Vec3::splat(1.0));
        // Camera at +10 z looking further up: everything is behind it.
        let pose = look_at(Vec3::new(0.0, 0.0, 10.0), Vec3::new(0.0, 0.0, 20.0)).unwrap();
        let k = Intrinsics::from_vertical_fov(32, 32, 40.0);
        let view = render_depth(&mesh, &pose, &k, 32, 32).unwrap();
        assert!(view.depth.iter().all(|&d| d == 0.0));
        assert!(normals_from_depth(&view, 0, DEFAULT_MAX_DEPTH_JUMP).cloud.is_empty());
    }
}
