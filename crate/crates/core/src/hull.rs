//! Incremental 3D convex hull.

use alloc::collections::BTreeSet;
use alloc::vec::Vec;

use crate::geometry::{closest_point_on_triangle, Aabb, Vec3};

#[derive(Debug, Clone)]
pub struct ConvexHull {
    pub points: Vec<Vec3>,
    /// Triangles wound counter-clockwise seen from outside.
    pub faces: Vec<[usize; 3]>,
    /// Outward unit normals, one per face.
    pub normals: Vec<Vec3>,
}

#[derive(Clone, Copy)]
struct Face {
    v: [usize; 3],
    normal: Vec3,
    offset: f64,
    alive: bool,
}

impl Face {
    fn new(points: &[Vec3], v: [usize; 3]) -> Face {
        let (a, b, c) = (points[v[0]], points[v[1]], points[v[2]]);
        let normal = (b - a).cross(c - a).normalize();
        Face { v, normal, offset: normal.dot(a), alive: true }
    }

    #[inline]
    fn distance(&self, p: Vec3) -> f64 {
        self.normal.dot(p) - self.offset
    }
}

impl ConvexHull {
    /// Hull of `points`; `None` when they are (nearly) coplanar or fewer
    /// than four.
    pub fn new(points: &[Vec3]) -> Option<ConvexHull> {
        if points.len() < 4 {
            return None;
        }
        let scale = Aabb::from_points(points.iter().copied())?.diagonal();
        if !(scale > 0.0) {
            return None;
        }
        let eps = 1e-10 * scale;

        let i0 = (0..points.len()).min_by(|&a, &b| points[a].x.total_cmp(&points[b].x))?;
        let i1 = farthest(points, |p| p.distance(points[i0]))?;
        let dir = (points[i1] - points[i0]).try_normalize()?;
        let i2 = farthest(points, |p| {
            let d = p - points[i0];
            (d - dir * d.dot(dir)).norm()
        })?;
        let n = (points[i1] - points[i0]).cross(points[i2] - points[i0]).try_normalize()?;
        if (points[i2] - points[i0]).cross(dir).norm() <= eps {
            return None;
        }
        let i3 = farthest(points, |p| (p - points[i0]).dot(n).abs())?;
        if (points[i3] - points[i0]).dot(n).abs() <= eps * 10.0 {
            return None;
        }

        let interior = (points[i0] + points[i1] + points[i2] + points[i3]) * 0.25;
        let mut faces: Vec<Face> = Vec::new();
        for tri in [[i0, i1, i2], [i0, i1, i3], [i0, i2, i3], [i1, i2, i3]] {
            let mut f = Face::new(points, tri);
            if f.distance(interior) > 0.0 {
                f = Face::new(points, [tri[0], tri[2], tri[1]]);
            }
            faces.push(f);
        }

        let mut visible = Vec::new();
        let mut edges: Vec<(usize, usize)> = Vec::new();
        for (pi, &p) in points.iter().enumerate() {
            if pi == i0 || pi == i1 || pi == i2 || pi == i3 {
                continue;
            }
            visible.clear();
            visible.extend((0..faces.len()).filter(|&f| faces[f].alive && faces[f].distance(p) > eps));
            if visible.is_empty() {
                continue;
            }
            edges.clear();
            for &f in &visible {
                let v = faces[f].v;
                edges.extend([(v[0], v[1]), (v[1], v[2]), (v[2], v[0])]);
                faces[f].alive = false;
            }
            let set: BTreeSet<(usize, usize)> = edges.iter().copied().collect();
            for &(a, b) in &edges {
                if !set.contains(&(b, a)) {
                    faces.push(Face::new(points, [a, b, pi]));
                }
            }
            if faces.len() > 4 * points.len() + 64 {
                faces.retain(|f| f.alive);
            }
        }

        let alive: Vec<Face> = faces.into_iter().filter(|f| f.alive).collect();
        Some(ConvexHull {
            points: points.to_vec(),
            faces: alive.iter().map(|f| f.v).collect(),
            normals: alive.iter().map(|f| f.normal).collect(),
        })
    }

    pub fn face_centroid(&self, f: usize) -> Vec3 {
        let [a, b, c] = self.faces[f];
        (self.points[a] + self.points[b] + self.points[c]) / 3.0
    }

    /// Shortest distance from `p` to the union of the listed faces.
    pub fn distance_to_faces(&self, p: Vec3, faces: &[usize]) -> f64 {
        faces
            .iter()
            .map(|&f| {
                let [a, b, c] = self.faces[f];
                closest_point_on_triangle(p, self.points[a], self.points[b], self.points[c]).distance(p)
            })
            .fold(f64::INFINITY, f64::min)
    }
}

fn farthest(points: &[Vec3], key: impl Fn(Vec3) -> f64) -> Option<usize> {
    (0..points.len()).max_by(|&a, &b| key(points[a]).total_cmp(&key(points[b])).then(b.cmp(&a)))
}
