use alloc::format;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{Aabb, Similarity, Vec3};

/// Indexed triangle mesh in model units.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TriangleMesh {
    vertices: Vec<Vec3>,
    faces: Vec<[u32; 3]>,
}

/// Non-fatal findings collected while validating a mesh.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct LoadReport {
    /// Faces with (numerically) zero area. They are kept in the mesh.
    pub degenerate_faces: Vec<usize>,
}

impl TriangleMesh {
    /// Validates indices and rejects face-less meshes.
    pub fn new(vertices: Vec<Vec3>, faces: Vec<[u32; 3]>) -> Result<TriangleMesh> {
        if faces.is_empty() {
            return Err(Error::EmptyMesh);
        }
        let n = vertices.len();
        for (f, face) in faces.iter().enumerate() {
            if let Some(&bad) = face.iter().find(|&&i| i as usize >= n) {
                return Err(Error::InvalidMesh(format!(
                    "face {f} references vertex {bad} but the mesh has {n} vertices"
                )));
            }
        }
        if let Some(i) = vertices.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidMesh(format!("vertex {i} is not finite")));
        }
        Ok(TriangleMesh { vertices, faces })
    }

    pub fn vertices(&self) -> &[Vec3] {
        &self.vertices
    }

    pub fn faces(&self) -> &[[u32; 3]] {
        &self.faces
    }

    pub fn triangle(&self, f: usize) -> [Vec3; 3] {
        let [a, b, c] = self.faces[f];
        [self.vertices[a as usize], self.vertices[b as usize], self.vertices[c as usize]]
    }

    pub fn triangles(&self) -> impl Iterator<Item = [Vec3; 3]> + '_ {
        (0..self.faces.len()).map(move |f| self.triangle(f))
    }

    /// Twice the area times the unit normal (right-hand rule).
    pub fn face_cross(&self, f: usize) -> Vec3 {
        let [a, b, c] = self.triangle(f);
        (b - a).cross(c - a)
    }

    pub fn face_area(&self, f: usize) -> f64 {
        0.5 * self.face_cross(f).norm()
    }

    pub fn face_normal(&self, f: usize) -> Option<Vec3> {
        self.face_cross(f).try_normalize()
    }

    pub fn surface_area(&self) -> f64 {
        (0..self.faces.len()).map(|f| self.face_area(f)).sum()
    }

    pub fn bounds(&self) -> Aabb {
        // Only referenced vertices count.
        Aabb::from_points(self.faces.iter().flat_map(|f| f.iter().map(|&i| self.vertices[i as usize])))
            .expect("mesh has at least one face")
    }

    /// Reports zero-area faces relative to the mesh scale.
    pub fn report(&self) -> LoadReport {
        let diag = self.bounds().diagonal();
        let tol = 1e-12 * diag * diag;
        LoadReport {
            degenerate_faces: (0..self.faces.len()).filter(|&f| self.face_area(f) <= tol).collect(),
        }
    }

    pub fn transformed(&self, t: &Similarity) -> TriangleMesh {
        TriangleMesh {
            vertices: self.vertices.iter().map(|&v| t.apply(v)).collect(),
            faces: self.faces.clone(),
        }
    }

    /// Applies `f` to every vertex.
    pub fn map_vertices(&self, mut f: impl FnMut(Vec3) -> Vec3) -> TriangleMesh {
        TriangleMesh { vertices: self.vertices.iter().map(|&v| f(v)).collect(), faces: self.faces.clone() }
    }

    /// Concatenates meshes into one (no welding).
    pub fn merge<'a>(meshes: impl IntoIterator<Item = &'a TriangleMesh>) -> Result<TriangleMesh> {
        let mut vertices = Vec::new();
        let mut faces = Vec::new();
        for m in meshes {
            let base = vertices.len() as u32;
            vertices.extend_from_slice(&m.vertices);
            faces.extend(m.faces.iter().map(|f| [f[0] + base, f[1] + base, f[2] + base]));
        }
        TriangleMesh::new(vertices, faces)
    }

    /// Closed, outward-wound 12-triangle mesh of an axis-aligned box.
    pub fn axis_aligned_box(min: Vec3, max: Vec3) -> TriangleMesh {
        let corners: Vec<Vec3> = (0..8)
            .map(|i| {
                Vec3::new(
                    if i & 1 == 0 { min.x } else { max.x },
                    if i & 2 == 0 { min.y } else { max.y },
                    if i & 4 == 0 { min.z } else { max.z },
                )
            })
            .collect();
        TriangleMesh { vertices: corners, faces: BOX_FACES.to_vec() }
    }
}

/// Outward-wound triangles over the corner numbering `x | y << 1 | z << 2`.
pub(crate) const BOX_FACES: [[u32; 3]; 12] = [
    [0, 2, 3],
    [0, 3, 1], // -z
    [4, 5, 7],
    [4, 7, 6], // +z
    [0, 1, 5],
    [0, 5, 4], // -y
    [2, 6, 7],
    [2, 7, 3], // +y
    [0, 4, 6],
    [0, 6, 2], // -x
    [1, 3, 7],
    [1, 7, 5], // +x
];

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn box_mesh_is_outward_wound() {
        let m = TriangleMesh::axis_aligned_box(Vec3::ZERO, Vec3::splat(1.0));
        let c = Vec3::splat(0.5);
        for f in 0..m.faces().len() {
            let [a, _, _] = m.triangle(f);
            let n = m.face_normal(f).unwrap();
            assert!(n.dot(a - c) > 0.0, "face {f}");
        }
        assert!((m.surface_area() - 6.0).abs() < 1e-12);
    }

    #[test]
    fn rejects_bad_index_and_empty() {
        let v = alloc::vec![Vec3::ZERO, Vec3::X, Vec3::Y];
        assert!(matches!(TriangleMesh::new(v.clone(), alloc::vec![[0, 1, 99]]), Err(Error::InvalidMesh(_))));
        assert_eq!(TriangleMesh::new(v, Vec::new()), Err(Error::EmptyMesh));
    }

    #[test]
    fn degenerate_faces_are_flagged_not_removed() {
        let v = alloc::vec![Vec3::ZERO, Vec3::X, Vec3::Y, Vec3::new(2.0, 0.0, 0.0)];
        let m = TriangleMesh::new(v, alloc::vec![[0, 1, 2], [0, 1, 3]]).unwrap();
        assert_eq!(m.report().degenerate_faces, alloc::vec![1]);
        assert_eq!(m.faces().len(), 2);
    }
}
