//! Shape descriptors, nearest neighbours and primal-dual bipartite matching
//! between primitive sets.

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::cloud::canonical_frame;
use crate::context::{CoocEntry, ShapeContext};
use crate::cuboid::{cuboid_iou, OrientedBox};
use crate::error::{Error, Result};
use crate::geometry::{Aabb, Mat3, Similarity, Vec3};
use crate::math;
use crate::voxel::VoxelGrid;

/// Default descriptor cells per axis.
pub const DESCRIPTOR_CELLS: usize = 8;
/// Subsamples per descriptor cell and axis.
const CELL_SAMPLES: usize = 4;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShapeDescriptor {
    pub shape_id: String,
    pub vector: Vec<f64>,
}

/// Canonical frame of an occupancy grid's voxel centres. Falls back to a
/// pure centring and scaling when the centres are (nearly) planar.
pub fn grid_canonical_frame(grid: &VoxelGrid) -> Option<Similarity> {
    let lat = grid.lattice();
    let centers: Vec<Vec3> = grid
        .occupancy()
        .iter()
        .enumerate()
        .filter(|(_, &o)| o)
        .map(|(i, _)| {
            let (x, y, z) = lat.coords(i);
            lat.center(x, y, z)
        })
        .collect();
    if centers.is_empty() {
        return None;
    }
    if let Ok(sim) = canonical_frame(&centers) {
        return Some(sim);
    }
    let bounds = Aabb::from_points(centers.iter().copied())?;
    let spread = bounds.extent().max_element().max(lat.voxel_size);
    let scale = 1.0 / spread;
    Some(Similarity { rotation: Mat3::IDENTITY, scale, translation: bounds.center() * -scale })
}

/// Occupancy-fraction descriptor of `cells³` cells over the unit cube
/// around the canonical shape's bounding-box centre. Empty grids give the
/// zero vector.
pub fn shape_descriptor(grid: &VoxelGrid, cells: usize) -> Vec<f64> {
    let cells = cells.max(1);
    let mut out = vec![0.0; cells * cells * cells];
    let Some(sim) = grid_canonical_frame(grid) else {
        return out;
    };
    let lat = grid.lattice();
    let occupied = grid.occupancy().iter().enumerate().filter(|(_, &o)| o).map(|(i, _)| {
        let (x, y, z) = lat.coords(i);
        sim.apply(lat.center(x, y, z))
    });
    let Some(bounds) = Aabb::from_points(occupied) else {
        return out;
    };
    let center = bounds.center();
    let inverse = sim.inverse();
    let n = lat.resolution;
    let lookup = |p: Vec3| -> bool {
        let q = (p - lat.origin) / lat.voxel_size;
        let idx = [math::floor(q.x), math::floor(q.y), math::floor(q.z)];
        if idx.iter().any(|&c| c < 0.0 || c >= n as f64) {
            return false;
        }
        grid.get(idx[0] as usize, idx[1] as usize, idx[2] as usize)
    };
    let step = 1.0 / (cells * CELL_SAMPLES) as f64;
    let per_cell = (CELL_SAMPLES * CELL_SAMPLES * CELL_SAMPLES) as f64;
    for cz in 0..cells {
        for cy in 0..cells {
            for cx in 0..cells {
                let mut hits = 0usize;
                for sz in 0..CELL_SAMPLES {
                    for sy in 0..CELL_SAMPLES {
                        for sx in 0..CELL_SAMPLES {
                            let u = |c: usize, s: usize| ((c * CELL_SAMPLES + s) as f64 + 0.5) * step - 0.5;
                            let local = Vec3::new(u(cx, sx), u(cy, sy), u(cz, sz));
                            if lookup(inverse.apply(center + local)) {
                                hits += 1;
                            }
                        }
                    }
                }
                out[cx + cells * (cy + cells * cz)] = hits as f64 / per_cell;
            }
        }
    }
    out
}

fn squared_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// The `k` nearest descriptors by Euclidean distance, skipping entries with
/// the query's id; ties go to the smaller id.
pub fn knn_shapes(query: &ShapeDescriptor, dataset: &[ShapeDescriptor], k: usize) -> Result<Vec<String>> {
    if k == 0 {
        return Err(Error::InvalidArgument("k must be at least 1".into()));
    }
    let mut others: Vec<(f64, &str)> = dataset
        .iter()
        .filter(|d| d.shape_id != query.shape_id)
        .map(|d| {
            if d.vector.len() != query.vector.len() {
                return Err(Error::InvalidArgument("descriptor lengths differ".into()));
            }
            Ok((squared_distance(&query.vector, &d.vector), d.shape_id.as_str()))
        })
        .collect::<Result<_>>()?;
    if others.len() < k {
        return Err(Error::InsufficientDataset { needed: k + 1, got: others.len() + 1 });
    }
    others.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(b.1)));
    Ok(others.into_iter().take(k).map(|(_, id)| String::from(id)).collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatchingResult {
    /// `(left, right, weight)`, ascending by left node.
    pub matches: Vec<(usize, usize, f64)>,
    pub left_duals: Vec<f64>,
    pub right_duals: Vec<f64>,
    pub exposed_left: Vec<usize>,
    pub exposed_right: Vec<usize>,
}

impl MatchingResult {
    pub fn total_weight(&self) -> f64 {
        self.matches.iter().map(|m| m.2).sum()
    }
}

/// Minimum-weight matching of a `|P| × |Q|` matrix by the Hungarian
/// primal-dual method. The matrix is padded to a square with zero-weight
/// dummy nodes; real nodes matched to dummies are reported as exposed.
pub fn bipartite_match(weights: &[Vec<f64>]) -> Result<MatchingResult> {
    let rows = weights.len();
    let cols = weights.first().map_or(0, |r| r.len());
    for (i, row) in weights.iter().enumerate() {
        if row.len() != cols {
            return Err(Error::InvalidArgument("ragged weight matrix".into()));
        }
        if let Some(j) = row.iter().position(|w| !w.is_finite()) {
            return Err(Error::NonFiniteWeight { row: i, col: j });
        }
    }
    let n = rows.max(cols);
    let cost = |i: usize, j: usize| if i < rows && j < cols { weights[i][j] } else { 0.0 };

    // 1-based potentials and assignment; p[j] is the row matched to column j.
    let mut u = vec![0.0; n + 1];
    let mut v = vec![0.0; n + 1];
    let mut p = vec![0usize; n + 1];
    let mut way = vec![0usize; n + 1];
    for i in 1..=n {
        p[0] = i;
        let mut j0 = 0usize;
        let mut minv = vec![f64::INFINITY; n + 1];
        let mut used = vec![false; n + 1];
        loop {
            used[j0] = true;
            let i0 = p[j0];
            let mut delta = f64::INFINITY;
            let mut j1 = 0usize;
            for j in 1..=n {
                if used[j] {
                    continue;
                }
                let cur = cost(i0 - 1, j - 1) - u[i0] - v[j];
                if cur < minv[j] {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if minv[j] < delta {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for j in 0..=n {
                if used[j] {
                    u[p[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if p[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }

    let mut row_match = vec![usize::MAX; n];
    for j in 1..=n {
        if p[j] > 0 {
            row_match[p[j] - 1] = j - 1;
        }
    }
    let mut matches = Vec::new();
    let mut exposed_left = Vec::new();
    let mut right_matched = vec![false; cols];
    for (i, &j) in row_match.iter().enumerate().take(rows) {
        if j < cols {
            matches.push((i, j, weights[i][j]));
            right_matched[j] = true;
        } else {
            exposed_left.push(i);
        }
    }
    let exposed_right = (0..cols).filter(|&j| !right_matched[j]).collect();
    Ok(MatchingResult {
        matches,
        left_duals: u[1..=rows].to_vec(),
        right_duals: v[1..=cols].to_vec(),
        exposed_left,
        exposed_right,
    })
}

/// Builds the sets `t_i` of a shape from its neighbours' selected
/// primitives. `neighbors` holds `(neighbor index, primitives)` with the
/// primitives already in the neighbour's canonical frame. Matched pairs
/// with zero IoU count as exposed.
pub fn build_cooccurrence(
    ctx: &ShapeContext,
    neighbors: &[(usize, Vec<OrientedBox>)],
    resolution: usize,
) -> Result<Vec<Vec<CoocEntry>>> {
    let mine = ctx.canonical_proposals();
    let mut table: Vec<Vec<CoocEntry>> = vec![Vec::new(); mine.len()];
    let mine_aabb: Vec<Aabb> = mine.iter().map(|b| b.aabb()).collect();
    for (neighbor, prims) in neighbors {
        if prims.is_empty() || mine.is_empty() {
            continue;
        }
        let ious: Vec<Vec<f64>> = mine
            .iter()
            .zip(&mine_aabb)
            .map(|(b, ab)| {
                prims
                    .iter()
                    .map(|q| if ab.intersects(&q.aabb()) { cuboid_iou(b, q, resolution) } else { 0.0 })
                    .collect()
            })
            .collect();
        let w: Vec<Vec<f64>> = ious.iter().map(|r| r.iter().map(|x| -x).collect()).collect();
        let m = bipartite_match(&w)?;
        for (i, j, _) in m.matches {
            if ious[i][j] > 0.0 {
                table[i].push(CoocEntry { neighbor: *neighbor, primitive: prims[j].clone(), iou: ious[i][j] });
            }
        }
    }
    Ok(table)
}

/// Mean IoU of the best one-to-one matching of two primitive sets,
/// normalized by the larger set size. Both empty gives 1.
pub fn matched_mean_iou(a: &[OrientedBox], b: &[OrientedBox], resolution: usize) -> Result<f64> {
    if a.is_empty() && b.is_empty() {
        return Ok(1.0);
    }
    if a.is_empty() || b.is_empty() {
        return Ok(0.0);
    }
    let w: Vec<Vec<f64>> = a.iter().map(|x| b.iter().map(|y| -cuboid_iou(x, y, resolution)).collect()).collect();
    let m = bipartite_match(&w)?;
    Ok(-m.total_weight() / a.len().max(b.len()) as f64)
}
