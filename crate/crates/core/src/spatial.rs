//! Static kd-tree over 3D points for nearest-neighbour and radius queries.

use alloc::vec::Vec;

use crate::geometry::Vec3;

const LEAF_SIZE: usize = 8;

#[derive(Debug, Clone)]
enum Node {
    Leaf { start: usize, end: usize },
    Split { axis: usize, value: f64, left: usize, right: usize },
}

#[derive(Debug, Clone)]
pub struct KdTree {
    points: Vec<Vec3>,
    order: Vec<usize>,
    nodes: Vec<Node>,
}

impl KdTree {
    pub fn new(points: &[Vec3]) -> KdTree {
        let mut tree = KdTree {
            points: points.to_vec(),
            order: (0..points.len()).collect(),
            nodes: Vec::new(),
        };
        if !points.is_empty() {
            tree.build(0, points.len());
        }
        tree
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    fn build(&mut self, start: usize, end: usize) -> usize {
        let id = self.nodes.len();
        if end - start <= LEAF_SIZE {
            self.nodes.push(Node::Leaf { start, end });
            return id;
        }
        let mut lo = self.points[self.order[start]];
        let mut hi = lo;
        for &i in &self.order[start..end] {
            lo = lo.component_min(self.points[i]);
            hi = hi.component_max(self.points[i]);
        }
        let ext = hi - lo;
        let axis = if ext.x >= ext.y && ext.x >= ext.z {
            0
        } else if ext.y >= ext.z {
            1
        } else {
            2
        };
        let mid = (start + end) / 2;
        let pts = &self.points;
        self.order[start..end]
            .select_nth_unstable_by(mid - start, |&a, &b| pts[a][axis].total_cmp(&pts[b][axis]));
        let value = self.points[self.order[mid]][axis];
        self.nodes.push(Node::Leaf { start: 0, end: 0 });
        let left = self.build(start, mid);
        let right = self.build(mid, end);
        self.nodes[id] = Node::Split { axis, value, left, right };
        id
    }

    /// Index and squared distance of the nearest point. Ties resolve to the
    /// smaller index.
    pub fn nearest(&self, q: Vec3) -> Option<(usize, f64)> {
        if self.points.is_empty() {
            return None;
        }
        let mut best = (usize::MAX, f64::INFINITY);
        self.nearest_rec(0, q, &mut best);
        Some(best)
    }

    fn nearest_rec(&self, node: usize, q: Vec3, best: &mut (usize, f64)) {
        match self.nodes[node] {
            Node::Leaf { start, end } => {
                for &i in &self.order[start..end] {
                    let d = self.points[i].distance_squared(q);
                    if d < best.1 || (d == best.1 && i < best.0) {
                        *best = (i, d);
                    }
                }
            }
            Node::Split { axis, value, left, right } => {
                let diff = q[axis] - value;
                let (near, far) = if diff < 0.0 { (left, right) } else { (right, left) };
                self.nearest_rec(near, q, best);
                if diff * diff <= best.1 {
                    self.nearest_rec(far, q, best);
                }
            }
        }
    }

    /// Indices of all points within `radius` of `q` (inclusive), unsorted.
    pub fn within(&self, q: Vec3, radius: f64, out: &mut Vec<usize>) {
        out.clear();
        if self.points.is_empty() {
            return;
        }
        self.within_rec(0, q, radius * radius, radius, out);
    }

    fn within_rec(&self, node: usize, q: Vec3, r2: f64, r: f64, out: &mut Vec<usize>) {
        match self.nodes[node] {
            Node::Leaf { start, end } => {
                for &i in &self.order[start..end] {
                    if self.points[i].distance_squared(q) <= r2 {
                        out.push(i);
                    }
                }
            }
            Node::Split { axis, value, left, right } => {
                let diff = q[axis] - value;
                if diff <= r {
                    self.within_rec(left, q, r2, r, out);
                }
                if diff >= -r {
                    self.within_rec(right, q, r2, r, out);
                }
            }
        }
    }

    /// Nearest neighbour of point `i` excluding itself.
    pub fn nearest_other(&self, i: usize) -> Option<(usize, f64)> {
        if self.points.len() < 2 {
            return None;
        }
        let q = self.points[i];
        let mut best = (usize::MAX, f64::INFINITY);
        self.nearest_other_rec(0, q, i, &mut best);
        Some(best)
    }

    fn nearest_other_rec(&self, node: usize, q: Vec3, skip: usize, best: &mut (usize, f64)) {
        match self.nodes[node] {
            Node::Leaf { start, end } => {
                for &i in &self.order[start..end] {
                    if i == skip {
                        continue;
                    }
                    let d = self.points[i].distance_squared(q);
                    if d < best.1 || (d == best.1 && i < best.0) {
                        *best = (i, d);
                    }
                }
            }
            Node::Split { axis, value, left, right } => {
                let diff = q[axis] - value;
                let (near, far) = if diff < 0.0 { (left, right) } else { (right, left) };
                self.nearest_other_rec(near, q, skip, best);
                if diff * diff <= best.1 {
                    self.nearest_other_rec(far, q, skip, best);
                }
            }
        }
    }
}

/// Nearest-neighbour spacing of every point (distance to its closest other
/// point). Single points get spacing 0.
pub fn nearest_neighbor_spacings(points: &[Vec3]) -> Vec<f64> {
    let tree = KdTree::new(points);
    (0..points.len())
        .map(|i| tree.nearest_other(i).map_or(0.0, |(_, d2)| crate::math::sqrt(d2)))
        .collect()
}
