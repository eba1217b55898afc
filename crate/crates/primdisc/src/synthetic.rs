//! Synthetic shapes made of a few disjoint axis-aligned boxes, with
//! optional Gaussian vertex jitter.

use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};
use rand_distr::{Distribution, Normal};

use primdisc_core::{OrientedBox, TriangleMesh, Vec3};

pub const MIN_BOXES: usize = 2;
pub const MAX_BOXES: usize = 4;
pub const MIN_DIM: f64 = 0.2;
pub const MAX_DIM: f64 = 0.5;
/// Gap between neighbouring boxes as a fraction of their mean size along
/// the separating axis.
pub const GAP_RANGE: (f64, f64) = (0.1, 0.3);
/// Vertex jitter standard deviation as a fraction of the mesh diagonal.
pub const DEFAULT_JITTER: f64 = 0.005;

#[derive(Debug, Clone)]
pub struct SyntheticShape {
    pub id: String,
    pub mesh: TriangleMesh,
    /// Boxes before jitter.
    pub boxes: Vec<OrientedBox>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct Slab {
    min: [f64; 3],
    max: [f64; 3],
}

impl Slab {
    fn gap_to(&self, o: &Slab) -> f64 {
        (0..3).map(|a| (o.min[a] - self.max[a]).max(self.min[a] - o.max[a])).fold(f64::NEG_INFINITY, f64::max)
    }
}

fn random_dims(rng: &mut StdRng) -> [f64; 3] {
    std::array::from_fn(|_| rng.random_range(MIN_DIM..=MAX_DIM))
}

/// Places `count` boxes one at a time next to a random earlier box, at a
/// gap of 0.1–0.3 of their mean size along a random axis, with overlapping
/// footprints on the other two axes.
fn layout(rng: &mut StdRng, count: usize) -> Vec<Slab> {
    let d = random_dims(rng);
    let mut slabs = vec![Slab { min: [0.0; 3], max: d }];
    while slabs.len() < count {
        let d = random_dims(rng);
        let anchor = slabs[rng.random_range(0..slabs.len())];
        let axis = rng.random_range(0..3);
        let size = 0.5 * (d[axis] + anchor.max[axis] - anchor.min[axis]);
        let gap = rng.random_range(GAP_RANGE.0..=GAP_RANGE.1) * size;
        let mut s = Slab { min: [0.0; 3], max: [0.0; 3] };
        for a in 0..3 {
            if a == axis {
                if rng.random_bool(0.5) {
                    s.min[a] = anchor.max[a] + gap;
                } else {
                    s.min[a] = anchor.min[a] - gap - d[a];
                }
            } else {
                let lo = anchor.min[a] - 0.5 * d[a];
                let hi = anchor.max[a] - 0.5 * d[a];
                s.min[a] = rng.random_range(lo..=hi);
            }
            s.max[a] = s.min[a] + d[a];
        }
        let min_gap = GAP_RANGE.0 * MIN_DIM;
        if slabs.iter().all(|o| o.gap_to(&s) >= min_gap - 1e-12) {
            slabs.push(s);
        }
    }
    slabs
}

/// Adds `N(0, (sigma_fraction * diagonal)²)` noise to every coordinate.
pub fn jitter(mesh: &TriangleMesh, sigma_fraction: f64, rng: &mut StdRng) -> TriangleMesh {
    let sigma = sigma_fraction * mesh.bounds().diagonal();
    if !(sigma > 0.0) {
        return mesh.clone();
    }
    let normal = Normal::new(0.0, sigma).expect("positive finite sigma");
    mesh.map_vertices(|v| Vec3::new(v.x + normal.sample(rng), v.y + normal.sample(rng), v.z + normal.sample(rng)))
}

/// One shape with `count` boxes (clamped to 2–4).
pub fn generate_shape(id: &str, count: usize, jitter_fraction: f64, rng: &mut StdRng) -> SyntheticShape {
    let slabs = layout(rng, count.clamp(MIN_BOXES, MAX_BOXES));
    let meshes: Vec<TriangleMesh> =
        slabs.iter().map(|s| TriangleMesh::axis_aligned_box(Vec3::from(s.min), Vec3::from(s.max))).collect();
    let mesh = TriangleMesh::merge(&meshes).expect("boxes have faces");
    let boxes = slabs
        .iter()
        .map(|s| OrientedBox::axis_aligned(Vec3::from(s.min), Vec3::from(s.max)).expect("positive dims"))
        .collect();
    SyntheticShape { id: id.into(), mesh: jitter(&mesh, jitter_fraction, rng), boxes }
}

/// `count` shapes with ids `synth_000`, `synth_001`, … and 2–4 boxes each.
pub fn generate_suite(count: usize, jitter_fraction: f64, seed: u64) -> Vec<SyntheticShape> {
    let mut rng = StdRng::seed_from_u64(seed);
    (0..count)
        .map(|i| {
            let boxes = rng.random_range(MIN_BOXES..=MAX_BOXES);
            generate_shape(&format!("synth_{i:03}"), boxes, jitter_fraction, &mut rng)
        })
        .collect()
}

/// `copies` independently jittered copies of one generated shape, ids
/// `copy_0`, `copy_1`, ….
pub fn generate_copies(copies: usize, jitter_fraction: f64, seed: u64) -> Vec<SyntheticShape> {
    let mut rng = StdRng::seed_from_u64(seed);
    let count = rng.random_range(MIN_BOXES..=MAX_BOXES);
    let base = generate_shape("base", count, 0.0, &mut rng);
    (0..copies)
        .map(|i| SyntheticShape {
            id: format!("copy_{i}"),
            mesh: jitter(&base.mesh, jitter_fraction, &mut rng),
            boxes: base.boxes.clone(),
        })
        .collect()
}
