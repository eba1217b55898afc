mod common;

use primdisc_core::config::CostConfig;
use primdisc_core::context::{build_context, unary_costs};
use primdisc_core::cuboid::cuboid_iou;
use primdisc_core::potentials::{
    cost_convexity, cost_occupancy, cost_support, cost_symmetry, face_uncovered_fraction, normal_entropy, BoxFace,
    CompactnessParams,
};
use primdisc_core::render::ViewCloud;
use primdisc_core::voxel::voxelize;
use primdisc_core::{
    Lattice, Mat3, OrientedBox, PipelineConfig, PointCloud, ShapeContext, Similarity, TriangleMesh, Vec3, VoxelGrid,
};
use proptest::prelude::*;
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

fn aabb_volume(lo: Vec3, hi: Vec3) -> f64 {
    (hi.x - lo.x).max(0.0) * (hi.y - lo.y).max(0.0) * (hi.z - lo.z).max(0.0)
}

#[test]
fn iou_matches_analytic_volumes() {
    let mut rng = StdRng::seed_from_u64(21);
    for _ in 0..100 {
        let mut corner = || {
            let lo = Vec3::new(rng.random_range(0.0..1.0), rng.random_range(0.0..1.0), rng.random_range(0.0..1.0));
            let size = Vec3::new(rng.random_range(0.4..1.2), rng.random_range(0.4..1.2), rng.random_range(0.4..1.2));
            (lo, lo + size)
        };
        let (a0, a1) = corner();
        let (b0, b1) = corner();
        let inter = aabb_volume(a0.component_max(b0), a1.component_min(b1));
        let exact = inter / (aabb_volume(a0, a1) + aabb_volume(b0, b1) - inter);
        let a = OrientedBox::axis_aligned(a0, a1).unwrap();
        let b = OrientedBox::axis_aligned(b0, b1).unwrap();
        let est = cuboid_iou(&a, &b, 64);
        assert!((est - exact).abs() <= 0.02, "iou {est} vs {exact}");
    }
}

#[test]
fn offset_cubes_share_a_third() {
    let a = OrientedBox::axis_aligned(Vec3::ZERO, Vec3::splat(1.0)).unwrap();
    let b = OrientedBox::axis_aligned(Vec3::new(0.5, 0.0, 0.0), Vec3::new(1.5, 1.0, 1.0)).unwrap();
    assert!((cuboid_iou(&a, &b, 64) - 1.0 / 3.0).abs() <= 0.02);
}

fn slab_grid(n: usize) -> VoxelGrid {
    let lattice = Lattice::new(n, Vec3::ZERO, 1.0 / n as f64).unwrap();
    let mut g = VoxelGrid::empty(lattice);
    for z in 0..n / 2 {
        for y in 0..n {
            for x in 0..n {
                g.set(x, y, z, true);
            }
        }
    }
    g
}

#[test]
fn half_filled_slab_is_half_empty() {
    let g = slab_grid(20);
    let bx = OrientedBox::axis_aligned(Vec3::ZERO, Vec3::splat(1.0)).unwrap();
    let total = 20.0f64.powi(3);
    assert!((cost_occupancy(&bx, &g) - 0.5).abs() <= 1.0 / total);
}

/// Cell counts by testing every cell centre in the box's local frame.
fn count_cells(bx: &OrientedBox, g: &VoxelGrid) -> (usize, usize) {
    let lat = g.lattice();
    let (mut total, mut occupied) = (0, 0);
    for z in 0..lat.resolution {
        for y in 0..lat.resolution {
            for x in 0..lat.resolution {
                let d = lat.center(x, y, z) - bx.center;
                if (0..3).all(|k| d.dot(bx.axes[k]).abs() <= bx.extents[k]) {
                    total += 1;
                    occupied += g.get(x, y, z) as usize;
                }
            }
        }
    }
    (total, occupied)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn support_matches_cell_counting(seed in any::<u64>(), density in 0.1f64..0.9) {
        let mut rng = StdRng::seed_from_u64(seed);
        let n = 12;
        let lattice = Lattice::new(n, Vec3::ZERO, 1.0 / n as f64).unwrap();
        let occ: Vec<bool> = (0..n * n * n).map(|_| rng.random_bool(density)).collect();
        let g = VoxelGrid::from_occupancy(lattice, occ).unwrap();
        let axes = {
            let r = Mat3::rotation(Vec3::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0), 1.0).normalize(), rng.random_range(0.0..1.5));
            [r.col(0), r.col(1), r.col(2)]
        };
        let bx = OrientedBox::new(
            Vec3::new(rng.random_range(0.3..0.7), rng.random_range(0.3..0.7), rng.random_range(0.3..0.7)),
            axes,
            [rng.random_range(0.1..0.3), rng.random_range(0.1..0.3), rng.random_range(0.1..0.3)],
        ).unwrap();
        let cap = 10.0;
        let (_, n_sc) = count_cells(&bx, &g);
        let (_, n_ex) = count_cells(&bx.scaled_extents(1.05), &g);
        let expected = if n_ex <= n_sc { cap } else { (n_sc as f64 / (n_ex - n_sc) as f64).min(cap) };
        prop_assert_eq!(cost_support(&bx, &g, cap).unwrap(), expected);
        let (total, occupied) = count_cells(&bx, &g);
        let oc = if total == 0 { 1.0 } else { (total - occupied) as f64 / total as f64 };
        prop_assert_eq!(cost_occupancy(&bx, &g), oc);
    }

    #[test]
    fn symmetry_matches_nearest_neighbour_oracle(seed in any::<u64>()) {
        let mut rng = StdRng::seed_from_u64(seed);
        let count = 60;
        let pts: Vec<Vec3> = (0..count)
            .map(|_| Vec3::new(rng.random_range(0.0..2.0), rng.random_range(0.0..1.0f64).powi(2), rng.random_range(0.0..0.5)))
            .collect();
        let normals: Vec<Vec3> = (0..count)
            .map(|_| Vec3::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0), rng.random_range(0.1..1.0)).normalize())
            .collect();
        let cloud = PointCloud::new(pts.clone(), normals.clone()).unwrap();
        let bx = OrientedBox::axis_aligned(Vec3::splat(-0.1), Vec3::new(2.1, 1.1, 0.6)).unwrap();
        let got = cost_symmetry(&bx, &cloud).unwrap();

        let n = count as f64;
        let mean = pts.iter().fold(Vec3::ZERO, |a, &p| a + p) / n;
        let mut cov = [[0.0f64; 3]; 3];
        for p in &pts {
            let d = (*p - mean).to_array();
            for (r, row) in cov.iter_mut().enumerate() {
                for (c, v) in row.iter_mut().enumerate() {
                    *v += d[r] * d[c] / n;
                }
            }
        }
        let (values, axes) = primdisc_core::geometry::symmetric_eigen(&Mat3::from_row_major(&[
            cov[0][0], cov[0][1], cov[0][2], cov[1][0], cov[1][1], cov[1][2], cov[2][0], cov[2][1], cov[2][2],
        ]));
        let mut expected = 0.0;
        let mut weight = 0.0;
        for k in 0..3 {
            let a = axes[k];
            let reflect = |v: Vec3, about: Vec3| v - a * (2.0 * (v - about).dot(a));
            let mirrored: Vec<Vec3> = pts.iter().map(|&p| reflect(p, mean)).collect();
            let mirrored_n: Vec<Vec3> = normals.iter().map(|&q| reflect(q, Vec3::ZERO)).collect();
            let (mut pos, mut ori) = (0.0, 0.0);
            for (j, p) in pts.iter().enumerate() {
                let (best, d) = mirrored
                    .iter()
                    .enumerate()
                    .map(|(i, m)| (i, p.distance(*m)))
                    .min_by(|x, y| x.1.total_cmp(&y.1))
                    .unwrap();
                pos += d;
                ori += 1.0 - normals[j].dot(mirrored_n[best]);
            }
            let corners = bx.corners();
            let proj: Vec<f64> = corners.iter().map(|c| c.dot(a)).collect();
            let width = proj.iter().cloned().fold(f64::MIN, f64::max) - proj.iter().cloned().fold(f64::MAX, f64::min);
            expected += values[k].max(0.0) * (pos / width / n + ori / n);
            weight += values[k].max(0.0);
        }
        prop_assert!((got - expected / weight).abs() <= 1e-9, "{} vs {}", got, expected / weight);
    }
}

#[test]
fn mirror_symmetric_clouds_cost_nothing() {
    let mut rng = StdRng::seed_from_u64(4);
    let mut pts = Vec::new();
    let mut normals = Vec::new();
    for _ in 0..40 {
        let p = Vec3::new(rng.random_range(0.0..2.0), rng.random_range(0.0..1.0), rng.random_range(0.0..0.5));
        let q = Vec3::new(rng.random_range(0.1..1.0), rng.random_range(0.1..1.0), rng.random_range(0.1..1.0)).normalize();
        for s in 0..8 {
            let f = Vec3::new(
                if s & 1 == 0 { 1.0 } else { -1.0 },
                if s & 2 == 0 { 1.0 } else { -1.0 },
                if s & 4 == 0 { 1.0 } else { -1.0 },
            );
            pts.push(Vec3::new(p.x * f.x, p.y * f.y, p.z * f.z));
            normals.push(Vec3::new(q.x * f.x, q.y * f.y, q.z * f.z));
        }
    }
    let cloud = PointCloud::new(pts.clone(), normals.clone()).unwrap();
    let bx = OrientedBox::axis_aligned(Vec3::new(-2.0, -1.0, -0.5), Vec3::new(2.0, 1.0, 0.5)).unwrap();
    assert!(cost_symmetry(&bx, &cloud).unwrap().abs() <= 1e-9);

    // Doubling is exact in floating point, so the cost must not move.
    let base = cost_symmetry(&bx, &cloud).unwrap();
    let scaled = PointCloud::new(pts.iter().map(|&p| p * 2.0).collect(), normals).unwrap();
    let big = OrientedBox::axis_aligned(Vec3::new(-4.0, -2.0, -1.0), Vec3::new(4.0, 2.0, 1.0)).unwrap();
    assert_eq!(cost_symmetry(&big, &scaled).unwrap(), base);
}

fn view(points: Vec<Vec3>, normals: Vec<Vec3>, eye: Vec3, forward: Vec3) -> ViewCloud {
    ViewCloud { cloud: PointCloud::new(points, normals).unwrap(), view_id: 0, eye, forward, pixels: Vec::new() }
}

#[test]
fn convex_patch_has_no_convexity_cost() {
    let mut rng = StdRng::seed_from_u64(8);
    let mut pts = Vec::new();
    let mut normals = Vec::new();
    while pts.len() < 300 {
        let d = Vec3::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0), rng.random_range(0.0..1.0));
        let Some(n) = d.try_normalize() else { continue };
        if n.z > 0.6 {
            pts.push(n);
            normals.push(n);
        }
    }
    let clouds = [view(pts, normals, Vec3::new(0.0, 0.0, 4.0), -Vec3::Z)];
    let bx = OrientedBox::axis_aligned(Vec3::new(-1.0, -1.0, 0.5), Vec3::new(1.0, 1.0, 1.05)).unwrap();
    assert!(cost_convexity(&bx, &clouds, 1000).unwrap().abs() <= 1e-6);
}

/// The 26 neighbourhood directions and the index of the one closest to `n`.
fn oracle_bin(n: Vec3) -> usize {
    let mut dirs = Vec::new();
    for dz in -1..=1 {
        for dy in -1..=1 {
            for dx in -1..=1 {
                if (dx, dy, dz) != (0, 0, 0) {
                    dirs.push(Vec3::new(dx as f64, dy as f64, dz as f64).normalize());
                }
            }
        }
    }
    let mut best = 0;
    for (i, d) in dirs.iter().enumerate() {
        if n.dot(*d) > n.dot(dirs[best]) + 1e-12 {
            best = i;
        }
    }
    best
}

#[test]
fn entropy_matches_histogram_on_a_cap() {
    let mut rng = StdRng::seed_from_u64(9);
    let normals: Vec<Vec3> = (0..500)
        .filter_map(|_| Vec3::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0), rng.random_range(0.0..1.0)).try_normalize())
        .collect();
    let bx = OrientedBox::axis_aligned(Vec3::ZERO, Vec3::splat(1.0)).unwrap();
    let mut hist = [0usize; 26];
    for &q in &normals {
        hist[oracle_bin(q)] += 1;
    }
    let n = normals.len() as f64;
    let expected: f64 = hist.iter().filter(|&&c| c > 0).map(|&c| -(c as f64 / n) * (c as f64 / n).ln()).sum();
    assert!((normal_entropy(&bx, normals.iter().copied()) - expected).abs() <= 1e-6);
}

#[test]
fn half_covered_face() {
    let bx = OrientedBox::axis_aligned(Vec3::ZERO, Vec3::splat(1.0)).unwrap();
    let face = BoxFace { axis: 2, sign: 1.0 };
    let s = 16;
    let mut rng = StdRng::seed_from_u64(10);
    let pts: Vec<Vec3> = (0..4000).map(|_| Vec3::new(rng.random_range(0.0..0.5), rng.random_range(0.0..1.0), 1.0)).collect();
    let u = face_uncovered_fraction(&bx, face, pts, &CompactnessParams { cells: s, band: 0.01 });
    assert!((u - 0.5).abs() <= 2.0 / s as f64, "uncovered {u}");
}

fn two_box_mesh() -> TriangleMesh {
    TriangleMesh::merge(&[
        TriangleMesh::axis_aligned_box(Vec3::new(0.0, 0.0, 0.0), Vec3::new(1.0, 0.4, 0.3)),
        TriangleMesh::axis_aligned_box(Vec3::new(0.1, 0.6, 0.0), Vec3::new(0.4, 0.9, 0.6)),
    ])
    .unwrap()
}

/// Costs of every proposal after moving mesh, clouds and boxes by `t`.
fn moved_costs(mesh: &TriangleMesh, ctx: &ShapeContext, t: &Similarity, costs: &CostConfig) -> Vec<[f64; 6]> {
    let grid = voxelize(&mesh.transformed(t), costs.grid_resolution).unwrap();
    let clouds: Vec<ViewCloud> = ctx
        .clouds
        .iter()
        .map(|c| ViewCloud {
            cloud: c.cloud.transformed(t),
            view_id: c.view_id,
            eye: t.apply(c.eye),
            forward: t.apply_direction(c.forward),
            pixels: c.pixels.clone(),
        })
        .collect();
    ctx.proposals
        .iter()
        .map(|b| unary_costs(&b.transformed(t), &grid, &ctx.regions, &clouds, ctx.diagonal, costs).to_array())
        .collect()
}

#[test]
fn costs_follow_rigid_motion() {
    let mesh = two_box_mesh();
    let config = PipelineConfig::default();
    let ctx = build_context(&mesh, &config).unwrap();
    assert!(!ctx.proposals.is_empty());
    let generic = Similarity {
        rotation: Mat3::rotation(Vec3::new(0.3, -0.5, 0.8).normalize(), 0.7),
        scale: 1.0,
        translation: Vec3::new(0.4, 1.1, -2.0),
    };
    // Point-based costs: uniformity, compactness, convexity, symmetry.
    let point_based = [1, 2, 4, 5];
    for (i, moved) in moved_costs(&mesh, &ctx, &generic, &config.costs).iter().enumerate() {
        let before = ctx.unary[i].to_array();
        for &k in &point_based {
            assert!((before[k] - moved[k]).abs() <= 1e-6, "cost {k} of proposal {i}");
        }
        assert!((before[0] - moved[0]).abs() <= 0.02);
    }
    // Axis-permuting rotations keep the voxel lattice aligned with the shape.
    let aligned = [
        (Mat3::from_rows(Vec3::Z, Vec3::X, Vec3::Y), Vec3::new(-3.0, 0.25, 7.5)),
        (Mat3::from_rows(Vec3::Y, Vec3::Z, Vec3::X), Vec3::new(0.4, 1.1, -2.0)),
        (Mat3::from_rows(Vec3::X, -Vec3::Z, Vec3::Y), Vec3::new(1.0 / 3.0, -0.7, 0.05)),
    ];
    for (rotation, translation) in aligned {
        let t = Similarity { rotation, scale: 1.0, translation };
        for (i, moved) in moved_costs(&mesh, &ctx, &t, &config.costs).iter().enumerate() {
            let before = ctx.unary[i].to_array();
            for k in 0..6 {
                let tol = if point_based.contains(&k) { 1e-6 } else { 0.02 };
                assert!((before[k] - moved[k]).abs() <= tol, "cost {k} of proposal {i}: {} vs {}", before[k], moved[k]);
            }
        }
    }
}
