use primdisc_core::codec::{decode, encode, DecodeMode, PrimitiveParams, PrimitiveSet};
use primdisc_core::cuboid::rasterize_boxes;
use primdisc_core::eval::{evaluate_shape, f_measure, voxel_metrics, TruthFill};
use primdisc_core::{Lattice, Mat3, OrientedBox, Similarity, TriangleMesh, Vec3, VoxelGrid};
use proptest::prelude::*;
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

fn random_oriented_box(rng: &mut StdRng) -> OrientedBox {
    let axis = Vec3::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0), rng.random_range(0.1..1.0)).normalize();
    let r = Mat3::rotation(axis, rng.random_range(0.0..3.0));
    OrientedBox::new(
        Vec3::new(rng.random_range(-0.5..0.5), rng.random_range(-0.5..0.5), rng.random_range(-0.5..0.5)),
        [r.col(0), r.col(1), r.col(2)],
        [rng.random_range(0.1..0.4), rng.random_range(0.1..0.4), rng.random_range(0.1..0.4)],
    )
    .unwrap()
}

fn iou(a: &VoxelGrid, b: &VoxelGrid) -> f64 {
    let (mut i, mut u) = (0, 0);
    for (&x, &y) in a.occupancy().iter().zip(b.occupancy()) {
        i += (x && y) as usize;
        u += (x || y) as usize;
    }
    if u == 0 {
        1.0
    } else {
        i as f64 / u as f64
    }
}

fn random_grid(rng: &mut StdRng, lattice: Lattice, density: f64) -> VoxelGrid {
    VoxelGrid::from_occupancy(lattice, (0..lattice.len()).map(|_| rng.random_bool(density)).collect()).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn codec_round_trip_keeps_the_volume(seed in any::<u64>(), count in 1usize..=6) {
        let mut rng = StdRng::seed_from_u64(seed);
        let boxes: Vec<OrientedBox> = (0..count).map(|_| random_oriented_box(&mut rng)).collect();
        let set = encode(&boxes, &vec![-1.0; count], 6).unwrap();
        let lattice = Lattice::new(64, Vec3::splat(-1.0), 2.0 / 64.0).unwrap();
        let decoded = decode(&set, &lattice, DecodeMode::Expected).unwrap();
        prop_assert!(iou(&decoded, &rasterize_boxes(&boxes, &lattice)) >= 0.98);
        for (p, b) in set.primitives.iter().zip(&boxes) {
            let back = p.to_box().unwrap();
            prop_assert_eq!(back.center, b.center);
            prop_assert_eq!(back.axes, b.axes);
            prop_assert!(p.rotation_matrix().is_rotation(1e-6));
        }
        let sure = PrimitiveSet { primitives: set.primitives.iter().map(|p| PrimitiveParams { likelihood: 1.0, ..*p }).collect() };
        prop_assert_eq!(
            decode(&sure, &lattice, DecodeMode::Sampled { seed }).unwrap(),
            decode(&sure, &lattice, DecodeMode::Expected).unwrap()
        );
    }

    #[test]
    fn metric_identities(seed in any::<u64>(), a in 0.05f64..0.95, b in 0.05f64..0.95) {
        let mut rng = StdRng::seed_from_u64(seed);
        let lattice = Lattice::new(10, Vec3::ZERO, 0.1).unwrap();
        let p = random_grid(&mut rng, lattice, a);
        let t = random_grid(&mut rng, lattice, b);
        let m = voxel_metrics(&p, &t).unwrap();
        let swapped = voxel_metrics(&t, &p).unwrap();
        prop_assert_eq!(m.precision, swapped.recall);
        prop_assert_eq!(m.recall, swapped.precision);
        prop_assert_eq!(voxel_metrics(&p.complement(), &t.complement()).unwrap().accuracy, m.accuracy);
        if m.precision + m.recall > 0.0 {
            let f = m.f_measure;
            prop_assert!(f <= 2.0 * m.precision.min(m.recall) + 1e-12);
            prop_assert!(f >= m.precision.min(m.recall) - 1e-12 && f <= m.precision.max(m.recall) + 1e-12);
        }
    }
}

#[test]
fn f_measure_arithmetic() {
    assert!((f_measure(0.199, 0.830) - 0.321).abs() <= 0.0005);
}

#[test]
fn unit_box_fills_an_eighth() {
    let bx = OrientedBox::axis_aligned(Vec3::ZERO, Vec3::splat(1.0)).unwrap();
    let set = PrimitiveSet { primitives: vec![PrimitiveParams::from_box(&bx, 1.0)] };
    let lattice = Lattice::new(32, Vec3::splat(-1.0), 2.0 / 32.0).unwrap();
    let g = decode(&set, &lattice, DecodeMode::Expected).unwrap();
    assert!((g.count_occupied() as f64 / lattice.len() as f64 - 0.125).abs() <= 0.01);
    let never = PrimitiveSet { primitives: vec![PrimitiveParams::from_box(&bx, 0.0)] };
    for seed in 0..20 {
        assert_eq!(decode(&never, &lattice, DecodeMode::Sampled { seed }).unwrap().count_occupied(), 0);
    }
}

/// Table fixture on a 10³ grid of 0.1 cells: a two-layer top (z cells 6, 7)
/// and a 2×2 leg (x, y cells 4, 5; z cells 0..=5). Truth holds 200 + 24
/// cells. The predicted top covers all 200 top cells; the predicted leg
/// spans x cells 4..=5, y cells 3..=5, z cells 0..=2: 12 leg cells and 6
/// cells outside the shape.
#[test]
fn hand_counted_table() {
    let lattice = Lattice::new(10, Vec3::ZERO, 0.1).unwrap();
    let mut truth = VoxelGrid::empty(lattice);
    for y in 0..10 {
        for x in 0..10 {
            truth.set(x, y, 6, true);
            truth.set(x, y, 7, true);
        }
    }
    for z in 0..6 {
        for y in 4..6 {
            for x in 4..6 {
                truth.set(x, y, z, true);
            }
        }
    }
    let top = OrientedBox::axis_aligned(Vec3::new(-0.02, -0.02, 0.58), Vec3::new(1.02, 1.02, 0.82)).unwrap();
    let leg = OrientedBox::axis_aligned(Vec3::new(0.38, 0.32, 0.02), Vec3::new(0.62, 0.62, 0.32)).unwrap();
    let set = PrimitiveSet { primitives: vec![PrimitiveParams::from_box(&top, 1.0), PrimitiveParams::from_box(&leg, 1.0)] };
    let predicted = decode(&set, &lattice, DecodeMode::Expected).unwrap();
    let m = voxel_metrics(&predicted, &truth).unwrap();
    assert_eq!((m.tp, m.fp, m.fn_, m.tn), (212, 6, 12, 770));
    assert_eq!(m.recall, 212.0 / 224.0);
    assert_eq!(m.precision, 212.0 / 218.0);
    assert_eq!(m.accuracy, 982.0 / 1000.0);
}

#[test]
fn hollow_truth_lowers_precision_only() {
    let mesh = TriangleMesh::axis_aligned_box(Vec3::ZERO, Vec3::new(1.0, 0.6, 0.4));
    let bx = OrientedBox::axis_aligned(Vec3::ZERO, Vec3::new(1.0, 0.6, 0.4)).unwrap();
    let solid = evaluate_shape(&mesh, &Similarity::IDENTITY, std::slice::from_ref(&bx), 50, TruthFill::Solid).unwrap();
    assert_eq!((solid.recall, solid.precision), (1.0, 1.0));
    let hollow = evaluate_shape(&mesh, &Similarity::IDENTITY, &[bx], 50, TruthFill::Hollow).unwrap();
    assert_eq!(hollow.recall, 1.0);
    assert!(hollow.precision < 1.0);
}
