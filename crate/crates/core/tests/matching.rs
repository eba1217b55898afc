mod common;

use common::{brute_force_matching, permutations, random_box, random_matrix};
use primdisc_core::matching::{bipartite_match, knn_shapes, matched_mean_iou, shape_descriptor, ShapeDescriptor};
use primdisc_core::voxel::voxelize;
use primdisc_core::{Mat3, Similarity, TriangleMesh, Vec3};
use proptest::prelude::*;
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

fn check_duals(w: &[Vec<f64>]) {
    let m = bipartite_match(w).unwrap();
    for &(i, j, wij) in &m.matches {
        assert_eq!(wij, w[i][j]);
        assert!((m.left_duals[i] + m.right_duals[j] - wij).abs() <= 1e-9, "loose edge ({i}, {j})");
    }
    for (i, row) in w.iter().enumerate() {
        for (j, &wij) in row.iter().enumerate() {
            assert!(m.left_duals[i] + m.right_duals[j] <= wij + 1e-9, "dual infeasible at ({i}, {j})");
        }
    }
}

#[test]
fn optimal_on_random_matrices() {
    let mut rng = StdRng::seed_from_u64(5);
    let perms: Vec<Vec<Vec<usize>>> = (0..=7).map(permutations).collect();
    for _ in 0..200 {
        let rows = rng.random_range(1..=7);
        let cols = rng.random_range(1..=7);
        let w = random_matrix(&mut rng, rows, cols);
        let m = bipartite_match(&w).unwrap();
        let best = brute_force_matching(&w, &perms[rows.max(cols)]);
        assert!((m.total_weight() - best).abs() <= 1e-9);
        check_duals(&w);
        assert_eq!(m.matches.len() + m.exposed_left.len(), rows);
        assert_eq!(m.matches.len() + m.exposed_right.len(), cols);
    }
}

proptest! {
    #[test]
    fn constant_shift_keeps_the_matching(seed in any::<u64>(), n in 1usize..=6, shift in -5.0f64..5.0) {
        let mut rng = StdRng::seed_from_u64(seed);
        let w = random_matrix(&mut rng, n, n);
        let shifted: Vec<Vec<f64>> = w.iter().map(|r| r.iter().map(|x| x + shift).collect()).collect();
        let a = bipartite_match(&w).unwrap();
        let b = bipartite_match(&shifted).unwrap();
        let pairs = |m: &primdisc_core::matching::MatchingResult| m.matches.iter().map(|&(i, j, _)| (i, j)).collect::<Vec<_>>();
        // Random continuous weights make the optimum unique almost surely.
        prop_assert_eq!(pairs(&a), pairs(&b));
    }

    #[test]
    fn knn_agrees_with_sorting(seed in any::<u64>(), count in 2usize..12, dim in 1usize..5) {
        let mut rng = StdRng::seed_from_u64(seed);
        let data: Vec<ShapeDescriptor> = (0..count)
            .map(|i| ShapeDescriptor { shape_id: format!("s{i:02}"), vector: (0..dim).map(|_| rng.random_range(0.0..1.0)).collect() })
            .collect();
        let k = rng.random_range(1..count);
        let q = &data[0];
        let mut oracle: Vec<(f64, String)> = data[1..]
            .iter()
            .map(|d| (d.vector.iter().zip(&q.vector).map(|(a, b)| (a - b).powi(2)).sum(), d.shape_id.clone()))
            .collect();
        oracle.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap().then(a.1.cmp(&b.1)));
        let expected: Vec<String> = oracle.into_iter().take(k).map(|x| x.1).collect();
        prop_assert_eq!(knn_shapes(q, &data, k).unwrap(), expected);
    }

    #[test]
    fn matched_iou_is_symmetric(seed in any::<u64>(), na in 1usize..4, nb in 1usize..4) {
        let mut rng = StdRng::seed_from_u64(seed);
        let a: Vec<_> = (0..na).map(|_| random_box(&mut rng)).collect();
        let b: Vec<_> = (0..nb).map(|_| random_box(&mut rng)).collect();
        let ab = matched_mean_iou(&a, &b, 24).unwrap();
        let ba = matched_mean_iou(&b, &a, 24).unwrap();
        prop_assert!((ab - ba).abs() <= 1e-12);
        prop_assert!((0.0..=1.0).contains(&ab));
        prop_assert!((matched_mean_iou(&a, &a, 24).unwrap() - 1.0).abs() <= 1e-12);
    }
}

#[test]
fn descriptor_survives_axis_permutation() {
    let mesh = TriangleMesh::merge(&[
        TriangleMesh::axis_aligned_box(Vec3::new(0.0, 0.0, 0.0), Vec3::new(1.0, 0.4, 0.3)),
        TriangleMesh::axis_aligned_box(Vec3::new(0.0, 0.6, 0.0), Vec3::new(0.3, 0.8, 0.6)),
    ])
    .unwrap();
    let perm = Similarity {
        rotation: Mat3::from_cols(Vec3::Y, Vec3::Z, Vec3::X),
        scale: 1.0,
        translation: Vec3::new(2.0, -1.0, 0.5),
    };
    let a = shape_descriptor(&voxelize(&mesh, 32).unwrap(), 8);
    let b = shape_descriptor(&voxelize(&mesh.transformed(&perm), 32).unwrap(), 8);
    let worst = a.iter().zip(&b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
    assert!(worst <= 0.05, "max entry difference {worst}");
}
