//! Random CRF instances and brute-force oracles shared by the integration
//! tests.

#![allow(dead_code)]

use primdisc_core::context::{CoocEntry, OverlapEntry};
use primdisc_core::proposals::SegmentedRegion;
use primdisc_core::{CostVector, CrfWeights, Lattice, OrientedBox, ShapeContext, Similarity, Vec3, VoxelGrid};
use rand::rngs::StdRng;
use rand::Rng;

pub fn random_box(rng: &mut StdRng) -> OrientedBox {
    let min = Vec3::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
    let size = Vec3::new(rng.random_range(0.1..1.0), rng.random_range(0.1..1.0), rng.random_range(0.1..1.0));
    OrientedBox::axis_aligned(min, min + size).unwrap()
}

/// A context with `n` proposals and `m` regions and random cost tables.
/// Proposals carry `cooc_rate` chance of 1-3 co-occurrence entries.
pub fn random_context(rng: &mut StdRng, n: usize, m: usize, cooc_rate: f64) -> ShapeContext {
    let proposals: Vec<OrientedBox> = (0..n).map(|_| random_box(rng)).collect();
    let regions: Vec<SegmentedRegion> = (0..m)
        .map(|k| SegmentedRegion {
            id: k,
            view_id: 0,
            point_indices: Vec::new(),
            mean_normal: Vec3::Z,
            area: rng.random_range(0.05..1.0),
        })
        .collect();
    let unary = (0..n).map(|_| CostVector::from_array(std::array::from_fn(|_| rng.random_range(0.01..1.0)))).collect();
    let total: f64 = regions.iter().map(|r| r.area).sum();
    let coverage_costs = regions.iter().map(|r| r.area / total).collect();
    let mut overlap = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            if rng.random_bool(0.3) {
                overlap.push(OverlapEntry { i, j, cost: rng.random_range(0.01..1.0) });
            }
        }
    }
    let incidence = (0..m)
        .map(|_| {
            let mut s: Vec<usize> = (0..n).filter(|_| rng.random_bool(0.3)).collect();
            if s.is_empty() {
                s.push(rng.random_range(0..n));
            }
            s
        })
        .collect();
    let cooc = (0..n)
        .map(|i| {
            if !rng.random_bool(cooc_rate) {
                return Vec::new();
            }
            (0..rng.random_range(1..=3))
                .map(|k| CoocEntry { neighbor: k, primitive: proposals[i].clone(), iou: rng.random_range(0.05..1.0) })
                .collect()
        })
        .collect();
    ShapeContext {
        grid: VoxelGrid::empty(Lattice::new(2, Vec3::ZERO, 1.0).unwrap()),
        clouds: Vec::new(),
        proposals,
        regions,
        unary,
        coverage_costs,
        overlap,
        incidence,
        cooc,
        canonical: Similarity::IDENTITY,
        diagonal: 1.0,
    }
}

/// Weights with the required signs: `mu_pw, mu_par > 0`, `mu_cov, mu_coc < 0`.
pub fn random_weights(rng: &mut StdRng) -> CrfWeights {
    let base = CrfWeights::default();
    CrfWeights {
        mu_u: std::array::from_fn(|t| base.mu_u[t] * rng.random_range(0.5..1.5)),
        w: std::array::from_fn(|_| rng.random_range(0.5..2.0)),
        mu_pw: rng.random_range(0.5..3.0),
        mu_par: rng.random_range(0.01..0.5),
        mu_cov: rng.random_range(-4.0..-0.5),
        mu_coc: rng.random_range(-1.0..-0.1),
    }
}

/// Every permutation of `0..n` (Heap's algorithm).
pub fn permutations(n: usize) -> Vec<Vec<usize>> {
    fn heap(k: usize, a: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if k <= 1 {
            out.push(a.clone());
            return;
        }
        for i in 0..k {
            heap(k - 1, a, out);
            if k % 2 == 0 {
                a.swap(i, k - 1);
            } else {
                a.swap(0, k - 1);
            }
        }
    }
    let mut a: Vec<usize> = (0..n).collect();
    let mut out = Vec::new();
    heap(n, &mut a, &mut out);
    out
}

/// Minimum total weight of a matching on the zero-padded square matrix.
pub fn brute_force_matching(w: &[Vec<f64>], perms: &[Vec<usize>]) -> f64 {
    let rows = w.len();
    let cols = w.first().map_or(0, |r| r.len());
    let at = |i: usize, j: usize| if i < rows && j < cols { w[i][j] } else { 0.0 };
    perms
        .iter()
        .map(|p| p.iter().enumerate().map(|(i, &j)| at(i, j)).sum::<f64>())
        .fold(f64::INFINITY, f64::min)
}

pub fn random_matrix(rng: &mut StdRng, rows: usize, cols: usize) -> Vec<Vec<f64>> {
    (0..rows).map(|_| (0..cols).map(|_| rng.random_range(-1.0..1.0)).collect()).collect()
}
