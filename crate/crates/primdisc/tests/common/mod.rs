//! Random CRF instances shared by the integration tests.

#![allow(dead_code)]

use primdisc_core::context::OverlapEntry;
use primdisc_core::proposals::SegmentedRegion;
use primdisc_core::{CostVector, CrfWeights, Lattice, OrientedBox, ShapeContext, Similarity, Vec3, VoxelGrid};
use rand::rngs::StdRng;
use rand::Rng;

/// Random CRF with `n` proposals and `m` regions and no co-occurrence.
pub fn random_context(rng: &mut StdRng, n: usize, m: usize) -> ShapeContext {
    let proposals: Vec<OrientedBox> = (0..n)
        .map(|_| {
            let lo = Vec3::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
            let size = Vec3::new(rng.random_range(0.1..1.0), rng.random_range(0.1..1.0), rng.random_range(0.1..1.0));
            OrientedBox::axis_aligned(lo, lo + size).unwrap()
        })
        .collect();
    let regions: Vec<SegmentedRegion> = (0..m)
        .map(|k| SegmentedRegion { id: k, view_id: 0, point_indices: Vec::new(), mean_normal: Vec3::Z, area: rng.random_range(0.05..1.0) })
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
    ShapeContext {
        grid: VoxelGrid::empty(Lattice::new(2, Vec3::ZERO, 1.0).unwrap()),
        clouds: Vec::new(),
        proposals,
        regions,
        unary,
        coverage_costs,
        overlap,
        incidence,
        cooc: vec![Vec::new(); n],
        canonical: Similarity::IDENTITY,
        diagonal: 1.0,
    }
}

/// Weights with `mu_pw, mu_par > 0` and `mu_cov, mu_coc < 0`.
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
