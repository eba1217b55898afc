//! Bottom-up box proposals: region growing on each view cloud, pairing of
//! nearly perpendicular neighbouring regions and tight box fitting.

use alloc::collections::{BTreeSet, VecDeque};
use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::config::ProposalConfig;
use crate::cuboid::{cuboid_iou, OrientedBox};
use crate::error::{Error, Result};
use crate::geometry::Vec3;
use crate::math;
use crate::mesh::TriangleMesh;
use crate::render::{render_views, ViewCloud};
use crate::spatial::{nearest_neighbor_spacings, KdTree};

/// A smooth patch of one view cloud.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SegmentedRegion {
    pub id: usize,
    pub view_id: usize,
    /// Indices into the source [`ViewCloud`].
    pub point_indices: Vec<usize>,
    pub mean_normal: Vec3,
    /// `count * (mean nearest-neighbour spacing)²`, model units².
    pub area: f64,
}

impl SegmentedRegion {
    pub fn points<'a>(&'a self, cloud: &'a ViewCloud) -> impl Iterator<Item = Vec3> + 'a {
        self.point_indices.iter().map(move |&i| cloud.cloud.points()[i])
    }
}

/// Thresholds for [`segment_regions`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SegmentParams {
    pub angle_threshold_deg: f64,
    pub spacing_threshold: f64,
    pub min_region_size: usize,
}

/// Median nearest-neighbour distance of a point set (0 when < 2 points).
pub fn median_spacing(points: &[Vec3]) -> f64 {
    if points.len() < 2 {
        return 0.0;
    }
    math::median(&nearest_neighbor_spacings(points)).unwrap_or(0.0)
}

/// Greedy region growing over a view cloud.
///
/// Seeds are taken in index order. A point joins the growing region when it
/// lies within `spacing_threshold` of a member and its normal is within
/// `angle_threshold_deg` of the region's running mean normal. Regions
/// smaller than `min_region_size` are discarded; their points are not
/// reassigned. Region ids are `0..` in emission order.
pub fn segment_regions(cloud: &ViewCloud, params: &SegmentParams) -> Vec<SegmentedRegion> {
    let pts = cloud.cloud.points();
    let normals = cloud.cloud.normals();
    if pts.is_empty() {
        return Vec::new();
    }
    let cos_thr = math::cos(math::to_radians(params.angle_threshold_deg));
    let tree = KdTree::new(pts);
    let mut visited = vec![false; pts.len()];
    let mut regions = Vec::new();
    let mut queue = VecDeque::new();
    let mut nb = Vec::new();

    for seed in 0..pts.len() {
        if visited[seed] {
            continue;
        }
        visited[seed] = true;
        let mut members = vec![seed];
        let mut normal_sum = normals[seed];
        queue.clear();
        queue.push_back(seed);
        while let Some(i) = queue.pop_front() {
            tree.within(pts[i], params.spacing_threshold, &mut nb);
            nb.sort_unstable();
            for &j in &nb {
                if visited[j] {
                    continue;
                }
                let mean = normal_sum.normalize();
                if normals[j].dot(mean) >= cos_thr {
                    visited[j] = true;
                    members.push(j);
                    normal_sum += normals[j];
                    queue.push_back(j);
                }
            }
        }
        if members.len() < params.min_region_size.max(1) {
            continue;
        }
        members.sort_unstable();
        let member_pts: Vec<Vec3> = members.iter().map(|&i| pts[i]).collect();
        let spacings = nearest_neighbor_spacings(&member_pts);
        let mean_spacing = spacings.iter().sum::<f64>() / spacings.len() as f64;
        let area = members.len() as f64 * mean_spacing * mean_spacing;
        if !(area > 0.0) {
            continue;
        }
        regions.push(SegmentedRegion {
            id: regions.len(),
            view_id: cloud.view_id,
            point_indices: members,
            mean_normal: normal_sum.normalize(),
            area,
        });
    }
    regions
}

/// Region pairs (by id, smaller first) that come within
/// `proximity_threshold` of each other and whose mean normals are between
/// 45 and 135 degrees apart. All regions must index into `cloud`.
pub fn candidate_region_pairs(
    regions: &[SegmentedRegion],
    cloud: &ViewCloud,
    proximity_threshold: f64,
) -> Vec<(usize, usize)> {
    if regions.len() < 2 {
        return Vec::new();
    }
    let pts = cloud.cloud.points();
    let mut label = vec![usize::MAX; pts.len()];
    for (r, region) in regions.iter().enumerate() {
        for &i in &region.point_indices {
            label[i] = r;
        }
    }
    let labelled: Vec<usize> = (0..pts.len()).filter(|&i| label[i] != usize::MAX).collect();
    let labelled_pts: Vec<Vec3> = labelled.iter().map(|&i| pts[i]).collect();
    let tree = KdTree::new(&labelled_pts);
    let mut close = BTreeSet::new();
    let mut nb = Vec::new();
    for &i in &labelled {
        tree.within(pts[i], proximity_threshold, &mut nb);
        for &k in &nb {
            let (a, b) = (label[i], label[labelled[k]]);
            if a < b && pts[i].distance(pts[labelled[k]]) < proximity_threshold {
                close.insert((a, b));
            }
        }
    }
    let (lo, hi) = (math::cos(math::to_radians(135.0)), math::cos(math::to_radians(45.0)));
    close
        .into_iter()
        .filter(|&(a, b)| {
            let c = regions[a].mean_normal.dot(regions[b].mean_normal);
            c >= lo - 1e-12 && c <= hi + 1e-12
        })
        .map(|(a, b)| {
            let (ia, ib) = (regions[a].id, regions[b].id);
            (ia.min(ib), ia.max(ib))
        })
        .collect()
}

/// Box spanned by two regions: first axis along the first region's normal,
/// second along the orthogonalized second normal, extents tight over the
/// union of both regions' points, grown by `padding` and floored at
/// `min_extent`.
pub fn fit_box(
    first: &SegmentedRegion,
    second: &SegmentedRegion,
    cloud: &ViewCloud,
    padding: f64,
    min_extent: f64,
) -> Result<OrientedBox> {
    let a1 = first.mean_normal.normalize();
    let n2 = second.mean_normal.normalize();
    if a1.cross(n2).norm() < 1e-6 {
        return Err(Error::DegeneratePair);
    }
    let a2 = (n2 - a1 * n2.dot(a1)).normalize();
    let a3 = a1.cross(a2);
    let axes = [a1, a2, a3];
    let mut lo = [f64::INFINITY; 3];
    let mut hi = [f64::NEG_INFINITY; 3];
    for p in first.points(cloud).chain(second.points(cloud)) {
        for k in 0..3 {
            let t = p.dot(axes[k]);
            lo[k] = lo[k].min(t);
            hi[k] = hi[k].max(t);
        }
    }
    if !lo[0].is_finite() {
        return Err(Error::EmptyInput);
    }
    let mut center = Vec3::ZERO;
    let mut extents = [0.0; 3];
    for k in 0..3 {
        center += axes[k] * (0.5 * (lo[k] + hi[k]));
        extents[k] = (0.5 * (hi[k] - lo[k]) + padding).max(min_extent);
    }
    let mut b = OrientedBox::new(center, axes, extents)?;
    b.source_regions = vec![first.id, second.id];
    Ok(b)
}

/// Output of [`generate_proposals`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProposalSet {
    pub boxes: Vec<OrientedBox>,
    /// All regions of all views; `regions[k].id == k`.
    pub regions: Vec<SegmentedRegion>,
    pub clouds: Vec<ViewCloud>,
}

/// Full proposal stage: rig, render, normals, segmentation, pairing, fitting
/// and IoU de-duplication (the box with the larger source area survives).
pub fn generate_proposals(mesh: &TriangleMesh, config: &ProposalConfig) -> Result<ProposalSet> {
    let clouds = render_views(mesh, config.image_size, config.image_size, config.fov_deg, config.max_depth_jump)?;
    let diag = mesh.bounds().diagonal();
    let min_extent = config.min_extent_fraction * diag;

    let mut regions: Vec<SegmentedRegion> = Vec::new();
    let mut candidates: Vec<(f64, OrientedBox)> = Vec::new();
    for cloud in &clouds {
        if cloud.cloud.len() < 2 {
            continue;
        }
        let spacing = median_spacing(cloud.cloud.points());
        let params = SegmentParams {
            angle_threshold_deg: config.angle_threshold_deg,
            spacing_threshold: config.spacing_factor * spacing,
            min_region_size: config.min_region_size,
        };
        let base = regions.len();
        let mut local = segment_regions(cloud, &params);
        for r in local.iter_mut() {
            r.id += base;
        }
        for (a, b) in candidate_region_pairs(&local, cloud, config.proximity_factor * spacing) {
            let (ra, rb) = (&local[a - base], &local[b - base]);
            if let Ok(bx) = fit_box(ra, rb, cloud, config.extent_padding_factor * spacing, min_extent) {
                candidates.push((ra.area + rb.area, bx));
            }
        }
        regions.extend(local);
    }

    let mut order: Vec<usize> = (0..candidates.len()).collect();
    order.sort_by(|&a, &b| candidates[b].0.total_cmp(&candidates[a].0).then(a.cmp(&b)));
    let mut kept: Vec<OrientedBox> = Vec::new();
    for i in order {
        let bx = &candidates[i].1;
        if kept.iter().all(|k| cuboid_iou(k, bx, config.iou_resolution) <= config.dedup_threshold) {
            kept.push(bx.clone());
        }
    }
    Ok(ProposalSet { boxes: kept, regions, clouds })
}
